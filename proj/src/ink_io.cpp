#include "inkslt/ink_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <sstream>

#include "inkslt/errors.hpp"

namespace inkslt {

namespace {

// --- Minimal XML reader ------------------------------------------------------
// Covers the InkML subset used by CROHME files: elements, attributes, text
// content, comments, prolog and standard entities. Not a general XML parser.

struct XmlNode {
  std::string name;
  std::map<std::string, std::string> attrs;
  std::string text;  // concatenated direct text content
  std::vector<XmlNode> children;

  const XmlNode* child(const std::string& n) const {
    for (const XmlNode& c : children)
      if (c.name == n) return &c;
    return nullptr;
  }
};

class XmlReader {
 public:
  explicit XmlReader(std::string_view src) : s_(src) {}

  XmlNode parse() {
    skip_misc();
    if (eof() || s_[pos_] != '<') throw malformed_xml("expected root element");
    XmlNode root = parse_element();
    skip_misc();
    if (!eof()) throw malformed_xml("junk after root element");
    return root;
  }

 private:
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  void skip_ws() {
    while (!eof() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  void skip_misc() {  // whitespace, prolog, comments, doctype
    for (;;) {
      skip_ws();
      if (pos_ + 1 < s_.size() && s_[pos_] == '<' &&
          (s_[pos_ + 1] == '?' || s_[pos_ + 1] == '!')) {
        if (starts_with("<!--")) {
          const size_t end = s_.find("-->", pos_ + 4);
          if (end == std::string_view::npos) throw malformed_xml("unterminated comment");
          pos_ = end + 3;
        } else {
          const size_t end = s_.find('>', pos_);
          if (end == std::string_view::npos) throw malformed_xml("unterminated declaration");
          pos_ = end + 1;
        }
        continue;
      }
      return;
    }
  }

  bool starts_with(std::string_view p) const { return s_.substr(pos_, p.size()) == p; }

  std::string parse_name() {
    const size_t start = pos_;
    while (!eof()) {
      const char c = s_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '>' || c == '/' || c == '=') break;
      ++pos_;
    }
    if (pos_ == start) throw malformed_xml("empty name");
    return std::string(s_.substr(start, pos_ - start));
  }

  std::string decode_entities(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const size_t semi = raw.find(';', i);
      if (semi == std::string_view::npos) throw malformed_xml("unterminated entity");
      const std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "lt") out.push_back('<');
      else if (ent == "gt") out.push_back('>');
      else if (ent == "amp") out.push_back('&');
      else if (ent == "quot") out.push_back('"');
      else if (ent == "apos") out.push_back('\'');
      else throw malformed_xml("unknown entity: " + std::string(ent));
      i = semi;
    }
    return out;
  }

  XmlNode parse_element() {
    if (eof() || s_[pos_] != '<') throw malformed_xml("expected '<'");
    ++pos_;
    XmlNode node;
    node.name = parse_name();
    for (;;) {
      skip_ws();
      if (eof()) throw malformed_xml("unterminated tag: " + node.name);
      if (peek() == '/') {
        ++pos_;
        if (eof() || peek() != '>') throw malformed_xml("malformed self-closing tag");
        ++pos_;
        return node;  // <name ... />
      }
      if (peek() == '>') {
        ++pos_;
        break;
      }
      const std::string key = parse_name();
      skip_ws();
      if (eof() || peek() != '=') throw malformed_xml("attribute without value: " + key);
      ++pos_;
      skip_ws();
      if (eof() || (peek() != '"' && peek() != '\'')) throw malformed_xml("unquoted attribute");
      const char quote = peek();
      ++pos_;
      const size_t end = s_.find(quote, pos_);
      if (end == std::string_view::npos) throw malformed_xml("unterminated attribute value");
      node.attrs[key] = decode_entities(s_.substr(pos_, end - pos_));
      pos_ = end + 1;
    }
    // Content until the matching close tag.
    for (;;) {
      if (eof()) throw malformed_xml("missing close tag: " + node.name);
      if (peek() == '<') {
        if (starts_with("<!--")) {
          const size_t end = s_.find("-->", pos_ + 4);
          if (end == std::string_view::npos) throw malformed_xml("unterminated comment");
          pos_ = end + 3;
          continue;
        }
        if (starts_with("</")) {
          pos_ += 2;
          const std::string close = parse_name();
          skip_ws();
          if (eof() || peek() != '>') throw malformed_xml("malformed close tag");
          ++pos_;
          if (close != node.name)
            throw malformed_xml("mismatched close tag: " + close + " for " + node.name);
          return node;
        }
        node.children.push_back(parse_element());
      } else {
        const size_t end = s_.find('<', pos_);
        if (end == std::string_view::npos) throw malformed_xml("missing close tag: " + node.name);
        node.text += decode_entities(s_.substr(pos_, end - pos_));
        pos_ = end;
      }
    }
  }

  std::string_view s_;
  size_t pos_ = 0;
};

std::string strip_ns(const std::string& name) {
  const size_t colon = name.rfind(':');
  return colon == std::string::npos ? name : name.substr(colon + 1);
}

std::string trim(const std::string& s) {
  size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<Point> parse_trace_points(const std::string& text) {
  std::vector<Point> pts;
  std::stringstream ss(text);
  std::string chunk;
  while (std::getline(ss, chunk, ',')) {
    const std::string t = trim(chunk);
    if (t.empty()) continue;
    const char* p = t.c_str();
    char* end = nullptr;
    const double x = std::strtod(p, &end);
    if (end == p) throw malformed_xml("bad coordinate in trace: " + t);
    p = end;
    const double y = std::strtod(p, &end);
    if (end == p) throw malformed_xml("trace point with a single coordinate: " + t);
    if (!std::isfinite(x) || !std::isfinite(y)) throw malformed_xml("non-finite coordinate");
    pts.push_back({x, y});  // further channels (time, pressure) discarded
  }
  return pts;
}

}  // namespace

InkExpression parse_inkml(const std::string& bytes) {
  XmlReader reader(bytes);
  const XmlNode root = reader.parse();

  InkExpression expr;
  std::map<std::string, int> trace_ids;  // raw id attribute -> stroke id

  // Preorder node list in document order.
  std::vector<const XmlNode*> ordered;
  {
    std::vector<std::pair<const XmlNode*, size_t>> walk{{&root, 0}};
    while (!walk.empty()) {
      auto& [node, idx] = walk.back();
      if (idx == 0) ordered.push_back(node);
      if (idx < node->children.size()) {
        const XmlNode* c = &node->children[idx++];
        walk.push_back({c, 0});
      } else {
        walk.pop_back();
      }
    }
  }

  // Pass 1: traces, in file order.
  for (const XmlNode* node : ordered) {
    if (strip_ns(node->name) != "trace") continue;
    Stroke s;
    s.id = static_cast<int>(expr.strokes.size());
    s.points = parse_trace_points(node->text);
    if (s.points.empty()) throw malformed_xml("trace with no points");
    std::string raw;
    if (auto it = node->attrs.find("id"); it != node->attrs.end()) raw = it->second;
    else if (auto it2 = node->attrs.find("xml:id"); it2 != node->attrs.end()) raw = it2->second;
    else raw = std::to_string(s.id);
    trace_ids[raw] = s.id;
    expr.strokes.push_back(std::move(s));
  }
  if (expr.strokes.empty()) throw empty_ink("no traces in InkML input");

  // Pass 2: expression id and symbol annotations. Symbol-level groups are the
  // ones that directly hold traceView references.
  for (const XmlNode& c : root.children) {
    if (strip_ns(c.name) == "annotation") {
      auto it = c.attrs.find("type");
      if (it != c.attrs.end() && it->second == "UI") expr.id = trim(c.text);
    }
  }
  int anon_counter = 0;
  for (const XmlNode* node : ordered) {
    if (strip_ns(node->name) != "traceGroup") continue;

    SymbolAnnotation ann;
    for (const XmlNode& c : node->children) {
      const std::string name = strip_ns(c.name);
      if (name == "traceView") {
        auto it = c.attrs.find("traceDataRef");
        if (it == c.attrs.end()) throw malformed_xml("traceView without traceDataRef");
        auto tid = trace_ids.find(it->second);
        if (tid == trace_ids.end())
          throw dangling_trace_reference("traceView references unknown trace: " + it->second);
        ann.stroke_ids.insert(tid->second);
      } else if (name == "annotation") {
        auto it = c.attrs.find("type");
        if (it != c.attrs.end() && it->second == "truth") ann.label = trim(c.text);
      } else if (name == "annotationXML") {
        auto it = c.attrs.find("href");
        if (it != c.attrs.end()) ann.symbol_id = it->second;
      }
    }
    if (ann.stroke_ids.empty()) continue;  // structural group, not a symbol
    if (ann.symbol_id.empty()) {
      auto it = node->attrs.find("xml:id");
      ann.symbol_id = it != node->attrs.end() ? it->second : "sym" + std::to_string(anon_counter);
      ++anon_counter;
    }
    expr.annotations.push_back(std::move(ann));
  }
  return expr;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  return out;
}

}  // namespace

GroundTruthGraph parse_lg(const std::string& bytes) {
  GroundTruthGraph g;
  std::map<std::string, bool> known;
  std::map<std::string, std::string> parent_of;
  std::stringstream ss(bytes);
  std::string line;
  std::vector<std::tuple<std::string, std::string, std::string>> raw_relations;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::vector<std::string> f = split_csv_line(stripped);
    if (f[0] == "O") {
      if (f.size() < 3) throw unknown_line_tag("short O line: " + stripped);
      g.symbols.emplace_back(f[1], f[2]);
      known[f[1]] = true;
      // f[3] is the weight, f[4..] stroke ids; both ignored.
    } else if (f[0] == "R" || f[0] == "EO") {
      if (f.size() < 4) throw unknown_line_tag("short relation line: " + stripped);
      raw_relations.emplace_back(f[1], f[2], f[3]);
    } else {
      throw unknown_line_tag("unknown line tag: " + f[0]);
    }
  }
  for (const auto& [parent, child, rel] : raw_relations) {
    if (!known.count(parent) || !known.count(child))
      throw relation_to_unknown_symbol("relation endpoint not declared: " + parent + " -> " +
                                       child);
    if (parent_of.count(child)) throw multiple_parents("symbol has two parents: " + child);
    parent_of[child] = parent;
    g.relations.emplace_back(parent, child, relation_from_string(rel));
  }
  return g;
}

std::string write_lg(const SltTree& tree) {
  std::vector<std::pair<std::string, std::string>> nodes = tree.nodes;
  std::sort(nodes.begin(), nodes.end());
  std::vector<SltEdge> edges = tree.edges;
  std::sort(edges.begin(), edges.end(), [](const SltEdge& a, const SltEdge& b) {
    return std::tie(a.parent, a.child) < std::tie(b.parent, b.child);
  });
  std::string out;
  for (const auto& [id, label] : nodes) out += "O, " + id + ", " + label + ", 1.0\n";
  for (const SltEdge& e : edges)
    out += "R, " + e.parent + ", " + e.child + ", " + std::string(to_string(e.relation)) +
           ", 1.0\n";
  return out;
}

namespace {

void rdp_recurse(const std::vector<Point>& pts, size_t lo, size_t hi, double epsilon,
                 std::vector<bool>& keep) {
  if (hi <= lo + 1) return;
  double max_d = -1.0;
  size_t max_i = lo;
  for (size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > max_d) {
      max_d = d;
      max_i = i;
    }
  }
  if (max_d > epsilon) {
    keep[max_i] = true;
    rdp_recurse(pts, lo, max_i, epsilon, keep);
    rdp_recurse(pts, max_i, hi, epsilon, keep);
  }
}

}  // namespace

Stroke resample_ramer(const Stroke& stroke, double epsilon) {
  if (stroke.points.size() <= 2) return stroke;
  std::vector<bool> keep(stroke.points.size(), false);
  keep.front() = keep.back() = true;
  rdp_recurse(stroke.points, 0, stroke.points.size() - 1, epsilon, keep);
  Stroke out;
  out.id = stroke.id;
  for (size_t i = 0; i < stroke.points.size(); ++i)
    if (keep[i]) out.points.push_back(stroke.points[i]);
  return out;
}

BBox ink_bbox(const InkExpression& expr) {
  BBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
         std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()};
  for (const Stroke& s : expr.strokes)
    for (const Point& p : s.points) b.expand(p);
  return b;
}

InkExpression normalize(const InkExpression& expr, double target_height) {
  const BBox b = ink_bbox(expr);
  double scale = 1.0;
  if (b.height() > 0.0) {
    scale = target_height / b.height();
  } else if (b.width() > 0.0) {
    scale = target_height / b.width();  // horizontal-only ink
  }
  InkExpression out = expr;
  for (Stroke& s : out.strokes)
    for (Point& p : s.points) p = {(p.x - b.min_x) * scale, (p.y - b.min_y) * scale};
  return out;
}

std::vector<PointFeature> extract_point_features(const InkExpression& expr, double scale) {
  std::vector<PointFeature> out;
  bool have_prev = false;
  Point prev{0.0, 0.0};
  for (const Stroke& s : expr.strokes) {
    for (size_t i = 0; i < s.points.size(); ++i) {
      PointFeature f;
      f.pen_state = (i == 0) ? 1 : 0;
      if (have_prev) {
        const double dx = s.points[i].x - prev.x;
        const double dy = s.points[i].y - prev.y;
        const double d = std::hypot(dx, dy);
        if (d > 0.0) {
          f.sin_dir = dy / d;
          f.cos_dir = dx / d;
        }
        f.norm_dist = d / scale;
      }
      out.push_back(f);
      prev = s.points[i];
      have_prev = true;
    }
  }
  return out;
}

}  // namespace inkslt
