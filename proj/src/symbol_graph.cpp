#include "inkslt/symbol_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "inkslt/errors.hpp"

namespace inkslt {

const char* to_string(EdgeSource s) {
  switch (s) {
    case EdgeSource::CYK: return "CYK";
    case EdgeSource::LOS: return "LOS";
    case EdgeSource::Both: return "Both";
  }
  return "?";
}

EdgeSource edge_source_from_string(const std::string& s) {
  if (s == "CYK") return EdgeSource::CYK;
  if (s == "LOS") return EdgeSource::LOS;
  if (s == "Both") return EdgeSource::Both;
  throw data_error("unknown edge source tag: " + s);
}

std::vector<SymbolNode> build_symbol_nodes(const InkExpression& expr) {
  std::vector<SymbolNode> nodes;
  for (const SymbolAnnotation& ann : expr.annotations) {
    SymbolNode n;
    n.symbol_id = ann.symbol_id;
    n.label_dist[ann.label] = 1.0;
    n.top_label = ann.label;
    n.stroke_ids = ann.stroke_ids;
    std::vector<Point> pts;
    for (const Stroke& s : expr.strokes)
      if (ann.stroke_ids.count(s.id))
        pts.insert(pts.end(), s.points.begin(), s.points.end());
    if (pts.empty()) throw data_error("annotation with no ink: " + ann.symbol_id);
    n.bbox = bbox_of(pts);
    n.hull = convex_hull(pts);
    nodes.push_back(std::move(n));
  }
  std::sort(nodes.begin(), nodes.end(), [](const SymbolNode& a, const SymbolNode& b) {
    return *a.stroke_ids.begin() < *b.stroke_ids.begin();
  });
  return nodes;
}

namespace {

constexpr double kTwoPi = 6.283185307179586;

double norm_angle(double a) {  // to [0, 2*pi)
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

// Minimal arc (start, width) covering the directions from eye to hull
// vertices. Valid for an eye outside the hull (width < pi).
std::pair<double, double> subtended_arc(const Point& eye, const std::vector<Point>& hull) {
  std::vector<double> angles;
  angles.reserve(hull.size());
  for (const Point& v : hull) angles.push_back(norm_angle(std::atan2(v.y - eye.y, v.x - eye.x)));
  if (angles.size() == 1) return {angles[0], 0.0};
  std::sort(angles.begin(), angles.end());
  double max_gap = kTwoPi - angles.back() + angles.front();
  size_t gap_end = 0;
  for (size_t i = 1; i < angles.size(); ++i) {
    const double gap = angles[i] - angles[i - 1];
    if (gap > max_gap) {
      max_gap = gap;
      gap_end = i;
    }
  }
  return {angles[gap_end], kTwoPi - max_gap};
}

struct IntervalSet {  // disjoint sorted [lo,hi] pieces on a line segment
  std::vector<std::pair<double, double>> pieces;

  void subtract(double lo, double hi) {
    std::vector<std::pair<double, double>> out;
    for (const auto& [a, b] : pieces) {
      if (hi <= a || lo >= b) {
        out.push_back({a, b});
        continue;
      }
      if (lo > a) out.push_back({a, lo});
      if (hi < b) out.push_back({hi, b});
    }
    pieces = std::move(out);
  }

  double total() const {
    double s = 0.0;
    for (const auto& [a, b] : pieces) s += b - a;
    return s;
  }
};

// Occluder arcs as local coordinates relative to the target arc start; an arc
// may wrap and split into two line pieces.
std::vector<std::pair<double, double>> local_pieces(double base, double start, double width,
                                                    double clip) {
  std::vector<std::pair<double, double>> out;
  const double o = norm_angle(start - base);
  if (o + width <= kTwoPi) {
    out.push_back({o, o + width});
  } else {
    out.push_back({o, kTwoPi});
    out.push_back({0.0, o + width - kTwoPi});
  }
  std::vector<std::pair<double, double>> clipped;
  for (auto& [lo, hi] : out) {
    lo = std::max(lo, 0.0);
    hi = std::min(hi, clip);
    if (hi > lo) clipped.push_back({lo, hi});
  }
  return clipped;
}

class LosSweep {
 public:
  LosSweep(const std::vector<SymbolNode>& nodes, double scene_scale)
      : nodes_(nodes), eps_t_(1e-9 * scene_scale), eps_hull_(1e-9 * scene_scale) {
    // Blocking hulls are shrunk slightly so shared boundaries do not block.
    shrunk_.reserve(nodes.size());
    for (const SymbolNode& n : nodes) shrunk_.push_back(shrink_hull(n.hull, 1e-6));
  }

  bool visible(size_t ai, size_t bi) const {
    const Point eye = nodes_[ai].bbox.center();
    const std::vector<Point>& target = nodes_[bi].hull;
    if (point_in_hull(eye, target, eps_hull_)) return true;

    const auto [start, width] = subtended_arc(eye, target);
    if (width < 1e-12) {  // point-like target: a single ray decides
      const Point dir{std::cos(start), std::sin(start)};
      return !ray_blocked(eye, dir, ai, bi, target);
    }

    IntervalSet residual;
    residual.pieces.push_back({0.0, width});
    for (size_t ci = 0; ci < nodes_.size(); ++ci) {
      if (ci == ai || ci == bi) continue;
      const std::vector<Point>& occ = shrunk_[ci];
      if (occ.empty()) continue;
      if (point_in_hull(eye, occ, eps_hull_)) return false;  // eye engulfed by occluder
      const auto [c_start, c_width] = subtended_arc(eye, occ);
      for (const auto& [lo, hi] : local_pieces(start, c_start, c_width, width)) {
        // Subdivide the overlap and subtract sub-pieces where the occluder is
        // strictly in front of the target along the representative ray.
        const int k = std::clamp(static_cast<int>(std::ceil((hi - lo) / 0.02)), 1, 16);
        for (int j = 0; j < k; ++j) {
          const double s0 = lo + (hi - lo) * j / k;
          const double s1 = lo + (hi - lo) * (j + 1) / k;
          const double theta = start + 0.5 * (s0 + s1);
          const Point dir{std::cos(theta), std::sin(theta)};
          double t_b = 0.0, t_c = 0.0;
          if (!ray_hull_entry(eye, dir, target, &t_b, eps_hull_)) continue;
          if (!ray_hull_entry(eye, dir, occ, &t_c, eps_hull_)) continue;
          if (t_c < t_b - eps_t_) residual.subtract(s0, s1);
        }
      }
      if (residual.total() <= 1e-9) return false;
    }
    return residual.total() > 1e-9;
  }

 private:
  bool ray_blocked(const Point& eye, const Point& dir, size_t ai, size_t bi,
                   const std::vector<Point>& target) const {
    double t_b = 0.0;
    if (!ray_hull_entry(eye, dir, target, &t_b, eps_hull_)) return false;
    for (size_t ci = 0; ci < nodes_.size(); ++ci) {
      if (ci == ai || ci == bi) continue;
      double t_c = 0.0;
      if (ray_hull_entry(eye, dir, shrunk_[ci], &t_c, eps_hull_) && t_c < t_b - eps_t_)
        return true;
    }
    return false;
  }

  const std::vector<SymbolNode>& nodes_;
  std::vector<std::vector<Point>> shrunk_;
  double eps_t_;
  double eps_hull_;
};

}  // namespace

std::set<EdgePair> build_los_edges(const std::vector<SymbolNode>& nodes) {
  std::set<EdgePair> out;
  if (nodes.size() <= 1) return out;

  BBox scene = nodes[0].bbox;
  for (const SymbolNode& n : nodes) scene.expand(n.bbox);
  const double diag = std::hypot(scene.width(), scene.height());
  if (diag <= 0.0) throw degenerate_geometry("all symbols collapse to a single point");

  LosSweep sweep(nodes, diag);
  for (size_t a = 0; a < nodes.size(); ++a)
    for (size_t b = 0; b < nodes.size(); ++b)
      if (a != b && sweep.visible(a, b)) out.insert({nodes[a].symbol_id, nodes[b].symbol_id});
  return out;
}

std::set<EdgePair> intersect_edges(const std::set<EdgePair>& e_cyk,
                                   const std::set<EdgePair>& e_los) {
  std::set<EdgePair> out;
  std::set_intersection(e_cyk.begin(), e_cyk.end(), e_los.begin(), e_los.end(),
                        std::inserter(out, out.begin()));
  return out;
}

namespace {

void check_alignment(const PrimitiveGraph& primitive, const GroundTruthGraph& gt) {
  std::set<std::string> graph_ids, gt_ids;
  for (const SymbolNode& n : primitive.nodes) graph_ids.insert(n.symbol_id);
  for (const auto& [id, label] : gt.symbols) gt_ids.insert(id);
  if (graph_ids != gt_ids)
    throw misaligned_segmentation("primitive graph and ground truth disagree on symbol ids (" +
                                  primitive.expr_id + ")");
}

}  // namespace

double coverage(const PrimitiveGraph& primitive, const GroundTruthGraph& gt) {
  check_alignment(primitive, gt);
  if (gt.relations.empty()) return 100.0;
  std::set<EdgePair> present;
  for (const CandidateEdge& e : primitive.edges) present.insert({e.src, e.dst});
  size_t hit = 0;
  for (const auto& [parent, child, rel] : gt.relations)
    if (present.count({parent, child})) ++hit;
  return 100.0 * static_cast<double>(hit) / static_cast<double>(gt.relations.size());
}

double redundancy(const PrimitiveGraph& primitive, const GroundTruthGraph& gt) {
  check_alignment(primitive, gt);
  if (gt.relations.empty())
    throw empty_ground_truth("redundancy undefined for empty ground truth (" + primitive.expr_id +
                             ")");
  return (static_cast<double>(primitive.edges.size()) /
              static_cast<double>(gt.relations.size()) -
          1.0) *
         100.0;
}

namespace {

std::string format_conf(double c) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", c);
  return buf;
}

}  // namespace

std::string to_dot(const PrimitiveGraph& graph) {
  std::string out = "digraph primitive {\n";
  for (const SymbolNode& n : graph.nodes)
    out += "  \"" + n.symbol_id + "\" [label=\"" + n.symbol_id + ":" + n.top_label + "\"];\n";
  for (const CandidateEdge& e : graph.edges)
    out += "  \"" + e.src + "\" -> \"" + e.dst + "\" [label=\"" +
           std::string(to_string(argmax_relation(e.rel_dist))) + " " + format_conf(e.confidence) +
           "\"];\n";
  out += "}\n";
  return out;
}

std::string to_dot(const SltTree& tree) {
  std::string out = "digraph slt {\n";
  for (const auto& [id, label] : tree.nodes)
    out += "  \"" + id + "\" [label=\"" + id + ":" + label + "\"];\n";
  for (const SltEdge& e : tree.edges)
    out += "  \"" + e.parent + "\" -> \"" + e.child + "\" [label=\"" +
           std::string(to_string(e.relation)) + "\"];\n";
  out += "}\n";
  return out;
}

std::string graph_to_json(const PrimitiveGraph& graph, const GroundTruthGraph* gt) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["expr_id"] = graph.expr_id;
  j["nodes"] = nlohmann::json::array();
  for (const SymbolNode& n : graph.nodes) {
    nlohmann::json jn;
    jn["symbol_id"] = n.symbol_id;
    jn["top_label"] = n.top_label;
    jn["label_dist"] = n.label_dist;
    jn["stroke_ids"] = n.stroke_ids;
    jn["bbox"] = {n.bbox.min_x, n.bbox.min_y, n.bbox.max_x, n.bbox.max_y};
    nlohmann::json hull = nlohmann::json::array();
    for (const Point& p : n.hull) hull.push_back({p.x, p.y});
    jn["hull"] = hull;
    j["nodes"].push_back(std::move(jn));
  }
  j["edges"] = nlohmann::json::array();
  for (const CandidateEdge& e : graph.edges) {
    nlohmann::json je;
    je["src"] = e.src;
    je["dst"] = e.dst;
    je["rel_dist"] = e.rel_dist;
    je["confidence"] = e.confidence;
    je["source_tag"] = to_string(e.source_tag);
    j["edges"].push_back(std::move(je));
  }
  if (gt != nullptr) {
    nlohmann::json jg;
    jg["symbols"] = nlohmann::json::array();
    for (const auto& [id, label] : gt->symbols) jg["symbols"].push_back({id, label});
    jg["relations"] = nlohmann::json::array();
    for (const auto& [parent, child, rel] : gt->relations)
      jg["relations"].push_back({parent, child, to_string(rel)});
    j["gt"] = std::move(jg);
  }
  return j.dump(2) + "\n";
}

PrimitiveGraph graph_from_json(const std::string& bytes, GroundTruthGraph* gt_out) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("bad graph JSON: ") + e.what());
  }
  PrimitiveGraph g;
  g.expr_id = j.at("expr_id").get<std::string>();
  for (const auto& jn : j.at("nodes")) {
    SymbolNode n;
    n.symbol_id = jn.at("symbol_id").get<std::string>();
    n.top_label = jn.at("top_label").get<std::string>();
    n.label_dist = jn.at("label_dist").get<std::map<std::string, double>>();
    n.stroke_ids = jn.at("stroke_ids").get<std::set<int>>();
    const auto& bb = jn.at("bbox");
    n.bbox = {bb.at(0).get<double>(), bb.at(1).get<double>(), bb.at(2).get<double>(),
              bb.at(3).get<double>()};
    for (const auto& jp : jn.at("hull")) n.hull.push_back({jp.at(0), jp.at(1)});
    g.nodes.push_back(std::move(n));
  }
  for (const auto& je : j.at("edges")) {
    CandidateEdge e;
    e.src = je.at("src").get<std::string>();
    e.dst = je.at("dst").get<std::string>();
    e.rel_dist = je.at("rel_dist").get<RelDist>();
    e.confidence = je.at("confidence").get<double>();
    e.source_tag = edge_source_from_string(je.at("source_tag").get<std::string>());
    g.edges.push_back(std::move(e));
  }
  if (gt_out != nullptr && j.contains("gt")) {
    GroundTruthGraph gt;
    for (const auto& js : j["gt"].at("symbols"))
      gt.symbols.emplace_back(js.at(0).get<std::string>(), js.at(1).get<std::string>());
    for (const auto& jr : j["gt"].at("relations"))
      gt.relations.emplace_back(jr.at(0).get<std::string>(), jr.at(1).get<std::string>(),
                                relation_from_string(jr.at(2).get<std::string>()));
    *gt_out = std::move(gt);
  }
  return g;
}

}  // namespace inkslt
