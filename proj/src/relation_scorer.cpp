#include "inkslt/relation_scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "inkslt/errors.hpp"

namespace inkslt {

ScorerKind scorer_kind_from_string(const std::string& s) {
  if (s == "geometric") return ScorerKind::Geometric;
  if (s == "file") return ScorerKind::FileBacked;
  if (s == "oracle") return ScorerKind::NoisyOracle;
  throw data_error("unknown scorer kind: " + s + " (expected geometric|file|oracle)");
}

const char* to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::Geometric: return "geometric";
    case ScorerKind::FileBacked: return "file";
    case ScorerKind::NoisyOracle: return "oracle";
  }
  return "?";
}

namespace {

RelDist stable_softmax(const RelDist& logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  RelDist out{};
  double sum = 0.0;
  for (int i = 0; i < kNumRelations; ++i) {
    out[static_cast<size_t>(i)] = std::exp(logits[static_cast<size_t>(i)] - m);
    sum += out[static_cast<size_t>(i)];
  }
  for (double& v : out) v /= sum;
  return out;
}

RelationScore finish(Relation fired, const RelDist& margins, double temperature) {
  RelDist logits{};
  for (int i = 0; i < kNumRelations; ++i)
    logits[static_cast<size_t>(i)] = margins[static_cast<size_t>(i)] / temperature;
  const RelDist soft = stable_softmax(logits);
  RelationScore score;
  for (int i = 0; i < kNumRelations; ++i)
    score.rel_dist[static_cast<size_t>(i)] = 0.3 * soft[static_cast<size_t>(i)];
  score.rel_dist[static_cast<size_t>(fired)] += 0.7;
  score.confidence = *std::max_element(score.rel_dist.begin(), score.rel_dist.end());
  return score;
}

}  // namespace

RelationScore geometric_score(const SymbolNode& a, const SymbolNode& b,
                              const GeometricParams& params) {
  const Point ca = a.bbox.center();
  const Point cb = b.bbox.center();
  const double wa = a.bbox.width();
  const double ha = a.bbox.height();

  // Normalization scale; zero-area bboxes are treated as points.
  double scale = std::max(ha, wa);
  if (scale <= 0.0) scale = std::max(b.bbox.height(), b.bbox.width());
  if (scale <= 0.0) scale = std::max(dist(ca, cb), 1.0);

  const double dy_up = ca.y - cb.y;  // positive when b sits above a (y grows down)
  const double h_overlap = std::min(a.bbox.max_x, b.bbox.max_x) -
                           std::max(a.bbox.min_x, b.bbox.min_x);
  const double narrower = std::min(wa, b.bbox.width());
  double overlap_ratio = 0.0;
  if (narrower > 0.0) {
    overlap_ratio = std::max(h_overlap, 0.0) / narrower;
  } else {
    overlap_ratio = h_overlap >= 0.0 ? 1.0 : 0.0;  // point-wide boxes
  }

  const bool container = params.container_labels.count(a.top_label) > 0;
  const bool contained = a.bbox.contains(b.bbox);
  const double x_gate = cb.x - (a.bbox.max_x - params.right_margin * wa);

  // Rules, tested in order; the first hit fires.
  Relation fired = Relation::Right;
  if (contained && container) {
    fired = Relation::Inside;
  } else if (overlap_ratio >= params.min_overlap && cb.y < a.bbox.min_y) {
    fired = Relation::Above;
  } else if (overlap_ratio >= params.min_overlap && cb.y > a.bbox.max_y) {
    fired = Relation::Below;
  } else if (x_gate > 0.0 && dy_up > params.sup_vertical * ha) {
    fired = Relation::Sup;
  } else if (x_gate > 0.0 && -dy_up > params.sup_vertical * ha) {
    fired = Relation::Sub;
  }

  // Signed distances to each rule's firing boundary, in units of the scale.
  // These are purely geometric; the container label gate only affects firing.
  RelDist margins{};
  margins[static_cast<size_t>(Relation::Inside)] =
      std::min({b.bbox.min_x - a.bbox.min_x, a.bbox.max_x - b.bbox.max_x,
                b.bbox.min_y - a.bbox.min_y, a.bbox.max_y - b.bbox.max_y}) /
      scale;
  margins[static_cast<size_t>(Relation::Above)] =
      std::min(overlap_ratio - params.min_overlap, (a.bbox.min_y - cb.y) / scale);
  margins[static_cast<size_t>(Relation::Below)] =
      std::min(overlap_ratio - params.min_overlap, (cb.y - a.bbox.max_y) / scale);
  margins[static_cast<size_t>(Relation::Sup)] =
      std::min(x_gate / scale, (dy_up - params.sup_vertical * ha) / scale);
  margins[static_cast<size_t>(Relation::Sub)] =
      std::min(x_gate / scale, (-dy_up - params.sup_vertical * ha) / scale);
  margins[static_cast<size_t>(Relation::Right)] =
      std::min((cb.x - ca.x) / scale - 0.25, 0.25 - std::abs(dy_up) / scale);
  for (double& m : margins) m = std::clamp(m, -10.0, 10.0);

  return finish(fired, margins, params.softmax_temperature);
}

ScoreTable load_score_table(const std::string& csv_bytes) {
  static const char* kHeader[9] = {"expr_id", "src_symbol", "dst_symbol", "Right", "Sub",
                                   "Sup",     "Above",      "Below",      "Inside"};
  std::stringstream ss(csv_bytes);
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream fs(l);
    std::string field;
    while (std::getline(fs, field, ',')) {
      size_t b = field.find_first_not_of(" \t\r");
      size_t e = field.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
    }
    return out;
  };

  if (!std::getline(ss, line)) throw bad_header("empty score file");
  const std::vector<std::string> header = split(line);
  if (header.size() != 9) throw bad_header("score file header must have 9 columns");
  for (int i = 0; i < 9; ++i)
    if (header[static_cast<size_t>(i)] != kHeader[i])
      throw bad_header("unexpected score file column: " + header[static_cast<size_t>(i)]);

  ScoreTable table;
  size_t line_no = 1;
  while (std::getline(ss, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::vector<std::string> f = split(line);
    if (f.size() != 9)
      throw row_not_normalizable("score row " + std::to_string(line_no) + " has " +
                                 std::to_string(f.size()) + " fields");
    RelDist d{};
    double sum = 0.0;
    for (int i = 0; i < kNumRelations; ++i) {
      const double v = std::stod(f[static_cast<size_t>(3 + i)]);
      if (!(v >= 0.0) || !std::isfinite(v))
        throw row_not_normalizable("negative or non-finite probability at row " +
                                   std::to_string(line_no));
      d[static_cast<size_t>(i)] = v;
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-3)
      throw row_not_normalizable("score row " + std::to_string(line_no) + " sums to " +
                                 std::to_string(sum));
    for (double& v : d) v /= sum;
    table[{f[0], f[1], f[2]}] = d;
  }
  return table;
}

ScoreTable load_score_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open score file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_score_table(buf.str());
}

RelationScore noisy_oracle_score(const SymbolNode& a, const SymbolNode& b,
                                 const GroundTruthGraph& gt, double noise_rate, Rng& rng,
                                 const GeometricParams& params) {
  const Relation* truth = nullptr;
  Relation found{};
  for (const auto& [parent, child, rel] : gt.relations) {
    if (parent == a.symbol_id && child == b.symbol_id) {
      found = rel;
      truth = &found;
      break;
    }
  }
  if (truth == nullptr) return geometric_score(a, b, params);

  Relation out = *truth;
  if (rng.uniform() < noise_rate) {
    // Uniformly chosen wrong label.
    int pick = rng.uniform_int(0, kNumRelations - 2);
    if (pick >= static_cast<int>(*truth)) ++pick;
    out = static_cast<Relation>(pick);
  }
  RelationScore score;
  score.rel_dist[static_cast<size_t>(out)] = 1.0;
  score.confidence = 1.0;
  return score;
}

namespace {

void check_pair(const SymbolNode& a, const SymbolNode& b, const InkExpression& ctx) {
  if (a.stroke_ids.empty() || b.stroke_ids.empty())
    throw pair_not_in_expression("symbol without strokes");
  if (*a.stroke_ids.begin() >= *b.stroke_ids.begin())
    throw pair_not_in_expression("pair violates writing order: " + a.symbol_id + " -> " +
                                 b.symbol_id);
  bool have_a = false, have_b = false;
  for (const SymbolAnnotation& ann : ctx.annotations) {
    have_a = have_a || ann.symbol_id == a.symbol_id;
    have_b = have_b || ann.symbol_id == b.symbol_id;
  }
  if (!have_a || !have_b)
    throw pair_not_in_expression("pair not part of expression " + ctx.id + ": " + a.symbol_id +
                                 " -> " + b.symbol_id);
}

class GeometricScorer final : public RelationScorer {
 public:
  explicit GeometricScorer(GeometricParams params) : params_(std::move(params)) {}

  RelationScore score_pair(const SymbolNode& a, const SymbolNode& b,
                           const InkExpression& ctx) const override {
    check_pair(a, b, ctx);
    return geometric_score(a, b, params_);
  }

 private:
  GeometricParams params_;
};

class FileBackedScorer final : public RelationScorer {
 public:
  explicit FileBackedScorer(ScoreTable table) : table_(std::move(table)) {}

  RelationScore score_pair(const SymbolNode& a, const SymbolNode& b,
                           const InkExpression& ctx) const override {
    check_pair(a, b, ctx);
    const auto it = table_.find({ctx.id, a.symbol_id, b.symbol_id});
    if (it == table_.end())
      throw missing_score("no score row for (" + ctx.id + ", " + a.symbol_id + ", " +
                          b.symbol_id + ")");
    RelationScore score;
    score.rel_dist = it->second;
    score.confidence = *std::max_element(it->second.begin(), it->second.end());
    return score;
  }

 private:
  ScoreTable table_;
};

class NoisyOracleScorer final : public RelationScorer {
 public:
  NoisyOracleScorer(double noise_rate, std::uint64_t seed, GeometricParams params)
      : noise_rate_(noise_rate), seed_(seed), params_(std::move(params)) {}

  RelationScore score_pair(const SymbolNode& a, const SymbolNode& b,
                           const InkExpression& ctx) const override {
    check_pair(a, b, ctx);
    if (!ctx.ground_truth)
      throw data_error("noisy oracle scorer needs ground truth for expression " + ctx.id);
    // Per-pair stream so results are independent of call order.
    Rng rng(mix64(seed_ + hash64(ctx.id + "|" + a.symbol_id + "|" + b.symbol_id)));
    return noisy_oracle_score(a, b, *ctx.ground_truth, noise_rate_, rng, params_);
  }

 private:
  double noise_rate_;
  std::uint64_t seed_;
  GeometricParams params_;
};

}  // namespace

std::unique_ptr<RelationScorer> make_scorer(const ScorerConfig& config) {
  switch (config.kind) {
    case ScorerKind::Geometric:
      return std::make_unique<GeometricScorer>(config.geometric);
    case ScorerKind::FileBacked:
      return std::make_unique<FileBackedScorer>(load_score_file(config.score_file));
    case ScorerKind::NoisyOracle:
      return std::make_unique<NoisyOracleScorer>(config.noise_rate, config.seed,
                                                 config.geometric);
  }
  throw data_error("invalid scorer config");
}

}  // namespace inkslt
