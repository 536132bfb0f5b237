#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>

#include "inkslt/ink_io.hpp"
#include "inkslt/relations.hpp"
#include "inkslt/rng.hpp"
#include "inkslt/symbol_graph.hpp"

namespace inkslt {

struct RelationScore {
  RelDist rel_dist{};
  double confidence = 0.0;  // probability mass of the argmax relation
};

enum class ScorerKind { Geometric, FileBacked, NoisyOracle };

ScorerKind scorer_kind_from_string(const std::string& s);
const char* to_string(ScorerKind k);

// Thresholds of the geometric fallback rules, expressed relative to the
// source symbol's bbox.
struct GeometricParams {
  double sup_vertical = 0.25;     // min |center dy| as a fraction of a's height
  double min_overlap = 0.5;       // horizontal overlap vs the narrower box
  double right_margin = 0.1;      // Sup/Sub x gate, fraction of a's width
  double softmax_temperature = 0.1;
  std::set<std::string> container_labels = {"\\sqrt", "\\frac", "-"};
};

struct ScorerConfig {
  ScorerKind kind = ScorerKind::Geometric;
  double noise_rate = 0.0;    // NoisyOracle only
  std::string score_file;     // FileBacked only
  std::uint64_t seed = 0;
  GeometricParams geometric;
};

// Pairwise spatial-relation classification contract. Scores are produced only
// for writing-order pairs: a's smallest stroke id must precede b's.
class RelationScorer {
 public:
  virtual ~RelationScorer() = default;
  virtual RelationScore score_pair(const SymbolNode& a, const SymbolNode& b,
                                   const InkExpression& ctx) const = 0;
};

std::unique_ptr<RelationScorer> make_scorer(const ScorerConfig& config);

// Deterministic rules on normalized bbox geometry; see GeometricParams. The
// fired rule takes 0.7 of the mass, the rest is spread by a softmax over the
// per-rule geometric margins so confidence reflects ambiguity.
RelationScore geometric_score(const SymbolNode& a, const SymbolNode& b,
                              const GeometricParams& params = {});

// Score table keyed by (expr_id, src_symbol, dst_symbol).
using ScoreTable = std::map<std::tuple<std::string, std::string, std::string>, RelDist>;

// CSV with header `expr_id,src_symbol,dst_symbol,Right,Sub,Sup,Above,Below,Inside`.
// Row sums within 1e-3 of 1 are renormalized; anything else is rejected.
ScoreTable load_score_table(const std::string& csv_bytes);
ScoreTable load_score_file(const std::string& path);

// Ground-truth pairs yield the true relation one-hot with probability
// 1 - noise_rate, otherwise a uniformly chosen wrong relation one-hot.
// Non-ground-truth pairs fall back to the geometric score.
RelationScore noisy_oracle_score(const SymbolNode& a, const SymbolNode& b,
                                 const GroundTruthGraph& gt, double noise_rate, Rng& rng,
                                 const GeometricParams& params = {});

}  // namespace inkslt
