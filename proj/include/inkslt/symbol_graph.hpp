#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "inkslt/geom.hpp"
#include "inkslt/ink_io.hpp"
#include "inkslt/relations.hpp"
#include "inkslt/slt_tree.hpp"

namespace inkslt {

struct SymbolNode {
  std::string symbol_id;
  std::map<std::string, double> label_dist;  // sums to 1
  std::string top_label;                     // argmax of label_dist
  std::set<int> stroke_ids;
  BBox bbox;
  std::vector<Point> hull;  // convex hull of the symbol's ink points
};

enum class EdgeSource { CYK, LOS, Both };

const char* to_string(EdgeSource s);
EdgeSource edge_source_from_string(const std::string& s);

struct CandidateEdge {
  std::string src;
  std::string dst;
  RelDist rel_dist{};         // sums to 1
  double confidence = 0.0;    // max of rel_dist
  EdgeSource source_tag = EdgeSource::CYK;
};

struct PrimitiveGraph {
  std::string expr_id;
  std::vector<SymbolNode> nodes;  // writing order
  std::vector<CandidateEdge> edges;
};

using EdgePair = std::pair<std::string, std::string>;  // ordered (src, dst)

// One SymbolNode per annotation, sorted by writing order (smallest member
// stroke id). label_dist is one-hot on the annotation label.
std::vector<SymbolNode> build_symbol_nodes(const InkExpression& expr);

// Line-of-sight edge proposal: (a,b) is kept iff part of the angular interval
// subtended by b's hull, seen from a's bbox center, survives subtraction of
// the intervals blocked by strictly closer hulls. Directional; both directions
// are computed independently.
std::set<EdgePair> build_los_edges(const std::vector<SymbolNode>& nodes);

// Exact set intersection of ordered pairs.
std::set<EdgePair> intersect_edges(const std::set<EdgePair>& e_cyk,
                                   const std::set<EdgePair>& e_los);

// Recall of ground-truth edges in the primitive graph, in percent. Compares
// ordered pairs only (relation labels are judged downstream). 100 when the
// ground truth has no edges.
double coverage(const PrimitiveGraph& primitive, const GroundTruthGraph& gt);

// Excess candidate edges beyond ground truth, in percent:
// (|edges| / |gt edges| - 1) * 100. Errors when the ground truth has no edges.
double redundancy(const PrimitiveGraph& primitive, const GroundTruthGraph& gt);

// Deterministic Graphviz DOT text.
std::string to_dot(const PrimitiveGraph& graph);
std::string to_dot(const SltTree& tree);

// JSON (de)serialization of primitive graphs, carrying the ground truth when
// present so downstream stages can train and evaluate.
std::string graph_to_json(const PrimitiveGraph& graph,
                          const GroundTruthGraph* gt = nullptr);
PrimitiveGraph graph_from_json(const std::string& bytes, GroundTruthGraph* gt_out = nullptr);

}  // namespace inkslt
