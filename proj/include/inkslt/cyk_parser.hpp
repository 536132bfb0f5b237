#pragma once

#include <map>
#include <string>
#include <vector>

#include "inkslt/relation_scorer.hpp"
#include "inkslt/relations.hpp"
#include "inkslt/symbol_graph.hpp"

namespace inkslt {

struct GrammarProduction {
  std::string lhs;
  std::string rhs_left;
  std::string rhs_right;
  Relation relation = Relation::Right;
  double prior = 1.0;  // in (0, 1]
};

struct Grammar {
  std::vector<GrammarProduction> productions;
  std::map<std::string, std::string> terminals;  // symbol class -> nonterminal; "*" wildcard
  std::string start;

  // Nonterminal for a symbol class, honoring the wildcard; nullptr if none.
  const std::string* terminal_nt(const std::string& symbol_class) const;
};

// Text format: `start NT`, `term <class> -> NT`, `LHS -> A B : REL : prior`.
// `#` starts a comment.
Grammar load_grammar(const std::string& bytes);
Grammar load_grammar_file(const std::string& path);

// The permissive grammar: EXP -> EXP EXP for each of the six relations with
// uniform priors, every symbol class terminalized to EXP.
const Grammar& default_grammar();

// Which child's head the combined item inherits.
enum class HeadRule { LeftChild, RightChild };

// One admitted combination event; proposed_edges dedups these into E_CYK.
struct EdgeProposal {
  int src_idx = 0;
  int dst_idx = 0;
  Relation relation = Relation::Right;
  double item_score = 0.0;  // log-probability of the chart item that proposed it
  RelDist rel_dist{};
  double confidence = 0.0;
};

struct CykResult {
  std::vector<EdgeProposal> proposals;
  bool full_parse = false;  // start nonterminal covers the whole span
};

// Chart parse over contiguous writing-order spans. Combining items L and R
// queries the scorer on (node[L.head], node[R.head]); a combination is
// admitted only if the scorer's mass on the production's relation exceeds
// theta. All admitted combinations contribute proposals, not only the Viterbi
// tree. An uncovered top span is flagged, never fatal.
CykResult cyk_parse(const InkExpression& expr, const std::vector<SymbolNode>& nodes,
                    const Grammar& grammar, const RelationScorer& scorer, double theta = 0.05,
                    HeadRule head_rule = HeadRule::LeftChild);

// Deduplicated union keyed by (src,dst): the rel_dist of the highest-scoring
// proposing item wins. Result is sorted by (src_idx, dst_idx); source_tag CYK.
std::vector<CandidateEdge> proposed_edges(const CykResult& chart,
                                          const std::vector<SymbolNode>& nodes);

}  // namespace inkslt
