#pragma once

#include <string>
#include <vector>

#include "inkslt/relations.hpp"

namespace inkslt {

struct SltEdge {
  std::string parent;
  std::string child;
  Relation relation = Relation::Right;
};

// Rooted tree of symbols with relation-labeled edges; the pipeline's output.
struct SltTree {
  std::vector<std::pair<std::string, std::string>> nodes;  // (symbol_id, label), writing order
  std::vector<SltEdge> edges;
  std::string root;
};

enum class SltViolation { Cycle, MultiParent, Disconnected, BadRoot };

const char* to_string(SltViolation v);

// Empty result iff the tree invariants hold: every non-root node has exactly
// one parent, the edge set is acyclic, all nodes reachable from root, and the
// root has no parent.
std::vector<SltViolation> validate_slt(const SltTree& tree);

}  // namespace inkslt
