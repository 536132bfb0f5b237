#include "inkslt/slt_tree.hpp"

#include <map>
#include <set>

namespace inkslt {

const char* to_string(SltViolation v) {
  switch (v) {
    case SltViolation::Cycle: return "Cycle";
    case SltViolation::MultiParent: return "MultiParent";
    case SltViolation::Disconnected: return "Disconnected";
    case SltViolation::BadRoot: return "BadRoot";
  }
  return "?";
}

std::vector<SltViolation> validate_slt(const SltTree& tree) {
  std::vector<SltViolation> out;
  std::set<std::string> ids;
  for (const auto& [id, label] : tree.nodes) ids.insert(id);

  bool bad_root = tree.nodes.empty() || !ids.count(tree.root);
  std::map<std::string, int> in_degree;
  std::map<std::string, std::vector<std::string>> children;
  bool multi_parent = false;
  for (const SltEdge& e : tree.edges) {
    if (!ids.count(e.parent) || !ids.count(e.child)) {
      bad_root = bad_root || e.child == tree.root;
      out.push_back(SltViolation::Disconnected);
      return out;  // endpoints outside the node set; nothing else is meaningful
    }
    children[e.parent].push_back(e.child);
    if (++in_degree[e.child] > 1) multi_parent = true;
    if (e.child == tree.root) bad_root = true;
  }
  if (bad_root) out.push_back(SltViolation::BadRoot);
  if (multi_parent) out.push_back(SltViolation::MultiParent);

  // Cycle: some edge chain revisits a node. Self-loops included.
  bool cycle = false;
  {
    std::map<std::string, int> state;  // 0 unvisited, 1 on stack, 2 done
    std::vector<std::pair<std::string, size_t>> stack;
    for (const auto& [id, label] : tree.nodes) {
      if (state[id] != 0) continue;
      stack.push_back({id, 0});
      state[id] = 1;
      while (!stack.empty()) {
        auto& [cur, idx] = stack.back();
        const auto& kids = children[cur];
        if (idx < kids.size()) {
          const std::string& next = kids[idx++];
          if (state[next] == 1) {
            cycle = true;
            break;
          }
          if (state[next] == 0) {
            state[next] = 1;
            stack.push_back({next, 0});
          }
        } else {
          state[cur] = 2;
          stack.pop_back();
        }
      }
      if (cycle) break;
    }
  }
  if (cycle) out.push_back(SltViolation::Cycle);

  // Connectivity from root (only meaningful with a valid root).
  if (!bad_root && !cycle) {
    std::set<std::string> seen{tree.root};
    std::vector<std::string> todo{tree.root};
    while (!todo.empty()) {
      const std::string cur = todo.back();
      todo.pop_back();
      for (const std::string& c : children[cur])
        if (seen.insert(c).second) todo.push_back(c);
    }
    if (seen.size() != ids.size()) out.push_back(SltViolation::Disconnected);
  }
  return out;
}

}  // namespace inkslt
