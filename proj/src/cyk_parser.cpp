#include "inkslt/cyk_parser.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "inkslt/errors.hpp"

namespace inkslt {

const std::string* Grammar::terminal_nt(const std::string& symbol_class) const {
  if (auto it = terminals.find(symbol_class); it != terminals.end()) return &it->second;
  if (auto it = terminals.find("*"); it != terminals.end()) return &it->second;
  return nullptr;
}

namespace {

std::string trim(const std::string& s) {
  const size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

}  // namespace

Grammar load_grammar(const std::string& bytes) {
  Grammar g;
  std::stringstream ss(bytes);
  std::string line;
  size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto at = [&](const char* what) {
      return std::string(what) + " at line " + std::to_string(line_no) + ": " + line;
    };

    const std::vector<std::string> t = tokens(line);
    if (t[0] == "start") {
      if (t.size() != 2) throw grammar_syntax_error(at("malformed start line"));
      g.start = t[1];
      continue;
    }
    if (t[0] == "term") {
      if (t.size() != 4 || t[2] != "->") throw grammar_syntax_error(at("malformed term line"));
      if (g.terminals.count(t[1]))
        throw grammar_validation_error(at("symbol class terminalized twice"));
      g.terminals[t[1]] = t[3];
      continue;
    }
    // LHS -> A B : REL : prior
    if (t.size() != 8 || t[1] != "->" || t[4] != ":" || t[6] != ":")
      throw grammar_syntax_error(at("malformed production"));
    GrammarProduction p;
    p.lhs = t[0];
    p.rhs_left = t[2];
    p.rhs_right = t[3];
    p.relation = relation_from_string(t[5]);
    try {
      p.prior = std::stod(t[7]);
    } catch (const std::exception&) {
      throw grammar_syntax_error(at("bad prior"));
    }
    if (!(p.prior > 0.0) || p.prior > 1.0)
      throw grammar_validation_error(at("prior must be in (0,1]"));
    g.productions.push_back(std::move(p));
  }
  if (g.productions.empty()) throw grammar_validation_error("grammar has no productions");
  if (g.terminals.empty()) throw grammar_validation_error("grammar has no terminal mappings");
  if (g.start.empty()) g.start = g.productions.front().lhs;
  return g;
}

Grammar load_grammar_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open grammar file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_grammar(buf.str());
}

const Grammar& default_grammar() {
  static const Grammar g = load_grammar(
      "start EXP\n"
      "term * -> EXP\n"
      "EXP -> EXP EXP : Right : 0.16666666666666666\n"
      "EXP -> EXP EXP : Sub : 0.16666666666666666\n"
      "EXP -> EXP EXP : Sup : 0.16666666666666666\n"
      "EXP -> EXP EXP : Above : 0.16666666666666666\n"
      "EXP -> EXP EXP : Below : 0.16666666666666666\n"
      "EXP -> EXP EXP : Inside : 0.16666666666666666\n");
  return g;
}

namespace {

struct Item {
  double score = 0.0;  // log-probability
  int head = 0;
  std::vector<std::tuple<int, int, Relation>> edges_used;
};

}  // namespace

CykResult cyk_parse(const InkExpression& expr, const std::vector<SymbolNode>& nodes,
                    const Grammar& grammar, const RelationScorer& scorer, double theta,
                    HeadRule head_rule) {
  CykResult result;
  const int n = static_cast<int>(nodes.size());
  if (n == 0) return result;

  // cell(i,j) holds the best item per nonterminal over the span [i,j].
  const auto cell_index = [n](int i, int j) { return static_cast<size_t>(i * n + j); };
  std::vector<std::map<std::string, Item>> chart(static_cast<size_t>(n) * static_cast<size_t>(n));

  for (int i = 0; i < n; ++i) {
    const std::string* nt = grammar.terminal_nt(nodes[static_cast<size_t>(i)].top_label);
    if (nt != nullptr) chart[cell_index(i, i)][*nt] = Item{0.0, i, {}};
  }

  // Scorer results are memoized per ordered head pair within one parse.
  std::map<std::pair<int, int>, RelationScore> memo;
  const auto pair_score = [&](int src, int dst) -> const RelationScore& {
    const auto key = std::make_pair(src, dst);
    auto it = memo.find(key);
    if (it == memo.end())
      it = memo.emplace(key, scorer.score_pair(nodes[static_cast<size_t>(src)],
                                               nodes[static_cast<size_t>(dst)], expr))
               .first;
    return it->second;
  };

  for (int len = 2; len <= n; ++len) {
    for (int i = 0; i + len - 1 < n; ++i) {
      const int j = i + len - 1;
      auto& target = chart[cell_index(i, j)];
      for (int k = i; k < j; ++k) {
        const auto& left_cell = chart[cell_index(i, k)];
        const auto& right_cell = chart[cell_index(k + 1, j)];
        if (left_cell.empty() || right_cell.empty()) continue;
        for (const GrammarProduction& p : grammar.productions) {
          const auto lit = left_cell.find(p.rhs_left);
          if (lit == left_cell.end()) continue;
          const auto rit = right_cell.find(p.rhs_right);
          if (rit == right_cell.end()) continue;
          const Item& left = lit->second;
          const Item& right = rit->second;

          const RelationScore& sc = pair_score(left.head, right.head);
          const double mass = sc.rel_dist[static_cast<size_t>(p.relation)];
          if (!(mass > theta)) continue;

          const double score = left.score + right.score + std::log(p.prior) + std::log(mass);
          result.proposals.push_back(
              {left.head, right.head, p.relation, score, sc.rel_dist, sc.confidence});

          auto [it, inserted] = target.try_emplace(p.lhs);
          if (inserted || score > it->second.score) {
            Item item;
            item.score = score;
            item.head = head_rule == HeadRule::LeftChild ? left.head : right.head;
            item.edges_used = left.edges_used;
            item.edges_used.insert(item.edges_used.end(), right.edges_used.begin(),
                                   right.edges_used.end());
            item.edges_used.emplace_back(left.head, right.head, p.relation);
            it->second = std::move(item);
          }
        }
      }
    }
  }
  result.full_parse = chart[cell_index(0, n - 1)].count(grammar.start) > 0;
  return result;
}

std::vector<CandidateEdge> proposed_edges(const CykResult& chart,
                                          const std::vector<SymbolNode>& nodes) {
  std::map<std::pair<int, int>, const EdgeProposal*> best;
  for (const EdgeProposal& p : chart.proposals) {
    auto [it, inserted] = best.try_emplace({p.src_idx, p.dst_idx}, &p);
    if (!inserted && p.item_score > it->second->item_score) it->second = &p;
  }
  std::vector<CandidateEdge> out;
  out.reserve(best.size());
  for (const auto& [key, p] : best) {
    CandidateEdge e;
    e.src = nodes[static_cast<size_t>(p->src_idx)].symbol_id;
    e.dst = nodes[static_cast<size_t>(p->dst_idx)].symbol_id;
    e.rel_dist = p->rel_dist;
    e.confidence = p->confidence;
    e.source_tag = EdgeSource::CYK;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace inkslt
