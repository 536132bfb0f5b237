#pragma once

#include <array>
#include <string>

namespace inkslt {

// The six CROHME spatial relation classes, in canonical order. Distributions
// over relations are stored as std::array<double, 6> indexed by this enum.
enum class Relation : int { Right = 0, Sub, Sup, Above, Below, Inside };

inline constexpr int kNumRelations = 6;
using RelDist = std::array<double, kNumRelations>;

const char* to_string(Relation r);
Relation relation_from_string(const std::string& s);  // throws unknown_relation_error

inline Relation argmax_relation(const RelDist& d) {
  int best = 0;
  for (int i = 1; i < kNumRelations; ++i)
    if (d[static_cast<size_t>(i)] > d[static_cast<size_t>(best)]) best = i;
  return static_cast<Relation>(best);
}

}  // namespace inkslt
