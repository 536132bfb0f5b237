#include "inkslt/relations.hpp"

#include "inkslt/errors.hpp"

namespace inkslt {

const char* to_string(Relation r) {
  switch (r) {
    case Relation::Right: return "Right";
    case Relation::Sub: return "Sub";
    case Relation::Sup: return "Sup";
    case Relation::Above: return "Above";
    case Relation::Below: return "Below";
    case Relation::Inside: return "Inside";
  }
  return "?";
}

Relation relation_from_string(const std::string& s) {
  if (s == "Right") return Relation::Right;
  if (s == "Sub") return Relation::Sub;
  if (s == "Sup") return Relation::Sup;
  if (s == "Above") return Relation::Above;
  if (s == "Below") return Relation::Below;
  if (s == "Inside") return Relation::Inside;
  throw unknown_relation_error("unknown relation label: " + s);
}

}  // namespace inkslt
