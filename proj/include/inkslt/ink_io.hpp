#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "inkslt/geom.hpp"
#include "inkslt/relations.hpp"
#include "inkslt/slt_tree.hpp"

namespace inkslt {

struct Stroke {
  int id = 0;
  std::vector<Point> points;  // pen-down trajectory, at least 1 point
};

// Per-point BLSTM-style input features: writing direction (sine/cosine),
// normalized distance to the previous point, and the pen-down transition bit.
struct PointFeature {
  double sin_dir = 0.0;
  double cos_dir = 1.0;
  double norm_dist = 0.0;
  int pen_state = 0;  // 1 on the first point of each stroke
};

struct SymbolAnnotation {
  std::string symbol_id;
  std::string label;
  std::set<int> stroke_ids;
};

struct GroundTruthGraph {
  std::vector<std::pair<std::string, std::string>> symbols;       // (symbol_id, label)
  std::vector<std::tuple<std::string, std::string, Relation>> relations;  // parent, child, rel
};

struct InkExpression {
  std::string id;
  std::vector<Stroke> strokes;  // writing order = file order
  std::vector<SymbolAnnotation> annotations;
  std::optional<GroundTruthGraph> ground_truth;
};

// --- InkML / LG parsing ------------------------------------------------------

// Parses CROHME-style InkML: trace elements in file order become strokes,
// trace groups with truth annotations become symbol annotations. Channels
// beyond x,y (time, pressure) are discarded.
InkExpression parse_inkml(const std::string& bytes);

// CROHME label-graph text: `O, id, label, weight, strokeId...` object lines and
// `R, parent, child, relation, weight` relation lines (`EO` accepted as a
// synonym of `R`); `#` starts a comment. Weights are ignored on read.
GroundTruthGraph parse_lg(const std::string& bytes);

// Deterministic LG encoding of a tree: sorted O-lines then sorted R-lines,
// weights written as 1.0. parse_lg(write_lg(t)) reproduces the symbols and
// relations of t exactly.
std::string write_lg(const SltTree& tree);

// --- Preprocessing -----------------------------------------------------------

// Ramer-Douglas-Peucker simplification; endpoints always retained, and every
// removed point lies within perpendicular distance epsilon of the output.
Stroke resample_ramer(const Stroke& stroke, double epsilon);

// Uniform scale so the ink bounding-box height equals target_height (falls
// back to width for horizontal-only ink), then translate min corner to (0,0).
InkExpression normalize(const InkExpression& expr, double target_height = 100.0);

// One feature per point over the concatenated stroke sequence. Direction and
// distance come from the previous point in the sequence (crossing stroke
// boundaries); the very first point gets the neutral direction (sin 0, cos 1).
// Distances are divided by the normalization scale (the target height used by
// normalize).
std::vector<PointFeature> extract_point_features(const InkExpression& expr, double scale = 100.0);

// Bounding box over all ink points.
BBox ink_bbox(const InkExpression& expr);

}  // namespace inkslt
