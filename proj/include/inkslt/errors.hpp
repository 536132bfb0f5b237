#pragma once

#include <stdexcept>

namespace inkslt {

// Base classes map to CLI exit codes: data_error -> 2, numeric_error -> 3.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define INKSLT_DEFINE_ERROR(name, base) \
  struct name : base {                  \
    using base::base;                   \
  }

// ink_io
INKSLT_DEFINE_ERROR(malformed_xml, data_error);
INKSLT_DEFINE_ERROR(dangling_trace_reference, data_error);
INKSLT_DEFINE_ERROR(empty_ink, data_error);
INKSLT_DEFINE_ERROR(unknown_line_tag, data_error);
INKSLT_DEFINE_ERROR(relation_to_unknown_symbol, data_error);
INKSLT_DEFINE_ERROR(multiple_parents, data_error);

// symbol_graph
INKSLT_DEFINE_ERROR(degenerate_geometry, data_error);
INKSLT_DEFINE_ERROR(misaligned_segmentation, data_error);
INKSLT_DEFINE_ERROR(empty_ground_truth, data_error);

// relation_scorer
INKSLT_DEFINE_ERROR(pair_not_in_expression, data_error);
INKSLT_DEFINE_ERROR(missing_score, data_error);
INKSLT_DEFINE_ERROR(bad_header, data_error);
INKSLT_DEFINE_ERROR(row_not_normalizable, data_error);
INKSLT_DEFINE_ERROR(unknown_relation_error, data_error);

// cyk_parser
INKSLT_DEFINE_ERROR(grammar_syntax_error, data_error);
INKSLT_DEFINE_ERROR(grammar_validation_error, data_error);

// egat
INKSLT_DEFINE_ERROR(shape_mismatch, data_error);
INKSLT_DEFINE_ERROR(length_mismatch, data_error);
INKSLT_DEFINE_ERROR(empty_graph, data_error);
INKSLT_DEFINE_ERROR(non_finite_loss, numeric_error);

// eval_metrics
INKSLT_DEFINE_ERROR(key_mismatch, data_error);
INKSLT_DEFINE_ERROR(missing_expression, data_error);

#undef INKSLT_DEFINE_ERROR

}  // namespace inkslt
