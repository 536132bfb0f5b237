#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "inkslt/matrix.hpp"
#include "inkslt/rng.hpp"
#include "inkslt/symbol_graph.hpp"

namespace inkslt {

enum class HeadMode { NodeEdgeFeature, EdgeFeature };

const char* to_string(HeadMode m);
HeadMode head_mode_from_string(const std::string& s);

struct EgatConfig {
  int node_in = 0;  // one-hot symbol classes incl. the UNK slot; set from the vocabulary
  int edge_in = kNumRelations;
  int node_hidden = 32;
  int edge_hidden = 32;
  int heads = 2;
  int layers = 4;
  int mlp_hidden = 64;
  HeadMode head_mode = HeadMode::NodeEdgeFeature;
  double dropout = 0.2;
  double leaky_slope = 0.2;
};

struct GraphBatch {
  int n = 0;            // node count
  Matrix node_feats;    // n x node_in, exact one-hots
  Matrix edge_feats;    // m x edge_in, relation one-hot scaled by confidence
  std::vector<std::pair<int, int>> edge_index;  // ordered (src, dst)
  std::vector<int> labels;                      // 1 = edge belongs to the gt SLT
  std::vector<std::pair<std::string, std::string>> edge_keys;  // (src,dst) symbol ids
};

// All trainable parameters live in one flat vector; views address the
// per-layer projections so the optimizer and finite differencing stay trivial.
class EgatModel {
 public:
  EgatModel() = default;
  EgatModel(EgatConfig cfg, std::vector<std::string> vocab, std::uint64_t seed);

  const EgatConfig& config() const { return cfg_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  int node_class_index(const std::string& label) const;  // UNK slot for unknown labels

  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  int node_dim_in(int layer) const;
  int edge_dim_in(int layer) const;
  int head_input_dim() const;

  // Per-head parameter views for one attention layer.
  ConstMatView layer_A(int layer, int head) const;
  ConstMatView layer_W(int layer, int head) const;
  ConstMatView layer_a(int layer, int head) const;
  ConstMatView head_w1() const;
  ConstMatView head_b1() const;
  ConstMatView head_w2() const;
  ConstMatView head_b2() const;

  // Same windows into an arbitrary buffer with this model's layout (used for
  // gradient accumulation).
  MatView layer_A(std::vector<double>& buf, int layer, int head) const;
  MatView layer_W(std::vector<double>& buf, int layer, int head) const;
  MatView layer_a(std::vector<double>& buf, int layer, int head) const;
  MatView head_w1(std::vector<double>& buf) const;
  MatView head_b1(std::vector<double>& buf) const;
  MatView head_w2(std::vector<double>& buf) const;
  MatView head_b2(std::vector<double>& buf) const;

 private:
  struct Block {
    size_t off = 0;
    int rows = 0;
    int cols = 0;
  };
  Block block_for(int layer, int head, int role) const;  // 0=A, 1=W, 2=a

  EgatConfig cfg_;
  std::vector<std::string> vocab_;
  std::map<std::string, int> vocab_index_;
  std::vector<double> theta_;
  std::vector<Block> blocks_;  // layers*heads*3 attention blocks, then w1,b1,w2,b2
};

// --- Forward / backward -------------------------------------------------------

struct LayerTape {
  Matrix node_in;  // layer input after the inter-layer dropout
  Matrix edge_in;
  std::vector<Matrix> u;                    // per head: m x (edge_hidden/heads), pre-activation
  std::vector<Matrix> fprime;               // per head: LeakyReLU(u)
  std::vector<std::vector<double>> alpha;   // per head: m attention weights
  std::vector<Matrix> m_pre;                // per head: n x (node_hidden/heads), pre-activation
  std::vector<char> node_mask;              // dropout mask applied to this layer's input
  std::vector<char> edge_mask;              // (empty when no dropout was applied)
};

struct ForwardTape {
  std::vector<LayerTape> layers;
  Matrix head_in;               // m x head_input_dim
  Matrix mlp_pre1;              // m x mlp_hidden
  std::vector<double> logits;   // m
  std::vector<double> probs;    // m
};

struct LayerOut {
  Matrix node;
  Matrix edge;
  std::vector<std::vector<double>> attn;  // per head, one weight per edge
};

// Single attention layer: per edge f' = LeakyReLU(A [h_i || f_ij || h_j]),
// raw score a·f', softmax over edges sharing the destination, node update
// h'_j = LeakyReLU(sum alpha * W h_i) with a W-projected self fallback for
// nodes without incoming edges. Heads run independently; outputs concatenate.
LayerOut egat_layer_forward(const EgatModel& model, int layer, const Matrix& node_feats,
                            const Matrix& edge_feats,
                            const std::vector<std::pair<int, int>>& edge_index);

// Full stack + classification head; returns one keep probability per edge.
// Dropout is sampled from rng between layers only when train_mode; pass a tape
// to record intermediates for backward.
std::vector<double> model_forward(const EgatModel& model, const GraphBatch& batch,
                                  bool train_mode, Rng* rng, ForwardTape* tape = nullptr);

// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7].
double bce_loss(const std::vector<double>& probs, const std::vector<int>& labels);

// Exact reverse-mode gradient of bce_loss(model_forward(...)) w.r.t. every
// parameter, replaying the recorded tape (dropout masks included).
std::vector<double> backward(const EgatModel& model, const GraphBatch& batch,
                             const ForwardTape& tape);

struct TrainConfig {
  double lr = 5e-3;
  int epochs = 50;
  std::uint64_t seed = 0;
  int batch_size = 1;  // graphs per Adam step
};

struct TrainResult {
  std::vector<double> loss_history;  // per-epoch mean loss
};

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over shuffled graphs; deterministic
// given the seed. Aborts with non_finite_loss on NaN/Inf.
TrainResult train(EgatModel& model, const std::vector<GraphBatch>& dataset,
                  const TrainConfig& config);

// Build a batch for this model's vocabulary. Ground truth, when given,
// provides the binary labels (ordered-pair membership).
GraphBatch make_graph_batch(const PrimitiveGraph& graph, const EgatModel& model,
                            const GroundTruthGraph* gt);

// Eval-mode keep probability per candidate edge.
std::map<EdgePair, double> predict_links(const EgatModel& model, const PrimitiveGraph& graph);

// Lossless checkpoint container (JSON text).
std::string save_model(const EgatModel& model);
EgatModel load_model(const std::string& bytes);
void save_model_file(const EgatModel& model, const std::string& path);
EgatModel load_model_file(const std::string& path);

// Sorted unique top labels across graphs; the UNK slot is appended by the
// model itself.
std::vector<std::string> build_vocabulary(const std::vector<PrimitiveGraph>& graphs);

}  // namespace inkslt
