#include "inkslt/egat.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "inkslt/errors.hpp"

namespace inkslt {

const char* to_string(HeadMode m) {
  return m == HeadMode::NodeEdgeFeature ? "NodeEdgeFeature" : "EdgeFeature";
}

HeadMode head_mode_from_string(const std::string& s) {
  if (s == "NodeEdgeFeature") return HeadMode::NodeEdgeFeature;
  if (s == "EdgeFeature") return HeadMode::EdgeFeature;
  throw data_error("unknown head mode: " + s);
}

// --- Model layout --------------------------------------------------------------

EgatModel::EgatModel(EgatConfig cfg, std::vector<std::string> vocab, std::uint64_t seed)
    : cfg_(cfg), vocab_(std::move(vocab)) {
  if (cfg_.layers < 1 || cfg_.heads < 1) throw shape_mismatch("layers and heads must be >= 1");
  if (cfg_.node_hidden % cfg_.heads != 0 || cfg_.edge_hidden % cfg_.heads != 0)
    throw shape_mismatch("heads must divide node_hidden and edge_hidden");
  if (cfg_.node_in <= 0) cfg_.node_in = static_cast<int>(vocab_.size()) + 1;  // + UNK slot
  for (size_t i = 0; i < vocab_.size(); ++i) vocab_index_[vocab_[i]] = static_cast<int>(i);

  size_t off = 0;
  const auto alloc = [&](int rows, int cols) {
    blocks_.push_back({off, rows, cols});
    off += static_cast<size_t>(rows) * cols;
  };
  const int eo = cfg_.edge_hidden / cfg_.heads;
  const int no = cfg_.node_hidden / cfg_.heads;
  for (int l = 0; l < cfg_.layers; ++l) {
    const int ni = node_dim_in(l);
    const int ei = edge_dim_in(l);
    for (int h = 0; h < cfg_.heads; ++h) {
      alloc(eo, 2 * ni + ei);  // A
      alloc(no, ni);           // W_node
      alloc(1, eo);            // a_att
    }
  }
  alloc(cfg_.mlp_hidden, head_input_dim());  // w1
  alloc(1, cfg_.mlp_hidden);                 // b1
  alloc(1, cfg_.mlp_hidden);                 // w2
  alloc(1, 1);                               // b2
  theta_.assign(off, 0.0);

  // Xavier-uniform init per block; biases zero.
  Rng rng(mix64(seed));
  const size_t n_blocks = blocks_.size();
  for (size_t b = 0; b < n_blocks; ++b) {
    const Block& blk = blocks_[b];
    const bool is_bias = (b == n_blocks - 3) || (b == n_blocks - 1);  // b1, b2
    if (is_bias) continue;
    const double limit = std::sqrt(6.0 / (blk.rows + blk.cols));
    for (size_t i = 0; i < static_cast<size_t>(blk.rows) * blk.cols; ++i)
      theta_[blk.off + i] = rng.uniform(-limit, limit);
  }
}

int EgatModel::node_class_index(const std::string& label) const {
  const auto it = vocab_index_.find(label);
  return it != vocab_index_.end() ? it->second : static_cast<int>(vocab_.size());  // UNK
}

int EgatModel::node_dim_in(int layer) const {
  return layer == 0 ? cfg_.node_in : cfg_.node_hidden;
}

int EgatModel::edge_dim_in(int layer) const {
  return layer == 0 ? cfg_.edge_in : cfg_.edge_hidden;
}

int EgatModel::head_input_dim() const {
  return cfg_.head_mode == HeadMode::NodeEdgeFeature ? 2 * cfg_.node_hidden + cfg_.edge_hidden
                                                     : cfg_.edge_hidden;
}

EgatModel::Block EgatModel::block_for(int layer, int head, int role) const {
  return blocks_[static_cast<size_t>((layer * cfg_.heads + head) * 3 + role)];
}

ConstMatView EgatModel::layer_A(int layer, int head) const {
  const Block b = block_for(layer, head, 0);
  return {theta_.data() + b.off, b.rows, b.cols};
}
ConstMatView EgatModel::layer_W(int layer, int head) const {
  const Block b = block_for(layer, head, 1);
  return {theta_.data() + b.off, b.rows, b.cols};
}
ConstMatView EgatModel::layer_a(int layer, int head) const {
  const Block b = block_for(layer, head, 2);
  return {theta_.data() + b.off, b.rows, b.cols};
}
ConstMatView EgatModel::head_w1() const {
  const Block b = blocks_[blocks_.size() - 4];
  return {theta_.data() + b.off, b.rows, b.cols};
}
ConstMatView EgatModel::head_b1() const {
  const Block b = blocks_[blocks_.size() - 3];
  return {theta_.data() + b.off, b.rows, b.cols};
}
ConstMatView EgatModel::head_w2() const {
  const Block b = blocks_[blocks_.size() - 2];
  return {theta_.data() + b.off, b.rows, b.cols};
}
ConstMatView EgatModel::head_b2() const {
  const Block b = blocks_[blocks_.size() - 1];
  return {theta_.data() + b.off, b.rows, b.cols};
}

MatView EgatModel::layer_A(std::vector<double>& buf, int layer, int head) const {
  const Block b = block_for(layer, head, 0);
  return {buf.data() + b.off, b.rows, b.cols};
}
MatView EgatModel::layer_W(std::vector<double>& buf, int layer, int head) const {
  const Block b = block_for(layer, head, 1);
  return {buf.data() + b.off, b.rows, b.cols};
}
MatView EgatModel::layer_a(std::vector<double>& buf, int layer, int head) const {
  const Block b = block_for(layer, head, 2);
  return {buf.data() + b.off, b.rows, b.cols};
}
MatView EgatModel::head_w1(std::vector<double>& buf) const {
  const Block b = blocks_[blocks_.size() - 4];
  return {buf.data() + b.off, b.rows, b.cols};
}
MatView EgatModel::head_b1(std::vector<double>& buf) const {
  const Block b = blocks_[blocks_.size() - 3];
  return {buf.data() + b.off, b.rows, b.cols};
}
MatView EgatModel::head_w2(std::vector<double>& buf) const {
  const Block b = blocks_[blocks_.size() - 2];
  return {buf.data() + b.off, b.rows, b.cols};
}
MatView EgatModel::head_b2(std::vector<double>& buf) const {
  const Block b = blocks_[blocks_.size() - 1];
  return {buf.data() + b.off, b.rows, b.cols};
}

// --- Forward -------------------------------------------------------------------

namespace {

double lrelu(double x, double slope) { return x >= 0.0 ? x : slope * x; }
double lrelu_grad(double pre, double slope) { return pre >= 0.0 ? 1.0 : slope; }

constexpr double kProbClamp = 1e-7;

// One attention layer over taped inputs; fills tape slots (u, fprime, alpha,
// m_pre) and the concatenated outputs.
void layer_forward_core(const EgatModel& model, int layer, const Matrix& node_in,
                        const Matrix& edge_in, const std::vector<std::pair<int, int>>& edges,
                        Matrix* node_out, Matrix* edge_out, LayerTape* tape,
                        std::vector<std::vector<double>>* attn_out) {
  const EgatConfig& cfg = model.config();
  const int n = node_in.rows;
  const int m = static_cast<int>(edges.size());
  const int ni = model.node_dim_in(layer);
  const int ei = model.edge_dim_in(layer);
  if (node_in.cols != ni || (m > 0 && edge_in.cols != ei))
    throw shape_mismatch("layer input width mismatch at layer " + std::to_string(layer));
  for (const auto& [s, d] : edges)
    if (s < 0 || s >= n || d < 0 || d >= n) throw shape_mismatch("edge index out of range");

  const int heads = cfg.heads;
  const int eo = cfg.edge_hidden / heads;
  const int no = cfg.node_hidden / heads;
  const double slope = cfg.leaky_slope;

  *node_out = Matrix(n, cfg.node_hidden);
  *edge_out = Matrix(m, cfg.edge_hidden);

  std::vector<std::vector<int>> incoming(static_cast<size_t>(n));
  for (int k = 0; k < m; ++k) incoming[static_cast<size_t>(edges[static_cast<size_t>(k)].second)].push_back(k);

  for (int h = 0; h < heads; ++h) {
    const ConstMatView A = model.layer_A(layer, h);
    const ConstMatView W = model.layer_W(layer, h);
    const ConstMatView a = model.layer_a(layer, h);

    Matrix u(m, eo);
    Matrix fprime(m, eo);
    std::vector<double> raw(static_cast<size_t>(m), 0.0);
    for (int k = 0; k < m; ++k) {
      const auto [src, dst] = edges[static_cast<size_t>(k)];
      // z = [h_src || f || h_dst], multiplied on the fly.
      for (int r = 0; r < eo; ++r) {
        double acc = 0.0;
        const double* arow = A.base + static_cast<size_t>(r) * A.cols;
        for (int c = 0; c < ni; ++c) acc += arow[c] * node_in.at(src, c);
        for (int c = 0; c < ei; ++c) acc += arow[ni + c] * edge_in.at(k, c);
        for (int c = 0; c < ni; ++c) acc += arow[ni + ei + c] * node_in.at(dst, c);
        u.at(k, r) = acc;
        fprime.at(k, r) = lrelu(acc, slope);
      }
      double e = 0.0;
      for (int r = 0; r < eo; ++r) e += a.at(0, r) * fprime.at(k, r);
      raw[static_cast<size_t>(k)] = e;
    }

    // Destination-side softmax.
    std::vector<double> alpha(static_cast<size_t>(m), 0.0);
    for (int j = 0; j < n; ++j) {
      const auto& in_j = incoming[static_cast<size_t>(j)];
      if (in_j.empty()) continue;
      double mx = raw[static_cast<size_t>(in_j[0])];
      for (int k : in_j) mx = std::max(mx, raw[static_cast<size_t>(k)]);
      double sum = 0.0;
      for (int k : in_j) {
        alpha[static_cast<size_t>(k)] = std::exp(raw[static_cast<size_t>(k)] - mx);
        sum += alpha[static_cast<size_t>(k)];
      }
      for (int k : in_j) alpha[static_cast<size_t>(k)] /= sum;
    }

    Matrix m_pre(n, no);
    for (int j = 0; j < n; ++j) {
      const auto& in_j = incoming[static_cast<size_t>(j)];
      for (int r = 0; r < no; ++r) {
        double acc = 0.0;
        const double* wrow = W.base + static_cast<size_t>(r) * W.cols;
        if (in_j.empty()) {
          for (int c = 0; c < ni; ++c) acc += wrow[c] * node_in.at(j, c);  // self fallback
        } else {
          for (int k : in_j) {
            const int src = edges[static_cast<size_t>(k)].first;
            double wh = 0.0;
            for (int c = 0; c < ni; ++c) wh += wrow[c] * node_in.at(src, c);
            acc += alpha[static_cast<size_t>(k)] * wh;
          }
        }
        m_pre.at(j, r) = acc;
        node_out->at(j, h * no + r) = lrelu(acc, slope);
      }
    }
    for (int k = 0; k < m; ++k)
      for (int r = 0; r < eo; ++r) edge_out->at(k, h * eo + r) = fprime.at(k, r);

    if (attn_out != nullptr) attn_out->push_back(alpha);
    if (tape != nullptr) {
      tape->u.push_back(std::move(u));
      tape->fprime.push_back(std::move(fprime));
      tape->alpha.push_back(std::move(alpha));
      tape->m_pre.push_back(std::move(m_pre));
    }
  }
}

void apply_dropout(Matrix& mat, double rate, Rng& rng, std::vector<char>* mask_out) {
  const double keep = 1.0 - rate;
  mask_out->resize(mat.data.size());
  for (size_t i = 0; i < mat.data.size(); ++i) {
    const bool keep_it = rng.uniform() >= rate;
    (*mask_out)[i] = keep_it ? 1 : 0;
    mat.data[i] = keep_it ? mat.data[i] / keep : 0.0;  // inverted dropout
  }
}

}  // namespace

LayerOut egat_layer_forward(const EgatModel& model, int layer, const Matrix& node_feats,
                            const Matrix& edge_feats,
                            const std::vector<std::pair<int, int>>& edge_index) {
  LayerOut out;
  layer_forward_core(model, layer, node_feats, edge_feats, edge_index, &out.node, &out.edge,
                     nullptr, &out.attn);
  return out;
}

std::vector<double> model_forward(const EgatModel& model, const GraphBatch& batch,
                                  bool train_mode, Rng* rng, ForwardTape* tape) {
  const EgatConfig& cfg = model.config();
  const int m = static_cast<int>(batch.edge_index.size());
  if (batch.node_feats.rows != batch.n || batch.node_feats.cols != cfg.node_in)
    throw shape_mismatch("node feature matrix does not match the model");
  if (batch.edge_feats.rows != m)
    throw shape_mismatch("edge feature rows do not match the edge list");

  ForwardTape local;
  ForwardTape& t = tape != nullptr ? *tape : local;
  t.layers.assign(static_cast<size_t>(cfg.layers), {});

  Matrix node = batch.node_feats;
  Matrix edge = batch.edge_feats;
  for (int l = 0; l < cfg.layers; ++l) {
    LayerTape& lt = t.layers[static_cast<size_t>(l)];
    if (train_mode && cfg.dropout > 0.0 && l > 0) {
      if (rng == nullptr) throw data_error("train-mode forward needs an rng for dropout");
      apply_dropout(node, cfg.dropout, *rng, &lt.node_mask);
      apply_dropout(edge, cfg.dropout, *rng, &lt.edge_mask);
    }
    lt.node_in = node;
    lt.edge_in = edge;
    Matrix node_out, edge_out;
    layer_forward_core(model, l, node, edge, batch.edge_index, &node_out, &edge_out, &lt,
                       nullptr);
    node = std::move(node_out);
    edge = std::move(edge_out);
  }

  // Classification head.
  const int in_dim = model.head_input_dim();
  t.head_in = Matrix(m, in_dim);
  for (int k = 0; k < m; ++k) {
    if (cfg.head_mode == HeadMode::NodeEdgeFeature) {
      const auto [src, dst] = batch.edge_index[static_cast<size_t>(k)];
      int c = 0;
      for (int i = 0; i < cfg.node_hidden; ++i) t.head_in.at(k, c++) = node.at(src, i);
      for (int i = 0; i < cfg.edge_hidden; ++i) t.head_in.at(k, c++) = edge.at(k, i);
      for (int i = 0; i < cfg.node_hidden; ++i) t.head_in.at(k, c++) = node.at(dst, i);
    } else {
      for (int i = 0; i < cfg.edge_hidden; ++i) t.head_in.at(k, i) = edge.at(k, i);
    }
  }

  const ConstMatView w1 = model.head_w1();
  const ConstMatView b1 = model.head_b1();
  const ConstMatView w2 = model.head_w2();
  const ConstMatView b2 = model.head_b2();
  t.mlp_pre1 = Matrix(m, cfg.mlp_hidden);
  t.logits.assign(static_cast<size_t>(m), 0.0);
  t.probs.assign(static_cast<size_t>(m), 0.0);
  for (int k = 0; k < m; ++k) {
    for (int r = 0; r < cfg.mlp_hidden; ++r) {
      double acc = b1.at(0, r);
      const double* row = w1.base + static_cast<size_t>(r) * w1.cols;
      for (int c = 0; c < in_dim; ++c) acc += row[c] * t.head_in.at(k, c);
      t.mlp_pre1.at(k, r) = acc;
    }
    double logit = b2.at(0, 0);
    for (int r = 0; r < cfg.mlp_hidden; ++r)
      logit += w2.at(0, r) * lrelu(t.mlp_pre1.at(k, r), cfg.leaky_slope);
    t.logits[static_cast<size_t>(k)] = logit;
    t.probs[static_cast<size_t>(k)] = 1.0 / (1.0 + std::exp(-logit));
  }
  return t.probs;
}

double bce_loss(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size())
    throw length_mismatch("bce_loss: probs and labels differ in length");
  if (probs.empty()) return 0.0;
  double sum = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    sum += labels[i] != 0 ? -std::log(p) : -std::log(1.0 - p);
  }
  return sum / static_cast<double>(probs.size());
}

std::vector<double> backward(const EgatModel& model, const GraphBatch& batch,
                             const ForwardTape& tape) {
  const EgatConfig& cfg = model.config();
  const int n = batch.n;
  const int m = static_cast<int>(batch.edge_index.size());
  std::vector<double> grads(model.params().size(), 0.0);
  if (m == 0) return grads;
  auto& grads_ref = grads;

  // dL/dlogit for the clamped mean BCE. The clamp zeroes the gradient exactly
  // where it is active, matching the loss actually computed.
  std::vector<double> g_logit(static_cast<size_t>(m), 0.0);
  for (int k = 0; k < m; ++k) {
    const double p = tape.probs[static_cast<size_t>(k)];
    const double y = batch.labels[static_cast<size_t>(k)] != 0 ? 1.0 : 0.0;
    if (p <= kProbClamp || p >= 1.0 - kProbClamp) {
      const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
      g_logit[static_cast<size_t>(k)] =
          ((pc - y) / (pc * (1.0 - pc))) * 0.0 * p;  // clamp active: flat region
    } else {
      g_logit[static_cast<size_t>(k)] = (p - y) / static_cast<double>(m);
    }
  }

  // Head MLP backward.
  const int in_dim = model.head_input_dim();
  const ConstMatView w1 = model.head_w1();
  const ConstMatView w2 = model.head_w2();
  MatView g_w1 = model.head_w1(grads_ref);
  MatView g_b1 = model.head_b1(grads_ref);
  MatView g_w2 = model.head_w2(grads_ref);
  MatView g_b2 = model.head_b2(grads_ref);

  Matrix g_head_in(m, in_dim);
  for (int k = 0; k < m; ++k) {
    const double gl = g_logit[static_cast<size_t>(k)];
    g_b2.at(0, 0) += gl;
    for (int r = 0; r < cfg.mlp_hidden; ++r) {
      const double pre = tape.mlp_pre1.at(k, r);
      const double act = lrelu(pre, cfg.leaky_slope);
      g_w2.at(0, r) += gl * act;
      const double g_pre = gl * w2.at(0, r) * lrelu_grad(pre, cfg.leaky_slope);
      g_b1.at(0, r) += g_pre;
      const double* w1row = w1.base + static_cast<size_t>(r) * w1.cols;
      for (int c = 0; c < in_dim; ++c) {
        g_w1.at(r, c) += g_pre * tape.head_in.at(k, c);
        g_head_in.at(k, c) += g_pre * w1row[c];
      }
    }
  }

  // Scatter the head-input gradient to the last layer's outputs.
  Matrix g_node(n, cfg.node_hidden);
  Matrix g_edge(m, cfg.edge_hidden);
  for (int k = 0; k < m; ++k) {
    if (cfg.head_mode == HeadMode::NodeEdgeFeature) {
      const auto [src, dst] = batch.edge_index[static_cast<size_t>(k)];
      int c = 0;
      for (int i = 0; i < cfg.node_hidden; ++i) g_node.at(src, i) += g_head_in.at(k, c++);
      for (int i = 0; i < cfg.edge_hidden; ++i) g_edge.at(k, i) += g_head_in.at(k, c++);
      for (int i = 0; i < cfg.node_hidden; ++i) g_node.at(dst, i) += g_head_in.at(k, c++);
    } else {
      for (int i = 0; i < cfg.edge_hidden; ++i) g_edge.at(k, i) += g_head_in.at(k, i);
    }
  }

  std::vector<std::vector<int>> incoming(static_cast<size_t>(n));
  for (int k = 0; k < m; ++k) incoming[static_cast<size_t>(batch.edge_index[static_cast<size_t>(k)].second)].push_back(k);

  const int heads = cfg.heads;
  const int eo = cfg.edge_hidden / heads;
  const int no = cfg.node_hidden / heads;
  const double slope = cfg.leaky_slope;

  for (int l = cfg.layers - 1; l >= 0; --l) {
    const LayerTape& lt = tape.layers[static_cast<size_t>(l)];
    const int ni = model.node_dim_in(l);
    const int ei = model.edge_dim_in(l);
    Matrix g_node_in(n, ni);
    Matrix g_edge_in(m, ei);

    for (int h = 0; h < heads; ++h) {
      const ConstMatView A = model.layer_A(l, h);
      const ConstMatView W = model.layer_W(l, h);
      const ConstMatView a = model.layer_a(l, h);
      MatView g_A = model.layer_A(grads_ref, l, h);
      MatView g_W = model.layer_W(grads_ref, l, h);
      MatView g_a = model.layer_a(grads_ref, l, h);
      const Matrix& u = lt.u[static_cast<size_t>(h)];
      const Matrix& fprime = lt.fprime[static_cast<size_t>(h)];
      const std::vector<double>& alpha = lt.alpha[static_cast<size_t>(h)];
      const Matrix& m_pre = lt.m_pre[static_cast<size_t>(h)];

      // Node update backward: g wrt m_pre, then through attention and values.
      std::vector<double> g_alpha(static_cast<size_t>(m), 0.0);
      for (int j = 0; j < n; ++j) {
        const auto& in_j = incoming[static_cast<size_t>(j)];
        std::vector<double> gm(static_cast<size_t>(no));
        for (int r = 0; r < no; ++r)
          gm[static_cast<size_t>(r)] =
              g_node.at(j, h * no + r) * lrelu_grad(m_pre.at(j, r), slope);
        if (in_j.empty()) {
          // Self fallback: m_j = W h_j.
          for (int r = 0; r < no; ++r) {
            const double g = gm[static_cast<size_t>(r)];
            if (g == 0.0) continue;
            const double* wrow = W.base + static_cast<size_t>(r) * W.cols;
            for (int c = 0; c < ni; ++c) {
              g_W.at(r, c) += g * lt.node_in.at(j, c);
              g_node_in.at(j, c) += g * wrow[c];
            }
          }
          continue;
        }
        for (int k : in_j) {
          const int src = batch.edge_index[static_cast<size_t>(k)].first;
          const double ak = alpha[static_cast<size_t>(k)];
          double g_alpha_k = 0.0;
          for (int r = 0; r < no; ++r) {
            const double g = gm[static_cast<size_t>(r)];
            if (g == 0.0) continue;
            const double* wrow = W.base + static_cast<size_t>(r) * W.cols;
            double wh = 0.0;
            for (int c = 0; c < ni; ++c) wh += wrow[c] * lt.node_in.at(src, c);
            g_alpha_k += g * wh;
            const double gv = g * ak;  // gradient on W h_src
            for (int c = 0; c < ni; ++c) {
              g_W.at(r, c) += gv * lt.node_in.at(src, c);
              g_node_in.at(src, c) += gv * wrow[c];
            }
          }
          g_alpha[static_cast<size_t>(k)] += g_alpha_k;
        }
      }

      // Softmax backward per destination, then into raw scores and f'.
      std::vector<double> g_raw(static_cast<size_t>(m), 0.0);
      for (int j = 0; j < n; ++j) {
        const auto& in_j = incoming[static_cast<size_t>(j)];
        if (in_j.empty()) continue;
        double dot = 0.0;
        for (int k : in_j) dot += alpha[static_cast<size_t>(k)] * g_alpha[static_cast<size_t>(k)];
        for (int k : in_j)
          g_raw[static_cast<size_t>(k)] =
              alpha[static_cast<size_t>(k)] * (g_alpha[static_cast<size_t>(k)] - dot);
      }

      // f' receives gradients from the layer output and the attention scores.
      for (int k = 0; k < m; ++k) {
        const auto [src, dst] = batch.edge_index[static_cast<size_t>(k)];
        const double gr = g_raw[static_cast<size_t>(k)];
        for (int r = 0; r < eo; ++r) {
          double gf = g_edge.at(k, h * eo + r) + gr * a.at(0, r);
          g_a.at(0, r) += gr * fprime.at(k, r);
          const double gu = gf * lrelu_grad(u.at(k, r), slope);
          if (gu == 0.0) continue;
          const double* arow = A.base + static_cast<size_t>(r) * A.cols;
          for (int c = 0; c < ni; ++c) {
            g_A.at(r, c) += gu * lt.node_in.at(src, c);
            g_node_in.at(src, c) += gu * arow[c];
          }
          for (int c = 0; c < ei; ++c) {
            g_A.at(r, ni + c) += gu * lt.edge_in.at(k, c);
            g_edge_in.at(k, c) += gu * arow[ni + c];
          }
          for (int c = 0; c < ni; ++c) {
            g_A.at(r, ni + ei + c) += gu * lt.node_in.at(dst, c);
            g_node_in.at(dst, c) += gu * arow[ni + ei + c];
          }
        }
      }
    }

    // Undo the inter-layer dropout scaling.
    if (!lt.node_mask.empty()) {
      const double keep = 1.0 - cfg.dropout;
      for (size_t i = 0; i < g_node_in.data.size(); ++i)
        g_node_in.data[i] = lt.node_mask[i] != 0 ? g_node_in.data[i] / keep : 0.0;
      for (size_t i = 0; i < g_edge_in.data.size(); ++i)
        g_edge_in.data[i] = lt.edge_mask[i] != 0 ? g_edge_in.data[i] / keep : 0.0;
    }
    g_node = std::move(g_node_in);
    g_edge = std::move(g_edge_in);
  }
  return grads;
}

// --- Training ------------------------------------------------------------------

TrainResult train(EgatModel& model, const std::vector<GraphBatch>& dataset,
                  const TrainConfig& config) {
  if (dataset.empty()) throw data_error("train: empty dataset");
  TrainResult result;
  std::vector<double>& theta = model.params();
  std::vector<double> adam_m(theta.size(), 0.0);
  std::vector<double> adam_v(theta.size(), 0.0);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  Rng shuffle_rng(mix64(config.seed ^ 0x5u));
  Rng dropout_rng(mix64(config.seed ^ 0xdu));
  std::vector<size_t> order(dataset.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  const int bs = std::max(config.batch_size, 1);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t counted = 0;
    for (size_t pos = 0; pos < order.size(); pos += static_cast<size_t>(bs)) {
      std::vector<double> grads(theta.size(), 0.0);
      int group = 0;
      for (size_t q = pos; q < std::min(pos + static_cast<size_t>(bs), order.size()); ++q) {
        const GraphBatch& batch = dataset[order[q]];
        if (batch.edge_index.empty()) continue;
        ForwardTape tape;
        const std::vector<double> probs =
            model_forward(model, batch, /*train_mode=*/true, &dropout_rng, &tape);
        const double loss = bce_loss(probs, batch.labels);
        if (!std::isfinite(loss))
          throw non_finite_loss("non-finite loss at epoch " + std::to_string(epoch));
        epoch_loss += loss;
        ++counted;
        const std::vector<double> g = backward(model, batch, tape);
        for (size_t i = 0; i < grads.size(); ++i) grads[i] += g[i];
        ++group;
      }
      if (group == 0) continue;
      ++step;
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (size_t i = 0; i < theta.size(); ++i) {
        const double g = grads[i] / group;
        adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * g;
        adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * g * g;
        theta[i] -= config.lr * (adam_m[i] / bc1) / (std::sqrt(adam_v[i] / bc2) + eps);
      }
    }
    result.loss_history.push_back(counted > 0 ? epoch_loss / static_cast<double>(counted) : 0.0);
  }
  return result;
}

// --- Batch construction / prediction ---------------------------------------------

std::vector<std::string> build_vocabulary(const std::vector<PrimitiveGraph>& graphs) {
  std::set<std::string> labels;
  for (const PrimitiveGraph& g : graphs)
    for (const SymbolNode& n : g.nodes) labels.insert(n.top_label);
  return {labels.begin(), labels.end()};
}

GraphBatch make_graph_batch(const PrimitiveGraph& graph, const EgatModel& model,
                            const GroundTruthGraph* gt) {
  if (graph.nodes.empty()) throw empty_graph("graph has no nodes: " + graph.expr_id);
  GraphBatch b;
  b.n = static_cast<int>(graph.nodes.size());
  b.node_feats = Matrix(b.n, model.config().node_in);
  std::map<std::string, int> index;
  for (int i = 0; i < b.n; ++i) {
    const SymbolNode& node = graph.nodes[static_cast<size_t>(i)];
    index[node.symbol_id] = i;
    b.node_feats.at(i, model.node_class_index(node.top_label)) = 1.0;
  }
  std::set<EdgePair> gt_pairs;
  if (gt != nullptr)
    for (const auto& [parent, child, rel] : gt->relations) gt_pairs.insert({parent, child});

  const int m = static_cast<int>(graph.edges.size());
  b.edge_feats = Matrix(m, model.config().edge_in);
  for (int k = 0; k < m; ++k) {
    const CandidateEdge& e = graph.edges[static_cast<size_t>(k)];
    const auto src = index.find(e.src);
    const auto dst = index.find(e.dst);
    if (src == index.end() || dst == index.end())
      throw data_error("edge endpoint missing from graph: " + e.src + " -> " + e.dst);
    b.edge_index.push_back({src->second, dst->second});
    b.edge_keys.push_back({e.src, e.dst});
    b.edge_feats.at(k, static_cast<int>(argmax_relation(e.rel_dist))) = e.confidence;
    b.labels.push_back(gt_pairs.count({e.src, e.dst}) ? 1 : 0);
  }
  return b;
}

std::map<EdgePair, double> predict_links(const EgatModel& model, const PrimitiveGraph& graph) {
  const GraphBatch batch = make_graph_batch(graph, model, nullptr);
  std::map<EdgePair, double> out;
  if (batch.edge_index.empty()) return out;
  const std::vector<double> probs = model_forward(model, batch, /*train_mode=*/false, nullptr);
  for (size_t k = 0; k < probs.size(); ++k) out[batch.edge_keys[k]] = probs[k];
  return out;
}

// --- Checkpoints ----------------------------------------------------------------

std::string save_model(const EgatModel& model) {
  const EgatConfig& c = model.config();
  nlohmann::json j;
  j["format_version"] = 1;
  j["config"] = {{"node_in", c.node_in},       {"edge_in", c.edge_in},
                 {"node_hidden", c.node_hidden}, {"edge_hidden", c.edge_hidden},
                 {"heads", c.heads},           {"layers", c.layers},
                 {"mlp_hidden", c.mlp_hidden}, {"head_mode", to_string(c.head_mode)},
                 {"dropout", c.dropout},       {"leaky_slope", c.leaky_slope}};
  j["vocab"] = model.vocab();
  j["theta"] = model.params();
  return j.dump() + "\n";
}

EgatModel load_model(const std::string& bytes) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes);
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("bad checkpoint: ") + e.what());
  }
  if (j.at("format_version").get<int>() != 1) throw data_error("unsupported checkpoint version");
  const auto& jc = j.at("config");
  EgatConfig c;
  c.node_in = jc.at("node_in").get<int>();
  c.edge_in = jc.at("edge_in").get<int>();
  c.node_hidden = jc.at("node_hidden").get<int>();
  c.edge_hidden = jc.at("edge_hidden").get<int>();
  c.heads = jc.at("heads").get<int>();
  c.layers = jc.at("layers").get<int>();
  c.mlp_hidden = jc.at("mlp_hidden").get<int>();
  c.head_mode = head_mode_from_string(jc.at("head_mode").get<std::string>());
  c.dropout = jc.at("dropout").get<double>();
  c.leaky_slope = jc.at("leaky_slope").get<double>();
  EgatModel model(c, j.at("vocab").get<std::vector<std::string>>(), /*seed=*/0);
  std::vector<double> theta = j.at("theta").get<std::vector<double>>();
  if (theta.size() != model.params().size())
    throw data_error("checkpoint parameter count mismatch");
  model.params() = std::move(theta);
  return model;
}

void save_model_file(const EgatModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write checkpoint: " + path);
  out << save_model(model);
}

EgatModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open checkpoint: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

}  // namespace inkslt
