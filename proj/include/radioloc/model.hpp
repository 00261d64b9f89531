#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "radioloc/errors.hpp"
#include "radioloc/rng.hpp"
#include "radioloc/tensor.hpp"

namespace radioloc {

// Architecture knobs of the shallow encoder-only regressor. The grid
// explored for specialization is encoder_layers 1..5 x layer-norm on/off x
// max-pool on/off; everything else is fixed by the training recipe.
struct ModelConfig {
  int encoder_layers = 1;
  bool use_layer_norm = false;
  bool use_max_pool = true;
  int d_model = 46;
  int seq_len = 128;
  int n_heads = 2;
  int d_ff = 64;
  float dropout_rate = 0.05f;
  int fcnn_hidden = 46;
  int pool_segment = 4;

  void validate() const {
    if (encoder_layers < 1 || encoder_layers > 5)
      throw config_error("encoder_layers must lie in 1..5");
    if (d_model <= 0 || seq_len <= 0 || d_ff <= 0 || fcnn_hidden <= 0 || pool_segment <= 0)
      throw config_error("model dimensions must be positive");
    if (n_heads <= 0 || d_model % n_heads != 0)
      throw config_error("d_model (" + std::to_string(d_model) +
                         ") must divide by n_heads (" + std::to_string(n_heads) + ")");
    if (dropout_rate < 0.0f || dropout_rate >= 1.0f)
      throw config_error("dropout_rate must lie in [0, 1)");
  }

  int head_dim() const { return d_model / n_heads; }
  // padded so the feature axis splits into whole segments: ceil(d_model / 4),
  // i.e. (d_model + 2) / 4 for the 46-wide input
  int pooled_width() const { return (d_model + pool_segment - 1) / pool_segment; }
  int flat_width() const { return seq_len * (use_max_pool ? pooled_width() : d_model); }

  std::string arch_string() const {
    return "el=" + std::to_string(encoder_layers) + ",ln=" + (use_layer_norm ? "on" : "off") +
           ",mp=" + (use_max_pool ? "on" : "off");
  }
};

// Exact count of trainable scalars for a config; must agree with the
// constructed weight store and with serialized checkpoints.
inline long long count_params(const ModelConfig& cfg) {
  cfg.validate();
  const long long d = cfg.d_model;
  const long long f = cfg.d_ff;
  long long per_layer = 4 * (d * d + d)    // Q, K, V, O projections with biases
                        + (d * f + f)      // FFN expand
                        + (f * d + d);     // FFN contract
  if (cfg.use_layer_norm) per_layer += 2 * 2 * d;
  const long long flat = cfg.flat_width();
  const long long head = flat * cfg.fcnn_hidden + cfg.fcnn_hidden  // hidden layer
                         + cfg.fcnn_hidden * 2 + 2;                // 2-D output
  return cfg.encoder_layers * per_layer + head;
}

// Sinusoidal position code added to the input rows; column pairs (2i, 2i+1)
// share the frequency 1 / 10000^(2i / d_model).
template <typename T>
Tensor<T> positional_encoding(int seq_len, int d_model) {
  std::vector<T> pe(static_cast<std::size_t>(seq_len) * d_model);
  for (int pos = 0; pos < seq_len; ++pos)
    for (int j = 0; j < d_model; ++j) {
      const double expo = static_cast<double>(2 * (j / 2)) / d_model;
      const double arg = pos / std::pow(10000.0, expo);
      pe[static_cast<std::size_t>(pos) * d_model + j] =
          static_cast<T>(j % 2 == 0 ? std::sin(arg) : std::cos(arg));
    }
  return Tensor<T>::from({static_cast<std::size_t>(seq_len), static_cast<std::size_t>(d_model)},
                         std::move(pe));
}

template <typename T>
struct EncoderLayerWeights {
  Tensor<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Tensor<T> w1, b1, w2, b2;
  Tensor<T> ln1_gain, ln1_bias, ln2_gain, ln2_bias;  // defined only with LN
};

template <typename T>
struct ModelWeights {
  std::vector<EncoderLayerWeights<T>> layers;
  Tensor<T> head_w1, head_b1, head_w2, head_b2;

  static ModelWeights init(const ModelConfig& cfg, Rng rng) {
    cfg.validate();
    Rng stream = rng.stream("weights");
    auto glorot = [&stream](std::size_t fan_in, std::size_t fan_out) {
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      std::vector<T> v(fan_in * fan_out);
      for (auto& x : v) x = static_cast<T>(stream.uniform(-limit, limit));
      return Tensor<T>::from({fan_in, fan_out}, std::move(v), true);
    };
    const auto d = static_cast<std::size_t>(cfg.d_model);
    const auto f = static_cast<std::size_t>(cfg.d_ff);
    ModelWeights w;
    for (int l = 0; l < cfg.encoder_layers; ++l) {
      EncoderLayerWeights<T> lw;
      lw.wq = glorot(d, d);
      lw.bq = Tensor<T>::zeros({d}, true);
      lw.wk = glorot(d, d);
      lw.bk = Tensor<T>::zeros({d}, true);
      lw.wv = glorot(d, d);
      lw.bv = Tensor<T>::zeros({d}, true);
      lw.wo = glorot(d, d);
      lw.bo = Tensor<T>::zeros({d}, true);
      lw.w1 = glorot(d, f);
      lw.b1 = Tensor<T>::zeros({f}, true);
      lw.w2 = glorot(f, d);
      lw.b2 = Tensor<T>::zeros({d}, true);
      if (cfg.use_layer_norm) {
        lw.ln1_gain = Tensor<T>::filled({d}, T(1), true);
        lw.ln1_bias = Tensor<T>::zeros({d}, true);
        lw.ln2_gain = Tensor<T>::filled({d}, T(1), true);
        lw.ln2_bias = Tensor<T>::zeros({d}, true);
      }
      w.layers.push_back(std::move(lw));
    }
    const auto flat = static_cast<std::size_t>(cfg.flat_width());
    const auto hidden = static_cast<std::size_t>(cfg.fcnn_hidden);
    w.head_w1 = glorot(flat, hidden);
    w.head_b1 = Tensor<T>::zeros({hidden}, true);
    w.head_w2 = glorot(hidden, 2);
    w.head_b2 = Tensor<T>::zeros({2}, true);
    return w;
  }

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& lw = layers[l];
      const std::string p = "enc" + std::to_string(l) + ".";
      out.emplace_back(p + "wq", lw.wq);
      out.emplace_back(p + "bq", lw.bq);
      out.emplace_back(p + "wk", lw.wk);
      out.emplace_back(p + "bk", lw.bk);
      out.emplace_back(p + "wv", lw.wv);
      out.emplace_back(p + "bv", lw.bv);
      out.emplace_back(p + "wo", lw.wo);
      out.emplace_back(p + "bo", lw.bo);
      out.emplace_back(p + "ffn.w1", lw.w1);
      out.emplace_back(p + "ffn.b1", lw.b1);
      out.emplace_back(p + "ffn.w2", lw.w2);
      out.emplace_back(p + "ffn.b2", lw.b2);
      if (lw.ln1_gain.defined()) {
        out.emplace_back(p + "ln1.gain", lw.ln1_gain);
        out.emplace_back(p + "ln1.bias", lw.ln1_bias);
        out.emplace_back(p + "ln2.gain", lw.ln2_gain);
        out.emplace_back(p + "ln2.bias", lw.ln2_bias);
      }
    }
    out.emplace_back("head.w1", head_w1);
    out.emplace_back("head.b1", head_b1);
    out.emplace_back("head.w2", head_w2);
    out.emplace_back("head.b2", head_b2);
    return out;
  }

  std::vector<Tensor<T>> parameters() const {
    std::vector<Tensor<T>> out;
    for (auto& [name, t] : named_parameters()) out.push_back(t);
    return out;
  }

  long long scalar_count() const {
    long long n = 0;
    for (const auto& [name, t] : named_parameters()) n += static_cast<long long>(t.size());
    return n;
  }

  ModelWeights clone() const {
    ModelWeights w;
    for (const auto& lw : layers) {
      EncoderLayerWeights<T> c;
      c.wq = lw.wq.clone();
      c.bq = lw.bq.clone();
      c.wk = lw.wk.clone();
      c.bk = lw.bk.clone();
      c.wv = lw.wv.clone();
      c.bv = lw.bv.clone();
      c.wo = lw.wo.clone();
      c.bo = lw.bo.clone();
      c.w1 = lw.w1.clone();
      c.b1 = lw.b1.clone();
      c.w2 = lw.w2.clone();
      c.b2 = lw.b2.clone();
      if (lw.ln1_gain.defined()) {
        c.ln1_gain = lw.ln1_gain.clone();
        c.ln1_bias = lw.ln1_bias.clone();
        c.ln2_gain = lw.ln2_gain.clone();
        c.ln2_bias = lw.ln2_bias.clone();
      }
      w.layers.push_back(std::move(c));
    }
    w.head_w1 = head_w1.clone();
    w.head_b1 = head_b1.clone();
    w.head_w2 = head_w2.clone();
    w.head_b2 = head_b2.clone();
    return w;
  }
};

enum class RunMode { Train, Eval };

namespace detail {

template <typename T>
Tensor<T> maybe_dropout(Tensor<T> x, float rate, RunMode mode, Rng* rng) {
  if (mode != RunMode::Train || rate == 0.0f) return x;
  if (rng == nullptr) throw contract_error("train-mode forward needs a dropout stream");
  return dropout(x, static_cast<T>(rate), *rng);
}

}  // namespace detail

// softmax(Q K^T / sqrt(d_head)) V with dropout on the attention weights
// while training.
template <typename T>
Tensor<T> scaled_dot_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                               RunMode mode = RunMode::Eval, float dropout_rate = 0.0f,
                               Rng* rng = nullptr) {
  if (q.shape() != k.shape() || k.shape() != v.shape())
    throw contract_error("scaled_dot_attention: Q/K/V shapes differ");
  const auto d_head = static_cast<T>(q.shape().back());
  Tensor<T> scores = scale(matmul_nt(q, k), T(1) / std::sqrt(d_head));
  Tensor<T> weights = softmax_rows(scores);
  weights = detail::maybe_dropout(std::move(weights), dropout_rate, mode, rng);
  return matmul(weights, v);
}

// Heads operate on disjoint slices of the projected Q/K/V; outputs are
// concatenated and projected by W^O (dropout follows the projection).
template <typename T>
Tensor<T> multi_head_attention(const Tensor<T>& x, const EncoderLayerWeights<T>& lw,
                               int n_heads, RunMode mode = RunMode::Eval,
                               float dropout_rate = 0.0f, Rng* rng = nullptr) {
  const std::size_t d_model = x.shape().back();
  if (n_heads <= 0 || d_model % static_cast<std::size_t>(n_heads) != 0)
    throw config_error("multi_head_attention: d_model must divide by n_heads");
  const std::size_t d_head = d_model / static_cast<std::size_t>(n_heads);
  Tensor<T> q = add(matmul(x, lw.wq), lw.bq);
  Tensor<T> k = add(matmul(x, lw.wk), lw.bk);
  Tensor<T> v = add(matmul(x, lw.wv), lw.bv);
  std::vector<Tensor<T>> heads;
  heads.reserve(n_heads);
  for (int h = 0; h < n_heads; ++h) {
    const std::size_t c0 = h * d_head;
    Tensor<T> qh = slice_features(q, c0, c0 + d_head);
    Tensor<T> kh = slice_features(k, c0, c0 + d_head);
    Tensor<T> vh = slice_features(v, c0, c0 + d_head);
    heads.push_back(scaled_dot_attention(qh, kh, vh, mode, dropout_rate, rng));
  }
  Tensor<T> cat = n_heads == 1 ? heads[0] : concat_features(heads);
  Tensor<T> out = add(matmul(cat, lw.wo), lw.bo);
  return detail::maybe_dropout(std::move(out), dropout_rate, mode, rng);
}

// relu(X W1 + b1) W2 + b2, applied to each sequence row independently.
template <typename T>
Tensor<T> feed_forward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1,
                       const Tensor<T>& w2, const Tensor<T>& b2) {
  return add(matmul(relu(add(matmul(x, w1), b1)), w2), b2);
}

// One encoder block: residual attention and residual FFN, each optionally
// followed by layer normalization (post-norm).
template <typename T>
Tensor<T> encoder_layer(const Tensor<T>& x, const EncoderLayerWeights<T>& lw,
                        const ModelConfig& cfg, RunMode mode = RunMode::Eval,
                        Rng* rng = nullptr) {
  Tensor<T> attn = multi_head_attention(x, lw, cfg.n_heads, mode, cfg.dropout_rate, rng);
  Tensor<T> y = add(x, attn);
  if (cfg.use_layer_norm) y = layer_norm(y, lw.ln1_gain, lw.ln1_bias);
  Tensor<T> ff = feed_forward(y, lw.w1, lw.b1, lw.w2, lw.b2);
  ff = detail::maybe_dropout(std::move(ff), cfg.dropout_rate, mode, rng);
  Tensor<T> z = add(y, ff);
  if (cfg.use_layer_norm) z = layer_norm(z, lw.ln2_gain, lw.ln2_bias);
  return z;
}

struct ForwardTrace {
  Shape pooled_shape;  // set when max pooling ran
};

// Full regressor on a standardized batch [b, seq_len, d_model] -> [b, 2].
// Dropout sites: after the positional encoding, on the attention weights,
// after the attention output projection, before the FFN residual, and after
// pooling; active in train mode only.
template <typename T>
Tensor<T> model_forward(const Tensor<T>& x, const ModelConfig& cfg,
                        const ModelWeights<T>& w, RunMode mode = RunMode::Eval,
                        Rng* rng = nullptr, ForwardTrace* trace = nullptr) {
  cfg.validate();
  if (x.rank() != 3 || x.shape()[1] != static_cast<std::size_t>(cfg.seq_len) ||
      x.shape()[2] != static_cast<std::size_t>(cfg.d_model))
    throw contract_error("model_forward: batch must be [b x " + std::to_string(cfg.seq_len) +
                         " x " + std::to_string(cfg.d_model) + "], got " +
                         shape_string(x.shape()));
  const std::size_t batch = x.shape()[0];

  Tensor<T> h = add(x, positional_encoding<T>(cfg.seq_len, cfg.d_model));
  h = detail::maybe_dropout(std::move(h), cfg.dropout_rate, mode, rng);
  for (int l = 0; l < cfg.encoder_layers; ++l)
    h = encoder_layer(h, w.layers[l], cfg, mode, rng);
  if (cfg.use_max_pool) {
    h = max_pool_features(h, static_cast<std::size_t>(cfg.pool_segment));
    if (trace) trace->pooled_shape = h.shape();
    h = detail::maybe_dropout(std::move(h), cfg.dropout_rate, mode, rng);
  }
  Tensor<T> flat = reshape(h, {batch, static_cast<std::size_t>(cfg.flat_width())});
  Tensor<T> hidden = relu(add(matmul(flat, w.head_w1), w.head_b1));
  return add(matmul(hidden, w.head_w2), w.head_b2);
}

}  // namespace radioloc
