#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "radioloc/adam.hpp"
#include "radioloc/errors.hpp"
#include "radioloc/model.hpp"
#include "radioloc/preprocess.hpp"
#include "radioloc/router.hpp"
#include "radioloc/tensor.hpp"

namespace radioloc {

// Training recipe: 200 epochs, batch 64, lr 6e-4, MSE on standardized labels.
struct TrainHyper {
  int epochs = 200;
  int batch_size = 64;
  float learning_rate = 6e-4f;
  std::uint64_t seed = 0;
};

namespace detail {

// samples standardized once up front; batches gather rows from here
struct PreparedSplit {
  std::vector<float> x;  // n * 5888
  std::vector<float> y;  // n * 2 (standardized labels)
  std::vector<int> scenario;
  std::size_t n = 0;
};

inline PreparedSplit prepare_split(const Dataset& ds, const std::vector<std::size_t>& idx,
                                   const Scalers& scalers) {
  const std::size_t f = kBeamRows * kSubcarriers;
  PreparedSplit out;
  out.n = idx.size();
  out.x.resize(out.n * f);
  out.y.resize(out.n * 2);
  out.scenario.resize(out.n);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (ds.samples[idx[i]].standardized)
      throw contract_error("prepare_split: dataset samples must hold raw amplitudes");
    CirSample s = ds.samples[idx[i]];
    apply_scalers(s, scalers, ScaleDirection::Forward);
    std::copy(s.cir.begin(), s.cir.end(), out.x.begin() + i * f);
    out.y[2 * i] = s.label_x;
    out.y[2 * i + 1] = s.label_y;
    out.scenario[i] = static_cast<int>(s.scenario_id);
  }
  return out;
}

inline Tensor<float> gather_batch(const PreparedSplit& split, const std::vector<std::size_t>& order,
                                  std::size_t begin, std::size_t end, std::size_t row_width,
                                  Shape shape) {
  std::vector<float> buf((end - begin) * row_width);
  for (std::size_t i = begin; i < end; ++i)
    std::copy_n(split.x.data() + order[i] * row_width, row_width,
                buf.data() + (i - begin) * row_width);
  shape[0] = end - begin;
  return Tensor<float>::from(std::move(shape), std::move(buf));
}

inline Tensor<float> gather_labels(const PreparedSplit& split,
                                   const std::vector<std::size_t>& order, std::size_t begin,
                                   std::size_t end) {
  std::vector<float> buf((end - begin) * 2);
  for (std::size_t i = begin; i < end; ++i)
    std::copy_n(split.y.data() + order[i] * 2, 2, buf.data() + 2 * (i - begin));
  return Tensor<float>::from({end - begin, 2}, std::move(buf));
}

inline std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

inline void shuffle_order(std::vector<std::size_t>& order, Rng& rng) {
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_u64() % i]);
}

}  // namespace detail

struct TrainResult {
  std::vector<double> train_curve;  // per-epoch mean MSE over train batches
  std::vector<double> val_curve;    // per-epoch MSE on the validation split
  int best_epoch = -1;              // 1-based epoch of the kept weights
  double best_val_mse = 0.0;
  double wall_seconds = 0.0;
  Specialist model;                 // best-epoch weights, config, dataset scalers
};

// Mini-batch Adam on standardized MSE; keeps the weights of the best
// validation epoch. The final short batch is kept. learning_rate == 0 skips
// the optimizer updates (weights stay at their initialization).
inline TrainResult train_model(const Dataset& ds, const ModelConfig& cfg,
                               const TrainHyper& hyper) {
  cfg.validate();
  if (ds.train_idx.empty()) throw data_error("train_model: empty training split");
  if (hyper.epochs < 1) throw config_error("train_model: epochs must be >= 1");
  if (hyper.batch_size < 1) throw config_error("train_model: batch_size must be >= 1");
  audit_no_test_leakage(ds);

  const auto start = std::chrono::steady_clock::now();
  const auto train = detail::prepare_split(ds, ds.train_idx, ds.scalers);
  const auto val = detail::prepare_split(ds, ds.val_idx, ds.scalers);
  const std::size_t f = kBeamRows * kSubcarriers;
  const Shape batch_shape{0, kBeamRows, kSubcarriers};

  ModelWeights<float> weights = ModelWeights<float>::init(cfg, Rng(hyper.seed));
  AdamOptimizer<float> opt(weights.parameters());
  Rng dropout_rng = Rng(hyper.seed).stream("dropout");
  Rng shuffle_root = Rng(hyper.seed).stream("shuffle");

  TrainResult result;
  ModelWeights<float> best = weights.clone();
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = hyper.epochs;

  auto eval_split = [&](const detail::PreparedSplit& split, const ModelWeights<float>& w) {
    if (split.n == 0) return 0.0;
    const auto order = detail::identity_order(split.n);
    double acc = 0.0;
    for (std::size_t b = 0; b < split.n; b += hyper.batch_size) {
      const std::size_t e = std::min(split.n, b + hyper.batch_size);
      auto x = detail::gather_batch(split, order, b, e, f, batch_shape);
      auto y = detail::gather_labels(split, order, b, e);
      auto pred = model_forward(x, cfg, w, RunMode::Eval);
      acc += static_cast<double>(mse_loss(pred, y).item()) * static_cast<double>(e - b);
    }
    return acc / static_cast<double>(split.n);
  };

  std::vector<std::size_t> order = detail::identity_order(train.n);
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng epoch_rng = shuffle_root.stream(static_cast<std::uint64_t>(epoch));
    detail::shuffle_order(order, epoch_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < train.n; b += hyper.batch_size) {
      const std::size_t e = std::min(train.n, b + hyper.batch_size);
      auto x = detail::gather_batch(train, order, b, e, f, batch_shape);
      auto y = detail::gather_labels(train, order, b, e);
      auto pred = model_forward(x, cfg, weights, RunMode::Train, &dropout_rng);
      auto loss = mse_loss(pred, y);
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw numeric_error("train_model: training diverged (non-finite loss) at epoch " +
                            std::to_string(epoch));
      epoch_loss += lv * static_cast<double>(e - b);
      if (hyper.learning_rate > 0.0f) {
        opt.zero_grad();
        backward(loss);
        opt.step(hyper.learning_rate);
      }
    }
    result.train_curve.push_back(epoch_loss / static_cast<double>(train.n));
    if (val.n > 0) {
      const double v = eval_split(val, weights);
      result.val_curve.push_back(v);
      if (v < best_val) {
        best_val = v;
        best = weights.clone();
        best_epoch = epoch;
      }
    }
  }
  if (val.n == 0) {
    best = weights.clone();
    best_val = result.train_curve.back();
    best_epoch = hyper.epochs;
  }

  result.best_epoch = best_epoch;
  result.best_val_mse = best_val;
  result.model.config = cfg;
  result.model.weights = std::move(best);
  result.model.scalers = ds.scalers;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// metrics

// Mean Euclidean error in meters over prediction/truth pairs.
inline double mee(const std::vector<std::array<float, 2>>& predictions,
                  const std::vector<std::array<float, 2>>& truths) {
  if (predictions.size() != truths.size())
    throw contract_error("mee: " + std::to_string(predictions.size()) + " predictions vs " +
                         std::to_string(truths.size()) + " truths");
  if (predictions.empty()) throw contract_error("mee: empty input");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double dx = static_cast<double>(predictions[i][0]) - truths[i][0];
    const double dy = static_cast<double>(predictions[i][1]) - truths[i][1];
    acc += std::sqrt(dx * dx + dy * dy);
  }
  return acc / static_cast<double>(predictions.size());
}

// Batched eval-mode predictions in meters for selected samples of a dataset;
// standardization uses the model's own scalers.
inline std::vector<std::array<float, 2>> predict_meters(const Specialist& sp, const Dataset& ds,
                                                        const std::vector<std::size_t>& idx,
                                                        int batch_size = 64) {
  const std::size_t f = kBeamRows * kSubcarriers;
  const auto split = detail::prepare_split(ds, idx, sp.scalers);
  const auto order = detail::identity_order(split.n);
  std::vector<std::array<float, 2>> out;
  out.reserve(split.n);
  for (std::size_t b = 0; b < split.n; b += batch_size) {
    const std::size_t e = std::min(split.n, b + batch_size);
    auto x = detail::gather_batch(split, order, b, e, f, {0, kBeamRows, kSubcarriers});
    auto pred = model_forward(x, sp.config, sp.weights, RunMode::Eval);
    for (std::size_t i = 0; i < e - b; ++i)
      out.push_back(unstandardize_prediction(pred.data()[2 * i], pred.data()[2 * i + 1],
                                             sp.scalers));
  }
  return out;
}

inline std::vector<std::array<float, 2>> true_positions(const Dataset& ds,
                                                        const std::vector<std::size_t>& idx) {
  std::vector<std::array<float, 2>> out;
  out.reserve(idx.size());
  for (std::size_t i : idx)
    out.push_back({ds.samples[i].label_x, ds.samples[i].label_y});
  return out;
}

inline double evaluate_mee(const Specialist& sp, const Dataset& ds,
                           const std::vector<std::size_t>& idx, int batch_size = 64) {
  return mee(predict_meters(sp, ds, idx, batch_size), true_positions(ds, idx));
}

// Fraction of samples whose routed class equals the true scenario label.
inline double router_accuracy(const std::function<ScenarioId(const CirSample&)>& route_fn,
                              const std::vector<const CirSample*>& samples) {
  if (samples.empty()) throw contract_error("router_accuracy: empty sample set");
  std::size_t hits = 0;
  for (const CirSample* s : samples)
    if (route_fn(*s) == s->scenario_id) ++hits;
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

inline double router_accuracy(const TrainedRouter& router,
                              const std::vector<const CirSample*>& samples) {
  return router_accuracy([&router](const CirSample& s) { return route(s, router); }, samples);
}

// ---------------------------------------------------------------------------
// router training

struct RouterTrainResult {
  std::vector<double> train_curve;  // cross-entropy
  std::vector<double> val_curve;
  int best_epoch = -1;
  double best_val_ce = 0.0;
  double wall_seconds = 0.0;
  TrainedRouter router;
};

// Softmax cross-entropy on one-hot scenario labels over the mixed dataset;
// the router owns the scaler set fitted on that mixed training split.
inline RouterTrainResult train_router(const Dataset& mixed, const RouterConfig& cfg,
                                      const TrainHyper& hyper) {
  cfg.validate();
  if (mixed.train_idx.empty()) throw data_error("train_router: empty training split");
  audit_no_test_leakage(mixed);
  const auto start = std::chrono::steady_clock::now();

  const auto prep = detail::prepare_split(mixed, mixed.train_idx, mixed.scalers);
  const auto prep_val = detail::prepare_split(mixed, mixed.val_idx, mixed.scalers);
  const auto in_dim = static_cast<std::size_t>(cfg.input_dim());
  const std::size_t f = kBeamRows * kSubcarriers;

  // router feature view of the standardized grid
  auto features = [&](const detail::PreparedSplit& split) {
    std::vector<float> out(split.n * in_dim);
    for (std::size_t i = 0; i < split.n; ++i) {
      const float* row = split.x.data() + i * f;
      if (cfg.variant == RouterVariant::FullInput) {
        std::copy_n(row, f, out.begin() + i * in_dim);
      } else {
        for (int r = 0; r < cfg.seq_len; ++r)
          out[i * in_dim + r] = row[static_cast<std::size_t>(r) * cfg.d_model + cfg.bin_index];
      }
    }
    return out;
  };
  const auto xs = features(prep);
  const auto xs_val = features(prep_val);

  RouterWeights<float> weights = RouterWeights<float>::init(cfg, Rng(hyper.seed));
  AdamOptimizer<float> opt({weights.w, weights.b});
  Rng shuffle_root = Rng(hyper.seed).stream("shuffle");

  RouterTrainResult result;
  RouterWeights<float> best = weights.clone();
  double best_val = std::numeric_limits<double>::infinity();
  int best_epoch = hyper.epochs;

  auto eval_ce = [&](const std::vector<float>& x, const std::vector<int>& labels,
                     const RouterWeights<float>& w) {
    if (labels.empty()) return 0.0;
    const std::size_t n = labels.size();
    double acc = 0.0;
    for (std::size_t b = 0; b < n; b += hyper.batch_size) {
      const std::size_t e = std::min(n, b + hyper.batch_size);
      std::vector<float> buf(x.begin() + b * in_dim, x.begin() + e * in_dim);
      auto logits = slp_logits(Tensor<float>::from({e - b, in_dim}, std::move(buf)), w);
      std::vector<int> lab(labels.begin() + b, labels.begin() + e);
      acc += static_cast<double>(softmax_cross_entropy(logits, lab).item()) *
             static_cast<double>(e - b);
    }
    return acc / static_cast<double>(n);
  };

  std::vector<std::size_t> order = detail::identity_order(prep.n);
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    Rng epoch_rng = shuffle_root.stream(static_cast<std::uint64_t>(epoch));
    detail::shuffle_order(order, epoch_rng);
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < prep.n; b += hyper.batch_size) {
      const std::size_t e = std::min(prep.n, b + hyper.batch_size);
      std::vector<float> buf((e - b) * in_dim);
      std::vector<int> lab(e - b);
      for (std::size_t i = b; i < e; ++i) {
        std::copy_n(xs.data() + order[i] * in_dim, in_dim, buf.data() + (i - b) * in_dim);
        lab[i - b] = prep.scenario[order[i]];
      }
      auto logits = slp_logits(Tensor<float>::from({e - b, in_dim}, std::move(buf)), weights);
      auto loss = softmax_cross_entropy(logits, lab);
      const double lv = loss.item();
      if (!std::isfinite(lv))
        throw numeric_error("train_router: training diverged at epoch " +
                            std::to_string(epoch));
      epoch_loss += lv * static_cast<double>(e - b);
      if (hyper.learning_rate > 0.0f) {
        opt.zero_grad();
        backward(loss);
        opt.step(hyper.learning_rate);
      }
    }
    result.train_curve.push_back(epoch_loss / static_cast<double>(prep.n));
    if (prep_val.n > 0) {
      const double v = eval_ce(xs_val, prep_val.scenario, weights);
      result.val_curve.push_back(v);
      if (v < best_val) {
        best_val = v;
        best = weights.clone();
        best_epoch = epoch;
      }
    }
  }
  if (prep_val.n == 0) {
    best = weights.clone();
    best_val = result.train_curve.back();
    best_epoch = hyper.epochs;
  }

  result.best_epoch = best_epoch;
  result.best_val_ce = best_val;
  result.router.config = cfg;
  result.router.weights = std::move(best);
  result.router.scalers = mixed.scalers;
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// timing protocol

inline constexpr const char* kTimingProtocol =
    "single thread, warm-up excluded, median of 5";

struct TimingResult {
  double warmup_seconds = 0.0;       // recorded, never used for the statistic
  std::vector<double> pass_seconds;  // one entry per timed repetition
  double median_seconds = 0.0;
};

// Wall-clock for one full pass over a workload: one warm-up pass excluded
// from the statistic, then the median of `reps` timed passes.
inline TimingResult measure_test_time(const std::function<void()>& pass, int reps = 5) {
  if (reps < 1) throw config_error("measure_test_time: reps must be >= 1");
  TimingResult result;
  auto timed = [&pass] {
    const auto t0 = std::chrono::steady_clock::now();
    pass();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  result.warmup_seconds = timed();
  result.pass_seconds.reserve(reps);
  for (int i = 0; i < reps; ++i) result.pass_seconds.push_back(timed());
  std::vector<double> sorted = result.pass_seconds;
  std::sort(sorted.begin(), sorted.end());
  result.median_seconds = sorted.size() % 2 == 1
                              ? sorted[sorted.size() / 2]
                              : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  return result;
}

}  // namespace radioloc
