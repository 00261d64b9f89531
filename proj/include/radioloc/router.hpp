#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "radioloc/errors.hpp"
#include "radioloc/model.hpp"
#include "radioloc/preprocess.hpp"
#include "radioloc/tensor.hpp"

namespace radioloc {

enum class RouterVariant { FullInput, SingleBin };

inline std::string to_string(RouterVariant v) {
  return v == RouterVariant::FullInput ? "full_input" : "single_bin";
}

inline RouterVariant parse_router_variant(const std::string& s) {
  if (s == "full_input" || s == "full") return RouterVariant::FullInput;
  if (s == "single_bin" || s == "bin") return RouterVariant::SingleBin;
  throw config_error("unknown router variant '" + s + "'");
}

struct RouterConfig {
  RouterVariant variant = RouterVariant::FullInput;
  int bin_index = -1;  // SingleBin only
  int n_classes = 3;
  int seq_len = 128;
  int d_model = 46;

  void validate() const {
    if (n_classes != 3) throw config_error("router: n_classes is fixed at 3");
    if (variant == RouterVariant::SingleBin) {
      if (bin_index < 0 || bin_index >= d_model)
        throw config_error("router: bin_index " + std::to_string(bin_index) +
                           " outside 0.." + std::to_string(d_model - 1));
    }
  }

  int input_dim() const {
    return variant == RouterVariant::FullInput ? seq_len * d_model : seq_len;
  }
};

// 5888*3 + 3 for the full input; 128*3 + 3 = 387 for a single delay bin.
inline long long count_router_params(const RouterConfig& cfg) {
  cfg.validate();
  return static_cast<long long>(cfg.input_dim()) * cfg.n_classes + cfg.n_classes;
}

template <typename T>
struct RouterWeights {
  Tensor<T> w;  // input_dim x 3
  Tensor<T> b;  // 3

  static RouterWeights init(const RouterConfig& cfg, Rng rng) {
    cfg.validate();
    Rng stream = rng.stream("weights");
    const auto in = static_cast<std::size_t>(cfg.input_dim());
    const auto out = static_cast<std::size_t>(cfg.n_classes);
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    std::vector<T> v(in * out);
    for (auto& x : v) x = static_cast<T>(stream.uniform(-limit, limit));
    RouterWeights w;
    w.w = Tensor<T>::from({in, out}, std::move(v), true);
    w.b = Tensor<T>::zeros({out}, true);
    return w;
  }

  std::vector<std::pair<std::string, Tensor<T>>> named_parameters() const {
    return {{"router.w", w}, {"router.b", b}};
  }

  long long scalar_count() const { return static_cast<long long>(w.size() + b.size()); }

  RouterWeights clone() const {
    RouterWeights c;
    c.w = w.clone();
    c.b = b.clone();
    return c;
  }
};

// Router feature view of a standardized sample: the flattened 5888-vector,
// or the 128 amplitudes of one delay-bin column.
inline std::vector<float> extract_features(const CirSample& sample, const RouterConfig& cfg) {
  cfg.validate();
  if (sample.cir.size() != static_cast<std::size_t>(cfg.seq_len) * cfg.d_model)
    throw contract_error("extract_features: sample is not 128 x 46");
  if (cfg.variant == RouterVariant::FullInput) return sample.cir;
  std::vector<float> out(static_cast<std::size_t>(cfg.seq_len));
  for (int r = 0; r < cfg.seq_len; ++r)
    out[r] = sample.cir[static_cast<std::size_t>(r) * cfg.d_model + cfg.bin_index];
  return out;
}

// softmax(x W + b): one probability row per input row.
template <typename T>
Tensor<T> slp_forward(const Tensor<T>& x, const RouterWeights<T>& w) {
  return softmax_rows(add(matmul(x, w.w), w.b));
}

// Logits only; cross-entropy training fuses its own softmax.
template <typename T>
Tensor<T> slp_logits(const Tensor<T>& x, const RouterWeights<T>& w) {
  return add(matmul(x, w.w), w.b);
}

struct TrainedRouter {
  RouterConfig config;
  RouterWeights<float> weights;
  Scalers scalers;  // fitted on the mixed training split
};

// argmax class of the SLP probabilities; ties break toward the lowest index.
// Takes a raw sample and standardizes with the router's own scalers.
inline ScenarioId route(const CirSample& raw, const TrainedRouter& router) {
  if (raw.standardized)
    throw contract_error("route: sample already standardized; pass raw amplitudes");
  CirSample s = raw;
  apply_scalers(s, router.scalers, ScaleDirection::Forward);
  const std::vector<float> feat = extract_features(s, router.config);
  auto x = Tensor<float>::from({1, feat.size()}, feat);
  auto probs = slp_forward(x, router.weights);
  int best = 0;
  for (int c = 1; c < router.config.n_classes; ++c)
    if (probs.data()[c] > probs.data()[best]) best = c;
  return static_cast<ScenarioId>(best);
}

// One trained specialist: architecture, weights and its own scalers.
struct Specialist {
  ModelConfig config;
  ModelWeights<float> weights;
  Scalers scalers;
};

// Method 2: the operator declares the scenario and gets that specialist,
// router bypassed. Mis-declaration is permitted; it models manual error.
inline const Specialist& method2_select(ScenarioId declared,
                                        const std::map<ScenarioId, Specialist>& registry) {
  auto it = registry.find(declared);
  if (it == registry.end())
    throw config_error("method2_select: no specialist registered for " + to_string(declared));
  return it->second;
}

struct DispatchResult {
  float x_m = 0.0f;
  float y_m = 0.0f;
  ScenarioId routed = ScenarioId::S1;
  long long active_params = 0;  // routed specialist + router
  bool switched = false;
};

// Samples arrive raw; each model standardizes with its own scaler set, so a
// pre-standardized sample here means the wrong scalers were already applied.
inline std::array<float, 2> specialist_predict(const Specialist& sp, const CirSample& raw) {
  if (raw.standardized)
    throw contract_error("specialist_predict: sample already standardized; pass raw amplitudes");
  CirSample s = raw;
  apply_scalers(s, sp.scalers, ScaleDirection::Forward);
  auto x = Tensor<float>::from({1, static_cast<std::size_t>(sp.config.seq_len),
                                static_cast<std::size_t>(sp.config.d_model)},
                               s.cir);
  auto out = model_forward(x, sp.config, sp.weights, RunMode::Eval);
  return unstandardize_prediction(out.data()[0], out.data()[1], sp.scalers);
}

// Method 3: route every snapshot, run exactly the routed specialist with its
// own scalers, and track switch events across the stream. majority_window > 1
// smooths the routing decision over the most recent per-snapshot votes
// (experiment flag; per-snapshot routing is the default).
struct AdaptiveEnsemble {
  TrainedRouter router;
  std::map<ScenarioId, Specialist> specialists;
  int majority_window = 1;
  std::optional<ScenarioId> active_id;
  long long switch_events = 0;
  std::deque<ScenarioId> recent_votes;

  // forced_id substitutes a perfect (oracle) routing decision
  DispatchResult dispatch(const CirSample& raw,
                          std::optional<ScenarioId> forced_id = std::nullopt) {
    const ScenarioId vote = forced_id ? *forced_id : route(raw, router);
    ScenarioId id = vote;
    if (majority_window > 1) {
      recent_votes.push_back(vote);
      while (recent_votes.size() > static_cast<std::size_t>(majority_window))
        recent_votes.pop_front();
      std::array<int, 3> counts{0, 0, 0};
      for (ScenarioId v : recent_votes) ++counts[static_cast<int>(v)];
      int best = static_cast<int>(vote);  // ties keep the current vote
      for (int c = 0; c < 3; ++c)
        if (counts[c] > counts[best]) best = c;
      id = static_cast<ScenarioId>(best);
    }
    auto it = specialists.find(id);
    if (it == specialists.end())
      throw config_error("dispatch: no specialist loaded for routed scenario " + to_string(id));
    DispatchResult res;
    res.routed = id;
    res.switched = active_id.has_value() && *active_id != id;
    if (res.switched) ++switch_events;
    active_id = id;
    const auto pred = specialist_predict(it->second, raw);
    res.x_m = pred[0];
    res.y_m = pred[1];
    res.active_params =
        count_params(it->second.config) + count_router_params(router.config);
    return res;
  }

  void reset_stream() {
    active_id.reset();
    switch_events = 0;
    recent_votes.clear();
  }
};

}  // namespace radioloc
