#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "radioloc/channel.hpp"
#include "radioloc/errors.hpp"
#include "radioloc/rng.hpp"

namespace radioloc {

// Symmetric Hann window: w[0] = w[n-1] = 0, w[i] = w[n-1-i].
inline std::vector<double> hann_window(std::size_t n = kSubcarriers) {
  if (n < 2) throw config_error("hann_window: n must be >= 2");
  std::vector<double> w(n);
  constexpr double two_pi = 6.28318530717958647692;
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) / static_cast<double>(n - 1)));
  return w;
}

// One model input: the CIR amplitude matrix with its position label.
struct CirSample {
  std::vector<float> cir;  // 128 x 46 row-major, non-negative
  float label_x = 0.0f;    // meters
  float label_y = 0.0f;
  ScenarioId scenario_id = ScenarioId::S1;
  int lap_index = 1;
  double t = 0.0;
  bool standardized = false;
};

// Windowed 46-point inverse DFT (1/N convention) along each beam row,
// then complex magnitude.
inline CirSample ctf_to_cir(const ChannelSnapshot& snap) {
  if (snap.ctf_re.size() != kBeamRows * kSubcarriers ||
      snap.ctf_im.size() != kBeamRows * kSubcarriers)
    throw contract_error("ctf_to_cir: snapshot is not 128 x 46");
  static const std::vector<double> window = hann_window(kSubcarriers);
  constexpr double two_pi = 6.28318530717958647692;
  constexpr std::size_t n = kSubcarriers;

  // precomputed twiddle table e^{+j 2 pi k m / 46}
  static const auto twiddle = [] {
    std::array<std::complex<double>, n * n> t{};
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t m = 0; m < n; ++m)
        t[k * n + m] = std::polar(1.0, two_pi * static_cast<double>(k * m % n) /
                                           static_cast<double>(n));
    return t;
  }();

  CirSample out;
  out.cir.resize(kBeamRows * n);
  std::array<std::complex<double>, n> row;
  for (std::size_t r = 0; r < kBeamRows; ++r) {
    const float* re = snap.ctf_re.data() + r * n;
    const float* im = snap.ctf_im.data() + r * n;
    for (std::size_t k = 0; k < n; ++k)
      row[k] = window[k] * std::complex<double>(re[k], im[k]);
    for (std::size_t m = 0; m < n; ++m) {
      std::complex<double> acc{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) acc += row[k] * twiddle[k * n + m];
      out.cir[r * n + m] = static_cast<float>(std::abs(acc) / static_cast<double>(n));
    }
  }
  out.label_x = static_cast<float>(snap.pose.x);
  out.label_y = static_cast<float>(snap.pose.y);
  out.scenario_id = snap.scenario_id;
  out.lap_index = snap.pose.lap_index;
  out.t = snap.pose.t;
  return out;
}

// ---------------------------------------------------------------------------
// standardization

enum class ScaleDirection { Forward, Inverse };

// Per-feature z-score over the 128x46 grid plus per-axis label z-score,
// fitted on the training split only. Features whose training std collapses
// below the floor pass through unscaled.
struct Scalers {
  std::vector<float> input_mean, input_std;  // 5888 each
  std::array<float, 2> label_mean{0.0f, 0.0f};
  std::array<float, 2> label_std{1.0f, 1.0f};
  bool fitted = false;

  static constexpr float kStdFloor = 1e-6f;
};

inline void apply_scalers(CirSample& sample, const Scalers& scalers, ScaleDirection dir) {
  if (!scalers.fitted) throw state_error("apply_scalers: scalers were never fitted");
  if (sample.cir.size() != scalers.input_mean.size())
    throw contract_error("apply_scalers: feature count mismatch");
  if (dir == ScaleDirection::Forward) {
    if (sample.standardized) throw contract_error("apply_scalers: sample already standardized");
    for (std::size_t i = 0; i < sample.cir.size(); ++i)
      sample.cir[i] = (sample.cir[i] - scalers.input_mean[i]) / scalers.input_std[i];
    sample.label_x = (sample.label_x - scalers.label_mean[0]) / scalers.label_std[0];
    sample.label_y = (sample.label_y - scalers.label_mean[1]) / scalers.label_std[1];
    sample.standardized = true;
  } else {
    if (!sample.standardized) throw contract_error("apply_scalers: sample is not standardized");
    for (std::size_t i = 0; i < sample.cir.size(); ++i)
      sample.cir[i] = sample.cir[i] * scalers.input_std[i] + scalers.input_mean[i];
    sample.label_x = sample.label_x * scalers.label_std[0] + scalers.label_mean[0];
    sample.label_y = sample.label_y * scalers.label_std[1] + scalers.label_mean[1];
    sample.standardized = false;
  }
}

inline std::array<float, 2> unstandardize_prediction(float px, float py, const Scalers& s) {
  if (!s.fitted) throw state_error("unstandardize_prediction: scalers were never fitted");
  return {px * s.label_std[0] + s.label_mean[0], py * s.label_std[1] + s.label_mean[1]};
}

// ---------------------------------------------------------------------------
// dataset assembly

struct Dataset {
  std::vector<CirSample> samples;  // raw amplitudes; standardize at the model boundary
  std::vector<std::size_t> train_idx, val_idx, test_idx;
  Scalers scalers;
  std::string scenario = "s1";  // "s1" | "s2" | "s3" | "mixed"
  int laps = 5;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> gen_meta;  // generation parameter echo
};

namespace detail {

inline void fit_scalers(Dataset& ds) {
  const std::size_t f = kBeamRows * kSubcarriers;
  auto& sc = ds.scalers;
  sc.input_mean.assign(f, 0.0f);
  sc.input_std.assign(f, 1.0f);
  if (ds.train_idx.empty()) throw data_error("fit_scalers: empty training split");

  std::vector<double> mean(f, 0.0), m2(f, 0.0);
  std::array<double, 2> lmean{0.0, 0.0}, lm2{0.0, 0.0};
  double count = 0.0;
  for (std::size_t idx : ds.train_idx) {
    const CirSample& s = ds.samples[idx];
    count += 1.0;
    for (std::size_t i = 0; i < f; ++i) {
      const double d = s.cir[i] - mean[i];
      mean[i] += d / count;
      m2[i] += d * (s.cir[i] - mean[i]);
    }
    const std::array<double, 2> lab{static_cast<double>(s.label_x),
                                    static_cast<double>(s.label_y)};
    for (int a = 0; a < 2; ++a) {
      const double d = lab[a] - lmean[a];
      lmean[a] += d / count;
      lm2[a] += d * (lab[a] - lmean[a]);
    }
  }
  for (std::size_t i = 0; i < f; ++i) {
    const float std_v = static_cast<float>(std::sqrt(m2[i] / count));
    if (std_v < Scalers::kStdFloor) {
      sc.input_mean[i] = 0.0f;  // constant feature: pass through unscaled
      sc.input_std[i] = 1.0f;
    } else {
      sc.input_mean[i] = static_cast<float>(mean[i]);
      sc.input_std[i] = std_v;
    }
  }
  for (int a = 0; a < 2; ++a) {
    const float std_v = static_cast<float>(std::sqrt(lm2[a] / count));
    if (std_v < Scalers::kStdFloor) {
      sc.label_mean[a] = 0.0f;
      sc.label_std[a] = 1.0f;
    } else {
      sc.label_mean[a] = static_cast<float>(lmean[a]);
      sc.label_std[a] = std_v;
    }
  }
  sc.fitted = true;
}

inline void split_train_val(Dataset& ds, double val_fraction, std::uint64_t seed) {
  if (val_fraction < 0.0 || val_fraction >= 1.0)
    throw config_error("val_fraction must lie in [0, 1)");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (ds.samples[i].lap_index == ds.laps)
      ds.test_idx.push_back(i);
    else
      pool.push_back(i);
  }
  Rng rng = Rng(seed).stream("split");
  for (std::size_t i = pool.size(); i > 1; --i)
    std::swap(pool[i - 1], pool[rng.next_u64() % i]);
  const auto n_val = static_cast<std::size_t>(std::floor(val_fraction * pool.size()));
  ds.val_idx.assign(pool.begin(), pool.begin() + n_val);
  ds.train_idx.assign(pool.begin() + n_val, pool.end());
  std::sort(ds.val_idx.begin(), ds.val_idx.end());
  std::sort(ds.train_idx.begin(), ds.train_idx.end());
}

}  // namespace detail

// Audit pass: no test-lap sample may sit in train/val or feed the scalers.
inline void audit_no_test_leakage(const Dataset& ds) {
  for (std::size_t idx : ds.train_idx)
    if (ds.samples[idx].lap_index == ds.laps)
      throw data_error("leakage: test-lap sample in training split");
  for (std::size_t idx : ds.val_idx)
    if (ds.samples[idx].lap_index == ds.laps)
      throw data_error("leakage: test-lap sample in validation split");
  for (std::size_t idx : ds.test_idx)
    if (ds.samples[idx].lap_index != ds.laps)
      throw data_error("leakage: non-test-lap sample in test split");
}

// Final lap is the test split; the rest splits train/val at val_fraction.
inline Dataset build_dataset(const std::vector<ChannelSnapshot>& snapshots, int laps,
                             double val_fraction, std::uint64_t seed) {
  if (laps < 2) throw config_error("build_dataset: need laps >= 2 (train + test)");
  Dataset ds;
  ds.laps = laps;
  ds.seed = seed;
  ds.samples.reserve(snapshots.size());
  for (const auto& snap : snapshots) {
    CirSample s = ctf_to_cir(snap);
    for (float v : s.cir)
      if (!std::isfinite(v)) throw numeric_error("build_dataset: non-finite CIR amplitude");
    ds.samples.push_back(std::move(s));
  }
  if (!ds.samples.empty()) ds.scenario = to_string(ds.samples.front().scenario_id);
  detail::split_train_val(ds, val_fraction, seed);
  detail::fit_scalers(ds);
  audit_no_test_leakage(ds);
  return ds;
}

// Mixed-scenario dataset for the generalized model and the router: samples
// from all sources pooled, train/val re-drawn over the union, scalers
// refitted on the mixed training split.
inline Dataset build_mixed_dataset(const std::vector<const Dataset*>& sources,
                                   double val_fraction, std::uint64_t seed) {
  if (sources.empty()) throw config_error("build_mixed_dataset: no sources");
  Dataset ds;
  ds.scenario = "mixed";
  ds.laps = sources.front()->laps;
  ds.seed = seed;
  for (const Dataset* src : sources) {
    if (src->laps != ds.laps)
      throw config_error("build_mixed_dataset: sources disagree on lap count");
    ds.samples.insert(ds.samples.end(), src->samples.begin(), src->samples.end());
  }
  detail::split_train_val(ds, val_fraction, seed);
  detail::fit_scalers(ds);
  audit_no_test_leakage(ds);
  return ds;
}

}  // namespace radioloc
