#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "radioloc/errors.hpp"
#include "radioloc/rng.hpp"

namespace radioloc {

// Beam-space dimensions of one channel snapshot: four stacked 32-row blocks
// (two polarizations x two antenna pairs) over 46 subcarrier groups.
inline constexpr std::size_t kBeamRows = 128;
inline constexpr std::size_t kBlocks = 4;
inline constexpr std::size_t kBeamsPerBlock = 32;
inline constexpr std::size_t kBeamGrid = 64;  // oversampled steering grid
inline constexpr std::size_t kSubcarriers = 46;

inline constexpr double kBandwidthHz = 100e6;
inline constexpr double kCarrierHz = 3.85e9;
inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kSubcarrierSpacingHz = kBandwidthHz / kSubcarriers;  // ~2.174 MHz
inline constexpr double kDelayBinSeconds = 1.0 / kBandwidthHz;               // 10 ns
inline constexpr double kUnambiguousDelaySeconds = kSubcarriers / kBandwidthHz;  // 460 ns

enum class ScenarioId { S1 = 0, S2 = 1, S3 = 2 };

inline std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::S1: return "s1";
    case ScenarioId::S2: return "s2";
    case ScenarioId::S3: return "s3";
  }
  return "?";
}

inline ScenarioId parse_scenario(const std::string& s) {
  if (s == "s1" || s == "S1") return ScenarioId::S1;
  if (s == "s2" || s == "S2") return ScenarioId::S2;
  if (s == "s3" || s == "S3") return ScenarioId::S3;
  throw config_error("unknown scenario '" + s + "' (expected s1, s2 or s3)");
}

enum class LosMode { Always, Never, Alternating };

inline std::string to_string(LosMode m) {
  switch (m) {
    case LosMode::Always: return "always";
    case LosMode::Never: return "never";
    case LosMode::Alternating: return "alternating";
  }
  return "?";
}

inline LosMode parse_los_mode(const std::string& s) {
  if (s == "always") return LosMode::Always;
  if (s == "never") return LosMode::Never;
  if (s == "alternating") return LosMode::Alternating;
  throw config_error("unknown los_mode '" + s + "'");
}

struct TimedPose {
  double t = 0.0;       // seconds since start of drive
  double x = 0.0;       // meters, BS at origin
  double y = 0.0;
  int lap_index = 1;    // 1..laps
  double arc_s = 0.0;   // arc length along the loop, wrapped to one lap
};

struct ScenarioParams {
  ScenarioId scenario_id = ScenarioId::S1;
  double k_factor_db = 12.0;       // LoS-to-total-scatter power ratio
  int n_scatterers = 8;
  LosMode los_mode = LosMode::Always;
  int mask_transitions = 0;        // per lap, Alternating only (even, >= 2)
  double delay_spread_ns = 80.0;   // max scatter excess delay at the loop centroid
  double scatter_min_excess_ns = 20.0;  // floor on excess delay at every waypoint
  double noise_floor_db = -25.0;   // relative to mean per-entry path power
  std::vector<std::array<double, 2>> trajectory;  // closed loop waypoints, meters
  double bs_height_m = 20.0;
  double speed_kmh = 15.0;
  double snapshot_interval_s = 0.020;
  bool timing_advance = true;      // subtract the geometric LoS delay per snapshot
  double block_gain_sigma = 0.05;  // per-(block, beam) gain calibration spread

  static ScenarioParams preset(ScenarioId id);
  void validate() const;
  double perimeter() const;
  bool los_visible(double arc_s) const;
};

inline std::vector<std::array<double, 2>> square_loop(double cx, double cy, double side) {
  const double h = side / 2.0;
  return {{cx - h, cy - h}, {cx + h, cy - h}, {cx + h, cy + h}, {cx - h, cy + h}};
}

inline ScenarioParams ScenarioParams::preset(ScenarioId id) {
  ScenarioParams p;
  p.scenario_id = id;
  switch (id) {
    case ScenarioId::S1:
      // LoS-dominant loop east of the BS
      p.k_factor_db = 12.0;
      p.n_scatterers = 8;
      p.los_mode = LosMode::Always;
      p.delay_spread_ns = 80.0;
      p.scatter_min_excess_ns = 20.0;
      p.trajectory = square_loop(35.0, 8.0, 25.0);
      break;
    case ScenarioId::S2:
      // rich scattering, no direct path, south-west sector
      p.k_factor_db = 0.0;
      p.n_scatterers = 40;
      p.los_mode = LosMode::Never;
      p.delay_spread_ns = 150.0;
      p.scatter_min_excess_ns = 45.0;
      p.trajectory = square_loop(-20.0, -28.0, 25.0);
      break;
    case ScenarioId::S3:
      // intermittent LoS, northern sector
      p.k_factor_db = 9.0;
      p.n_scatterers = 20;
      p.los_mode = LosMode::Alternating;
      p.mask_transitions = 4;
      p.delay_spread_ns = 120.0;
      p.scatter_min_excess_ns = 30.0;
      p.trajectory = square_loop(8.0, 38.0, 25.0);
      break;
  }
  return p;
}

inline double ScenarioParams::perimeter() const {
  if (trajectory.size() < 2) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i];
    const auto& b = trajectory[(i + 1) % trajectory.size()];
    total += std::hypot(b[0] - a[0], b[1] - a[1]);
  }
  return total;
}

inline void ScenarioParams::validate() const {
  if (perimeter() <= 1e-9) throw config_error("trajectory: degenerate loop (perimeter 0)");
  if (n_scatterers < 0) throw config_error("n_scatterers must be non-negative");
  if (speed_kmh <= 0) throw config_error("speed_kmh must be positive");
  if (snapshot_interval_s <= 0) throw config_error("snapshot_interval_s must be positive");
  if (bs_height_m < 0) throw config_error("bs_height_m must be non-negative");
  if (delay_spread_ns <= scatter_min_excess_ns + 10.0 && n_scatterers > 0)
    throw config_error("delay_spread_ns must exceed scatter_min_excess_ns by at least 10 ns");
  switch (scenario_id) {
    case ScenarioId::S1:
      if (los_mode != LosMode::Always) throw config_error("s1 requires los_mode=always");
      if (k_factor_db < 10.0) throw config_error("s1 requires k_factor_db >= 10");
      break;
    case ScenarioId::S2:
      if (los_mode != LosMode::Never) throw config_error("s2 requires los_mode=never");
      break;
    case ScenarioId::S3:
      if (los_mode != LosMode::Alternating)
        throw config_error("s3 requires los_mode=alternating");
      if (mask_transitions < 2 || mask_transitions % 2 != 0)
        throw config_error("s3 requires an even mask_transitions >= 2");
      break;
  }
}

inline bool ScenarioParams::los_visible(double arc_s) const {
  switch (los_mode) {
    case LosMode::Always: return true;
    case LosMode::Never: return false;
    case LosMode::Alternating: {
      const double per = perimeter();
      const double seg = per / mask_transitions;
      double s = std::fmod(arc_s, per);
      if (s < 0) s += per;
      const int idx = static_cast<int>(s / seg);
      return idx % 2 == 0;
    }
  }
  return true;
}

struct ChannelSnapshot {
  std::vector<float> ctf_re;  // 128 x 46 row-major
  std::vector<float> ctf_im;
  TimedPose pose;
  ScenarioId scenario_id = ScenarioId::S1;
};

// ---------------------------------------------------------------------------
// trajectory sampling

// Poses are spaced by speed * interval along the arc, continuing across lap
// boundaries, so the traversal speed is exact between every consecutive
// pair. Lap poses count floor(perimeter / spacing).
inline std::vector<TimedPose> make_trajectory(const ScenarioParams& params, int laps,
                                              std::uint64_t /*seed*/ = 0) {
  params.validate();
  if (laps < 1) throw config_error("laps must be >= 1");
  const double per = params.perimeter();
  const double spacing = params.speed_kmh / 3.6 * params.snapshot_interval_s;
  const auto per_lap = static_cast<std::size_t>(std::floor(per / spacing + 1e-9));
  if (per_lap == 0) throw config_error("trajectory shorter than one snapshot spacing");

  // cumulative arc lengths of the closed polyline
  const auto& wp = params.trajectory;
  std::vector<double> cum(wp.size() + 1, 0.0);
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const auto& a = wp[i];
    const auto& b = wp[(i + 1) % wp.size()];
    cum[i + 1] = cum[i] + std::hypot(b[0] - a[0], b[1] - a[1]);
  }

  auto point_at = [&](double s) -> std::array<double, 2> {
    std::size_t seg = 0;
    while (seg + 1 < cum.size() - 1 && cum[seg + 1] <= s) ++seg;
    const auto& a = wp[seg];
    const auto& b = wp[(seg + 1) % wp.size()];
    const double len = cum[seg + 1] - cum[seg];
    const double f = len > 0 ? (s - cum[seg]) / len : 0.0;
    return {a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1])};
  };

  std::vector<TimedPose> poses;
  poses.reserve(static_cast<std::size_t>(laps) * per_lap);
  for (std::size_t i = 0; i < static_cast<std::size_t>(laps) * per_lap; ++i) {
    const double s_total = static_cast<double>(i) * spacing;
    double s = std::fmod(s_total, per);
    const auto pt = point_at(s);
    TimedPose pose;
    pose.t = static_cast<double>(i) * params.snapshot_interval_s;
    pose.x = pt[0];
    pose.y = pt[1];
    pose.lap_index = static_cast<int>(i / per_lap) + 1;
    pose.arc_s = s;
    poses.push_back(pose);
  }
  return poses;
}

// ---------------------------------------------------------------------------
// beam patterns

// Steering direction of grid beam b in sine space; the 64-point grid
// oversamples the 32-element array by two.
inline double beam_steering_sin(int beam_index) {
  if (beam_index < 0 || beam_index >= static_cast<int>(kBeamGrid))
    throw contract_error("beam index " + std::to_string(beam_index) + " outside 0..63");
  return -1.0 + static_cast<double>(beam_index) / 32.0;
}

// Normalized Dirichlet-kernel response of a 32-element half-wavelength ULA
// steered at grid beam b; |gain| = 1 on the steering direction.
inline std::complex<double> beam_gain(int beam_index, double azimuth_rad) {
  const double u = std::sin(azimuth_rad);
  const double ub = beam_steering_sin(beam_index);
  constexpr double pi = 3.14159265358979323846;
  const double phi = pi * (u - ub);
  const double denom = std::sin(phi / 2.0);
  double ratio;
  if (std::abs(denom) < 1e-12) {
    ratio = std::cos(16.0 * phi) / std::cos(phi / 2.0);
  } else {
    ratio = std::sin(16.0 * phi) / (32.0 * denom);
  }
  return std::polar(1.0, 15.5 * phi) * ratio;
}

// ---------------------------------------------------------------------------
// scenario geometry (fixed per seed, so the channel is a deterministic
// function of position and fingerprinting is stable across laps)

inline double los_delay_seconds(const TimedPose& pose, const ScenarioParams& params) {
  const double d = std::sqrt(pose.x * pose.x + pose.y * pose.y +
                             params.bs_height_m * params.bs_height_m);
  return d / kSpeedOfLight;
}

struct Scatterer {
  double x = 0.0, y = 0.0;        // ground level
  double amplitude = 0.0;         // shared magnitude across blocks
  std::array<double, kBlocks> block_phase{};  // independent per block
};

struct ScenarioGeometry {
  std::vector<Scatterer> scatterers;
  // (1 + eps) gain calibration per block and per-block beam
  std::vector<std::complex<double>> block_beam_gain;  // kBlocks * kBeamsPerBlock
  double los_amplitude = 0.0;
};

namespace detail {

inline double path_excess_m(double sx, double sy, double px, double py, double bs_h) {
  const double d_bs_s = std::sqrt(sx * sx + sy * sy + bs_h * bs_h);
  const double d_s_p = std::hypot(px - sx, py - sy);
  const double d_bs_p = std::sqrt(px * px + py * py + bs_h * bs_h);
  return d_bs_s + d_s_p - d_bs_p;
}

}  // namespace detail

inline ScenarioGeometry make_scenario_geometry(const ScenarioParams& params, Rng rng) {
  params.validate();
  ScenarioGeometry geom;

  double cx = 0.0, cy = 0.0;
  for (const auto& w : params.trajectory) {
    cx += w[0];
    cy += w[1];
  }
  cx /= static_cast<double>(params.trajectory.size());
  cy /= static_cast<double>(params.trajectory.size());

  Rng scatter_rng = rng.stream("scatterers");
  const double min_excess_m = params.scatter_min_excess_ns * 1e-9 * kSpeedOfLight;
  const double max_excess_m = params.delay_spread_ns * 1e-9 * kSpeedOfLight;
  const double window_margin_m = 0.85 * kUnambiguousDelaySeconds * kSpeedOfLight;

  for (int s = 0; s < params.n_scatterers; ++s) {
    bool placed = false;
    for (int attempt = 0; attempt < 500 && !placed; ++attempt) {
      const double bearing = scatter_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      const double target = scatter_rng.uniform(min_excess_m + 3.0, max_excess_m);
      // excess delay at the centroid grows monotonically with radial
      // distance; bisect for the target
      double lo = 0.05, hi = 400.0;
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double sx = cx + mid * std::cos(bearing);
        const double sy = cy + mid * std::sin(bearing);
        const double e = detail::path_excess_m(sx, sy, cx, cy, params.bs_height_m);
        (e < target ? lo : hi) = mid;
      }
      const double r = 0.5 * (lo + hi);
      const double sx = cx + r * std::cos(bearing);
      const double sy = cy + r * std::sin(bearing);
      bool ok = true;
      for (const auto& w : params.trajectory) {
        const double e = detail::path_excess_m(sx, sy, w[0], w[1], params.bs_height_m);
        if (e < min_excess_m || e > window_margin_m) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      Scatterer sc;
      sc.x = sx;
      sc.y = sy;
      for (auto& ph : sc.block_phase)
        ph = scatter_rng.uniform(0.0, 2.0 * 3.14159265358979323846);
      geom.scatterers.push_back(sc);
      placed = true;
    }
    if (!placed)
      throw config_error("unable to place scatterer " + std::to_string(s) +
                         " within the delay constraints; relax delay_spread_ns");
  }

  // Rayleigh magnitudes normalized so total scatter power is exactly one;
  // the K-factor is then exact by construction.
  Rng amp_rng = rng.stream("amplitudes");
  double total = 0.0;
  for (auto& sc : geom.scatterers) {
    const double re = amp_rng.normal();
    const double im = amp_rng.normal();
    sc.amplitude = std::sqrt(re * re + im * im);
    total += sc.amplitude * sc.amplitude;
  }
  if (total > 0) {
    const double inv = 1.0 / std::sqrt(total);
    for (auto& sc : geom.scatterers) sc.amplitude *= inv;
  }
  geom.los_amplitude = std::sqrt(std::pow(10.0, params.k_factor_db / 10.0));

  Rng block_rng = rng.stream("block-gains");
  geom.block_beam_gain.resize(kBlocks * kBeamsPerBlock);
  for (auto& g : geom.block_beam_gain) {
    const double re = block_rng.normal() / std::sqrt(2.0);
    const double im = block_rng.normal() / std::sqrt(2.0);
    g = std::complex<double>(1.0 + params.block_gain_sigma * re,
                             params.block_gain_sigma * im);
  }
  return geom;
}

// ---------------------------------------------------------------------------
// snapshot synthesis

// ctf[m, k] = sum over paths of alpha_p * B_m(theta_p) * exp(-j 2 pi f_k tau_p)
// plus complex measurement noise. All path delays must fall inside the
// unambiguous window of the 46-bin IFFT. Pure given (pose, params, geometry,
// per-snapshot rng stream).
inline ChannelSnapshot synth_ctf(const TimedPose& pose, const ScenarioParams& params,
                                 const ScenarioGeometry& geom, Rng rng) {
  const double range_2d = std::hypot(pose.x, pose.y);
  if (range_2d > 1000.0)
    throw contract_error("synth_ctf: pose farther than 1 km from the BS");

  struct Path {
    std::complex<double> amp;  // includes carrier phase
    double tau = 0.0;          // after timing advance
    double u = 0.0;            // sin(azimuth at BS)
    bool per_block_phase = false;
    const std::array<double, kBlocks>* block_phase = nullptr;
  };

  const double tau_los = los_delay_seconds(pose, params);
  const double tau_ref = params.timing_advance ? tau_los : 0.0;
  constexpr double two_pi = 6.28318530717958647692;

  std::vector<Path> paths;
  paths.reserve(geom.scatterers.size() + 1);
  if (params.los_visible(pose.arc_s)) {
    Path p;
    p.amp = std::polar(geom.los_amplitude, -two_pi * kCarrierHz * tau_los);
    p.tau = tau_los - tau_ref;
    p.u = std::sin(std::atan2(pose.y, pose.x));
    paths.push_back(p);
  }
  for (const auto& sc : geom.scatterers) {
    const double d_bs_s =
        std::sqrt(sc.x * sc.x + sc.y * sc.y + params.bs_height_m * params.bs_height_m);
    const double d_s_ue = std::hypot(pose.x - sc.x, pose.y - sc.y);
    const double tau_abs = (d_bs_s + d_s_ue) / kSpeedOfLight;
    Path p;
    p.amp = std::polar(sc.amplitude, -two_pi * kCarrierHz * tau_abs);
    p.tau = tau_abs - tau_ref;
    p.u = std::sin(std::atan2(sc.y, sc.x));
    p.per_block_phase = true;
    p.block_phase = &sc.block_phase;
    paths.push_back(p);
  }

  double mean_path_power = 0.0;
  for (const auto& p : paths) {
    if (p.tau < -1e-15 || p.tau >= kUnambiguousDelaySeconds)
      throw data_error("synth_ctf: path delay " + std::to_string(p.tau * 1e9) +
                       " ns outside the unambiguous 460 ns window");
    mean_path_power += std::norm(p.amp);
  }
  mean_path_power /= static_cast<double>(kBeamsPerBlock);

  std::vector<std::complex<double>> ctf(kBeamRows * kSubcarriers, {0.0, 0.0});
  std::vector<std::complex<double>> beam_resp(kBeamsPerBlock);
  for (const auto& p : paths) {
    // blocks share one 32-pattern set: the even indices of the 64-beam grid
    for (std::size_t i = 0; i < kBeamsPerBlock; ++i) {
      constexpr double pi = 3.14159265358979323846;
      const double phi = pi * (p.u - beam_steering_sin(static_cast<int>(2 * i)));
      const double denom = std::sin(phi / 2.0);
      const double ratio = std::abs(denom) < 1e-12
                               ? std::cos(16.0 * phi) / std::cos(phi / 2.0)
                               : std::sin(16.0 * phi) / (32.0 * denom);
      beam_resp[i] = std::polar(1.0, 15.5 * phi) * ratio;
    }
    const std::complex<double> step = std::polar(1.0, -two_pi * kSubcarrierSpacingHz * p.tau);
    for (std::size_t g = 0; g < kBlocks; ++g) {
      const std::complex<double> block_amp =
          p.amp * (p.per_block_phase ? std::polar(1.0, (*p.block_phase)[g])
                                     : std::complex<double>(1.0, 0.0));
      for (std::size_t i = 0; i < kBeamsPerBlock; ++i) {
        const std::complex<double> coef =
            block_amp * geom.block_beam_gain[g * kBeamsPerBlock + i] * beam_resp[i];
        std::complex<double>* row = ctf.data() + (g * kBeamsPerBlock + i) * kSubcarriers;
        std::complex<double> phasor(1.0, 0.0);
        for (std::size_t k = 0; k < kSubcarriers; ++k) {
          row[k] += coef * phasor;
          phasor *= step;
        }
      }
    }
  }

  const double noise_power =
      std::pow(10.0, params.noise_floor_db / 10.0) * mean_path_power;
  const double noise_sigma = std::sqrt(noise_power / 2.0);
  ChannelSnapshot snap;
  snap.ctf_re.resize(ctf.size());
  snap.ctf_im.resize(ctf.size());
  for (std::size_t i = 0; i < ctf.size(); ++i) {
    snap.ctf_re[i] = static_cast<float>(ctf[i].real() + noise_sigma * rng.normal());
    snap.ctf_im[i] = static_cast<float>(ctf[i].imag() + noise_sigma * rng.normal());
  }
  snap.pose = pose;
  snap.scenario_id = params.scenario_id;
  return snap;
}

// Full drive: trajectory, fixed geometry, one noise substream per snapshot.
inline std::vector<ChannelSnapshot> generate_snapshots(const ScenarioParams& params, int laps,
                                                       std::uint64_t seed) {
  const auto poses = make_trajectory(params, laps, seed);
  const ScenarioGeometry geom = make_scenario_geometry(params, Rng(seed).stream("geometry"));
  const Rng noise_root = Rng(seed).stream("noise");
  std::vector<ChannelSnapshot> snaps;
  snaps.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i)
    snaps.push_back(synth_ctf(poses[i], params, geom, noise_root.stream(i)));
  return snaps;
}

}  // namespace radioloc
