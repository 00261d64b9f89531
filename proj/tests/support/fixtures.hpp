#pragma once

// Shared builders for small synthetic datasets and untrained models.

#include <filesystem>
#include <string>
#include <vector>

#include "radioloc/channel.hpp"
#include "radioloc/model.hpp"
#include "radioloc/preprocess.hpp"
#include "radioloc/rng.hpp"
#include "radioloc/router.hpp"

namespace testsupport {

inline radioloc::ChannelSnapshot noise_snapshot(radioloc::Rng& rng, int lap, double x, double y,
                                                radioloc::ScenarioId id = radioloc::ScenarioId::S1) {
  radioloc::ChannelSnapshot snap;
  snap.ctf_re.resize(radioloc::kBeamRows * radioloc::kSubcarriers);
  snap.ctf_im.resize(radioloc::kBeamRows * radioloc::kSubcarriers);
  for (auto& v : snap.ctf_re) v = static_cast<float>(rng.normal());
  for (auto& v : snap.ctf_im) v = static_cast<float>(rng.normal());
  snap.pose.lap_index = lap;
  snap.pose.x = x;
  snap.pose.y = y;
  snap.scenario_id = id;
  return snap;
}

// laps x per_lap noise dataset with positions on a line
inline radioloc::Dataset noise_dataset(int laps, int per_lap, std::uint64_t seed,
                                       radioloc::ScenarioId id = radioloc::ScenarioId::S1,
                                       double val_fraction = 0.1) {
  radioloc::Rng rng(seed);
  std::vector<radioloc::ChannelSnapshot> snaps;
  for (int lap = 1; lap <= laps; ++lap)
    for (int i = 0; i < per_lap; ++i)
      snaps.push_back(noise_snapshot(rng, lap, 2.0 * i, 40.0 - i, id));
  return radioloc::build_dataset(snaps, laps, val_fraction, seed);
}

inline radioloc::Scalers identity_scalers() {
  radioloc::Scalers s;
  s.input_mean.assign(radioloc::kBeamRows * radioloc::kSubcarriers, 0.0f);
  s.input_std.assign(radioloc::kBeamRows * radioloc::kSubcarriers, 1.0f);
  s.fitted = true;
  return s;
}

inline radioloc::Specialist untrained_specialist(const radioloc::ModelConfig& cfg,
                                                 std::uint64_t seed,
                                                 const radioloc::Scalers& scalers) {
  radioloc::Specialist sp;
  sp.config = cfg;
  sp.weights = radioloc::ModelWeights<float>::init(cfg, radioloc::Rng(seed));
  sp.scalers = scalers;
  return sp;
}

inline radioloc::CirSample noise_sample(radioloc::Rng& rng,
                                        radioloc::ScenarioId id = radioloc::ScenarioId::S1) {
  radioloc::CirSample s;
  s.cir.resize(radioloc::kBeamRows * radioloc::kSubcarriers);
  for (auto& v : s.cir) v = std::abs(static_cast<float>(rng.normal()));
  s.scenario_id = id;
  return s;
}

// unique scratch directory under the build tree working dir
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("radioloc_test_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
