#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radioloc/channel.hpp"
#include "radioloc/errors.hpp"
#include "radioloc/preprocess.hpp"
#include "radioloc/router.hpp"

namespace radioloc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kFormatVersion = "1.0";

// ---------------------------------------------------------------------------
// blobs: raw little-endian 32-bit floats, row-major; shapes live in the
// manifest only

namespace detail {

inline std::uint64_t fnv1a_bytes(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::vector<unsigned char> pack_f32le(const std::vector<float>& v) {
  std::vector<unsigned char> bytes(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t u;
    static_assert(sizeof(u) == sizeof(float));
    std::memcpy(&u, &v[i], 4);
    bytes[4 * i + 0] = static_cast<unsigned char>(u & 0xFF);
    bytes[4 * i + 1] = static_cast<unsigned char>((u >> 8) & 0xFF);
    bytes[4 * i + 2] = static_cast<unsigned char>((u >> 16) & 0xFF);
    bytes[4 * i + 3] = static_cast<unsigned char>((u >> 24) & 0xFF);
  }
  return bytes;
}

inline std::vector<float> unpack_f32le(const std::vector<unsigned char>& bytes) {
  if (bytes.size() % 4 != 0) throw data_error("blob size is not a multiple of 4 bytes");
  std::vector<float> v(bytes.size() / 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const std::uint32_t u = static_cast<std::uint32_t>(bytes[4 * i + 0]) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 1]) << 8) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 2]) << 16) |
                            (static_cast<std::uint32_t>(bytes[4 * i + 3]) << 24);
    std::memcpy(&v[i], &u, 4);
  }
  return v;
}

inline void write_bytes_atomic(const fs::path& path, const std::vector<unsigned char>& bytes) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw data_error("short write to " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::vector<unsigned char> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

}  // namespace detail

inline std::string blob_digest(const std::vector<float>& v) {
  const auto bytes = detail::pack_f32le(v);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(detail::fnv1a_bytes(bytes.data(), bytes.size())));
  return buf;
}

inline void write_blob(const fs::path& path, const std::vector<float>& v) {
  detail::write_bytes_atomic(path, detail::pack_f32le(v));
}

inline std::vector<float> read_blob(const fs::path& path, std::size_t expected_count,
                                    const std::string& expected_digest) {
  auto v = detail::unpack_f32le(detail::read_bytes(path));
  if (v.size() != expected_count)
    throw data_error("blob " + path.string() + " holds " + std::to_string(v.size()) +
                     " values, manifest says " + std::to_string(expected_count));
  if (blob_digest(v) != expected_digest)
    throw data_error("digest mismatch for " + path.string() + "; blob is corrupted");
  return v;
}

inline void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw data_error("cannot write " + tmp.string());
    out << text;
  }
  fs::rename(tmp, path);
}

namespace detail {

inline void check_format_version(const ordered_json& manifest, const std::string& what) {
  if (!manifest.contains("format_version"))
    throw data_error(what + ": manifest has no format_version");
  const std::string v = manifest["format_version"];
  const std::string major = v.substr(0, v.find('.'));
  const std::string expect_major =
      std::string(kFormatVersion).substr(0, std::string(kFormatVersion).find('.'));
  if (major != expect_major)
    throw config_error(what + ": format version " + v + " is not supported (expected major " +
                       expect_major + "); migrate the file first");
}

inline ordered_json scalers_to_json(const Scalers& s) {
  ordered_json j;
  j["input_mean"] = s.input_mean;
  j["input_std"] = s.input_std;
  j["label_mean"] = s.label_mean;
  j["label_std"] = s.label_std;
  return j;
}

inline Scalers scalers_from_json(const ordered_json& j) {
  Scalers s;
  s.input_mean = j.at("input_mean").get<std::vector<float>>();
  s.input_std = j.at("input_std").get<std::vector<float>>();
  s.label_mean = j.at("label_mean").get<std::array<float, 2>>();
  s.label_std = j.at("label_std").get<std::array<float, 2>>();
  s.fitted = true;
  return s;
}

inline ordered_json load_manifest(const fs::path& dir, const std::string& what) {
  const fs::path mf = dir / "manifest.json";
  std::ifstream in(mf);
  if (!in) throw data_error(what + ": cannot open " + mf.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw data_error(what + ": malformed manifest: " + e.what());
  }
  check_format_version(j, what);
  return j;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// dataset directory format

inline void save_dataset(const Dataset& ds, const fs::path& dir,
                         const std::map<std::string, std::string>& gen_meta = {}) {
  fs::create_directories(dir);
  const std::size_t n = ds.samples.size();
  const std::size_t f = kBeamRows * kSubcarriers;

  std::vector<float> cir(n * f), labels(n * 2), t(n), lap(n), scenario(n);
  for (std::size_t i = 0; i < n; ++i) {
    const CirSample& s = ds.samples[i];
    if (s.standardized)
      throw contract_error("save_dataset: datasets hold raw samples, not standardized ones");
    std::copy(s.cir.begin(), s.cir.end(), cir.begin() + i * f);
    labels[2 * i] = s.label_x;
    labels[2 * i + 1] = s.label_y;
    t[i] = static_cast<float>(s.t);
    lap[i] = static_cast<float>(s.lap_index);
    scenario[i] = static_cast<float>(static_cast<int>(s.scenario_id));
  }

  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = "dataset";
  manifest["scenario"] = ds.scenario;
  manifest["laps"] = ds.laps;
  manifest["seed"] = ds.seed;
  manifest["n_samples"] = n;

  ordered_json arrays;
  auto put = [&](const char* name, const std::vector<float>& v,
                 std::vector<std::size_t> shape) {
    write_blob(dir / (std::string(name) + ".f32"), v);
    ordered_json a;
    a["shape"] = shape;
    a["dtype"] = "f32le";
    a["file"] = std::string(name) + ".f32";
    a["digest"] = blob_digest(v);
    arrays[name] = a;
  };
  put("cir", cir, {n, kBeamRows, kSubcarriers});
  put("labels", labels, {n, 2});
  put("t", t, {n});
  put("lap_index", lap, {n});
  put("scenario_id", scenario, {n});
  manifest["arrays"] = arrays;

  ordered_json splits;
  splits["train"] = ds.train_idx;
  splits["val"] = ds.val_idx;
  splits["test"] = ds.test_idx;
  manifest["splits"] = splits;
  manifest["scalers"] = detail::scalers_to_json(ds.scalers);
  manifest["generation"] = gen_meta;

  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Dataset load_dataset(const fs::path& dir) {
  const ordered_json manifest = detail::load_manifest(dir, "dataset");
  if (manifest.at("kind") != "dataset")
    throw data_error("load_dataset: " + dir.string() + " is not a dataset directory");
  Dataset ds;
  ds.scenario = manifest.at("scenario");
  ds.laps = manifest.at("laps");
  ds.seed = manifest.at("seed");
  const std::size_t n = manifest.at("n_samples");
  const std::size_t f = kBeamRows * kSubcarriers;

  auto read_array = [&](const char* name, std::size_t count) {
    const auto& a = manifest.at("arrays").at(name);
    return read_blob(dir / a.at("file").get<std::string>(), count,
                     a.at("digest").get<std::string>());
  };
  const auto cir = read_array("cir", n * f);
  const auto labels = read_array("labels", n * 2);
  const auto t = read_array("t", n);
  const auto lap = read_array("lap_index", n);
  const auto scenario = read_array("scenario_id", n);

  ds.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    CirSample& s = ds.samples[i];
    s.cir.assign(cir.begin() + i * f, cir.begin() + (i + 1) * f);
    s.label_x = labels[2 * i];
    s.label_y = labels[2 * i + 1];
    s.t = t[i];
    s.lap_index = static_cast<int>(lap[i]);
    s.scenario_id = static_cast<ScenarioId>(static_cast<int>(scenario[i]));
  }
  ds.train_idx = manifest.at("splits").at("train").get<std::vector<std::size_t>>();
  ds.val_idx = manifest.at("splits").at("val").get<std::vector<std::size_t>>();
  ds.test_idx = manifest.at("splits").at("test").get<std::vector<std::size_t>>();
  ds.scalers = detail::scalers_from_json(manifest.at("scalers"));
  ds.gen_meta = manifest.at("generation").get<std::map<std::string, std::string>>();
  return ds;
}

// ---------------------------------------------------------------------------
// checkpoints

struct TrainingMeta {
  int epochs = 0;
  int batch_size = 0;
  float learning_rate = 0.0f;
  std::uint64_t seed = 0;
  int best_epoch = -1;
  double best_val_metric = 0.0;
  double wall_seconds = 0.0;
};

namespace detail {

inline ordered_json training_to_json(const TrainingMeta& m) {
  ordered_json j;
  j["epochs"] = m.epochs;
  j["batch_size"] = m.batch_size;
  j["learning_rate"] = m.learning_rate;
  j["seed"] = m.seed;
  j["best_epoch"] = m.best_epoch;
  j["best_val_metric"] = m.best_val_metric;
  j["wall_seconds"] = m.wall_seconds;
  return j;
}

inline TrainingMeta training_from_json(const ordered_json& j) {
  TrainingMeta m;
  m.epochs = j.at("epochs");
  m.batch_size = j.at("batch_size");
  m.learning_rate = j.at("learning_rate");
  m.seed = j.at("seed");
  m.best_epoch = j.at("best_epoch");
  m.best_val_metric = j.at("best_val_metric");
  m.wall_seconds = j.at("wall_seconds");
  return m;
}

template <typename T>
void write_param_blobs(const fs::path& dir,
                       const std::vector<std::pair<std::string, Tensor<T>>>& params,
                       ordered_json& blobs, long long& param_count) {
  for (const auto& [name, tensor] : params) {
    std::vector<float> v(tensor.data().begin(), tensor.data().end());
    const std::string file = name + ".f32";
    write_blob(dir / file, v);
    ordered_json b;
    b["shape"] = tensor.shape();
    b["file"] = file;
    b["digest"] = blob_digest(v);
    blobs[name] = b;
    param_count += static_cast<long long>(v.size());
  }
}

inline std::vector<float> read_param_blob(const fs::path& dir, const ordered_json& blobs,
                                          const std::string& name, std::size_t expected) {
  if (!blobs.contains(name))
    throw data_error("checkpoint: missing parameter blob '" + name + "'");
  const auto& b = blobs.at(name);
  return read_blob(dir / b.at("file").get<std::string>(), expected,
                   b.at("digest").get<std::string>());
}

inline ordered_json model_config_to_json(const ModelConfig& c) {
  ordered_json j;
  j["encoder_layers"] = c.encoder_layers;
  j["use_layer_norm"] = c.use_layer_norm;
  j["use_max_pool"] = c.use_max_pool;
  j["d_model"] = c.d_model;
  j["seq_len"] = c.seq_len;
  j["n_heads"] = c.n_heads;
  j["d_ff"] = c.d_ff;
  j["dropout_rate"] = c.dropout_rate;
  j["fcnn_hidden"] = c.fcnn_hidden;
  j["pool_segment"] = c.pool_segment;
  return j;
}

inline ModelConfig model_config_from_json(const ordered_json& j) {
  ModelConfig c;
  c.encoder_layers = j.at("encoder_layers");
  c.use_layer_norm = j.at("use_layer_norm");
  c.use_max_pool = j.at("use_max_pool");
  c.d_model = j.at("d_model");
  c.seq_len = j.at("seq_len");
  c.n_heads = j.at("n_heads");
  c.d_ff = j.at("d_ff");
  c.dropout_rate = j.at("dropout_rate");
  c.fcnn_hidden = j.at("fcnn_hidden");
  c.pool_segment = j.at("pool_segment");
  c.validate();
  return c;
}

}  // namespace detail

inline void save_regressor_checkpoint(const Specialist& sp, const TrainingMeta& meta,
                                      const fs::path& dir) {
  fs::create_directories(dir);
  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = "regressor";
  manifest["model_config"] = detail::model_config_to_json(sp.config);
  manifest["scalers"] = detail::scalers_to_json(sp.scalers);
  manifest["training"] = detail::training_to_json(meta);
  ordered_json blobs;
  long long param_count = 0;
  detail::write_param_blobs(dir, sp.weights.named_parameters(), blobs, param_count);
  manifest["param_count"] = param_count;
  manifest["blobs"] = blobs;
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline Specialist load_regressor_checkpoint(const fs::path& dir,
                                            TrainingMeta* meta_out = nullptr) {
  const ordered_json manifest = detail::load_manifest(dir, "checkpoint");
  if (manifest.at("kind") != "regressor")
    throw data_error("load_regressor_checkpoint: " + dir.string() + " is not a regressor");
  Specialist sp;
  sp.config = detail::model_config_from_json(manifest.at("model_config"));
  sp.scalers = detail::scalers_from_json(manifest.at("scalers"));
  sp.weights = ModelWeights<float>::init(sp.config, Rng(0));
  const auto& blobs = manifest.at("blobs");
  long long loaded = 0;
  for (auto& [name, tensor] : sp.weights.named_parameters()) {
    auto v = detail::read_param_blob(dir, blobs, name, tensor.size());
    std::copy(v.begin(), v.end(), const_cast<Tensor<float>&>(tensor).data().begin());
    loaded += static_cast<long long>(v.size());
  }
  if (loaded != manifest.at("param_count").get<long long>())
    throw data_error("checkpoint: param_count disagrees with the blob contents");
  if (meta_out) *meta_out = detail::training_from_json(manifest.at("training"));
  return sp;
}

inline void save_router_checkpoint(const TrainedRouter& router, const TrainingMeta& meta,
                                   const fs::path& dir) {
  fs::create_directories(dir);
  ordered_json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = "router";
  ordered_json rc;
  rc["variant"] = to_string(router.config.variant);
  rc["bin_index"] = router.config.bin_index;
  rc["n_classes"] = router.config.n_classes;
  rc["seq_len"] = router.config.seq_len;
  rc["d_model"] = router.config.d_model;
  manifest["router_config"] = rc;
  manifest["scalers"] = detail::scalers_to_json(router.scalers);
  manifest["training"] = detail::training_to_json(meta);
  ordered_json blobs;
  long long param_count = 0;
  detail::write_param_blobs(dir, router.weights.named_parameters(), blobs, param_count);
  manifest["param_count"] = param_count;
  manifest["blobs"] = blobs;
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

inline TrainedRouter load_router_checkpoint(const fs::path& dir,
                                            TrainingMeta* meta_out = nullptr) {
  const ordered_json manifest = detail::load_manifest(dir, "checkpoint");
  if (manifest.at("kind") != "router")
    throw data_error("load_router_checkpoint: " + dir.string() + " is not a router");
  TrainedRouter router;
  const auto& rc = manifest.at("router_config");
  router.config.variant = parse_router_variant(rc.at("variant").get<std::string>());
  router.config.bin_index = rc.at("bin_index");
  router.config.n_classes = rc.at("n_classes");
  router.config.seq_len = rc.at("seq_len");
  router.config.d_model = rc.at("d_model");
  router.config.validate();
  router.scalers = detail::scalers_from_json(manifest.at("scalers"));
  router.weights = RouterWeights<float>::init(router.config, Rng(0));
  const auto& blobs = manifest.at("blobs");
  long long loaded = 0;
  for (auto& [name, tensor] : router.weights.named_parameters()) {
    auto v = detail::read_param_blob(dir, blobs, name, tensor.size());
    std::copy(v.begin(), v.end(), const_cast<Tensor<float>&>(tensor).data().begin());
    loaded += static_cast<long long>(v.size());
  }
  if (loaded != manifest.at("param_count").get<long long>())
    throw data_error("checkpoint: param_count disagrees with the blob contents");
  if (meta_out) *meta_out = detail::training_from_json(manifest.at("training"));
  return router;
}

// Loads the manifest only and reports the checkpoint kind.
inline std::string checkpoint_kind(const fs::path& dir) {
  return detail::load_manifest(dir, "checkpoint").at("kind");
}

// ---------------------------------------------------------------------------
// plain-text key = value run configuration

inline std::map<std::string, std::string> parse_keyvalue_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return std::string();
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error(path.string() + ":" + std::to_string(line_no) +
                         ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw config_error(path.string() + ":" + std::to_string(line_no) + ": empty key");
    out[key] = value;
  }
  return out;
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': '" + v + "' is not a number");
  }
}

inline int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const int i = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw config_error("config key '" + key + "': '" + v + "' is not an integer");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  throw config_error("config key '" + key + "': '" + v + "' is not on/off");
}

inline std::vector<std::array<double, 2>> parse_waypoints(const std::string& key,
                                                          const std::string& v) {
  std::vector<std::array<double, 2>> out;
  std::stringstream ss(v);
  std::string pair;
  while (std::getline(ss, pair, ';')) {
    const auto comma = pair.find(',');
    if (comma == std::string::npos)
      throw config_error("config key '" + key + "': waypoint '" + pair + "' is not 'x,y'");
    out.push_back({parse_double(key, pair.substr(0, comma)),
                   parse_double(key, pair.substr(comma + 1))});
  }
  if (out.size() < 3)
    throw config_error("config key '" + key + "': need at least 3 waypoints");
  return out;
}

}  // namespace detail

// Applies key = value overrides onto scenario parameters; unknown keys are
// rejected by name.
inline void apply_scenario_overrides(ScenarioParams& p,
                                     const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (key == "scenario") {
      if (parse_scenario(value) != p.scenario_id)
        throw config_error("config key 'scenario' conflicts with the --scenario flag");
    } else if (key == "k_factor_db") {
      p.k_factor_db = detail::parse_double(key, value);
    } else if (key == "n_scatterers") {
      p.n_scatterers = detail::parse_int(key, value);
    } else if (key == "los_mode") {
      p.los_mode = parse_los_mode(value);
    } else if (key == "mask_transitions") {
      p.mask_transitions = detail::parse_int(key, value);
    } else if (key == "delay_spread_ns") {
      p.delay_spread_ns = detail::parse_double(key, value);
    } else if (key == "scatter_min_excess_ns") {
      p.scatter_min_excess_ns = detail::parse_double(key, value);
    } else if (key == "noise_floor_db") {
      p.noise_floor_db = detail::parse_double(key, value);
    } else if (key == "trajectory") {
      p.trajectory = detail::parse_waypoints(key, value);
    } else if (key == "bs_height_m") {
      p.bs_height_m = detail::parse_double(key, value);
    } else if (key == "speed_kmh") {
      p.speed_kmh = detail::parse_double(key, value);
    } else if (key == "snapshot_interval_s") {
      p.snapshot_interval_s = detail::parse_double(key, value);
    } else if (key == "timing_advance") {
      p.timing_advance = detail::parse_bool(key, value);
    } else if (key == "block_gain_sigma") {
      p.block_gain_sigma = detail::parse_double(key, value);
    } else {
      throw config_error("unknown config key '" + key + "'");
    }
  }
}

// Text echo of every scenario field, embedded in dataset manifests.
inline std::map<std::string, std::string> scenario_to_keyvalues(const ScenarioParams& p) {
  auto fmt = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  std::map<std::string, std::string> kv;
  kv["scenario"] = to_string(p.scenario_id);
  kv["k_factor_db"] = fmt(p.k_factor_db);
  kv["n_scatterers"] = std::to_string(p.n_scatterers);
  kv["los_mode"] = to_string(p.los_mode);
  kv["mask_transitions"] = std::to_string(p.mask_transitions);
  kv["delay_spread_ns"] = fmt(p.delay_spread_ns);
  kv["scatter_min_excess_ns"] = fmt(p.scatter_min_excess_ns);
  kv["noise_floor_db"] = fmt(p.noise_floor_db);
  std::string traj;
  for (std::size_t i = 0; i < p.trajectory.size(); ++i) {
    if (i) traj += ";";
    traj += fmt(p.trajectory[i][0]) + "," + fmt(p.trajectory[i][1]);
  }
  kv["trajectory"] = traj;
  kv["bs_height_m"] = fmt(p.bs_height_m);
  kv["speed_kmh"] = fmt(p.speed_kmh);
  kv["snapshot_interval_s"] = fmt(p.snapshot_interval_s);
  kv["timing_advance"] = p.timing_advance ? "on" : "off";
  kv["block_gain_sigma"] = fmt(p.block_gain_sigma);
  return kv;
}

}  // namespace radioloc
