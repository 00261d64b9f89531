// radioloc: synthesize beam-space channel datasets, train attention
// regressors and the scenario router, and compare the three deployment
// methods.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "radioloc/channel.hpp"
#include "radioloc/io.hpp"
#include "radioloc/preprocess.hpp"
#include "radioloc/report.hpp"
#include "radioloc/router.hpp"
#include "radioloc/train.hpp"

namespace fs = std::filesystem;
using namespace radioloc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct ArchFlag {
  ModelConfig config;
};

// "el=3,ln=off,mp=on"
ModelConfig parse_arch(const std::string& text) {
  ModelConfig cfg;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos)
      throw config_error("--arch: expected key=value, got '" + part + "'");
    const std::string key = part.substr(0, eq);
    const std::string value = part.substr(eq + 1);
    if (key == "el") {
      cfg.encoder_layers = detail::parse_int("el", value);
    } else if (key == "ln") {
      cfg.use_layer_norm = detail::parse_bool("ln", value);
    } else if (key == "mp") {
      cfg.use_max_pool = detail::parse_bool("mp", value);
    } else {
      throw config_error("--arch: unknown key '" + key + "' (expected el, ln, mp)");
    }
  }
  cfg.validate();
  return cfg;
}

void write_curves_csv(const fs::path& path, const std::vector<double>& train,
                      const std::vector<double>& val) {
  std::ostringstream os;
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < train.size(); ++e) {
    os << (e + 1) << ',' << radioloc::detail::fmt_double(train[e]) << ',';
    if (e < val.size()) os << radioloc::detail::fmt_double(val[e]);
    os << '\n';
  }
  write_text_atomic(path, os.str());
}

int cmd_gen(const std::string& scenario, int laps, std::uint64_t seed, double val_fraction,
            const std::string& out, const std::string& config_file,
            const std::vector<std::string>& overrides) {
  ScenarioParams params = ScenarioParams::preset(parse_scenario(scenario));
  if (!config_file.empty())
    apply_scenario_overrides(params, parse_keyvalue_file(config_file));
  std::map<std::string, std::string> cli_kv;
  for (const auto& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos)
      throw config_error("--set: expected key=value, got '" + item + "'");
    cli_kv[item.substr(0, eq)] = item.substr(eq + 1);
  }
  apply_scenario_overrides(params, cli_kv);
  params.validate();

  std::printf("generating %s: laps=%d seed=%llu scatterers=%d los=%s\n",
              to_string(params.scenario_id).c_str(), laps,
              static_cast<unsigned long long>(seed), params.n_scatterers,
              to_string(params.los_mode).c_str());
  const auto snaps = generate_snapshots(params, laps, seed);
  Dataset ds = build_dataset(snaps, laps, val_fraction, seed);
  ds.gen_meta = scenario_to_keyvalues(params);
  save_dataset(ds, out, ds.gen_meta);
  std::printf("wrote %s: %zu snapshots (train %zu, val %zu, test %zu)\n", out.c_str(),
              ds.samples.size(), ds.train_idx.size(), ds.val_idx.size(), ds.test_idx.size());
  return 0;
}

int cmd_mix(const std::vector<std::string>& inputs, std::uint64_t seed, double val_fraction,
            const std::string& out) {
  std::vector<Dataset> loaded;
  loaded.reserve(inputs.size());
  for (const auto& dir : inputs) loaded.push_back(load_dataset(dir));
  std::vector<const Dataset*> sources;
  for (const auto& ds : loaded) sources.push_back(&ds);
  Dataset mixed = build_mixed_dataset(sources, val_fraction, seed);
  std::map<std::string, std::string> meta;
  for (std::size_t i = 0; i < inputs.size(); ++i)
    meta["source_" + std::to_string(i)] = inputs[i];
  mixed.gen_meta = meta;
  save_dataset(mixed, out, meta);
  std::printf("wrote %s: %zu snapshots from %zu sources (train %zu, val %zu, test %zu)\n",
              out.c_str(), mixed.samples.size(), inputs.size(), mixed.train_idx.size(),
              mixed.val_idx.size(), mixed.test_idx.size());
  return 0;
}

int cmd_train(const std::string& data, const std::string& arch, std::uint64_t seed, int epochs,
              int batch, double lr, const std::string& out) {
  const ModelConfig cfg = parse_arch(arch);
  const Dataset ds = load_dataset(data);
  TrainHyper hyper;
  hyper.epochs = epochs;
  hyper.batch_size = batch;
  hyper.learning_rate = static_cast<float>(lr);
  hyper.seed = seed;
  std::printf("training %s on %s (%zu train / %zu val), %d epochs, lr %g\n",
              cfg.arch_string().c_str(), data.c_str(), ds.train_idx.size(),
              ds.val_idx.size(), epochs, lr);
  const TrainResult run = train_model(ds, cfg, hyper);

  TrainingMeta meta;
  meta.epochs = hyper.epochs;
  meta.batch_size = hyper.batch_size;
  meta.learning_rate = hyper.learning_rate;
  meta.seed = seed;
  meta.best_epoch = run.best_epoch;
  meta.best_val_metric = run.best_val_mse;
  meta.wall_seconds = run.wall_seconds;
  save_regressor_checkpoint(run.model, meta, out);
  write_curves_csv(fs::path(out) / "loss_curves.csv", run.train_curve, run.val_curve);

  std::printf("final train MSE %.6f, best val MSE %.6f (epoch %d), parameters %lld\n",
              run.train_curve.back(), run.best_val_mse, run.best_epoch,
              count_params(cfg));
  std::printf("wrote checkpoint %s\n", out.c_str());
  return 0;
}

int cmd_train_router(const std::string& data, const std::string& variant, int bin_index,
                     std::uint64_t seed, int epochs, int batch, double lr,
                     const std::string& out) {
  RouterConfig cfg;
  cfg.variant = parse_router_variant(variant);
  if (cfg.variant == RouterVariant::SingleBin) {
    if (bin_index < 0)
      throw config_error("--bin-index is required with --variant bin");
    cfg.bin_index = bin_index;
  } else if (bin_index >= 0) {
    throw config_error("--bin-index only applies to --variant bin");
  }
  cfg.validate();

  const Dataset mixed = load_dataset(data);
  if (mixed.scenario != "mixed")
    std::printf("note: %s is not a mixed dataset; the router needs all scenarios\n",
                data.c_str());
  TrainHyper hyper;
  hyper.epochs = epochs;
  hyper.batch_size = batch;
  hyper.learning_rate = static_cast<float>(lr);
  hyper.seed = seed;
  const RouterTrainResult run = train_router(mixed, cfg, hyper);

  std::vector<const CirSample*> test;
  for (auto i : mixed.test_idx) test.push_back(&mixed.samples[i]);
  const double acc = router_accuracy(run.router, test);

  TrainingMeta meta;
  meta.epochs = hyper.epochs;
  meta.batch_size = hyper.batch_size;
  meta.learning_rate = hyper.learning_rate;
  meta.seed = seed;
  meta.best_epoch = run.best_epoch;
  meta.best_val_metric = run.best_val_ce;
  meta.wall_seconds = run.wall_seconds;
  save_router_checkpoint(run.router, meta, out);
  write_curves_csv(fs::path(out) / "loss_curves.csv", run.train_curve, run.val_curve);

  std::printf("router %s: parameters %lld, test accuracy %.4f\n",
              to_string(cfg.variant).c_str(), count_router_params(cfg), acc);
  std::printf("wrote checkpoint %s\n", out.c_str());
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data, const std::string& out) {
  const Specialist sp = load_regressor_checkpoint(ckpt);
  const Dataset ds = load_dataset(data);
  const double test_mee = evaluate_mee(sp, ds, ds.test_idx);
  std::printf("test-lap MEE: %.4f m over %zu snapshots (%s on %s)\n", test_mee,
              ds.test_idx.size(), ckpt.c_str(), data.c_str());
  if (!out.empty()) {
    ordered_json j;
    j["checkpoint"] = ckpt;
    j["dataset"] = data;
    j["n_test"] = ds.test_idx.size();
    j["mee_m"] = test_mee;
    write_text_atomic(out, j.dump(2) + "\n");
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

ScenarioId parse_declaration(const std::string& v, const char* flag) {
  try {
    return parse_scenario(v);
  } catch (const config_error&) {
    throw config_error(std::string(flag) + ": '" + v + "' is not s1, s2 or s3");
  }
}

int cmd_inspect(const std::string& data, std::size_t index, const std::string& out) {
  const Dataset ds = load_dataset(data);
  if (index >= ds.samples.size())
    throw config_error("--index " + std::to_string(index) + " outside 0.." +
                       std::to_string(ds.samples.size() - 1));
  const CirSample& s = ds.samples[index];

  // long-form CIR profile: one row per (beam, delay bin)
  std::ostringstream os;
  os << "beam,delay_bin,amplitude\n";
  for (std::size_t r = 0; r < kBeamRows; ++r)
    for (std::size_t k = 0; k < kSubcarriers; ++k)
      os << r << ',' << k << ','
         << radioloc::detail::fmt_double(s.cir[r * kSubcarriers + k]) << '\n';
  write_text_atomic(out, os.str());

  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t r = 0; r < kBeamRows; ++r) {
    double e = 0.0;
    for (std::size_t k = 0; k < kSubcarriers; ++k) {
      const double v = s.cir[r * kSubcarriers + k];
      e += v * v;
    }
    if (e > best_e) {
      best_e = e;
      best = r;
    }
  }
  std::printf("snapshot %zu: scenario %s, lap %d, position (%.2f, %.2f) m\n", index,
              to_string(s.scenario_id).c_str(), s.lap_index, s.label_x, s.label_y);
  std::printf("strongest beam %zu; wrote power-delay profile to %s\n", best, out.c_str());
  return 0;
}

int cmd_compare(const std::string& method, const std::string& generalized,
                const std::string& spec_s1, const std::string& spec_s2,
                const std::string& spec_s3, const std::string& router_path,
                const std::string& data_s1, const std::string& data_s2,
                const std::string& data_s3, const std::string& declare_s1,
                const std::string& declare_s2, const std::string& declare_s3,
                int stream_block, const std::string& out_prefix,
                const std::string& trace_path) {
  std::set<int> methods;
  if (method == "all") {
    methods = {1, 2, 3};
  } else if (method == "1" || method == "2" || method == "3") {
    methods = {std::stoi(method)};
  } else {
    throw config_error("--method must be 1, 2, 3 or all");
  }

  std::vector<std::string> missing;
  auto need = [&missing](const std::string& v, const char* what) {
    if (v.empty()) missing.push_back(what);
  };
  need(data_s1, "--data-s1");
  need(data_s2, "--data-s2");
  need(data_s3, "--data-s3");
  if (methods.count(1)) need(generalized, "--generalized");
  if (methods.count(2) || methods.count(3)) {
    need(spec_s1, "--spec-s1");
    need(spec_s2, "--spec-s2");
    need(spec_s3, "--spec-s3");
  }
  if (methods.count(3)) need(router_path, "--router");
  if (methods.count(2)) {
    need(declare_s1, "--declare-s1");
    need(declare_s2, "--declare-s2");
    need(declare_s3, "--declare-s3");
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw config_error("compare --method " + method + " is missing: " + list);
  }

  const Dataset d1 = load_dataset(data_s1);
  const Dataset d2 = load_dataset(data_s2);
  const Dataset d3 = load_dataset(data_s3);
  CompareInputs in;
  in.datasets = {{ScenarioId::S1, &d1}, {ScenarioId::S2, &d2}, {ScenarioId::S3, &d3}};
  in.methods = methods;
  in.stream_block = stream_block;
  if (methods.count(1)) in.generalized = load_regressor_checkpoint(generalized);
  if (methods.count(2) || methods.count(3)) {
    in.specialists.emplace(ScenarioId::S1, load_regressor_checkpoint(spec_s1));
    in.specialists.emplace(ScenarioId::S2, load_regressor_checkpoint(spec_s2));
    in.specialists.emplace(ScenarioId::S3, load_regressor_checkpoint(spec_s3));
  }
  if (methods.count(3)) in.router = load_router_checkpoint(router_path);
  if (methods.count(2)) {
    in.method2_declaration[ScenarioId::S1] = parse_declaration(declare_s1, "--declare-s1");
    in.method2_declaration[ScenarioId::S2] = parse_declaration(declare_s2, "--declare-s2");
    in.method2_declaration[ScenarioId::S3] = parse_declaration(declare_s3, "--declare-s3");
  }
  std::vector<StreamRecord> trace;
  if (!trace_path.empty()) {
    if (!methods.count(3))
      throw config_error("--trace records the method 3 stream; add method 3");
    in.stream_trace = &trace;
  }

  const ComparisonReport report = compare_methods(in);

  if (!trace_path.empty()) {
    std::ostringstream os;
    os << "snapshot,true_scenario,routed_scenario,pred_x_m,pred_y_m,true_x_m,true_y_m,error_m\n";
    for (const auto& rec : trace) {
      const double err = std::hypot(static_cast<double>(rec.pred_x) - rec.true_x,
                                    static_cast<double>(rec.pred_y) - rec.true_y);
      os << rec.index << ',' << to_string(rec.true_id) << ',' << to_string(rec.routed) << ','
         << radioloc::detail::fmt_double(rec.pred_x) << ','
         << radioloc::detail::fmt_double(rec.pred_y) << ','
         << radioloc::detail::fmt_double(rec.true_x) << ','
         << radioloc::detail::fmt_double(rec.true_y) << ','
         << radioloc::detail::fmt_double(err) << '\n';
    }
    write_text_atomic(trace_path, os.str());
    std::printf("wrote per-snapshot trace %s\n", trace_path.c_str());
  }

  // human-readable table
  auto cell = [](const std::optional<MethodReport>& m,
                 const std::function<std::string(const MethodReport&)>& f) {
    return m ? f(*m) : std::string("-");
  };
  std::printf("%-24s %-14s %-14s %-14s\n", "", "method 1", "method 2", "method 3");
  for (const char* sc : {"s1", "s2", "s3"}) {
    auto get = [sc](const MethodReport& m) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", m.mee_m.at(sc));
      return std::string(buf);
    };
    std::printf("%-24s %-14s %-14s %-14s\n", (std::string(sc) + ", MEE (m)").c_str(),
                cell(report.method1, get).c_str(), cell(report.method2, get).c_str(),
                cell(report.method3, get).c_str());
  }
  auto params_fmt = [](const MethodReport& m) {
    std::string s = std::to_string(m.total_params) + " total";
    return s;
  };
  std::printf("%-24s %-14s %-14s %-14s\n", "parameters",
              cell(report.method1, params_fmt).c_str(),
              cell(report.method2, params_fmt).c_str(),
              cell(report.method3, params_fmt).c_str());
  auto adaptive_fmt = [](const MethodReport& m) { return std::string(m.adaptive ? "+" : "-"); };
  std::printf("%-24s %-14s %-14s %-14s\n", "adaptive",
              cell(report.method1, adaptive_fmt).c_str(),
              cell(report.method2, adaptive_fmt).c_str(),
              cell(report.method3, adaptive_fmt).c_str());
  for (const char* sc : {"s1", "s2", "s3"}) {
    auto time_fmt = [sc](const MethodReport& m) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.2f s", m.test_seconds.at(sc));
      return std::string(buf);
    };
    std::printf("%-24s %-14s %-14s %-14s\n", (std::string("test time, ") + sc).c_str(),
                cell(report.method1, time_fmt).c_str(),
                cell(report.method2, time_fmt).c_str(),
                cell(report.method3, time_fmt).c_str());
  }
  if (report.router_accuracy)
    std::printf("router accuracy %.4f, switch events %lld\n", *report.router_accuracy,
                static_cast<long long>(report.switch_events.value_or(0)));

  if (!out_prefix.empty()) {
    write_text_atomic(out_prefix + ".json", report_to_json(report));
    write_text_atomic(out_prefix + ".csv", report_to_csv(report));
    std::printf("wrote %s.json and %s.csv\n", out_prefix.c_str(), out_prefix.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive attention-based radio localization on synthetic beam-space channels"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "synthesize a scenario dataset");
  std::string gen_scenario = "s1", gen_out, gen_config;
  int gen_laps = 5;
  std::uint64_t gen_seed = 1;
  double gen_val = 0.1;
  std::vector<std::string> gen_sets;
  gen->add_option("--scenario", gen_scenario, "s1, s2 or s3")->required();
  gen->add_option("--laps", gen_laps, "laps to drive (final lap is the test split)")
      ->default_val(5);
  gen->add_option("--seed", gen_seed, "master seed")->default_val(1);
  gen->add_option("--val-fraction", gen_val, "validation share of the non-test laps")
      ->default_val(0.1);
  gen->add_option("--out", gen_out, "output dataset directory")->required();
  gen->add_option("--config", gen_config, "key = value scenario config file");
  gen->add_option("--set", gen_sets, "inline scenario override key=value (repeatable)");

  // mix
  auto* mix = app.add_subcommand("mix", "pool scenario datasets into a mixed dataset");
  std::vector<std::string> mix_inputs;
  std::string mix_out;
  std::uint64_t mix_seed = 1;
  double mix_val = 0.1;
  mix->add_option("--inputs", mix_inputs, "dataset directories to pool")
      ->required()
      ->expected(1, -1);
  mix->add_option("--seed", mix_seed, "split seed")->default_val(1);
  mix->add_option("--val-fraction", mix_val, "validation share")->default_val(0.1);
  mix->add_option("--out", mix_out, "output dataset directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train an attention regressor");
  std::string train_data, train_arch = "el=1,ln=off,mp=on", train_out;
  std::uint64_t train_seed = 1;
  int train_epochs = 200, train_batch = 64;
  double train_lr = 0.0006;
  train->add_option("--data", train_data, "dataset directory")->required();
  train->add_option("--arch", train_arch, "architecture, e.g. el=3,ln=off,mp=off")
      ->default_val("el=1,ln=off,mp=on");
  train->add_option("--seed", train_seed, "training seed")->default_val(1);
  train->add_option("--epochs", train_epochs, "epochs")->default_val(200);
  train->add_option("--batch", train_batch, "batch size")->default_val(64);
  train->add_option("--lr", train_lr, "learning rate")->default_val(0.0006);
  train->add_option("--out", train_out, "checkpoint directory")->required();

  // train-router
  auto* trouter = app.add_subcommand("train-router", "train the scenario router (SLP)");
  std::string tr_data, tr_variant = "full", tr_out;
  int tr_bin = -1, tr_epochs = 50, tr_batch = 64;
  std::uint64_t tr_seed = 1;
  double tr_lr = 0.0006;
  trouter->add_option("--data", tr_data, "mixed dataset directory")->required();
  trouter->add_option("--variant", tr_variant, "full (whole matrix) or bin (one delay bin)")
      ->default_val("full");
  trouter->add_option("--bin-index", tr_bin, "delay bin 0..45 (variant bin only)");
  trouter->add_option("--seed", tr_seed, "training seed")->default_val(1);
  trouter->add_option("--epochs", tr_epochs, "epochs")->default_val(50);
  trouter->add_option("--batch", tr_batch, "batch size")->default_val(64);
  trouter->add_option("--lr", tr_lr, "learning rate")->default_val(0.0006);
  trouter->add_option("--out", tr_out, "checkpoint directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate one regressor on a dataset's test lap");
  std::string eval_ckpt, eval_data, eval_out;
  eval->add_option("--ckpt", eval_ckpt, "regressor checkpoint")->required();
  eval->add_option("--data", eval_data, "dataset directory")->required();
  eval->add_option("--out", eval_out, "optional JSON result path");

  // inspect
  auto* inspect = app.add_subcommand("inspect", "dump one snapshot's power-delay profile");
  std::string ins_data, ins_out = "profile.csv";
  std::size_t ins_index = 0;
  inspect->add_option("--data", ins_data, "dataset directory")->required();
  inspect->add_option("--index", ins_index, "snapshot index")->default_val(0);
  inspect->add_option("--out", ins_out, "CSV output path")->default_val("profile.csv");

  // compare
  auto* compare = app.add_subcommand("compare", "run the Method 1/2/3 comparison");
  std::string cmp_method = "all", cmp_gen, cmp_s1, cmp_s2, cmp_s3, cmp_router;
  std::string cmp_d1, cmp_d2, cmp_d3, cmp_decl1, cmp_decl2, cmp_decl3, cmp_out, cmp_trace;
  int cmp_block = 50;
  compare->add_option("--method", cmp_method, "1, 2, 3 or all")->default_val("all");
  compare->add_option("--generalized", cmp_gen, "method 1 checkpoint");
  compare->add_option("--spec-s1", cmp_s1, "specialist checkpoint for s1");
  compare->add_option("--spec-s2", cmp_s2, "specialist checkpoint for s2");
  compare->add_option("--spec-s3", cmp_s3, "specialist checkpoint for s3");
  compare->add_option("--router", cmp_router, "router checkpoint (method 3)");
  compare->add_option("--data-s1", cmp_d1, "s1 dataset")->required();
  compare->add_option("--data-s2", cmp_d2, "s2 dataset")->required();
  compare->add_option("--data-s3", cmp_d3, "s3 dataset")->required();
  compare->add_option("--declare-s1", cmp_decl1,
                      "method 2 manual declaration for the s1 test set");
  compare->add_option("--declare-s2", cmp_decl2,
                      "method 2 manual declaration for the s2 test set");
  compare->add_option("--declare-s3", cmp_decl3,
                      "method 2 manual declaration for the s3 test set");
  compare->add_option("--block", cmp_block, "interleave block size for the method 3 stream")
      ->default_val(50);
  compare->add_option("--out-prefix", cmp_out, "write <prefix>.json and <prefix>.csv");
  compare->add_option("--trace", cmp_trace, "write the per-snapshot method 3 stream CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (gen->parsed())
      return cmd_gen(gen_scenario, gen_laps, gen_seed, gen_val, gen_out, gen_config, gen_sets);
    if (mix->parsed()) return cmd_mix(mix_inputs, mix_seed, mix_val, mix_out);
    if (train->parsed())
      return cmd_train(train_data, train_arch, train_seed, train_epochs, train_batch,
                       train_lr, train_out);
    if (trouter->parsed())
      return cmd_train_router(tr_data, tr_variant, tr_bin, tr_seed, tr_epochs, tr_batch,
                              tr_lr, tr_out);
    if (eval->parsed()) return cmd_eval(eval_ckpt, eval_data, eval_out);
    if (inspect->parsed()) return cmd_inspect(ins_data, ins_index, ins_out);
    if (compare->parsed())
      return cmd_compare(cmp_method, cmp_gen, cmp_s1, cmp_s2, cmp_s3, cmp_router, cmp_d1,
                         cmp_d2, cmp_d3, cmp_decl1, cmp_decl2, cmp_decl3, cmp_block, cmp_out,
                         cmp_trace);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const contract_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const data_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return 0;
}
