#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "radioloc/report.hpp"
#include "radioloc/train.hpp"
#include "support/fixtures.hpp"

using namespace radioloc;
using testsupport::identity_scalers;
using testsupport::noise_dataset;
using testsupport::noise_sample;
using testsupport::untrained_specialist;

TEST_CASE("mee: exact cases and contracts") {
  std::vector<std::array<float, 2>> a = {{0, 0}, {1, 2}, {-3, 4}};
  CHECK(mee(a, a) == 0.0);

  std::vector<std::array<float, 2>> shifted;
  for (auto& p : a) shifted.push_back({p[0] + 3.0f, p[1] + 4.0f});
  CHECK(mee(shifted, a) == doctest::Approx(5.0));

  // translation invariance: mee(a+c, b+c) == mee(a, b)
  std::vector<std::array<float, 2>> b = {{2, -1}, {0, 0}, {5, 5}};
  std::vector<std::array<float, 2>> ac, bc;
  for (auto& p : a) ac.push_back({p[0] + 7.5f, p[1] - 2.25f});
  for (auto& p : b) bc.push_back({p[0] + 7.5f, p[1] - 2.25f});
  CHECK(mee(ac, bc) == doctest::Approx(mee(a, b)).epsilon(1e-12));

  CHECK_THROWS_AS(mee({}, {}), contract_error);
  const std::vector<std::array<float, 2>> shorter = {{0.0f, 0.0f}};
  CHECK_THROWS_AS(mee(a, shorter), contract_error);
}

TEST_CASE("mee matches an independent per-pair implementation on 1000 pairs") {
  Rng rng(55);
  std::vector<std::array<float, 2>> pred, truth;
  for (int i = 0; i < 1000; ++i) {
    pred.push_back({static_cast<float>(rng.uniform(-100, 100)),
                    static_cast<float>(rng.uniform(-100, 100))});
    truth.push_back({static_cast<float>(rng.uniform(-100, 100)),
                     static_cast<float>(rng.uniform(-100, 100))});
  }
  // independent: accumulate per-pair hypot in a different order and form
  long double acc = 0.0L;
  for (std::size_t i = pred.size(); i-- > 0;)
    acc += std::hypot(static_cast<long double>(pred[i][0]) - truth[i][0],
                      static_cast<long double>(pred[i][1]) - truth[i][1]);
  const double expected = static_cast<double>(acc / pred.size());
  CHECK(std::abs(mee(pred, truth) - expected) < 1e-9);
}

TEST_CASE("router_accuracy identities") {
  Rng rng(3);
  std::vector<CirSample> owned;
  for (int i = 0; i < 30; ++i)
    owned.push_back(noise_sample(rng, static_cast<ScenarioId>(i % 3)));
  std::vector<const CirSample*> samples;
  for (auto& s : owned) samples.push_back(&s);

  CHECK(router_accuracy([](const CirSample& s) { return s.scenario_id; }, samples) == 1.0);
  CHECK(router_accuracy([](const CirSample&) { return ScenarioId::S1; }, samples) ==
        doctest::Approx(1.0 / 3.0));

  // accuracy over a concatenation equals the sample-weighted mean of parts
  std::vector<const CirSample*> part1(samples.begin(), samples.begin() + 10);
  std::vector<const CirSample*> part2(samples.begin() + 10, samples.end());
  auto quirky = [](const CirSample& s) {
    return s.cir[0] > 1.0f ? s.scenario_id : ScenarioId::S3;
  };
  const double a1 = router_accuracy(quirky, part1);
  const double a2 = router_accuracy(quirky, part2);
  const double whole = router_accuracy(quirky, samples);
  CHECK(whole == doctest::Approx((10 * a1 + 20 * a2) / 30.0).epsilon(1e-12));

  CHECK_THROWS_AS(router_accuracy([](const CirSample&) { return ScenarioId::S1; }, {}),
                  contract_error);
}

TEST_CASE("train_model: zero learning rate and zero dropout freeze everything") {
  Dataset ds = noise_dataset(2, 8, 21);
  ModelConfig cfg;
  cfg.dropout_rate = 0.0f;
  TrainHyper hyper;
  hyper.epochs = 3;
  hyper.batch_size = 4;
  hyper.learning_rate = 0.0f;
  hyper.seed = 21;
  auto run = train_model(ds, cfg, hyper);

  auto init = ModelWeights<float>::init(cfg, Rng(21));
  auto got = run.model.weights.named_parameters();
  auto want = init.named_parameters();
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i].second.data() == want[i].second.data());

  // train loss is constant across epochs up to summation order
  for (double v : run.train_curve)
    CHECK(v == doctest::Approx(run.train_curve.front()).epsilon(1e-5));
}

TEST_CASE("train_model: identical seeds reproduce identical loss curves") {
  Dataset ds = noise_dataset(2, 10, 8);
  ModelConfig cfg;
  TrainHyper hyper;
  hyper.epochs = 3;
  hyper.batch_size = 8;
  hyper.seed = 5;
  auto a = train_model(ds, cfg, hyper);
  auto b = train_model(ds, cfg, hyper);
  CHECK(a.train_curve == b.train_curve);  // bit-exact
  CHECK(a.val_curve == b.val_curve);
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("train_model: best-epoch checkpoint minimizes the validation curve") {
  Dataset ds = noise_dataset(3, 10, 77, ScenarioId::S1, 0.25);
  ModelConfig cfg;
  TrainHyper hyper;
  hyper.epochs = 5;
  hyper.batch_size = 8;
  hyper.seed = 2;
  auto run = train_model(ds, cfg, hyper);
  REQUIRE(run.val_curve.size() == 5);
  const double best = *std::min_element(run.val_curve.begin(), run.val_curve.end());
  CHECK(run.best_val_mse == best);
  CHECK(run.val_curve[run.best_epoch - 1] == best);
  for (double v : run.val_curve) CHECK(run.best_val_mse <= v);
}

TEST_CASE("train_model: memorizes a 10-sample dataset within 200 epochs") {
  Dataset ds = noise_dataset(2, 10, 31, ScenarioId::S1, 0.0);
  REQUIRE(ds.train_idx.size() == 10);
  ModelConfig cfg;
  TrainHyper hyper;
  hyper.epochs = 200;
  hyper.batch_size = 2;
  hyper.seed = 4;
  auto run = train_model(ds, cfg, hyper);
  CHECK(run.train_curve.back() < 0.1 * run.train_curve.front());
}

TEST_CASE("train_model: contract and divergence errors") {
  Dataset ds = noise_dataset(2, 6, 11);
  ModelConfig cfg;
  TrainHyper hyper;
  hyper.epochs = 2;
  hyper.batch_size = 4;

  Dataset empty_train = ds;
  empty_train.train_idx.clear();
  CHECK_THROWS_AS(train_model(empty_train, cfg, hyper), data_error);

  TrainHyper wild = hyper;
  wild.epochs = 6;
  wild.learning_rate = 1e10f;  // drives the weights out of float range
  CHECK_THROWS_AS(train_model(ds, cfg, wild), numeric_error);
}

namespace {

// structured spectrum whose power encodes the scenario id; the class signal
// survives the windowed IDFT into every CIR amplitude with a wide margin
ChannelSnapshot classed_snapshot(Rng& rng, int lap, double x, double y, ScenarioId id) {
  auto s = testsupport::noise_snapshot(rng, lap, x, y, id);
  const float gain = 1.0f + static_cast<float>(static_cast<int>(id));
  for (auto& v : s.ctf_re) v = gain * (3.0f + 0.2f * v);
  for (auto& v : s.ctf_im) v = gain * 0.2f * v;
  return s;
}

}  // namespace

TEST_CASE("train_router learns a linearly separable synthetic mix") {
  Rng rng(17);
  std::vector<ChannelSnapshot> snaps;
  for (int lap = 1; lap <= 2; ++lap)
    for (int i = 0; i < 45; ++i)
      snaps.push_back(classed_snapshot(rng, lap, i, i, static_cast<ScenarioId>(i % 3)));
  Dataset mixed = build_dataset(snaps, 2, 0.2, 9);
  mixed.scenario = "mixed";

  RouterConfig cfg;
  cfg.variant = RouterVariant::FullInput;
  TrainHyper hyper;
  hyper.epochs = 40;
  hyper.batch_size = 16;
  hyper.learning_rate = 0.01f;  // unit-scale fixture: few batches, so a hot step
  hyper.seed = 12;
  auto run = train_router(mixed, cfg, hyper);

  std::vector<const CirSample*> test;
  for (auto i : mixed.test_idx) test.push_back(&mixed.samples[i]);
  CHECK(router_accuracy(run.router, test) > 0.9);
  CHECK(run.train_curve.back() < run.train_curve.front());
}

TEST_CASE("measure_test_time: doubling the workload roughly doubles the median") {
  const Scalers sc = identity_scalers();
  ModelConfig cfg;  // EL1 + MP
  Specialist sp = untrained_specialist(cfg, 3, sc);
  Dataset ds = noise_dataset(2, 128, 1);
  std::vector<std::size_t> half(ds.test_idx.begin(), ds.test_idx.begin() + 64);
  std::vector<std::size_t> full(ds.test_idx.begin(), ds.test_idx.end());

  auto t_half = measure_test_time([&] { predict_meters(sp, ds, half); }, 5);
  auto t_full = measure_test_time([&] { predict_meters(sp, ds, full); }, 5);
  CHECK(t_half.pass_seconds.size() == 5);
  CHECK(t_half.warmup_seconds > 0.0);
  const double ratio = t_full.median_seconds / t_half.median_seconds;
  INFO("ratio ", ratio);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("comparison report: JSON and CSV round-trip losslessly") {
  ComparisonReport r;
  MethodReport m1;
  m1.mee_m = {{"s1", 0.47123456789}, {"s2", 0.83}, {"s3", 0.86}};
  m1.total_params = 314926;
  m1.active_params = {{"s1", 314926}, {"s2", 314926}, {"s3", 314926}};
  m1.test_seconds = {{"s1", 4.4012345}, {"s2", 4.5}, {"s3", 4.6}};
  m1.adaptive = true;
  MethodReport m3;
  m3.mee_m = {{"s1", 0.40}, {"s2", 0.78}, {"s3", 0.77}};
  m3.total_params = 85442 + 100088 + 100088 + 387;
  m3.active_params = {{"s1", 85442 + 387}, {"s2", 100088 + 387}, {"s3", 100088 + 387}};
  m3.test_seconds = {{"s1", 1.48}, {"s2", 1.6180339887498949}, {"s3", 1.5}};
  m3.adaptive = true;
  r.method1 = m1;
  r.method3 = m3;
  r.router_accuracy = 0.9887;
  r.switch_events = 58;

  const auto json_text = report_to_json(r);
  CHECK(report_from_json(json_text) == r);

  const auto csv_text = report_to_csv(r);
  CHECK(report_from_csv(csv_text) == r);

  // the CSV carries exactly the final-table row set
  for (const char* row : {"mee_s1_m", "mee_s2_m", "mee_s3_m", "parameters_total", "adaptive",
                          "test_time_s1_s", "router_accuracy", "switch_events"})
    CHECK(csv_text.find(row) != std::string::npos);
}

TEST_CASE("compare_methods: perfect-router equivalence on an interleaved stream") {
  // three scenario datasets with distinctive first-column offsets so a
  // bias-only router can be made perfect
  auto make_ds = [](ScenarioId id, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ChannelSnapshot> snaps;
    for (int lap = 1; lap <= 2; ++lap)
      for (int i = 0; i < 30; ++i)
        snaps.push_back(classed_snapshot(rng, lap, i, -i, id));
    return build_dataset(snaps, 2, 0.1, seed);
  };
  Dataset d1 = make_ds(ScenarioId::S1, 1);
  Dataset d2 = make_ds(ScenarioId::S2, 2);
  Dataset d3 = make_ds(ScenarioId::S3, 3);
  Dataset mixed = build_mixed_dataset({&d1, &d2, &d3}, 0.2, 4);

  RouterConfig rcfg;
  TrainHyper rhyper;
  rhyper.epochs = 50;
  rhyper.batch_size = 16;
  rhyper.learning_rate = 0.01f;
  rhyper.seed = 6;
  auto router_run = train_router(mixed, rcfg, rhyper);
  std::vector<const CirSample*> mixed_test;
  for (auto i : mixed.test_idx) mixed_test.push_back(&mixed.samples[i]);
  REQUIRE(router_accuracy(router_run.router, mixed_test) > 0.8);  // separable by design

  ModelConfig scfg;  // EL1 + MP specialists
  ModelConfig gcfg;
  gcfg.encoder_layers = 3;
  gcfg.use_max_pool = false;

  CompareInputs in;
  in.datasets = {{ScenarioId::S1, &d1}, {ScenarioId::S2, &d2}, {ScenarioId::S3, &d3}};
  in.generalized = untrained_specialist(gcfg, 10, mixed.scalers);
  in.specialists.emplace(ScenarioId::S1, untrained_specialist(scfg, 11, d1.scalers));
  in.specialists.emplace(ScenarioId::S2, untrained_specialist(scfg, 12, d2.scalers));
  in.specialists.emplace(ScenarioId::S3, untrained_specialist(scfg, 13, d3.scalers));
  in.router = router_run.router;
  in.method2_declaration = {{ScenarioId::S1, ScenarioId::S1},
                            {ScenarioId::S2, ScenarioId::S2},
                            {ScenarioId::S3, ScenarioId::S3}};
  in.stream_block = 7;
  in.measure_time = false;
  in.force_perfect_router = true;  // oracle routing isolates the dispatcher

  auto report = compare_methods(in);
  REQUIRE(report.method2);
  REQUIRE(report.method3);
  CHECK(*report.router_accuracy == 1.0);
  // with a perfect router, Method 3 equals Method 2 with correct manual
  // selection, exactly
  for (const char* sc : {"s1", "s2", "s3"})
    CHECK(report.method3->mee_m.at(sc) == report.method2->mee_m.at(sc));
  // interleaved blocks force switches at every block boundary
  CHECK(*report.switch_events > 0);

  // the really trained router also drives the same dispatcher plumbing
  CompareInputs trained = in;
  trained.force_perfect_router = false;
  trained.methods = {3};
  auto trained_report = compare_methods(trained);
  CHECK(*trained_report.router_accuracy > 0.8);
  // dispatcher outputs equal the routed specialist's standalone forward
  AdaptiveEnsemble ens;
  ens.router = router_run.router;
  ens.specialists = in.specialists;
  const CirSample& probe = d2.samples[d2.test_idx[0]];
  auto res = ens.dispatch(probe);
  auto direct = specialist_predict(in.specialists.at(ScenarioId::S2), probe);
  CHECK(res.x_m == direct[0]);
  CHECK(res.y_m == direct[1]);

  // method 3 without a router is a config error naming the router
  CompareInputs no_router = in;
  no_router.router.reset();
  no_router.methods = {3};
  CHECK_THROWS_WITH_AS(compare_methods(no_router), doctest::Contains("router"), config_error);

  // method 2 without a declaration is a config error
  CompareInputs no_decl = in;
  no_decl.method2_declaration.clear();
  no_decl.methods = {2};
  CHECK_THROWS_AS(compare_methods(no_decl), config_error);
}
