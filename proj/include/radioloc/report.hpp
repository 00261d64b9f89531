#pragma once

#include <array>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "radioloc/errors.hpp"
#include "radioloc/preprocess.hpp"
#include "radioloc/router.hpp"
#include "radioloc/train.hpp"

namespace radioloc {

using ordered_json = nlohmann::ordered_json;

// One column of the final comparison table.
struct MethodReport {
  std::map<std::string, double> mee_m;              // per scenario
  long long total_params = 0;
  std::map<std::string, long long> active_params;   // per scenario test stream
  std::map<std::string, double> test_seconds;       // per scenario, median of 5
  bool adaptive = false;

  bool operator==(const MethodReport&) const = default;
};

struct ComparisonReport {
  std::optional<MethodReport> method1, method2, method3;
  std::optional<double> router_accuracy;  // Method 3 only
  std::optional<long long> switch_events;
  std::string timing_protocol = kTimingProtocol;
  int stream_block = 50;

  bool operator==(const ComparisonReport&) const = default;
};

// ---------------------------------------------------------------------------
// JSON form

namespace detail {

inline ordered_json method_to_json(const MethodReport& m) {
  ordered_json j;
  j["mee_m"] = m.mee_m;
  j["total_params"] = m.total_params;
  j["active_params"] = m.active_params;
  j["test_seconds"] = m.test_seconds;
  j["adaptive"] = m.adaptive;
  return j;
}

inline MethodReport method_from_json(const ordered_json& j) {
  MethodReport m;
  m.mee_m = j.at("mee_m").get<std::map<std::string, double>>();
  m.total_params = j.at("total_params");
  m.active_params = j.at("active_params").get<std::map<std::string, long long>>();
  m.test_seconds = j.at("test_seconds").get<std::map<std::string, double>>();
  m.adaptive = j.at("adaptive");
  return m;
}

}  // namespace detail

inline std::string report_to_json(const ComparisonReport& r) {
  ordered_json j;
  j["timing_protocol"] = r.timing_protocol;
  j["stream_block"] = r.stream_block;
  if (r.method1) j["method1"] = detail::method_to_json(*r.method1);
  if (r.method2) j["method2"] = detail::method_to_json(*r.method2);
  if (r.method3) j["method3"] = detail::method_to_json(*r.method3);
  if (r.router_accuracy) j["router_accuracy"] = *r.router_accuracy;
  if (r.switch_events) j["switch_events"] = *r.switch_events;
  return j.dump(2) + "\n";
}

inline ComparisonReport report_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw data_error(std::string("report: malformed JSON: ") + e.what());
  }
  ComparisonReport r;
  r.timing_protocol = j.at("timing_protocol");
  r.stream_block = j.at("stream_block");
  if (j.contains("method1")) r.method1 = detail::method_from_json(j.at("method1"));
  if (j.contains("method2")) r.method2 = detail::method_from_json(j.at("method2"));
  if (j.contains("method3")) r.method3 = detail::method_from_json(j.at("method3"));
  if (j.contains("router_accuracy")) r.router_accuracy = j.at("router_accuracy").get<double>();
  if (j.contains("switch_events")) r.switch_events = j.at("switch_events").get<long long>();
  return r;
}

// ---------------------------------------------------------------------------
// CSV form: metric rows x method columns, full fidelity

namespace detail {

inline std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell += c;
    }
  }
  out.push_back(cell);
  return out;
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string report_to_csv(const ComparisonReport& r) {
  const std::array<const MethodReport*, 3> methods = {
      r.method1 ? &*r.method1 : nullptr, r.method2 ? &*r.method2 : nullptr,
      r.method3 ? &*r.method3 : nullptr};
  std::ostringstream os;
  os << "metric,method1,method2,method3\n";
  auto row = [&](const std::string& name, auto getter) {
    os << name;
    for (const MethodReport* m : methods) {
      os << ',';
      if (m) os << getter(*m);
    }
    os << '\n';
  };
  for (const char* sc : {"s1", "s2", "s3"})
    row(std::string("mee_") + sc + "_m", [sc](const MethodReport& m) {
      auto it = m.mee_m.find(sc);
      return it == m.mee_m.end() ? std::string() : detail::fmt_double(it->second);
    });
  row("parameters_total",
      [](const MethodReport& m) { return std::to_string(m.total_params); });
  for (const char* sc : {"s1", "s2", "s3"})
    row(std::string("parameters_active_") + sc, [sc](const MethodReport& m) {
      auto it = m.active_params.find(sc);
      return it == m.active_params.end() ? std::string() : std::to_string(it->second);
    });
  row("adaptive", [](const MethodReport& m) { return std::string(m.adaptive ? "1" : "0"); });
  for (const char* sc : {"s1", "s2", "s3"})
    row(std::string("test_time_") + sc + "_s", [sc](const MethodReport& m) {
      auto it = m.test_seconds.find(sc);
      return it == m.test_seconds.end() ? std::string() : detail::fmt_double(it->second);
    });
  os << "router_accuracy,,,"
     << (r.router_accuracy ? detail::fmt_double(*r.router_accuracy) : "") << '\n';
  os << "switch_events,,," << (r.switch_events ? std::to_string(*r.switch_events) : "")
     << '\n';
  os << "stream_block," << r.stream_block << ",,\n";
  os << "timing_protocol," << detail::csv_quote(r.timing_protocol) << ",,\n";
  return os.str();
}

inline ComparisonReport report_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw data_error("report: empty CSV");
  ComparisonReport r;
  std::array<std::optional<MethodReport>, 3> methods;
  auto ensure = [&methods](int i) -> MethodReport& {
    if (!methods[i]) methods[i] = MethodReport{};
    return *methods[i];
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = detail::csv_split(line);
    if (cells.size() < 2) throw data_error("report: malformed CSV row '" + line + "'");
    const std::string& metric = cells[0];
    auto cell = [&cells](int i) {
      return static_cast<std::size_t>(i + 1) < cells.size() ? cells[i + 1] : std::string();
    };
    if (metric == "stream_block") {
      r.stream_block = std::stoi(cell(0));
    } else if (metric == "timing_protocol") {
      r.timing_protocol = cell(0);
    } else if (metric == "router_accuracy") {
      if (!cell(2).empty()) r.router_accuracy = std::stod(cell(2));
    } else if (metric == "switch_events") {
      if (!cell(2).empty()) r.switch_events = std::stoll(cell(2));
    } else {
      for (int i = 0; i < 3; ++i) {
        const std::string v = cell(i);
        if (v.empty()) continue;
        if (metric.rfind("mee_", 0) == 0) {
          ensure(i).mee_m[metric.substr(4, 2)] = std::stod(v);
        } else if (metric == "parameters_total") {
          ensure(i).total_params = std::stoll(v);
        } else if (metric.rfind("parameters_active_", 0) == 0) {
          ensure(i).active_params[metric.substr(18)] = std::stoll(v);
        } else if (metric == "adaptive") {
          ensure(i).adaptive = v == "1";
        } else if (metric.rfind("test_time_", 0) == 0) {
          ensure(i).test_seconds[metric.substr(10, 2)] = std::stod(v);
        } else {
          throw data_error("report: unknown CSV metric '" + metric + "'");
        }
      }
    }
  }
  r.method1 = methods[0];
  r.method2 = methods[1];
  r.method3 = methods[2];
  return r;
}

// ---------------------------------------------------------------------------
// the Method 1 / 2 / 3 harness

// One dispatched snapshot of the Method 3 stream, plot-ready.
struct StreamRecord {
  std::size_t index = 0;
  ScenarioId true_id = ScenarioId::S1;
  ScenarioId routed = ScenarioId::S1;
  float pred_x = 0.0f, pred_y = 0.0f;
  float true_x = 0.0f, true_y = 0.0f;
};

struct CompareInputs {
  // per-scenario datasets; Method 3 interleaves their test laps
  std::map<ScenarioId, const Dataset*> datasets;
  std::optional<Specialist> generalized;            // Method 1
  std::map<ScenarioId, Specialist> specialists;     // Methods 2 and 3
  std::optional<TrainedRouter> router;              // Method 3
  // Method 2 manual declaration: test scenario -> specialist to load;
  // mis-declaration is allowed
  std::map<ScenarioId, ScenarioId> method2_declaration;
  std::set<int> methods = {1, 2, 3};
  int stream_block = 50;
  int timing_reps = 5;
  bool measure_time = true;  // tests can switch timing off for speed
  // substitute an oracle that always routes to the true scenario; isolates
  // the dispatcher from router quality
  bool force_perfect_router = false;
  std::vector<StreamRecord>* stream_trace = nullptr;  // per-snapshot trace sink
};

// Round-robin blocks of `block` test-lap snapshots per scenario.
inline std::vector<std::pair<const CirSample*, ScenarioId>> interleave_test_stream(
    const std::map<ScenarioId, const Dataset*>& datasets, int block) {
  if (block < 1) throw config_error("interleave: block must be >= 1");
  std::vector<std::pair<const CirSample*, ScenarioId>> stream;
  std::map<ScenarioId, std::size_t> cursor;
  bool any = true;
  while (any) {
    any = false;
    for (const auto& [id, ds] : datasets) {
      std::size_t& c = cursor[id];
      for (int i = 0; i < block && c < ds->test_idx.size(); ++i, ++c) {
        stream.emplace_back(&ds->samples[ds->test_idx[c]], id);
        any = true;
      }
    }
  }
  return stream;
}

inline ComparisonReport compare_methods(CompareInputs& in) {
  for (const auto& [id, ds] : in.datasets)
    if (ds == nullptr || ds->test_idx.empty())
      throw config_error("compare_methods: dataset for " + to_string(id) +
                         " is missing or has no test lap");
  ComparisonReport report;
  report.stream_block = in.stream_block;

  auto scenario_key = [](ScenarioId id) { return to_string(id); };

  auto timed_pass = [&](const std::function<void()>& pass) {
    if (!in.measure_time) return 0.0;
    return measure_test_time(pass, in.timing_reps).median_seconds;
  };

  if (in.methods.count(1)) {
    if (!in.generalized)
      throw config_error("compare_methods: method 1 requires the generalized checkpoint");
    MethodReport m;
    m.adaptive = true;  // one model serves every scenario without intervention
    m.total_params = count_params(in.generalized->config);
    for (const auto& [id, ds] : in.datasets) {
      const auto key = scenario_key(id);
      m.mee_m[key] = evaluate_mee(*in.generalized, *ds, ds->test_idx);
      m.active_params[key] = m.total_params;
      m.test_seconds[key] = timed_pass(
          [&] { predict_meters(*in.generalized, *ds, ds->test_idx); });
    }
    report.method1 = std::move(m);
  }

  if (in.methods.count(2)) {
    if (in.specialists.empty())
      throw config_error("compare_methods: method 2 requires specialist checkpoints");
    if (in.method2_declaration.empty())
      throw config_error(
          "compare_methods: method 2 requires a manual scenario declaration per test set");
    MethodReport m;
    m.adaptive = false;
    m.total_params = 0;
    for (const auto& [id, sp] : in.specialists) m.total_params += count_params(sp.config);
    for (const auto& [id, ds] : in.datasets) {
      auto decl = in.method2_declaration.find(id);
      if (decl == in.method2_declaration.end())
        throw config_error("compare_methods: method 2 has no declaration for " +
                           to_string(id));
      const Specialist& sp = method2_select(decl->second, in.specialists);
      const auto key = scenario_key(id);
      m.mee_m[key] = evaluate_mee(sp, *ds, ds->test_idx);
      m.active_params[key] = count_params(sp.config);
      m.test_seconds[key] = timed_pass([&] { predict_meters(sp, *ds, ds->test_idx); });
    }
    report.method2 = std::move(m);
  }

  if (in.methods.count(3)) {
    if (!in.router)
      throw config_error("compare_methods: method 3 requires the router checkpoint");
    if (in.specialists.empty())
      throw config_error("compare_methods: method 3 requires specialist checkpoints");
    MethodReport m;
    m.adaptive = true;
    m.total_params = count_router_params(in.router->config);
    for (const auto& [id, sp] : in.specialists) m.total_params += count_params(sp.config);

    AdaptiveEnsemble ensemble;
    ensemble.router = *in.router;
    ensemble.specialists = in.specialists;
    const auto stream = interleave_test_stream(in.datasets, in.stream_block);
    std::map<ScenarioId, std::vector<std::array<float, 2>>> preds, truths;
    std::size_t routed_hits = 0;
    for (std::size_t pos = 0; pos < stream.size(); ++pos) {
      const auto& [sample, true_id] = stream[pos];
      const DispatchResult res =
          in.force_perfect_router ? ensemble.dispatch(*sample, true_id)
                                  : ensemble.dispatch(*sample);
      if (res.routed == true_id) ++routed_hits;
      preds[true_id].push_back({res.x_m, res.y_m});
      truths[true_id].push_back({sample->label_x, sample->label_y});
      if (in.stream_trace)
        in.stream_trace->push_back({pos, true_id, res.routed, res.x_m, res.y_m,
                                    sample->label_x, sample->label_y});
    }
    report.router_accuracy = static_cast<double>(routed_hits) / stream.size();
    report.switch_events = ensemble.switch_events;
    for (const auto& [id, ds] : in.datasets) {
      const auto key = scenario_key(id);
      m.mee_m[key] = mee(preds.at(id), truths.at(id));
      auto sp = in.specialists.find(id);
      m.active_params[key] = (sp == in.specialists.end() ? 0 : count_params(sp->second.config)) +
                             count_router_params(in.router->config);
      m.test_seconds[key] = timed_pass([&] {
        AdaptiveEnsemble timing_ensemble;
        timing_ensemble.router = *in.router;
        timing_ensemble.specialists = in.specialists;
        for (std::size_t i : ds->test_idx) timing_ensemble.dispatch(ds->samples[i]);
      });
    }
    report.method3 = std::move(m);
  }

  return report;
}

}  // namespace radioloc
