#pragma once

// Day-ahead limit-scenario ensemble: k-nearest analog days on normalized
// feature distance, multiplicative AR(1) demand perturbation, limits
// recomputed through the physical network model, tightness ranking, and
// central coverage trimming. Fully deterministic under a fixed seed; member
// sub-seeds are pre-split so parallel and serial generation agree.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "aidc/common.hpp"
#include "aidc/grid.hpp"
#include "aidc/model.hpp"

namespace aidc::scenario {

/// Publicly observable per-slot signals z(t) plus calendar indicators.
struct FeatureVector {
  std::vector<double> price;    // currency/MWh
  std::vector<double> demand;   // MW system demand
  std::vector<double> t_amb;    // degC
  int day_of_week = 0;          // 0..6

  int horizon() const { return static_cast<int>(price.size()); }
  void validate(int expected_slots) const {
    if (horizon() != expected_slots || static_cast<int>(demand.size()) != expected_slots ||
        static_cast<int>(t_amb.size()) != expected_slots)
      throw config_error("feature series must cover every slot of the day");
  }
};

struct HistoryDay {
  int id = 0;
  FeatureVector features;
  std::vector<double> demand_mw;  // nodal-scaling demand profile
};

struct LimitScenario {
  PccLimitSeries limits;
  int analog_day_id = -1;
  std::uint64_t seed = 0;
  int member_index = -1;
};

struct ScenarioSet {
  std::vector<LimitScenario> members;     // raw ensemble, generation order
  std::vector<double> tightness_scores;   // aligned with members
  std::vector<std::uint8_t> retained;     // aligned with members
  double dt_h = 0.25;
  std::uint64_t master_seed = 0;

  int raw_size() const { return static_cast<int>(members.size()); }
  int retained_size() const {
    int k = 0;
    for (auto r : retained) k += r ? 1 : 0;
    return k;
  }
  std::vector<LimitScenario> retained_members() const {
    std::vector<LimitScenario> out;
    for (std::size_t i = 0; i < members.size(); ++i)
      if (!retained.empty() && retained[i]) out.push_back(members[i]);
    return out;
  }
};

struct EnsembleParams {
  int knn_k = 5;
  double ar_rho = 0.9;
  double ar_sigma = 0.03;  // innovation std as a fraction of demand
  double import_cap_mw = 1000.0;
  double export_floor_mw = -1000.0;
  double r_grid = 150.0;
  double line_scale = 1.0;
  double dt_h = 0.25;
};

/// Admissible import energy of a limit trajectory, MWh. Smaller = tighter.
inline double tightness(const LimitScenario& sc, double dt_h) {
  double e = 0.0;
  for (double hi : sc.limits.p_hi) e += std::max(hi, 0.0) * dt_h;
  return e;
}

namespace detail {

/// Normalized L2 distance between two feature days, plus a day-of-week
/// mismatch penalty. Channel scales come from the history so no single
/// signal dominates.
inline double feature_distance(const FeatureVector& a, const FeatureVector& b,
                               const std::array<double, 3>& scale) {
  double d = 0.0;
  const int T = a.horizon();
  for (int t = 0; t < T; ++t) {
    const double dp = (a.price[t] - b.price[t]) / scale[0];
    const double dd = (a.demand[t] - b.demand[t]) / scale[1];
    const double dt = (a.t_amb[t] - b.t_amb[t]) / scale[2];
    d += dp * dp + dd * dd + dt * dt;
  }
  d = std::sqrt(d / T);
  if (a.day_of_week != b.day_of_week) d += 1.0;
  return d;
}

inline std::array<double, 3> channel_scales(const std::vector<HistoryDay>& history) {
  std::array<double, 3> mean{0, 0, 0}, var{0, 0, 0};
  long n = 0;
  for (const auto& day : history)
    for (int t = 0; t < day.features.horizon(); ++t) {
      mean[0] += day.features.price[t];
      mean[1] += day.features.demand[t];
      mean[2] += day.features.t_amb[t];
      ++n;
    }
  for (auto& m : mean) m /= std::max<long>(n, 1);
  for (const auto& day : history)
    for (int t = 0; t < day.features.horizon(); ++t) {
      var[0] += (day.features.price[t] - mean[0]) * (day.features.price[t] - mean[0]);
      var[1] += (day.features.demand[t] - mean[1]) * (day.features.demand[t] - mean[1]);
      var[2] += (day.features.t_amb[t] - mean[2]) * (day.features.t_amb[t] - mean[2]);
    }
  std::array<double, 3> scale;
  for (int c = 0; c < 3; ++c) scale[c] = std::max(std::sqrt(var[c] / std::max<long>(n, 1)), 1e-9);
  return scale;
}

}  // namespace detail

/// Generates the raw ensemble: each member picks one of the k nearest analog
/// days, perturbs its demand profile with multiplicative AR(1) noise, and
/// recomputes the admissible envelope through the network model.
inline ScenarioSet generate_ensemble(const std::vector<HistoryDay>& history,
                                     const FeatureVector& today, const grid::NetworkCase& cs,
                                     int n_raw, std::uint64_t seed,
                                     const EnsembleParams& params = {}) {
  if (history.empty()) throw config_error("scenario history is empty");
  if (n_raw < 2) throw config_error("n_raw must be at least 2");
  const int T = today.horizon();
  for (const auto& day : history) {
    day.features.validate(T);
    if (static_cast<int>(day.demand_mw.size()) != T)
      throw config_error("history demand profile length mismatch");
  }

  // Rank analog days once; ties break on day id for determinism.
  const auto scale = detail::channel_scales(history);
  std::vector<std::pair<double, int>> ranked;  // (distance, history index)
  for (std::size_t h = 0; h < history.size(); ++h)
    ranked.push_back({detail::feature_distance(today, history[h].features, scale),
                      static_cast<int>(h)});
  std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    return history[a.second].id < history[b.second].id;
  });
  const int k = std::min<int>(params.knn_k, static_cast<int>(ranked.size()));

  Rng master(seed);
  ScenarioSet set;
  set.dt_h = params.dt_h;
  set.master_seed = seed;
  for (int i = 0; i < n_raw; ++i) {
    Rng rng = master.spawn(static_cast<std::uint64_t>(i));
    const int analog_idx = ranked[rng.uniform_int(0, k - 1)].second;
    const auto& analog = history[analog_idx];

    std::vector<double> demand(T);
    double e = 0.0;
    for (int t = 0; t < T; ++t) {
      e = params.ar_rho * e + params.ar_sigma * rng.normal();
      demand[t] = std::max(analog.demand_mw[t] * (1.0 + e), 0.0);
    }
    const auto inj = grid::injections_from_demand(cs, demand);
    LimitScenario sc;
    sc.limits = grid::derive_pcc_limits(cs, inj, params.import_cap_mw, params.export_floor_mw,
                                        params.r_grid, params.line_scale);
    sc.analog_day_id = analog.id;
    sc.seed = rng.seed();
    sc.member_index = i;
    set.members.push_back(std::move(sc));
  }
  set.tightness_scores.reserve(set.members.size());
  for (const auto& m : set.members) set.tightness_scores.push_back(tightness(m, params.dt_h));
  set.retained.assign(set.members.size(), 1);
  return set;
}

/// Two-sided central trim: drops ceil(alpha*N/2) tightest and loosest
/// members; `one_sided` instead drops only the ceil(alpha*N) tightest.
inline ScenarioSet filter_coverage(ScenarioSet set, double alpha, bool one_sided = false) {
  if (alpha < 0.0 || alpha >= 1.0) throw config_error("coverage alpha must lie in [0,1)");
  const int n = set.raw_size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (set.tightness_scores[a] != set.tightness_scores[b])
      return set.tightness_scores[a] < set.tightness_scores[b];
    return set.members[a].member_index < set.members[b].member_index;
  });
  set.retained.assign(n, 0);
  if (one_sided) {
    const int drop = static_cast<int>(std::ceil(alpha * n));
    for (int r = drop; r < n; ++r) set.retained[order[r]] = 1;
  } else {
    const int drop = static_cast<int>(std::ceil(alpha * n / 2.0));
    for (int r = drop; r < n - drop; ++r) set.retained[order[r]] = 1;
  }
  return set;
}

// ---------------------------------------------------------------------------
// Serialization: one CSV per member plus a JSON manifest.

inline void save_scenario_set(const std::string& dir, const ScenarioSet& set) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json manifest;
  manifest["master_seed"] = set.master_seed;
  manifest["dt_h"] = set.dt_h;
  manifest["n_raw"] = set.raw_size();
  auto& members = manifest["members"];
  members = nlohmann::json::array();
  for (int i = 0; i < set.raw_size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "member_%04d.csv", i);
    grid::write_limits_csv((fs::path(dir) / name).string(), set.members[i].limits);
    nlohmann::json entry;
    entry["index"] = i;
    entry["file"] = name;
    entry["analog_day_id"] = set.members[i].analog_day_id;
    entry["seed"] = set.members[i].seed;
    entry["tightness_mwh"] = set.tightness_scores[i];
    entry["retained"] = static_cast<bool>(set.retained[i]);
    entry["r_grid"] = set.members[i].limits.r_grid;
    entry["import_cap"] = set.members[i].limits.import_cap;
    entry["export_floor"] = set.members[i].limits.export_floor;
    members.push_back(entry);
  }
  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

inline ScenarioSet load_scenario_set(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto manifest = nlohmann::json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
  ScenarioSet set;
  set.master_seed = manifest.at("master_seed").get<std::uint64_t>();
  set.dt_h = manifest.at("dt_h").get<double>();
  for (const auto& entry : manifest.at("members")) {
    LimitScenario sc;
    sc.limits = grid::read_limits_csv((fs::path(dir) / entry.at("file").get<std::string>()).string());
    sc.limits.r_grid = entry.at("r_grid").get<double>();
    sc.limits.import_cap = entry.at("import_cap").get<double>();
    sc.limits.export_floor = entry.at("export_floor").get<double>();
    sc.analog_day_id = entry.at("analog_day_id").get<int>();
    sc.seed = entry.at("seed").get<std::uint64_t>();
    sc.member_index = entry.at("index").get<int>();
    set.members.push_back(std::move(sc));
    set.tightness_scores.push_back(entry.at("tightness_mwh").get<double>());
    set.retained.push_back(entry.at("retained").get<bool>() ? 1 : 0);
  }
  return set;
}

}  // namespace aidc::scenario
