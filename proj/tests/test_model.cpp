#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "aidc/model.hpp"

using namespace aidc;
using Catch::Approx;

namespace {
ComputeConfig paper_compute() { return ComputeConfig{}; }
ThermalConfig paper_thermal() { return ThermalConfig{}; }
BessConfig paper_bess() { return BessConfig{}; }
}  // namespace

TEST_CASE("it_power matches the calibrated quadratic") {
  auto cfg = paper_compute();
  cfg.n_server = 1;
  CHECK(it_power(0.0, 0, cfg) == 0.0);
  CHECK(it_power(1.0, 1, cfg) * 1e6 == Approx(233.5).epsilon(1e-9));
  CHECK(it_power(0.755, 1, cfg) * 1e6 == Approx(162.401735).epsilon(1e-9));
  // Per-server draw sits inside the measured 150-250 W window.
  for (double s = cfg.s_min; s <= 1.0; s += 0.01) {
    const double w = it_power(s, 1, cfg) * 1e6;
    CHECK(w > 150.0);
    CHECK(w < 250.0);
  }
  CHECK_THROWS_AS(it_power(0.5, 1, cfg), std::domain_error);
  CHECK_THROWS_AS(it_power(0.2, 0, cfg), std::domain_error);
  CHECK_THROWS_AS(it_power(1.2, 1, cfg), std::domain_error);
}

TEST_CASE("it_power is strictly convex over the admissible range") {
  auto cfg = paper_compute();
  cfg.n_server = 1;
  for (double s = cfg.s_min; s + 0.02 <= 1.0; s += 0.005) {
    const double d2 = it_power(s, 1, cfg) - 2.0 * it_power(s + 0.01, 1, cfg) +
                      it_power(s + 0.02, 1, cfg);
    CHECK(d2 > 0.0);
  }
}

TEST_CASE("default fleet size follows the capacity derivation") {
  CHECK(ComputeConfig::servers_for_capacity(250.0, 1052.7, -2288.6, 1469.4) == 1070663);
  CHECK(ComputeConfig{}.n_server == 1070663);
}

TEST_CASE("workload_rate scales linearly") {
  auto cfg = paper_compute();
  cfg.n_server = 1;
  CHECK(workload_rate(1.0, 1, cfg) == Approx(20800.0));
  CHECK(workload_rate(0.0, 0, cfg) == 0.0);
  cfg.n_server = 2;
  CHECK(workload_rate(0.8775, 1, cfg) == Approx(36504.0));
}

TEST_CASE("efficient_throughput maximizes workload per watt") {
  auto cfg = paper_compute();
  const double s_star = efficient_throughput(cfg);
  CHECK(s_star == Approx(std::sqrt(1052.7 / 1469.4)).epsilon(1e-12));
  CHECK(s_star == Approx(0.8464).margin(5e-5));

  // Independent grid search on a 1e-4 lattice.
  double best_s = cfg.s_min, best_v = 0.0;
  for (double s = cfg.s_min; s <= 1.0 + 1e-12; s += 1e-4) {
    const double v = s / (cfg.alpha0 + cfg.alpha1 * s + cfg.alpha2 * s * s);
    if (v > best_v) {
      best_v = v;
      best_s = s;
    }
  }
  CHECK(std::abs(best_s - s_star) <= 1e-4 + 1e-12);

  ComputeConfig toy;
  toy.alpha0 = 1.0;
  toy.alpha1 = 0.0;
  toy.alpha2 = 1.0;
  toy.s_min = 0.5;
  CHECK(efficient_throughput(toy) == Approx(1.0));
  toy.alpha0 = 0.25;
  toy.s_min = 0.1;
  CHECK(efficient_throughput(toy) == Approx(0.5));
}

TEST_CASE("eir ambient correction polynomial") {
  auto th = paper_thermal();
  CHECK(eir_phi(25.0) == Approx(0.929503).epsilon(1e-9));
  CHECK(eir_phi(0.0) == Approx(0.736588).epsilon(1e-9));
  CHECK(eir(25.0, th) == Approx(0.929503 / 4.05).epsilon(1e-9));
  // Increasing over the operating range.
  CHECK(eir_phi(10.0) < eir_phi(25.0));
  CHECK(!eir_extrapolated(25.0, th));
  CHECK(eir_extrapolated(60.0, th));
}

TEST_CASE("cooling_power applies the ambient-corrected ratio") {
  auto th = paper_thermal();
  CHECK(cooling_power(0.0, 25.0, th) == 0.0);
  CHECK(cooling_power(100.0, 25.0, th) == Approx(22.95069135802469).epsilon(1e-9));
  CHECK(cooling_power(250.0, 25.0, th) == Approx(57.376728395061726).epsilon(1e-9));
  CHECK_THROWS_AS(cooling_power(-1.0, 25.0, th), std::domain_error);
  CHECK_THROWS_AS(cooling_power(260.0, 25.0, th), std::domain_error);
}

TEST_CASE("thermal_step follows the RC model") {
  auto th = paper_thermal();
  CHECK(thermal_step(26.0, 30.0, 172.0, 250.0, th, 0.25) == Approx(25.8791666667).epsilon(1e-9));
  // Balance points leave the temperature unchanged.
  CHECK(thermal_step(22.0, 22.0, 0.0, 0.0, th, 0.25) == Approx(22.0));
  CHECK(thermal_step(24.0, 24.0, 150.0, 150.0, th, 0.25) == Approx(24.0));
}

TEST_CASE("thermal_step superposition") {
  auto th = paper_thermal();
  const double base = thermal_step(20.0, 25.0, 100.0, 50.0, th, 0.25);
  // Linear in each argument: doubling a single input moves the output by
  // exactly the partial-derivative amount.
  const double dtin = thermal_step(21.0, 25.0, 100.0, 50.0, th, 0.25) - base;
  const double dtamb = thermal_step(20.0, 26.0, 100.0, 50.0, th, 0.25) - base;
  const double dpit = thermal_step(20.0, 25.0, 101.0, 50.0, th, 0.25) - base;
  const double dq = thermal_step(20.0, 25.0, 100.0, 51.0, th, 0.25) - base;
  CHECK(thermal_step(22.0, 27.0, 103.0, 53.0, th, 0.25) ==
        Approx(base + 2 * dtin + 2 * dtamb + 3 * dpit + 3 * dq).epsilon(1e-12));
}

TEST_CASE("bess_step charge, discharge, and round trip") {
  auto b = paper_bess();
  CHECK(bess_step(200.0, 100.0, 0.0, b, 0.25) == Approx(223.75));
  CHECK(bess_step(200.0, 0.0, 100.0, b, 0.25) == Approx(173.6842105263).epsilon(1e-9));
  CHECK(bess_step(200.0, 0.0, 0.0, b, 0.25) == 200.0);
  CHECK_THROWS_AS(bess_step(200.0, 10.0, 10.0, b, 0.25), std::invalid_argument);

  // Round trip loses energy whenever the efficiencies are below one.
  const double mid = bess_step(200.0, 80.0, 0.0, b, 1.0);
  const double stored = mid - 200.0;
  const double dis_power = stored * b.eta_dis;  // discharge that drains exactly `stored`
  const double back = bess_step(mid, 0.0, dis_power, b, 1.0);
  CHECK(back == Approx(200.0).margin(1e-9));
  // Electrical energy recovered is strictly less than electrical spent.
  CHECK(dis_power * 1.0 < 80.0 * 1.0);

  BessConfig lossless = b;
  lossless.eta_ch = lossless.eta_dis = 1.0;
  const double m2 = bess_step(200.0, 80.0, 0.0, lossless, 1.0);
  CHECK(bess_step(m2, 0.0, 80.0, lossless, 1.0) == Approx(200.0));
}

TEST_CASE("pcc_exchange composes the subsystem draws") {
  auto cc = paper_compute();
  auto th = paper_thermal();
  OperatingPoint idle;
  CHECK(pcc_exchange(idle, 25.0, cc, th) == 0.0);

  OperatingPoint full;
  full.mu = 1;
  full.s = 1.0;
  CHECK(pcc_exchange(full, 25.0, cc, th) ==
        Approx(it_power(1.0, 1, cc) / 0.95).epsilon(1e-9));
  CHECK(pcc_exchange(full, 25.0, cc, th) == Approx(263.157894).epsilon(1e-4));

  OperatingPoint dis;
  dis.p_dis = 150.0;
  CHECK(pcc_exchange(dis, 25.0, cc, th) == Approx(-150.0));
}

TEST_CASE("pwl power curve interpolates the quadratic at breakpoints") {
  auto cfg = paper_compute();
  cfg.n_server = 1;
  const auto grid = pwl_throughput_grid(cfg);
  REQUIRE(grid.size() == 9);
  CHECK(grid.front() == Approx(0.755));
  CHECK(grid.back() == 1.0);
  for (double s : grid)
    CHECK(it_power_pwl(s, 1, cfg) == Approx(it_power(s, 1, cfg)).epsilon(1e-12));
  // Between breakpoints the chord bounds the quadratic from above, within
  // the alpha2*(ds)^2/4 interpolation bound.
  const double ds = grid[1] - grid[0];
  const double bound = cfg.alpha2 * ds * ds / 4.0 * 1e-6;
  for (double s = cfg.s_min; s <= 1.0; s += 1e-3) {
    const double gap = it_power_pwl(s, 1, cfg) - it_power(s, 1, cfg);
    CHECK(gap >= -1e-15);
    CHECK(gap <= bound + 1e-15);
  }
  CHECK(it_power_pwl(0.0, 0, cfg) == 0.0);
}

TEST_CASE("validator accepts a forward-simulated trajectory") {
  ValidationContext ctx;
  ctx.compute = paper_compute();
  ctx.thermal = paper_thermal();
  ctx.bess = paper_bess();
  ctx.t_amb = {24.0, 24.0, 24.0, 24.0};
  ctx.dt_h = 0.25;

  const auto ckpt = CheckpointPattern::periodic(4, 4);
  PccLimitSeries limits;
  limits.p_lo.assign(4, -1000.0);
  limits.p_hi.assign(4, 1000.0);
  limits.collapsed.assign(4, 0);
  limits.r_grid = 150.0;

  // Hand-built feasible day: idle, then minimum-throughput operation. The
  // start slot needs battery discharge to respect the 150 MW/slot ramp
  // (s_min alone draws ~183 MW at fleet scale); the last slot recharges
  // exactly what the round trip consumed so the SoC closes the cycle.
  std::vector<OperatingPoint> pts(4);
  pts[1].mu = 1;
  pts[1].s = ctx.compute.s_min;
  pts[1].q_cool = 120.0;
  pts[1].p_dis = 62.0;
  pts[2].mu = 1;
  pts[2].s = ctx.compute.s_min;
  pts[2].q_cool = 180.0;
  pts[3].mu = 1;
  pts[3].s = ctx.compute.s_min;
  pts[3].q_cool = 180.0;
  pts[3].p_ch = 62.0 / (ctx.bess.eta_ch * ctx.bess.eta_dis);
  pts[3].beta = 1;

  std::vector<SystemState> states(5);
  states[0].t_in = 25.0;
  states[0].e_bess = 200.0;
  states[0].mu_prev = 0;
  for (int t = 0; t < 4; ++t) {
    const double p_it = it_power_pwl(pts[t].s, pts[t].mu, ctx.compute);
    states[t + 1].t_in =
        thermal_step(states[t].t_in, ctx.t_amb[t], p_it, pts[t].q_cool, ctx.thermal, ctx.dt_h);
    states[t + 1].e_bess = bess_step(states[t].e_bess, pts[t].p_ch, pts[t].p_dis, ctx.bess, ctx.dt_h);
    states[t + 1].mu_prev = pts[t].mu;
  }
  REQUIRE(std::abs(states[4].e_bess - states[0].e_bess) < 1e-9);

  const auto report = validate_trajectory(states, pts, limits, ckpt, ctx);
  INFO(report.summary());
  CHECK(report.ok());
}

TEST_CASE("validator flags forbidden shutdown and ramp violations") {
  ValidationContext ctx;
  ctx.compute = paper_compute();
  ctx.thermal = paper_thermal();
  ctx.bess = paper_bess();
  ctx.t_amb = {20.0, 20.0};
  ctx.dt_h = 0.25;

  CheckpointPattern ckpt;
  ckpt.delta = {1, 0};  // shutdown admissible only in slot 1

  PccLimitSeries limits;
  limits.p_lo.assign(2, -1000.0);
  limits.p_hi.assign(2, 1000.0);
  limits.r_grid = 150.0;

  std::vector<OperatingPoint> pts(2);
  pts[0].mu = 1;
  pts[0].s = ctx.compute.s_min;
  pts[1].mu = 0;  // forbidden: delta(2) = 0

  std::vector<SystemState> states(3);
  states[0] = {22.0, 200.0, 1, 0.0};
  states[1] = {22.0, 200.0, 1, 0.0};
  states[2] = {22.0, 200.0, 0, 0.0};

  auto report = validate_trajectory(states, pts, limits, ckpt, ctx);
  bool saw_ckpt = false;
  for (const auto& v : report.violations) saw_ckpt |= v.constraint == "checkpoint-continuity";
  CHECK(saw_ckpt);

  // Ramp: exchange jumping 0 -> 160 MW exceeds the 150 MW/slot limit.
  std::vector<OperatingPoint> ramp_pts(2);
  ramp_pts[1].p_ch = 160.0;
  ramp_pts[1].beta = 1;
  std::vector<SystemState> ramp_states(3);
  ramp_states[0] = {22.0, 200.0, 0, 0.0};
  ramp_states[1] = {22.0, 200.0, 0, 0.0};
  ramp_states[2] = {22.0, 238.0, 0, 0.0};
  CheckpointPattern free_ckpt = CheckpointPattern::periodic(1, 2);
  auto ramp_report = validate_trajectory(ramp_states, ramp_pts, limits, free_ckpt, ctx);
  bool saw_ramp = false;
  for (const auto& v : ramp_report.violations) saw_ramp |= v.constraint == "pcc-ramp";
  CHECK(saw_ramp);

  CHECK_THROWS_AS(validate_trajectory({}, pts, limits, free_ckpt, ctx), std::invalid_argument);
}

TEST_CASE("config invariants are enforced") {
  ComputeConfig cc;
  cc.s_min = 1.2;
  CHECK_THROWS_AS(cc.validate(), config_error);
  ThermalConfig th;
  th.t_min = 30.0;
  CHECK_THROWS_AS(th.validate(), config_error);
  BessConfig b;
  b.e_init = 500.0;
  CHECK_THROWS_AS(b.validate(), config_error);
  CHECK_NOTHROW(ComputeConfig{}.validate());
  CHECK_NOTHROW(ThermalConfig{}.validate());
  CHECK_NOTHROW(BessConfig{}.validate());
}
