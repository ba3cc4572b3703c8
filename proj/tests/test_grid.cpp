#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "aidc/common.hpp"
#include "aidc/grid.hpp"

using namespace aidc;
using Catch::Approx;

namespace {

std::string fixture_path() {
  // The test binary runs from the build tree; data lives in the source tree.
  for (const char* p : {"tests/data/case3.m", "../tests/data/case3.m", "../../tests/data/case3.m"}) {
    std::ifstream f(p);
    if (f) return p;
  }
  return TEST_DATA_DIR "/case3.m";
}

grid::NetworkCase fixture() {
  auto cs = grid::load_case(fixture_path());
  cs.location_bus = 3;
  return cs;
}

/// Background of the worked example: 100 MW load at bus 2, balanced at slack.
std::vector<double> background(const grid::NetworkCase& cs) {
  std::vector<double> inj(cs.buses.size(), 0.0);
  inj[cs.bus_index(2)] = -100.0;
  return inj;
}

}  // namespace

TEST_CASE("load_case parses the 3-bus fixture") {
  const auto cs = fixture();
  CHECK(cs.buses.size() == 3);
  CHECK(cs.lines.size() == 3);
  CHECK(cs.slack_bus == 1);
  CHECK(cs.base_mva == 100.0);
  CHECK(cs.buses[cs.bus_index(2)].base_load_mw == 100.0);
  for (const auto& l : cs.lines) {
    CHECK(l.susceptance == Approx(1.0));
    CHECK(l.f_max_mw == Approx(80.0));
  }
}

TEST_CASE("load_case rejects malformed cases") {
  auto write_tmp = [](const char* name, const std::string& body) {
    std::string path = std::string("tmp_") + name;
    write_text_file(path, body);
    return path;
  };
  // Zero-reactance branch.
  const auto zero_x = write_tmp("zero_x.m",
                                "mpc.baseMVA = 100;\n"
                                "mpc.bus = [\n1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;\n"
                                "2 1 50 0 0 0 1 1 0 345 1 1.1 0.9;\n];\n"
                                "mpc.branch = [\n1 2 0 0 0 80 0 0 0 0 1 -360 360;\n];\n");
  CHECK_THROWS_AS(grid::load_case(zero_x), io_error);
  // No slack bus.
  const auto no_slack = write_tmp("no_slack.m",
                                  "mpc.baseMVA = 100;\n"
                                  "mpc.bus = [\n1 1 0 0 0 0 1 1 0 345 1 1.1 0.9;\n"
                                  "2 1 50 0 0 0 1 1 0 345 1 1.1 0.9;\n];\n"
                                  "mpc.branch = [\n1 2 0 1 0 80 0 0 0 0 1 -360 360;\n];\n");
  CHECK_THROWS_AS(grid::load_case(no_slack), io_error);
  // Disconnected bus.
  const auto disc = write_tmp("disconnected.m",
                              "mpc.baseMVA = 100;\n"
                              "mpc.bus = [\n1 3 0 0 0 0 1 1 0 345 1 1.1 0.9;\n"
                              "2 1 50 0 0 0 1 1 0 345 1 1.1 0.9;\n"
                              "3 1 10 0 0 0 1 1 0 345 1 1.1 0.9;\n];\n"
                              "mpc.branch = [\n1 2 0 1 0 80 0 0 0 0 1 -360 360;\n];\n");
  CHECK_THROWS_AS(grid::load_case(disc), io_error);
  CHECK_THROWS_AS(grid::load_case("does_not_exist.m"), io_error);
  std::remove(zero_x.c_str());
  std::remove(no_slack.c_str());
  std::remove(disc.c_str());
}

TEST_CASE("dc_power_flow solves the worked 3-bus example") {
  const auto cs = fixture();
  const auto sol = grid::dc_power_flow(cs, background(cs));
  // Lines are (1,2), (1,3), (2,3): 66.67 / 33.33 toward bus 2 and 3, and
  // 33.33 flowing 3 -> 2, i.e. -33.33 on the (2,3) orientation.
  CHECK(sol.line_flow_mw[0] == Approx(200.0 / 3.0).margin(1e-8));
  CHECK(sol.line_flow_mw[1] == Approx(100.0 / 3.0).margin(1e-8));
  CHECK(sol.line_flow_mw[2] == Approx(-100.0 / 3.0).margin(1e-8));

  // Nodal balance at every bus, slack included after balancing.
  std::vector<double> net(cs.buses.size(), 0.0);
  for (std::size_t l = 0; l < cs.lines.size(); ++l) {
    net[cs.bus_index(cs.lines[l].from)] += sol.line_flow_mw[l];
    net[cs.bus_index(cs.lines[l].to)] -= sol.line_flow_mw[l];
  }
  CHECK(net[cs.bus_index(1)] == Approx(100.0).margin(1e-8));
  CHECK(net[cs.bus_index(2)] == Approx(-100.0).margin(1e-8));
  CHECK(net[cs.bus_index(3)] == Approx(0.0).margin(1e-8));
}

TEST_CASE("dc_power_flow is linear") {
  const auto cs = fixture();
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(3), b(3), ab(3);
    for (int i = 0; i < 3; ++i) {
      a[i] = rng.uniform(-200.0, 200.0);
      b[i] = rng.uniform(-200.0, 200.0);
      ab[i] = a[i] + b[i];
    }
    const auto fa = grid::dc_power_flow(cs, a);
    const auto fb = grid::dc_power_flow(cs, b);
    const auto fab = grid::dc_power_flow(cs, ab);
    for (std::size_t l = 0; l < cs.lines.size(); ++l)
      CHECK(fab.line_flow_mw[l] == Approx(fa.line_flow_mw[l] + fb.line_flow_mw[l]).margin(1e-8));
  }
  // Zero injection -> zero flow.
  const auto fz = grid::dc_power_flow(cs, {0.0, 0.0, 0.0});
  for (double f : fz.line_flow_mw) CHECK(f == Approx(0.0).margin(1e-12));
}

TEST_CASE("ptdf_column matches the hand-solved sensitivities") {
  const auto cs = fixture();
  const auto col = grid::ptdf_column(cs, 3);
  CHECK(col[0] == Approx(-1.0 / 3.0).margin(1e-9));  // line (1,2)
  CHECK(col[1] == Approx(-2.0 / 3.0).margin(1e-9));  // line (1,3)
  CHECK(col[2] == Approx(-1.0 / 3.0).margin(1e-9));  // line (2,3)

  const auto slack_col = grid::ptdf_column(cs, 1);
  for (double v : slack_col) CHECK(v == 0.0);
  CHECK_THROWS_AS(grid::ptdf_column(cs, 99), io_error);
}

TEST_CASE("ptdf reproduces dc_power_flow by superposition") {
  const auto cs = fixture();
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> inj(3);
    for (auto& v : inj) v = rng.uniform(-150.0, 150.0);
    // Balance at slack, then superpose per-bus PTDF columns.
    std::vector<double> balanced = inj;
    double resid = 0.0;
    for (double v : balanced) resid += v;
    balanced[cs.bus_index(1)] -= resid;
    std::vector<double> flows(cs.lines.size(), 0.0);
    for (const auto& bus : cs.buses) {
      const auto col = grid::ptdf_column(cs, bus.id);
      for (std::size_t l = 0; l < flows.size(); ++l)
        flows[l] += col[l] * balanced[cs.bus_index(bus.id)];
    }
    const auto direct = grid::dc_power_flow(cs, inj);
    for (std::size_t l = 0; l < flows.size(); ++l)
      CHECK(flows[l] == Approx(direct.line_flow_mw[l]).margin(1e-8));
  }
}

TEST_CASE("derive_pcc_limits reproduces the [-140, 40] envelope") {
  const auto cs = fixture();
  grid::InjectionSeries s;
  s.per_slot.push_back(background(cs));
  const auto limits = grid::derive_pcc_limits(cs, s, 1000.0, -1000.0, 150.0);
  REQUIRE(limits.horizon() == 1);
  CHECK(limits.p_lo[0] == Approx(-140.0).margin(1e-7));
  CHECK(limits.p_hi[0] == Approx(40.0).margin(1e-7));
  CHECK(limits.collapsed[0] == 0);

  // Brute-force scan: every MW inside the interval keeps all lines within
  // limits; one MW outside breaks at least one.
  const auto ptdf = grid::ptdf_column(cs, 3);
  const auto base = grid::dc_power_flow(cs, background(cs));
  auto feasible = [&](double p) {
    for (std::size_t l = 0; l < cs.lines.size(); ++l)
      if (std::abs(base.line_flow_mw[l] - ptdf[l] * p) > 80.0 + 1e-9) return false;
    return true;
  };
  for (int p = -500; p <= 500; ++p) {
    const bool inside = p >= -140 && p <= 40;
    CHECK(feasible(p) == inside);
  }
}

TEST_CASE("derive_pcc_limits falls back to the cap when lines are slack") {
  auto cs = fixture();
  for (auto& l : cs.lines) l.f_max_mw = 1e9;
  grid::InjectionSeries s;
  s.per_slot.push_back(background(cs));
  const auto limits = grid::derive_pcc_limits(cs, s, 1000.0, -1000.0);
  CHECK(limits.p_lo[0] == Approx(-1000.0));
  CHECK(limits.p_hi[0] == Approx(1000.0));
}

TEST_CASE("derive_pcc_limits collapses one-sided and empty intervals") {
  const auto cs = fixture();
  // Background sized so line (1,2) already runs at its 80 MW limit: any
  // import at bus 3 would push it over, so the upper limit collapses to 0.
  grid::InjectionSeries s;
  std::vector<double> inj(cs.buses.size(), 0.0);
  inj[cs.bus_index(2)] = -120.0;
  s.per_slot.push_back(inj);
  const auto limits = grid::derive_pcc_limits(cs, s, 1000.0, -1000.0);
  REQUIRE(limits.horizon() == 1);
  CHECK(limits.p_hi[0] == Approx(0.0).margin(1e-7));
  CHECK(limits.p_lo[0] < 0.0);

  // Overloaded background with no relief possible: empty interval -> [0,0].
  auto tight = fixture();
  for (auto& l : tight.lines) l.f_max_mw = 10.0;
  grid::InjectionSeries s2;
  s2.per_slot.push_back(background(cs));
  const auto collapsed = grid::derive_pcc_limits(tight, s2, 1000.0, -1000.0);
  CHECK(collapsed.p_lo[0] == 0.0);
  CHECK(collapsed.p_hi[0] == 0.0);
  CHECK(collapsed.collapsed[0] == 1);
}

TEST_CASE("scaling line limits never shrinks the envelope") {
  const auto cs = fixture();
  grid::InjectionSeries s;
  s.per_slot.push_back(background(cs));
  double prev_lo = 0.0, prev_hi = 0.0;
  bool first = true;
  for (double kappa : {1.0, 1.1, 1.25, 1.5, 2.0}) {
    const auto lim = grid::derive_pcc_limits(cs, s, 1000.0, -1000.0, 150.0, kappa);
    if (!first) {
      CHECK(lim.p_lo[0] <= prev_lo + 1e-9);
      CHECK(lim.p_hi[0] >= prev_hi - 1e-9);
    }
    prev_lo = lim.p_lo[0];
    prev_hi = lim.p_hi[0];
    first = false;
  }
}

TEST_CASE("limits csv round trip") {
  const auto cs = fixture();
  grid::InjectionSeries s;
  s.per_slot.push_back(background(cs));
  s.per_slot.push_back(background(cs));
  const auto limits = grid::derive_pcc_limits(cs, s, 1000.0, -1000.0);
  grid::write_limits_csv("tmp_limits.csv", limits);
  const auto back = grid::read_limits_csv("tmp_limits.csv");
  REQUIRE(back.horizon() == limits.horizon());
  for (int t = 0; t < limits.horizon(); ++t) {
    CHECK(back.p_lo[t] == limits.p_lo[t]);
    CHECK(back.p_hi[t] == limits.p_hi[t]);
  }
  std::remove("tmp_limits.csv");
}
