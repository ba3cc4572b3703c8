#pragma once

// Transmission-side machinery: MATPOWER-subset case parsing, DC power flow,
// PTDF sensitivities, and the per-slot admissible PCC exchange envelope.
//
// Sign conventions (single source of truth; every test follows these):
//  * Bus injections are net generation minus load, MW. Positive injects.
//  * A line (from, to) carries positive flow from `from` toward `to`:
//    F = B * (theta_from - theta_to).
//  * ptdf_column(bus) is dF/dp for +1 MW injected at `bus` and withdrawn at
//    the slack bus. The slack column is identically zero.
//  * Data-center import p > 0 is a load at the location bus, balanced at the
//    slack, so line flows respond as F(p) = F0 - ptdf * p.
//  * Imbalanced injection vectors are repaired by assigning the residual to
//    the slack bus before solving.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "aidc/common.hpp"
#include "aidc/linalg.hpp"
#include "aidc/model.hpp"

namespace aidc::grid {

struct Bus {
  int id = 0;
  double base_load_mw = 0.0;
};

struct Line {
  int from = 0;
  int to = 0;
  double susceptance = 0.0;  // 1/x, p.u.-compatible
  double f_max_mw = 0.0;     // thermal limit; +inf when the table gives none
};

struct NetworkCase {
  std::vector<Bus> buses;
  std::vector<Line> lines;
  int slack_bus = -1;
  int location_bus = -1;  // PCC bus; set by the caller before limit derivation
  double base_mva = 100.0;

  int bus_index(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (buses[i].id == id) return static_cast<int>(i);
    throw io_error("unknown bus id " + std::to_string(id));
  }

  double total_base_load() const {
    double s = 0.0;
    for (const auto& b : buses) s += b.base_load_mw;
    return s;
  }

  void validate() const {
    if (buses.empty() || lines.empty()) throw io_error("case has no buses or no lines");
    if (slack_bus < 0) throw io_error("case has no slack bus (type 3)");
    bus_index(slack_bus);
    std::map<int, int> seen;
    for (const auto& b : buses)
      if (++seen[b.id] > 1) throw io_error("duplicate bus id " + std::to_string(b.id));
    for (const auto& l : lines) {
      bus_index(l.from);
      bus_index(l.to);
      if (!(l.susceptance > 0.0)) throw io_error("non-positive susceptance on line " +
                                                 std::to_string(l.from) + "-" + std::to_string(l.to));
      if (!(l.f_max_mw > 0.0)) throw io_error("non-positive line limit on line " +
                                              std::to_string(l.from) + "-" + std::to_string(l.to));
    }
    // Connectivity via BFS over the line graph.
    std::vector<int> mark(buses.size(), 0);
    std::vector<int> stack{0};
    mark[0] = 1;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& l : lines) {
        const int a = bus_index(l.from), b = bus_index(l.to);
        if (a == u && !mark[b]) { mark[b] = 1; stack.push_back(b); }
        if (b == u && !mark[a]) { mark[a] = 1; stack.push_back(a); }
      }
    }
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (!mark[i]) throw io_error("network is disconnected at bus " + std::to_string(buses[i].id));
  }
};

// ---------------------------------------------------------------------------
// MATPOWER-subset parser
//
// Accepts the textual subset of a MATPOWER .m case: `mpc.baseMVA = <v>;`,
// `mpc.bus = [ rows ];` and `mpc.branch = [ rows ];` with one row per line,
// '%' comments, rows optionally ending in ';'. Bus rows need at least
// [id type Pd]; branch rows at least [from to r x b rateA]. Other columns
// and other mpc fields (gen, gencost, ...) are ignored. rateA = 0 follows
// the MATPOWER convention of "unlimited" and maps to +inf.

namespace detail {

inline std::string strip_comment(const std::string& line) {
  const auto pos = line.find('%');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

inline std::vector<std::vector<double>> parse_matrix(std::ifstream& in, const std::string& first,
                                                     int& line_no, const std::string& path) {
  std::vector<std::vector<double>> rows;
  std::string chunk = first.substr(first.find('[') + 1);
  bool done = false;
  std::string line = chunk;
  do {
    std::string body = strip_comment(line);
    const auto close = body.find(']');
    if (close != std::string::npos) {
      body = body.substr(0, close);
      done = true;
    }
    for (auto& rowtext : split(body, ';')) {
      std::vector<double> row;
      for (std::istringstream ss(rowtext); ss;) {
        std::string tok;
        if (!(ss >> tok)) break;
        try {
          row.push_back(parse_double(tok, path + ":" + std::to_string(line_no)));
        } catch (const io_error&) {
          throw io_error(path + ":" + std::to_string(line_no) + ": bad numeric token '" + tok + "'");
        }
      }
      if (!row.empty()) rows.push_back(std::move(row));
    }
    if (done) break;
    ++line_no;
  } while (std::getline(in, line));
  if (!done) throw io_error(path + ": unterminated matrix block");
  return rows;
}

}  // namespace detail

inline NetworkCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open case file " + path);
  NetworkCase cs;
  std::vector<std::vector<double>> bus_rows, branch_rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = detail::strip_comment(line);
    if (body.find("mpc.baseMVA") != std::string::npos) {
      const auto eq = body.find('=');
      const std::string rest = body.substr(eq + 1);
      auto tok = trim(rest);
      if (!tok.empty() && tok.back() == ';') tok.remove_suffix(1);
      cs.base_mva = parse_double(trim(tok), path + ":" + std::to_string(line_no));
    } else if (body.find("mpc.bus") != std::string::npos && body.find('[') != std::string::npos) {
      bus_rows = detail::parse_matrix(in, body, line_no, path);
    } else if (body.find("mpc.branch") != std::string::npos && body.find('[') != std::string::npos) {
      branch_rows = detail::parse_matrix(in, body, line_no, path);
    }
  }
  if (bus_rows.empty()) throw io_error(path + ": missing mpc.bus table");
  if (branch_rows.empty()) throw io_error(path + ": missing mpc.branch table");

  for (const auto& r : bus_rows) {
    if (r.size() < 3) throw io_error(path + ": bus row needs at least [id type Pd]");
    Bus b;
    b.id = static_cast<int>(r[0]);
    b.base_load_mw = r[2];
    const int type = static_cast<int>(r[1]);
    if (type == 3) {
      if (cs.slack_bus >= 0) throw io_error(path + ": multiple slack buses");
      cs.slack_bus = b.id;
    }
    cs.buses.push_back(b);
  }
  for (const auto& r : branch_rows) {
    if (r.size() < 6) throw io_error(path + ": branch row needs at least [from to r x b rateA]");
    Line l;
    l.from = static_cast<int>(r[0]);
    l.to = static_cast<int>(r[1]);
    const double x = r[3];
    if (std::abs(x) < 1e-12)
      throw io_error(path + ": zero-reactance branch " + std::to_string(l.from) + "-" +
                     std::to_string(l.to));
    l.susceptance = 1.0 / x;
    l.f_max_mw = r[5] > 0.0 ? r[5] : std::numeric_limits<double>::infinity();
    cs.lines.push_back(l);
  }
  cs.validate();
  return cs;
}

// ---------------------------------------------------------------------------
// DC power flow and PTDF

struct FlowSolution {
  std::vector<double> angle;         // per bus, slack fixed to 0
  std::vector<double> line_flow_mw;  // per line, positive from->to
};

namespace detail {

/// Factorizes the slack-reduced susceptance Laplacian. Bus order follows
/// the case; the slack row/column is removed and theta_slack = 0.
inline linalg::LuFactor reduced_laplacian(const NetworkCase& cs, std::vector<int>& red_index) {
  const std::size_t n = cs.buses.size();
  const int slack = cs.bus_index(cs.slack_bus);
  red_index.assign(n, -1);
  int k = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (static_cast<int>(i) != slack) red_index[i] = k++;
  std::vector<double> lap(static_cast<std::size_t>(k) * k, 0.0);
  for (const auto& l : cs.lines) {
    const int a = cs.bus_index(l.from), b = cs.bus_index(l.to);
    const int ra = red_index[a], rb = red_index[b];
    if (ra >= 0) lap[static_cast<std::size_t>(ra) * k + ra] += l.susceptance;
    if (rb >= 0) lap[static_cast<std::size_t>(rb) * k + rb] += l.susceptance;
    if (ra >= 0 && rb >= 0) {
      lap[static_cast<std::size_t>(ra) * k + rb] -= l.susceptance;
      lap[static_cast<std::size_t>(rb) * k + ra] -= l.susceptance;
    }
  }
  linalg::LuFactor lu;
  if (!lu.factor(std::move(lap), static_cast<std::size_t>(k)))
    throw io_error("singular network matrix (disconnected case?)");
  return lu;
}

inline FlowSolution flows_from_reduced(const NetworkCase& cs, const linalg::LuFactor& lu,
                                       const std::vector<int>& red_index,
                                       const std::vector<double>& injection_mw) {
  const std::size_t n = cs.buses.size();
  std::vector<double> rhs(lu.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (red_index[i] >= 0) rhs[red_index[i]] = injection_mw[i];
  std::vector<double> theta_red;
  lu.solve(theta_red, rhs);
  FlowSolution sol;
  sol.angle.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (red_index[i] >= 0) sol.angle[i] = theta_red[red_index[i]];
  sol.line_flow_mw.reserve(cs.lines.size());
  for (const auto& l : cs.lines) {
    const int a = cs.bus_index(l.from), b = cs.bus_index(l.to);
    sol.line_flow_mw.push_back(l.susceptance * (sol.angle[a] - sol.angle[b]));
  }
  return sol;
}

}  // namespace detail

/// Balances the injection vector at the slack, then solves angles and flows.
inline FlowSolution dc_power_flow(const NetworkCase& cs, std::vector<double> injection_mw) {
  if (injection_mw.size() != cs.buses.size())
    throw std::invalid_argument("injection vector length mismatch");
  double residual = 0.0;
  for (double v : injection_mw) residual += v;
  injection_mw[cs.bus_index(cs.slack_bus)] -= residual;
  std::vector<int> red_index;
  const auto lu = detail::reduced_laplacian(cs, red_index);
  return detail::flows_from_reduced(cs, lu, red_index, injection_mw);
}

/// Line-flow sensitivities to +1 MW at `bus_id`, withdrawn at the slack.
inline std::vector<double> ptdf_column(const NetworkCase& cs, int bus_id) {
  const int bi = cs.bus_index(bus_id);
  if (bus_id == cs.slack_bus) return std::vector<double>(cs.lines.size(), 0.0);
  std::vector<double> inj(cs.buses.size(), 0.0);
  inj[bi] = 1.0;
  inj[cs.bus_index(cs.slack_bus)] = -1.0;
  std::vector<int> red_index;
  const auto lu = detail::reduced_laplacian(cs, red_index);
  return detail::flows_from_reduced(cs, lu, red_index, inj).line_flow_mw;
}

// ---------------------------------------------------------------------------
// Admissible exchange envelope

/// Per-slot background net injections (generation minus load, AIDC excluded).
struct InjectionSeries {
  std::vector<std::vector<double>> per_slot;  // [t][bus], case bus order

  int horizon() const { return static_cast<int>(per_slot.size()); }
};

/// Background injections obtained by scaling the case base loads to a system
/// demand series, with all generation assigned to the slack via balancing.
inline InjectionSeries injections_from_demand(const NetworkCase& cs,
                                              const std::vector<double>& demand_mw) {
  const double total = cs.total_base_load();
  if (total <= 0.0) throw config_error("case has no base load to scale");
  InjectionSeries s;
  s.per_slot.reserve(demand_mw.size());
  for (double d : demand_mw) {
    std::vector<double> inj(cs.buses.size(), 0.0);
    for (std::size_t i = 0; i < cs.buses.size(); ++i)
      inj[i] = -cs.buses[i].base_load_mw * d / total;
    s.per_slot.push_back(std::move(inj));
  }
  return s;
}

/// Derives [P_lo(t), P_hi(t)] such that no line exceeds its thermal limit
/// for any exchange inside the interval, intersected with [floor, cap].
/// Empty intervals clamp to [0, 0] with the slot flagged collapsed.
inline PccLimitSeries derive_pcc_limits(const NetworkCase& cs, const InjectionSeries& injections,
                                        double import_cap_mw, double export_floor_mw,
                                        double r_grid = 150.0, double line_scale = 1.0) {
  if (cs.location_bus < 0) throw config_error("location bus not set on the case");
  cs.bus_index(cs.location_bus);
  std::vector<int> red_index;
  const auto lu = detail::reduced_laplacian(cs, red_index);
  const auto ptdf = [&] {
    if (cs.location_bus == cs.slack_bus) return std::vector<double>(cs.lines.size(), 0.0);
    std::vector<double> inj(cs.buses.size(), 0.0);
    inj[cs.bus_index(cs.location_bus)] = 1.0;
    inj[cs.bus_index(cs.slack_bus)] = -1.0;
    return detail::flows_from_reduced(cs, lu, red_index, inj).line_flow_mw;
  }();

  PccLimitSeries out;
  out.import_cap = import_cap_mw;
  out.export_floor = export_floor_mw;
  out.r_grid = r_grid;
  for (const auto& raw_inj : injections.per_slot) {
    std::vector<double> inj = raw_inj;
    double residual = 0.0;
    for (double v : inj) residual += v;
    inj[cs.bus_index(cs.slack_bus)] -= residual;
    const auto base = detail::flows_from_reduced(cs, lu, red_index, inj);

    double lo = export_floor_mw, hi = import_cap_mw;
    bool empty = false;
    for (std::size_t l = 0; l < cs.lines.size(); ++l) {
      const double fmax = cs.lines[l].f_max_mw * line_scale;
      if (!std::isfinite(fmax)) continue;
      const double f0 = base.line_flow_mw[l];
      const double sens = ptdf[l];
      // -fmax <= f0 - sens * p <= fmax
      if (std::abs(sens) < 1e-9) {
        if (std::abs(f0) > fmax + 1e-9) empty = true;
        continue;
      }
      const double a = (f0 - fmax) / sens;
      const double b = (f0 + fmax) / sens;
      lo = std::max(lo, std::min(a, b));
      hi = std::min(hi, std::max(a, b));
    }
    if (empty || lo > hi) {
      out.p_lo.push_back(0.0);
      out.p_hi.push_back(0.0);
      out.collapsed.push_back(1);
    } else {
      out.p_lo.push_back(lo);
      out.p_hi.push_back(hi);
      out.collapsed.push_back(0);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV interop

inline void write_limits_csv(const std::string& path, const PccLimitSeries& s) {
  std::string text = "slot,p_lo_mw,p_hi_mw,collapsed\n";
  for (int t = 0; t < s.horizon(); ++t) {
    text += std::to_string(t + 1) + "," + format_double(s.p_lo[t]) + "," +
            format_double(s.p_hi[t]) + "," + std::to_string(int(s.collapsed.empty() ? 0 : s.collapsed[t])) + "\n";
  }
  write_text_file(path, text);
}

inline PccLimitSeries read_limits_csv(const std::string& path) {
  const auto table = read_csv(path);
  PccLimitSeries s;
  for (const auto& row : table.rows) {
    if (row.size() < 4) throw io_error(path + ": limits row needs 4 columns");
    s.p_lo.push_back(parse_double(row[1], path));
    s.p_hi.push_back(parse_double(row[2], path));
    s.collapsed.push_back(static_cast<std::uint8_t>(parse_long(row[3], path)));
  }
  s.validate();
  return s;
}

inline void write_injections_csv(const std::string& path, const NetworkCase& cs,
                                 const InjectionSeries& s) {
  std::string text = "slot,bus,mw\n";
  for (int t = 0; t < s.horizon(); ++t)
    for (std::size_t i = 0; i < cs.buses.size(); ++i)
      text += std::to_string(t + 1) + "," + std::to_string(cs.buses[i].id) + "," +
              format_double(s.per_slot[t][i]) + "\n";
  write_text_file(path, text);
}

inline InjectionSeries read_injections_csv(const std::string& path, const NetworkCase& cs) {
  const auto table = read_csv(path);
  InjectionSeries s;
  for (const auto& row : table.rows) {
    if (row.size() < 3) throw io_error(path + ": injection row needs 3 columns");
    const int slot = static_cast<int>(parse_long(row[0], path));
    if (slot < 1) throw io_error(path + ": slot must be >= 1");
    if (slot > s.horizon()) s.per_slot.resize(slot, std::vector<double>(cs.buses.size(), 0.0));
    s.per_slot[slot - 1][cs.bus_index(static_cast<int>(parse_long(row[1], path)))] =
        parse_double(row[2], path);
  }
  return s;
}

}  // namespace aidc::grid
