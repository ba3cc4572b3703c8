#pragma once

// Fixed-format MPS writer and reader for MilpModel. The writer emits a
// canonical form (one coefficient pair per line, explicit bounds whenever a
// variable deviates from the continuous [0, inf) default, OBJSENSE section,
// INTORG/INTEND markers) so that write -> read -> write is byte-identical.
// Values use shortest round-trip formatting and may overrun the nominal
// 12-character value field; they are always the last field on their line,
// which every mainstream reader accepts.
//
// Names longer than 8 characters (or containing blanks) cannot be encoded
// in fixed MPS; in that case every row and column is renamed positionally
// (R0000001 / X0000001) and the mapping is emitted next to the file.

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "aidc/common.hpp"
#include "aidc/milp/model.hpp"

namespace aidc::milp {

namespace detail {

inline bool mps_encodable(const std::string& name) {
  if (name.empty() || name.size() > 8) return false;
  for (char c : name)
    if (c == ' ' || c == '\t' || c == '\'') return false;
  return true;
}

inline std::string pad8(const std::string& s) {
  std::string out = s;
  out.resize(8, ' ');
  return out;
}

}  // namespace detail

struct MpsNameMap {
  bool renamed = false;
  std::vector<std::pair<std::string, std::string>> rows;  // original -> emitted
  std::vector<std::pair<std::string, std::string>> cols;
};

inline std::string write_mps_string(const MilpModel& m, MpsNameMap* map_out = nullptr) {
  m.validate();
  // Decide on renaming: all-or-nothing keeps the emitted names unique.
  bool ok = detail::mps_encodable(m.name);
  for (const auto& c : m.cons) ok = ok && detail::mps_encodable(c.name);
  for (const auto& v : m.vars) ok = ok && detail::mps_encodable(v.name);
  {
    std::map<std::string, int> uniq;
    for (const auto& c : m.cons) ok = ok && ++uniq[c.name] == 1;
    uniq.clear();
    for (const auto& v : m.vars) ok = ok && ++uniq[v.name] == 1;
  }

  std::vector<std::string> row_names(m.cons.size()), col_names(m.vars.size());
  MpsNameMap map;
  map.renamed = !ok;
  char buf[16];
  for (std::size_t i = 0; i < m.cons.size(); ++i) {
    if (ok) {
      row_names[i] = m.cons[i].name;
    } else {
      std::snprintf(buf, sizeof(buf), "R%07zu", i + 1);
      row_names[i] = buf;
      map.rows.push_back({m.cons[i].name, row_names[i]});
    }
  }
  for (std::size_t j = 0; j < m.vars.size(); ++j) {
    if (ok) {
      col_names[j] = m.vars[j].name;
    } else {
      std::snprintf(buf, sizeof(buf), "X%07zu", j + 1);
      col_names[j] = buf;
      map.cols.push_back({m.vars[j].name, col_names[j]});
    }
  }
  if (map_out) *map_out = map;

  // Column view of the rows, ordered by row index.
  std::vector<std::vector<std::pair<int, double>>> col_entries(m.vars.size());
  for (std::size_t i = 0; i < m.cons.size(); ++i)
    for (const auto& [j, a] : m.cons[i].coeffs)
      col_entries[j].push_back({static_cast<int>(i), a});

  std::ostringstream out;
  out << "NAME          " << (ok ? m.name : std::string("RENAMED")) << "\n";
  out << "OBJSENSE\n    " << (m.sense == Sense::maximize ? "MAX" : "MIN") << "\n";
  out << "ROWS\n";
  out << " N  COST\n";
  for (std::size_t i = 0; i < m.cons.size(); ++i) {
    const char rel = m.cons[i].rel == Relation::le ? 'L' : m.cons[i].rel == Relation::ge ? 'G' : 'E';
    out << " " << rel << "  " << row_names[i] << "\n";
  }
  out << "COLUMNS\n";
  bool in_int = false;
  int marker_count = 0;
  for (std::size_t j = 0; j < m.vars.size(); ++j) {
    const bool want_int = m.vars[j].type == VarType::binary;
    if (want_int != in_int) {
      std::snprintf(buf, sizeof(buf), "MARKER%02d", ++marker_count);
      out << "    " << detail::pad8(buf) << "  'MARKER'                 "
          << (want_int ? "'INTORG'" : "'INTEND'") << "\n";
      in_int = want_int;
    }
    bool any = false;
    if (m.objective[j] != 0.0) {
      out << "    " << detail::pad8(col_names[j]) << "  " << detail::pad8("COST") << "  "
          << format_double(m.objective[j]) << "\n";
      any = true;
    }
    for (const auto& [i, a] : col_entries[j]) {
      out << "    " << detail::pad8(col_names[j]) << "  " << detail::pad8(row_names[i]) << "  "
          << format_double(a) << "\n";
      any = true;
    }
    if (!any)  // declare otherwise-empty columns with a zero objective entry
      out << "    " << detail::pad8(col_names[j]) << "  " << detail::pad8("COST") << "  0\n";
  }
  if (in_int) {
    std::snprintf(buf, sizeof(buf), "MARKER%02d", ++marker_count);
    out << "    " << detail::pad8(buf) << "  'MARKER'                 'INTEND'\n";
  }
  out << "RHS\n";
  if (m.obj_offset != 0.0)
    out << "    " << detail::pad8("RHS") << "  " << detail::pad8("COST") << "  "
        << format_double(-m.obj_offset) << "\n";
  for (std::size_t i = 0; i < m.cons.size(); ++i)
    if (m.cons[i].rhs != 0.0)
      out << "    " << detail::pad8("RHS") << "  " << detail::pad8(row_names[i]) << "  "
          << format_double(m.cons[i].rhs) << "\n";
  out << "BOUNDS\n";
  for (std::size_t j = 0; j < m.vars.size(); ++j) {
    const auto& v = m.vars[j];
    const std::string name = detail::pad8(col_names[j]);
    if (v.type == VarType::binary) {
      if (v.lb == 0.0 && v.ub == 1.0) {
        out << " BV " << detail::pad8("BND") << "  " << name << "\n";
      } else {
        out << " LO " << detail::pad8("BND") << "  " << name << "  " << format_double(v.lb) << "\n";
        out << " UP " << detail::pad8("BND") << "  " << name << "  " << format_double(v.ub) << "\n";
      }
      continue;
    }
    if (v.lb == 0.0 && v.ub == kInf) continue;  // continuous default
    if (v.lb == v.ub) {
      out << " FX " << detail::pad8("BND") << "  " << name << "  " << format_double(v.lb) << "\n";
      continue;
    }
    if (v.lb == -kInf) out << " MI " << detail::pad8("BND") << "  " << name << "\n";
    else if (v.lb != 0.0)
      out << " LO " << detail::pad8("BND") << "  " << name << "  " << format_double(v.lb) << "\n";
    if (v.ub != kInf)
      out << " UP " << detail::pad8("BND") << "  " << name << "  " << format_double(v.ub) << "\n";
  }
  out << "ENDATA\n";
  return out.str();
}

/// Writes the model; emits `<path>.namemap` when names had to be replaced.
inline void write_mps(const MilpModel& m, const std::string& path) {
  MpsNameMap map;
  const std::string text = write_mps_string(m, &map);
  write_text_file(path, text);
  if (map.renamed) {
    std::string mapping = "kind,original,emitted\n";
    for (const auto& [o, e] : map.rows) mapping += "row," + o + "," + e + "\n";
    for (const auto& [o, e] : map.cols) mapping += "col," + o + "," + e + "\n";
    write_text_file(path + ".namemap", mapping);
  }
}

inline MilpModel read_mps_string(const std::string& text, const std::string& where = "<mps>") {
  MilpModel m;
  m.name = "";
  enum Section { none, objsense, rows, columns, rhs, ranges, bounds, done } section = none;
  std::map<std::string, int> row_index;  // excludes the objective row
  std::map<std::string, int> col_index;
  std::string obj_row;
  bool in_int = false;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;

  auto tokens_of = [](const std::string& l) {
    std::vector<std::string> toks;
    std::istringstream ss(l);
    std::string t;
    while (ss >> t) toks.push_back(t);
    return toks;
  };
  auto col_of = [&](const std::string& name) {
    auto it = col_index.find(name);
    if (it != col_index.end()) return it->second;
    const int j = m.add_var(name, 0.0, kInf,
                            in_int ? VarType::binary : VarType::continuous);
    if (in_int) {  // integer default bounds [0, 1]
      m.vars[j].lb = 0.0;
      m.vars[j].ub = 1.0;
    }
    col_index[name] = j;
    return j;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '*') continue;
    const std::string loc = where + ":" + std::to_string(line_no);
    if (line[0] != ' ' && line[0] != '\t') {
      auto toks = tokens_of(line);
      const std::string& head = toks.empty() ? line : toks[0];
      if (head == "NAME") { m.name = toks.size() > 1 ? toks[1] : ""; continue; }
      if (head == "OBJSENSE") { section = objsense; continue; }
      if (head == "ROWS") { section = rows; continue; }
      if (head == "COLUMNS") { section = columns; continue; }
      if (head == "RHS") { section = rhs; continue; }
      if (head == "RANGES") { section = ranges; continue; }
      if (head == "BOUNDS") { section = bounds; continue; }
      if (head == "ENDATA") { section = done; break; }
      throw io_error(loc + ": unknown MPS section '" + head + "'");
    }
    auto toks = tokens_of(line);
    if (toks.empty()) continue;
    switch (section) {
      case objsense: {
        if (toks[0] == "MAX" || toks[0] == "MAXIMIZE") m.sense = Sense::maximize;
        else m.sense = Sense::minimize;
        break;
      }
      case rows: {
        if (toks.size() < 2) throw io_error(loc + ": bad ROWS line");
        const std::string& type = toks[0];
        const std::string& name = toks[1];
        if (type == "N") {
          if (obj_row.empty()) obj_row = name;  // extra free rows are dropped
        } else {
          Relation rel = type == "L" ? Relation::le : type == "G" ? Relation::ge : Relation::eq;
          if (type != "L" && type != "G" && type != "E")
            throw io_error(loc + ": unknown row type " + type);
          row_index[name] = m.n_cons();
          m.add_con(name, {}, rel, 0.0);
        }
        break;
      }
      case columns: {
        if (toks.size() >= 3 && toks[1] == "'MARKER'") {
          if (toks[2] == "'INTORG'") in_int = true;
          else if (toks[2] == "'INTEND'") in_int = false;
          else throw io_error(loc + ": unknown marker " + toks[2]);
          break;
        }
        if (toks.size() < 3 || toks.size() % 2 == 0)
          throw io_error(loc + ": bad COLUMNS line");
        const int j = col_of(toks[0]);
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const double v = parse_double(toks[k + 1], loc);
          if (toks[k] == obj_row) {
            m.objective[j] = v;
          } else {
            auto it = row_index.find(toks[k]);
            if (it == row_index.end()) throw io_error(loc + ": unknown row " + toks[k]);
            if (v != 0.0) m.cons[it->second].coeffs.push_back({j, v});
          }
        }
        break;
      }
      case rhs: {
        if (toks.size() < 3 || toks.size() % 2 == 0)
          throw io_error(loc + ": bad RHS line");
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const double v = parse_double(toks[k + 1], loc);
          if (toks[k] == obj_row) {
            m.obj_offset = -v;
          } else {
            auto it = row_index.find(toks[k]);
            if (it == row_index.end()) throw io_error(loc + ": unknown row " + toks[k]);
            m.cons[it->second].rhs = v;
          }
        }
        break;
      }
      case ranges: {
        if (toks.size() < 3) throw io_error(loc + ": bad RANGES line");
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          auto it = row_index.find(toks[k]);
          if (it == row_index.end()) throw io_error(loc + ": unknown row " + toks[k]);
          const double r = parse_double(toks[k + 1], loc);
          const Constraint& c = m.cons[it->second];
          Constraint extra = c;
          extra.name = c.name + "_rng";
          if (c.rel == Relation::le) {
            extra.rel = Relation::ge;
            extra.rhs = c.rhs - std::abs(r);
          } else if (c.rel == Relation::ge) {
            extra.rel = Relation::le;
            extra.rhs = c.rhs + std::abs(r);
          } else {
            extra.rel = r >= 0.0 ? Relation::le : Relation::ge;
            extra.rhs = c.rhs + r;
            m.cons[it->second].rel = r >= 0.0 ? Relation::ge : Relation::le;
          }
          m.cons.push_back(std::move(extra));
        }
        break;
      }
      case bounds: {
        if (toks.size() < 3) throw io_error(loc + ": bad BOUNDS line");
        const std::string& kind = toks[0];
        const int j = col_of(toks[2]);
        auto need_value = [&](const char* k) {
          if (toks.size() < 4) throw io_error(loc + ": bound " + k + " needs a value");
          return parse_double(toks[3], loc);
        };
        if (kind == "UP") m.vars[j].ub = need_value("UP");
        else if (kind == "LO") m.vars[j].lb = need_value("LO");
        else if (kind == "FX") m.vars[j].lb = m.vars[j].ub = need_value("FX");
        else if (kind == "MI") m.vars[j].lb = -kInf;
        else if (kind == "PL") m.vars[j].ub = kInf;
        else if (kind == "FR") { m.vars[j].lb = -kInf; m.vars[j].ub = kInf; }
        else if (kind == "BV") { m.vars[j].lb = 0.0; m.vars[j].ub = 1.0; m.vars[j].type = VarType::binary; }
        else throw io_error(loc + ": unsupported bound kind " + kind);
        break;
      }
      case none:
      case done:
        throw io_error(loc + ": data before any section");
    }
  }
  // General integers beyond binaries are outside this model's scope.
  for (const auto& v : m.vars)
    if (v.type == VarType::binary && (v.lb < -1e-9 || v.ub > 1.0 + 1e-9))
      throw io_error(where + ": integer variable " + v.name + " is not binary");
  m.validate();
  return m;
}

inline MilpModel read_mps(const std::string& path) {
  return read_mps_string(read_text_file(path), path);
}

}  // namespace aidc::milp
