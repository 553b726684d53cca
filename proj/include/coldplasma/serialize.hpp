#pragma once

// Output formats: JSON summaries and CSV tables. Every floating-point value is
// written with 17 significant digits so files round-trip bit-exactly.

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>  // nlohmann::json, vendored

#include "coldplasma/criteria.hpp"
#include "coldplasma/phase_plane.hpp"
#include "coldplasma/sweep.hpp"

namespace coldplasma {

inline constexpr int kSchemaVersion = 1;

/// %.17g; non-finite values become an empty string (CSV) or null (JSON).
inline std::string format_double(double x) {
  if (!std::isfinite(x)) return {};
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace detail {

inline void write_json_string(std::ostream& os, const std::string& s) {
  // nlohmann's own escaping for strings.
  os << nlohmann::json(s).dump();
}

inline void write_json(std::ostream& os, const nlohmann::json& j, int indent, int depth) {
  const auto pad = [&](int level) {
    if (indent > 0) os << '\n' << std::string(static_cast<std::size_t>(indent * level), ' ');
  };
  switch (j.type()) {
    case nlohmann::json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        write_json_string(os, it.key());
        os << (indent > 0 ? ": " : ":");
        write_json(os, it.value(), indent, depth + 1);
      }
      pad(depth);
      os << '}';
      return;
    }
    case nlohmann::json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ',';
        first = false;
        pad(depth + 1);
        write_json(os, v, indent, depth + 1);
      }
      pad(depth);
      os << ']';
      return;
    }
    case nlohmann::json::value_t::number_float: {
      const double x = j.get<double>();
      if (!std::isfinite(x)) {
        os << "null";
      } else {
        std::string s = format_double(x);
        // Keep it a JSON float so readers do not narrow it to an integer.
        if (s.find_first_of(".eE") == std::string::npos) s += ".0";
        os << s;
      }
      return;
    }
    default:
      os << j.dump();
  }
}

}  // namespace detail

inline void write_json(std::ostream& os, const nlohmann::json& j, int indent = 2) {
  detail::write_json(os, j, indent, 0);
  os << '\n';
}

inline std::string dump_json(const nlohmann::json& j, int indent = 2) {
  std::ostringstream os;
  write_json(os, j, indent);
  return os.str();
}

/// NaN/inf to null at construction time; write_json handles them too, but
/// this keeps in-memory documents comparable.
inline nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

inline nlohmann::json to_json(const CharacteristicState& s) {
  return {{"F", num(s.F)}, {"G", num(s.G)}, {"calF", num(s.calF)},
          {"H", num(s.H)}, {"Z", num(s.Z)}, {"Q", num(s.Q)}};
}

inline nlohmann::json to_json(const BlowupVerdict& v) {
  nlohmann::json j{{"status", to_string(v.status)},
                   {"horizon", num(v.horizon)},
                   {"q_min", num(v.q_min)},
                   {"t_at_qmin", num(v.t_at_qmin)},
                   {"final_time", num(v.final_time)},
                   {"final_state", to_json(v.final_state)},
                   {"counts_as_smooth", v.counts_as_smooth}};
  switch (v.status) {
    case VerdictStatus::smooth_certified:
      j["tail_bound"] = num(v.tail_bound);
      j["certified_at"] = num(v.certified_at);
      break;
    case VerdictStatus::smooth_to_horizon:
      j["envelope_decaying"] = v.envelope_decaying;
      j["tail_estimate"] = num(v.tail_estimate);
      break;
    case VerdictStatus::blowup:
      j["t_star"] = num(v.t_star);
      j["q_slope"] = num(v.q_slope);
      break;
    case VerdictStatus::supercritical_escape:
      j["t_star"] = num(v.t_star);
      break;
    case VerdictStatus::inconclusive:
      break;
  }
  if (!v.reason.empty()) j["reason"] = v.reason;
  return j;
}

inline nlohmann::json to_json(const PhaseCurveGeometry& g) {
  return {{"c_d", num(g.c_d)},         {"g_minus", num(g.g_minus)}, {"g_plus", num(g.g_plus)},
          {"f_plus", num(g.f_plus)},   {"m_minus", num(g.m_minus)}, {"m_plus", num(g.m_plus)},
          {"j_plus", num(g.j_plus)}};
}

inline nlohmann::json to_json(const Probe& p) {
  return {{"value", num(p.value)},         {"blowup", p.blowup},
          {"global", to_string(p.global)}, {"worst_r", num(p.worst_r)},
          {"worst_q_min", num(p.worst_q_min)}, {"earliest_t_star", num(p.earliest_t_star)}};
}

inline nlohmann::json to_json(const SweepResult& s) {
  nlohmann::json j{{"global_verdict", to_string(s.global)},
                   {"worst_r", num(s.worst_r)},
                   {"worst_q_min", num(s.worst_q_min)},
                   {"earliest_t_star", num(s.earliest_t_star)},
                   {"horizon", num(s.horizon)},
                   {"grid_points", s.per_r.size()},
                   {"inconclusive", s.inconclusive},
                   {"warnings", s.warnings}};
  return j;
}

inline nlohmann::json to_json(const CriticalSearch& c) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& p : c.history) hist.push_back(to_json(p));
  return {{"target", to_string(c.target)},
          {"fixed", num(c.fixed)},
          {"result", num(c.result)},
          {"tol", num(c.tol)},
          {"bracket", {num(c.bracket.first), num(c.bracket.second)}},
          {"worst_r", num(c.worst_r)},
          {"worst_q_min", num(c.worst_q_min)},
          {"bracket_history", hist}};
}

// ---------------------------------------------------------------------------
// CSV

inline void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) os << ',';
    os << cells[i];
  }
  os << '\n';
}

/// Trajectory table `t,F,G,calF,H,Z,Q,n`. The density column uses the
/// Riccati recovery u = p1/Q, v = p2/Q and is left empty once Q <= 0.
inline void write_trajectory_csv(std::ostream& os, const CharacteristicTrajectory& tr, const ModelParams& params,
                                 bool with_density = true) {
  os << (with_density ? "t,F,G,calF,H,Z,Q,n\n" : "t,F,G,calF,H,Z,Q\n");
  for (const auto& s : tr.samples) {
    const auto st = CharacteristicState::unpack(s.y);
    std::vector<std::string> row{format_double(s.t),    format_double(st.F), format_double(st.G),
                                 format_double(st.calF), format_double(st.H), format_double(st.Z),
                                 format_double(st.Q)};
    if (with_density) {
      row.push_back(st.Q > 0.0 ? format_double(density(recover_riccati(s.t, st, params), st.phase(), params))
                               : std::string{});
    }
    write_csv_row(os, row);
  }
}

/// Per-characteristic table `r,q_min,t_at_qmin,status,t_blowup`.
inline void write_sweep_csv(std::ostream& os, const SweepResult& s) {
  os << "r,q_min,t_at_qmin,status,t_blowup\n";
  for (const auto& e : s.per_r) {
    const auto& v = e.verdict;
    write_csv_row(os, {format_double(e.r), format_double(v.q_min), format_double(v.t_at_qmin), to_string(v.status),
                       v.is_blowup() ? format_double(v.t_star) : std::string{}});
  }
}

}  // namespace coldplasma
