// coldplasma: command-line front end for characteristic simulations, r-sweeps,
// critical-parameter searches, phase portraits and the sufficient-condition
// functionals.
//
// Exit codes: 0 success (a blow-up verdict is a result, not an error),
// 1 usage error, 2 numerical failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coldplasma/criteria.hpp"
#include "coldplasma/phase_plane.hpp"
#include "coldplasma/pulses.hpp"
#include "coldplasma/serialize.hpp"
#include "coldplasma/sweep.hpp"

namespace cp = coldplasma;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalFailure : std::runtime_error {
  NumericalFailure(const std::string& what, json diag) : std::runtime_error(what), diagnostics(std::move(diag)) {}
  json diagnostics;
};

struct RunConfig {
  std::string command;
  int d = 2;
  double nu = 0.0;
  std::string pulse;
  std::optional<double> a;  // shorthand for gaussian:a=
  std::string grid = "0.001:3:0.005";
  std::optional<double> horizon;
  double rel_tol = 1e-9;
  double abs_tol = 1e-12;
  std::string out;
  int threads = 0;
  std::string h1_form = "h0eq";
  std::string fp_form = "sqrt";

  // simulate
  double r = 0.0;
  int sample_stride = 1;
  // critical searches
  std::string bracket;
  std::optional<double> tol;
  double expand_cap = 64.0;
  // phase-portrait
  std::vector<std::string> curve_through;
  std::vector<std::string> seeds;
  int samples = 200;
  double t_max = 50.0;
  // check-theorem2
  double T = 1.0;
  double phi_truncation = 1e-10;
  // verify-theorem3
  std::vector<double> schedule;

  json to_json() const {
    json j{{"command", command},
           {"d", d},
           {"nu", cp::num(nu)},
           {"grid", grid},
           {"horizon", horizon ? cp::num(*horizon) : json(nullptr)},
           {"rel_tol", cp::num(rel_tol)},
           {"abs_tol", cp::num(abs_tol)},
           {"threads", cp::resolve_threads(threads)},
           {"h1_form", h1_form},
           {"fp_form", fp_form}};
    j["pulse"] = resolved_pulse();
    if (command == "simulate") {
      j["r"] = cp::num(r);
      j["sample_stride"] = sample_stride;
    }
    if (command == "critical-nu" || command == "critical-a") {
      j["bracket"] = bracket;
      j["tol"] = tol ? cp::num(*tol) : json(nullptr);
      if (command == "critical-nu") j["expand_cap"] = cp::num(expand_cap);
    }
    if (command == "phase-portrait") {
      j["curve_through"] = curve_through;
      j["seeds"] = seeds;
      j["samples"] = samples;
      j["t_max"] = cp::num(t_max);
    }
    if (command == "check-theorem2") {
      j["T"] = cp::num(T);
      j["phi_truncation"] = cp::num(phi_truncation);
    }
    if (command == "verify-theorem3") {
      json s = json::array();
      for (double x : schedule) s.push_back(cp::num(x));
      j["schedule"] = s;
    }
    return j;
  }

  std::string resolved_pulse() const {
    if (a) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "gaussian:a=%.17g", *a);
      return buf;
    }
    return pulse;
  }
};

std::pair<double, double> parse_pair(const std::string& s, char sep, const std::string& what) {
  const auto k = s.find(sep);
  if (k == std::string::npos) throw UsageError(what + " must look like 'x" + sep + "y', got '" + s + "'");
  try {
    std::size_t u1 = 0, u2 = 0;
    const std::string l = s.substr(0, k), r = s.substr(k + 1);
    const double x = std::stod(l, &u1), y = std::stod(r, &u2);
    if (u1 != l.size() || u2 != r.size()) throw std::invalid_argument(s);
    return {x, y};
  } catch (const std::logic_error&) {
    throw UsageError(what + " must look like 'x" + sep + "y', got '" + s + "'");
  }
}

cp::PulseProfile load_pulse(const RunConfig& cfg) {
  const std::string spec = cfg.resolved_pulse();
  if (spec.empty()) throw UsageError("--pulse (or --a) is required");
  try {
    auto p = cp::parse_pulse_spec(spec);
    p.validate_for(cfg.d);
    return p;
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

cp::StepControl step_control(const RunConfig& cfg) {
  cp::StepControl c;
  c.rel_tol = cfg.rel_tol;
  c.abs_tol = cfg.abs_tol;
  c.validate();
  return c;
}

cp::H1Form h1_form(const RunConfig& cfg) { return cfg.h1_form == "theorem2" ? cp::H1Form::theorem2 : cp::H1Form::h0eq; }
cp::FpForm fp_form(const RunConfig& cfg) { return cfg.fp_form == "literal" ? cp::FpForm::literal : cp::FpForm::sqrt; }

class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(dir_, ec);
      if (ec) throw UsageError("cannot create output directory '" + dir_ + "': " + ec.message());
    }
  }

  bool enabled() const { return !dir_.empty(); }

  template <class Writer>
  void table(const std::string& name, Writer&& w) {
    if (!enabled()) return;
    const auto path = std::filesystem::path(dir_) / name;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    w(os);
    files_.push_back(name);
  }

  void summary(json j) {
    j["files"] = files_;
    if (enabled()) {
      const auto path = std::filesystem::path(dir_) / "summary.json";
      std::ofstream os(path);
      if (!os) throw std::runtime_error("cannot write " + path.string());
      cp::write_json(os, j);
    }
    cp::write_json(std::cout, j);
  }

 private:
  std::string dir_;
  std::vector<std::string> files_;
};

json envelope(const RunConfig& cfg) {
  return {{"schema_version", cp::kSchemaVersion}, {"command", cfg.command}, {"config", cfg.to_json()}};
}

void warn_admissibility(const cp::PulseProfile& profile, const std::vector<double>& radii, int d, json& summary) {
  const auto bad = cp::admissibility_violations(profile, radii, d);
  if (!bad.empty()) {
    std::cerr << "warning: initial density not positive at " << bad.size() << " radii (first r = " << bad.front()
              << ")\n";
  }
  json b = json::array();
  for (double r : bad) b.push_back(cp::num(r));
  summary["density_violations"] = b;
}

// ---------------------------------------------------------------------------

int cmd_simulate(const RunConfig& cfg) {
  const auto profile = load_pulse(cfg);
  const cp::ModelParams params{cfg.d, cfg.nu};
  if (!(cfg.r >= 0.0)) throw UsageError("--r must be >= 0");
  if (cfg.sample_stride < 0) throw UsageError("--sample-stride must be >= 0");
  cp::CriteriaOptions opts;
  opts.control = step_control(cfg);
  opts.control.sample_stride = static_cast<std::size_t>(cfg.sample_stride);
  const double horizon = cfg.horizon.value_or(cp::default_horizon(cfg.nu));

  const auto iv = profile.evaluate(cfg.r);
  if (iv.extrapolated) std::cerr << "warning: r beyond the tabulated range, data clamped to zero\n";
  const auto run = cp::simulate_characteristic(profile, cfg.r, params, horizon, opts);

  Output out(cfg.out);
  out.table("trajectory.csv", [&](std::ostream& os) { cp::write_trajectory_csv(os, run.trajectory, params); });

  json j = envelope(cfg);
  const auto di = profile.derived_initials(cfg.r, params, h1_form(cfg));
  j["initial"] = {{"F0", cp::num(iv.F0)}, {"G0", cp::num(iv.G0)}, {"u0", cp::num(di.u0)},
                  {"v0", cp::num(di.v0)}, {"H0", cp::num(di.h0)}, {"H1", cp::num(di.h1)},
                  {"extrapolated", iv.extrapolated}};
  j["verdict"] = cp::to_json(run.verdict);
  j["integrator"] = {{"status", cp::to_string(run.trajectory.status)},
                     {"accepted_steps", run.trajectory.stats.accepted},
                     {"rejected_steps", run.trajectory.stats.rejected}};
  warn_admissibility(profile, {cfg.r}, cfg.d, j);
  out.summary(j);
  return run.verdict.status == cp::VerdictStatus::inconclusive ? kExitNumerical : kExitOk;
}

cp::SweepOptions sweep_options(const RunConfig& cfg) {
  cp::SweepOptions so;
  so.criteria.control = step_control(cfg);
  so.threads = cfg.threads;
  return so;
}

cp::RGrid grid_of(const RunConfig& cfg) {
  try {
    return cp::parse_grid(cfg.grid);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

int cmd_sweep(const RunConfig& cfg) {
  const auto profile = load_pulse(cfg);
  const auto grid = grid_of(cfg);
  const double horizon = cfg.horizon.value_or(cp::default_horizon(cfg.nu));
  const auto res = cp::sweep_r(profile, grid, cp::ModelParams{cfg.d, cfg.nu}, horizon, sweep_options(cfg));
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';

  Output out(cfg.out);
  out.table("sweep.csv", [&](std::ostream& os) { cp::write_sweep_csv(os, res); });
  json j = envelope(cfg);
  j["sweep"] = cp::to_json(res);
  warn_admissibility(profile, grid.points(), cfg.d, j);
  out.summary(j);
  return kExitOk;
}

cp::SearchOptions search_options(const RunConfig& cfg) {
  cp::SearchOptions so;
  so.sweep = sweep_options(cfg);
  so.horizon = cfg.horizon;
  so.expand_cap = cfg.expand_cap;
  return so;
}

void report_probe(const cp::Probe& p) {
  std::cerr << "probe " << cp::format_double(p.value) << ": " << (p.blowup ? "blowup" : "smooth") << '\n';
}

int run_search(const RunConfig& cfg, const std::function<cp::CriticalSearch()>& search,
               const std::function<cp::SweepResult(double)>& final_sweep) {
  cp::CriticalSearch cs;
  try {
    cs = search();
  } catch (const cp::SearchError& e) {
    json j = envelope(cfg);
    j["error"] = e.what();
    throw NumericalFailure(e.what(), j);
  }
  Output out(cfg.out);
  // Per-r table at the smooth end of the final bracket.
  const double smooth_end = cs.target == cp::SearchTarget::critical_nu ? cs.bracket.second : cs.bracket.first;
  if (out.enabled()) {
    const auto res = final_sweep(smooth_end);
    out.table("sweep.csv", [&](std::ostream& os) { cp::write_sweep_csv(os, res); });
  }
  json j = envelope(cfg);
  j["search"] = cp::to_json(cs);
  j["smooth_end"] = cp::num(smooth_end);
  out.summary(j);
  return kExitOk;
}

int cmd_critical_nu(const RunConfig& cfg) {
  const auto profile = load_pulse(cfg);
  const auto grid = grid_of(cfg);
  const auto bracket = cfg.bracket.empty() ? std::pair{0.0, 2.0} : parse_pair(cfg.bracket, ':', "--bracket");
  const double tol = cfg.tol.value_or(1e-3);
  if (!(bracket.first >= 0.0 && bracket.first < bracket.second) || !(tol > 0.0)) {
    throw UsageError("critical-nu needs 0 <= lo < hi and tol > 0");
  }
  const auto so = search_options(cfg);
  return run_search(
      cfg, [&] { return cp::critical_nu(profile, cfg.d, grid, bracket, tol, so, report_probe); },
      [&](double nu) {
        return cp::sweep_r(profile, grid, cp::ModelParams{cfg.d, nu}, so.horizon.value_or(cp::default_horizon(nu)),
                           so.sweep);
      });
}

int cmd_critical_a(const RunConfig& cfg) {
  const auto grid = grid_of(cfg);
  const double inv_d = 1.0 / cfg.d;
  const auto bracket =
      cfg.bracket.empty() ? std::pair{0.1 * inv_d, 0.998 * inv_d} : parse_pair(cfg.bracket, ':', "--bracket");
  const double tol = cfg.tol.value_or(5e-4);
  if (!(bracket.first > 0.0 && bracket.first < bracket.second && bracket.second < inv_d) || !(tol > 0.0)) {
    throw UsageError("critical-a needs 0 < lo < hi < 1/d and tol > 0");
  }
  const auto so = search_options(cfg);
  return run_search(
      cfg, [&] { return cp::critical_a(cfg.nu, cfg.d, grid, bracket, tol, so, report_probe); },
      [&](double a) {
        return cp::sweep_r(cp::PulseProfile::gaussian(a), grid, cp::ModelParams{cfg.d, cfg.nu},
                           so.horizon.value_or(cp::default_horizon(cfg.nu)), so.sweep);
      });
}

int cmd_phase_portrait(const RunConfig& cfg) {
  const cp::ModelParams params{cfg.d, cfg.nu};
  if (cfg.samples < 2) throw UsageError("--samples must be >= 2");
  if (!(cfg.t_max > 0.0)) throw UsageError("--t-max must be positive");
  std::vector<cp::PhasePoint> curves, seeds;
  for (const auto& s : cfg.curve_through) {
    const auto [F, G] = parse_pair(s, ',', "--curve-through");
    if (!(G < 1.0 / cfg.d)) throw UsageError("--curve-through needs G < 1/d");
    curves.push_back({F, G});
  }
  for (const auto& s : cfg.seeds) {
    const auto [F, G] = parse_pair(s, ',', "--seed");
    seeds.push_back({F, G});
  }
  if (cfg.seeds.empty()) {
    for (double k : {0.25, 0.5, 0.75}) seeds.push_back({0.0, k / cfg.d});
  }

  Output out(cfg.out);
  json j = envelope(cfg);
  const auto eq = cp::classify_equilibria(params);
  json eqj = json::array();
  for (const auto& e : eq) eqj.push_back({{"F", cp::num(e.location.F)}, {"G", cp::num(e.location.G)},
                                          {"kind", cp::to_string(e.kind)}});
  j["equilibria"] = eqj;
  out.table("equilibria.csv", [&](std::ostream& os) {
    os << "F,G,kind\n";
    for (const auto& e : eq) {
      cp::write_csv_row(os, {cp::format_double(e.location.F), cp::format_double(e.location.G), cp::to_string(e.kind)});
    }
  });

  json cj = json::array();
  std::vector<std::vector<cp::PhasePoint>> curve_samples;
  for (const auto& c : curves) {
    std::vector<cp::PhasePoint> pts;
    try {
      pts = cp::level_curve_samples(c, cfg.d, static_cast<std::size_t>(cfg.samples));
    } catch (const cp::BracketingError& e) {
      std::cerr << "warning: " << e.what() << '\n';
    }
    const double level = cp::phase_invariant(c, cfg.d);
    double dev = 0.0;
    for (const auto& p : pts) dev = std::max(dev, std::abs(cp::phase_invariant(p, cfg.d) - level));
    cj.push_back({{"through", {cp::num(c.F), cp::num(c.G)}},
                  {"level", cp::num(level)},
                  {"closed", !pts.empty()},
                  {"max_level_deviation", cp::num(dev)},
                  {"points", pts.size()}});
    curve_samples.push_back(std::move(pts));
  }
  j["level_curves"] = cj;
  if (!curves.empty()) {
    out.table("level_curves.csv", [&](std::ostream& os) {
      os << "curve,F,G,phi\n";
      for (std::size_t i = 0; i < curve_samples.size(); ++i) {
        for (const auto& p : curve_samples[i]) {
          cp::write_csv_row(os, {std::to_string(i), cp::format_double(p.F), cp::format_double(p.G),
                                 cp::format_double(cp::phase_invariant(p, cfg.d))});
        }
      }
    });
  }

  cp::OdeSystem<std::array<double, 2>> sys{2, [&](double, const std::array<double, 2>& y) {
                                               const auto r = cp::rhs_phase({y[0], y[1]}, params);
                                               return std::array<double, 2>{r.dF, r.dG};
                                             }};
  auto control = step_control(cfg);
  control.h_max = std::min(control.h_max, cfg.t_max / 1000.0);
  json tj = json::array();
  std::vector<cp::Trajectory<std::array<double, 2>>> trajs;
  for (const auto& s : seeds) {
    trajs.push_back(cp::integrate(sys, std::array<double, 2>{s.F, s.G}, {0.0, cfg.t_max}, control));
    tj.push_back({{"seed", {cp::num(s.F), cp::num(s.G)}},
                  {"status", cp::to_string(trajs.back().status)},
                  {"final_time", cp::num(trajs.back().final_time)}});
  }
  j["trajectories"] = tj;
  out.table("trajectories.csv", [&](std::ostream& os) {
    os << "seed,t,F,G\n";
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      for (const auto& s : trajs[i].samples) {
        cp::write_csv_row(os, {std::to_string(i), cp::format_double(s.t), cp::format_double(s.y[0]),
                               cp::format_double(s.y[1])});
      }
    }
  });
  out.summary(j);
  return kExitOk;
}

int cmd_check_theorem2(const RunConfig& cfg) {
  if (!(cfg.nu > 0.0 && cfg.nu < 2.0)) {
    throw UsageError("check-theorem2 requires 0 < nu < 2 (the sufficient conditions assume nu < 2)");
  }
  if (!(cfg.T >= 0.0)) throw UsageError("--T must be >= 0");
  if (!(cfg.phi_truncation > 0.0 && cfg.phi_truncation < 1.0)) throw UsageError("--phi-truncation must be in (0, 1)");
  const auto profile = load_pulse(cfg);
  const auto grid = grid_of(cfg);
  const auto radii = grid.points();
  const cp::ModelParams params{cfg.d, cfg.nu};

  const auto phi = cp::phi_norm_integral(profile, radii, params, cfg.phi_truncation, step_control(cfg));
  cp::TheoremTwoOptions topts{h1_form(cfg), fp_form(cfg)};
  cp::CriteriaOptions copts;
  copts.control = step_control(cfg);

  std::vector<cp::TheoremTwoReport> reps(radii.size());
  cp::parallel_for(radii.size(), cp::resolve_threads(cfg.threads), [&](std::size_t i) {
    reps[i] = cp::theorem_two_report(profile, radii[i], params, cfg.T, phi.value, topts);
  });

  double f1_sup = 0.0, f1_alt_sup = 0.0;
  std::size_t unavailable = 0, f2_ok = 0, f3_claims = 0;
  json claims = json::array();
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const auto& rp = reps[i];
    if (!rp.available) {
      ++unavailable;
      continue;
    }
    f1_sup = std::max(f1_sup, *rp.f1);
    f1_alt_sup = std::max(f1_alt_sup, *rp.f1_alternate);
    if (rp.f2 < 1.0) ++f2_ok;
    if (rp.f3 && *rp.f3 >= 1.0) {
      ++f3_claims;
      const auto chk = cp::verify_theorem_2c(profile, radii[i], params, copts);
      claims.push_back({{"r", cp::num(radii[i])},
                        {"f3", cp::num(chk.f3)},
                        {"deadline", cp::num(chk.deadline)},
                        {"t_star", chk.t_star ? cp::num(*chk.t_star) : json(nullptr)},
                        {"confirmed", chk.confirmed},
                        {"verdict", cp::to_string(chk.verdict.status)}});
    }
  }

  Output out(cfg.out);
  out.table("theorem2.csv", [&](std::ostream& os) {
    os << "r,h0,h1,h1_alternate,f1,f1_alternate,f2,f3,f3_status,j_plus,deadline\n";
    for (std::size_t i = 0; i < radii.size(); ++i) {
      const auto& rp = reps[i];
      const auto opt = [](const std::optional<double>& v) { return v ? cp::format_double(*v) : std::string{}; };
      std::string f3_status = !rp.available ? "unavailable" : (rp.f3 ? "applicable" : "not_applicable");
      cp::write_csv_row(os, {cp::format_double(radii[i]), cp::format_double(rp.h0), cp::format_double(rp.h1),
                             cp::format_double(rp.h1_alternate), opt(rp.f1), opt(rp.f1_alternate),
                             cp::format_double(rp.f2), opt(rp.f3), f3_status, cp::format_double(rp.j_plus),
                             cp::format_double(rp.blowup_deadline)});
    }
  });

  json j = envelope(cfg);
  j["phi_integral"] = {{"value", cp::num(phi.value)},
                       {"t_end", cp::num(phi.t_end)},
                       {"truncated", phi.truncated},
                       {"norm", "max over the working r-grid (approximates the sup over r)"}};
  j["T"] = cp::num(cfg.T);
  j["f1_sup"] = cp::num(f1_sup);
  j["f1_alternate_sup"] = cp::num(f1_alt_sup);
  j["f1_sup_below_one"] = unavailable == 0 && f1_sup < 1.0;
  j["f2_below_one"] = f2_ok;
  j["grid_points"] = radii.size();
  j["unavailable"] = unavailable;
  j["f3_claims"] = f3_claims;
  j["f3_checks"] = claims;
  out.summary(j);
  return kExitOk;
}

int cmd_verify_theorem3(const RunConfig& cfg) {
  const auto profile = load_pulse(cfg);
  const auto grid = grid_of(cfg);
  const auto schedule = cfg.schedule.empty() ? cp::default_theorem3_schedule() : cfg.schedule;
  cp::Theorem3Result res;
  try {
    res = cp::verify_theorem_3(profile, cfg.d, grid, schedule, search_options(cfg));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Output out(cfg.out);
  out.table("schedule.csv", [&](std::ostream& os) {
    os << "nu,global,smooth,worst_r,worst_q_min\n";
    for (const auto& e : res.entries) {
      cp::write_csv_row(os, {cp::format_double(e.nu), cp::to_string(e.global), e.smooth ? "1" : "0",
                             cp::format_double(e.worst_r), cp::format_double(e.worst_q_min)});
    }
  });
  json j = envelope(cfg);
  j["nu_found"] = res.nu_found ? cp::num(*res.nu_found) : json(nullptr);
  j["finding"] = res.finding;
  out.summary(j);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blow-up detection for radially symmetric collisional cold-plasma oscillations"};
  app.set_config("--config", "", "key = value file; command-line flags override it");
  app.require_subcommand(1);
  RunConfig cfg;

  const std::string shared = "Shared";
  app.add_option("--d", cfg.d, "spatial dimension")->group(shared)->check(CLI::PositiveNumber);
  app.add_option("--nu", cfg.nu, "collision frequency")->group(shared)->check(CLI::NonNegativeNumber);
  app.add_option("--pulse", cfg.pulse, "gaussian:a=<value> | file:<path>")->group(shared);
  app.add_option("--a", cfg.a, "shorthand for --pulse gaussian:a=<value>")->group(shared);
  app.add_option("--grid", cfg.grid, "r-grid rmin:rmax:step")->group(shared)->capture_default_str();
  app.add_option("--horizon", cfg.horizon, "integration horizon (default max(50, 20/nu))")->group(shared);
  app.add_option("--rel-tol", cfg.rel_tol)->group(shared)->capture_default_str();
  app.add_option("--abs-tol", cfg.abs_tol)->group(shared)->capture_default_str();
  app.add_option("--out", cfg.out, "output directory for summary.json and CSV tables")->group(shared);
  app.add_option("--threads", cfg.threads, "worker threads (fallback: PLASMA_THREADS)")->group(shared);
  app.add_option("--h1-form", cfg.h1_form)->group(shared)->check(CLI::IsMember({"h0eq", "theorem2"}));
  app.add_option("--fp-form", cfg.fp_form)->group(shared)->check(CLI::IsMember({"sqrt", "literal"}));

  app.add_option("--r", cfg.r, "starting radius [simulate]")->group("simulate");
  app.add_option("--sample-stride", cfg.sample_stride, "keep every n-th step, 0 = endpoints [simulate]")
      ->group("simulate");
  app.add_option("--bracket", cfg.bracket, "lo:hi [critical-nu, critical-a]")->group("critical search");
  app.add_option("--tol", cfg.tol, "bisection tolerance [critical-nu, critical-a]")->group("critical search");
  app.add_option("--expand-cap", cfg.expand_cap, "upper limit for bracket doubling [critical-nu]")
      ->group("critical search");
  app.add_option("--curve-through", cfg.curve_through, "F,G point for a level curve [phase-portrait]")
      ->group("phase-portrait");
  app.add_option("--seed", cfg.seeds, "F,G trajectory seed [phase-portrait]")->group("phase-portrait");
  app.add_option("--samples", cfg.samples, "points per level-curve branch [phase-portrait]")->group("phase-portrait");
  app.add_option("--t-max", cfg.t_max, "trajectory length [phase-portrait]")->group("phase-portrait");
  app.add_option("--T", cfg.T, "finite horizon for the F2 functional [check-theorem2]")->group("check-theorem2");
  app.add_option("--phi-truncation", cfg.phi_truncation, "relative truncation of the phi integral [check-theorem2]")
      ->group("check-theorem2");
  app.add_option("--schedule", cfg.schedule, "increasing nu list [verify-theorem3]")
      ->group("verify-theorem3")
      ->delimiter(',');

  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "integrate one characteristic"},
      {"sweep", "simulate every characteristic of an r-grid"},
      {"critical-nu", "bisect for the smallest smooth collision frequency"},
      {"critical-a", "bisect for the largest smooth gaussian amplitude"},
      {"phase-portrait", "equilibria, level curves and trajectories of the (F, G) system"},
      {"check-theorem2", "evaluate the sufficient-condition functionals per r"},
      {"verify-theorem3", "find a collision frequency that smooths the whole grid"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (cfg.command == "simulate") return cmd_simulate(cfg);
    if (cfg.command == "sweep") return cmd_sweep(cfg);
    if (cfg.command == "critical-nu") return cmd_critical_nu(cfg);
    if (cfg.command == "critical-a") return cmd_critical_a(cfg);
    if (cfg.command == "phase-portrait") return cmd_phase_portrait(cfg);
    if (cfg.command == "check-theorem2") return cmd_check_theorem2(cfg);
    if (cfg.command == "verify-theorem3") return cmd_verify_theorem3(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    // Validation failures inside the library (bad tolerances, grids, ...).
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    cp::write_json(std::cout, e.diagnostics);
    if (!cfg.out.empty()) {
      std::ofstream os(std::filesystem::path(cfg.out) / "summary.json");
      cp::write_json(os, e.diagnostics);
    }
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}
