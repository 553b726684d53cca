#pragma once

// Radial initial data (F0, G0) and the divergence deviations derived from them.
//
// For V0 = F0(r) x, div V0 = d F0 + r F0'(r), so u0 = r F0'(r) and likewise
// v0 = r G0'(r).

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "coldplasma/model.hpp"

namespace coldplasma {

/// Monotone piecewise-cubic Hermite interpolant. Slopes start from the
/// three-point centred estimate and are limited so that the interpolant is
/// monotone wherever the data are (zero slope at local extrema of the data,
/// |slope| <= 3 min(adjacent secants) otherwise).
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size()) throw std::invalid_argument("MonotoneCubic: size mismatch");
    if (n < 2) throw std::invalid_argument("MonotoneCubic: need at least two samples");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("MonotoneCubic: abscissae must increase");
    }
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    slope_.assign(n, 0.0);
    if (n == 2) {
      slope_[0] = slope_[1] = delta[0];
      return;
    }
    const auto limit = [](double s, double left, double right) {
      if (left * right <= 0.0) return 0.0;
      const double cap = 3.0 * std::min(std::abs(left), std::abs(right));
      if (s * left <= 0.0) return 0.0;
      return std::copysign(std::min(std::abs(s), cap), left);
    };
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double s = (h[i] * delta[i - 1] + h[i - 1] * delta[i]) / (h[i - 1] + h[i]);
      slope_[i] = limit(s, delta[i - 1], delta[i]);
    }
    const auto end_slope = [](double h0, double h1, double d0, double d1) {
      const double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
      if (s * d0 <= 0.0) return 0.0;
      if (std::abs(s) > 3.0 * std::abs(d0)) return 3.0 * d0;
      return s;
    };
    slope_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slope_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }
  const std::vector<double>& abscissae() const { return x_; }
  const std::vector<double>& values() const { return y_; }

  struct ValueAndSlope {
    double value;
    double slope;
  };

  ValueAndSlope eval(double x) const {
    if (x < x_.front() || x > x_.back()) throw std::out_of_range("MonotoneCubic: x out of range");
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (i >= x_.size() - 1) i = x_.size() - 2;
    const double h = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / h;
    const double t2 = t * t, t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    const double value = h00 * y_[i] + h10 * h * slope_[i] + h01 * y_[i + 1] + h11 * h * slope_[i + 1];
    const double d00 = (6 * t2 - 6 * t) / h, d10 = 3 * t2 - 4 * t + 1;
    const double d01 = (-6 * t2 + 6 * t) / h, d11 = 3 * t2 - 2 * t;
    const double slope = d00 * y_[i] + d10 * slope_[i] + d01 * y_[i + 1] + d11 * slope_[i + 1];
    return {value, slope};
  }

 private:
  std::vector<double> x_, y_, slope_;
};

struct PulseValues {
  double F0 = 0.0;
  double G0 = 0.0;
  double u0 = 0.0;
  double v0 = 0.0;
  bool extrapolated = false;  // r beyond the last tabulated sample, clamped to zero
};

struct GaussianPulse {
  double a = 0.0;
};

class TabulatedPulse {
 public:
  TabulatedPulse(std::vector<double> r, std::vector<double> F0, std::vector<double> G0)
      : f_(r, std::move(F0)), g_(std::move(r), std::move(G0)) {
    if (f_.front() < 0.0) throw std::invalid_argument("TabulatedPulse: r must be >= 0");
  }

  /// Reads `r,F0,G0` or `r,G0` (F0 = 0) delimited text with a header line.
  static TabulatedPulse from_stream(std::istream& in, const std::string& origin = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(origin + ": empty profile file");
    const auto columns = split(strip(line));
    bool has_f = false;
    if (columns == std::vector<std::string>{"r", "F0", "G0"}) {
      has_f = true;
    } else if (columns != std::vector<std::string>{"r", "G0"}) {
      throw std::runtime_error(origin + ": header must be 'r,F0,G0' or 'r,G0', got '" + line + "'");
    }
    std::vector<double> r, f, g;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      line = strip(line);
      if (line.empty()) continue;
      const auto cells = split(line);
      if (cells.size() != (has_f ? 3u : 2u)) {
        throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": wrong column count");
      }
      std::vector<double> vals;
      for (const auto& c : cells) vals.push_back(parse_number(c, origin, lineno));
      r.push_back(vals[0]);
      f.push_back(has_f ? vals[1] : 0.0);
      g.push_back(vals.back());
    }
    try {
      return TabulatedPulse(std::move(r), std::move(f), std::move(g));
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(origin + ": " + e.what());
    }
  }

  static TabulatedPulse from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file '" + path + "'");
    return from_stream(in, path);
  }

  PulseValues evaluate(double r) const {
    if (r < f_.front()) {
      throw std::out_of_range("TabulatedPulse: r = " + std::to_string(r) +
                              " below first sample " + std::to_string(f_.front()));
    }
    if (r > f_.back()) return {0.0, 0.0, 0.0, 0.0, true};
    const auto f = f_.eval(r);
    const auto g = g_.eval(r);
    return {f.value, g.value, r * f.slope, r * g.slope, false};
  }

  double r_min() const { return f_.front(); }
  double r_max() const { return f_.back(); }
  const MonotoneCubic& f_interp() const { return f_; }
  const MonotoneCubic& g_interp() const { return g_; }

 private:
  static std::string strip(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }
  static std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(strip(cell));
    return out;
  }
  static double parse_number(const std::string& s, const std::string& origin, std::size_t lineno) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
      throw std::runtime_error(origin + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
    }
    return v;
  }

  MonotoneCubic f_, g_;
};

enum class H1Form {
  h0eq,      // dH/dt(0) = ((d-2)/2 F0 - nu/2) u0 - v0
  theorem2   // ((d-2)/2 F0 - nu/2) - v0, the form without the u0 factor
};

struct DerivedInitials {
  double u0 = 0.0;
  double v0 = 0.0;
  double h0 = 0.0;
  double h1 = 0.0;
};

class PulseProfile {
 public:
  static PulseProfile gaussian(double a) { return PulseProfile(GaussianPulse{a}); }
  static PulseProfile tabulated(TabulatedPulse t) { return PulseProfile(std::move(t)); }

  bool is_gaussian() const { return std::holds_alternative<GaussianPulse>(kind_); }
  double amplitude() const { return std::get<GaussianPulse>(kind_).a; }
  const TabulatedPulse* table() const { return std::get_if<TabulatedPulse>(&kind_); }

  /// Checks the amplitude bound 0 < a < 1/d for Gaussian pulses.
  void validate_for(int d) const {
    if (const auto* g = std::get_if<GaussianPulse>(&kind_)) {
      if (!(g->a > 0.0 && g->a < 1.0 / d)) {
        throw std::invalid_argument("gaussian pulse amplitude a = " + std::to_string(g->a) +
                                    " must satisfy 0 < a < 1/d = " + std::to_string(1.0 / d));
      }
    }
  }

  PulseValues evaluate(double r) const {
    if (!(r >= 0.0)) throw std::out_of_range("PulseProfile: r must be >= 0");
    if (const auto* g = std::get_if<GaussianPulse>(&kind_)) {
      const double e = std::exp(-0.5 * r * r);
      return {0.0, g->a * e, 0.0, -g->a * r * r * e, false};
    }
    return std::get<TabulatedPulse>(kind_).evaluate(r);
  }

  DerivedInitials derived_initials(double r, const ModelParams& params,
                                   H1Form form = H1Form::h0eq) const {
    const auto p = evaluate(r);
    const double coeff = 0.5 * (params.d - 2.0) * p.F0 - 0.5 * params.nu;
    const double h1 = form == H1Form::h0eq ? coeff * p.u0 - p.v0 : coeff - p.v0;
    return {p.u0, p.v0, p.u0, h1};
  }

  /// State at t = 0 along the characteristic starting at r.
  CharacteristicState initial_state(double r, const ModelParams& params) const {
    const auto p = evaluate(r);
    const auto di = derived_initials(r, params);
    return {p.F0, p.G0, 0.0, di.h0, di.h1, 1.0};
  }

  std::string describe() const {
    if (const auto* g = std::get_if<GaussianPulse>(&kind_)) {
      std::ostringstream os;
      os.precision(17);
      os << "gaussian:a=" << g->a;
      return os.str();
    }
    return "tabulated";
  }

 private:
  explicit PulseProfile(std::variant<GaussianPulse, TabulatedPulse> k) : kind_(std::move(k)) {}
  std::variant<GaussianPulse, TabulatedPulse> kind_;
};

/// Radii where div E0 = v0 + d G0 >= 1, i.e. where the initial density
/// 1 - div E0 would not be positive.
inline std::vector<double> admissibility_violations(const PulseProfile& profile,
                                                    const std::vector<double>& radii, int d) {
  std::vector<double> bad;
  for (double r : radii) {
    const auto p = profile.evaluate(r);
    if (!(p.v0 + d * p.G0 < 1.0)) bad.push_back(r);
  }
  return bad;
}

/// Parses `gaussian:a=<value>` or `file:<path>`.
inline PulseProfile parse_pulse_spec(const std::string& spec) {
  const std::string gauss = "gaussian:a=";
  const std::string file = "file:";
  if (spec.rfind(gauss, 0) == 0) {
    const std::string num = spec.substr(gauss.size());
    char* end = nullptr;
    const double a = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size() || !std::isfinite(a)) {
      throw std::invalid_argument("bad gaussian amplitude in pulse spec '" + spec + "'");
    }
    return PulseProfile::gaussian(a);
  }
  if (spec.rfind(file, 0) == 0) {
    return PulseProfile::tabulated(TabulatedPulse::from_file(spec.substr(file.size())));
  }
  throw std::invalid_argument("pulse spec must be 'gaussian:a=<value>' or 'file:<path>', got '" +
                              spec + "'");
}

}  // namespace coldplasma
