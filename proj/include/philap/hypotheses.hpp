#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "philap/error.hpp"
#include "philap/orlicz.hpp"
#include "philap/young.hpp"

namespace philap {

/// f(x,s) = regular(x,s) + singular_coeff * s^{-gamma} for s > 0.
struct Reaction {
  using Fn2 = std::function<double(double, double)>;
  using Fn3 = std::function<double(double, double, double)>;

  std::string name;
  Fn2 regular;
  Fn2 regular_ds;        // optional
  Fn3 regular_integral;  // optional, (x, a, b) -> int_a^b regular(x, s) ds
  double singular_coeff = 0.0;
  double gamma = 0.5;
  bool autonomous = true;

  double value(double x, double s) const {
    if (!(s > 0.0)) throw Error(ErrorCode::EvaluationDomain, "reaction evaluated at s <= 0");
    double v = regular(x, s);
    if (singular_coeff != 0.0) v += singular_coeff * std::pow(s, -gamma);
    return v;
  }

  double ds(double x, double s) const {
    double d;
    if (regular_ds) {
      d = regular_ds(x, s);
    } else {
      const double h = 1e-6 * s;
      d = (regular(x, s + h) - regular(x, s - h)) / (2.0 * h);
    }
    if (singular_coeff != 0.0) d -= gamma * singular_coeff * std::pow(s, -gamma - 1.0);
    return d;
  }

  /// int_a^b f(x, s) ds with 0 < a <= b.
  double integral(double x, double a, double b) const {
    if (b == a) return 0.0;
    double v;
    if (regular_integral) {
      v = regular_integral(x, a, b);
    } else {
      auto g = [&](double y) {
        const double s = std::exp(y);
        return regular(x, s) * s;
      };
      v = integrate(g, std::log(a), std::log(b), 1e-12);
    }
    if (singular_coeff != 0.0) {
      v += singular_coeff * (std::pow(b, 1.0 - gamma) - std::pow(a, 1.0 - gamma)) / (1.0 - gamma);
    }
    return v;
  }
};

/// s^r + c s^{-gamma}.
inline Reaction power_reaction(double r, double singular_coeff, double gamma) {
  Reaction f;
  std::ostringstream nm;
  nm << "s^" << r;
  if (singular_coeff != 0.0) nm << " + " << singular_coeff << "*s^-" << gamma;
  f.name = nm.str();
  f.regular = [r](double, double s) { return std::pow(s, r); };
  f.regular_ds = [r](double, double s) { return r * std::pow(s, r - 1.0); };
  f.regular_integral = [r](double, double a, double b) {
    return (std::pow(b, r + 1.0) - std::pow(a, r + 1.0)) / (r + 1.0);
  };
  f.singular_coeff = singular_coeff;
  f.gamma = gamma;
  return f;
}

inline Reaction log1p_reaction() {
  Reaction f;
  f.name = "log(1+s)";
  f.regular = [](double, double s) { return std::log1p(s); };
  f.regular_ds = [](double, double s) { return 1.0 / (1.0 + s); };
  f.regular_integral = [](double, double a, double b) {
    auto F = [](double s) { return (1.0 + s) * std::log1p(s) - s; };
    return F(b) - F(a);
  };
  return f;
}

/// upsilon(s)/s + c s^{-gamma}.
inline Reaction young_ratio_reaction(const YoungFunction& upsilon, double singular_coeff, double gamma) {
  Reaction f;
  f.name = upsilon.name() + "/s + s^-gamma";
  f.regular = [upsilon](double, double s) { return upsilon.value(s) / s; };
  f.regular_ds = [upsilon](double, double s) {
    return (upsilon.derivative(s) * s - upsilon.value(s)) / (s * s);
  };
  f.singular_coeff = singular_coeff;
  f.gamma = gamma;
  return f;
}

/// Data of the singular Dirichlet problem.
struct ProblemSpec {
  std::string name;
  std::function<double(double)> a;
  std::function<double(double)> a_prime;
  YoungFunction phi;
  Reaction f;
  YoungFunction upsilon;
  double gamma = 0.5;
  double c1 = 1.0;
  double c2 = 1.0;
  double mu = std::numeric_limits<double>::quiet_NaN();
  double R = std::numeric_limits<double>::quiet_NaN();
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double N = 4.0;
  Grid grid{127, 1.0};
  double T_max = 1e4;

  // Filled by prepare().
  std::optional<YoungFunction> phi_star;
  std::string phi_star_error;
  std::optional<YoungFunction> upsilon_bar;

  const YoungFunction& phi_star_or_throw() const {
    if (!phi_star) throw Error(ErrorCode::SingularIntegrand, phi_star_error);
    return *phi_star;
  }

  void prepare();
};

inline double auto_mu(const ProblemSpec& s) {
  const double sp = s.phi.indices().upper;
  const double iu = s.upsilon.indices().lower;
  return sp < iu ? 0.5 * (sp + iu) : sp + 0.5;
}

/// Smallest dyadic R with mu c2/(1-gamma) t^{1-gamma} <= (1 - mu/i_ups) ups(t) on [R, T_max].
inline double auto_R(const ProblemSpec& s) {
  const double iu = s.upsilon.indices().lower;
  if (!(s.mu < iu)) return 1.0;
  const double k = 1.0 - s.mu / iu;
  auto holds = [&](double t) {
    return s.mu * s.c2 / (1.0 - s.gamma) * std::pow(t, 1.0 - s.gamma) <= k * s.upsilon.value(t);
  };
  for (int j = -20; j <= 100; ++j) {
    const double R = std::ldexp(1.0, j);
    bool ok = true;
    for (double t : log_grid(R, std::max(2.0 * R, s.T_max), 200)) {
      if (!holds(t)) {
        ok = false;
        break;
      }
    }
    if (ok) return R;
  }
  return 1.0;
}

inline void ProblemSpec::prepare() {
  if (!phi.has_indices()) phi = with_computed_indices(phi);
  if (!upsilon.has_indices()) upsilon = with_computed_indices(upsilon);
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::Construction, "gamma must lie in (0,1)");
  if (!(c1 > 0.0 && c2 > 0.0)) throw Error(ErrorCode::Construction, "c1, c2 must be positive");
  if (a) {
    for (double t : log_grid(1e-3, 1e3, 25)) {
      const double lhs = t * a(t);
      const double rhs = phi.derivative(t);
      if (std::abs(lhs - rhs) > 1e-8 * std::abs(rhs)) {
        std::ostringstream os;
        os << "t a(t) = " << lhs << " differs from phi'(t) = " << rhs << " at t=" << t;
        throw Error(ErrorCode::InvalidOperator, os.str());
      }
    }
  }
  try {
    phi_star = with_computed_indices(sobolev_conjugate(phi, N));
    phi_star_error.clear();
  } catch (const Error& e) {
    phi_star.reset();
    phi_star_error = e.what();
  }
  upsilon_bar = young_conjugate(upsilon);
  if (std::isnan(mu)) mu = auto_mu(*this);
  if (std::isnan(R)) R = auto_R(*this);
  if (!(R > 0.0)) throw Error(ErrorCode::Construction, "R must be positive");
}

// ---------------------------------------------------------------------------
// Checks

struct Ha1Result {
  double inf = 0.0;
  double sup = 0.0;
  bool pass = false;
  std::string message;
};

struct Ha2Result {
  bool diverges = false;
  std::vector<double> integrals;  // int_1^{10^k} theta, k = 2..8
  double s_phi = 0.0;
  double i_phi_star = std::numeric_limits<double>::quiet_NaN();
  bool regularized = false;
  bool pass = false;
  std::string message;
};

struct Hf1Result {
  double delta = 0.0;
  bool pass = false;
  std::string message;
};

struct Hf2Result {
  double max_violation = 0.0;
  bool index_ok = false;
  bool pass = false;
  std::string message;
};

struct Hf3Result {
  double max_violation = 0.0;
  bool mu_ok = false;
  bool pass = false;
  std::string message;
};

inline Ha1Result check_ha1(const std::function<double(double)>& a,
                           const std::function<double(double)>& a_prime) {
  Ha1Result out;
  out.inf = std::numeric_limits<double>::infinity();
  out.sup = -std::numeric_limits<double>::infinity();
  for (double t : log_grid(1e-4, 1e6, 2000)) {
    const double at = a(t);
    if (!(at > 0.0)) {
      std::ostringstream os;
      os << "a(t) = " << at << " <= 0 at t=" << t;
      throw Error(ErrorCode::InvalidOperator, os.str());
    }
    const double r = t * a_prime(t) / at;
    out.inf = std::min(out.inf, r);
    out.sup = std::max(out.sup, r);
  }
  out.pass = out.inf > -1.0 && std::isfinite(out.sup);
  std::ostringstream os;
  os << "H(a)1 " << (out.pass ? "PASS" : "FAIL") << ": t a'(t)/a(t) in [" << out.inf << ", "
     << out.sup << "]" << (out.pass ? "" : " (need inf > -1 and finite sup)");
  out.message = os.str();
  return out;
}

inline Ha1Result check_ha1(const ProblemSpec& s) { return check_ha1(s.a, s.a_prime); }

inline Ha2Result check_ha2(const ProblemSpec& s) {
  Ha2Result out;
  out.s_phi = s.phi.indices().upper;
  double acc = sobolev_integral(s.phi, s.N, 1.0, 1e2);
  out.integrals.push_back(acc);
  for (int k = 3; k <= 8; ++k) {
    acc += sobolev_integral(s.phi, s.N, std::pow(10.0, k - 1), std::pow(10.0, k));
    out.integrals.push_back(acc);
  }
  bool growing = true;
  for (std::size_t i = 1; i < out.integrals.size(); ++i) {
    if (out.integrals[i] < out.integrals[i - 1] * (1.0 + 1e-3)) growing = false;
  }
  const std::size_t n = out.integrals.size();
  const double d_last = out.integrals[n - 1] - out.integrals[n - 2];
  const double d_prev = out.integrals[n - 2] - out.integrals[n - 3];
  const bool not_saturating = d_last >= (1.0 - 1e-2) * d_prev;
  out.diverges = growing && not_saturating;

  std::ostringstream os;
  if (s.phi_star) out.i_phi_star = s.phi_star->indices().lower;
  const bool index_ok = s.phi_star && out.s_phi < out.i_phi_star;
  out.pass = out.diverges && index_ok;
  os << "H(a)2 " << (out.pass ? "PASS" : "FAIL") << ": int_1^T theta "
     << (out.diverges ? "diverges" : "converges") << " (I(1e8)=" << out.integrals.back()
     << ", last decade ratio " << d_last / d_prev << ")";
  if (s.phi_star) {
    os << ", s_phi=" << out.s_phi << (index_ok ? " < " : " >= ") << "i_phi*=" << out.i_phi_star;
  } else {
    os << ", Sobolev conjugate unavailable: " << s.phi_star_error;
  }
  out.message = os.str();
  return out;
}

inline std::vector<double> sample_nodes(const ProblemSpec& s) {
  std::vector<double> xs;
  if (s.f.autonomous) {
    xs.push_back(s.grid.x(s.grid.n_interior / 2));
  } else {
    for (int i = 0; i < s.grid.n_interior; ++i) xs.push_back(s.grid.x(i));
  }
  return xs;
}

inline Hf1Result check_hf1(const ProblemSpec& s) {
  Hf1Result out;
  const auto xs = sample_nodes(s);
  auto min_over_x = [&](double v) {
    double m = std::numeric_limits<double>::infinity();
    for (double x : xs) {
      const double fv = s.f.value(x, v);
      if (fv < 0.0) {
        std::ostringstream os;
        os << "reaction negative (" << fv << ") at x=" << x << ", s=" << v;
        throw Error(ErrorCode::InvalidReaction, os.str());
      }
      m = std::min(m, fv);
    }
    return m;
  };
  for (double v : log_grid(1e-8, s.T_max, 100)) min_over_x(v);

  for (int j = 0; j >= -40; --j) {
    const double delta = std::ldexp(1.0, j);
    bool ok = true;
    for (double v : log_grid(delta * 1e-8, delta, 50)) {
      if (min_over_x(v) < 1.0) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.delta = delta;
      break;
    }
  }
  bool increasing = true;
  double prev = min_over_x(1e-1);
  for (int k = 2; k <= 8; ++k) {
    const double cur = min_over_x(std::pow(10.0, -k));
    if (!(cur > prev)) increasing = false;
    prev = cur;
  }
  out.pass = out.delta > 0.0 && increasing;
  std::ostringstream os;
  os << "H(f)1 " << (out.pass ? "PASS" : "FAIL") << ": ";
  if (out.delta > 0.0) {
    os << "f >= 1 on (0, " << out.delta << "]";
  } else {
    os << "no delta with f >= 1 near 0";
  }
  os << (increasing ? ", f(10^-k) increasing" : ", f(10^-k) not increasing") << " (sampled evidence)";
  out.message = os.str();
  return out;
}

inline Hf2Result check_hf2(const ProblemSpec& s) {
  Hf2Result out;
  const YoungFunction& ub = *s.upsilon_bar;
  const double iu = s.upsilon.indices().lower;
  const double su = s.upsilon.indices().upper;
  const bool have_star = s.phi_star.has_value();
  const double ips = have_star ? s.phi_star->indices().lower : std::numeric_limits<double>::quiet_NaN();
  out.index_ok = iu > 1.0 && have_star && su < ips;
  out.max_violation = -std::numeric_limits<double>::infinity();
  for (double x : sample_nodes(s)) {
    for (double v : log_grid(1e-6, s.T_max, 200)) {
      const double bound = s.c1 * ub.inverse(s.upsilon.value(v)) + s.c2 * std::pow(v, -s.gamma);
      const double viol = (s.f.value(x, v) - bound) / (1.0 + std::abs(bound));
      out.max_violation = std::max(out.max_violation, viol);
    }
  }
  out.pass = out.index_ok && out.max_violation <= 1e-8;
  std::ostringstream os;
  os << "H(f)2 " << (out.pass ? "PASS" : "FAIL") << ": max relative excess over c1 ubar^-1(ups) + c2 s^-gamma = "
     << out.max_violation << ", i_ups=" << iu << ", s_ups=" << su << ", i_phi*=" << ips
     << (out.index_ok ? "" : " (index condition 1 < i_ups, s_ups < i_phi* fails)");
  out.message = os.str();
  return out;
}

inline Hf3Result check_hf3(const ProblemSpec& s, double T_max) {
  Hf3Result out;
  out.mu_ok = s.mu > s.phi.indices().upper;
  out.max_violation = -std::numeric_limits<double>::infinity();
  double worst_t = s.R;
  for (double x : sample_nodes(s)) {
    double F = 0.0;
    double prev = s.R;
    for (double t : log_grid(s.R, std::max(T_max, 2.0 * s.R), 200)) {
      F += s.f.integral(x, prev, t);
      prev = t;
      const double tf = t * s.f.value(x, t);
      const double viol = (s.mu * F - tf) / (1.0 + std::abs(tf));
      if (viol > out.max_violation) {
        out.max_violation = viol;
        worst_t = t;
      }
    }
  }
  out.pass = out.mu_ok && out.max_violation <= 1e-6;
  std::ostringstream os;
  os << "H(f)3 " << (out.pass ? "PASS" : "FAIL") << ": mu=" << s.mu << " R=" << s.R
     << ", max (mu F - t f)/(1+|t f|) = " << out.max_violation << " at t=" << worst_t;
  if (!out.mu_ok) os << " (mu <= s_phi=" << s.phi.indices().upper << ")";
  out.message = os.str();
  return out;
}

inline Hf3Result check_hf3(const ProblemSpec& s) { return check_hf3(s, s.T_max); }

struct HypothesisReport {
  Ha1Result ha1;
  Ha2Result ha2;
  Hf1Result hf1;
  Hf2Result hf2;
  Hf3Result hf3;

  bool all_pass() const { return ha1.pass && ha2.pass && hf1.pass && hf2.pass && hf3.pass; }

  std::vector<std::string> lines() const {
    return {ha1.message, ha2.message, hf1.message, hf2.message, hf3.message};
  }
};

inline HypothesisReport check_all(const ProblemSpec& s) {
  return {check_ha1(s), check_ha2(s), check_hf1(s), check_hf2(s), check_hf3(s)};
}

// ---------------------------------------------------------------------------
// Built-in problems

enum class Builtin { A4, A5, PathologicalReaction };

struct BuiltinParams {
  double p = 3.0;
  double N = 4.0;
  double r = 3.5;
  double gamma = 0.5;
  double eps = 1.9;
};

/// a(t) = phi'(t)/t with its derivative.
inline void operator_from_phi(ProblemSpec& s) {
  const YoungFunction phi = s.phi;
  s.a = [phi](double t) { return phi.derivative(t) / t; };
  s.a_prime = [phi](double t) { return (phi.second_derivative(t) * t - phi.derivative(t)) / (t * t); };
}

inline ProblemSpec make_a5(double p, double N, double r, double gamma) {
  std::ostringstream os;
  if (!(p > 1.0) || !(p <= N - 1.0)) {
    os << "need 1 < p <= N-1, got p=" << p << " N=" << N;
    throw Error(ErrorCode::Construction, os.str());
  }
  if (!(N < p + p * p)) {
    os << "need N < p + p^2";
    throw Error(ErrorCode::Construction, os.str());
  }
  const double p_star = N * p / (N - p);
  if (!(r > p && r < p_star - 1.0)) {
    os << "need r in (" << p << ", " << p_star - 1.0 << "), got " << r;
    throw Error(ErrorCode::Construction, os.str());
  }
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::Construction, "need gamma in (0,1)");
  ProblemSpec s;
  s.name = "A5";
  s.a = [p](double t) { return std::pow(t, p - 2.0) * std::log1p(t); };
  s.a_prime = [p](double t) {
    return (p - 2.0) * std::pow(t, p - 3.0) * std::log1p(t) + std::pow(t, p - 2.0) / (1.0 + t);
  };
  s.phi = log_primitive_young(p);
  s.upsilon = monomial(r + 1.0);
  s.f = power_reaction(r, 1.0, gamma);
  s.gamma = gamma;
  s.N = N;
  s.c1 = s.c2 = 1.0;
  return s;
}

inline ProblemSpec builtin_example(Builtin which, const BuiltinParams& bp = {}) {
  ProblemSpec s;
  switch (which) {
    case Builtin::A5:
      s = make_a5(bp.p, bp.N, bp.r, bp.gamma);
      break;
    case Builtin::A4: {
      s.name = "A4";
      s.phi = build_pathological(PathologicalParams::make(3.0, 2.0, bp.eps));
      s.upsilon = build_pathological(PathologicalParams::make(3.7, 3.3, bp.eps));
      s.N = 4.0;
      s.gamma = bp.gamma;
      s.f = young_ratio_reaction(s.upsilon, 1.0, bp.gamma);
      operator_from_phi(s);
      break;
    }
    case Builtin::PathologicalReaction: {
      s.name = "pathological-reaction";
      s.phi = power_young(2.0);
      s.upsilon = build_pathological(PathologicalParams::make(4.0, 3.0, bp.eps));
      s.N = 3.0;
      s.gamma = bp.gamma;
      s.f = young_ratio_reaction(s.upsilon, 1.0, bp.gamma);
      operator_from_phi(s);
      break;
    }
  }
  s.prepare();
  return s;
}

}  // namespace philap
