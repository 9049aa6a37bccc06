#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "philap/error.hpp"
#include "philap/hypotheses.hpp"
#include "philap/young.hpp"

namespace philap {

enum class ThresholdCase { MuchLess, Less, Greater, MuchGreater };

inline std::string_view to_string(ThresholdCase c) {
  switch (c) {
    case ThresholdCase::MuchLess: return "MuchLess";
    case ThresholdCase::Less: return "Less";
    case ThresholdCase::Greater: return "Greater";
    case ThresholdCase::MuchGreater: return "MuchGreater";
  }
  return "?";
}

struct TruncationConstants {
  double C1 = 0.0;
  double C2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

inline TruncationConstants truncation_constants(const YoungFunction& upsilon,
                                                const YoungFunction& upsilon_bar, double c1,
                                                double c2, double gamma, double d_omega, double k1,
                                                double k2) {
  if (!(k1 > 0.0) || !(k2 > 0.0)) throw Error(ErrorCode::Construction, "slopes k1, k2 must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw Error(ErrorCode::Construction, "gamma must lie in (0,1)");
  const double u1 = upsilon.value(1.0);
  if (!(u1 > 0.0)) throw Error(ErrorCode::Construction, "upsilon(1) must be positive");
  const double kd = k2 * d_omega;
  TruncationConstants out;
  out.C1 = 2.0 * c1 * upsilon.value(kd) + c2 * std::pow(kd, 1.0 - gamma) + c2 / (1.0 - gamma);
  out.C2 = 2.0 * c1 + c2 / ((1.0 - gamma) * u1);
  out.alpha = c2 * std::pow(k1, -gamma);
  out.beta = c1 * upsilon_bar.inverse(upsilon.value(kd));
  return out;
}

inline TruncationConstants truncation_constants(const ProblemSpec& s, double k1, double k2) {
  return truncation_constants(s.upsilon, *s.upsilon_bar, s.c1, s.c2, s.gamma, s.grid.diameter(), k1, k2);
}

/// Bound on the truncated primitive over {|u| <= rho}.
inline double Pi(const TruncationConstants& c, const YoungFunction& upsilon, double measure, double rho) {
  return (c.C1 + c.C2 * upsilon.value(rho)) * measure;
}

inline ThresholdCase classify(const YoungFunction& upsilon, const YoungFunction& phi) {
  if (ordering(upsilon, phi) == Ordering::MuchLess) return ThresholdCase::MuchLess;
  if (ordering(phi, upsilon) == Ordering::MuchLess) return ThresholdCase::MuchGreater;
  if (less_constant(upsilon, phi)) return ThresholdCase::Less;
  if (less_constant(phi, upsilon)) return ThresholdCase::Greater;
  throw Error(ErrorCode::Unclassifiable,
              "neither " + upsilon.name() + " vs " + phi.name() + " ordering holds in either direction");
}

// ---------------------------------------------------------------------------
// Case-four arithmetic

inline double khat(double A, double B, double theta, double r) { return A / r + B * std::pow(r, theta); }

inline double khat_prime(double A, double B, double theta, double r) {
  return -A / (r * r) + B * theta * std::pow(r, theta - 1.0);
}

inline double case4_rstar(double A, double B, double theta) {
  return std::pow(A / (theta * B), 1.0 / (theta + 1.0));
}

/// min k-hat by evaluation at its critical point.
inline double case4_minimum(double A, double B, double theta) {
  return khat(A, B, theta, case4_rstar(A, B, theta));
}

/// The compact expression [A^theta B (theta + theta^-theta)]^{1/(theta+1)}; kept for comparison only.
inline double case4_compact_formula(double A, double B, double theta) {
  return std::pow(std::pow(A, theta) * B * (theta + std::pow(theta, -theta)), 1.0 / (theta + 1.0));
}

// ---------------------------------------------------------------------------

struct Case1Data {
  double eps = 1.0;
  double M_eps = 0.0;
};

struct Case2Data {
  double c = 1.0;
  double M = 0.0;
};

struct Case4Data {
  double A = 0.0;
  double B = 0.0;
  double theta = 0.0;
  double r_min = 0.0;
  double kappa_min = 0.0;
  double k_embed = 0.0;
};

struct ThresholdResult {
  ThresholdCase kind = ThresholdCase::MuchLess;
  double C1 = 0.0;
  double C2 = 0.0;
  double lambda_star = std::numeric_limits<double>::infinity();
  double measure = 1.0;
  double diameter = 1.0;
  std::function<double(double)> r_star;
  /// Upper bound on kappa(r); lambda enters only in the first case through eps.
  std::function<double(double, double)> kappa_bound;
  std::function<Case1Data(double)> case1;
  std::optional<Case2Data> case2;
  std::optional<Case4Data> case4;
  std::optional<YoungFunction> upsilon_hat;
  double C1_hat = 0.0;
  double C2_hat = 0.0;

  double default_lambda(double fraction = 0.5) const {
    return std::isfinite(lambda_star) ? fraction * lambda_star : 1.0;
  }
};

struct ThresholdInputs {
  YoungFunction phi;
  YoungFunction upsilon;
  std::optional<YoungFunction> phi_star;
  double C1 = 0.0;
  double C2 = 0.0;
  double measure = 1.0;
  double diameter = 1.0;
  /// Embedding constant of W^{1,phi}_0 into the target space; used in the last two cases.
  std::function<double(const YoungFunction& target)> embedding;
};

namespace detail {

/// Smallest dyadic M >= 2^-20 with lhs(t) <= rhs(t) on sampled [M, top].
inline double dyadic_threshold(const std::function<double(double)>& lhs,
                               const std::function<double(double)>& rhs, double top,
                               const std::string& what) {
  for (int j = -20; j <= 100; ++j) {
    const double M = std::ldexp(1.0, j);
    if (M > top / 10.0) break;
    const int decades = static_cast<int>(std::ceil(std::log10(top / M)));
    bool ok = true;
    for (double t : log_grid(M, top, static_cast<std::size_t>(10 * decades + 1))) {
      if (lhs(t) > rhs(t)) {
        ok = false;
        break;
      }
    }
    if (ok) return M;
  }
  throw Error(ErrorCode::CaseMisclassification, "no tail threshold found for " + what);
}

inline double usable_top(const YoungFunction& a, const YoungFunction& b, double dilation = 1.0) {
  double top = std::min(a.domain().hi, b.domain().hi / dilation);
  while (top > 1.0) {
    try {
      const double va = a.value(top), vb = b.value(top * dilation);
      if (std::isfinite(va) && std::isfinite(vb) && va < 1e290 && vb < 1e290) break;
    } catch (const Error&) {
    }
    top /= 10.0;
  }
  return top;
}

inline void fill_case4(ThresholdResult& out, const YoungFunction& ups, const YoungFunction& phi,
                       double C1, double C2, double measure, double k) {
  const double zk = zeta_upper(ups, k);
  Case4Data c4;
  c4.k_embed = k;
  c4.A = C1 * measure + C2 * zk;
  c4.B = C2 * zk;
  c4.theta = ups.indices().upper / phi.indices().lower - 1.0;
  if (!(c4.theta > 0.0)) {
    std::ostringstream os;
    os << "theta = s_ups/i_phi - 1 = " << c4.theta << " is not positive";
    throw Error(ErrorCode::CaseContradiction, os.str());
  }
  c4.r_min = case4_rstar(c4.A, c4.B, c4.theta);
  c4.kappa_min = khat(c4.A, c4.B, c4.theta, c4.r_min);
  out.case4 = c4;
  out.lambda_star = 1.0 / c4.kappa_min;
  out.r_star = [c4](double) { return c4.r_min; };
  out.kappa_bound = [c4](double, double r) { return khat(c4.A, c4.B, c4.theta, r); };
}

}  // namespace detail

inline ThresholdResult lambda_star(const ThresholdInputs& in, ThresholdCase kind) {
  ThresholdResult out;
  out.kind = kind;
  out.C1 = in.C1;
  out.C2 = in.C2;
  out.measure = in.measure;
  out.diameter = in.diameter;
  const YoungFunction& phi = in.phi;
  const YoungFunction& ups = in.upsilon;
  const double C1 = in.C1, C2 = in.C2, measure = in.measure, d = in.diameter;

  switch (kind) {
    case ThresholdCase::MuchLess: {
      out.lambda_star = std::numeric_limits<double>::infinity();
      const double zphi = zeta_upper(phi, 2.0 * d);
      const double top = detail::usable_top(ups, phi);
      auto data = [=](double lambda) {
        Case1Data c;
        c.eps = std::min(1.0, 1.0 / (2.0 * C2 * zphi * lambda));
        const double eps = c.eps;
        c.M_eps = detail::dyadic_threshold([ups](double t) { return ups.value(t); },
                                           [phi, eps](double t) { return eps * phi.value(t); }, top,
                                           "ups <= eps phi");
        return c;
      };
      out.case1 = data;
      out.r_star = [=](double lambda) {
        const Case1Data c = data(lambda);
        return 4.0 * lambda * (C1 + C2 * ups.value(c.M_eps)) * measure;
      };
      out.kappa_bound = [=](double lambda, double r) {
        const Case1Data c = data(lambda);
        return (C1 + C2 * ups.value(c.M_eps)) * measure / r + C2 * zphi * c.eps;
      };
      break;
    }
    case ThresholdCase::Less: {
      const auto c = less_constant(ups, phi);
      if (!c) throw Error(ErrorCode::CaseMisclassification, "no dilation c with ups(t) <= phi(ct)");
      const double cc = *c;
      const double top = detail::usable_top(ups, phi, cc);
      Case2Data c2;
      c2.c = cc;
      c2.M = detail::dyadic_threshold([ups](double t) { return ups.value(t); },
                                      [phi, cc](double t) { return phi.value(cc * t); }, top,
                                      "ups(t) <= phi(ct)");
      out.case2 = c2;
      const double z = zeta_upper(phi, 2.0 * cc * d);
      out.lambda_star = 1.0 / (C2 * z);
      const double X = (C1 + C2 * ups.value(c2.M)) * measure;
      out.r_star = [=](double lambda) { return 2.0 * X / (1.0 / lambda - C2 * z); };
      out.kappa_bound = [=](double, double r) { return X / r + C2 * z; };
      break;
    }
    case ThresholdCase::Greater: {
      if (!in.phi_star) throw Error(ErrorCode::SingularIntegrand, "Sobolev conjugate required");
      const YoungFunction& ps = *in.phi_star;
      const double top = detail::usable_top(ups, ps);
      const double M = detail::dyadic_threshold([ups](double t) { return ups.value(t); },
                                                [ps](double t) { return ps.value(t); }, top,
                                                "ups <= phi_*");
      YoungFunction uh = with_computed_indices(geometric_mean(ups, ps));
      out.upsilon_hat = uh;
      out.C1_hat = C1 + C2 * ups.value(M);
      out.C2_hat = C2;
      if (!in.embedding) throw Error(ErrorCode::Construction, "embedding constant estimator missing");
      detail::fill_case4(out, uh, phi, out.C1_hat, out.C2_hat, measure, in.embedding(uh));
      break;
    }
    case ThresholdCase::MuchGreater: {
      if (!in.embedding) throw Error(ErrorCode::Construction, "embedding constant estimator missing");
      detail::fill_case4(out, ups, phi, C1, C2, measure, in.embedding(ups));
      break;
    }
  }
  return out;
}

struct KappaPoint {
  double r;
  double bound;
};

inline std::vector<KappaPoint> kappa_curve(const ThresholdResult& res, double lambda,
                                           const std::vector<double>& r_values) {
  std::vector<KappaPoint> out;
  out.reserve(r_values.size());
  for (double r : r_values) out.push_back({r, res.kappa_bound(lambda, r)});
  return out;
}

}  // namespace philap
