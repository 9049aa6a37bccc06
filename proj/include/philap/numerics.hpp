#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "philap/error.hpp"

namespace philap {

/// n log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw Error(ErrorCode::EvaluationDomain, "log_grid needs 0 < lo < hi and n >= 2");
  }
  std::vector<double> out(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

inline bool is_finite(double x) { return std::isfinite(x); }

struct RelativeTolerance {
  double rel;
  bool operator()(double a, double b) const {
    return std::abs(a - b) <= rel * std::min(std::abs(a), std::abs(b));
  }
};

/// Root of f(x) = target for strictly increasing f on [lo_limit, hi_limit].
/// The bracket is grown geometrically from `hint`. Throws OutOfRange when the
/// target is not attained inside the limits.
inline double solve_increasing(const std::function<double(double)>& f, double target,
                               double lo_limit, double hi_limit, double hint,
                               double rel_tol = 1e-10) {
  if (!(hint > lo_limit && hint < hi_limit)) {
    hint = std::sqrt(std::max(lo_limit, 1e-300) * hi_limit);
    if (!(hint > lo_limit && hint < hi_limit)) hint = 0.5 * (lo_limit + hi_limit);
  }
  double a = hint, b = hint;
  double fa = f(a) - target, fb = fa;
  if (fa == 0.0) return hint;
  double factor = 2.0;
  if (fa < 0.0) {
    while (fb < 0.0) {
      a = b;
      fa = fb;
      if (b >= hi_limit) {
        throw Error(ErrorCode::OutOfRange, "target " + std::to_string(target) +
                                               " above attainable range");
      }
      b = std::min(b * factor, hi_limit);
      factor *= factor > 1e8 ? 1.0 : 2.0;
      fb = f(b) - target;
    }
  } else {
    while (fa > 0.0) {
      b = a;
      fb = fa;
      if (a <= lo_limit) {
        throw Error(ErrorCode::OutOfRange, "target " + std::to_string(target) +
                                               " below attainable range");
      }
      a = std::max(a / factor, lo_limit);
      factor *= factor > 1e8 ? 1.0 : 2.0;
      fa = f(a) - target;
    }
  }
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  std::uintmax_t iters = 200;
  auto g = [&](double x) { return f(x) - target; };
  auto r = boost::math::tools::toms748_solve(g, a, b, fa, fb, RelativeTolerance{rel_tol}, iters);
  return 0.5 * (r.first + r.second);
}

/// Adaptive Gauss-Kronrod (31 points) on [a,b].
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-12, unsigned max_depth = 15,
                        double* error_out = nullptr) {
  if (a == b) return 0.0;
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      f, a, b, max_depth, rel_tol, &err);
  if (error_out) *error_out = err;
  if (!std::isfinite(v)) {
    throw Error(ErrorCode::SingularIntegrand, "non-finite quadrature on [" +
                                                  std::to_string(a) + ", " + std::to_string(b) + "]");
  }
  return v;
}

/// Fixed 15-point Gauss-Legendre rule on [a,b].
inline double gauss15(const std::function<double(double)>& f, double a, double b) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss<double, 15>::integrate(f, a, b);
}

/// Brent minimisation on [a,b]; returns (argmin, min).
inline std::pair<double, double> minimize_scalar(const std::function<double(double)>& f,
                                                 double a, double b, int bits = 50) {
  std::uintmax_t iters = 500;
  return boost::math::tools::brent_find_minima(f, a, b, bits, iters);
}

/// FNV-1a 64-bit hash.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace philap
