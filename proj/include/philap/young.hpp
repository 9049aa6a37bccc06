#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "philap/error.hpp"
#include "philap/numerics.hpp"

namespace philap {

struct Domain {
  double lo = 1e-8;
  double hi = 1e30;
};

struct IndexPair {
  double lower = 0.0;
  double upper = 0.0;
  double at_infinity_lower = 0.0;
  double at_infinity_upper = 0.0;
};

namespace detail {

/// Lazily tabulated inverse of an increasing function on [lo, hi].
class MonotoneInverse {
 public:
  MonotoneInverse(std::function<double(double)> f, double lo, double hi)
      : f_(std::move(f)), lo_(lo), hi_(hi) {}

  double operator()(double y, double rel_tol = 1e-13) const {
    std::call_once(once_, [this] { build(); });
    if (y == 0.0) return 0.0;
    if (!(y > 0.0)) throw Error(ErrorCode::EvaluationDomain, "inverse of negative value");
    if (t_.empty()) throw Error(ErrorCode::EvaluationDomain, "inverse table is empty");
    if (y > v_.back()) {
      std::ostringstream os;
      os << "value " << y << " exceeds attainable range " << v_.back();
      throw Error(ErrorCode::OutOfRange, os.str());
    }
    if (y <= v_.front()) {
      if (y == v_.front()) return t_.front();
      return solve_increasing(f_, y, 1e-300, t_.front(), 0.5 * t_.front(), rel_tol);
    }
    const auto it = std::lower_bound(v_.begin(), v_.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - v_.begin());
    if (*it == y) return t_[j];
    double a = t_[j - 1], b = t_[j];
    double fa = v_[j - 1] - y, fb = v_[j] - y;
    std::uintmax_t iters = 200;
    auto g = [&](double x) { return f_(x) - y; };
    auto r = boost::math::tools::toms748_solve(g, a, b, fa, fb, RelativeTolerance{rel_tol}, iters);
    return 0.5 * (r.first + r.second);
  }

 private:
  void build() const {
    const double step = std::pow(10.0, 0.25);
    for (double t = lo_; t <= hi_ * (1.0 + 1e-12); t *= step) {
      double v;
      try {
        v = f_(t);
      } catch (const Error&) {
        break;
      }
      if (!std::isfinite(v)) break;
      if (!v_.empty() && v <= v_.back()) continue;
      t_.push_back(t);
      v_.push_back(v);
    }
  }

  std::function<double(double)> f_;
  double lo_, hi_;
  mutable std::once_flag once_;
  mutable std::vector<double> t_, v_;
};

}  // namespace detail

/// Convex generator with value and derivative evaluators.
class YoungFunction {
 public:
  using Fn = std::function<double(double)>;

  struct Parts {
    std::string name;
    Fn value;
    Fn derivative;
    Fn second_derivative;  // optional
    Fn inverse;            // optional closed form of the inverse
    Fn ratio;              // optional closed form of t psi'(t)/psi(t)
    Domain domain;
  };

  YoungFunction() = default;

  explicit YoungFunction(Parts parts) : p_(std::make_shared<Parts>(std::move(parts))) {
    if (!p_->value || !p_->derivative) {
      throw Error(ErrorCode::Construction, "value and derivative are required");
    }
    if (!(p_->domain.lo > 0.0) || !(p_->domain.hi > p_->domain.lo)) {
      throw Error(ErrorCode::Construction, "invalid evaluation domain");
    }
    inv_ = std::make_shared<detail::MonotoneInverse>(
        [v = p_->value](double t) { return v(t); }, p_->domain.lo, p_->domain.hi);
  }

  YoungFunction(std::string name, Fn value, Fn derivative, Fn second = nullptr,
                Domain domain = {})
      : YoungFunction(Parts{std::move(name), std::move(value), std::move(derivative),
                            std::move(second), nullptr, nullptr, domain}) {}

  const std::string& name() const { return parts().name; }
  const Domain& domain() const { return parts().domain; }

  double operator()(double t) const { return value(t); }

  double value(double t) const {
    if (t == 0.0) return 0.0;
    check_arg(t);
    return check_result(t, parts().value(t), "value");
  }

  double derivative(double t) const {
    if (t == 0.0) return 0.0;
    check_arg(t);
    return check_result(t, parts().derivative(t), "derivative");
  }

  bool has_second_derivative() const { return static_cast<bool>(parts().second_derivative); }

  /// Falls back to a central difference of the derivative.
  double second_derivative(double t) const {
    check_arg(t);
    if (parts().second_derivative) {
      return check_result(t, parts().second_derivative(t), "second derivative");
    }
    const double h = 1e-5 * t;
    return (derivative(t + h) - derivative(t - h)) / (2.0 * h);
  }

  double index_ratio(double t) const {
    if (parts().ratio) {
      check_arg(t);
      return check_result(t, parts().ratio(t), "index ratio");
    }
    return t * derivative(t) / value(t);
  }

  double inverse(double y) const {
    if (y == 0.0) return 0.0;
    if (parts().inverse) return parts().inverse(y);
    return (*inv_)(y);
  }

  bool has_indices() const { return indices_.has_value(); }

  const IndexPair& indices() const {
    if (!indices_) {
      throw Error(ErrorCode::MissingIndices, "indices of " + name() + " not computed");
    }
    return *indices_;
  }

  YoungFunction with_indices(const IndexPair& idx) const {
    YoungFunction out = *this;
    out.indices_ = idx;
    return out;
  }

  YoungFunction renamed(std::string name) const {
    YoungFunction out = *this;
    auto parts_copy = std::make_shared<Parts>(*p_);
    parts_copy->name = std::move(name);
    out.p_ = std::move(parts_copy);
    return out;
  }

  bool valid() const { return static_cast<bool>(p_); }

 private:
  const Parts& parts() const {
    if (!p_) throw Error(ErrorCode::Construction, "empty Young function");
    return *p_;
  }

  void check_arg(double t) const {
    if (!(t >= 0.0) || t > parts().domain.hi) {
      std::ostringstream os;
      os << name() << " evaluated at t=" << t << " outside [0, " << parts().domain.hi << "]";
      throw Error(ErrorCode::EvaluationDomain, os.str());
    }
  }

  double check_result(double t, double v, const char* what) const {
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "non-finite " << what << " of " << name() << " at t=" << t;
      throw Error(ErrorCode::EvaluationDomain, os.str());
    }
    return v;
  }

  std::shared_ptr<const Parts> p_;
  std::shared_ptr<detail::MonotoneInverse> inv_;
  std::optional<IndexPair> indices_;
};

// ---------------------------------------------------------------------------
// Indices

/// 2000 log points on [1e-4, 1e6] clipped to the domain, widened downward to 8 decades.
inline std::vector<double> default_index_grid(const Domain& d, std::size_t n = 2000) {
  double lo = std::max(1e-4, d.lo);
  double hi = std::min(1e6, d.hi);
  if (hi / lo < 1e8) lo = std::max(d.lo, hi / 1e8);
  return log_grid(lo, hi, n);
}

inline IndexPair compute_indices(const YoungFunction& psi, const std::vector<double>& grid) {
  if (grid.size() < 2) throw Error(ErrorCode::EvaluationDomain, "index grid too small");
  const Domain& d = psi.domain();
  const double t_top = *std::max_element(grid.begin(), grid.end());
  IndexPair out;
  out.lower = out.at_infinity_lower = std::numeric_limits<double>::infinity();
  out.upper = out.at_infinity_upper = -std::numeric_limits<double>::infinity();
  for (double t : grid) {
    if (t < d.lo * (1.0 - 1e-12) || t > d.hi) {
      throw Error(ErrorCode::EvaluationDomain, "index grid leaves evaluation domain");
    }
    const double r = psi.index_ratio(t);
    if (!std::isfinite(r)) {
      std::ostringstream os;
      os << "non-finite index ratio of " << psi.name() << " at t=" << t;
      throw Error(ErrorCode::EvaluationDomain, os.str());
    }
    out.lower = std::min(out.lower, r);
    out.upper = std::max(out.upper, r);
    if (t >= t_top / 100.0) {
      out.at_infinity_lower = std::min(out.at_infinity_lower, r);
      out.at_infinity_upper = std::max(out.at_infinity_upper, r);
    }
  }
  return out;
}

inline IndexPair compute_indices(const YoungFunction& psi) {
  return compute_indices(psi, default_index_grid(psi.domain()));
}

inline YoungFunction with_computed_indices(const YoungFunction& psi) {
  return psi.with_indices(compute_indices(psi));
}

inline double zeta_lower(const YoungFunction& psi, double k) {
  if (k < 0.0) throw Error(ErrorCode::EvaluationDomain, "zeta needs k >= 0");
  const IndexPair& idx = psi.indices();
  return std::min(std::pow(k, idx.lower), std::pow(k, idx.upper));
}

inline double zeta_upper(const YoungFunction& psi, double k) {
  if (k < 0.0) throw Error(ErrorCode::EvaluationDomain, "zeta needs k >= 0");
  const IndexPair& idx = psi.indices();
  return std::max(std::pow(k, idx.lower), std::pow(k, idx.upper));
}

// ---------------------------------------------------------------------------
// Young conjugate

inline YoungFunction young_conjugate(const YoungFunction& psi) {
  const double lo = psi.domain().lo;
  const double hi = psi.domain().hi;
  const double dlo = psi.derivative(lo);
  const double dhi = psi.derivative(hi);
  if (!(dhi > dlo)) throw Error(ErrorCode::Construction, "derivative is not increasing");

  auto dinv = std::make_shared<detail::MonotoneInverse>(
      [psi](double s) { return psi.derivative(s); }, lo, hi);

  // Maximiser of s -> st - psi(s).
  auto argmax = [psi, dinv, lo, hi, dlo, dhi](double t) -> double {
    if (t < dlo * (1.0 - 1e-12) || t > dhi * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "maximiser for the conjugate of " << psi.name() << " at t=" << t
         << " leaves [" << lo << ", " << hi << "]";
      throw Error(ErrorCode::OutOfRange, os.str());
    }
    if (t <= dlo) return lo;
    if (t >= dhi) return hi;
    try {
      return (*dinv)(t, 1e-13);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfRange) throw;
    } catch (const std::exception&) {
    }
    auto obj = [&](double x) {
      const double s = std::exp(x);
      return psi.value(s) - s * t;
    };
    return std::exp(minimize_scalar(obj, std::log(lo), std::log(hi)).first);
  };

  YoungFunction::Parts parts;
  parts.name = "conj(" + psi.name() + ")";
  parts.value = [psi, argmax](double t) {
    const double s = argmax(t);
    return s * t - psi.value(s);
  };
  parts.derivative = argmax;
  if (psi.has_second_derivative()) {
    parts.second_derivative = [psi, argmax](double t) { return 1.0 / psi.second_derivative(argmax(t)); };
  }
  parts.ratio = [psi, argmax](double t) {
    const double s = argmax(t);
    return s * t / (s * t - psi.value(s));
  };
  parts.domain = Domain{dlo, dhi};
  return YoungFunction(std::move(parts));
}

// ---------------------------------------------------------------------------
// Sobolev conjugate

namespace detail {

class SobolevTable {
 public:
  SobolevTable(YoungFunction phi, double N) : phi_(std::move(phi)), N_(N) { build(); }

  double theta(double s) const {
    if (s < split_) return theta_split_ * std::pow(s / split_, kappa_tail_);
    return phi_.inverse(s) / std::pow(s, 1.0 + 1.0 / N_);
  }

  /// Logarithmic slope of theta.
  double theta_slope(double s) const {
    if (s < split_) return kappa_tail_;
    const double t = phi_.inverse(s);
    return 1.0 / phi_.index_ratio(t) - 1.0 - 1.0 / N_;
  }

  /// Primitive of theta from 0.
  double G(double s) const {
    if (s <= split_) return g_split_ * std::pow(s / split_, kappa_tail_ + 1.0);
    auto it = std::upper_bound(s_.begin(), s_.end(), s);
    std::size_t j = static_cast<std::size_t>(it - s_.begin()) - 1;
    if (j >= s_.size() - 1) j = s_.size() - 2;
    return g_[j] + panel(s_[j], s);
  }

  double G_inverse(double y) const {
    if (y == 0.0) return 0.0;
    if (!(y > 0.0)) throw Error(ErrorCode::EvaluationDomain, "negative argument");
    if (y <= g_split_) return split_ * std::pow(y / g_split_, 1.0 / (kappa_tail_ + 1.0));
    if (y > g_.back()) {
      std::ostringstream os;
      os << "Sobolev conjugate argument " << y << " beyond " << g_.back();
      throw Error(ErrorCode::EvaluationDomain, os.str());
    }
    auto it = std::lower_bound(g_.begin(), g_.end(), y);
    const std::size_t j = static_cast<std::size_t>(it - g_.begin());
    if (*it == y) return s_[j];
    double a = s_[j - 1], b = s_[j];
    double fa = g_[j - 1] - y, fb = g_[j] - y;
    std::uintmax_t iters = 200;
    auto f = [&](double s) { return g_[j - 1] + panel(s_[j - 1], s) - y; };
    auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, RelativeTolerance{1e-14}, iters);
    return 0.5 * (r.first + r.second);
  }

  double y_max() const { return g_.back(); }
  bool regularized() const { return regularized_; }
  double tail_exponent() const { return kappa_tail_; }

 private:
  double panel(double a, double b) const {
    if (b <= a) return 0.0;
    auto f = [this](double x) {
      const double s = std::exp(x);
      return theta(s) * s;
    };
    return gauss15(f, std::log(a), std::log(b));
  }

  void build() {
    if (!(N_ >= 2.0)) throw Error(ErrorCode::Construction, "dimension must be at least 2");
    const double t_lo = phi_.domain().lo;
    const double s0 = phi_.value(t_lo);
    const double kappa0 = 1.0 / phi_.index_ratio(t_lo) - 1.0 - 1.0 / N_;
    if (kappa0 + 1.0 > 1e-2) {
      split_ = s0;
      kappa_tail_ = kappa0;
    } else {
      // Integral diverges at 0: replace theta on (0,1) by the power law set by the lower index.
      const double q0 = phi_.has_indices() ? phi_.indices().lower : compute_indices(phi_).lower;
      if (q0 >= N_) {
        std::ostringstream os;
        os << "integrand of the Sobolev conjugate is not integrable at 0 (lower index " << q0
           << " >= N=" << N_ << ")";
        throw Error(ErrorCode::SingularIntegrand, os.str());
      }
      split_ = std::max(1.0, s0);
      kappa_tail_ = 1.0 / q0 - 1.0 - 1.0 / N_;
      regularized_ = true;
    }
    theta_split_ = phi_.inverse(split_) / std::pow(split_, 1.0 + 1.0 / N_);
    g_split_ = theta_split_ * split_ / (kappa_tail_ + 1.0);

    double s_max;
    try {
      s_max = std::min(phi_.value(phi_.domain().hi), 1e250);
    } catch (const Error&) {
      s_max = 1e250;
    }
    const double step = std::pow(10.0, 0.125);
    s_.push_back(split_);
    g_.push_back(g_split_);
    for (double s = split_ * step; s_.back() < s_max; s *= step) {
      const double b = std::min(s, s_max);
      const double inc = panel(s_.back(), b);
      if (!std::isfinite(inc)) {
        throw Error(ErrorCode::SingularIntegrand, "non-finite quadrature for the Sobolev conjugate");
      }
      g_.push_back(g_.back() + inc);
      s_.push_back(b);
    }
  }

  YoungFunction phi_;
  double N_;
  double split_ = 0.0;
  double kappa_tail_ = 0.0;
  double theta_split_ = 0.0;
  double g_split_ = 0.0;
  bool regularized_ = false;
  std::vector<double> s_, g_;
};

}  // namespace detail

/// Sobolev-Orlicz conjugate through the primitive of phi^{-1}(s)/s^{1+1/N}.
inline YoungFunction sobolev_conjugate(const YoungFunction& phi, double N) {
  auto table = std::make_shared<detail::SobolevTable>(phi, N);
  YoungFunction::Parts parts;
  std::ostringstream nm;
  nm << "sob(" << phi.name() << ",N=" << N << ")";
  parts.name = nm.str();
  parts.value = [table](double y) { return table->G_inverse(y); };
  parts.derivative = [table](double y) { return 1.0 / table->theta(table->G_inverse(y)); };
  parts.second_derivative = [table](double y) {
    const double s = table->G_inverse(y);
    const double th = table->theta(s);
    return -table->theta_slope(s) / (s * th * th);
  };
  parts.inverse = [table](double s) { return table->G(s); };
  parts.ratio = [table](double y) {
    const double s = table->G_inverse(y);
    return y / (s * table->theta(s));
  };
  parts.domain = Domain{1e-8, table->y_max()};
  return YoungFunction(std::move(parts));
}

/// Primitive of phi^{-1}(s)/s^{1+1/N} on [a, b] by adaptive quadrature in log variable.
inline double sobolev_integral(const YoungFunction& phi, double N, double a, double b) {
  auto f = [&](double x) {
    const double s = std::exp(x);
    return phi.inverse(s) / std::pow(s, 1.0 + 1.0 / N) * s;
  };
  return integrate(f, std::log(a), std::log(b), 1e-10);
}

// ---------------------------------------------------------------------------
// Ordering and growth classes

enum class Ordering { MuchLess, Less, Neither };

inline std::string_view to_string(Ordering o) {
  switch (o) {
    case Ordering::MuchLess: return "MuchLess";
    case Ordering::Less: return "Less";
    case Ordering::Neither: return "Neither";
  }
  return "Neither";
}

namespace detail {

/// Top four decades usable by both functions, with slack for a dilation by 10.
inline std::vector<double> shared_tail(const YoungFunction& a, const YoungFunction& b,
                                       double dilation, std::size_t n = 81) {
  double hi = std::min(a.domain().hi, b.domain().hi / dilation);
  const double lo_limit = std::max(a.domain().lo, b.domain().lo) * dilation;
  while (hi / 1e4 >= lo_limit) {
    try {
      const double va = a.value(hi);
      const double vb = b.value(std::min(hi * dilation, b.domain().hi));
      if (std::isfinite(va) && std::isfinite(vb) && va < 1e290 && vb < 1e290) break;
    } catch (const Error&) {
    }
    hi /= 100.0;
  }
  if (hi / 1e4 < lo_limit) {
    throw Error(ErrorCode::EvaluationDomain, "no shared tail of four decades");
  }
  return log_grid(hi / 1e4, hi, n);
}

}  // namespace detail

inline bool much_less(const YoungFunction& psi1, const YoungFunction& psi2) {
  if (psi1.has_indices() && psi2.has_indices() && psi1.indices().upper < psi2.indices().lower) {
    return true;
  }
  for (double eta : {0.1, 1.0, 10.0}) {
    const auto tail = detail::shared_tail(psi1, psi2, 10.0);
    double prev = std::numeric_limits<double>::infinity();
    double first = 0.0;
    for (std::size_t i = 0; i < tail.size(); ++i) {
      const double t = tail[i];
      const double r = psi1.value(t) / psi2.value(eta * t);
      if (i == 0) first = r;
      if (r > prev * (1.0 + 1e-12)) return false;
      prev = r;
    }
    if (!(prev <= 0.5 * first)) return false;
  }
  return true;
}

/// Smallest tested dilation c = 2^j with psi1(t) <= psi2(ct) on the tail, if any.
inline std::optional<double> less_constant(const YoungFunction& psi1, const YoungFunction& psi2) {
  if (psi1.has_indices() && psi2.has_indices() && psi1.indices().lower > psi2.indices().upper) {
    return std::nullopt;
  }
  for (int j = 0; j <= 20; ++j) {
    const double c = std::ldexp(1.0, j);
    std::vector<double> tail;
    try {
      tail = detail::shared_tail(psi1, psi2, c);
    } catch (const Error&) {
      return std::nullopt;
    }
    bool ok = true;
    double first = 0.0, last = 0.0;
    for (std::size_t i = 0; i < tail.size() && ok; ++i) {
      const double t = tail[i];
      const double v1 = psi1.value(t);
      const double v2 = psi2.value(c * t);
      if (v1 > v2 * (1.0 + 1e-12)) ok = false;
      const double r = v1 / v2;
      if (i == 0) first = r;
      last = r;
    }
    // Reject an upward trend that would eventually violate the bound.
    if (ok && last <= first * (1.0 + 1e-9) + 1e-12) return c;
    if (ok && last < 0.5) return c;
  }
  return std::nullopt;
}

inline Ordering ordering(const YoungFunction& psi1, const YoungFunction& psi2) {
  if (psi1.has_indices() && psi2.has_indices()) {
    if (psi1.indices().upper < psi2.indices().lower) return Ordering::MuchLess;
    if (psi1.indices().at_infinity_lower > psi2.indices().at_infinity_upper) return Ordering::Neither;
  }
  if (much_less(psi1, psi2)) return Ordering::MuchLess;
  if (less_constant(psi1, psi2)) return Ordering::Less;
  return Ordering::Neither;
}

struct GrowthClasses {
  bool delta2 = false;
  bool nabla2 = false;
};

inline GrowthClasses delta2_nabla2(const YoungFunction& psi) {
  double hi = psi.domain().hi;
  while (hi / 1e3 > psi.domain().lo) {
    try {
      if (std::isfinite(psi.index_ratio(hi))) break;
    } catch (const Error&) {
    }
    hi /= 10.0;
  }
  auto window_max = [&](double a, double b) {
    double m = -std::numeric_limits<double>::infinity();
    double mn = std::numeric_limits<double>::infinity();
    for (double t : log_grid(a, b, 50)) {
      const double r = psi.index_ratio(t);
      m = std::max(m, r);
      mn = std::min(mn, r);
    }
    return std::make_pair(mn, m);
  };
  const auto top = window_max(hi / 10.0, hi);
  const auto below = window_max(hi / 1e3, hi / 1e2);
  GrowthClasses out;
  out.delta2 = top.second < 2.0 * below.second;
  const double lower = std::min(top.first, below.first);
  out.nabla2 = lower > 1.0;
  return out;
}

// ---------------------------------------------------------------------------
// Validation of the defining properties on samples

struct YoungCheck {
  bool ok = true;
  std::string message;
};

inline YoungCheck validate_young(const YoungFunction& psi) {
  YoungCheck out;
  const auto grid = log_grid(std::max(psi.domain().lo, 1e-6),
                             std::min(psi.domain().hi, 1e6), 200);
  std::ostringstream os;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    if (!(psi.derivative(t) > 0.0)) {
      os << "non-positive derivative at t=" << t << "; ";
      out.ok = false;
      break;
    }
    if (i + 1 < grid.size()) {
      const double s = grid[i + 1];
      if (psi.value(0.5 * (s + t)) > 0.5 * (psi.value(s) + psi.value(t)) * (1.0 + 1e-12)) {
        os << "convexity fails between " << t << " and " << s << "; ";
        out.ok = false;
        break;
      }
    }
  }
  const double r_small = psi.value(grid.front()) / grid.front();
  const double r_small2 = psi.value(grid.front() * 10.0) / (grid.front() * 10.0);
  const double r_big = psi.value(grid.back()) / grid.back();
  const double r_big2 = psi.value(grid.back() / 10.0) / (grid.back() / 10.0);
  if (!(r_small < r_small2)) {
    os << "psi(t)/t does not decrease toward 0; ";
    out.ok = false;
  }
  if (!(r_big > r_big2)) {
    os << "psi(t)/t does not increase at infinity; ";
    out.ok = false;
  }
  out.message = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// Concrete generators

/// t^p / p.
inline YoungFunction power_young(double p, Domain d = {}) {
  if (!(p > 1.0)) throw Error(ErrorCode::Construction, "power Young function needs p > 1");
  YoungFunction::Parts parts;
  std::ostringstream nm;
  nm << "t^" << p << "/" << p;
  parts.name = nm.str();
  parts.value = [p](double t) { return std::pow(t, p) / p; };
  parts.derivative = [p](double t) { return std::pow(t, p - 1.0); };
  parts.second_derivative = [p](double t) { return (p - 1.0) * std::pow(t, p - 2.0); };
  parts.inverse = [p](double y) { return std::pow(p * y, 1.0 / p); };
  parts.ratio = [p](double) { return p; };
  parts.domain = d;
  return YoungFunction(std::move(parts)).with_indices(IndexPair{p, p, p, p});
}

/// c t^p.
inline YoungFunction monomial(double p, double c = 1.0, Domain d = {}) {
  if (!(p > 1.0) || !(c > 0.0)) throw Error(ErrorCode::Construction, "monomial needs p > 1, c > 0");
  YoungFunction::Parts parts;
  std::ostringstream nm;
  if (c != 1.0) nm << c << "*";
  nm << "t^" << p;
  parts.name = nm.str();
  parts.value = [p, c](double t) { return c * std::pow(t, p); };
  parts.derivative = [p, c](double t) { return c * p * std::pow(t, p - 1.0); };
  parts.second_derivative = [p, c](double t) { return c * p * (p - 1.0) * std::pow(t, p - 2.0); };
  parts.inverse = [p, c](double y) { return std::pow(y / c, 1.0 / p); };
  parts.ratio = [p](double) { return p; };
  parts.domain = d;
  return YoungFunction(std::move(parts)).with_indices(IndexPair{p, p, p, p});
}

/// e^t - t - 1.
inline YoungFunction exp_type() {
  YoungFunction::Parts parts;
  parts.name = "exp(t)-t-1";
  parts.value = [](double t) {
    if (t < 1e-3) return t * t * (0.5 + t * (1.0 / 6.0 + t * (1.0 / 24.0 + t / 120.0)));
    return std::expm1(t) - t;
  };
  parts.derivative = [](double t) { return std::expm1(t); };
  parts.second_derivative = [](double t) { return std::exp(t); };
  parts.domain = Domain{1e-8, 700.0};
  return YoungFunction(std::move(parts));
}

/// sqrt(psi1 * psi2).
inline YoungFunction geometric_mean(const YoungFunction& a, const YoungFunction& b) {
  YoungFunction::Parts parts;
  parts.name = "sqrt(" + a.name() + "*" + b.name() + ")";
  parts.value = [a, b](double t) { return std::sqrt(a.value(t) * b.value(t)); };
  parts.derivative = [a, b](double t) {
    const double va = a.value(t), vb = b.value(t);
    return 0.5 * (a.derivative(t) * vb + va * b.derivative(t)) / std::sqrt(va * vb);
  };
  parts.ratio = [a, b](double t) { return 0.5 * (a.index_ratio(t) + b.index_ratio(t)); };
  parts.domain = Domain{std::max(a.domain().lo, b.domain().lo), std::min(a.domain().hi, b.domain().hi)};
  return YoungFunction(std::move(parts));
}

// ---------------------------------------------------------------------------
// Oscillating-index construction

struct PathologicalParams {
  double p = 3.0;
  double q = 2.0;
  double eps = 1.9;
  double alpha = 2.5;
  double beta = 0.5;

  static PathologicalParams make(double p, double q, double eps) {
    PathologicalParams out{p, q, eps, 0.5 * (p + q), 0.5 * (p - q)};
    out.validate();
    return out;
  }

  double eps_bound() const { return std::min(4.0, (q - 1.0) / beta); }

  void validate() const {
    std::ostringstream os;
    if (!(q > 1.0) || !(p > q)) {
      os << "need 1 < q < p, got p=" << p << " q=" << q;
      throw Error(ErrorCode::Construction, os.str());
    }
    if (alpha != 0.5 * (p + q) || beta != 0.5 * (p - q)) {
      throw Error(ErrorCode::Construction, "alpha/beta inconsistent with p, q");
    }
    if (!(eps > 0.0) || !(eps < eps_bound())) {
      os << "eps=" << eps << " outside (0, " << eps_bound() << ")";
      throw Error(ErrorCode::Construction, os.str());
    }
  }
};

struct EtaValues {
  double eta;
  double d1;
  double d2;
};

/// Quadratic branch used on (0, e].
inline EtaValues eta_inner(const PathologicalParams& P, double t) {
  const double e = std::numbers::e;
  const double be = P.beta * P.eps;
  return {be / (2.0 * e * e) * (e - t) * (e - t) - be / (1.0 + P.eps * P.eps),
          be / (e * e) * (t - e), be / (e * e)};
}

/// Oscillating branch used on [e, inf).
inline EtaValues eta_outer(const PathologicalParams& P, double t) {
  const double L = std::log(t);
  const double z = P.eps * std::log(L);
  const double sz = std::sin(z), cz = std::cos(z);
  return {P.beta * L / (1.0 + P.eps * P.eps) * (sz - P.eps * cz), P.beta * sz / t,
          P.beta / (t * t) * (P.eps / L * cz - sz)};
}

inline EtaValues eta_values(const PathologicalParams& P, double t) {
  return t <= std::numbers::e ? eta_inner(P, t) : eta_outer(P, t);
}

/// zeta(t) = eps log(log t), t > 1.
inline double pathological_zeta(const PathologicalParams& P, double t) {
  return P.eps * std::log(std::log(t));
}

inline YoungFunction build_pathological(const PathologicalParams& P) {
  P.validate();
  YoungFunction::Parts parts;
  std::ostringstream nm;
  nm << "osc(p=" << P.p << " q=" << P.q << " eps=" << P.eps << ")";
  parts.name = nm.str();
  parts.value = [P](double t) {
    const EtaValues e = eta_values(P, t);
    return std::exp(P.alpha * std::log(t) + e.eta);
  };
  parts.derivative = [P](double t) {
    const EtaValues e = eta_values(P, t);
    return std::exp((P.alpha - 1.0) * std::log(t) + e.eta) * (P.alpha + t * e.d1);
  };
  parts.second_derivative = [P](double t) {
    const EtaValues e = eta_values(P, t);
    const double g = P.alpha + t * e.d1;
    const double d1 = std::exp((P.alpha - 1.0) * std::log(t) + e.eta) * g;
    return d1 / t * (P.alpha - 1.0 + t * e.d1 + (t * t * e.d2 + t * e.d1) / g);
  };
  parts.ratio = [P](double t) { return P.alpha + t * eta_values(P, t).d1; };
  return YoungFunction(std::move(parts));
}

// ---------------------------------------------------------------------------
// Integrated logarithmic generator: psi(t) = int_0^t s^{p-1} log(1+s) ds

namespace detail {

class LogPrimitive {
 public:
  explicit LogPrimitive(double p) : p_(p) {
    const double step = std::pow(10.0, 0.125);
    nodes_.push_back(kSeriesLimit);
    cum_.push_back(series(kSeriesLimit));
    while (nodes_.back() < 1e31) {
      const double a = nodes_.back();
      const double b = a * step;
      cum_.push_back(cum_.back() + local(a, b));
      nodes_.push_back(b);
    }
  }

  double integrand(double s) const { return std::pow(s, p_ - 1.0) * std::log1p(s); }

  double operator()(double t) const {
    if (t <= kSeriesLimit) return series(t);
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - nodes_.begin()) - 1;
    return cum_[j] + local(nodes_[j], t);
  }

 private:
  static constexpr double kSeriesLimit = 0.5;

  double series(double t) const {
    double sum = 0.0;
    double tk = std::pow(t, p_);
    for (int k = 1; k <= 80; ++k) {
      tk *= t;
      const double term = tk / (static_cast<double>(k) * (p_ + k));
      sum += (k % 2 == 1) ? term : -term;
      if (term < 1e-18 * sum) break;
    }
    return sum;
  }

  double local(double a, double b) const {
    if (b <= a) return 0.0;
    auto f = [this](double x) {
      const double s = std::exp(x);
      return integrand(s) * s;
    };
    return gauss15(f, std::log(a), std::log(b));
  }

  double p_;
  std::vector<double> nodes_, cum_;
};

}  // namespace detail

inline YoungFunction log_primitive_young(double p) {
  if (!(p > 1.0)) throw Error(ErrorCode::Construction, "log primitive needs p > 1");
  auto prim = std::make_shared<detail::LogPrimitive>(p);
  YoungFunction::Parts parts;
  std::ostringstream nm;
  nm << "int s^" << (p - 1.0) << " log(1+s)";
  parts.name = nm.str();
  parts.value = [prim](double t) { return (*prim)(t); };
  parts.derivative = [p](double t) { return std::pow(t, p - 1.0) * std::log1p(t); };
  parts.second_derivative = [p](double t) {
    return (p - 1.0) * std::pow(t, p - 2.0) * std::log1p(t) + std::pow(t, p - 1.0) / (1.0 + t);
  };
  return YoungFunction(std::move(parts));
}

}  // namespace philap
