#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "philap/error.hpp"
#include "philap/hypotheses.hpp"
#include "philap/orlicz.hpp"
#include "philap/threshold.hpp"
#include "philap/young.hpp"

namespace philap {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;

// ---------------------------------------------------------------------------
// Tridiagonal helpers

inline SpMat tridiagonal(const Vec& diag, const Vec& off) {
  const int n = static_cast<int>(diag.size());
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<std::size_t>(3 * n));
  for (int i = 0; i < n; ++i) {
    trips.emplace_back(i, i, diag[i]);
    if (i + 1 < n) {
      trips.emplace_back(i, i + 1, off[i]);
      trips.emplace_back(i + 1, i, off[i]);
    }
  }
  SpMat m(n, n);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

inline Vec solve_spd(const SpMat& a, const Vec& b) {
  Eigen::SimplicialLDLT<SpMat> ldlt(a);
  if (ldlt.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "LDLT factorisation failed");
  return ldlt.solve(b);
}

inline Vec solve_general(const SpMat& a, const Vec& b) {
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::NonConvergence, "LU factorisation failed");
  return lu.solve(b);
}

// ---------------------------------------------------------------------------
// Discrete Phi-Laplacian

/// Energy sum Phi(|grad u|) h with its weak form and tridiagonal linearisation.
class DiscreteOperator {
 public:
  DiscreteOperator(YoungFunction phi, Grid grid) : phi_(std::move(phi)), grid_(grid) {}

  const Grid& grid() const { return grid_; }
  const YoungFunction& phi() const { return phi_; }

  Vec cell_gradients(const Vec& u) const { return gradient(GridFunction(grid_, u)); }

  double energy(const Vec& u) const {
    const Vec g = cell_gradients(u);
    double s = 0.0;
    for (int c = 0; c < g.size(); ++c) s += phi_.value(std::abs(g[c]));
    return s * grid_.h();
  }

  /// Weak form against the nodal hat functions.
  Vec force(const Vec& u) const {
    const Vec g = cell_gradients(u);
    Vec flux(g.size());
    for (int c = 0; c < g.size(); ++c) flux[c] = signed_flux(g[c]);
    const int n = grid_.n_interior;
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = flux[i] - flux[i + 1];
    return out;
  }

  /// sum phi(|g|)|g| h.
  double flux_pairing(const Vec& u) const {
    const Vec g = cell_gradients(u);
    double s = 0.0;
    for (int c = 0; c < g.size(); ++c) s += phi_.derivative(std::abs(g[c])) * std::abs(g[c]);
    return s * grid_.h();
  }

  /// Tridiagonal Jacobian of force(); `floor` keeps it definite where phi'' vanishes.
  void jacobian(const Vec& u, Vec& diag, Vec& off, double floor_rel = 1e-10) const {
    const Vec g = cell_gradients(u);
    const int n = grid_.n_interior;
    const double h = grid_.h();
    Vec w(g.size());
    double wmax = 0.0;
    for (int c = 0; c < g.size(); ++c) {
      w[c] = phi_.second_derivative(std::max(std::abs(g[c]), 1e-300));
      if (!std::isfinite(w[c])) w[c] = 0.0;
      wmax = std::max(wmax, w[c]);
    }
    const double floor = floor_rel * std::max(wmax, phi_.second_derivative(1.0));
    for (int c = 0; c < g.size(); ++c) w[c] = std::max(w[c], floor) / h;
    diag.resize(n);
    off.resize(std::max(n - 1, 0));
    for (int i = 0; i < n; ++i) diag[i] = w[i] + w[i + 1];
    for (int i = 0; i + 1 < n; ++i) off[i] = -w[i + 1];
  }

  SpMat jacobian_matrix(const Vec& u, double floor_rel = 1e-10) const {
    Vec d, o;
    jacobian(u, d, o, floor_rel);
    return tridiagonal(d, o);
  }

 private:
  double signed_flux(double g) const {
    const double v = phi_.derivative(std::abs(g));
    return g < 0.0 ? -v : v;
  }

  YoungFunction phi_;
  Grid grid_;
};

// ---------------------------------------------------------------------------
// Generic smooth problem for descent and critical-point searches

struct SmoothProblem {
  std::function<double(const Vec&)> energy;
  std::function<Vec(const Vec&)> gradient;
  /// Exact Hessian (may be indefinite).
  std::function<SpMat(const Vec&)> hessian;
  /// Symmetric positive definite preconditioner.
  std::function<SpMat(const Vec&)> preconditioner;
};

struct DescentLogEntry {
  int iteration;
  double energy;
  double residual;
};

struct DescentResult {
  Vec x;
  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  bool pinned = false;
  std::vector<DescentLogEntry> log;
};

inline double inf_norm(const Vec& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

/// Preconditioned descent with Armijo backtracking (halving, slope 1e-4) and an optional projection.
inline DescentResult minimize_descent(const SmoothProblem& prob, Vec x, double tol, int max_iter,
                                      const std::function<Vec(const Vec&)>& project = nullptr) {
  DescentResult out;
  double e = prob.energy(x);
  Vec g = prob.gradient(x);
  for (int it = 0; it < max_iter; ++it) {
    const double res = inf_norm(g);
    out.log.push_back({it, e, res});
    if (res <= tol) {
      out.converged = true;
      out.iterations = it;
      break;
    }
    const Vec d = -solve_spd(prob.preconditioner(x), g);
    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      Vec cand = x + t * d;
      if (project) cand = project(cand);
      double ec;
      try {
        ec = prob.energy(cand);
      } catch (const Error&) {
        continue;
      }
      const double decrease = project ? g.dot(cand - x) : t * slope;
      const bool armijo = ec <= e + 1e-4 * decrease;
      // In the round-off regime the energy cannot resolve the decrease; fall back to the gradient.
      const bool roundoff = std::abs(decrease) < 1e-13 * (std::abs(e) + 1e-300) * 10.0;
      if (armijo || (roundoff && ec <= e + 1e-12 * std::abs(e))) {
        const Vec gc = prob.gradient(cand);
        if (armijo || inf_norm(gc) < res) {
          x = std::move(cand);
          e = ec;
          g = gc;
          accepted = true;
          break;
        }
      }
    }
    out.iterations = it + 1;
    if (!accepted) break;
  }
  out.x = x;
  out.energy = e;
  out.residual = inf_norm(g);
  if (out.residual <= tol) out.converged = true;
  return out;
}

/// Newton iteration on grad = 0 with backtracking on |grad|^2.
inline DescentResult newton_refine(const SmoothProblem& prob, Vec x, double tol, int max_iter) {
  DescentResult out;
  Vec g = prob.gradient(x);
  double merit = g.squaredNorm();
  for (int it = 0; it < max_iter; ++it) {
    out.log.push_back({it, prob.energy(x), inf_norm(g)});
    if (inf_norm(g) <= tol) {
      out.converged = true;
      break;
    }
    Vec d;
    try {
      d = -solve_general(prob.hessian(x), g);
    } catch (const Error&) {
      break;
    }
    if (!d.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    for (int k = 0; k < 40; ++k, t *= 0.5) {
      const Vec cand = x + t * d;
      Vec gc;
      try {
        gc = prob.gradient(cand);
      } catch (const Error&) {
        continue;
      }
      if (!gc.allFinite()) continue;
      const double mc = gc.squaredNorm();
      if (mc <= (1.0 - 1e-4 * t) * merit) {
        x = cand;
        g = gc;
        merit = mc;
        accepted = true;
        break;
      }
    }
    out.iterations = it + 1;
    if (!accepted) break;
  }
  out.x = x;
  out.energy = prob.energy(x);
  out.residual = inf_norm(g);
  out.converged = out.residual <= tol;
  return out;
}

// ---------------------------------------------------------------------------
// Torsion problem

inline SmoothProblem torsion_problem(const DiscreteOperator& op, double c) {
  const double h = op.grid().h();
  SmoothProblem p;
  p.energy = [&op, c, h](const Vec& u) { return op.energy(u) - c * u.sum() * h; };
  p.gradient = [&op, c, h](const Vec& u) { return Vec(op.force(u).array() - c * h); };
  p.hessian = [&op](const Vec& u) { return op.jacobian_matrix(u); };
  p.preconditioner = p.hessian;
  return p;
}

/// Nodal samples of the continuous torsion profile, integrating phi^{-1}(c(L/2 - x)).
inline Vec torsion_initial_guess(const YoungFunction& phi, double c, const Grid& grid) {
  const double L = grid.length;
  auto slope = [&](double x) {
    const double target = c * std::abs(L / 2.0 - x);
    if (target == 0.0) return 0.0;
    const double s = solve_increasing([&](double t) { return phi.derivative(t); }, target, 1e-300,
                                      phi.domain().hi, 1.0, 1e-8);
    return x < L / 2.0 ? s : -s;
  };
  const int n = grid.n_interior;
  const double h = grid.h();
  Vec u(n);
  double acc = 0.0;
  double prev = slope(0.0);
  for (int i = 0; i < n; ++i) {
    const double cur = slope(grid.x(i));
    acc += 0.5 * (prev + cur) * h;
    prev = cur;
    u[i] = acc;
  }
  // Symmetrise against drift of the trapezoid rule.
  for (int i = 0; i < n / 2; ++i) {
    const double m = 0.5 * (u[i] + u[n - 1 - i]);
    u[i] = u[n - 1 - i] = m;
  }
  return u;
}

/// Minimiser of sum Phi(|grad u|) h - c sum u h.
inline GridFunction solve_torsion(const YoungFunction& phi, double c, const Grid& grid,
                                  double tol = 1e-8, int max_iter = 500) {
  if (!(c > 0.0)) throw Error(ErrorCode::Construction, "torsion right-hand side must be positive");
  DiscreteOperator op(phi, grid);
  SmoothProblem prob = torsion_problem(op, c);
  Vec u0 = torsion_initial_guess(phi, c, grid);
  const double target = tol * c * grid.h();
  DescentResult r = minimize_descent(prob, u0, target, max_iter);
  if (!r.converged) {
    r = newton_refine(prob, r.x, target, 100);
  }
  if (!r.converged) {
    std::ostringstream os;
    os << "torsion solve stalled at residual " << r.residual << " (target " << target << ") after "
       << r.iterations << " iterations";
    throw Error(ErrorCode::NonConvergence, os.str());
  }
  return GridFunction(grid, r.x);
}

// ---------------------------------------------------------------------------
// Sub-solution

struct SubSolution {
  GridFunction u_under;
  double n_hat = 1.0;
  double delta = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
};

/// Torsion with rhs 1/n for n = 1, 2, 4, ... until max < delta and 1/n <= lambda.
inline SubSolution build_subsolution(const YoungFunction& phi, const Grid& grid, double delta,
                                     double lambda, double R, double tol = 1e-8) {
  if (!(delta > 0.0)) throw Error(ErrorCode::HypothesisFailure, "no delta available for the sub-solution");
  SubSolution out;
  out.delta = delta >= R ? 0.5 * R : delta;
  for (double n = 1.0;; n *= 2.0) {
    if (n > 1e9) throw Error(ErrorCode::DegenerateReaction, "sub-solution index exceeded 1e9");
    GridFunction u = solve_torsion(phi, 1.0 / n, grid, tol);
    if (u.max_abs() < out.delta && 1.0 / n <= lambda) {
      out.u_under = u;
      out.n_hat = n;
      break;
    }
  }
  out.k1 = std::numeric_limits<double>::infinity();
  out.k2 = 0.0;
  for (int i = 0; i < grid.n_interior; ++i) {
    const double r = out.u_under.values[i] / grid.distance(i);
    out.k1 = std::min(out.k1, r);
    out.k2 = std::max(out.k2, r);
  }
  return out;
}

inline SubSolution build_subsolution(const ProblemSpec& s, double lambda, double tol = 1e-8) {
  const Hf1Result hf1 = check_hf1(s);
  if (!hf1.pass) throw Error(ErrorCode::HypothesisFailure, hf1.message);
  return build_subsolution(s.phi, s.grid, hf1.delta, lambda, s.R, tol);
}

// ---------------------------------------------------------------------------
// Truncated reaction

class TruncatedReaction {
 public:
  TruncatedReaction(Reaction f, const GridFunction& u_under) : f_(std::move(f)), grid_(u_under.grid) {
    const int n = grid_.n_interior;
    under_.resize(static_cast<std::size_t>(n));
    f_under_.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      under_[static_cast<std::size_t>(i)] = u_under.values[i];
      if (!(u_under.values[i] > 0.0)) {
        throw Error(ErrorCode::Construction, "sub-solution must be positive at interior nodes");
      }
      f_under_[static_cast<std::size_t>(i)] = f_.value(grid_.x(i), u_under.values[i]);
    }
  }

  const Reaction& reaction() const { return f_; }
  const Grid& grid() const { return grid_; }
  double under(int i) const { return under_[static_cast<std::size_t>(i)]; }

  double f_hat(int i, double s) const {
    const double a = std::abs(s);
    if (a <= under(i)) return f_under_[static_cast<std::size_t>(i)];
    return f_.value(grid_.x(i), a);
  }

  double f_hat_ds(int i, double s) const {
    const double a = std::abs(s);
    if (a <= under(i)) return 0.0;
    const double d = f_.ds(grid_.x(i), a);
    return s < 0.0 ? -d : d;
  }

  /// int_0^s f_hat(x_i, t) dt.
  double F_hat(int i, double s) const {
    const double a = std::abs(s);
    const double ub = under(i);
    const double fu = f_under_[static_cast<std::size_t>(i)];
    const double v = a <= ub ? fu * a : fu * ub + f_.integral(grid_.x(i), ub, a);
    return s < 0.0 ? -v : v;
  }

  /// c1 ubar^{-1}(ups(|s|)) + alpha d^{-gamma} + beta.
  double majorant(int i, double s, const TruncationConstants& c, const YoungFunction& ups,
                  const YoungFunction& ups_bar, double c1, double gamma) const {
    return c1 * ups_bar.inverse(ups.value(std::abs(s))) + c.alpha * std::pow(grid_.distance(i), -gamma) + c.beta;
  }

 private:
  Reaction f_;
  Grid grid_;
  std::vector<double> under_;
  std::vector<double> f_under_;
};

// ---------------------------------------------------------------------------
// Energy

struct EnergyState {
  GridFunction u;
  double H_value = 0.0;
  double K_value = 0.0;
  double J_value = 0.0;
  Vec gradient;
  double residual = 0.0;
};

class Energy {
 public:
  Energy(YoungFunction phi, const TruncatedReaction& fhat, double lambda)
      : op_(std::move(phi), fhat.grid()), fhat_(&fhat), lambda_(lambda) {}

  const DiscreteOperator& op() const { return op_; }
  const Grid& grid() const { return op_.grid(); }
  double lambda() const { return lambda_; }
  const TruncatedReaction& fhat() const { return *fhat_; }

  double H(const Vec& u) const { return op_.energy(u); }

  double K(const Vec& u) const {
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += fhat_->F_hat(i, u[i]);
    return s * grid().h();
  }

  double J(const Vec& u) const { return H(u) - lambda_ * K(u); }

  Vec gradient(const Vec& u) const {
    Vec g = op_.force(u);
    const double h = grid().h();
    for (int i = 0; i < u.size(); ++i) g[i] -= lambda_ * fhat_->f_hat(i, u[i]) * h;
    return g;
  }

  SpMat hessian(const Vec& u) const {
    Vec d, o;
    op_.jacobian(u, d, o, 1e-14);
    const double h = grid().h();
    for (int i = 0; i < u.size(); ++i) d[i] -= lambda_ * fhat_->f_hat_ds(i, u[i]) * h;
    return tridiagonal(d, o);
  }

  SpMat preconditioner(const Vec& u) const { return op_.jacobian_matrix(u, 1e-10); }

  SmoothProblem problem() const {
    SmoothProblem p;
    p.energy = [this](const Vec& u) { return J(u); };
    p.gradient = [this](const Vec& u) { return gradient(u); };
    p.hessian = [this](const Vec& u) { return hessian(u); };
    p.preconditioner = [this](const Vec& u) { return preconditioner(u); };
    return p;
  }

  EnergyState state(const Vec& u) const {
    EnergyState s;
    s.u = GridFunction(grid(), u);
    s.H_value = H(u);
    s.K_value = K(u);
    s.J_value = s.H_value - lambda_ * s.K_value;
    s.gradient = gradient(u);
    s.residual = inf_norm(s.gradient);
    return s;
  }

 private:
  DiscreteOperator op_;
  const TruncatedReaction* fhat_;
  double lambda_;
};

inline EnergyState energy_and_gradient(const Energy& e, const GridFunction& u) { return e.state(u.values); }

// ---------------------------------------------------------------------------
// First solution

struct FirstSolution {
  EnergyState state;
  bool pinned = false;
  bool converged = false;
  std::vector<DescentLogEntry> log;
};

/// Radial scaling of u onto {H <= r} by bisection.
inline Vec project_to_ball(const DiscreteOperator& op, const Vec& u, double r) {
  if (op.energy(u) <= r) return u;
  double lo = 0.0, hi = 1.0;
  for (int k = 0; k < 200 && hi - lo > 1e-15; ++k) {
    const double mid = 0.5 * (lo + hi);
    (op.energy(mid * u) <= r ? lo : hi) = mid;
  }
  return lo * u;
}

inline FirstSolution first_solution(const Energy& e, const GridFunction& start, double r_star,
                                    double tol = 1e-10, int max_iter = 5000) {
  FirstSolution out;
  const SmoothProblem prob = e.problem();
  const DiscreteOperator& op = e.op();
  auto project = [&op, r_star](const Vec& u) { return project_to_ball(op, u, r_star); };
  Vec x0 = project(start.values);
  DescentResult d = minimize_descent(prob, x0, tol, max_iter, project);
  out.log = d.log;
  Vec x = d.x;
  out.pinned = op.energy(x) >= r_star * (1.0 - 1e-9);
  if (!out.pinned && d.residual > tol) {
    DescentResult nr = newton_refine(prob, x, tol, 100);
    const int base = static_cast<int>(out.log.size());
    for (auto entry : nr.log) {
      entry.iteration += base;
      out.log.push_back(entry);
    }
    if (op.energy(nr.x) < r_star && nr.residual < d.residual) x = nr.x;
  }
  out.state = e.state(x);
  out.converged = out.state.residual <= std::max(tol, 1e-12);
  out.pinned = op.energy(x) >= r_star * (1.0 - 1e-9);
  return out;
}

// ---------------------------------------------------------------------------
// Unbounded direction

/// Trapezoid bump: linear on the outer quarters, plateau 1 in the middle.
inline GridFunction plateau_bump(const Grid& g) {
  const double L = g.length;
  return GridFunction::sample(g, [L](double x) { return std::min({1.0, 4.0 * x / L, 4.0 * (L - x) / L}); });
}

struct UphillResult {
  GridFunction u1;
  double M = 1.0;
  int doublings = 0;
  double J_value = 0.0;
};

inline UphillResult uphill_endpoint(const Energy& e, const EnergyState& u_ref, double mu, double s_phi,
                                    int max_doublings = 60) {
  if (!(mu > s_phi)) {
    std::ostringstream os;
    os << "AR exponent mu=" << mu << " does not exceed s_phi=" << s_phi;
    throw Error(ErrorCode::ArViolation, os.str());
  }
  const GridFunction u0 = plateau_bump(e.grid());
  UphillResult out;
  for (int k = 0; k <= max_doublings; ++k) {
    const double M = std::ldexp(1.0, k);
    double J;
    try {
      J = e.J(M * u0.values);
    } catch (const Error&) {
      break;
    }
    if (J < u_ref.J_value - 1.0) {
      out.u1 = GridFunction(e.grid(), M * u0.values);
      out.M = M;
      out.doublings = k;
      out.J_value = J;
      return out;
    }
  }
  throw Error(ErrorCode::ArViolation, "energy does not decrease along the bump direction before overflow");
}

// ---------------------------------------------------------------------------
// Mountain pass

struct MountainPassOptions {
  int n_path = 41;
  int retension_every = 10;
  long budget = 100000;
  double tol = 1e-8;
  /// Accepted when Newton stalls at the round-off floor.
  double accept_tol = 1e-6;
  double step = 0.5;
};

struct MountainPassResult {
  Vec x;
  double energy = 0.0;
  double residual = 0.0;
  double path_max = 0.0;
  bool converged = false;
  bool collapsed = false;
  long steps = 0;
  std::vector<DescentLogEntry> log;
};

namespace detail {

inline void retension(std::vector<Vec>& path, const std::function<double(const Vec&, const Vec&)>& dist) {
  const std::size_t m = path.size();
  if (m < 3) return;
  std::vector<double> s(m, 0.0);
  for (std::size_t k = 1; k < m; ++k) s[k] = s[k - 1] + dist(path[k], path[k - 1]);
  const double total = s.back();
  if (!(total > 0.0)) return;
  std::vector<Vec> out(m);
  out.front() = path.front();
  out.back() = path.back();
  std::size_t seg = 0;
  for (std::size_t k = 1; k + 1 < m; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(m - 1);
    while (seg + 1 < m - 1 && s[seg + 1] < target) ++seg;
    const double len = s[seg + 1] - s[seg];
    const double w = len > 0.0 ? (target - s[seg]) / len : 0.0;
    out[k] = (1.0 - w) * path[seg] + w * path[seg + 1];
  }
  path = std::move(out);
}

}  // namespace detail

/// String deformation with a climbing image at the energy maximum, finished by Newton on grad = 0.
inline MountainPassResult mountain_pass(const SmoothProblem& prob, const Vec& u0, const Vec& u1,
                                        const MountainPassOptions& opt,
                                        std::function<double(const Vec&, const Vec&)> dist = nullptr) {
  if (!dist) dist = [](const Vec& a, const Vec& b) { return (a - b).norm(); };
  const int m = std::max(opt.n_path, 3);
  std::vector<Vec> path(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const double s = static_cast<double>(k) / (m - 1);
    path[static_cast<std::size_t>(k)] = (1.0 - s) * u0 + s * u1;
  }
  const double e0 = prob.energy(u0);
  const double e1 = prob.energy(u1);
  const double e_end = std::max(e0, e1);
  const double scale = std::max({std::abs(e0), std::abs(e1), 1.0});

  MountainPassResult out;
  std::vector<double> E(static_cast<std::size_t>(m));
  double switch_tol = 1e-2;
  int newton_failures = 0;
  long iter = 0;
  while (out.steps < opt.budget) {
    for (int k = 0; k < m; ++k) E[static_cast<std::size_t>(k)] = prob.energy(path[static_cast<std::size_t>(k)]);
    int kmax = 1;
    for (int k = 1; k < m - 1; ++k) {
      if (E[static_cast<std::size_t>(k)] > E[static_cast<std::size_t>(kmax)]) kmax = k;
    }
    out.path_max = E[static_cast<std::size_t>(kmax)];
    const Vec& peak = path[static_cast<std::size_t>(kmax)];
    const Vec gpeak = prob.gradient(peak);
    const double gscale = std::max(1.0, inf_norm(prob.gradient(u1)));
    const double res = inf_norm(gpeak);
    out.log.push_back({static_cast<int>(iter), out.path_max, res});

    if (out.path_max <= e_end + 1e-10 * scale && iter > 2 * opt.retension_every) {
      out.collapsed = true;
      out.x = peak;
      out.energy = out.path_max;
      out.residual = res;
      return out;
    }

    if (res <= switch_tol * gscale) {
      DescentResult nr = newton_refine(prob, peak, opt.tol, 60);
      if (nr.residual <= std::max(opt.tol, opt.accept_tol) && nr.energy > e0 + 1e-12 * scale) {
        out.x = nr.x;
        out.energy = nr.energy;
        out.residual = nr.residual;
        out.converged = true;
        for (auto entry : nr.log) {
          entry.iteration += static_cast<int>(iter) + 1;
          out.log.push_back(entry);
        }
        if (out.path_max - e0 < opt.tol) out.collapsed = true;
        return out;
      }
      ++newton_failures;
      switch_tol *= 0.1;
    }

    // Climbing image.
    {
      Vec& x = path[static_cast<std::size_t>(kmax)];
      const SpMat P = prob.preconditioner(x);
      Vec tau = path[static_cast<std::size_t>(kmax + 1)] - path[static_cast<std::size_t>(kmax - 1)];
      const double tn = std::sqrt(tau.dot(P * tau));
      Vec d = -solve_spd(P, gpeak);
      if (tn > 0.0) {
        tau /= tn;
        d += 2.0 * gpeak.dot(tau) * tau;
      }
      const Vec zero = Vec::Zero(d.size());
      const double seg = std::min(dist(x, path[static_cast<std::size_t>(kmax - 1)]),
                                  dist(x, path[static_cast<std::size_t>(kmax + 1)]));
      const double dn = dist(d, zero);
      double t = dn > 0.0 ? std::min(opt.step, seg / dn) : opt.step;
      for (int b = 0; b < 40; ++b, t *= 0.5) {
        const Vec cand = x + t * d;
        try {
          if (std::isfinite(prob.energy(cand))) {
            x = cand;
            break;
          }
        } catch (const Error&) {
        }
      }
      ++out.steps;
    }
    // Remaining images relax downhill across the path.
    for (int k = 1; k < m - 1; ++k) {
      if (k == kmax) continue;
      Vec& x = path[static_cast<std::size_t>(k)];
      const Vec g = prob.gradient(x);
      const SpMat P = prob.preconditioner(x);
      Vec d = -solve_spd(P, g);
      Vec tau = path[static_cast<std::size_t>(k + 1)] - path[static_cast<std::size_t>(k - 1)];
      const double tn = std::sqrt(tau.dot(P * tau));
      if (tn > 0.0) {
        tau /= tn;
        d += g.dot(tau) * tau;
      }
      const double ek = E[static_cast<std::size_t>(k)];
      const double seg = std::min(dist(x, path[static_cast<std::size_t>(k - 1)]),
                                  dist(x, path[static_cast<std::size_t>(k + 1)]));
      const double dn = dist(d, Vec::Zero(d.size()));
      double t = dn > 0.0 ? std::min(opt.step, seg / dn) : opt.step;
      for (int b = 0; b < 20; ++b, t *= 0.5) {
        const Vec cand = x + t * d;
        double ec;
        try {
          ec = prob.energy(cand);
        } catch (const Error&) {
          continue;
        }
        if (ec <= ek + 1e-4 * t * g.dot(d)) {
          x = cand;
          break;
        }
      }
      ++out.steps;
    }
    ++iter;
    if (iter % opt.retension_every == 0) {
      // The climbing image stays put; each side is redistributed separately.
      std::vector<Vec> left(path.begin(), path.begin() + kmax + 1);
      std::vector<Vec> right(path.begin() + kmax, path.end());
      detail::retension(left, dist);
      detail::retension(right, dist);
      for (int k = 0; k <= kmax; ++k) path[static_cast<std::size_t>(k)] = left[static_cast<std::size_t>(k)];
      for (int k = kmax; k < m; ++k) path[static_cast<std::size_t>(k)] = right[static_cast<std::size_t>(k - kmax)];
    }
  }
  out.x = path[1];
  out.residual = inf_norm(prob.gradient(out.x));
  out.energy = prob.energy(out.x);
  return out;
}

// ---------------------------------------------------------------------------
// Verification

struct ResidualReport {
  double residual = 0.0;
  double max_signed = 0.0;
  double min_signed = 0.0;
  bool above_subsolution = false;
  bool positive = false;
};

inline ResidualReport verify_solution(const Energy& e, const GridFunction& u) {
  ResidualReport r;
  const Vec g = e.gradient(u.values);
  r.residual = inf_norm(g);
  r.max_signed = g.maxCoeff();
  r.min_signed = g.minCoeff();
  r.above_subsolution = true;
  r.positive = true;
  for (int i = 0; i < u.values.size(); ++i) {
    if (u.values[i] < e.fhat().under(i) - 1e-10) r.above_subsolution = false;
    if (!(u.values[i] > 0.0)) r.positive = false;
  }
  return r;
}

// ---------------------------------------------------------------------------
// De Giorgi diagnostic

struct DeGiorgiReport {
  std::vector<double> levels;
  std::vector<double> masses;
  double a = 0.0;
  double b = 0.0;
  double C = 1.0;
  double C_lsq = 1.0;
  double M = 0.0;
  double smallness_threshold = 0.0;
  int smallness_index = 0;
  bool reached_zero = false;
};

inline double level_mass(const GridFunction& u, double k, double p) {
  double s = 0.0;
  for (int i = 0; i < u.values.size(); ++i) {
    const double v = u.values[i] - k;
    if (v > 0.0) s += std::pow(v, p);
  }
  return s * u.grid.h();
}

/// Level-set masses y_n at k_n = M(1 - 2^{-(n+1)}) with M doubled from 2 K_start until smallness holds.
inline DeGiorgiReport degiorgi_bound(const GridFunction& u, double p_exp, double s_phi, double K_start,
                                     int n_max = 200) {
  if (!(p_exp > 1.0)) throw Error(ErrorCode::Construction, "De Giorgi exponent must exceed 1");
  if (u.values.size() && u.values.minCoeff() < 0.0) throw Error(ErrorCode::Construction, "u must be nonnegative");
  if (!(K_start > 0.0)) throw Error(ErrorCode::Construction, "K_start must be positive");
  const double r = p_exp / s_phi;
  DeGiorgiReport rep;
  rep.a = r - 1.0;
  rep.b = std::pow(2.0, p_exp * r);
  if (!(rep.a > 0.0)) throw Error(ErrorCode::Construction, "recursion exponent a = r - 1 must be positive");
  const double umax = u.max_abs();
  for (double M = 2.0 * K_start; M < 1e300; M *= 2.0) {
    DeGiorgiReport cur = rep;
    cur.M = M;
    for (int n = 0; n <= n_max; ++n) {
      const double k = M * (1.0 - std::ldexp(1.0, -(n + 1)));
      const double y = level_mass(u, k, p_exp);
      cur.levels.push_back(k);
      cur.masses.push_back(y);
      if (y == 0.0) {
        cur.reached_zero = true;
        break;
      }
    }
    // Recursion constant: upper envelope and least squares in log form.
    double cmax = 0.0, lsum = 0.0;
    int cnt = 0;
    for (std::size_t n = 0; n + 1 < cur.masses.size(); ++n) {
      const double yn = cur.masses[n], yn1 = cur.masses[n + 1];
      if (yn <= 0.0) break;
      const double denom = std::pow(cur.b, static_cast<double>(n)) * std::pow(yn, 1.0 + cur.a);
      const double ratio = yn1 / denom;
      cmax = std::max(cmax, ratio);
      if (yn1 > 0.0) {
        lsum += std::log(ratio);
        ++cnt;
      }
    }
    cur.C = cmax > 0.0 ? cmax : 1.0;
    cur.C_lsq = cnt ? std::exp(lsum / cnt) : cur.C;
    cur.smallness_threshold = std::pow(cur.C, -1.0 / cur.a) * std::pow(cur.b, -1.0 / (cur.a * cur.a));
    const bool small = cur.masses.front() <= cur.smallness_threshold;
    cur.smallness_index = 0;
    if (!small) {
      cur.smallness_index = -1;
      for (std::size_t n = 0; n < cur.masses.size(); ++n) {
        const double thr = std::pow(cur.C * std::pow(cur.b, static_cast<double>(n)), -1.0 / cur.a) *
                           std::pow(cur.b, -1.0 / (cur.a * cur.a));
        if (cur.masses[n] <= thr) {
          cur.smallness_index = static_cast<int>(n);
          break;
        }
      }
    }
    if (small && cur.reached_zero && M > umax) return cur;
  }
  throw Error(ErrorCode::NonConvergence, "De Giorgi recursion constants could not be fitted");
}

}  // namespace philap
