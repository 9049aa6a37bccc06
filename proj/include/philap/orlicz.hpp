#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "philap/error.hpp"
#include "philap/young.hpp"

namespace philap {

/// Uniform grid on (0, L) with homogeneous Dirichlet data.
struct Grid {
  int n_interior = 127;
  double length = 1.0;

  Grid() = default;
  Grid(int n, double L) : n_interior(n), length(L) {
    if (n < 1 || !(L > 0.0)) throw Error(ErrorCode::Construction, "grid needs n >= 1 and L > 0");
  }

  static Grid from_spacing(double h, double L = 1.0) {
    return Grid(static_cast<int>(std::lround(L / h)) - 1, L);
  }

  double h() const { return length / (n_interior + 1); }
  int cells() const { return n_interior + 1; }
  double x(int i) const { return (i + 1) * h(); }
  double distance(int i) const { return std::min(x(i), length - x(i)); }
  double diameter() const { return length; }
  double measure() const { return length; }
};

/// Interior nodal values; boundary values are implicitly zero.
struct GridFunction {
  Grid grid;
  Eigen::VectorXd values;

  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid(g), values(Eigen::VectorXd::Zero(g.n_interior)) {}
  GridFunction(const Grid& g, Eigen::VectorXd v) : grid(g), values(std::move(v)) {
    if (values.size() != g.n_interior) throw Error(ErrorCode::Construction, "value count mismatch");
  }

  template <class F>
  static GridFunction sample(const Grid& g, F&& f) {
    GridFunction out(g);
    for (int i = 0; i < g.n_interior; ++i) out.values[i] = f(g.x(i));
    return out;
  }

  double max_abs() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

inline double modular(const YoungFunction& psi, const GridFunction& u) {
  const double h = u.grid.h();
  double sum = 0.0;
  for (int i = 0; i < u.values.size(); ++i) sum += psi.value(std::abs(u.values[i]));
  return sum * h;
}

inline double luxemburg_norm(const YoungFunction& psi, const GridFunction& u, double rel_tol = 1e-10) {
  const double m = u.max_abs();
  if (m == 0.0) return 0.0;
  auto mod = [&](double lam) {
    GridFunction v = u;
    v.values /= lam;
    return modular(psi, v);
  };
  double lo = m, hi = m;
  int guard = 0;
  while (mod(hi) > 1.0) {
    hi *= 2.0;
    if (++guard > 2000) throw Error(ErrorCode::EvaluationDomain, "Luxemburg bracket failure");
  }
  guard = 0;
  while (mod(lo) <= 1.0) {
    lo /= 2.0;
    if (++guard > 2000) throw Error(ErrorCode::EvaluationDomain, "Luxemburg bracket failure");
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (mod(mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Forward differences on the n+1 cells.
inline Eigen::VectorXd gradient(const GridFunction& u) {
  const int n = u.grid.n_interior;
  const double h = u.grid.h();
  Eigen::VectorXd g(n + 1);
  for (int c = 0; c <= n; ++c) {
    const double right = c < n ? u.values[c] : 0.0;
    const double left = c > 0 ? u.values[c - 1] : 0.0;
    g[c] = (right - left) / h;
  }
  return g;
}

inline double energy_modular(const YoungFunction& phi, const GridFunction& u) {
  const Eigen::VectorXd g = gradient(u);
  double sum = 0.0;
  for (int c = 0; c < g.size(); ++c) sum += phi.value(std::abs(g[c]));
  return sum * u.grid.h();
}

/// Norm of the discrete gradient in L^phi over cells.
inline double gradient_norm(const YoungFunction& phi, const GridFunction& u, double rel_tol = 1e-10) {
  const Eigen::VectorXd g = gradient(u);
  const double m = g.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  const double h = u.grid.h();
  auto mod = [&](double lam) {
    double s = 0.0;
    for (int c = 0; c < g.size(); ++c) s += phi.value(std::abs(g[c]) / lam);
    return s * h;
  };
  double lo = m, hi = m;
  while (mod(hi) > 1.0) hi *= 2.0;
  while (mod(lo) <= 1.0) lo /= 2.0;
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    (mod(mid) > 1.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// Largest ratio |u|_target / |grad u|_phi over random sine combinations, times 2.
inline double estimate_embedding_constant(const YoungFunction& phi, const YoungFunction& target,
                                          const Grid& grid, int n_trials, std::mt19937_64& rng,
                                          int modes = 8) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double L = grid.length;
  double best = 0.0;
  for (int trial = 0; trial < n_trials; ++trial) {
    std::vector<double> amp(static_cast<std::size_t>(modes), 0.0);
    if (trial == 0) {
      amp[0] = 1.0;
    } else {
      for (int k = 0; k < modes; ++k) amp[static_cast<std::size_t>(k)] = normal(rng) / (k + 1);
    }
    GridFunction u = GridFunction::sample(grid, [&](double x) {
      double s = 0.0;
      for (int k = 0; k < modes; ++k) {
        s += amp[static_cast<std::size_t>(k)] * std::sin((k + 1) * std::numbers::pi * x / L);
      }
      return s;
    });
    if (u.max_abs() == 0.0) continue;
    const double den = gradient_norm(phi, u);
    if (den == 0.0) continue;
    best = std::max(best, luxemburg_norm(target, u) / den);
  }
  return 2.0 * best;
}

// ---------------------------------------------------------------------------
// CSV

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_grid_function_csv(const std::string& path, const GridFunction& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Config, "cannot write " + path);
  out << "x,u\n";
  out << format_double(0.0) << "," << format_double(0.0) << "\n";
  for (int i = 0; i < u.grid.n_interior; ++i) {
    out << format_double(u.grid.x(i)) << "," << format_double(u.values[i]) << "\n";
  }
  out << format_double(u.grid.length) << "," << format_double(0.0) << "\n";
}

inline GridFunction read_grid_function_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read " + path);
  std::string line;
  std::getline(in, line);
  std::vector<double> xs, us;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string a, b;
    std::getline(ls, a, ',');
    std::getline(ls, b, ',');
    xs.push_back(std::stod(a));
    us.push_back(std::stod(b));
  }
  if (xs.size() < 3) throw Error(ErrorCode::Config, "grid function CSV needs at least 3 rows");
  Grid g(static_cast<int>(xs.size()) - 2, xs.back() - xs.front());
  Eigen::VectorXd v(g.n_interior);
  for (int i = 0; i < g.n_interior; ++i) v[i] = us[static_cast<std::size_t>(i + 1)];
  return GridFunction(g, v);
}

}  // namespace philap
