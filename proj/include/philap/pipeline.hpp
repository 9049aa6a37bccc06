#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include "philap/hypotheses.hpp"
#include "philap/solver.hpp"
#include "philap/threshold.hpp"

namespace philap {

struct PipelineOptions {
  double lambda = std::numeric_limits<double>::quiet_NaN();
  double lambda_fraction = 0.5;
  std::uint64_t seed = 20240601;
  int embedding_trials = 64;
  double torsion_tol = 1e-8;
  double first_tol = 1e-10;
  int max_iterations = 5000;
  MountainPassOptions mp;
  /// Fraction of max u used as K_start in the De Giorgi diagnostic.
  double K_start_fraction = 0.3;
  bool run_mountain_pass = true;
};

/// H^1_0-type distance between grid states, used to space the mountain-pass path.
inline std::function<double(const Vec&, const Vec&)> gradient_distance(const Grid& g) {
  const double h = g.h();
  return [h](const Vec& a, const Vec& b) {
    const Vec d = a - b;
    const int n = static_cast<int>(d.size());
    double s = d[0] * d[0] + d[n - 1] * d[n - 1];
    for (int i = 1; i < n; ++i) s += (d[i] - d[i - 1]) * (d[i] - d[i - 1]);
    return std::sqrt(s / h);
  };
}

/// Classify, build truncation constants from the slope bounds, and evaluate the threshold.
inline ThresholdResult compute_threshold(const ProblemSpec& s, double k1, double k2, std::mt19937_64& rng,
                                         int embedding_trials, TruncationConstants* constants = nullptr) {
  const TruncationConstants tc = truncation_constants(s, k1, k2);
  if (constants) *constants = tc;
  const ThresholdCase kind = classify(s.upsilon, s.phi);
  ThresholdInputs in;
  in.phi = s.phi;
  in.upsilon = s.upsilon;
  in.phi_star = s.phi_star;
  in.C1 = tc.C1;
  in.C2 = tc.C2;
  in.measure = s.grid.measure();
  in.diameter = s.grid.diameter();
  const Grid grid = s.grid;
  const YoungFunction phi = s.phi;
  in.embedding = [phi, grid, &rng, embedding_trials](const YoungFunction& target) {
    return estimate_embedding_constant(phi, target, grid, embedding_trials, rng);
  };
  return lambda_star(in, kind);
}

struct PipelineResult {
  HypothesisReport hypotheses;
  SubSolution reference_sub;
  TruncationConstants constants;
  ThresholdResult threshold;
  double lambda = 0.0;
  double r_star = 0.0;
  SubSolution sub;
  FirstSolution first;
  std::optional<UphillResult> uphill;
  std::optional<MountainPassResult> mp;
  std::optional<EnergyState> second;
  std::optional<DeGiorgiReport> degiorgi;
  std::vector<std::string> notes;
};

/// Hypotheses, threshold, sub-solution, first solution, mountain pass and De Giorgi for one problem.
/// The threshold uses the slope bounds of the lambda = 1 sub-solution; the solve uses the one at lambda.
inline PipelineResult run_pipeline(const ProblemSpec& s, const PipelineOptions& opt) {
  PipelineResult out;
  out.hypotheses = check_all(s);
  if (!out.hypotheses.all_pass()) throw Error(ErrorCode::HypothesisFailure, "hypothesis check failed");
  std::mt19937_64 rng(opt.seed);
  out.reference_sub = build_subsolution(s, 1.0, opt.torsion_tol);
  out.threshold = compute_threshold(s, out.reference_sub.k1, out.reference_sub.k2, rng, opt.embedding_trials,
                                    &out.constants);
  out.lambda = std::isnan(opt.lambda) ? out.threshold.default_lambda(opt.lambda_fraction) : opt.lambda;
  if (!(out.lambda > 0.0)) throw Error(ErrorCode::Config, "lambda must be positive");
  if (!(out.lambda < out.threshold.lambda_star)) {
    out.notes.push_back("lambda is not below lambda*; the existence interval is not certified");
  }
  out.r_star = out.threshold.r_star(out.lambda);
  out.sub = build_subsolution(s, out.lambda, opt.torsion_tol);

  TruncatedReaction fhat(s.f, out.sub.u_under);
  Energy energy(s.phi, fhat, out.lambda);
  out.first = first_solution(energy, out.sub.u_under, out.r_star, opt.first_tol, opt.max_iterations);
  if (out.first.pinned) out.notes.push_back("first solution pinned to the modular ball boundary");

  const double umax = out.first.state.u.max_abs();
  if (s.phi_star) {
    try {
      out.degiorgi = degiorgi_bound(out.first.state.u, s.phi_star->indices().lower, s.phi.indices().upper,
                                    opt.K_start_fraction * umax);
    } catch (const Error& e) {
      out.notes.push_back(std::string("De Giorgi: ") + e.what());
    }
  }

  if (opt.run_mountain_pass) {
    out.uphill = uphill_endpoint(energy, out.first.state, s.mu, s.phi.indices().upper);
    out.mp = mountain_pass(energy.problem(), out.first.state.u.values, out.uphill->u1.values, opt.mp,
                           gradient_distance(s.grid));
    out.second = energy.state(out.mp->x);
    if (out.mp->collapsed) out.notes.push_back("mountain-pass path collapsed onto the first solution");
    if (!out.mp->converged) out.notes.push_back("mountain-pass iteration budget exhausted");
  }
  return out;
}

}  // namespace philap
