#pragma once

// Independent reference values. Closed forms are evaluated directly; numbers were frozen from
// hand derivations or from the first validated run and must not be regenerated from the library.

#include <cmath>
#include <numbers>

namespace oracle {

// Pinned tolerances.
inline constexpr double kInvolutionRel = 1e-6;
inline constexpr double kIndexBracket = 1e-2;
inline constexpr double kPathologicalIndex = 1e-3;
inline constexpr double kBranchMatch = 1e-10;
inline constexpr double kCase4Rel = 1e-8;
inline constexpr double kStationarity = 1e-8;
inline constexpr double kFirstResidual = 1e-6;
inline constexpr double kSecondResidual = 1e-4;
inline constexpr double kDistinct = 1e-2;
inline constexpr double kGradientRel = 1e-5;
inline constexpr double kComparison = 1e-10;

/// u(x) = c^{1/(p-1)} ((p-1)/p) [(1/2)^{p/(p-1)} - |x - 1/2|^{p/(p-1)}] on (0, 1).
inline double torsion(double p, double c, double x) {
  const double q = p / (p - 1.0);
  return std::pow(c, 1.0 / (p - 1.0)) * ((p - 1.0) / p) * (std::pow(0.5, q) - std::pow(std::abs(x - 0.5), q));
}

/// Conjugate of t^p/p is s^{p'}/p'.
inline double power_conjugate(double p, double s) {
  const double pp = p / (p - 1.0);
  return std::pow(s, pp) / pp;
}

/// Sobolev conjugate of t^p/p (p < N) is c t^{p*} with p* = Np/(N-p); only the exponent is used.
inline double sobolev_exponent(double p, double N) { return N * p / (N - p); }

/// min over r of A/r + B r^theta, derived by hand: (1+theta) [A^theta B / theta^theta]^{1/(theta+1)}.
inline double khat_min(double A, double B, double theta) {
  return (1.0 + theta) * std::pow(std::pow(A, theta) * B / std::pow(theta, theta), 1.0 / (theta + 1.0));
}

/// int_0^1 s^2 log(1+s) ds = (2 ln 2)/3 - 5/18.
inline const double kA5PhiAtOne = 2.0 * std::numbers::ln2 / 3.0 - 5.0 / 18.0;

/// Conjugate-exponent bracket for indices (i, s) of psi: s/(s-1) <= i_bar <= s_bar <= i/(i-1).
inline double conj_exp(double x) { return x / (x - 1.0); }

/// Sobolev bracket: N i/(N - i) <= i_* <= s_* <= N s/(N - s).
inline double sob_exp(double x, double N) { return N * x / (N - x); }

// Pathological function p=3, q=2, eps=1.9.
inline constexpr double kPathP = 3.0;
inline constexpr double kPathQ = 2.0;
inline constexpr double kPathEps = 1.9;
/// Window (q - 1 - beta eps, p - 1 + beta eps) with beta = (p - q)/2.
inline constexpr double kRatioLow = kPathQ - 1.0 - 0.5 * (kPathP - kPathQ) * kPathEps;
inline constexpr double kRatioHigh = kPathP - 1.0 + 0.5 * (kPathP - kPathQ) * kPathEps;

// Frozen from the first validated A5 run (p=3, N=4, r=3.5, gamma=0.5, 128 cells, seed 20240601).
inline constexpr double kA5IndexLower = 3.074172;
inline constexpr double kA5IndexUpper = 3.999960;
inline constexpr double kA5IndexTol = 5e-5;
inline constexpr double kA5Mu = 4.25;
inline constexpr double kA5R = 4.0;
inline constexpr double kA5LambdaStar = 0.0955354;
inline constexpr double kA5LambdaStarRel = 1e-5;

}  // namespace oracle
