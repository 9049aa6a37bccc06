#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "philap/young.hpp"

using namespace philap;

namespace {

double involution_error(const YoungFunction& psi) {
  const YoungFunction bar = young_conjugate(psi);
  const YoungFunction back = young_conjugate(bar);
  double worst = 0.0;
  for (double t : log_grid(1e-2, 1e2, 100)) {
    worst = std::max(worst, std::abs(back.value(t) - psi.value(t)) / psi.value(t));
  }
  return worst;
}

YoungFunction pathological() {
  return build_pathological(PathologicalParams::make(oracle::kPathP, oracle::kPathQ, oracle::kPathEps));
}

}  // namespace

TEST(YoungConjugate, PowerClosedForm) {
  for (double p : {1.5, 2.0, 3.0}) {
    const YoungFunction bar = young_conjugate(power_young(p));
    for (double s : log_grid(1e-2, 1e2, 30)) {
      EXPECT_NEAR(bar.value(s) / oracle::power_conjugate(p, s), 1.0, 1e-9) << "p=" << p << " s=" << s;
    }
  }
}

TEST(YoungConjugate, InvolutionPowers) {
  for (double p : {1.5, 2.0, 3.0}) EXPECT_LT(involution_error(power_young(p)), oracle::kInvolutionRel) << p;
}

TEST(YoungConjugate, InvolutionPathological) { EXPECT_LT(involution_error(pathological()), oracle::kInvolutionRel); }

TEST(YoungConjugate, YoungInequalityAndSandwich) {
  const YoungFunction psi = pathological();
  const YoungFunction bar = young_conjugate(psi);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lg(-2.0, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double t = std::pow(10.0, lg(rng));
    const double s = std::pow(10.0, lg(rng));
    EXPECT_LE(s * t, psi.value(t) + bar.value(s) * (1.0 + 1e-12));
    const double v = psi.value(t);
    const double mid = t * bar.inverse(v);
    EXPECT_LE(v, mid * (1.0 + 1e-10));
    EXPECT_LE(mid, 2.0 * v * (1.0 + 1e-10));
  }
}

TEST(YoungConjugate, OutsideDomainIsRangeError) {
  const YoungFunction bar = young_conjugate(exp_type());
  EXPECT_THROW(bar.value(1e308), Error);
}

TEST(Indices, PowerExact) {
  const IndexPair ip = compute_indices(power_young(2.5));
  EXPECT_NEAR(ip.lower, 2.5, 1e-9);
  EXPECT_NEAR(ip.upper, 2.5, 1e-9);
}

TEST(Indices, PathologicalExtrema) {
  const IndexPair ip = compute_indices(pathological());
  EXPECT_NEAR(ip.lower, oracle::kPathQ, oracle::kPathologicalIndex);
  EXPECT_NEAR(ip.upper, oracle::kPathP, oracle::kPathologicalIndex);
}

TEST(Indices, ConjugateBracket) {
  const YoungFunction psi = with_computed_indices(pathological());
  const IndexPair ip = psi.indices();
  const IndexPair cp = compute_indices(young_conjugate(psi));
  EXPECT_GE(cp.lower, oracle::conj_exp(ip.upper) - oracle::kIndexBracket);
  EXPECT_LE(cp.lower, cp.upper);
  EXPECT_LE(cp.upper, oracle::conj_exp(ip.lower) + oracle::kIndexBracket);
}

TEST(Indices, SobolevBracket) {
  const double N = 5.0;
  const YoungFunction psi = with_computed_indices(pathological());
  const IndexPair ip = psi.indices();
  const IndexPair sp = compute_indices(sobolev_conjugate(psi, N));
  EXPECT_GE(sp.lower, oracle::sob_exp(ip.lower, N) - oracle::kIndexBracket);
  EXPECT_LE(sp.lower, sp.upper);
  EXPECT_LE(sp.upper, oracle::sob_exp(ip.upper, N) + oracle::kIndexBracket);
}

TEST(SobolevConjugate, PowerExponent) {
  const YoungFunction star = sobolev_conjugate(power_young(2.0), 4.0);
  const double expected = oracle::sobolev_exponent(2.0, 4.0);
  for (double t : log_grid(1e-2, 1e2, 20)) EXPECT_NEAR(star.index_ratio(t), expected, 1e-6) << t;
}

TEST(SobolevConjugate, SingularWhenLowerIndexReachesN) {
  EXPECT_THROW(sobolev_conjugate(power_young(5.0), 4.0), Error);
}

TEST(Pathological, RatioWindow) {
  const YoungFunction psi = pathological();
  double lo = 1e300, hi = -1e300;
  for (double t : log_grid(1e-6, 1e29, 4000)) {
    const double r = t * psi.second_derivative(t) / psi.derivative(t);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  EXPECT_GT(lo, oracle::kRatioLow);
  EXPECT_LT(hi, oracle::kRatioHigh);
}

TEST(Pathological, NotAPowerAcrossOnePeriod) {
  const PathologicalParams P = PathologicalParams::make(oracle::kPathP, oracle::kPathQ, oracle::kPathEps);
  const YoungFunction psi = build_pathological(P);
  const double e = std::numbers::e;
  const double top = std::exp(std::exp(2.0 * std::numbers::pi / P.eps));
  double lo = 1e300, hi = 0.0;
  for (double t : log_grid(e, top, 3000)) {
    const double v = psi.value(t) / std::pow(t, P.alpha);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GT(hi / lo, 10.0);
}

TEST(Pathological, BranchesMatchAtE) {
  const PathologicalParams P = PathologicalParams::make(oracle::kPathP, oracle::kPathQ, oracle::kPathEps);
  const EtaValues a = eta_inner(P, std::numbers::e);
  const EtaValues b = eta_outer(P, std::numbers::e);
  EXPECT_NEAR(a.eta, b.eta, oracle::kBranchMatch);
  EXPECT_NEAR(a.d1, b.d1, oracle::kBranchMatch);
  EXPECT_NEAR(a.d2, b.d2, oracle::kBranchMatch);
}

TEST(Pathological, RejectsLargeEps) {
  EXPECT_THROW(PathologicalParams::make(3.0, 2.0, 2.5), Error);
  EXPECT_THROW(PathologicalParams::make(2.0, 3.0, 1.0), Error);
}

TEST(LogPrimitive, ValueAtOne) {
  EXPECT_NEAR(log_primitive_young(3.0).value(1.0), oracle::kA5PhiAtOne, 1e-13);
}

TEST(LogPrimitive, Indices) {
  const IndexPair ip = compute_indices(log_primitive_young(3.0));
  EXPECT_NEAR(ip.lower, oracle::kA5IndexLower, oracle::kA5IndexTol);
  EXPECT_NEAR(ip.upper, oracle::kA5IndexUpper, oracle::kA5IndexTol);
}

TEST(LogPrimitive, DerivativeConsistency) {
  const YoungFunction phi = log_primitive_young(3.0);
  for (double t : log_grid(1e-3, 1e6, 25)) {
    const double h = 1e-5 * t;
    const double fd = (phi.value(t + h) - phi.value(t - h)) / (2.0 * h);
    EXPECT_NEAR(fd / phi.derivative(t), 1.0, 1e-7) << t;
  }
}

TEST(Ordering, PowerPairs) {
  EXPECT_EQ(ordering(power_young(2.0), power_young(3.0)), Ordering::MuchLess);
  EXPECT_EQ(ordering(monomial(2.0, 3.0), monomial(2.0, 1.0)), Ordering::Less);
  EXPECT_EQ(ordering(power_young(3.0), power_young(2.0)), Ordering::Neither);
  EXPECT_TRUE(less_constant(monomial(2.0, 3.0), monomial(2.0, 1.0)).has_value());
}

TEST(Growth, Delta2AndNabla2) {
  const GrowthClasses pw = delta2_nabla2(power_young(2.5));
  EXPECT_TRUE(pw.delta2);
  EXPECT_TRUE(pw.nabla2);
  EXPECT_FALSE(delta2_nabla2(exp_type()).delta2);
}

TEST(Validation, NonConvexRejected) {
  YoungFunction::Parts parts;
  parts.name = "sqrt";
  parts.value = [](double t) { return std::sqrt(t); };
  parts.derivative = [](double t) { return 0.5 / std::sqrt(t); };
  EXPECT_FALSE(validate_young(YoungFunction(parts)).ok);
  EXPECT_TRUE(validate_young(power_young(2.0)).ok);
}

TEST(Evaluation, NegativeArgument) { EXPECT_THROW(power_young(2.0).value(-1.0), Error); }

TEST(GeometricMean, IndicesBetween) {
  const IndexPair ip = compute_indices(geometric_mean(power_young(3.0), power_young(6.0)));
  EXPECT_NEAR(ip.lower, 4.5, 1e-6);
  EXPECT_NEAR(ip.upper, 4.5, 1e-6);
}
