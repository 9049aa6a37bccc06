// Acceptance runner: one PASS/FAIL line per criterion with runtime and the measured quantities.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "philap/pipeline.hpp"
#include "philap/solver.hpp"
#include "philap/threshold.hpp"
#include "philap/young.hpp"

using namespace philap;

namespace {

class Criterion {
 public:
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass_ = false;
      failures_.push_back(what);
    }
  }
  void note(const std::string& s) { notes_.push_back(s); }
  bool pass() const { return pass_; }
  std::string summary() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < notes_.size(); ++i) os << (i ? "; " : "") << notes_[i];
    for (const auto& f : failures_) os << " | failed: " << f;
    return os.str();
  }

 private:
  bool pass_ = true;
  std::vector<std::string> notes_;
  std::vector<std::string> failures_;
};

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.4g", v);
  return b;
}

int g_failed = 0;

void run(const char* id, const char* title, double budget_s, const std::function<void(Criterion&)>& body) {
  Criterion c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.check(false, std::string("exception: ") + e.what());
  }
  const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.check(dt < budget_s, "runtime " + fmt(dt) + " s exceeds " + fmt(budget_s) + " s");
  if (!c.pass()) ++g_failed;
  std::printf("[%s] %s %s (%.2f s / %.0f s): %s\n", c.pass() ? "PASS" : "FAIL", id, title, dt, budget_s,
              c.summary().c_str());
  std::fflush(stdout);
}

double involution_error(const YoungFunction& psi) {
  const YoungFunction back = young_conjugate(young_conjugate(psi));
  double worst = 0.0;
  for (double t : log_grid(1e-2, 1e2, 100)) worst = std::max(worst, std::abs(back.value(t) / psi.value(t) - 1.0));
  return worst;
}

PathologicalParams path_params() {
  return PathologicalParams::make(oracle::kPathP, oracle::kPathQ, oracle::kPathEps);
}

void young_suite(Criterion& c) {
  double worst = 0.0;
  for (double p : {1.5, 2.0, 3.0}) worst = std::max(worst, involution_error(power_young(p)));
  const YoungFunction psi = with_computed_indices(build_pathological(path_params()));
  worst = std::max(worst, involution_error(psi));
  c.note("max involution error " + fmt(worst));
  c.check(worst < oracle::kInvolutionRel, "involution");

  const YoungFunction bar = young_conjugate(psi);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lg(-2.0, 2.0);
  int young_bad = 0, sandwich_bad = 0;
  for (int k = 0; k < 1000; ++k) {
    const double t = std::pow(10.0, lg(rng)), s = std::pow(10.0, lg(rng));
    if (s * t > (psi.value(t) + bar.value(s)) * (1.0 + 1e-12)) ++young_bad;
    const double v = psi.value(t), mid = t * bar.inverse(v);
    if (v > mid * (1.0 + 1e-10) || mid > 2.0 * v * (1.0 + 1e-10)) ++sandwich_bad;
  }
  c.note("Young violations " + std::to_string(young_bad) + ", sandwich violations " + std::to_string(sandwich_bad));
  c.check(young_bad == 0 && sandwich_bad == 0, "Young inequality / sandwich");

  const IndexPair ip = psi.indices();
  const IndexPair cp = compute_indices(bar);
  const bool conj_ok = cp.lower >= oracle::conj_exp(ip.upper) - oracle::kIndexBracket &&
                       cp.upper <= oracle::conj_exp(ip.lower) + oracle::kIndexBracket && cp.lower <= cp.upper;
  c.note("conjugate indices [" + fmt(cp.lower) + ", " + fmt(cp.upper) + "]");
  c.check(conj_ok, "conjugate index bracket");
  const double N = 5.0;
  const IndexPair sp = compute_indices(sobolev_conjugate(psi, N));
  const bool sob_ok = sp.lower >= oracle::sob_exp(ip.lower, N) - oracle::kIndexBracket &&
                      sp.upper <= oracle::sob_exp(ip.upper, N) + oracle::kIndexBracket && sp.lower <= sp.upper;
  c.note("Sobolev indices (N=5) [" + fmt(sp.lower) + ", " + fmt(sp.upper) + "]");
  c.check(sob_ok, "Sobolev index bracket");
}

void pathological_suite(Criterion& c) {
  const PathologicalParams P = path_params();
  const YoungFunction psi = build_pathological(P);
  const IndexPair ip = compute_indices(psi);
  c.note("indices [" + fmt(ip.lower) + ", " + fmt(ip.upper) + "]");
  c.check(std::abs(ip.lower - P.q) < oracle::kPathologicalIndex && std::abs(ip.upper - P.p) < oracle::kPathologicalIndex,
          "index extrema");
  double lo = 1e300, hi = -1e300;
  for (double t : log_grid(1e-6, 1e29, 4000)) {
    const double r = t * psi.second_derivative(t) / psi.derivative(t);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  c.note("t psi''/psi' in [" + fmt(lo) + ", " + fmt(hi) + "]");
  c.check(lo > oracle::kRatioLow && hi < oracle::kRatioHigh, "second-order ratio window");
  const double top = std::exp(std::exp(2.0 * std::numbers::pi / P.eps));
  double mn = 1e300, mx = 0.0;
  for (double t : log_grid(std::numbers::e, top, 3000)) {
    const double v = psi.value(t) / std::pow(t, P.alpha);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  c.note("psi/t^alpha span over one period " + fmt(mx / mn));
  c.check(mx / mn > 10.0, "not-a-power span");
  const EtaValues a = eta_inner(P, std::numbers::e), b = eta_outer(P, std::numbers::e);
  const double gap = std::max({std::abs(a.eta - b.eta), std::abs(a.d1 - b.d1), std::abs(a.d2 - b.d2)});
  c.note("branch gap at e " + fmt(gap));
  c.check(gap < oracle::kBranchMatch, "branch match");
}

double golden_min(double A, double B, double theta) {
  double a = -40.0, b = 40.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  auto f = [&](double y) { return khat(A, B, theta, std::exp(y)); };
  double x1 = b - g * (b - a), x2 = a + g * (b - a), f1 = f(x1), f2 = f(x2);
  while (b - a > 1e-13) {
    if (f1 < f2) {
      b = x2, x2 = x1, f2 = f1, x1 = b - g * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2, x2 = a + g * (b - a), f2 = f(x2);
    }
  }
  return f(0.5 * (a + b));
}

void threshold_suite(Criterion& c) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> ab(0.1, 10.0), th(1e-3, 5.0);
  double worst = 0.0, worst_stat = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double A = ab(rng), B = ab(rng), theta = th(rng);
    const double lambda_star = 1.0 / case4_minimum(A, B, theta);
    worst = std::max(worst, std::abs(golden_min(A, B, theta) * lambda_star - 1.0));
    const double r = case4_rstar(A, B, theta);
    worst_stat = std::max(worst_stat, std::abs(khat_prime(A, B, theta, r)) * r * lambda_star);
  }
  c.note("golden vs 1/lambda* rel " + fmt(worst) + ", scaled stationarity " + fmt(worst_stat));
  c.check(worst < oracle::kCase4Rel, "golden-section agreement");
  c.check(worst_stat < oracle::kStationarity, "stationarity");
  const double direct = case4_minimum(1, 1, 1), compact = case4_compact_formula(1, 1, 1);
  c.note("theta=1 direct " + fmt(direct) + " vs compact " + fmt(compact));
  c.check(direct == 2.0 && std::abs(compact - std::sqrt(2.0)) < 1e-15, "compact-formula discrepancy");

  struct S {
    YoungFunction phi, ups;
    double N;
    ThresholdCase kind;
  };
  const std::vector<S> cases = {{power_young(3.0), monomial(2.0), 4.0, ThresholdCase::MuchLess},
                                {power_young(3.0), power_young(3.0), 4.0, ThresholdCase::Less},
                                {power_young(2.0), monomial(3.0), 3.0, ThresholdCase::Greater},
                                {power_young(2.0), monomial(3.0), 3.0, ThresholdCase::MuchGreater}};
  const Grid grid(63, 1.0);
  std::ostringstream os;
  for (const S& s : cases) {
    ThresholdInputs in;
    in.phi = with_computed_indices(s.phi);
    in.upsilon = with_computed_indices(s.ups);
    in.phi_star = with_computed_indices(sobolev_conjugate(in.phi, s.N));
    in.C1 = 3.0;
    in.C2 = 2.5;
    auto erng = std::make_shared<std::mt19937_64>(5);
    const YoungFunction phi = in.phi;
    in.embedding = [phi, grid, erng](const YoungFunction& t) {
      return estimate_embedding_constant(phi, t, grid, 8, *erng);
    };
    const ThresholdResult res = lambda_star(in, s.kind);
    const double lambda = res.default_lambda(0.5);
    const double v = lambda * res.kappa_bound(lambda, res.r_star(lambda));
    os << to_string(s.kind) << "=" << fmt(v) << " ";
    c.check(v < 1.0, std::string("admissibility ") + std::string(to_string(s.kind)));
  }
  c.note("lambda*kappa(r*): " + os.str());
}

void torsion_suite(Criterion& c) {
  auto err = [](double p, double cc, int k) {
    const Grid g = Grid::from_spacing(std::ldexp(1.0, -k));
    const GridFunction u = solve_torsion(power_young(p), cc, g);
    double e = 0.0;
    for (int i = 0; i < g.n_interior; ++i) e = std::max(e, std::abs(u.values[i] - oracle::torsion(p, cc, g.x(i))));
    return e;
  };
  for (double p : {2.0, 3.0}) {
    for (double cc : {1.0, 0.1}) {
      std::vector<double> e;
      for (int k = 6; k <= 9; ++k) e.push_back(err(p, cc, k));
      const double h8 = std::ldexp(1.0, -8);
      c.check(e[2] <= 5.0 * h8, "error at h=2^-8 for p=" + fmt(p) + " c=" + fmt(cc));
      std::string order = "exact";
      if (e[0] > 1e-14) {
        const double ord = std::log2(e[0] / e[3]) / 3.0;
        order = fmt(ord);
        c.check(ord >= 1.0, "order for p=" + fmt(p) + " c=" + fmt(cc));
      }
      c.note("p=" + fmt(p) + " c=" + fmt(cc) + ": err(2^-8)=" + fmt(e[2]) + " order=" + order);
    }
  }
}

struct A5 {
  ProblemSpec spec;
  PipelineResult res;
};

A5& a5_run() {
  static A5 run = [] {
    A5 r;
    r.spec = builtin_example(Builtin::A5, BuiltinParams{3.0, 4.0, 3.5, 0.5, 1.9});
    r.spec.grid = Grid::from_spacing(std::ldexp(1.0, -7));
    r.res = run_pipeline(r.spec, PipelineOptions{});
    return r;
  }();
  return run;
}

void pipeline_suite(Criterion& c) {
  const A5& r = a5_run();
  const PipelineResult& p = r.res;
  c.check(p.hypotheses.all_pass(), "hypotheses");
  const SubSolution& s = p.sub;
  c.note("lambda*=" + fmt(p.threshold.lambda_star) + " lambda=" + fmt(p.lambda) + " r*=" + fmt(p.r_star));
  c.note("max u_under=" + fmt(s.u_under.max_abs()) + " delta=" + fmt(s.delta) + " R=" + fmt(r.spec.R));
  c.check(s.u_under.max_abs() < s.delta && s.delta < r.spec.R, "max u_under < delta < R");
  bool slopes = true;
  for (int i = 0; i < s.u_under.grid.n_interior; ++i) {
    const double d = s.u_under.grid.distance(i), u = s.u_under.values[i];
    slopes = slopes && u >= s.k1 * d * (1 - 1e-14) && u <= s.k2 * d * (1 + 1e-14);
  }
  c.check(slopes, "k1 d <= u_under <= k2 d");
  const EnergyState& u = p.first.state;
  c.note("first: residual=" + fmt(u.residual) + " H=" + fmt(u.H_value) + " J=" + fmt(u.J_value));
  c.check(u.residual < oracle::kFirstResidual, "first residual");
  c.check(u.H_value < p.r_star, "H(u) < r*");
  bool above = true;
  for (int i = 0; i < u.u.values.size(); ++i) above = above && u.u.values[i] >= s.u_under.values[i] - oracle::kComparison;
  c.check(above, "u >= u_under");
  if (!p.second) {
    c.check(false, "mountain pass missing");
    return;
  }
  const EnergyState& v = *p.second;
  const double dist = (v.u.values - u.u.values).cwiseAbs().maxCoeff();
  c.note("second: residual=" + fmt(v.residual) + " J=" + fmt(v.J_value) + " sup|v-u|=" + fmt(dist));
  c.check(v.residual < oracle::kSecondResidual, "second residual");
  c.check(v.J_value >= u.J_value, "J(v) >= J(u)");
  c.check(dist > oracle::kDistinct, "distinct solutions");
  c.check(!p.mp->collapsed, "no collapse");
}

void gradient_suite(Criterion& c) {
  const A5& r = a5_run();
  TruncatedReaction fr(r.spec.f, r.res.sub.u_under);
  Energy e(r.spec.phi, fr, r.res.lambda);
  std::mt19937_64 rng(20240601);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::uniform_real_distribution<double> amp(0.05, 50.0);
  const Grid& g = r.spec.grid;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double A = amp(rng);
    Vec u(g.n_interior), w(g.n_interior);
    const double c1 = nd(rng), c2 = nd(rng);
    for (int i = 0; i < g.n_interior; ++i) {
      const double x = g.x(i);
      u[i] = std::abs(A * (std::sin(std::numbers::pi * x) + 0.2 * c1 * std::sin(2 * std::numbers::pi * x))) + 1e-3;
      w[i] = std::sin(std::numbers::pi * x) + 0.3 * c2 * std::sin(5 * std::numbers::pi * x);
    }
    const double eps = 1e-5 * A;
    const double fd = (e.J(u + eps * w) - e.J(u - eps * w)) / (2.0 * eps);
    const double an = e.gradient(u).dot(w);
    worst = std::max(worst, std::abs(fd - an) / std::abs(an));
  }
  c.note("max relative error " + fmt(worst) + " over 20 states");
  c.check(worst < oracle::kGradientRel, "gradient");
}

void degiorgi_suite(Criterion& c) {
  const A5& r = a5_run();
  if (!r.res.degiorgi) {
    c.check(false, "De Giorgi report missing");
    return;
  }
  const DeGiorgiReport& d = *r.res.degiorgi;
  c.note("M=" + fmt(d.M) + " a=" + fmt(d.a) + " b=" + fmt(d.b) + " C=" + fmt(d.C) + " levels=" +
         std::to_string(d.masses.size()) + " smallness index=" + std::to_string(d.smallness_index));
  c.check(d.smallness_index >= 0, "smallness reached");
  bool mono = true, rec = true;
  for (std::size_t n = static_cast<std::size_t>(std::max(d.smallness_index, 0)); n + 1 < d.masses.size(); ++n) {
    mono = mono && d.masses[n + 1] <= d.masses[n];
  }
  for (std::size_t n = 0; n + 1 < d.masses.size(); ++n) {
    rec = rec && d.masses[n + 1] <= d.C * std::pow(d.b, static_cast<double>(n)) * std::pow(d.masses[n], 1.0 + d.a) *
                                         (1.0 + 1e-12);
  }
  c.check(mono, "y_n nonincreasing");
  c.check(d.reached_zero && d.masses.back() == 0.0, "y_n reaches 0");
  c.check(rec, "recursion inequality");
}

void negative_suite(Criterion& c) {
  const std::filesystem::path tmp = std::filesystem::temp_directory_path() / "philap_acceptance_neg";
  std::filesystem::create_directories(tmp);
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"neg_hf1.ini", "H(f)1 FAIL"}, {"neg_hf3.ini", "H(f)3 FAIL"}, {"neg_ha2.ini", "H(a)2 FAIL"}};
  for (const auto& [file, expect] : cases) {
    const auto log = tmp / (file + ".log");
    const std::string cmd = std::string("\"") + PHILAP_CLI + "\" check --config \"" + PHILAP_CONFIG_DIR + "/" +
                            file + "\" --output-dir \"" + tmp.string() + "\" > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::string line, found;
    while (std::getline(in, line)) {
      if (line.rfind(expect, 0) == 0) found = line;
    }
    c.note(file + " exit " + std::to_string(code));
    c.check(code == 1, file + " exit code");
    c.check(!found.empty(), file + " report line '" + expect + "'");
  }
}

}  // namespace

int main() {
  run("AC1", "young-calculus", 30, young_suite);
  run("AC2", "pathological-certification", 10, pathological_suite);
  run("AC3", "threshold", 30, threshold_suite);
  run("AC4", "torsion-oracle", 60, torsion_suite);
  run("AC5", "a5-two-solutions", 600, pipeline_suite);
  run("AC6", "gradient-check", 60, gradient_suite);
  run("AC7", "degiorgi", 60, degiorgi_suite);
  run("AC8", "negative-controls", 120, negative_suite);
  std::printf("%d of 8 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
