#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "philap/config.hpp"
#include "philap/error.hpp"
#include "philap/hypotheses.hpp"
#include "philap/orlicz.hpp"
#include "philap/pipeline.hpp"
#include "philap/solver.hpp"
#include "philap/threshold.hpp"
#include "philap/young.hpp"

namespace philap::cli {

inline constexpr const char* kVersion = "1.0.0";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"indices",     "conjugate",     "sobolev-conjugate",
                                             "check",       "lambda-star",   "solve",
                                             "mountain-pass", "degiorgi",    "verify-example"};
  return c;
}

struct Args {
  std::string command;
  std::string example;
  std::string config_path;
  std::string output_dir = "out";
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::string builtin;
  std::optional<double> p, q, eps, N, r, gamma, lambda;
  std::string input;
};

class Csv {
 public:
  Csv(const std::filesystem::path& path, const std::vector<std::string>& header) : out_(path, std::ios::binary) {
    if (!out_) throw Error(ErrorCode::Config, "cannot write " + path.string());
    row_strings(header);
  }

  template <class... T>
  void row(const T&... v) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(v), first = false), ...);
    out_ << '\n';
  }

  void row_strings(const std::vector<std::string>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out_ << (i ? "," : "") << v[i];
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(std::string_view v) {
    if (v.find_first_of(",\"\n") == std::string_view::npos) return std::string(v);
    std::string q = "\"";
    for (char c : v) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  static std::string cell(const std::string& v) { return cell(std::string_view(v)); }
  static std::string cell(const char* v) { return cell(std::string_view(v)); }

  std::ofstream out_;
};

class Runner {
 public:
  Runner(Args a, std::ostream& out, std::ostream& err) : a_(std::move(a)), out_(out), err_(err) {}

  int run() {
    std::filesystem::create_directories(a_.output_dir);
    try {
      return dispatch();
    } catch (const Error& e) {
      try {
        write_manifest(e.code() == ErrorCode::Config ? 2 : 1);
      } catch (const Error&) {
      }
      throw;
    }
  }

 private:
  int dispatch() {
    load_config();
    seed_ = a_.seed ? *a_.seed : static_cast<std::uint64_t>(config_.integer("solver.seed", 20240601));
    int code = 0;
    const std::string& c = a_.command;
    if (c == "indices") code = cmd_indices();
    else if (c == "conjugate") code = cmd_conjugate();
    else if (c == "sobolev-conjugate") code = cmd_sobolev();
    else if (c == "check") code = cmd_check();
    else if (c == "lambda-star") code = cmd_lambda_star();
    else if (c == "solve") code = cmd_solve(false);
    else if (c == "mountain-pass") code = cmd_solve(true);
    else if (c == "degiorgi") code = cmd_degiorgi();
    else if (c == "verify-example") code = cmd_verify_example();
    write_manifest(code);
    return code;
  }

  std::filesystem::path path(const std::string& name) const { return std::filesystem::path(a_.output_dir) / name; }

  void load_config() {
    if (!a_.config_path.empty()) config_ = Config::from_file(a_.config_path);
    for (const auto& o : a_.overrides) config_.apply_override(o);
    has_config_ = !a_.config_path.empty();
  }

  void require_config() const {
    if (!has_config_) throw Error(ErrorCode::Config, "command '" + a_.command + "' requires --config");
  }

  PipelineOptions options() const {
    PipelineOptions o = options_from_config(config_);
    o.seed = seed_;
    if (a_.lambda) o.lambda = *a_.lambda;
    return o;
  }

  void write_manifest(int code) const {
    std::ofstream m(path("manifest.txt"), std::ios::binary);
    const PipelineOptions o = options_from_config(config_);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_.hash()));
    m << "command=" << a_.command << '\n'
      << "version=" << kVersion << '\n'
      << "config=" << a_.config_path << '\n'
      << "config_hash=fnv1a64:" << hash << '\n'
      << "seed=" << seed_ << '\n'
      << "exit_code=" << code << '\n'
      << "tol.torsion=" << format_double(o.torsion_tol) << '\n'
      << "tol.first_solution=" << format_double(o.first_tol) << '\n'
      << "tol.mountain_pass=" << format_double(o.mp.tol) << '\n'
      << "tol.mountain_pass_accept=" << format_double(o.mp.accept_tol) << '\n'
      << "tol.inverse=1e-13\n"
      << "tol.quadrature=1e-12\n"
      << "tol.luxemburg=1e-10\n"
      << "mp.n_path=" << o.mp.n_path << '\n'
      << "mp.retension_every=" << o.mp.retension_every << '\n'
      << "mp.budget=" << o.mp.budget << '\n'
      << "embedding_trials=" << o.embedding_trials << '\n';
    for (const auto& [k, v] : config_.values()) m << "cfg." << k << '=' << v << '\n';
  }

  /// Young function named by --builtin, or the configured operator.
  YoungFunction selected_function() const {
    if (!a_.builtin.empty()) {
      const double p = a_.p.value_or(3.0), q = a_.q.value_or(2.0), eps = a_.eps.value_or(1.9);
      if (a_.builtin == "pathological") return build_pathological(PathologicalParams::make(p, q, eps));
      if (a_.builtin == "power") return power_young(p);
      if (a_.builtin == "a5") return log_primitive_young(p);
      if (a_.builtin == "exp") return exp_type();
      throw Error(ErrorCode::Config, "unknown builtin '" + a_.builtin + "' (pathological, power, a5, exp)");
    }
    require_config();
    const std::string t = config_.str("operator.type", "a5");
    return young_from_config(t, config_.num("operator.p", 3.0), config_.num("operator.q", 2.0),
                             config_.num("operator.eps", 1.9), "[operator]");
  }

  double dimension() const {
    if (a_.N) return *a_.N;
    return config_.num("operator.N", 4.0);
  }

  static void index_row(Csv& csv, const std::string& name, const IndexPair& ip) {
    csv.row(name, ip.lower, ip.upper, ip.at_infinity_lower, ip.at_infinity_upper);
  }

  int cmd_indices() {
    Csv csv(path("indices.csv"), {"function", "lower", "upper", "lower_at_infinity", "upper_at_infinity"});
    const YoungFunction f = with_computed_indices(selected_function());
    index_row(csv, f.name(), f.indices());
    out_ << f.name() << ": lower=" << format_double(f.indices().lower)
         << " upper=" << format_double(f.indices().upper) << '\n';
    if (has_config_ && a_.builtin.empty()) {
      const ProblemSpec s = problem_from_config(config_);
      index_row(csv, "upsilon", s.upsilon.indices());
      if (s.phi_star) index_row(csv, "phi_star", s.phi_star->indices());
    }
    return 0;
  }

  int cmd_conjugate() {
    const YoungFunction f = with_computed_indices(selected_function());
    const YoungFunction g = with_computed_indices(young_conjugate(f));
    Csv csv(path("conjugate.csv"), {"t", "psi", "s", "psi_bar", "young_gap"});
    for (double t : log_grid(1e-3, 1e3, 121)) {
      const double s = f.derivative(t);
      const double gv = g.value(s);
      csv.row(t, f.value(t), s, gv, f.value(t) + gv - s * t);
    }
    out_ << g.name() << ": lower=" << format_double(g.indices().lower)
         << " upper=" << format_double(g.indices().upper) << '\n';
    return 0;
  }

  int cmd_sobolev() {
    const YoungFunction f = with_computed_indices(selected_function());
    const double N = dimension();
    const YoungFunction g = with_computed_indices(sobolev_conjugate(f, N));
    Csv csv(path("sobolev_conjugate.csv"), {"t", "phi_star", "phi_star_prime"});
    for (double t : log_grid(1e-3, std::min(1e3, 0.5 * g.domain().hi), 121)) {
      csv.row(t, g.value(t), g.derivative(t));
    }
    out_ << g.name() << ": lower=" << format_double(g.indices().lower)
         << " upper=" << format_double(g.indices().upper) << " (N=" << format_double(N) << ")\n";
    return 0;
  }

  int report_hypotheses(const ProblemSpec& s, HypothesisReport* keep = nullptr) {
    std::ofstream rep(path("hypotheses.txt"), std::ios::binary);
    auto line = [&](const std::string& l) {
      rep << l << '\n';
      out_ << l << '\n';
    };
    line("problem: " + s.name + ", phi=" + s.phi.name() + ", f=" + s.f.name + ", upsilon=" + s.upsilon.name());
    bool all = true;
    auto guarded = [&](const char* tag, auto fn) {
      try {
        auto r = fn();
        line(r.message);
        all = all && r.pass;
        return r;
      } catch (const Error& e) {
        line(std::string(tag) + " FAIL: " + e.what());
        all = false;
        return decltype(fn())();
      }
    };
    HypothesisReport r;
    r.ha1 = guarded("H(a)1", [&] { return check_ha1(s); });
    r.ha2 = guarded("H(a)2", [&] { return check_ha2(s); });
    r.hf1 = guarded("H(f)1", [&] { return check_hf1(s); });
    r.hf2 = guarded("H(f)2", [&] { return check_hf2(s); });
    r.hf3 = guarded("H(f)3", [&] { return check_hf3(s); });
    line(std::string("overall: ") + (all ? "PASS" : "FAIL"));
    if (keep) *keep = r;
    return all ? 0 : 1;
  }

  int cmd_check() {
    require_config();
    return report_hypotheses(problem_from_config(config_));
  }

  int cmd_verify_example() {
    if (a_.example.empty()) throw Error(ErrorCode::Config, "verify-example needs a name (A4, A5, pathological-reaction)");
    BuiltinParams bp;
    if (a_.p) bp.p = *a_.p;
    if (a_.N) bp.N = *a_.N;
    if (a_.r) bp.r = *a_.r;
    if (a_.gamma) bp.gamma = *a_.gamma;
    if (a_.eps) bp.eps = *a_.eps;
    Builtin which;
    if (a_.example == "A5") which = Builtin::A5;
    else if (a_.example == "A4") which = Builtin::A4;
    else if (a_.example == "pathological-reaction") which = Builtin::PathologicalReaction;
    else throw Error(ErrorCode::Config, "unknown example '" + a_.example + "'");
    ProblemSpec s;
    try {
      s = builtin_example(which, bp);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::Construction) throw Error(ErrorCode::Config, e.what());
      throw;
    }
    return report_hypotheses(s);
  }

  void write_threshold(const ThresholdResult& th, const std::vector<double>& lambdas) {
    Csv csv(path("threshold.csv"), {"case", "C1", "C2", "A", "B", "theta", "lambda_star", "lambda", "r_star"});
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const double A = th.case4 ? th.case4->A : nan, B = th.case4 ? th.case4->B : nan;
    const double theta = th.case4 ? th.case4->theta : nan;
    for (double l : lambdas) {
      csv.row(std::string(to_string(th.kind)), th.C1, th.C2, A, B, theta, th.lambda_star, l, th.r_star(l));
    }
  }

  void write_kappa(const ThresholdResult& th, double lambda, double r_star) {
    Csv csv(path("kappa_curve.csv"), {"r", "kappa_bound"});
    for (const auto& k : kappa_curve(th, lambda, log_grid(r_star * 1e-3, r_star * 1e3, 121))) {
      csv.row(k.r, k.bound);
    }
  }

  int cmd_lambda_star() {
    require_config();
    const ProblemSpec s = problem_from_config(config_);
    const PipelineOptions o = options();
    const SubSolution sub = build_subsolution(s, 1.0, o.torsion_tol);
    std::mt19937_64 rng(o.seed);
    const ThresholdResult th = compute_threshold(s, sub.k1, sub.k2, rng, o.embedding_trials);
    std::vector<double> lambdas;
    if (std::isfinite(th.lambda_star)) {
      lambdas = {0.25 * th.lambda_star, 0.5 * th.lambda_star, 0.75 * th.lambda_star};
    } else {
      lambdas = {0.25, 0.5, 1.0};
    }
    if (!std::isnan(o.lambda)) lambdas.push_back(o.lambda);
    write_threshold(th, lambdas);
    const double lam = std::isnan(o.lambda) ? th.default_lambda(o.lambda_fraction) : o.lambda;
    const double rs = th.r_star(lam);
    write_kappa(th, lam, rs);
    out_ << "case=" << to_string(th.kind) << " lambda_star=" << format_double(th.lambda_star)
         << " lambda=" << format_double(lam) << " r_star=" << format_double(rs)
         << " lambda*kappa(r_star)=" << format_double(lam * th.kappa_bound(lam, rs)) << '\n';
    return 0;
  }

  void write_log(const std::string& name, const std::vector<DescentLogEntry>& log) {
    Csv csv(path(name), {"iteration", "J", "residual"});
    for (const auto& e : log) csv.row(e.iteration, e.energy, e.residual);
  }

  void write_degiorgi(const DeGiorgiReport& d) {
    Csv csv(path("degiorgi.csv"), {"n", "k_n", "y_n"});
    for (std::size_t n = 0; n < d.masses.size(); ++n) csv.row(n, d.levels[n], d.masses[n]);
  }

  int cmd_solve(bool with_mp) {
    require_config();
    const ProblemSpec s = problem_from_config(config_);
    if (report_hypotheses(s) != 0) return 1;
    PipelineOptions o = options();
    o.run_mountain_pass = with_mp;
    const PipelineResult res = run_pipeline(s, o);
    write_threshold(res.threshold, {res.lambda});
    write_log("convergence.csv", res.first.log);
    if (res.mp) write_log("mp_convergence.csv", res.mp->log);
    if (res.degiorgi) write_degiorgi(*res.degiorgi);
    std::vector<std::string> header = {"x", "u_lambda"};
    if (with_mp) header.push_back("v_lambda");
    header.push_back("u_under");
    Csv csv(path("solution.csv"), header);
    const Grid& g = s.grid;
    for (int i = -1; i <= g.n_interior; ++i) {
      const bool inside = i >= 0 && i < g.n_interior;
      const double x = i < 0 ? 0.0 : (i == g.n_interior ? g.length : g.x(i));
      const double u = inside ? res.first.state.u.values[i] : 0.0;
      const double w = inside ? res.sub.u_under.values[i] : 0.0;
      if (with_mp) {
        csv.row(x, u, inside ? res.second->u.values[i] : 0.0, w);
      } else {
        csv.row(x, u, w);
      }
    }
    out_ << "lambda=" << format_double(res.lambda) << " lambda_star=" << format_double(res.threshold.lambda_star)
         << " r_star=" << format_double(res.r_star) << '\n';
    out_ << "first: J=" << format_double(res.first.state.J_value) << " H=" << format_double(res.first.state.H_value)
         << " residual=" << format_double(res.first.state.residual) << (res.first.pinned ? " PINNED" : "") << '\n';
    bool ok = res.first.converged && !res.first.pinned;
    if (with_mp) {
      const auto& v = *res.second;
      out_ << "second: J=" << format_double(v.J_value) << " residual=" << format_double(v.residual)
           << " sup|v-u|=" << format_double((v.u.values - res.first.state.u.values).cwiseAbs().maxCoeff())
           << (res.mp->collapsed ? " COLLAPSED" : "") << '\n';
      ok = ok && res.mp->converged && !res.mp->collapsed;
    }
    for (const auto& n : res.notes) out_ << "note: " << n << '\n';
    return ok ? 0 : 1;
  }

  int cmd_degiorgi() {
    require_config();
    const ProblemSpec s = problem_from_config(config_);
    const PipelineOptions o = options();
    GridFunction u;
    if (!a_.input.empty()) {
      u = read_grid_function_csv(a_.input);
    } else {
      PipelineOptions q = o;
      q.run_mountain_pass = false;
      u = run_pipeline(s, q).first.state.u;
    }
    const YoungFunction& ps = s.phi_star_or_throw();
    const DeGiorgiReport d = degiorgi_bound(u, ps.indices().lower, s.phi.indices().upper,
                                           o.K_start_fraction * u.max_abs());
    write_degiorgi(d);
    out_ << "M=" << format_double(d.M) << " a=" << format_double(d.a) << " b=" << format_double(d.b)
         << " C=" << format_double(d.C) << " C_lsq=" << format_double(d.C_lsq)
         << " smallness_index=" << d.smallness_index << " reached_zero=" << (d.reached_zero ? 1 : 0) << '\n';
    return d.reached_zero ? 0 : 1;
  }

  Args a_;
  std::ostream& out_;
  std::ostream& err_;
  Config config_;
  bool has_config_ = false;
  std::uint64_t seed_ = 0;
};

/// Parses argv and runs one command. Exit codes: 0 ok, 1 numeric or hypothesis failure, 2 usage or config.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Orlicz-Sobolev singular Dirichlet problem toolkit", "philap"};
  Args a;
  app.add_option("command", a.command, "indices | conjugate | sobolev-conjugate | check | lambda-star | solve | "
                                       "mountain-pass | degiorgi | verify-example")
      ->required();
  app.add_option("example", a.example, "example name for verify-example");
  app.add_option("--config", a.config_path, "INI configuration file");
  app.add_option("--output-dir", a.output_dir, "directory for CSV outputs and manifest");
  app.add_option("--set", a.overrides, "section.key=value override (repeatable)");
  app.add_option("--seed", a.seed, "random seed");
  app.add_option("--builtin", a.builtin, "pathological | power | a5 | exp");
  app.add_option("--p", a.p);
  app.add_option("--q", a.q);
  app.add_option("--eps", a.eps);
  app.add_option("--N", a.N);
  app.add_option("--r", a.r);
  app.add_option("--gamma", a.gamma);
  app.add_option("--lambda", a.lambda);
  app.add_option("--input", a.input, "grid-function CSV for degiorgi");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  }
  bool known = false;
  for (const auto& c : commands()) known = known || c == a.command;
  if (!known) {
    err << "usage error: unknown command '" << a.command << "'\n";
    return 2;
  }
  try {
    return Runner(a, out, err).run();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Config ? 2 : 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace philap::cli
