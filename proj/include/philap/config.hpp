#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "philap/error.hpp"
#include "philap/hypotheses.hpp"
#include "philap/numerics.hpp"
#include "philap/pipeline.hpp"

namespace philap {

/// Flat `section.key -> value` view of an INI file.
class Config {
 public:
  Config() = default;

  static const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s = {
        {"operator", {"type", "p", "q", "eps", "N"}},
        {"reaction",
         {"type", "r", "gamma", "singular_coeff", "upsilon", "upsilon_p", "upsilon_q", "upsilon_eps", "c1",
          "c2"}},
        {"hypotheses", {"mu", "R", "T_max"}},
        {"grid", {"length", "cells"}},
        {"solver",
         {"lambda", "lambda_fraction", "seed", "n_path", "retension_every", "mp_budget", "mp_tol",
          "mp_accept_tol", "mp_step", "torsion_tol", "first_tol", "embedding_trials", "max_iterations",
          "K_start_fraction"}},
    };
    return s;
  }

  static Config from_file(const std::string& path) {
    boost::property_tree::ptree pt;
    try {
      boost::property_tree::ini_parser::read_ini(path, pt);
    } catch (const std::exception& e) {
      throw Error(ErrorCode::Config, std::string("cannot parse config: ") + e.what());
    }
    Config c;
    for (const auto& [section, body] : pt) {
      if (body.empty()) throw Error(ErrorCode::Config, "top-level key outside a section: " + section);
      for (const auto& [key, val] : body) c.set(section + "." + key, val.get_value<std::string>());
    }
    return c;
  }

  void set(const std::string& dotted, const std::string& value) {
    const auto dot = dotted.find('.');
    if (dot == std::string::npos) throw Error(ErrorCode::Config, "expected section.key, got " + dotted);
    const std::string section = dotted.substr(0, dot);
    const std::string key = dotted.substr(dot + 1);
    const auto it = schema().find(section);
    if (it == schema().end()) throw Error(ErrorCode::Config, "unknown section [" + section + "]");
    if (!it->second.count(key)) throw Error(ErrorCode::Config, "unknown key " + key + " in [" + section + "]");
    values_[dotted] = value;
  }

  /// `section.key=value`.
  void apply_override(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::Config, "override must be key=value: " + assignment);
    set(assignment.substr(0, eq), assignment.substr(eq + 1));
  }

  bool has(const std::string& k) const { return values_.count(k) > 0; }

  std::string str(const std::string& k, const std::string& def) const {
    const auto it = values_.find(k);
    return it == values_.end() ? def : it->second;
  }

  double num(const std::string& k, double def) const {
    const auto it = values_.find(k);
    if (it == values_.end()) return def;
    try {
      std::size_t pos = 0;
      const double v = std::stod(it->second, &pos);
      if (pos != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw Error(ErrorCode::Config, "key " + k + " expects a number, got '" + it->second + "'");
    }
  }

  long integer(const std::string& k, long def) const {
    const double v = num(k, static_cast<double>(def));
    if (v != std::floor(v)) throw Error(ErrorCode::Config, "key " + k + " expects an integer");
    return static_cast<long>(v);
  }

  /// Canonical text: sorted `key=value` lines.
  std::string canonical() const {
    std::ostringstream os;
    for (const auto& [k, v] : values_) os << k << '=' << v << '\n';
    return os.str();
  }

  std::uint64_t hash() const { return fnv1a(canonical()); }

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

inline YoungFunction young_from_config(const std::string& type, double p, double q, double eps,
                                       const std::string& what) {
  if (type == "power") {
    if (!(p > 1.0)) throw Error(ErrorCode::Config, what + ": power type needs p > 1");
    return power_young(p);
  }
  if (type == "monomial") return monomial(p);
  if (type == "a5") return log_primitive_young(p);
  if (type == "pathological") return build_pathological(PathologicalParams::make(p, q, eps));
  throw Error(ErrorCode::Config, what + ": unknown type '" + type + "'");
}

inline ProblemSpec problem_from_config(const Config& c) {
  ProblemSpec s;
  const std::string op = c.str("operator.type", "a5");
  const double p = c.num("operator.p", 3.0);
  const double N = c.num("operator.N", 4.0);
  s.name = "config:" + op;
  s.N = N;
  if (op == "a5") {
    s.phi = log_primitive_young(p);
    s.a = [p](double t) { return std::pow(t, p - 2.0) * std::log1p(t); };
    s.a_prime = [p](double t) {
      return (p - 2.0) * std::pow(t, p - 3.0) * std::log1p(t) + std::pow(t, p - 2.0) / (1.0 + t);
    };
  } else if (op == "power") {
    s.phi = power_young(p);
    s.a = [p](double t) { return std::pow(t, p - 2.0); };
    s.a_prime = [p](double t) { return (p - 2.0) * std::pow(t, p - 3.0); };
  } else if (op == "pathological") {
    s.phi = young_from_config(op, p, c.num("operator.q", 2.0), c.num("operator.eps", 1.9), "[operator]");
    operator_from_phi(s);
  } else {
    throw Error(ErrorCode::Config, "[operator]: unknown type '" + op + "'");
  }

  const std::string rt = c.str("reaction.type", "power-singular");
  const double r = c.num("reaction.r", 3.5);
  s.gamma = c.num("reaction.gamma", 0.5);
  s.c1 = c.num("reaction.c1", 1.0);
  s.c2 = c.num("reaction.c2", 1.0);
  const std::string ut = c.str("reaction.upsilon", "monomial");
  s.upsilon = young_from_config(ut, c.num("reaction.upsilon_p", r + 1.0), c.num("reaction.upsilon_q", 2.0),
                                c.num("reaction.upsilon_eps", 1.9), "[reaction] upsilon");
  if (rt == "power-singular") {
    s.f = power_reaction(r, c.num("reaction.singular_coeff", 1.0), s.gamma);
  } else if (rt == "power") {
    s.f = power_reaction(r, c.num("reaction.singular_coeff", 0.0), s.gamma);
  } else if (rt == "log1p") {
    s.f = log1p_reaction();
    s.f.singular_coeff = c.num("reaction.singular_coeff", 0.0);
    s.f.gamma = s.gamma;
    if (s.f.singular_coeff != 0.0) s.f.name += " + s^-gamma";
  } else if (rt == "young-ratio") {
    s.f = young_ratio_reaction(s.upsilon, c.num("reaction.singular_coeff", 1.0), s.gamma);
  } else {
    throw Error(ErrorCode::Config, "[reaction]: unknown type '" + rt + "'");
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mu = c.num("hypotheses.mu", nan);
  s.R = c.num("hypotheses.R", nan);
  s.T_max = c.num("hypotheses.T_max", 1e4);
  const long cells = c.integer("grid.cells", 128);
  if (cells < 2) throw Error(ErrorCode::Config, "[grid] cells must be at least 2");
  s.grid = Grid(static_cast<int>(cells - 1), c.num("grid.length", 1.0));
  s.prepare();
  return s;
}

inline PipelineOptions options_from_config(const Config& c) {
  PipelineOptions o;
  o.lambda = c.num("solver.lambda", o.lambda);
  o.lambda_fraction = c.num("solver.lambda_fraction", o.lambda_fraction);
  o.seed = static_cast<std::uint64_t>(c.integer("solver.seed", static_cast<long>(o.seed)));
  o.embedding_trials = static_cast<int>(c.integer("solver.embedding_trials", o.embedding_trials));
  o.torsion_tol = c.num("solver.torsion_tol", o.torsion_tol);
  o.first_tol = c.num("solver.first_tol", o.first_tol);
  o.max_iterations = static_cast<int>(c.integer("solver.max_iterations", o.max_iterations));
  o.K_start_fraction = c.num("solver.K_start_fraction", o.K_start_fraction);
  o.mp.n_path = static_cast<int>(c.integer("solver.n_path", o.mp.n_path));
  o.mp.retension_every = static_cast<int>(c.integer("solver.retension_every", o.mp.retension_every));
  o.mp.budget = c.integer("solver.mp_budget", o.mp.budget);
  o.mp.tol = c.num("solver.mp_tol", o.mp.tol);
  o.mp.accept_tol = c.num("solver.mp_accept_tol", o.mp.accept_tol);
  o.mp.step = c.num("solver.mp_step", o.mp.step);
  if (o.mp.n_path < 3) throw Error(ErrorCode::Config, "[solver] n_path must be at least 3");
  if (o.embedding_trials < 1) throw Error(ErrorCode::Config, "[solver] embedding_trials must be positive");
  return o;
}

}  // namespace philap
