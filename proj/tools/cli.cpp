#include "cli.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "properhyp/decomposition.hpp"
#include "properhyp/hyperpoly.hpp"
#include "properhyp/symmetrizer.hpp"

namespace properhyp::cli {

using nlohmann::json;

namespace {

Expr formula(const json& v, const std::string& where) {
  if (v.is_number()) return Expr(v.get<double>());
  if (!v.is_string()) throw UsageError(where + ": expected a formula string");
  try {
    return parse_expr(v.get<std::string>());
  } catch (const ParseError& e) {
    throw UsageError(where + ": " + e.what());
  }
}

double number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw UsageError(where + ": missing \"" + key + "\"");
  const auto& v = obj.at(key);
  if (!v.is_number()) throw UsageError(where + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  return obj.contains(key) ? number(obj, key, where) : fallback;
}

int integer_or(const json& obj, const char* key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) throw UsageError(where + "." + key + ": expected an integer");
  return v.get<int>();
}

std::vector<Expr> formula_list(const json& doc, const char* key, std::size_t n) {
  if (!doc.contains(key)) throw UsageError(std::string("missing \"") + key + "\"");
  const auto& arr = doc.at(key);
  if (!arr.is_array() || arr.size() != n) {
    throw UsageError(std::string("\"") + key + "\" must be an array of " + std::to_string(n) +
                     " formulas");
  }
  std::vector<Expr> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(formula(arr[i], std::string(key) + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::string scheme_name(Scheme s) {
  return s == Scheme::lax_wendroff ? "lax_wendroff" : "lax_friedrichs";
}

json exprs_to_json(const std::vector<Expr>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(e.to_string());
  return out;
}

json proper_to_json(int d, const ProperCheck& c) {
  json j;
  j["d"] = d;
  j["pass"] = c.ok;
  j["C0"] = c.C0;
  j["t"] = c.t_at;
  j["x"] = c.x_at;
  if (!c.ok) j["reason"] = c.reason;
  return j;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json out = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    out.push_back(row);
  }
  return out;
}

void emit(const json& j, const Options& opts, std::ostream& out) {
  if (opts.out.empty()) {
    out << j.dump(2) << '\n';
    return;
  }
  std::ofstream f(opts.out);
  if (!f) throw UsageError("cannot write " + opts.out);
  f << j.dump(2) << '\n';
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

GridSpec effective_grid(const ProblemFile& file, const Options& opts) {
  GridSpec g = file.grid;
  if (opts.grid) g.base_cells = *opts.grid;
  return g;
}

}  // namespace

ProblemFile parse_problem(const json& doc) {
  if (!doc.is_object()) throw UsageError("problem file must be a JSON object");
  static const std::set<std::string> known{"m",      "a",    "r",     "f",        "phi",
                                           "domain", "cone", "T",     "grid",     "check",
                                           "epsilons", "forcing_correction", "comment"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) throw UsageError("unknown key \"" + key + "\"");
  }
  ProblemFile file;
  Problem& p = file.problem;
  if (!doc.contains("m") || !doc.at("m").is_number_integer()) {
    throw UsageError("\"m\" must be an integer");
  }
  p.m = doc.at("m").get<int>();
  if (p.m < 2 || p.m > 8) throw UsageError("\"m\" must lie in 2..8");
  const auto m = static_cast<std::size_t>(p.m);
  p.a = formula_list(doc, "a", m);
  p.phi = formula_list(doc, "phi", m);
  p.r = Problem::zero_lower_order(p.m);
  if (doc.contains("r")) {
    const auto& rows = doc.at("r");
    if (!rows.is_array() || rows.size() != m) {
      throw UsageError("\"r\" must have " + std::to_string(m) + " rows");
    }
    for (std::size_t d = 0; d < m; ++d) {
      if (!rows[d].is_array() || rows[d].size() != d + 1) {
        throw UsageError("r[" + std::to_string(d) + "] must have " + std::to_string(d + 1) +
                         " entries");
      }
      for (std::size_t k = 0; k <= d; ++k) {
        p.r[d][k] = formula(rows[d][k], "r[" + std::to_string(d) + "][" + std::to_string(k) + "]");
      }
    }
  }
  p.f = doc.contains("f") ? formula(doc.at("f"), "f") : Expr();

  if (!doc.contains("cone") || !doc.at("cone").is_object()) throw UsageError("missing \"cone\"");
  p.x0 = number(doc.at("cone"), "x0", "cone");
  p.rho0 = number(doc.at("cone"), "rho0", "cone");
  p.T = number(doc, "T", "problem");
  if (doc.contains("domain")) {
    const auto& dom = doc.at("domain");
    if (!dom.is_array() || dom.size() != 2 || !dom[0].is_number() || !dom[1].is_number()) {
      throw UsageError("\"domain\" must be [x_lo, x_hi]");
    }
    p.x_lo = dom[0].get<double>();
    p.x_hi = dom[1].get<double>();
  } else {
    p.x_lo = p.x0 - p.rho0;
    p.x_hi = p.x0 + p.rho0;
  }

  if (doc.contains("grid")) {
    const auto& g = doc.at("grid");
    if (!g.is_object()) throw UsageError("\"grid\" must be an object");
    file.grid.dx = number_or(g, "dx", file.grid.dx, "grid");
    file.grid.base_cells = integer_or(g, "cells", 0, "grid");
    file.grid.cfl = number_or(g, "cfl", file.grid.cfl, "grid");
    if (g.contains("scheme")) {
      const auto s = g.at("scheme").is_string() ? g.at("scheme").get<std::string>() : "";
      if (s == "lax_friedrichs") {
        file.grid.scheme = Scheme::lax_friedrichs;
      } else if (s == "lax_wendroff") {
        file.grid.scheme = Scheme::lax_wendroff;
      } else {
        throw UsageError("grid.scheme must be \"lax_friedrichs\" or \"lax_wendroff\"");
      }
    }
  }
  if (!(file.grid.cfl > 0.0) || file.grid.cfl > 0.9) {
    throw UsageError("grid.cfl must lie in (0, 0.9]");
  }
  if (!(file.grid.dx > 0.0)) throw UsageError("grid.dx must be positive");
  if (file.grid.base_cells < 0) throw UsageError("grid.cells must be positive");

  if (doc.contains("check")) {
    const auto& c = doc.at("check");
    if (!c.is_object()) throw UsageError("\"check\" must be an object");
    file.check.nx = integer_or(c, "nx", file.check.nx, "check");
    file.check.nt = integer_or(c, "nt", file.check.nt, "check");
    file.check.random_vectors = integer_or(c, "random_vectors", file.check.random_vectors, "check");
    file.check.ceiling = number_or(c, "ceiling", file.check.ceiling, "check");
    if (c.contains("exact")) {
      if (!c.at("exact").is_boolean()) throw UsageError("check.exact must be a boolean");
      file.check.exact = c.at("exact").get<bool>();
    }
    if (file.check.nx < 1 || file.check.nt < 1 || file.check.random_vectors < 0) {
      throw UsageError("check.nx and check.nt must be positive");
    }
  }

  if (doc.contains("epsilons")) {
    const auto& e = doc.at("epsilons");
    if (!e.is_array()) throw UsageError("\"epsilons\" must be an array");
    for (const auto& v : e) {
      if (!v.is_number()) throw UsageError("\"epsilons\" must hold numbers");
      file.epsilons.push_back(v.get<double>());
    }
  }

  try {
    validate(p);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return file;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
  return parse_problem(doc);
}

json problem_to_json(const ProblemFile& file) {
  const Problem& p = file.problem;
  json j;
  j["m"] = p.m;
  j["a"] = exprs_to_json(p.a);
  json r = json::array();
  for (const auto& row : p.r) r.push_back(exprs_to_json(row));
  j["r"] = r;
  j["f"] = p.f.to_string();
  j["phi"] = exprs_to_json(p.phi);
  j["domain"] = {p.x_lo, p.x_hi};
  j["cone"] = {{"x0", p.x0}, {"rho0", p.rho0}};
  j["T"] = p.T;
  json g = {{"dx", file.grid.dx}, {"cfl", file.grid.cfl}, {"scheme", scheme_name(file.grid.scheme)}};
  if (file.grid.base_cells > 0) g["cells"] = file.grid.base_cells;
  j["grid"] = g;
  j["check"] = {{"nx", file.check.nx},
                {"nt", file.check.nt},
                {"random_vectors", file.check.random_vectors},
                {"exact", file.check.exact},
                {"ceiling", file.check.ceiling}};
  if (!file.epsilons.empty()) j["epsilons"] = file.epsilons;
  return j;
}

std::vector<TXPoint> check_grid(const ProblemFile& file, const Options& opts) {
  const Problem& p = file.problem;
  const int nx = opts.grid ? std::max(*opts.grid, 1) : file.check.nx;
  const int nt = file.check.nt;
  std::vector<TXPoint> out;
  for (int k = 0; k < nt; ++k) {
    const double t = nt == 1 ? 0.0 : p.T * k / (nt - 1);
    for (int i = 0; i < nx; ++i) {
      double x = nx == 1 ? 0.5 * (p.x_lo + p.x_hi) : p.x_lo + (p.x_hi - p.x_lo) * i / (nx - 1);
      if (std::abs(x) < 1e-14 * (1.0 + std::abs(p.x_hi - p.x_lo))) x = 0.0;
      out.push_back({t, x});
    }
  }
  return out;
}

int cmd_check(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream&) {
  const Problem& p = file.problem;
  const HPoly P = p.principal();
  const auto grid = check_grid(file, opts);
  std::vector<double> xs;
  for (const auto& pt : grid) {
    if (pt.t == grid.front().t) xs.push_back(pt.x);
  }

  json rep;
  bool pass = true;
  json A;
  double speed = 0.0;
  bool hyperbolic = true;
  try {
    speed = tau_max(P, xs);
    A["pass"] = true;
    A["tau_max"] = speed;
  } catch (const NotHyperbolic& e) {
    hyperbolic = false;
    A["pass"] = false;
    A["x"] = e.x();
    A["reason"] = e.what();
  }
  rep["hypothesis_A"] = A;
  pass = pass && hyperbolic;

  if (hyperbolic) {
    const auto co = estimate_co_constant(P, xs);
    json B;
    B["pass"] = !co.unbounded;
    B["x"] = co.x_at;
    if (co.unbounded) {
      B["M"] = nullptr;
      B["reason"] = "root ratio unbounded";
    } else {
      B["M"] = co.M;
      B["M_tilde"] = derived_co_constant(co.M, 1.0 / p.m);
    }
    rep["hypothesis_B"] = B;
    pass = pass && !co.unbounded;

    json C = json::array();
    for (int d = 0; d < p.m; ++d) {
      const auto c = check_proper(p.r[static_cast<std::size_t>(d)], P, d, grid);
      C.push_back(proper_to_json(d, c));
      pass = pass && c.ok;
    }
    rep["hypothesis_C"] = C;

    json L = json::array();
    const auto l1 = check_l1_hypotheses(p, grid);
    for (std::size_t d = 0; d < l1.size(); ++d) {
      L.push_back(proper_to_json(static_cast<int>(d), l1[d]));
      pass = pass && l1[d].ok;
    }
    rep["l1"] = L;
  }
  rep["points"] = grid.size();
  rep["pass"] = pass;
  emit(rep, opts, out);
  return pass ? kPass : kFail;
}

int cmd_symmetrizer(const ProblemFile& file, const Options& opts, std::ostream& out,
                    std::ostream&) {
  const Problem& p = file.problem;
  const BlockSystem bs(p);
  const auto grid = check_grid(file, opts);
  BoundOptions bo;
  bo.random_vectors = file.check.random_vectors;
  bo.seed = opts.seed;
  bo.exact = file.check.exact;
  bo.ceiling = file.check.ceiling;
  const auto report = verify_bounds(bs, grid, bo);

  json rep;
  rep["points"] = report.points;
  rep["tau_max"] = report.tau_max;
  json bounds = json::object();
  for (const auto& e : report.entries) {
    bounds[e.name] = {{"value", e.value},
                      {"limit", e.limit},
                      {"kind", e.is_max ? "max" : "min"},
                      {"pass", e.pass}};
  }
  rep["bounds"] = bounds;
  json samples = json::array();
  for (double x : {p.x_lo, 0.5 * (p.x_lo + p.x_hi), p.x_hi}) {
    const Eigen::VectorXd xi = bs.Xi(x);
    samples.push_back({{"x", x},
                       {"Q", matrix_to_json(bs.Q(x))},
                       {"Xi", std::vector<double>(xi.data(), xi.data() + xi.size())},
                       {"weak_coercivity", weak_coercivity(bs, x)}});
  }
  rep["samples"] = samples;
  rep["pass"] = report.pass;
  emit(rep, opts, out);
  return report.pass ? kPass : kFail;
}

void write_trace_csv(const EnergyTrace& trace, std::ostream& os) {
  os << "t,energy,forcing_norm";
  for (int d = 0; d < trace.m; ++d) os << ",dt" << d << "_norm";
  os << ",cone_lo,cone_hi\n";
  for (const auto& r : trace.rows) {
    os << fmt(r.t) << ',' << fmt(r.energy) << ',' << fmt(r.forcing_norm);
    for (double v : r.dt_norms) os << ',' << fmt(v);
    os << ',' << fmt(r.cone_lo) << ',' << fmt(r.cone_hi) << '\n';
  }
}

int cmd_solve(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream& err) {
  if (!opts.force) {
    std::ostringstream sink;
    Options quiet = opts;
    quiet.out.clear();
    quiet.grid.reset();
    if (cmd_check(file, quiet, sink, err) != kPass) {
      err << "hypotheses fail; rerun with --force to solve anyway\n" << sink.str();
      return kFail;
    }
  }
  const GridSpec spec = effective_grid(file, opts);
  Grid grid;
  Grid fine;
  try {
    grid = make_grid(file.problem, spec);
    GridSpec fine_spec = spec;
    fine_spec.base_cells = grid.n_base * 2;
    fine = make_grid(file.problem, fine_spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  SolveResult res;
  double c_refined = 0.0;
  try {
    res = solve(file.problem, grid);
    c_refined = empirical_constant(solve(file.problem, fine).trace);
  } catch (const NonFinite& e) {
    err << "solver failed: " << e.what() << '\n';
    return kFail;
  }
  const double c = empirical_constant(res.trace);
  const bool finite = std::isfinite(c) && std::isfinite(c_refined);
  bool stable = false;
  if (finite) {
    const double lo = std::min(c, c_refined);
    const double hi = std::max(c, c_refined);
    stable = (hi == 0.0) || (lo > 0.0 && hi <= 2.0 * lo);
  }
  const bool td = res.trace.rows.front().energy == 0.0 && c == 0.0
                      ? true
                      : time_derivative_bound_holds(res.trace, c);

  json summary;
  summary["C_emp"] = c;
  summary["C_refined"] = c_refined;
  summary["drift"] = total_energy_drift(res.trace);
  summary["time_derivative_bound"] = td;
  summary["weak_coercivity"] = res.trace.weak_coercivity;
  summary["tau_max"] = grid.tau_max;
  summary["dx"] = grid.dx;
  summary["dt"] = grid.dt;
  summary["steps"] = grid.n_steps;
  summary["T0"] = grid.T0;
  summary["energy_T"] = res.trace.rows.back().energy;
  summary["pass"] = finite && stable && td;

  if (opts.out.empty()) {
    write_trace_csv(res.trace, out);
    err << summary.dump(2) << '\n';
  } else {
    std::ofstream f(opts.out);
    if (!f) throw UsageError("cannot write " + opts.out);
    write_trace_csv(res.trace, f);
    out << summary.dump(2) << '\n';
  }
  return summary["pass"].get<bool>() ? kPass : kFail;
}

int cmd_sweep(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream&) {
  if (file.epsilons.empty()) throw UsageError("sweep needs a non-empty \"epsilons\" array");
  const GridSpec spec = effective_grid(file, opts);
  Options check_opts = opts;
  check_opts.grid.reset();
  const auto grid = check_grid(file, check_opts);
  SweepReport report;
  try {
    report = nuij_sweep(file.problem, spec, file.epsilons, grid);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto entry_json = [](const SweepEntry& e) {
    json j;
    j["eps"] = e.eps;
    j["C_emp"] = e.C_emp;
    j["energy_T"] = e.energy_T;
    j["dist_prev"] = e.dist_prev ? json(*e.dist_prev) : json(nullptr);
    j["dist_zero"] = e.dist_zero ? json(*e.dist_zero) : json(nullptr);
    j["transfer_ratio"] = e.transfer_ratio;
    j["transfer_ok"] = e.transfer_ok;
    if (!e.error.empty()) j["error"] = e.error;
    return j;
  };
  json rep;
  rep["tau_max"] = report.tau_max;
  rep["dx"] = report.dx;
  rep["dt"] = report.dt;
  rep["steps"] = report.n_steps;
  rep["reference"] = entry_json(report.reference);
  json entries = json::array();
  for (const auto& e : report.entries) entries.push_back(entry_json(e));
  rep["entries"] = entries;
  rep["cauchy"] = report.cauchy;
  rep["pass"] = report.pass;
  emit(rep, opts, out);
  return report.pass ? kPass : kFail;
}

int cmd_l1(const ProblemFile& file, const Options& opts, std::ostream& out, std::ostream&) {
  const auto derived = derived_operator(file.problem);
  ProblemFile next = file;
  next.problem = derived.problem;
  json j = problem_to_json(next);
  j["forcing_correction"] = exprs_to_json(derived.corrections);
  emit(j, opts, out);
  return kPass;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperbolic Cauchy problems: hypothesis checks, symmetrizers, solves and sweeps"};
  app.require_subcommand(1);
  Options opts;
  std::string path;
  int grid = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("file", path, "Problem file (JSON)")->required();
    sub->add_option("--grid", grid,
                    "Resolution: sample points for check/symmetrizer, cells across the cone "
                    "base for solve/sweep")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opts.seed, "Seed for random test vectors");
    sub->add_option("--out", opts.out, "Output file");
    sub->add_flag("--force", opts.force, "Solve even if the hypotheses fail");
  };
  auto* check = app.add_subcommand("check", "Check the hypotheses on the sample grid");
  auto* sym = app.add_subcommand("symmetrizer", "Report symmetrizer bounds");
  auto* sol = app.add_subcommand("solve", "Integrate and write the energy trace");
  auto* sweep = app.add_subcommand("sweep", "Nuij regularization sweep");
  auto* l1 = app.add_subcommand("l1", "Emit the problem satisfied by u_x");
  for (auto* s : {check, sym, sol, sweep, l1}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kPass;
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kUsage;
  }
  if (grid > 0) opts.grid = grid;

  try {
    const ProblemFile file = load_problem(path);
    if (*check) return cmd_check(file, opts, out, err);
    if (*sym) return cmd_symmetrizer(file, opts, out, err);
    if (*sol) return cmd_solve(file, opts, out, err);
    if (*sweep) return cmd_sweep(file, opts, out, err);
    return cmd_l1(file, opts, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const EvalError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kFail;
  }
}

}  // namespace properhyp::cli
