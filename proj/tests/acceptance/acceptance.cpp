// Prints one line per acceptance criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cli.hpp"
#include "poly2.hpp"
#include "properhyp/decomposition.hpp"
#include "properhyp/hyperpoly.hpp"
#include "properhyp/solver.hpp"
#include "properhyp/symmetrizer.hpp"

using namespace properhyp;
using cli::ProblemFile;
using nlohmann::json;

namespace {

const std::string kData = PROPERHYP_TEST_DATA;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Notes {
 public:
  void fail(const std::string& what) {
    pass_ = false;
    if (first_.empty()) first_ = what;
  }
  void require(bool ok, const std::string& what) {
    if (!ok) fail(what);
  }
  template <class... Args>
  void add(const char* fmt, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, args...);
    if (!text_.empty()) text_ += ", ";
    text_ += buf;
  }
  Outcome done() const {
    return {pass_, pass_ ? text_ : first_ + " [" + text_ + "]"};
  }

 private:
  bool pass_ = true;
  std::string first_;
  std::string text_;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PointPoly random_hyperbolic(std::mt19937_64& rng, int m, double lo, double hi, double min_gap = 0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> roots(m);
  bool separated = false;
  while (!separated) {
    for (double& r : roots) r = u(rng);
    std::sort(roots.begin(), roots.end());
    separated = true;
    for (int k = 1; k < m; ++k) separated &= roots[k] - roots[k - 1] >= min_gap;
  }
  return roots_of(poly_from_roots(roots));
}

std::vector<double> combine(const std::vector<double>& ell, const PointPoly& p) {
  auto red = reduced_polys(p);
  std::vector<double> R(red[0].size(), 0.0);
  for (std::size_t k = 0; k < ell.size(); ++k)
    for (std::size_t i = 0; i < R.size(); ++i) R[i] += ell[k] * red[k][i];
  return R;
}

// R from l and the roots, accumulated in extended precision.
std::vector<double> combine_exact(const std::vector<double>& ell, const PointPoly& p) {
  const std::size_t m = p.roots.size();
  std::vector<long double> R(m, 0.0L);
  for (std::size_t k = 0; k < m; ++k) {
    std::vector<long double> q{1.0L};
    for (std::size_t j = 0; j < m; ++j) {
      if (j == k) continue;
      q.push_back(0.0L);
      for (std::size_t i = q.size() - 1; i > 0; --i) q[i] -= static_cast<long double>(p.roots[j]) * q[i - 1];
    }
    for (std::size_t i = 0; i < m; ++i) R[i] += static_cast<long double>(ell[k]) * q[i];
  }
  return {R.begin(), R.end()};
}

ProblemFile load(const std::string& name) { return cli::load_problem(kData + "/" + name); }

Outcome symmetrizer_identities() {
  auto t0 = Clock::now();
  Notes n;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  double worst_qa = 0, worst_det = 0, worst_quad = 0, worst_sum = 0, min_eig = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int m = 2 + trial % 4;
    PointPoly p = random_hyperbolic(rng, m, -5, 5);
    SylvesterBlock b = sylvester_block(p);
    if ((b.Q - b.Q.transpose()).norm() != 0.0) n.fail("Q not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b.Q);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff() / (1 + b.Q.norm()));
    Eigen::MatrixXd QA = b.Q * b.A;
    worst_qa = std::max(worst_qa, (QA - QA.transpose()).norm() / (1 + QA.norm()));
    double det = 1;
    for (int j = 0; j < m; ++j)
      for (int k = j + 1; k < m; ++k) det *= std::pow(p.roots[j] - p.roots[k], 2);
    if ((b.Q - b.W.transpose() * b.W).norm() > 1e-12 * (1 + b.Q.norm())) n.fail("Q != W^T W");
    const double det_w = b.W.fullPivLu().determinant();
    worst_det = std::max(worst_det, std::abs(det_w * det_w - det) / det);
    Eigen::VectorXd v(m);
    for (int j = 0; j < m; ++j) v[j] = g(rng);
    double sum = (b.W * v).squaredNorm();
    worst_quad = std::max(worst_quad, std::abs(v.dot(b.Q * v) - sum) / std::max(1.0, sum));
    auto dp = poly_derivative(p.coeffs);
    std::vector<double> s(dp.size(), 0.0);
    for (const auto& r : reduced_polys(p))
      for (std::size_t i = 0; i < s.size(); ++i) s[i] += r[i];
    double scale = 0, err = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      scale = std::max(scale, std::abs(dp[i]));
      err = std::max(err, std::abs(s[i] - dp[i]));
    }
    worst_sum = std::max(worst_sum, err / scale);
  }
  const double secs = seconds_since(t0);
  n.require(min_eig >= -1e-12, "Q not positive semidefinite");
  n.require(worst_qa <= 1e-9, "QA not symmetric");
  n.require(worst_det <= 1e-6, "det Q mismatch");
  n.require(worst_quad <= 1e-12, "(Qv,v) mismatch");
  n.require(worst_sum <= 1e-9, "sum of reduced polynomials");
  n.require(secs < 10, "too slow");
  n.add("QA %.1e", worst_qa);
  n.add("det %.1e", worst_det);
  n.add("quad %.1e", worst_quad);
  n.add("sum %.1e", worst_sum);
  n.add("%.2fs", secs);
  return n.done();
}

Outcome interlacing_and_peyser() {
  auto t0 = Clock::now();
  Notes n;
  std::mt19937_64 rng(2);
  int peyser_bad = 0, pq_bad = 0;
  double worst_ratio = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = 2 + trial % 5;
    PointPoly p = random_hyperbolic(rng, m, -5, 5);
    MonicDerivative d = monic_tau_derivative(p, m - 1);
    for (int j = 1; j < m; ++j) {
      auto [lo, hi] = peyser_bounds(p.roots, j);
      double lam = d.roots[j - 1];
      if (lam < lo - 1e-10 || lam > hi + 1e-10) ++peyser_bad;
    }
    CoEstimate M = co_ratio(p);
    CoEstimate Md = co_ratio(d.as_point_poly());
    if (M.unbounded || Md.unbounded) continue;
    double bound = derived_co_constant(M.M, 1.0 / m);
    worst_ratio = std::max(worst_ratio, Md.M / bound);
    if (Md.M > bound * (1 + 1e-12)) ++pq_bad;
  }
  const double secs = seconds_since(t0);
  n.require(peyser_bad == 0, "Peyser bracket violated");
  n.require(pq_bad == 0, "derived co constant exceeded");
  n.require(secs < 10, "too slow");
  n.add("peyser violations %d", peyser_bad);
  n.add("max M'/M~ %.3f", worst_ratio);
  n.add("%.2fs", secs);
  return n.done();
}

Outcome decomposition_round_trip() {
  Notes n;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  std::normal_distribution<double> g;
  double worst_res = 0;
  int forward_bad = 0, backward_bad = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int m = 2 + trial % 5;
    PointPoly p = random_hyperbolic(rng, m, -5, 5, 0.01);
    std::vector<double> R(m);
    for (double& r : R) r = u(rng);
    auto ell = lagrange_decompose(R, p);
    auto back = combine_exact(ell, p);
    double scale = 1;
    for (double r : R) scale = std::max(scale, std::abs(r));
    for (int i = 0; i < m; ++i) worst_res = std::max(worst_res, std::abs(back[i] - R[i]) / scale);

    // forward: |l| <= C0 gives (R.v)^2 <= C0^2 m (Qv, v)
    const double C0 = std::abs(*std::max_element(ell.begin(), ell.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    }));
    Eigen::MatrixXd Q = jannelli_q(p).Q;
    auto rv = vec(R, m);
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(rv.data(), m);
    double C = 0;
    for (int i = 0; i < 1000; ++i) {
      Eigen::VectorXd v(m);
      for (int j = 0; j < m; ++j) v[j] = g(rng);
      double lhs = std::pow(r.dot(v), 2), qv = v.dot(Q * v);
      if (lhs > C0 * C0 * m * qv * (1 + 1e-9) + 1e-12) ++forward_bad;
      if (qv > 0) C = std::max(C, lhs / qv);
    }
    // backward: the sharp quadratic constant bounds every |l_k| by its square root
    Eigen::VectorXd best = Q.ldlt().solve(r);
    C = std::max(C, r.dot(best));
    auto mn = minnorm_decompose(R, p);
    for (double l : mn.coeffs)
      if (std::abs(l) > std::sqrt(C) * (1 + 1e-6) + 1e-9) ++backward_bad;
  }
  n.require(worst_res <= 1e-8, "Lagrange residual");
  n.require(forward_bad == 0, "coefficient bound does not give the quadratic bound");
  n.require(backward_bad == 0, "quadratic bound does not give the coefficient bound");

  std::vector<double> scaled;
  double prev = 0;
  bool growing = true;
  for (double x : {1e-1, 1e-2, 1e-3, 1e-4}) {
    PointPoly p = roots_of(poly_from_roots(std::vector<double>{-1, -x, x, 1}));
    auto ell = lagrange_decompose(std::vector<double>{0, 1, 0, -1}, p);
    double mx = 0;
    for (double l : ell) mx = std::max(mx, std::abs(l));
    scaled.push_back(mx * 2 * x);
    growing &= mx > prev;
    prev = mx;
  }
  for (double s : scaled) n.require(std::abs(s - 1) < 0.02, "coefficients not ~ 1/(2x)");
  n.require(growing, "coefficients do not blow up");

  ProblemFile f = load("m4_not_decomposable.json");
  std::vector<TXPoint> grid;
  for (int i = -20; i <= 20; ++i) grid.push_back({0, i * 0.025});
  auto pc = check_proper(f.problem.r[3], f.problem.principal(), 3, grid);
  n.require(!pc.ok && std::abs(pc.x_at) < 0.03, "check_proper misses the failure at x = 0");

  n.add("residual %.1e", worst_res);
  n.add("2x max|l| at x=1e-4: %.4f", scaled.back());
  n.add("fails at x=%.3g", pc.x_at);
  return n.done();
}

Outcome nuij() {
  Notes n;
  double worst_gap = 1, worst_shift = 1;
  for (int m = 2; m <= 5; ++m) {
    const double c = 0.7;
    std::vector<double> roots(m, c);
    PointPoly p = roots_of(poly_from_roots(roots));
    std::vector<double> gap, shift;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      PointPoly q = nuij_regularize(p, eps);
      double gmin = 1e300, smax = 0;
      for (int k = 0; k < m; ++k) smax = std::max(smax, std::abs(q.roots[k] - c));
      for (int k = 1; k < m; ++k) gmin = std::min(gmin, q.roots[k] - q.roots[k - 1]);
      gap.push_back(gmin / eps);
      shift.push_back(smax / eps);
    }
    auto spread = [](const std::vector<double>& v) {
      return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
    };
    worst_gap = std::max(worst_gap, spread(gap));
    worst_shift = std::max(worst_shift, spread(shift));
    n.require(gap.back() > 0, "regularized roots not distinct");
  }
  n.require(worst_gap <= 1.2, "gap constant unstable");
  n.require(worst_shift <= 1.2, "shift constant unstable");

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  std::bernoulli_distribution repeat(0.4);
  double worst_transfer = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const int m = 2 + trial % 4;
    std::vector<double> roots;
    for (int k = 0; k < m; ++k) roots.push_back(k > 0 && repeat(rng) ? roots.back() : std::round(u(rng) * 4) / 4);
    std::sort(roots.begin(), roots.end());
    PointPoly p = roots_of(poly_from_roots(roots));
    std::vector<double> ell(m);
    for (double& l : ell) l = u(rng);
    for (const auto& cl : p.clusters)
      for (int k : cl) ell[k] = ell[cl.front()];
    for (double eps : {1e-1, 1e-2, 1e-3, 1e-4}) {
      auto tr = transfer_to_nuij(ell, p, nuij_regularize(p, eps));
      for (double cf : tr.coeffs) worst_transfer = std::max(worst_transfer, std::abs(cf) / tr.bound);
    }
  }
  n.require(worst_transfer <= 1 + 1e-8, "transfer bound exceeded");
  n.add("gap spread %.4f", worst_gap);
  n.add("shift spread %.4f", worst_shift);
  n.add("max transfer ratio %.3f", worst_transfer);
  return n.done();
}

Outcome energy_estimate() {
  auto t0 = Clock::now();
  Notes n;
  ProblemFile wave = load("c01_wave.json");
  std::vector<double> xs;
  for (int i = 0; i <= 100; ++i) xs.push_back(wave.problem.x0 - wave.problem.rho0 + i * wave.problem.rho0 / 50);
  const double tmax = tau_max(wave.problem.principal(), xs);
  wave.problem.T = wave.problem.rho0 / (2 * tmax);

  std::vector<double> drift, cemp;
  for (double dx : {1e-3, 5e-4}) {
    Grid g = make_grid(wave.problem, {.dx = dx, .cfl = 0.5});
    auto res = solve(wave.problem, g);
    drift.push_back(total_energy_drift(res.trace));
    cemp.push_back(empirical_constant(res.trace));
    n.require(time_derivative_bound_holds(res.trace, cemp.back()), "time derivative bound");
  }
  const double halving = drift[1] / drift[0];
  n.require(drift[0] <= 0.02, "drift above 2%");
  n.require(halving >= 0.25 && halving <= 0.75, "drift does not halve");
  n.require(cemp[0] >= 0.95 && cemp[0] <= 1.10, "C_emp outside [0.95, 1.10]");

  ProblemFile var = load("c04_variable.json");
  auto verdict = verify_energy_estimate(var.problem, {.dx = 1e-3, .cfl = 0.5});
  n.require(verdict.pass, "variable coefficient constant unstable");
  const double secs = seconds_since(t0);
  n.require(secs < 60, "too slow");
  n.add("drift %.3g%%", drift[0] * 100);
  n.add("halved ratio %.3f", halving);
  n.add("C_emp %.4f", cemp[0]);
  n.add("variable C_emp %.4f/%.4f", verdict.C_emp, verdict.C_refined);
  n.add("%.1fs", secs);
  return n.done();
}

Outcome derived_operator_checks() {
  using testing::Poly2;
  Notes n;
  std::mt19937_64 rng(6);
  int exact = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Problem p;
    p.m = 2 + trial % 3;
    for (int k = 0; k < p.m; ++k) p.a.push_back(parse_expr(testing::random_poly(rng, 2, false).to_formula()));
    p.r = Problem::zero_lower_order(p.m);
    for (int d = 0; d < p.m; ++d)
      for (int k = 0; k <= d; ++k) p.r[d][k] = parse_expr(testing::random_poly(rng, 2).to_formula());
    p.f = parse_expr(testing::random_poly(rng, 3).to_formula());
    p.phi.assign(p.m, Expr());
    DerivedProblem dp = derived_operator(p);
    Poly2 u = testing::random_poly(rng, 4);
    Poly2 lhs = testing::apply_operator(dp.problem, u.dx());
    Poly2 rhs = testing::apply_operator(p, u).dx();
    for (int d = 0; d < p.m; ++d) rhs = rhs + testing::expand(dp.corrections[d]) * u.d(d, 0);
    exact += lhs == rhs;
  }
  n.require(exact == 50, "identity not exact");

  int checked = 0, passing = 0;
  for (const auto& entry : std::filesystem::directory_iterator(kData)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("c", 0) != 0 || entry.path().extension() != ".json") continue;
    ProblemFile f = cli::load_problem(entry.path().string());
    if (f.problem.m > 3) continue;
    ++checked;
    std::ostringstream out, err;
    cli::cmd_check(f, {}, out, err);
    json rep = json::parse(out.str());
    bool hyp = rep["hypothesis_A"]["pass"].get<bool>() && rep["hypothesis_B"]["pass"].get<bool>();
    for (const auto& c : rep["hypothesis_C"]) hyp &= c["pass"].get<bool>();
    if (!hyp) continue;
    ++passing;
    auto grid = cli::check_grid(f, {});
    for (const auto& c : check_l1_hypotheses(f.problem, grid))
      n.require(c.ok, name + ": derived operator not proper");
  }
  n.require(checked == 10, "corpus does not hold 10 problems");
  n.add("identity exact %d/50", exact);
  n.add("corpus %d, passing %d", checked, passing);
  return n.done();
}

Outcome golden_stability() {
  Notes n;
  auto capture = [](std::vector<std::string> args) {
    args.insert(args.begin(), "properhyp");
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    std::ostringstream out, err;
    cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return out.str() + err.str();
  };
  const std::vector<std::vector<std::string>> cases = {
      {"check", kData + "/c06_m3_strict.json", "--seed", "0"},
      {"solve", kData + "/c01_wave.json", "--grid", "200", "--seed", "0"},
      {"sweep", kData + "/c05_double_root.json", "--grid", "100", "--seed", "0"},
  };
  for (const auto& c : cases) {
    std::string a = capture(c), b = capture(c);
    n.require(!a.empty() && a == b, c[0] + " output differs between runs");
  }
  n.add("%zu commands run twice", cases.size());
  return n.done();
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"symmetrizer identities", symmetrizer_identities},
      {"interlacing and Peyser bounds", interlacing_and_peyser},
      {"decomposition round trip", decomposition_round_trip},
      {"Nuij regularization", nuij},
      {"energy estimate", energy_estimate},
      {"derived operator", derived_operator_checks},
      {"CLI determinism", golden_stability},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %zu %s: %s (%s)\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
