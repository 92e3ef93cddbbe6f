#include "properhyp/symmetrizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace properhyp {

namespace {

struct Dual {
  double v = 0.0;
  double d = 0.0;
};

Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.v * b.d + a.d * b.v}; }
Dual operator*(double s, Dual a) { return {s * a.v, s * a.d}; }

// Q_{ij} = sum_{h,g} c_h c_g s_{(d-1-i-h) + (d-1-j-g)} with s_n the power sums
// of the roots, so Q is a polynomial in the coefficients.
template <class S>
std::vector<S> newton_symmetrizer(const std::vector<S>& c) {
  const int d = static_cast<int>(c.size()) - 1;
  const int nmax = 2 * (d - 1);
  std::vector<S> s(static_cast<std::size_t>(std::max(nmax, 0) + 1));
  s[0] = S{} + static_cast<double>(d) * c[0];
  for (int n = 1; n <= nmax; ++n) {
    S acc{};
    for (int i = 1; i <= std::min(n - 1, d); ++i) {
      acc = acc + c[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(n - i)];
    }
    if (n <= d) acc = acc + static_cast<double>(n) * c[static_cast<std::size_t>(n)];
    s[static_cast<std::size_t>(n)] = S{} - acc;
  }
  std::vector<S> q(static_cast<std::size_t>(d * d));
  for (int i = 0; i < d; ++i) {
    for (int j = i; j < d; ++j) {
      S acc{};
      for (int h = 0; h <= d - 1 - i; ++h) {
        for (int g = 0; g <= d - 1 - j; ++g) {
          acc = acc + c[static_cast<std::size_t>(h)] * c[static_cast<std::size_t>(g)] *
                          s[static_cast<std::size_t>((d - 1 - i - h) + (d - 1 - j - g))];
        }
      }
      q[static_cast<std::size_t>(i * d + j)] = acc;
      q[static_cast<std::size_t>(j * d + i)] = acc;
    }
  }
  return q;
}

std::vector<double> monic_derivative_of(std::span<const double> coeffs, int d) {
  return monic_derivative_coeffs(coeffs, d);
}

double quad(const Eigen::MatrixXd& M, const Eigen::VectorXd& v) { return v.dot(M * v); }

double quad_diag(const Eigen::VectorXd& w, const Eigen::VectorXd& v) {
  return (w.array() * v.array().square()).sum();
}

struct Extremes {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
};

// Extreme generalized eigenvalues of (M, W) with W positive definite.
bool generalized_extremes(const Eigen::MatrixXd& M, const Eigen::MatrixXd& W, double& lo,
                          double& hi) {
  Eigen::LLT<Eigen::MatrixXd> llt(W);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::MatrixXd L = llt.matrixL();
  const Eigen::MatrixXd Linv = L.inverse();
  const Eigen::MatrixXd S = Linv * (0.5 * (M + M.transpose())) * Linv.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  lo = es.eigenvalues().minCoeff();
  hi = es.eigenvalues().maxCoeff();
  return true;
}

}  // namespace

Eigen::MatrixXd sylvester_matrix(std::span<const double> monic_coeffs) {
  const int d = static_cast<int>(monic_coeffs.size()) - 1;
  if (d < 1) throw std::invalid_argument("sylvester_matrix: degree must be at least 1");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i + 1 < d; ++i) A(i, i + 1) = 1.0;
  for (int j = 0; j < d; ++j) A(d - 1, j) = -monic_coeffs[static_cast<std::size_t>(d - j)];
  return A;
}

Eigen::MatrixXd eigen_rows(const PointPoly& p) {
  const int m = p.degree();
  Eigen::MatrixXd W(m, m);
  const auto reduced = reduced_polys(p);
  for (int k = 0; k < m; ++k) {
    const auto row = vec(reduced[static_cast<std::size_t>(k)], static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) W(k, j) = row[static_cast<std::size_t>(j)];
  }
  return W;
}

std::vector<double> squared_root_symmetric(std::span<const double> roots) {
  std::vector<double> e{1.0};
  for (double r : roots) {
    e.push_back(0.0);
    for (std::size_t k = e.size() - 1; k > 0; --k) e[k] += r * r * e[k - 1];
  }
  return e;
}

std::vector<double> squared_root_symmetric_from_coeffs(std::span<const double> monic_coeffs) {
  const int d = static_cast<int>(monic_coeffs.size()) - 1;
  // Ascending coefficients of P(tau) and P(-tau).
  std::vector<double> pa(static_cast<std::size_t>(d + 1));
  std::vector<double> pm(static_cast<std::size_t>(d + 1));
  for (int i = 0; i <= d; ++i) {
    pa[static_cast<std::size_t>(i)] = monic_coeffs[static_cast<std::size_t>(d - i)];
    pm[static_cast<std::size_t>(i)] = (i % 2 == 0 ? 1.0 : -1.0) * pa[static_cast<std::size_t>(i)];
  }
  std::vector<double> h(static_cast<std::size_t>(2 * d + 1), 0.0);
  for (int i = 0; i <= d; ++i) {
    for (int j = 0; j <= d; ++j) {
      h[static_cast<std::size_t>(i + j)] += pa[static_cast<std::size_t>(i)] * pm[static_cast<std::size_t>(j)];
    }
  }
  // P(tau) P(-tau) = (-1)^d prod (tau^2 - tau_j^2); e_k sits at tau^{2(d-k)}.
  const double sd = d % 2 == 0 ? 1.0 : -1.0;
  std::vector<double> e(static_cast<std::size_t>(d + 1));
  for (int k = 0; k <= d; ++k) {
    const double sk = k % 2 == 0 ? 1.0 : -1.0;
    e[static_cast<std::size_t>(k)] = std::max(0.0, sd * sk * h[static_cast<std::size_t>(2 * (d - k))]);
  }
  return e;
}

JannelliQ jannelli_q(const PointPoly& p) {
  const int m = p.degree();
  const Eigen::MatrixXd W = eigen_rows(p);
  JannelliQ out;
  out.Q = W.transpose() * W;
  const auto e = squared_root_symmetric(p.roots);
  out.psi.resize(m);
  for (int i = 0; i < m; ++i) out.psi[i] = e[static_cast<std::size_t>(m - 1 - i)];
  return out;
}

Eigen::MatrixXd symmetrizer_from_coeffs(std::span<const double> monic_coeffs) {
  const int d = static_cast<int>(monic_coeffs.size()) - 1;
  const std::vector<double> c(monic_coeffs.begin(), monic_coeffs.end());
  const auto q = newton_symmetrizer(c);
  Eigen::MatrixXd Q(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) Q(i, j) = q[static_cast<std::size_t>(i * d + j)];
  }
  return Q;
}

SylvesterBlock sylvester_block(const PointPoly& p) {
  SylvesterBlock b;
  b.d = p.degree();
  b.A = sylvester_matrix(p.coeffs);
  b.W = eigen_rows(p);
  b.Q = b.W.transpose() * b.W;
  b.psi = jannelli_q(p).psi;
  b.lambda = Eigen::Map<const Eigen::VectorXd>(p.roots.data(), static_cast<Eigen::Index>(p.roots.size()));
  return b;
}

// --- block system ---------------------------------------------------------

BlockSystem::BlockSystem(Problem problem) : problem_(std::move(problem)) {
  validate(problem_);
  for (const auto& a : problem_.a) a_x_.push_back(diff_expr(a, Var::x));
  for (const auto& row : problem_.r) {
    for (const auto& e : row) {
      if (e.depends_on(Var::t)) lower_t_ = true;
      if (!(e.is_constant() && e.constant_value() == 0.0)) lower_zero_ = false;
    }
  }
}

BlockSystem assemble_block_system(const Problem& problem) { return BlockSystem(problem); }

std::vector<double> BlockSystem::block_coeffs(int d, double x) const {
  return monic_derivative_of(problem_.principal().coeffs_at(x), d);
}

std::vector<double> BlockSystem::block_coeffs_x(int d, double x) const {
  const int m = problem_.m;
  std::vector<double> out(static_cast<std::size_t>(d + 1), 0.0);
  for (int k = 1; k <= d; ++k) {
    out[static_cast<std::size_t>(k)] =
        monic_derivative_factor(m, d, k) * eval_expr(a_x_[static_cast<std::size_t>(k - 1)], 0.0, x);
  }
  return out;
}

Eigen::MatrixXd BlockSystem::A(double x) const {
  const int n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto c = problem_.principal().coeffs_at(x);
  for (int d = 0; d < m(); ++d) {
    out.block(offset(d), offset(d), d + 1, d + 1) = sylvester_matrix(monic_derivative_of(c, d + 1));
  }
  return out;
}

Eigen::MatrixXd BlockSystem::A_x(double x) const {
  const int n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int d = 0; d < m(); ++d) {
    const auto cx = block_coeffs_x(d + 1, x);
    for (int j = 0; j <= d; ++j) {
      out(offset(d) + d, offset(d) + j) = -cx[static_cast<std::size_t>(d + 1 - j)];
    }
  }
  return out;
}

Eigen::MatrixXd BlockSystem::B(double t, double x) const {
  const int n = size();
  const int mm = m();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto c = problem_.principal().coeffs_at(x);
  for (int d = 0; d + 1 < mm; ++d) {
    const auto cd = monic_derivative_of(c, d + 1);
    const int row = offset(d) + d;
    for (int k = 0; k <= d + 1; ++k) {
      out(row, offset(d + 1) + (d + 1 - k)) = cd[static_cast<std::size_t>(k)];
    }
  }
  if (!lower_zero_) {
    for (int d = 0; d < mm; ++d) {
      const auto& rd = problem_.r[static_cast<std::size_t>(d)];
      for (int j = 0; j <= d; ++j) {
        out(n - 1, offset(d) + j) += eval_expr(rd[static_cast<std::size_t>(d - j)], t, x);
      }
    }
  }
  return out;
}

Eigen::MatrixXd BlockSystem::Q(double x) const {
  const int n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto c = problem_.principal().coeffs_at(x);
  for (int d = 0; d < m(); ++d) {
    out.block(offset(d), offset(d), d + 1, d + 1) =
        symmetrizer_from_coeffs(monic_derivative_of(c, d + 1));
  }
  return out;
}

Eigen::MatrixXd BlockSystem::QA_x(double x) const {
  const int n = size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  const auto c = problem_.principal().coeffs_at(x);
  for (int d = 1; d <= m(); ++d) {
    const auto cv = monic_derivative_of(c, d);
    const auto cx = block_coeffs_x(d, x);
    std::vector<Dual> cd(static_cast<std::size_t>(d + 1));
    for (int k = 0; k <= d; ++k) {
      cd[static_cast<std::size_t>(k)] = {cv[static_cast<std::size_t>(k)], cx[static_cast<std::size_t>(k)]};
    }
    const auto q = newton_symmetrizer(cd);
    Eigen::MatrixXd Qv(d, d);
    Eigen::MatrixXd Qd(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) {
        Qv(i, j) = q[static_cast<std::size_t>(i * d + j)].v;
        Qd(i, j) = q[static_cast<std::size_t>(i * d + j)].d;
      }
    }
    const Eigen::MatrixXd Av = sylvester_matrix(cv);
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) Ad(d - 1, j) = -cx[static_cast<std::size_t>(d - j)];
    out.block(offset(d - 1), offset(d - 1), d, d) = Qd * Av + Qv * Ad;
  }
  return out;
}

Eigen::VectorXd BlockSystem::Xi(double x) const {
  Eigen::VectorXd out(size());
  const auto c = problem_.principal().coeffs_at(x);
  for (int d = 1; d <= m(); ++d) {
    const auto e = squared_root_symmetric_from_coeffs(monic_derivative_of(c, d));
    for (int i = 0; i < d; ++i) out[offset(d - 1) + i] = e[static_cast<std::size_t>(d - 1 - i)];
  }
  return out;
}

Eigen::VectorXd BlockSystem::F(double t, double x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  out[size() - 1] = eval_expr(problem_.f, t, x);
  return out;
}

double BlockSystem::tau_max(std::span<const double> xs) const {
  return properhyp::tau_max(problem_.principal(), xs);
}

double weak_coercivity(const BlockSystem& bs, double x) {
  const auto c = bs.problem().principal().coeffs_at(x);
  double best = std::numeric_limits<double>::infinity();
  for (int d = 1; d <= bs.m(); ++d) {
    const Eigen::MatrixXd Q = symmetrizer_from_coeffs(monic_derivative_coeffs(c, d));
    double s = Q(d - 1, d - 1);
    if (d > 1) {
      const Eigen::MatrixXd R = Q.topLeftCorner(d - 1, d - 1);
      const Eigen::VectorXd q = Q.col(d - 1).head(d - 1);
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(R);
      s -= q.dot(cod.solve(q));
    }
    best = std::min(best, s);
  }
  return best;
}

const BoundEntry* BoundReport::find(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return &e;
  }
  return nullptr;
}

BoundReport verify_bounds(const BlockSystem& bs, std::span<const TXPoint> grid,
                          const BoundOptions& opts) {
  BoundReport report;
  report.points = grid.size();
  std::vector<double> xs;
  xs.reserve(grid.size());
  for (const auto& pt : grid) xs.push_back(pt.x);
  report.tau_max = xs.empty() ? 0.0 : bs.tau_max(xs);

  const int n = bs.size();
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr double tiny = 1e-300;

  double asym = 0.0;
  double qq_bdd = 0.0;
  double qqa = 0.0;
  double qqap = 0.0;
  double aap = 0.0;
  Extremes gamma;
  double qqb = 0.0;
  double coercive = std::numeric_limits<double>::infinity();

  Eigen::VectorXd v(n);
  for (const auto& pt : grid) {
    const Eigen::MatrixXd Q = bs.Q(pt.x);
    const Eigen::MatrixXd A = bs.A(pt.x);
    const Eigen::MatrixXd QA = Q * A;
    const Eigen::MatrixXd QAx = bs.QA_x(pt.x);
    const Eigen::MatrixXd Ax = bs.A_x(pt.x);
    const Eigen::MatrixXd B = bs.B(pt.t, pt.x);
    const Eigen::MatrixXd QB = Q * B;
    const Eigen::VectorXd xi = bs.Xi(pt.x);

    asym = std::max(asym, (QA - QA.transpose()).norm() / (1.0 + QA.norm()));
    coercive = std::min(coercive, weak_coercivity(bs, pt.x));

    bool exact_done = false;
    if (opts.exact) {
      const Eigen::MatrixXd Xi = xi.asDiagonal();
      double lo = 0.0;
      double hi = 0.0;
      if (generalized_extremes(Q, Xi, lo, hi)) {
        gamma.add(lo);
        gamma.add(hi);
        generalized_extremes(QAx, Xi, lo, hi);
        qqap = std::max({qqap, std::abs(lo), std::abs(hi)});
        generalized_extremes(Ax.transpose() * Ax, Xi, lo, hi);
        aap = std::max(aap, hi);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Q, Eigen::EigenvaluesOnly);
        qq_bdd = std::max(qq_bdd, es.eigenvalues().maxCoeff());
        if (generalized_extremes(QA, Q, lo, hi)) {
          qqa = std::max({qqa, std::abs(lo), std::abs(hi)});
          generalized_extremes(QB, Q, lo, hi);
          qqb = std::max({qqb, std::abs(lo), std::abs(hi)});
          exact_done = true;
        }
      }
    }
    if (exact_done) continue;

    for (int s = 0; s < opts.random_vectors; ++s) {
      for (int i = 0; i < n; ++i) v[i] = normal(rng);
      v.normalize();
      const double vq = quad(Q, v);
      const double vxi = quad_diag(xi, v);
      qq_bdd = std::max(qq_bdd, vq);
      if (vq > tiny) {
        qqa = std::max(qqa, std::abs(quad(QA, v)) / vq);
        qqb = std::max(qqb, std::abs(quad(QB, v)) / vq);
      }
      if (vxi > tiny) {
        qqap = std::max(qqap, std::abs(quad(QAx, v)) / vxi);
        aap = std::max(aap, (Ax * v).squaredNorm() / vxi);
        gamma.add(vq / vxi);
      }
    }
  }
  if (grid.empty()) {
    gamma.lo = 0.0;
    gamma.hi = 0.0;
    coercive = 0.0;
  }

  auto add = [&](const char* name, double value, double limit, bool is_max) {
    BoundEntry e{name, value, limit, is_max, is_max ? value <= limit : value >= limit};
    if (!std::isfinite(value)) e.pass = false;
    report.pass = report.pass && e.pass;
    report.entries.push_back(std::move(e));
  };
  add("QA_symmetry", asym, 1e-9, true);
  add("QQbdd", qq_bdd, opts.ceiling, true);
  add("QQA", qqa, report.tau_max * (1.0 + 1e-8) + 1e-12, true);
  add("QQAp", qqap, opts.ceiling, true);
  add("AAp", aap, opts.ceiling, true);
  add("Gamma1", gamma.lo, opts.floor, false);
  add("Gamma2", gamma.hi, opts.ceiling, true);
  add("QQB", qqb, opts.ceiling, true);
  add("weak_coercivity", coercive, opts.floor, false);
  return report;
}

}  // namespace properhyp
