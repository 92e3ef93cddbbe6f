#include "properhyp/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <Eigen/Dense>

namespace properhyp {

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::abs(c));
  return m;
}

struct TiedSolve {
  Eigen::VectorXd mu;
  double residual = 0.0;  // max-norm
  double rel_residual = 0.0;
};

// Min-norm solve of sum_g mu_g b_g = r where b_g is the normalized sum of the
// basis vectors in group g.
TiedSolve tied_minnorm(const std::vector<std::vector<double>>& basis,
                       const std::vector<std::vector<int>>& groups, std::span<const double> r) {
  const auto n = static_cast<Eigen::Index>(r.size());
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(groups.size()));
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double s = 1.0 / std::sqrt(static_cast<double>(groups[g].size()));
    for (int k : groups[g]) {
      const auto& b = basis[static_cast<std::size_t>(k)];
      for (Eigen::Index i = 0; i < n; ++i) {
        B(i, static_cast<Eigen::Index>(g)) += s * b[static_cast<std::size_t>(i)];
      }
    }
  }
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) rhs[i] = r[static_cast<std::size_t>(i)];

  TiedSolve out;
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
  out.mu = cod.solve(rhs);
  const Eigen::VectorXd res = rhs - B * out.mu;
  out.residual = res.lpNorm<Eigen::Infinity>();
  out.rel_residual = res.norm() / (1.0 + rhs.norm());
  return out;
}

Decomposition first_order(std::span<const double> R, const PointPoly& p, bool& feasible) {
  const int m = p.degree();
  if (static_cast<int>(R.size()) > m) {
    throw std::invalid_argument("decomposition: deg R must be below deg P");
  }
  const auto r = vec(R, static_cast<std::size_t>(m));
  std::vector<std::vector<double>> basis;
  for (const auto& q : reduced_polys(p)) basis.push_back(vec(q, static_cast<std::size_t>(m)));

  std::vector<std::vector<int>> groups(p.clusters.begin(), p.clusters.end());
  const auto sol = tied_minnorm(basis, groups, r);

  Decomposition d;
  d.order = DecompositionOrder::first;
  d.coeffs.assign(static_cast<std::size_t>(m), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double l = sol.mu[static_cast<Eigen::Index>(g)] /
                     std::sqrt(static_cast<double>(groups[g].size()));
    for (int k : groups[g]) d.coeffs[static_cast<std::size_t>(k)] = l;
  }
  d.bound = max_abs(d.coeffs);
  d.residual = sol.residual;
  feasible = sol.rel_residual <= kInfeasibleResidual;
  return d;
}

std::string infeasible_message(double residual) {
  std::ostringstream os;
  os << "R is not in the span of the reduced polynomials (residual " << residual << ")";
  return os.str();
}

}  // namespace

std::vector<double> vec(std::span<const double> descending, std::size_t length) {
  if (descending.size() > length) throw std::invalid_argument("vec: polynomial too long");
  std::vector<double> out(length, 0.0);
  for (std::size_t i = 0; i < descending.size(); ++i) {
    out[i] = descending[descending.size() - 1 - i];
  }
  return out;
}

std::vector<double> lagrange_decompose(std::span<const double> R, const PointPoly& p) {
  if (!p.strictly_hyperbolic()) throw MultipleRoots("lagrange_decompose: P has a multiple root");
  const int m = p.degree();
  if (static_cast<int>(R.size()) > m) {
    throw std::invalid_argument("lagrange_decompose: deg R must be below deg P");
  }
  std::vector<double> out(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    const double tj = p.roots[static_cast<std::size_t>(j)];
    double denom = 1.0;
    for (int i = 0; i < m; ++i) {
      if (i != j) denom *= tj - p.roots[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(j)] = poly_eval(R, tj) / denom;
  }
  return out;
}

Decomposition minnorm_decompose(std::span<const double> R, const PointPoly& p) {
  bool feasible = false;
  auto d = first_order(R, p, feasible);
  if (!feasible) throw Infeasible(infeasible_message(d.residual), d.residual);
  return d;
}

std::optional<Decomposition> try_minnorm_decompose(std::span<const double> R, const PointPoly& p) {
  bool feasible = false;
  auto d = first_order(R, p, feasible);
  if (!feasible) return std::nullopt;
  return d;
}

Decomposition second_order_decompose(std::span<const double> S, const PointPoly& p) {
  const int m = p.degree();
  if (m < 2) throw std::invalid_argument("second_order_decompose: need deg P >= 2");
  if (static_cast<int>(S.size()) > m - 1) {
    throw std::invalid_argument("second_order_decompose: deg S must be at most m-2");
  }
  const auto len = static_cast<std::size_t>(m - 1);
  const auto r = vec(S, len);

  Decomposition d;
  d.order = DecompositionOrder::second;
  std::vector<std::vector<double>> basis;
  std::map<std::pair<int, int>, std::vector<int>> by_key;
  for (const auto& [pair, q] : bireduced_polys(p)) {
    const int idx = static_cast<int>(d.pairs.size());
    d.pairs.push_back(pair);
    basis.push_back(vec(q, len));
    int ch = p.cluster_of(pair.first);
    int ck = p.cluster_of(pair.second);
    if (ch > ck) std::swap(ch, ck);
    by_key[{ch, ck}].push_back(idx);
  }
  std::vector<std::vector<int>> groups;
  for (auto& [key, members] : by_key) groups.push_back(std::move(members));

  const auto sol = tied_minnorm(basis, groups, r);
  d.coeffs.assign(d.pairs.size(), 0.0);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const double l = sol.mu[static_cast<Eigen::Index>(g)] /
                     std::sqrt(static_cast<double>(groups[g].size()));
    for (int k : groups[g]) d.coeffs[static_cast<std::size_t>(k)] = l;
  }
  d.bound = max_abs(d.coeffs);
  d.residual = sol.residual;
  if (sol.rel_residual > kInfeasibleResidual) {
    throw Infeasible(infeasible_message(d.residual), d.residual);
  }
  return d;
}

ProperCheck check_proper(std::span<const Expr> R, const HPoly& P, int d,
                         std::span<const TXPoint> grid, const RootTolerances& tol) {
  const int m = P.degree();
  if (d < 0 || d > m - 1) throw std::invalid_argument("check_proper: d out of range");
  if (static_cast<int>(R.size()) != d + 1) {
    throw std::invalid_argument("check_proper: R must have d+1 coefficients");
  }
  ProperCheck out;
  std::vector<double> rv(static_cast<std::size_t>(d + 1));
  for (const auto& pt : grid) {
    const auto md = monic_tau_derivative(P, d + 1, pt.x, tol);
    for (int k = 0; k <= d; ++k) {
      rv[static_cast<std::size_t>(k)] = eval_expr(R[static_cast<std::size_t>(k)], pt.t, pt.x);
    }
    auto pp = md.as_point_poly();
    pp.x = pt.x;
    const auto dec = try_minnorm_decompose(rv, pp);
    if (!dec) {
      std::ostringstream os;
      os << "R_" << d << " is not in the reduced span at t=" << pt.t << ", x=" << pt.x;
      return {false, std::numeric_limits<double>::infinity(), pt.t, pt.x, os.str()};
    }
    if (dec->bound > 1e8) {
      std::ostringstream os;
      os << "decomposition of R_" << d << " blows up at t=" << pt.t << ", x=" << pt.x;
      return {false, dec->bound, pt.t, pt.x, os.str()};
    }
    if (dec->bound >= out.C0) {
      out.C0 = dec->bound;
      out.t_at = pt.t;
      out.x_at = pt.x;
    }
  }
  return out;
}

FiskSplit fisk_split(std::span<const double> R, const PointPoly& p, std::span<const double> ell,
                     std::optional<double> zeta) {
  const int m = p.degree();
  if (m < 2) throw std::invalid_argument("fisk_split: need deg P >= 2");
  if (static_cast<int>(ell.size()) != m) throw std::invalid_argument("fisk_split: need m coefficients");
  const double lmax = *std::max_element(ell.begin(), ell.end());
  FiskSplit out;
  if (zeta) {
    if (!(*zeta > lmax)) throw std::invalid_argument("fisk_split: zeta must exceed every l_k");
    out.zeta = *zeta;
  } else {
    out.zeta = lmax + 1.0;
  }
  const auto r = poly_pad(R, static_cast<std::size_t>(m));
  const double denom = static_cast<double>(m) * out.zeta - r[0];
  if (std::abs(denom) < 1e-300) throw InterlacingFailure("fisk_split: degenerate leading term");

  const auto dp = poly_derivative(p.coeffs);
  out.ptilde.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < out.ptilde.size(); ++i) {
    out.ptilde[i] = (out.zeta * dp[i] - r[i]) / denom;
  }
  out.ptilde[0] = 1.0;

  const double slack = cluster_tolerance(p.roots);
  std::string reason = "roots of Ptilde do not interlace with P";
  try {
    out.ptilde_roots = roots_of(out.ptilde, p.x).roots;
    if (check_interlacing(p.roots, out.ptilde_roots, 0.0, false, slack)) return out;
  } catch (const NotHyperbolic& e) {
    reason = e.what();
  }

  // Near multiple roots the companion roots split; rebuild them from the
  // partial fraction form of Ptilde / P and keep them if they match Ptilde.
  std::vector<double> w;
  for (const auto& c : p.clusters) {
    double s = 0.0;
    for (int k : c) s += out.zeta - ell[static_cast<std::size_t>(k)];
    w.push_back(s);
  }
  auto roots = partial_fraction_roots(p, w, 0.0);
  const auto rebuilt = poly_from_roots(roots);
  double scale = 0.0;
  double diff = 0.0;
  for (std::size_t i = 0; i < rebuilt.size(); ++i) {
    scale = std::max(scale, std::abs(out.ptilde[i]));
    diff = std::max(diff, std::abs(rebuilt[i] - out.ptilde[i]));
  }
  if (diff <= 1e-8 * scale && check_interlacing(p.roots, roots, 0.0, false, slack)) {
    out.ptilde_roots = std::move(roots);
    return out;
  }
  throw InterlacingFailure("fisk_split: " + reason);
}

double nuij_transfer_bound(double max_abs_ell, double r, int m) {
  if (m < 1) throw std::invalid_argument("nuij_transfer_bound: m must be positive");
  const double a = std::pow(1.0 + r, m - 1);
  const double b = m >= 2 ? static_cast<double>(m - 1) * r * std::pow(1.0 + r, m - 2) : 0.0;
  return max_abs_ell * (a + b);
}

NuijTransfer transfer_to_nuij(std::span<const double> ell, const PointPoly& p,
                              const PointPoly& p_eps) {
  const int m = p.degree();
  if (p_eps.degree() != m || static_cast<int>(ell.size()) != m) {
    throw std::invalid_argument("transfer_to_nuij: degree mismatch");
  }
  std::vector<double> R(static_cast<std::size_t>(m), 0.0);
  const auto basis = reduced_polys(p);
  for (int k = 0; k < m; ++k) {
    for (std::size_t i = 0; i < R.size(); ++i) {
      R[i] += ell[static_cast<std::size_t>(k)] * basis[static_cast<std::size_t>(k)][i];
    }
  }
  NuijTransfer out;
  out.coeffs = lagrange_decompose(R, p_eps);

  double shift = 0.0;
  for (int k = 0; k < m; ++k) {
    shift = std::max(shift, std::abs(p_eps.roots[static_cast<std::size_t>(k)] -
                                     p.roots[static_cast<std::size_t>(k)]));
  }
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < p_eps.roots.size(); ++k) {
    gap = std::min(gap, p_eps.roots[k] - p_eps.roots[k - 1]);
  }
  out.shift_to_gap = m >= 2 ? shift / gap : 0.0;
  out.bound = nuij_transfer_bound(max_abs(ell), out.shift_to_gap, m);
  return out;
}

}  // namespace properhyp
