#include "properhyp/hyperpoly.hpp"

#include <algorithm>
#include <complex>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/Polynomials>

namespace properhyp {

namespace {

std::string describe_not_hyperbolic(double x, double imag) {
  std::ostringstream os;
  os << "polynomial is not hyperbolic at x=" << x << " (imaginary part " << imag << ")";
  return os.str();
}

std::string describe_strictness(double gap) {
  std::ostringstream os;
  os << "Nuij regularization lost strictness (min gap " << gap << ")";
  return os.str();
}

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double c : v) m = std::max(m, std::abs(c));
  return m;
}

// Real roots by recursion on the derivative: between consecutive critical
// points a hyperbolic polynomial is monotone, so each interval holds exactly
// one root (or the root sits on a critical point).
std::vector<double> interlacing_roots(std::span<const double> monic) {
  const int m = static_cast<int>(monic.size()) - 1;
  if (m == 1) return {-monic[1]};
  auto deriv = poly_derivative(monic);
  const double lead = deriv[0];
  for (double& c : deriv) c /= lead;
  const std::vector<double> crit = interlacing_roots(deriv);

  const double bound = 1.0 + max_abs(monic.subspan(1));
  std::vector<double> knots;
  knots.reserve(crit.size() + 2);
  knots.push_back(-bound);
  knots.insert(knots.end(), crit.begin(), crit.end());
  knots.push_back(bound);

  std::vector<double> roots;
  roots.reserve(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    double lo = knots[i];
    double hi = knots[i + 1];
    double flo = poly_eval(monic, lo);
    const double fhi = poly_eval(monic, hi);
    if (flo == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if (fhi == 0.0) {
      roots.push_back(hi);
      continue;
    }
    if ((flo < 0.0) == (fhi < 0.0)) {
      roots.push_back(std::abs(flo) < std::abs(fhi) ? lo : hi);
      continue;
    }
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      const double fm = poly_eval(monic, mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

bool reconstructs(std::span<const double> coeffs, std::span<const double> roots) {
  const auto rebuilt = poly_from_roots(roots);
  const double scale = max_abs(coeffs);
  for (std::size_t i = 0; i < coeffs.size(); ++i) {
    if (std::abs(rebuilt[i] - coeffs[i]) > 1e-8 * scale) return false;
  }
  return true;
}

// Eigenvalues of the balanced companion matrix, or of the plain one when the
// balanced iteration does not converge. Empty if both fail.
std::vector<std::complex<double>> eigen_roots(std::span<const double> monic) {
  const int m = static_cast<int>(monic.size()) - 1;
  Eigen::VectorXd ascending(m + 1);
  for (int i = 0; i <= m; ++i) ascending[i] = monic[static_cast<std::size_t>(m - i)];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
  solver.compute(ascending);
  if (solver.roots().size() == m) return {solver.roots().begin(), solver.roots().end()};

  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i + 1 < m; ++i) C(i + 1, i) = 1.0;
  for (int i = 0; i < m; ++i) C(i, m - 1) = -ascending[i];
  Eigen::EigenSolver<Eigen::MatrixXd> es(C, false);
  if (es.info() != Eigen::Success) return {};
  return {es.eigenvalues().begin(), es.eigenvalues().end()};
}

// A k-fold real root comes back from the eigensolver as a small k-gon of
// radius ~eps^(1/k); the mean of the group is accurate to working precision.
std::vector<double> cluster_means(std::vector<std::complex<double>> z) {
  std::sort(z.begin(), z.end(), [](auto a, auto b) { return a.real() < b.real(); });
  double radius = 0.0;
  for (const auto& c : z) radius = std::max(radius, std::abs(c.imag()));
  std::vector<double> out;
  out.reserve(z.size());
  std::size_t start = 0;
  for (std::size_t i = 1; i <= z.size(); ++i) {
    if (i < z.size() && z[i].real() - z[i - 1].real() <= 2.02 * radius) continue;
    double mean = 0.0;
    for (std::size_t j = start; j < i; ++j) mean += z[j].real();
    mean /= static_cast<double>(i - start);
    out.insert(out.end(), i - start, mean);
    start = i;
  }
  return out;
}

// Newton on the (k-1)-th derivative, where a k-fold root is simple.
void polish(std::span<const double> monic, std::vector<double>& roots) {
  std::size_t i = 0;
  while (i < roots.size()) {
    std::size_t j = i;
    while (j < roots.size() && roots[j] == roots[i]) ++j;
    std::vector<double> q(monic.begin(), monic.end());
    for (std::size_t k = 1; k < j - i; ++k) q = poly_derivative(q);
    const auto dq = poly_derivative(q);
    double v = roots[i];
    for (int it = 0; it < 20; ++it) {
      const double step = poly_eval(q, v) / poly_eval(dq, v);
      if (!std::isfinite(step) || std::abs(poly_eval(q, v - step)) > std::abs(poly_eval(q, v))) break;
      v -= step;
      if (std::abs(step) <= 1e-16 * (1.0 + std::abs(v))) break;
    }
    std::fill(roots.begin() + static_cast<std::ptrdiff_t>(i), roots.begin() + static_cast<std::ptrdiff_t>(j), v);
    i = j;
  }
}

}  // namespace

NotHyperbolic::NotHyperbolic(double x, double imag_magnitude)
    : std::runtime_error(describe_not_hyperbolic(x, imag_magnitude)),
      x_(x),
      imag_(imag_magnitude) {}

StrictnessFailure::StrictnessFailure(double min_gap)
    : std::runtime_error(describe_strictness(min_gap)), min_gap_(min_gap) {}

HPoly::HPoly(std::vector<Expr> coefficients) : coeffs_(std::move(coefficients)) {
  if (coeffs_.empty()) throw std::invalid_argument("HPoly: degree must be at least 1");
}

std::vector<double> HPoly::coeffs_at(double x) const {
  std::vector<double> out;
  out.reserve(coeffs_.size() + 1);
  out.push_back(1.0);
  for (const auto& a : coeffs_) out.push_back(eval_expr(a, 0.0, x));
  return out;
}

int PointPoly::cluster_of(int k) const {
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (int idx : clusters[c]) {
      if (idx == k) return static_cast<int>(c);
    }
  }
  return -1;
}

PointPoly MonicDerivative::as_point_poly() const {
  PointPoly p;
  p.coeffs = coeffs;
  p.roots = roots;
  p.clusters = clusters;
  return p;
}

double poly_eval(std::span<const double> coeffs, double tau) {
  double acc = 0.0;
  for (double c : coeffs) acc = acc * tau + c;
  return acc;
}

std::vector<double> poly_derivative(std::span<const double> coeffs) {
  const std::size_t n = coeffs.size();
  if (n <= 1) return {0.0};
  std::vector<double> out(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    out[i] = coeffs[i] * static_cast<double>(n - 1 - i);
  }
  return out;
}

std::vector<double> poly_from_roots(std::span<const double> roots) {
  std::vector<double> c{1.0};
  for (double r : roots) {
    c.push_back(0.0);
    for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
  }
  return c;
}

std::vector<double> poly_pad(std::span<const double> a, std::size_t length) {
  if (a.size() > length) throw std::invalid_argument("poly_pad: polynomial too long");
  std::vector<double> out(length - a.size(), 0.0);
  out.insert(out.end(), a.begin(), a.end());
  return out;
}

std::vector<double> poly_add(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::max(a.size(), b.size());
  auto pa = poly_pad(a, n);
  const auto pb = poly_pad(b, n);
  for (std::size_t i = 0; i < n; ++i) pa[i] += pb[i];
  return pa;
}

std::vector<double> poly_scale(std::span<const double> a, double s) {
  std::vector<double> out(a.begin(), a.end());
  for (double& c : out) c *= s;
  return out;
}

double cluster_tolerance(std::span<const double> sorted_roots, const RootTolerances& tol) {
  const double spread = sorted_roots.empty() ? 0.0 : sorted_roots.back() - sorted_roots.front();
  return tol.cluster_scale * (1.0 + spread);
}

std::vector<Cluster> cluster_roots(std::span<const double> sorted_roots, double tol) {
  std::vector<Cluster> clusters;
  for (std::size_t k = 0; k < sorted_roots.size(); ++k) {
    if (k == 0 || sorted_roots[k] - sorted_roots[k - 1] > tol) clusters.emplace_back();
    clusters.back().push_back(static_cast<int>(k));
  }
  return clusters;
}

PointPoly roots_of(std::span<const double> monic_coeffs, double x, const RootTolerances& tol) {
  const int m = static_cast<int>(monic_coeffs.size()) - 1;
  if (m < 1) throw std::invalid_argument("roots_of: degree must be at least 1");
  if (monic_coeffs[0] != 1.0) throw std::invalid_argument("roots_of: polynomial is not monic");
  for (double c : monic_coeffs) {
    if (!std::isfinite(c)) throw NotHyperbolic(x, std::numeric_limits<double>::infinity());
  }

  PointPoly out;
  out.x = x;
  out.coeffs.assign(monic_coeffs.begin(), monic_coeffs.end());

  if (m == 1) {
    out.roots = {-monic_coeffs[1]};
  } else {
    const auto z = eigen_roots(monic_coeffs);
    const double tol_imag = tol.imag_scale * (1.0 + max_abs(monic_coeffs));
    double worst_imag = z.empty() ? std::numeric_limits<double>::infinity() : 0.0;
    for (const auto& c : z) {
      worst_imag = std::max(worst_imag, std::abs(c.imag()));
      out.roots.push_back(c.real());
    }
    if (worst_imag > tol_imag) {
      // Multiple roots split into complex clusters; accept a real candidate
      // only if it rebuilds the coefficients.
      std::vector<std::vector<double>> candidates;
      if (!z.empty()) {
        candidates.push_back(cluster_means(z));
        polish(monic_coeffs, candidates.back());
        candidates.push_back(out.roots);
      }
      candidates.push_back(interlacing_roots(monic_coeffs));
      bool found = false;
      for (auto& c : candidates) {
        std::sort(c.begin(), c.end());
        if (reconstructs(monic_coeffs, c)) {
          out.roots = std::move(c);
          found = true;
          break;
        }
      }
      if (!found) throw NotHyperbolic(x, worst_imag);
    }
    std::sort(out.roots.begin(), out.roots.end());
  }
  out.clusters = cluster_roots(out.roots, cluster_tolerance(out.roots, tol));
  return out;
}

PointPoly roots_at(const HPoly& p, double x, const RootTolerances& tol) {
  const auto c = p.coeffs_at(x);
  return roots_of(c, x, tol);
}

std::vector<std::vector<double>> reduced_polys(const PointPoly& p) {
  const int m = p.degree();
  std::vector<std::vector<double>> out;
  out.reserve(static_cast<std::size_t>(m));
  std::vector<double> others;
  for (int k = 0; k < m; ++k) {
    others.clear();
    for (int j = 0; j < m; ++j) {
      if (j != k) others.push_back(p.roots[static_cast<std::size_t>(j)]);
    }
    out.push_back(poly_from_roots(others));
  }
  return out;
}

std::map<std::pair<int, int>, std::vector<double>> bireduced_polys(const PointPoly& p) {
  const int m = p.degree();
  std::map<std::pair<int, int>, std::vector<double>> out;
  std::vector<double> others;
  for (int h = 0; h < m; ++h) {
    for (int k = h + 1; k < m; ++k) {
      others.clear();
      for (int j = 0; j < m; ++j) {
        if (j != h && j != k) others.push_back(p.roots[static_cast<std::size_t>(j)]);
      }
      out.emplace(std::make_pair(h, k), poly_from_roots(others));
    }
  }
  return out;
}

double monic_derivative_factor(int m, int d, int k) {
  double f = 1.0;
  for (int i = 0; i < k; ++i) f *= static_cast<double>(d - i) / static_cast<double>(m - i);
  return f;
}

std::vector<double> monic_derivative_coeffs(std::span<const double> coeffs, int d) {
  const int m = static_cast<int>(coeffs.size()) - 1;
  if (d < 1 || d > m) throw std::invalid_argument("monic derivative order out of range");
  std::vector<double> out(static_cast<std::size_t>(d + 1));
  for (int k = 0; k <= d; ++k) {
    out[static_cast<std::size_t>(k)] =
        coeffs[static_cast<std::size_t>(k)] * monic_derivative_factor(m, d, k);
  }
  return out;
}

namespace {

MonicDerivative make_monic_derivative(std::span<const double> coeffs, int d, double x,
                                      const RootTolerances& tol) {
  MonicDerivative md;
  md.d = d;
  md.coeffs = monic_derivative_coeffs(coeffs, d);
  auto pp = roots_of(md.coeffs, x, tol);
  md.roots = std::move(pp.roots);
  md.clusters = std::move(pp.clusters);
  return md;
}

}  // namespace

MonicDerivative monic_tau_derivative(const HPoly& p, int d, double x, const RootTolerances& tol) {
  return make_monic_derivative(p.coeffs_at(x), d, x, tol);
}

MonicDerivative monic_tau_derivative(const PointPoly& p, int d, const RootTolerances& tol) {
  return make_monic_derivative(p.coeffs, d, p.x, tol);
}

std::vector<double> partial_fraction_roots(const PointPoly& p, std::span<const double> weights,
                                           double c) {
  if (weights.size() != p.clusters.size()) {
    throw std::invalid_argument("partial_fraction_roots: one weight per cluster");
  }
  if (!(c >= 0.0)) throw std::invalid_argument("partial_fraction_roots: c must be non-negative");
  std::vector<double> d;
  double total = 0.0;
  for (std::size_t i = 0; i < p.clusters.size(); ++i) {
    if (!(weights[i] > 0.0)) throw std::invalid_argument("partial_fraction_roots: weights must be positive");
    double mean = 0.0;
    for (int k : p.clusters[i]) mean += p.roots[static_cast<std::size_t>(k)];
    d.push_back(mean / static_cast<double>(p.clusters[i].size()));
    total += weights[i];
  }
  const auto f = [&](double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += weights[i] / (tau - d[i]);
    return s - c;
  };
  std::vector<double> roots;
  for (std::size_t i = 0; i < d.size(); ++i) {
    for (std::size_t j = 1; j < p.clusters[i].size(); ++j) roots.push_back(d[i]);
    if (i + 1 == d.size() && c == 0.0) break;
    double lo = d[i];
    double hi = i + 1 < d.size() ? d[i + 1] : d[i] + total / c;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      (f(mid) > 0.0 ? lo : hi) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

PointPoly nuij_map(const PointPoly& p, double eps, const RootTolerances& tol) {
  if (!(eps > 0.0)) throw std::invalid_argument("nuij_map: eps must be positive");
  const auto deriv = poly_derivative(p.coeffs);
  PointPoly out;
  out.x = p.x;
  out.coeffs = p.coeffs;
  for (std::size_t i = 0; i < deriv.size(); ++i) out.coeffs[i + 1] -= eps * deriv[i];

  const auto clusters = p.clusters.empty() ? cluster_roots(p.roots, 0.0) : p.clusters;
  std::vector<double> w;
  for (const auto& c : clusters) w.push_back(static_cast<double>(c.size()));
  PointPoly base = p;
  base.clusters = clusters;
  out.roots = partial_fraction_roots(base, w, 1.0 / eps);
  std::sort(out.roots.begin(), out.roots.end());
  out.clusters = cluster_roots(out.roots, cluster_tolerance(out.roots, tol));
  return out;
}

PointPoly nuij_regularize(const PointPoly& p, double eps, const RootTolerances& tol) {
  PointPoly out = p;
  for (int i = 0; i + 1 < p.degree(); ++i) out = nuij_map(out, eps, tol);
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < out.roots.size(); ++k) {
    min_gap = std::min(min_gap, out.roots[k] - out.roots[k - 1]);
  }
  if (out.roots.size() > 1 && min_gap < 1e-14) throw StrictnessFailure(min_gap);
  // The regularized polynomial is strict by construction; record that.
  out.clusters = cluster_roots(out.roots, 0.0);
  return out;
}

HPoly nuij_regularize(const HPoly& p, double eps, int times) {
  const int m = p.degree();
  if (times < 0) times = m - 1;
  std::vector<Expr> a = p.coefficients();
  for (int it = 0; it < times; ++it) {
    std::vector<Expr> next(a.size());
    for (int k = 1; k <= m; ++k) {
      const Expr prev = k == 1 ? Expr(1.0) : a[static_cast<std::size_t>(k - 2)];
      next[static_cast<std::size_t>(k - 1)] =
          a[static_cast<std::size_t>(k - 1)] - Expr(eps * static_cast<double>(m - k + 1)) * prev;
    }
    a = std::move(next);
  }
  return HPoly(std::move(a));
}

std::pair<double, double> peyser_bounds(std::span<const double> taus, int j) {
  const int m = static_cast<int>(taus.size());
  if (j < 1 || j > m - 1) throw std::invalid_argument("peyser_bounds: j out of range");
  const double lo_root = taus[static_cast<std::size_t>(j - 1)];
  const double hi_root = taus[static_cast<std::size_t>(j)];
  const double gap = hi_root - lo_root;
  return {lo_root + gap / static_cast<double>(m - j + 1), hi_root - gap / static_cast<double>(j + 1)};
}

bool check_interlacing(std::span<const double> taus, std::span<const double> lams, double eta,
                       bool two_sided, double extra_slack) {
  if (taus.size() != lams.size() + 1) {
    throw std::invalid_argument("check_interlacing: expected m and m-1 roots");
  }
  if (taus.empty()) return true;
  double lo_all = taus.front();
  double hi_all = taus.back();
  for (double l : lams) {
    lo_all = std::min(lo_all, l);
    hi_all = std::max(hi_all, l);
  }
  const double slack = 1e-12 * (1.0 + (hi_all - lo_all)) + extra_slack;
  for (std::size_t j = 0; j < lams.size(); ++j) {
    const double gap = taus[j + 1] - taus[j];
    const double lower = two_sided ? taus[j] + eta * gap : taus[j];
    const double upper = taus[j + 1] - eta * gap;
    if (lams[j] < lower - slack || lams[j] > upper + slack) return false;
  }
  return true;
}

CoEstimate co_ratio(const PointPoly& p, const RootTolerances& tol) {
  CoEstimate est;
  est.x_at = p.x;
  const double tol_cluster = cluster_tolerance(p.roots, tol);
  const auto& r = p.roots;
  for (std::size_t j = 0; j < r.size(); ++j) {
    for (std::size_t k = j + 1; k < r.size(); ++k) {
      const double diff = r[k] - r[j];
      const double num = r[j] * r[j] + r[k] * r[k];
      if (std::abs(diff) > tol_cluster) {
        est.M = std::max(est.M, num / (diff * diff));
      } else if (std::max(r[j] * r[j], r[k] * r[k]) > tol_cluster * tol_cluster) {
        est.unbounded = true;
        est.M = std::numeric_limits<double>::infinity();
        return est;
      }
    }
  }
  if (est.M > 1e8) est.unbounded = true;
  return est;
}

CoEstimate estimate_co_constant(const HPoly& p, std::span<const double> xgrid,
                                const RootTolerances& tol) {
  if (xgrid.empty()) throw std::invalid_argument("estimate_co_constant: empty grid");
  CoEstimate best;
  best.x_at = xgrid.front();
  for (double x : xgrid) {
    const auto local = co_ratio(roots_at(p, x, tol), tol);
    if (local.unbounded) return local;
    if (local.M > best.M) {
      best.M = local.M;
      best.x_at = x;
    }
  }
  return best;
}

double derived_co_constant(double M, double eta) {
  if (M < 0.0 || !(eta > 0.0) || eta > 1.0) {
    throw std::invalid_argument("derived_co_constant: need M >= 0 and 0 < eta <= 1");
  }
  return 4.0 * M / (eta * eta) + 2.0;
}

double tau_max(const HPoly& p, std::span<const double> xgrid, const RootTolerances& tol) {
  double out = 0.0;
  for (double x : xgrid) {
    const auto pp = roots_at(p, x, tol);
    for (double r : pp.roots) out = std::max(out, std::abs(r));
  }
  return out;
}

}  // namespace properhyp
