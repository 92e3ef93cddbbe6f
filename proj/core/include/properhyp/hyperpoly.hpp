#pragma once

// Pointwise machinery for monic hyperbolic polynomials in tau.
//
// Coefficient vectors in this header are monic and ordered by descending
// powers of tau: {1, a_1, ..., a_m} stands for tau^m + a_1 tau^{m-1} + ... + a_m.

#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "properhyp/expr.hpp"

namespace properhyp {

class NotHyperbolic : public std::runtime_error {
 public:
  NotHyperbolic(double x, double imag_magnitude);
  double x() const noexcept { return x_; }
  double imag_magnitude() const noexcept { return imag_; }

 private:
  double x_;
  double imag_;
};

class StrictnessFailure : public std::runtime_error {
 public:
  explicit StrictnessFailure(double min_gap);
  double min_gap() const noexcept { return min_gap_; }

 private:
  double min_gap_;
};

/// Tolerance knobs for root extraction. The effective tolerances are
/// imag_scale * (1 + max|coeff|) and cluster_scale * (1 + spread).
struct RootTolerances {
  double imag_scale = 1e-8;
  double cluster_scale = 1e-7;
};

/// Principal symbol tau^m + a_1(x) tau^{m-1} + ... + a_m(x), monic in tau.
class HPoly {
 public:
  HPoly(std::vector<Expr> coefficients);

  int degree() const { return static_cast<int>(coeffs_.size()); }
  /// a_k for k = 1..m.
  const Expr& coefficient(int k) const { return coeffs_.at(static_cast<std::size_t>(k - 1)); }
  const std::vector<Expr>& coefficients() const { return coeffs_; }

  /// {1, a_1(x), ..., a_m(x)}.
  std::vector<double> coeffs_at(double x) const;

 private:
  std::vector<Expr> coeffs_;
};

using Cluster = std::vector<int>;  // 0-based root indices

struct PointPoly {
  std::vector<double> coeffs;  // monic, descending, size m + 1
  std::vector<double> roots;   // ascending, size m
  std::vector<Cluster> clusters;
  double x = 0.0;

  int degree() const { return static_cast<int>(roots.size()); }
  bool strictly_hyperbolic() const { return clusters.size() == roots.size(); }
  /// Index of the cluster that holds root k.
  int cluster_of(int k) const;
};

struct MonicDerivative {
  int d = 0;
  std::vector<double> coeffs;  // a_{d,0} = 1, ..., a_{d,d}
  std::vector<double> roots;
  std::vector<Cluster> clusters;

  PointPoly as_point_poly() const;
};

// --- small polynomial helpers (descending coefficients) -------------------

double poly_eval(std::span<const double> coeffs, double tau);
std::vector<double> poly_derivative(std::span<const double> coeffs);
/// Monic polynomial with the given roots.
std::vector<double> poly_from_roots(std::span<const double> roots);
std::vector<double> poly_add(std::span<const double> a, std::span<const double> b);
std::vector<double> poly_scale(std::span<const double> a, double s);
/// Left-pads with zeros to the requested length (degree + 1).
std::vector<double> poly_pad(std::span<const double> a, std::size_t length);

/// Sorted real roots of a monic polynomial, with clusters.
/// Throws NotHyperbolic when the roots are not real within tolerance.
PointPoly roots_of(std::span<const double> monic_coeffs, double x = 0.0,
                   const RootTolerances& tol = {});

PointPoly roots_at(const HPoly& p, double x, const RootTolerances& tol = {});

/// Maximal runs of sorted roots whose consecutive gaps are <= tol.
std::vector<Cluster> cluster_roots(std::span<const double> sorted_roots, double tol);

double cluster_tolerance(std::span<const double> sorted_roots, const RootTolerances& tol = {});

/// P_k^ for k = 1..m (output index k-1), each monic of degree m-1.
std::vector<std::vector<double>> reduced_polys(const PointPoly& p);

/// P_{h^,k^} for 0-based h < k, each monic of degree m-2.
std::map<std::pair<int, int>, std::vector<double>> bireduced_polys(const PointPoly& p);

/// Coefficients of (d!/m!) d^{m-d}/dtau^{m-d} of a monic degree-m polynomial.
std::vector<double> monic_derivative_coeffs(std::span<const double> coeffs, int d);

/// Exact coefficient scale a_{d,k} = factor * a_k, factor = C(d,k) / C(m,k).
double monic_derivative_factor(int m, int d, int k);

MonicDerivative monic_tau_derivative(const HPoly& p, int d, double x,
                                     const RootTolerances& tol = {});
MonicDerivative monic_tau_derivative(const PointPoly& p, int d, const RootTolerances& tol = {});

/// Roots of sum_i w_i P / (tau - d_i) - c P over the clusters d_i of p, with w_i > 0 and c >= 0.
/// Each d_i keeps multiplicity k_i - 1; one root lies in each gap, plus one right of
/// the largest root when c > 0.
std::vector<double> partial_fraction_roots(const PointPoly& p, std::span<const double> weights,
                                           double c);

/// P - eps * dP/dtau with fresh roots.
PointPoly nuij_map(const PointPoly& p, double eps, const RootTolerances& tol = {});

/// (m-1)-fold Nuij map. Throws StrictnessFailure if a root gap falls below 1e-14.
PointPoly nuij_regularize(const PointPoly& p, double eps, const RootTolerances& tol = {});

/// Expr coefficients of N_eps^{times}(P), times defaulting to m-1.
HPoly nuij_regularize(const HPoly& p, double eps, int times = -1);

/// Peyser's bracket for the j-th root (1-based j) of the derivative.
std::pair<double, double> peyser_bounds(std::span<const double> taus, int j);

/// tau_j <= lam_j <= tau_{j+1} - eta (tau_{j+1} - tau_j) for all j; with
/// two_sided the lower bound becomes tau_j + eta (tau_{j+1} - tau_j).
/// Comparisons allow a slack of 1e-12 * (1 + spread) + extra_slack.
bool check_interlacing(std::span<const double> taus, std::span<const double> lams, double eta,
                       bool two_sided = false, double extra_slack = 0.0);

struct CoEstimate {
  bool unbounded = false;
  double M = 0.0;
  double x_at = 0.0;  // where the sup (or the blow-up) was found
};

/// Sup of (tau_j^2 + tau_k^2) / (tau_j - tau_k)^2 over the grid.
CoEstimate estimate_co_constant(const HPoly& p, std::span<const double> xgrid,
                                const RootTolerances& tol = {});
/// Same sup for a single point.
CoEstimate co_ratio(const PointPoly& p, const RootTolerances& tol = {});

/// 4M/eta^2 + 2.
double derived_co_constant(double M, double eta);

/// max_x max_j |tau_j(x)| over the grid.
double tau_max(const HPoly& p, std::span<const double> xgrid, const RootTolerances& tol = {});

}  // namespace properhyp
