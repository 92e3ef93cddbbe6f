#pragma once

// Proper decompositions of a lower-order polynomial R in the basis of reduced
// (first order) or bi-reduced (second order) polynomials of a hyperbolic P.
//
// Input polynomials use descending coefficients, like the rest of the
// library; a polynomial shorter than the basis is zero-padded on the left.

#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "properhyp/expr.hpp"
#include "properhyp/hyperpoly.hpp"

namespace properhyp {

class MultipleRoots : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// R is not in the span of the basis at this point.
class Infeasible : public std::runtime_error {
 public:
  Infeasible(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class InterlacingFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DecompositionOrder { first, second };

struct Decomposition {
  DecompositionOrder order = DecompositionOrder::first;
  std::vector<double> coeffs;             // l_k, or l_{h,k} in the order of `pairs`
  std::vector<std::pair<int, int>> pairs;  // second order only, 0-based h < k
  double bound = 0.0;                      // max |coefficient|
  double residual = 0.0;                   // max-norm of R - sum l_k P_k^
};

/// Relative residual threshold used by the min-norm decompositions.
inline constexpr double kInfeasibleResidual = 1e-7;

/// Newton-Lagrange coefficients l_j = R(tau_j) / P_j^(tau_j); simple roots only.
std::vector<double> lagrange_decompose(std::span<const double> R, const PointPoly& p);

/// Minimum-norm coefficients with l_h = l_k inside each root cluster.
/// Throws Infeasible if R is outside the span.
Decomposition minnorm_decompose(std::span<const double> R, const PointPoly& p);

/// Non-throwing variant: nullopt when infeasible.
std::optional<Decomposition> try_minnorm_decompose(std::span<const double> R, const PointPoly& p);

/// Same on the bi-reduced basis. Requires deg S <= m-2 (S.size() <= m-1).
Decomposition second_order_decompose(std::span<const double> S, const PointPoly& p);

struct ProperCheck {
  bool ok = true;
  double C0 = 0.0;  // sup |l_k| over the grid
  // Where it failed (or where C0 was attained).
  double t_at = 0.0;
  double x_at = 0.0;
  std::string reason;
};

struct TXPoint {
  double t = 0.0;
  double x = 0.0;
};

/// Checks that R (Expr coefficients r_0..r_d, descending in tau) decomposes
/// properly w.r.t. the monic derivative P^(d+1), i.e. w.r.t. d_tau^{m-1-d} P,
/// at every grid point. Fails on infeasibility or coefficients above 1e8.
ProperCheck check_proper(std::span<const Expr> R, const HPoly& P, int d,
                         std::span<const TXPoint> grid, const RootTolerances& tol = {});

struct FiskSplit {
  double zeta = 0.0;
  std::vector<double> ptilde;        // monic, degree m-1
  std::vector<double> ptilde_roots;  // ascending
};

/// R = zeta * dP/dtau + (r_0 - m zeta) * Ptilde with Ptilde monic, hyperbolic
/// and interlaced with P. zeta defaults to max_k l_k + 1; an explicit zeta
/// must exceed every l_k.
FiskSplit fisk_split(std::span<const double> R, const PointPoly& p, std::span<const double> ell,
                     std::optional<double> zeta = std::nullopt);

struct NuijTransfer {
  std::vector<double> coeffs;  // l_{k,eps}
  double shift_to_gap = 0.0;   // C1/C2 = max root shift / min gap of p_eps
  double bound = 0.0;          // closed-form ceiling on |l_{k,eps}|
};

/// Re-expands sum_k l_k P_k^ in the reduced basis of the strict p_eps.
NuijTransfer transfer_to_nuij(std::span<const double> ell, const PointPoly& p,
                              const PointPoly& p_eps);

/// max|l| * ((1+r)^{m-1} + (m-1) r (1+r)^{m-2}).
double nuij_transfer_bound(double max_abs_ell, double r, int m);

/// Constant-term-first coefficient vector used for inner products with W rows.
std::vector<double> vec(std::span<const double> descending, std::size_t length);

}  // namespace properhyp
