#pragma once

// Scalar Cauchy problem
//
//   d_t^m u + sum_k a_k(x) d_t^{m-k} d_x^k u = sum_d R_d u + f,
//   R_d = sum_k r_{d,k}(t,x) d_t^{d-k} d_x^k,
//   d_t^j u(0,x) = phi_j(x),
//
// posed on the cone with base [x0 - rho0, x0 + rho0].

#include <vector>

#include "properhyp/expr.hpp"
#include "properhyp/hyperpoly.hpp"

namespace properhyp {

struct Problem {
  int m = 0;
  std::vector<Expr> a;               // a_1..a_m, functions of x
  std::vector<std::vector<Expr>> r;  // r[d][k], 0 <= k <= d <= m-1
  Expr f;
  std::vector<Expr> phi;  // phi_0..phi_{m-1}, functions of x
  double x_lo = -1.0;
  double x_hi = 1.0;
  double x0 = 0.0;
  double rho0 = 1.0;
  double T = 1.0;

  HPoly principal() const { return HPoly(a); }
  /// Zero lower-order table of the right shape for degree m.
  static std::vector<std::vector<Expr>> zero_lower_order(int m);
};

/// Throws std::invalid_argument describing the first inconsistency found.
void validate(const Problem& p);

/// Problem satisfied by u_x. The forcing of the returned problem is d_x f only;
/// the remaining part of the forcing, sum_d corrections[d] * d_t^d u, depends
/// on the solution of the original problem.
struct DerivedProblem {
  Problem problem;
  std::vector<Expr> corrections;  // d_x r_{d,0}, d = 0..m-1
};

DerivedProblem derived_operator(const Problem& p);

}  // namespace properhyp
