#pragma once

// Sylvester matrices, the standard symmetrizer Q = W^T W, and the block
// system U_t = A(x) U_x + B(t,x) U + F(t,x) obtained from a scalar problem.
//
// Vectors multiplying a Sylvester matrix are ordered (u_{d,0}, ..., u_{d,d})
// with u_{d,j} = d_t^j d_x^{d-j} u, so the left eigenvectors of the matrix are
// the coefficient vectors of the reduced polynomials listed from the constant
// term upwards.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "properhyp/decomposition.hpp"
#include "properhyp/hyperpoly.hpp"
#include "properhyp/problem.hpp"

namespace properhyp {

/// Companion form: ones on the superdiagonal, last row -a_d, ..., -a_1.
Eigen::MatrixXd sylvester_matrix(std::span<const double> monic_coeffs);

/// Row k is vec(P_k^) for the k-th root.
Eigen::MatrixXd eigen_rows(const PointPoly& p);

/// psi_k = sum over k-subsets of the squared roots, k = 0..d.
std::vector<double> squared_root_symmetric(std::span<const double> roots);
/// Same from the coefficients alone, via P(tau) P(-tau).
std::vector<double> squared_root_symmetric_from_coeffs(std::span<const double> monic_coeffs);

struct JannelliQ {
  Eigen::MatrixXd Q;
  Eigen::VectorXd psi;  // diagonal of Psi: psi_{d-1}, ..., psi_1, 1
};

JannelliQ jannelli_q(const PointPoly& p);

/// Q computed from the coefficients through Newton power sums. Agrees with
/// W^T W and stays well defined at multiple roots.
Eigen::MatrixXd symmetrizer_from_coeffs(std::span<const double> monic_coeffs);

struct SylvesterBlock {
  int d = 0;
  Eigen::MatrixXd A;
  Eigen::MatrixXd Q;
  Eigen::MatrixXd W;
  Eigen::VectorXd psi;
  Eigen::VectorXd lambda;  // roots, matching the rows of W
};

SylvesterBlock sylvester_block(const PointPoly& p);

class BlockSystem {
 public:
  explicit BlockSystem(Problem problem);

  int m() const { return problem_.m; }
  /// N = m(m+1)/2.
  int size() const { return problem_.m * (problem_.m + 1) / 2; }
  /// First row of block d (0-based, size d+1).
  static int offset(int d) { return d * (d + 1) / 2; }
  const Problem& problem() const { return problem_; }

  /// Coefficients of the monic derivative P^(d), d = 1..m.
  std::vector<double> block_coeffs(int d, double x) const;
  std::vector<double> block_coeffs_x(int d, double x) const;

  Eigen::MatrixXd A(double x) const;
  Eigen::MatrixXd A_x(double x) const;
  Eigen::MatrixXd B(double t, double x) const;
  Eigen::MatrixXd Q(double x) const;
  /// d/dx of Q(x) A(x), exact in the coefficients.
  Eigen::MatrixXd QA_x(double x) const;
  /// Diagonal of Xi.
  Eigen::VectorXd Xi(double x) const;
  Eigen::VectorXd F(double t, double x) const;

  bool lower_order_depends_on_t() const { return lower_t_; }
  bool lower_order_vanishes() const { return lower_zero_; }

  /// max |tau_j(x)| over the given points.
  double tau_max(std::span<const double> xs) const;

 private:
  Problem problem_;
  std::vector<Expr> a_x_;
  bool lower_t_ = false;
  bool lower_zero_ = true;
};

BlockSystem assemble_block_system(const Problem& problem);

struct BoundOptions {
  int random_vectors = 1000;
  std::uint64_t seed = 0;
  bool exact = false;  // generalized eigenvalues where the weight is definite
  double ceiling = 1e8;
  double floor = 1e-12;
};

struct BoundEntry {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  bool is_max = true;  // value <= limit, otherwise value >= limit
  bool pass = true;
};

struct BoundReport {
  std::vector<BoundEntry> entries;
  std::size_t points = 0;
  double tau_max = 0.0;
  bool pass = true;

  const BoundEntry* find(const std::string& name) const;
};

/// Empirical constants of the symmetrizer inequalities over the grid.
BoundReport verify_bounds(const BlockSystem& bs, std::span<const TXPoint> grid,
                          const BoundOptions& opts = {});

/// inf (Q v, v) / v_last^2 for each diagonal block, minimized over blocks.
double weak_coercivity(const BlockSystem& bs, double x);

}  // namespace properhyp
