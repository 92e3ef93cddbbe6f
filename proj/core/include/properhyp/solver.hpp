#pragma once

// Finite-difference integration of the block system on a padded interval,
// energy bookkeeping on the shrinking cone I_t = [x0 - rho(t), x0 + rho(t)],
// rho(t) = rho0 - tau_max t, and the Nuij sweep driver.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "properhyp/decomposition.hpp"
#include "properhyp/problem.hpp"

namespace properhyp {

enum class Scheme { lax_friedrichs, lax_wendroff };

class CFLViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NonFinite : public std::runtime_error {
 public:
  NonFinite(int step, int node, double x);
  int step() const noexcept { return step_; }
  int node() const noexcept { return node_; }

 private:
  int step_;
  int node_;
};

struct GridSpec {
  double dx = 0.01;
  /// Overrides dx when positive: number of cells across the cone base (rounded up to even).
  int base_cells = 0;
  double cfl = 0.5;
  Scheme scheme = Scheme::lax_friedrichs;
  /// Uses this speed instead of the one measured on the cone base when positive.
  double tau_max = 0.0;
};

struct Grid {
  double dx = 0.0;
  double dt = 0.0;
  double cfl = 0.0;
  double tau_max = 0.0;
  double T0 = 0.0;
  int n_steps = 0;
  int n_base = 0;  // cells across the cone base
  int pad = 0;     // extra cells on each side
  Scheme scheme = Scheme::lax_friedrichs;
  std::vector<double> x;

  int nodes() const { return static_cast<int>(x.size()); }
  double t(int step) const { return step * dt; }
  /// Node index range [lo, hi] of I_t at the given step, snapped inward.
  std::pair<int, int> cone(int step) const;
};

/// Throws CFLViolation unless 0 < cfl <= 0.9.
Grid make_grid(const Problem& problem, const GridSpec& spec);

/// N x nodes; column i holds (u^(0), ..., u^(m-1)) at node i, zero off the base.
Eigen::MatrixXd initial_state(const Problem& problem, const Grid& grid);

struct TraceRow {
  double t = 0.0;
  double energy = 0.0;
  double forcing_norm = 0.0;     // ||F(t)||^2 on I_t
  std::vector<double> dt_norms;  // ||d_t^d u(t)||^2 on I_t, d = 0..m-1
  double cone_lo = 0.0;
  double cone_hi = 0.0;
  double total_energy = 0.0;  // over the whole padded interval
};

struct EnergyTrace {
  int m = 0;
  double weak_coercivity = 0.0;  // min over the cone base
  std::vector<TraceRow> rows;
};

struct SolveResult {
  EnergyTrace trace;
  Eigen::MatrixXd final_state;
};

SolveResult solve(const Problem& problem, const Grid& grid);

/// Solves the problem for u_x, feeding the part of its forcing that depends on
/// u from a simultaneous solve of the original problem on the same grid.
SolveResult solve_derived(const Problem& problem, const Grid& grid);

/// max_t E(t) / (E(0) + int_0^t ||F||^2), denominator floored at 1e-30.
double empirical_constant(const EnergyTrace& trace);

/// |E_total(T) - E_total(0)| / E_total(0); zero for a zero trace.
double total_energy_drift(const EnergyTrace& trace);

/// sum_d ||d_t^d u||^2 <= (2 C / gamma) (E(0) + int ||F||^2) at every row.
bool time_derivative_bound_holds(const EnergyTrace& trace, double C);

struct EnergyVerdict {
  double C_emp = 0.0;
  double C_refined = 0.0;
  bool pass = false;
};

/// Solves at the given grid and at half the spacing; passes iff both constants
/// are finite and within a factor of two of each other.
EnergyVerdict verify_energy_estimate(const Problem& problem, const GridSpec& spec);

/// Hypothesis C for the derived operator, one entry per d = 0..m-1.
std::vector<ProperCheck> check_l1_hypotheses(const Problem& problem,
                                             std::span<const TXPoint> grid);

struct SweepEntry {
  double eps = 0.0;
  double C_emp = 0.0;
  double energy_T = 0.0;
  std::optional<double> dist_prev;  // to the previous eps
  std::optional<double> dist_zero;  // to the eps = 0 solution
  double transfer_ratio = 0.0;      // max |l_eps| / closed-form bound
  bool transfer_ok = true;
  std::string error;
};

struct SweepReport {
  double tau_max = 0.0;
  double dx = 0.0;
  double dt = 0.0;
  int n_steps = 0;
  SweepEntry reference;  // eps = 0
  std::vector<SweepEntry> entries;
  bool cauchy = true;
  bool pass = true;
};

/// Replaces P by its (m-1)-fold Nuij regularization for each eps and solves
/// on a common grid. Throws std::invalid_argument unless the epsilons are
/// positive and strictly decreasing.
SweepReport nuij_sweep(const Problem& problem, const GridSpec& spec,
                       std::span<const double> epsilons, std::span<const TXPoint> check_grid);

}  // namespace properhyp
