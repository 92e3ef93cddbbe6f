#include "properhyp/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "properhyp/symmetrizer.hpp"

namespace properhyp {

namespace {

std::string describe_non_finite(int step, int node, double x) {
  std::ostringstream os;
  os << "non-finite value at step " << step << ", node " << node << " (x=" << x << ")";
  return os.str();
}

constexpr double kSpeedFloor = 0.1;

bool is_zero(const Expr& e) { return e.is_constant() && e.constant_value() == 0.0; }

// Trapezoid weights over nodes [lo, hi] with spacing dx.
double trapezoid(const std::vector<double>& v, int lo, int hi, double dx) {
  if (hi <= lo) return 0.0;
  double s = 0.5 * (v[static_cast<std::size_t>(lo)] + v[static_cast<std::size_t>(hi)]);
  for (int i = lo + 1; i < hi; ++i) s += v[static_cast<std::size_t>(i)];
  return s * dx;
}

class Integrator {
 public:
  Integrator(const Problem& problem, const Grid& grid)
      : p_(problem), g_(grid), bs_(problem), n_(bs_.size()), nodes_(grid.nodes()) {
    const double lo = p_.x0 - p_.rho0;
    const double hi = p_.x0 + p_.rho0;
    Problem bare = p_;
    bare.r = Problem::zero_lower_order(p_.m);
    const BlockSystem alpha(bare);

    auto fill = [&](double x, double* A, double* B, double* Q) {
      const double xc = std::clamp(x, lo, hi);
      const Eigen::MatrixXd Am = bs_.A(xc);
      const Eigen::MatrixXd Bm = alpha.B(0.0, xc);
      for (int r = 0; r < n_; ++r) {
        for (int c = 0; c < n_; ++c) {
          A[r * n_ + c] = Am(r, c);
          B[r * n_ + c] = Bm(r, c);
        }
      }
      if (Q != nullptr) {
        const Eigen::MatrixXd Qm = bs_.Q(xc);
        for (int r = 0; r < n_; ++r) {
          for (int c = 0; c < n_; ++c) Q[r * n_ + c] = Qm(r, c);
        }
      }
    };
    const auto nn = static_cast<std::size_t>(n_ * n_);
    A_.resize(nn * static_cast<std::size_t>(nodes_));
    B_.resize(A_.size());
    Q_.resize(A_.size());
    for (int i = 0; i < nodes_; ++i) {
      fill(g_.x[static_cast<std::size_t>(i)], &A_[nn * static_cast<std::size_t>(i)],
           &B_[nn * static_cast<std::size_t>(i)], &Q_[nn * static_cast<std::size_t>(i)]);
    }
    if (g_.scheme == Scheme::lax_wendroff) {
      Ah_.resize(nn * static_cast<std::size_t>(nodes_ - 1));
      Bh_.resize(Ah_.size());
      for (int i = 0; i + 1 < nodes_; ++i) {
        fill(xh(i), &Ah_[nn * static_cast<std::size_t>(i)], &Bh_[nn * static_cast<std::size_t>(i)],
             nullptr);
      }
    }

    lower_zero_ = bs_.lower_order_vanishes();
    lower_t_ = bs_.lower_order_depends_on_t();
    f_zero_ = is_zero(p_.f);
    rho_.assign(static_cast<std::size_t>(n_ * nodes_), 0.0);
    if (g_.scheme == Scheme::lax_wendroff) rho_h_.assign(rho_.size(), 0.0);
    if (!lower_zero_) {
      fill_rho(0.0);
    }

    U_ = to_flat(initial_state(p_, g_));
    next_ = U_;
    fvals_.assign(static_cast<std::size_t>(nodes_), 0.0);
    if (g_.scheme == Scheme::lax_wendroff) {
      half_.assign(static_cast<std::size_t>(n_ * (nodes_ - 1)), 0.0);
      fh_.assign(static_cast<std::size_t>(nodes_ - 1), 0.0);
    }
  }

  int size() const { return n_; }
  int nodes() const { return nodes_; }
  const std::vector<double>& state() const { return U_; }
  double value(int node, int row) const {
    return U_[static_cast<std::size_t>(node * n_ + row)];
  }

  /// Forcing f at time t on every node (zero off the cone base), plus extra.
  void forcing(double t, const std::vector<double>* extra, std::vector<double>& out,
               bool half_nodes) const {
    const int count = half_nodes ? nodes_ - 1 : nodes_;
    out.assign(static_cast<std::size_t>(count), 0.0);
    const int lo = g_.pad;
    const int hi = g_.pad + g_.n_base;
    for (int i = 0; i < count; ++i) {
      const double x = half_nodes ? xh(i) : g_.x[static_cast<std::size_t>(i)];
      const bool inside = half_nodes ? (i >= lo && i < hi) : (i >= lo && i <= hi);
      if (!inside) continue;
      double v = f_zero_ ? 0.0 : eval_expr(p_.f, t, x);
      if (extra != nullptr) {
        v += half_nodes ? 0.5 * ((*extra)[static_cast<std::size_t>(i)] +
                                 (*extra)[static_cast<std::size_t>(i + 1)])
                        : (*extra)[static_cast<std::size_t>(i)];
      }
      out[static_cast<std::size_t>(i)] = v;
    }
  }

  void step(int n, const std::vector<double>* extra) {
    const double t = g_.t(n);
    if (!lower_zero_ && lower_t_) fill_rho(t);
    if (g_.scheme == Scheme::lax_friedrichs) {
      step_lf(t, extra);
    } else {
      step_lw(t, extra);
    }
    for (std::size_t k = 0; k < next_.size(); ++k) {
      if (!std::isfinite(next_[k])) {
        const int node = static_cast<int>(k) / n_;
        throw NonFinite(n + 1, node, g_.x[static_cast<std::size_t>(node)]);
      }
    }
    std::swap(U_, next_);
  }

  TraceRow record(int n, const std::vector<double>* extra) {
    const double t = g_.t(n);
    const auto [lo, hi] = g_.cone(n);
    TraceRow row;
    row.t = t;
    row.cone_lo = g_.x[static_cast<std::size_t>(lo)];
    row.cone_hi = g_.x[static_cast<std::size_t>(hi)];

    std::vector<double> e(static_cast<std::size_t>(nodes_), 0.0);
    const auto nn = static_cast<std::size_t>(n_ * n_);
    for (int i = 0; i < nodes_; ++i) {
      const double* Q = &Q_[nn * static_cast<std::size_t>(i)];
      const double* u = &U_[static_cast<std::size_t>(i * n_)];
      double acc = 0.0;
      for (int r = 0; r < n_; ++r) {
        double qr = 0.0;
        for (int c = 0; c < n_; ++c) qr += Q[r * n_ + c] * u[c];
        acc += u[r] * qr;
      }
      e[static_cast<std::size_t>(i)] = acc;
    }
    row.energy = 0.5 * trapezoid(e, lo, hi, g_.dx);
    row.total_energy = 0.5 * trapezoid(e, 0, nodes_ - 1, g_.dx);

    forcing(t, extra, fvals_, false);
    for (auto& v : fvals_) v *= v;
    row.forcing_norm = trapezoid(fvals_, lo, hi, g_.dx);

    for (int d = 0; d < p_.m; ++d) {
      const int r = BlockSystem::offset(d) + d;
      for (int i = 0; i < nodes_; ++i) {
        const double v = value(i, r);
        e[static_cast<std::size_t>(i)] = v * v;
      }
      row.dt_norms.push_back(trapezoid(e, lo, hi, g_.dx));
    }
    return row;
  }

  Eigen::MatrixXd state_matrix() const {
    Eigen::MatrixXd out(n_, nodes_);
    for (int i = 0; i < nodes_; ++i) {
      for (int r = 0; r < n_; ++r) out(r, i) = value(i, r);
    }
    return out;
  }

 private:
  double xh(int i) const {
    return 0.5 * (g_.x[static_cast<std::size_t>(i)] + g_.x[static_cast<std::size_t>(i + 1)]);
  }

  static std::vector<double> to_flat(const Eigen::MatrixXd& M) {
    std::vector<double> out(static_cast<std::size_t>(M.size()));
    for (Eigen::Index i = 0; i < M.cols(); ++i) {
      for (Eigen::Index r = 0; r < M.rows(); ++r) {
        out[static_cast<std::size_t>(i * M.rows() + r)] = M(r, i);
      }
    }
    return out;
  }

  // Last row of B coming from the lower-order terms.
  void fill_rho(double t) {
    const double lo = p_.x0 - p_.rho0;
    const double hi = p_.x0 + p_.rho0;
    auto row = [&](double x, double* out) {
      const double xc = std::clamp(x, lo, hi);
      for (int d = 0; d < p_.m; ++d) {
        const auto& rd = p_.r[static_cast<std::size_t>(d)];
        for (int j = 0; j <= d; ++j) {
          out[BlockSystem::offset(d) + j] = eval_expr(rd[static_cast<std::size_t>(d - j)], t, xc);
        }
      }
    };
    for (int i = 0; i < nodes_; ++i) row(g_.x[static_cast<std::size_t>(i)], &rho_[static_cast<std::size_t>(i * n_)]);
    if (!rho_h_.empty()) {
      for (int i = 0; i + 1 < nodes_; ++i) row(xh(i), &rho_h_[static_cast<std::size_t>(i * n_)]);
    }
  }

  // out += B u + F e_last
  void source(const double* B, const double* rho, const double* u, double f, double* out,
              double scale) const {
    for (int r = 0; r < n_; ++r) {
      double acc = 0.0;
      for (int c = 0; c < n_; ++c) acc += B[r * n_ + c] * u[c];
      out[r] += scale * acc;
    }
    double last = f;
    if (!lower_zero_) {
      for (int c = 0; c < n_; ++c) last += rho[c] * u[c];
    }
    out[n_ - 1] += scale * last;
  }

  void step_lf(double t, const std::vector<double>* extra) {
    forcing(t, extra, fvals_, false);
    const double lam = g_.dt / (2.0 * g_.dx);
    const auto nn = static_cast<std::size_t>(n_ * n_);
    for (int i = 1; i + 1 < nodes_; ++i) {
      const double* up = &U_[static_cast<std::size_t>((i + 1) * n_)];
      const double* um = &U_[static_cast<std::size_t>((i - 1) * n_)];
      const double* u = &U_[static_cast<std::size_t>(i * n_)];
      const double* A = &A_[nn * static_cast<std::size_t>(i)];
      double* out = &next_[static_cast<std::size_t>(i * n_)];
      for (int r = 0; r < n_; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n_; ++c) acc += A[r * n_ + c] * (up[c] - um[c]);
        out[r] = 0.5 * (up[r] + um[r]) + lam * acc;
      }
      source(&B_[nn * static_cast<std::size_t>(i)], &rho_[static_cast<std::size_t>(i * n_)], u,
             fvals_[static_cast<std::size_t>(i)], out, g_.dt);
    }
    copy_boundary();
  }

  void step_lw(double t, const std::vector<double>* extra) {
    const auto nn = static_cast<std::size_t>(n_ * n_);
    const double lam_h = g_.dt / (2.0 * g_.dx);
    forcing(t, extra, fh_, true);
    std::vector<double> avg(static_cast<std::size_t>(n_));
    for (int i = 0; i + 1 < nodes_; ++i) {
      const double* up = &U_[static_cast<std::size_t>((i + 1) * n_)];
      const double* u = &U_[static_cast<std::size_t>(i * n_)];
      const double* A = &Ah_[nn * static_cast<std::size_t>(i)];
      double* out = &half_[static_cast<std::size_t>(i * n_)];
      for (int r = 0; r < n_; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n_; ++c) acc += A[r * n_ + c] * (up[c] - u[c]);
        avg[static_cast<std::size_t>(r)] = 0.5 * (up[r] + u[r]);
        out[r] = avg[static_cast<std::size_t>(r)] + lam_h * acc;
      }
      source(&Bh_[nn * static_cast<std::size_t>(i)], &rho_h_[static_cast<std::size_t>(i * n_)],
             avg.data(), fh_[static_cast<std::size_t>(i)], out, 0.5 * g_.dt);
    }
    forcing(t + 0.5 * g_.dt, extra, fvals_, false);
    const double lam = g_.dt / g_.dx;
    for (int i = 1; i + 1 < nodes_; ++i) {
      const double* hp = &half_[static_cast<std::size_t>(i * n_)];
      const double* hm = &half_[static_cast<std::size_t>((i - 1) * n_)];
      const double* u = &U_[static_cast<std::size_t>(i * n_)];
      const double* A = &A_[nn * static_cast<std::size_t>(i)];
      double* out = &next_[static_cast<std::size_t>(i * n_)];
      for (int r = 0; r < n_; ++r) {
        double acc = 0.0;
        for (int c = 0; c < n_; ++c) acc += A[r * n_ + c] * (hp[c] - hm[c]);
        avg[static_cast<std::size_t>(r)] = 0.5 * (hp[r] + hm[r]);
        out[r] = u[r] + lam * acc;
      }
      source(&B_[nn * static_cast<std::size_t>(i)], &rho_[static_cast<std::size_t>(i * n_)],
             avg.data(), fvals_[static_cast<std::size_t>(i)], out, g_.dt);
    }
    copy_boundary();
  }

  void copy_boundary() {
    for (int r = 0; r < n_; ++r) {
      next_[static_cast<std::size_t>(r)] = next_[static_cast<std::size_t>(n_ + r)];
      next_[static_cast<std::size_t>((nodes_ - 1) * n_ + r)] =
          next_[static_cast<std::size_t>((nodes_ - 2) * n_ + r)];
    }
  }

  const Problem& p_;
  const Grid& g_;
  BlockSystem bs_;
  int n_;
  int nodes_;
  std::vector<double> A_, B_, Q_, Ah_, Bh_;
  std::vector<double> rho_, rho_h_;
  bool lower_zero_ = true;
  bool lower_t_ = false;
  bool f_zero_ = true;
  std::vector<double> U_, next_, half_;
  std::vector<double> fvals_, fh_;
};

double min_weak_coercivity(const Problem& problem, const Grid& grid) {
  const BlockSystem bs(problem);
  double best = std::numeric_limits<double>::infinity();
  for (int i = grid.pad; i <= grid.pad + grid.n_base; ++i) {
    best = std::min(best, weak_coercivity(bs, grid.x[static_cast<std::size_t>(i)]));
  }
  return best;
}

std::vector<double> base_nodes(const Problem& problem, int n_base) {
  std::vector<double> xs;
  const double dx = 2.0 * problem.rho0 / n_base;
  for (int i = 0; i <= n_base; ++i) xs.push_back(problem.x0 - problem.rho0 + i * dx);
  return xs;
}

int even_cells(double width, double dx) {
  int n = static_cast<int>(std::lround(width / dx));
  n = std::max(n, 2);
  if (n % 2 != 0) ++n;
  return n;
}

}  // namespace

NonFinite::NonFinite(int step, int node, double x)
    : std::runtime_error(describe_non_finite(step, node, x)), step_(step), node_(node) {}

std::pair<int, int> Grid::cone(int step) const {
  const double shrink = tau_max * t(step);
  int k = static_cast<int>(std::ceil(shrink / dx - 1e-9));
  k = std::clamp(k, 0, n_base / 2);
  return {pad + k, pad + n_base - k};
}

Grid make_grid(const Problem& problem, const GridSpec& spec) {
  validate(problem);
  if (!(spec.cfl > 0.0) || spec.cfl > 0.9) {
    throw CFLViolation("CFL number must lie in (0, 0.9]");
  }
  Grid g;
  g.cfl = spec.cfl;
  g.scheme = spec.scheme;
  if (spec.base_cells > 0) {
    g.n_base = spec.base_cells + spec.base_cells % 2;
  } else {
    if (!(spec.dx > 0.0)) throw std::invalid_argument("dx must be positive");
    g.n_base = even_cells(2.0 * problem.rho0, spec.dx);
  }
  g.dx = 2.0 * problem.rho0 / g.n_base;
  g.tau_max = spec.tau_max > 0.0 ? spec.tau_max
                                 : tau_max(problem.principal(), base_nodes(problem, g.n_base));

  g.T0 = g.tau_max > 0.0 ? std::min(problem.rho0 / g.tau_max, problem.T) : problem.T;
  const double dt_max = g.cfl * g.dx / std::max(g.tau_max, kSpeedFloor);
  g.n_steps = std::max(1, static_cast<int>(std::ceil(g.T0 / dt_max - 1e-9)));
  g.dt = g.T0 / g.n_steps;
  g.pad = g.n_steps + 1;
  const int nodes = g.n_base + 2 * g.pad + 1;
  g.x.resize(static_cast<std::size_t>(nodes));
  const double left = problem.x0 - problem.rho0;
  for (int i = 0; i < nodes; ++i) g.x[static_cast<std::size_t>(i)] = left + (i - g.pad) * g.dx;
  return g;
}

Eigen::MatrixXd initial_state(const Problem& problem, const Grid& grid) {
  const int m = problem.m;
  const int n = m * (m + 1) / 2;
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(n, grid.nodes());
  std::vector<Expr> entries(static_cast<std::size_t>(n));
  for (int d = 0; d < m; ++d) {
    for (int j = 0; j <= d; ++j) {
      entries[static_cast<std::size_t>(BlockSystem::offset(d) + j)] =
          diff_expr(problem.phi[static_cast<std::size_t>(j)], Var::x, d - j);
    }
  }
  for (int i = grid.pad; i <= grid.pad + grid.n_base; ++i) {
    const double x = grid.x[static_cast<std::size_t>(i)];
    for (int r = 0; r < n; ++r) U(r, i) = eval_expr(entries[static_cast<std::size_t>(r)], 0.0, x);
  }
  return U;
}

SolveResult solve(const Problem& problem, const Grid& grid) {
  Integrator integ(problem, grid);
  SolveResult out;
  out.trace.m = problem.m;
  out.trace.weak_coercivity = min_weak_coercivity(problem, grid);
  out.trace.rows.reserve(static_cast<std::size_t>(grid.n_steps + 1));
  out.trace.rows.push_back(integ.record(0, nullptr));
  for (int n = 0; n < grid.n_steps; ++n) {
    integ.step(n, nullptr);
    out.trace.rows.push_back(integ.record(n + 1, nullptr));
  }
  out.final_state = integ.state_matrix();
  return out;
}

SolveResult solve_derived(const Problem& problem, const Grid& grid) {
  const auto derived = derived_operator(problem);
  Integrator base(problem, grid);
  Integrator top(derived.problem, grid);
  const int m = problem.m;
  const int nodes = grid.nodes();
  std::vector<double> extra(static_cast<std::size_t>(nodes), 0.0);
  bool any = false;
  for (const auto& c : derived.corrections) any = any || !is_zero(c);

  auto fill_extra = [&](int n) {
    if (!any) return;
    const double t = grid.t(n);
    const double lo = problem.x0 - problem.rho0;
    const double hi = problem.x0 + problem.rho0;
    for (int i = 0; i < nodes; ++i) {
      const double x = std::clamp(grid.x[static_cast<std::size_t>(i)], lo, hi);
      double v = 0.0;
      for (int d = 0; d < m; ++d) {
        const auto& c = derived.corrections[static_cast<std::size_t>(d)];
        if (is_zero(c)) continue;
        v += eval_expr(c, t, x) * base.value(i, BlockSystem::offset(d) + d);
      }
      extra[static_cast<std::size_t>(i)] = v;
    }
  };

  SolveResult out;
  out.trace.m = m;
  out.trace.weak_coercivity = min_weak_coercivity(derived.problem, grid);
  fill_extra(0);
  out.trace.rows.push_back(top.record(0, &extra));
  for (int n = 0; n < grid.n_steps; ++n) {
    top.step(n, &extra);
    base.step(n, nullptr);
    fill_extra(n + 1);
    out.trace.rows.push_back(top.record(n + 1, &extra));
  }
  out.final_state = top.state_matrix();
  return out;
}

namespace {

// Running E(0) + int_0^t ||F||^2 for each row.
std::vector<double> budgets(const EnergyTrace& trace) {
  std::vector<double> out;
  double integral = 0.0;
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    if (k > 0) {
      const auto& a = trace.rows[k - 1];
      const auto& b = trace.rows[k];
      integral += 0.5 * (b.t - a.t) * (a.forcing_norm + b.forcing_norm);
    }
    out.push_back(trace.rows.front().energy + integral);
  }
  return out;
}

}  // namespace

double empirical_constant(const EnergyTrace& trace) {
  if (trace.rows.empty()) return 0.0;
  const auto budget = budgets(trace);
  double c = 0.0;
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    c = std::max(c, trace.rows[k].energy / std::max(budget[k], 1e-30));
  }
  return c;
}

double total_energy_drift(const EnergyTrace& trace) {
  if (trace.rows.empty()) return 0.0;
  const double e0 = trace.rows.front().total_energy;
  if (e0 == 0.0) return 0.0;
  return std::abs(trace.rows.back().total_energy - e0) / e0;
}

bool time_derivative_bound_holds(const EnergyTrace& trace, double C) {
  if (!(trace.weak_coercivity > 0.0)) return false;
  const auto budget = budgets(trace);
  const double factor = 2.0 * C / trace.weak_coercivity;
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    double lhs = 0.0;
    for (double v : trace.rows[k].dt_norms) lhs += v;
    if (lhs > factor * budget[k] * (1.0 + 1e-9) + 1e-300) return false;
  }
  return true;
}

EnergyVerdict verify_energy_estimate(const Problem& problem, const GridSpec& spec) {
  EnergyVerdict v;
  const Grid coarse = make_grid(problem, spec);
  GridSpec fine_spec = spec;
  fine_spec.base_cells = coarse.n_base * 2;
  const Grid fine = make_grid(problem, fine_spec);
  v.C_emp = empirical_constant(solve(problem, coarse).trace);
  v.C_refined = empirical_constant(solve(problem, fine).trace);
  const bool finite = std::isfinite(v.C_emp) && std::isfinite(v.C_refined);
  if (!finite) return v;
  if (v.C_emp == 0.0 && v.C_refined == 0.0) {
    v.pass = true;
  } else {
    const double lo = std::min(v.C_emp, v.C_refined);
    const double hi = std::max(v.C_emp, v.C_refined);
    v.pass = lo > 0.0 && hi <= 2.0 * lo;
  }
  return v;
}

std::vector<ProperCheck> check_l1_hypotheses(const Problem& problem,
                                             std::span<const TXPoint> grid) {
  const auto derived = derived_operator(problem);
  const HPoly P = derived.problem.principal();
  std::vector<ProperCheck> out;
  for (int d = 0; d < problem.m; ++d) {
    const auto& row = derived.problem.r[static_cast<std::size_t>(d)];
    out.push_back(check_proper(row, P, d, grid));
  }
  return out;
}

namespace {

double l2_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Grid& g) {
  const auto [lo, hi] = g.cone(g.n_steps);
  std::vector<double> v(static_cast<std::size_t>(g.nodes()), 0.0);
  for (int i = lo; i <= hi; ++i) {
    const double d = a(0, i) - b(0, i);
    v[static_cast<std::size_t>(i)] = d * d;
  }
  return std::sqrt(trapezoid(v, lo, hi, g.dx));
}

// Max over the check grid of |l_eps| / bound for every lower-order term.
void transfer_check(const Problem& problem, const HPoly& p_eps, std::span<const TXPoint> grid,
                    SweepEntry& entry) {
  const HPoly P = problem.principal();
  for (int d = 0; d < problem.m; ++d) {
    const auto& row = problem.r[static_cast<std::size_t>(d)];
    if (std::all_of(row.begin(), row.end(), is_zero)) continue;
    std::vector<double> rv(row.size());
    for (const auto& pt : grid) {
      for (std::size_t k = 0; k < row.size(); ++k) rv[k] = eval_expr(row[k], pt.t, pt.x);
      auto p = monic_tau_derivative(P, d + 1, pt.x).as_point_poly();
      p.x = pt.x;
      const auto dec = try_minnorm_decompose(rv, p);
      if (!dec || dec->bound > 1e8) continue;
      auto pe = monic_tau_derivative(p_eps, d + 1, pt.x).as_point_poly();
      pe.x = pt.x;
      pe.clusters = cluster_roots(pe.roots, 0.0);
      const auto tr = transfer_to_nuij(dec->coeffs, p, pe);
      double top = 0.0;
      for (double c : tr.coeffs) top = std::max(top, std::abs(c));
      if (tr.bound > 0.0) entry.transfer_ratio = std::max(entry.transfer_ratio, top / tr.bound);
      if (top > tr.bound * (1.0 + 1e-9) + 1e-12) entry.transfer_ok = false;
    }
  }
}

}  // namespace

SweepReport nuij_sweep(const Problem& problem, const GridSpec& spec,
                       std::span<const double> epsilons, std::span<const TXPoint> check_grid) {
  validate(problem);
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    if (!(epsilons[k] > 0.0)) throw std::invalid_argument("epsilons must be positive");
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) {
      throw std::invalid_argument("epsilons must be strictly decreasing");
    }
  }
  const HPoly P = problem.principal();
  std::vector<Problem> variants;
  for (double eps : epsilons) {
    Problem q = problem;
    q.a = nuij_regularize(P, eps).coefficients();
    variants.push_back(std::move(q));
  }

  // Common grid: the fastest speed among all variants.
  const Grid probe = make_grid(problem, spec);
  std::vector<double> xs;
  for (int i = probe.pad; i <= probe.pad + probe.n_base; ++i) xs.push_back(probe.x[static_cast<std::size_t>(i)]);
  double speed = tau_max(P, xs);
  for (const auto& q : variants) speed = std::max(speed, tau_max(q.principal(), xs));
  GridSpec common = spec;
  common.base_cells = probe.n_base;
  common.tau_max = speed;
  const Grid grid = make_grid(problem, common);

  SweepReport report;
  report.tau_max = grid.tau_max;
  report.dx = grid.dx;
  report.dt = grid.dt;
  report.n_steps = grid.n_steps;

  auto run = [&](const Problem& q, SweepEntry& entry) -> std::optional<Eigen::MatrixXd> {
    try {
      auto res = solve(q, grid);
      entry.C_emp = empirical_constant(res.trace);
      entry.energy_T = res.trace.rows.back().energy;
      if (!std::isfinite(entry.C_emp)) entry.error = "non-finite energy constant";
      return std::move(res.final_state);
    } catch (const std::exception& e) {
      entry.error = e.what();
      return std::nullopt;
    }
  };

  const auto ref = run(problem, report.reference);
  if (!report.reference.error.empty()) report.pass = false;

  std::optional<Eigen::MatrixXd> prev;
  double prev_dist = -1.0;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    SweepEntry entry;
    entry.eps = epsilons[k];
    auto sol = run(variants[k], entry);
    if (sol) {
      try {
        transfer_check(problem, variants[k].principal(), check_grid, entry);
      } catch (const std::exception& e) {
        entry.error = e.what();
      }
      if (ref) entry.dist_zero = l2_distance(*sol, *ref, grid);
      if (prev) {
        entry.dist_prev = l2_distance(*sol, *prev, grid);
        if (prev_dist >= 0.0 && *entry.dist_prev > prev_dist * (1.0 + 1e-9) + 1e-12) {
          report.cauchy = false;
        }
        prev_dist = *entry.dist_prev;
      }
    }
    if (!entry.error.empty() || !entry.transfer_ok) report.pass = false;
    prev = std::move(sol);
    if (!prev) prev_dist = -1.0;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace properhyp
