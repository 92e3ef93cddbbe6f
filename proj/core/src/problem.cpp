#include "properhyp/problem.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace properhyp {

std::vector<std::vector<Expr>> Problem::zero_lower_order(int m) {
  std::vector<std::vector<Expr>> out;
  for (int d = 0; d < m; ++d) out.emplace_back(static_cast<std::size_t>(d + 1), Expr());
  return out;
}

void validate(const Problem& p) {
  auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
  if (p.m < 2) fail("m must be at least 2");
  const auto m = static_cast<std::size_t>(p.m);
  if (p.a.size() != m) fail("expected " + std::to_string(p.m) + " principal coefficients");
  if (p.phi.size() != m) fail("expected " + std::to_string(p.m) + " initial data");
  if (p.r.size() != m) fail("expected " + std::to_string(p.m) + " rows of lower-order terms");
  for (std::size_t d = 0; d < m; ++d) {
    if (p.r[d].size() != d + 1) {
      fail("lower-order row " + std::to_string(d) + " must have " + std::to_string(d + 1) +
           " entries");
    }
  }
  for (std::size_t k = 0; k < m; ++k) {
    if (p.a[k].depends_on(Var::t)) fail("a_" + std::to_string(k + 1) + " must not depend on t");
    if (p.phi[k].depends_on(Var::t)) fail("phi_" + std::to_string(k) + " must not depend on t");
  }
  if (!std::isfinite(p.x_lo) || !std::isfinite(p.x_hi) || !(p.x_lo < p.x_hi)) {
    fail("domain must be a non-empty finite interval");
  }
  if (!std::isfinite(p.rho0) || !(p.rho0 > 0.0)) fail("rho0 must be positive");
  if (!std::isfinite(p.x0)) fail("x0 must be finite");
  if (p.x0 - p.rho0 < p.x_lo || p.x0 + p.rho0 > p.x_hi) {
    fail("cone base must lie inside the domain");
  }
  if (!std::isfinite(p.T) || !(p.T > 0.0)) fail("T must be positive");
}

DerivedProblem derived_operator(const Problem& p) {
  validate(p);
  const int m = p.m;
  DerivedProblem out;
  Problem& q = out.problem;
  q = p;
  for (int d = 0; d < m; ++d) {
    auto& row = q.r[static_cast<std::size_t>(d)];
    for (int k = 0; k <= d; ++k) {
      auto& entry = row[static_cast<std::size_t>(k)];
      if (d == m - 1) {
        entry = entry - diff_expr(p.a[static_cast<std::size_t>(k)], Var::x);
      } else {
        entry = entry + diff_expr(p.r[static_cast<std::size_t>(d + 1)][static_cast<std::size_t>(k + 1)],
                                  Var::x);
      }
    }
  }
  q.f = diff_expr(p.f, Var::x);
  for (auto& phi : q.phi) phi = diff_expr(phi, Var::x);
  for (int d = 0; d < m; ++d) {
    out.corrections.push_back(diff_expr(p.r[static_cast<std::size_t>(d)][0], Var::x));
  }
  return out;
}

}  // namespace properhyp
