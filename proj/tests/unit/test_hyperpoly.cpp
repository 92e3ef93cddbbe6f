#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "properhyp/hyperpoly.hpp"

using namespace properhyp;
using doctest::Approx;

namespace {

HPoly hpoly(std::initializer_list<const char*> coeffs) {
  std::vector<Expr> a;
  for (const char* c : coeffs) a.push_back(parse_expr(c));
  return HPoly(a);
}

PointPoly from_roots(std::vector<double> roots) {
  std::sort(roots.begin(), roots.end());
  return roots_of(poly_from_roots(roots));
}

void check_coeffs(const std::vector<double>& got, const std::vector<double>& want,
                  double tol = 1e-12) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(want[i]).epsilon(tol));
}

}  // namespace

TEST_SUITE("hyperpoly") {

TEST_CASE("roots") {
  auto p = roots_at(hpoly({"0", "-1"}), 0.0);
  CHECK(p.roots[0] == Approx(-1.0));
  CHECK(p.roots[1] == Approx(1.0));
  auto q = roots_at(hpoly({"0", "-1", "0"}), 0.0);
  CHECK(q.roots[0] == Approx(-1.0));
  CHECK(std::abs(q.roots[1]) < 1e-12);
  CHECK(q.roots[2] == Approx(1.0));
  CHECK_THROWS_AS(roots_at(hpoly({"0", "1"}), 0.0), NotHyperbolic);

  auto dbl = roots_at(hpoly({"0", "-x^2"}), 0.0);
  CHECK(dbl.clusters.size() == 1);
  CHECK_FALSE(dbl.strictly_hyperbolic());
  auto triple = roots_of(poly_from_roots(std::vector<double>{2.0, 2.0, 2.0}));
  CHECK(triple.clusters.size() == 1);
  for (double r : triple.roots) CHECK(r == Approx(2.0).epsilon(1e-4));
}

TEST_CASE("root reconstruction on random polynomials") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  std::uniform_int_distribution<int> deg(2, 6);
  double worst = 0.0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> roots(deg(rng));
    for (double& r : roots) r = u(rng);
    std::sort(roots.begin(), roots.end());
    auto p = roots_of(poly_from_roots(roots));
    for (std::size_t k = 0; k < roots.size(); ++k)
      worst = std::max(worst, std::abs(p.roots[k] - roots[k]));
  }
  CHECK(worst <= 1e-7);
}

TEST_CASE("reduced polynomials") {
  auto p = from_roots({-1, 0, 1});
  auto red = reduced_polys(p);
  check_coeffs(red[0], {1, -1, 0});
  check_coeffs(red[1], {1, 0, -1});
  check_coeffs(red[2], {1, 1, 0});
  std::vector<double> sum(3, 0.0);
  for (const auto& r : red)
    for (int i = 0; i < 3; ++i) sum[i] += r[i];
  check_coeffs(sum, poly_derivative(p.coeffs));

  auto q = reduced_polys(from_roots({-1, 1}));
  check_coeffs(q[0], {1, -1});
  check_coeffs(q[1], {1, 1});
}

TEST_CASE("reduced polynomials sum to the derivative") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> roots(2 + trial % 5);
    for (double& r : roots) r = u(rng);
    auto p = from_roots(roots);
    auto dp = poly_derivative(p.coeffs);
    std::vector<double> sum(dp.size(), 0.0);
    for (const auto& r : reduced_polys(p))
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += r[i];
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < sum.size(); ++i) {
      scale = std::max(scale, std::abs(dp[i]));
      err = std::max(err, std::abs(sum[i] - dp[i]));
    }
    CHECK(err <= 1e-9 * scale);
  }
}

TEST_CASE("bi-reduced polynomials") {
  auto bi = bireduced_polys(from_roots({-1, 0, 1}));
  check_coeffs(bi.at({0, 2}), {1, 0});
  check_coeffs(bi.at({0, 1}), {1, -1});
  auto two = bireduced_polys(from_roots({-1, 1}));
  check_coeffs(two.at({0, 1}), {1});
}

TEST_CASE("monic tau derivatives") {
  HPoly p = hpoly({"0", "-1", "0"});
  auto d2 = monic_tau_derivative(p, 2, 0.0);
  check_coeffs(d2.coeffs, {1, 0, -1.0 / 3});
  CHECK(d2.roots[0] == Approx(-1 / std::sqrt(3.0)));
  CHECK(d2.roots[1] == Approx(1 / std::sqrt(3.0)));
  auto d1 = monic_tau_derivative(p, 1, 0.0);
  check_coeffs(d1.coeffs, {1, 0});
  auto d3 = monic_tau_derivative(p, 3, 0.0);
  check_coeffs(d3.coeffs, {1, 0, -1, 0});
  CHECK(monic_derivative_factor(3, 2, 2) == Approx(1.0 / 3));
}

TEST_CASE("Nuij map") {
  auto a = nuij_map(from_roots({0, 0}), 0.1);
  check_coeffs(a.coeffs, {1, -0.2, 0});
  CHECK(std::abs(a.roots[0]) < 1e-12);
  CHECK(a.roots[1] == Approx(0.2));
  auto b = nuij_map(from_roots({-1, 1}), 0.1);
  CHECK(b.roots[0] == Approx(0.1 - std::sqrt(1.01)));
  CHECK(b.roots[1] == Approx(0.1 + std::sqrt(1.01)));

  for (double eps : {1e-1, 1e-2, 1e-3}) {
    auto c = nuij_regularize(from_roots({0, 0, 0}), eps);
    check_coeffs(c.coeffs, {1, -6 * eps, 6 * eps * eps, 0}, 1e-8);
    CHECK(c.roots[1] == Approx((3 - std::sqrt(3.0)) * eps).epsilon(1e-6));
    CHECK(c.roots[2] == Approx((3 + std::sqrt(3.0)) * eps).epsilon(1e-6));
    CHECK(c.strictly_hyperbolic());
  }

  HPoly sym = nuij_regularize(hpoly({"0", "-x^2"}), 0.1);
  auto at = roots_at(sym, 0.0);
  CHECK(at.roots[1] - at.roots[0] == Approx(0.2));
}

TEST_CASE("Nuij root shift and gap scale with eps") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> roots(2 + trial % 4);
    for (double& r : roots) r = u(rng);
    auto p = from_roots(roots);
    std::vector<double> shift, gap;
    for (double eps : {1e-1, 1e-2, 1e-3}) {
      auto q = nuij_regularize(p, eps);
      double s = 0.0, g = 1e300;
      for (std::size_t k = 0; k < roots.size(); ++k) s = std::max(s, std::abs(q.roots[k] - p.roots[k]));
      for (std::size_t k = 1; k < roots.size(); ++k) g = std::min(g, q.roots[k] - q.roots[k - 1]);
      shift.push_back(s / eps);
      gap.push_back(g);
    }
    CHECK(shift[1] == Approx(shift[2]).epsilon(0.2));
    CHECK(gap[2] > 0.0);
  }
}

TEST_CASE("Peyser brackets and interlacing") {
  auto b = peyser_bounds(std::vector<double>{-1, 0, 1}, 1);
  CHECK(b.first == Approx(-2.0 / 3));
  CHECK(b.second == Approx(-0.5));
  CHECK(-1 / std::sqrt(3.0) >= b.first);
  CHECK(-1 / std::sqrt(3.0) <= b.second);
  auto c = peyser_bounds(std::vector<double>{-1, 1}, 1);
  CHECK(c.first == Approx(0.0));
  CHECK(c.second == Approx(0.0));
  auto d = peyser_bounds(std::vector<double>{2, 2}, 1);
  CHECK(d.first == Approx(2.0));
  CHECK(d.second == Approx(2.0));

  const double s = 1 / std::sqrt(3.0);
  CHECK(check_interlacing(std::vector<double>{-1, 0, 1}, std::vector<double>{-s, s}, 1.0 / 3));
  CHECK_FALSE(check_interlacing(std::vector<double>{-1, 1}, std::vector<double>{0.99}, 0.5));
  CHECK(check_interlacing(std::vector<double>{0, 0}, std::vector<double>{0}, 0.7));
}

TEST_CASE("Hypothesis B constants") {
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(-1.0 + i * 0.05);
  auto wave = estimate_co_constant(hpoly({"0", "-1"}), grid);
  CHECK_FALSE(wave.unbounded);
  CHECK(wave.M == Approx(0.5));
  auto cone = estimate_co_constant(hpoly({"0", "-x^2"}), grid);
  CHECK_FALSE(cone.unbounded);
  CHECK(cone.M == Approx(0.5));

  std::vector<double> near_one;
  for (int k = 1; k <= 12; ++k) near_one.push_back(1.0 - std::pow(10.0, -k));
  near_one.push_back(1.0);
  auto bad = estimate_co_constant(hpoly({"-(1 + x)", "x"}), near_one);
  CHECK(bad.unbounded);

  CHECK(derived_co_constant(0.5, 0.5) == Approx(10.0));
  CHECK(derived_co_constant(0.0, 1.0) == Approx(2.0));
  CHECK(derived_co_constant(1.0, 1.0 / 3) == Approx(38.0));
}

TEST_CASE("tau_max") {
  std::vector<double> grid{-2.0, 0.0, 1.0};
  CHECK(tau_max(hpoly({"0", "-x^2"}), grid) == Approx(2.0));
}

}
