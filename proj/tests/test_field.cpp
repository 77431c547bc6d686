#include <doctest.h>

#include <cmath>
#include <random>

#include "sublevel/field.hpp"

using namespace sublevel::field;

namespace {

std::vector<Vector> random_points(int n, std::size_t count, double lo, double hi, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(lo, hi);
  std::vector<Vector> pts(count, Vector(n));
  for (auto& p : pts)
    for (auto& x : p) x = U(rng);
  return pts;
}

std::vector<Interval> cube(int n, double lo, double hi) { return std::vector<Interval>(n, {lo, hi}); }

// Max error of fd gradient/Laplacian against the analytic evaluators over
// cells at least two layers away from the box edge.
std::pair<double, double> fd_error(const AnalyticTestFunction& f, std::size_t res) {
  const int n = f.dim();
  GridSpec grid(cube(n, -1.0, 1.0), std::vector<std::size_t>(n, res));
  const auto ops = fd_operators(sample(f, grid));
  double eg = 0.0, el = 0.0;
  Vector x(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::size_t rem = k;
    bool inner = true;
    for (int a = 0; a < n; ++a) {
      const std::size_t i = rem % res;
      rem /= res;
      if (i < 2 || i + 2 >= res) inner = false;
    }
    if (!inner) continue;
    grid.center(k, x);
    const auto g = f.gradient(x);
    for (int a = 0; a < n; ++a) eg = std::max(eg, std::abs(ops.gradient[a][k] - g[a]));
    el = std::max(el, std::abs(ops.laplacian[k] - f.laplacian(x)));
  }
  return {eg, el};
}

}  // namespace

TEST_CASE("catalog closed forms") {
  const auto r = radial_extremal(2);
  for (const auto& p : random_points(2, 100, -3.0, 3.0, 1)) CHECK(r.laplacian(p) == 1.0);

  const auto q = quadratic({0.5, 3.0, 2.0});
  const Vector x{0.3, -0.2, 0.7};
  CHECK(q.hessian(x).determinant() == doctest::Approx(8.0 * 0.5 * 3.0 * 2.0));
  CHECK(quadratic({0.5, 0.5}).hessian(Vector{0.0, 0.0}).determinant() == doctest::Approx(1.0));

  CHECK(monomial_1d(3).value(Vector{2.0}) == doctest::Approx(8.0 / 6.0));
  CHECK(eccentric(0.01).value(Vector{1.0, 2.0}) == doctest::Approx(1.04));
  CHECK(skew().value(Vector{2.0, 3.0}) == 6.0);
  CHECK(sum_sq().laplacian(Vector{0.1, 0.2}) == 4.0);
}

TEST_CASE("catalog rejects bad parameters") {
  CHECK_THROWS_AS(monomial_1d(0), std::invalid_argument);
  CHECK_THROWS_AS(radial_extremal(0), std::invalid_argument);
  CHECK_THROWS_AS(quadratic({1.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(quadratic({1.0, -2.0}), std::invalid_argument);
  CHECK_THROWS_AS(parse_function("nonsense"), std::invalid_argument);
  CHECK_THROWS_AS(parse_function("quadratic:a=1,x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_function("quadratic:b=1"), std::invalid_argument);
}

TEST_CASE("harmonic probes have unit Laplacian everywhere") {
  const auto pts = random_points(2, 10000, -2.0, 2.0, 7);
  for (double A : {0.1, 1.0, 10.0}) {
    for (int m : {0, 1, 3, 4, 7}) {
      const auto f = harmonic_probe(A, m);
      bool all_one = true;
      for (const auto& p : pts) all_one = all_one && f.laplacian(p) == 1.0;
      CHECK(all_one);
    }
  }
  const auto r = scaled(radial_extremal(3), 1.0);
  bool all_one = true;
  for (const auto& p : random_points(3, 10000, -2.0, 2.0, 8)) all_one = all_one && r.laplacian(p) == 1.0;
  CHECK(all_one);
}

TEST_CASE("Hessian trace equals Laplacian and gradients match central differences") {
  const double h = 1e-5;
  for (const auto& f : builtin_catalog()) {
    CAPTURE(f.id());
    for (const auto& p : random_points(f.dim(), 50, -1.5, 1.5, 3)) {
      if (f.has_hessian()) CHECK(std::abs(f.hessian(p).trace() - f.laplacian(p)) <= 1e-10);
      const auto g = f.gradient(p);
      for (int a = 0; a < f.dim(); ++a) {
        Vector xp = p, xm = p;
        xp[a] += h;
        xm[a] -= h;
        const double fd = (f.value(xp) - f.value(xm)) / (2.0 * h);
        CHECK(std::abs(fd - g[a]) <= 1e-6 * std::max(1.0, std::abs(g[a])));
      }
    }
  }
}

TEST_CASE("parse_function round trips catalog ids") {
  for (const auto& f : builtin_catalog()) {
    CAPTURE(f.id());
    const auto g = parse_function(f.id());
    CHECK(g.id() == f.id());
    const Vector x(f.dim(), 0.37);
    CHECK(g.value(x) == f.value(x));
  }
  const auto s = parse_function("quadratic:a=1,0.01,shift=0.5");
  CHECK(s.value(Vector{1.0, 10.0}) == doctest::Approx(1.0 + 1.0 - 0.5));
  CHECK(parse_function("harmonic_probe:A=0.1,m=3").value(Vector{1.0, 0.0}) == doctest::Approx(0.35));
}

TEST_CASE("sample") {
  const auto z = sample(constant(0.0, 2), cube(2, 0.0, 1.0), {64, 64});
  CHECK(z.samples().size() == 64u * 64u);
  CHECK(z.min() == 0.0);
  CHECK(z.max() == 0.0);

  const auto r = sample(radial_extremal(2), cube(2, -1.0, 1.0), {128, 128});
  const double h = 2.0 / 128;
  CHECK(r.max() <= 0.5);
  CHECK(r.max() >= 0.5 - h);
  CHECK(r.grid().spacing(0) == doctest::Approx(h));

  const auto s = sample(skew(), cube(2, 0.0, 1.0), {33, 33});
  bool symmetric = true;
  for (std::size_t j = 0; j < 33; ++j)
    for (std::size_t i = 0; i < 33; ++i) symmetric = symmetric && s.at(i, j) == s.at(j, i);
  CHECK(symmetric);

  CHECK_THROWS_AS(sample(sum_sq(), cube(3, 0.0, 1.0), {8, 8, 8}), std::invalid_argument);
  CHECK_THROWS_AS(sample(sum_sq(), cube(2, 0.0, 1.0), {1, 8}), std::invalid_argument);
  CHECK_THROWS_AS(GridSpec({{1.0, 1.0}}, {4}), std::invalid_argument);
}

TEST_CASE("fd operators are exact on quadratics") {
  const auto lap_r = fd_operators(sample(radial_extremal(2), cube(2, -1.0, 1.0), {64, 64})).laplacian;
  const auto lap_s = fd_operators(sample(sum_sq(), cube(2, -1.0, 1.0), {64, 64})).laplacian;
  const auto grad_x = fd_operators(sample(coordinate(2, 0), cube(2, -1.0, 1.0), {16, 16})).gradient;
  double er = 0.0, es = 0.0, eg = 0.0;
  for (std::size_t k = 0; k < lap_r.samples().size(); ++k) {
    er = std::max(er, std::abs(lap_r[k] - 1.0));
    es = std::max(es, std::abs(lap_s[k] - 4.0));
  }
  for (std::size_t k = 0; k < grad_x[0].samples().size(); ++k)
    eg = std::max({eg, std::abs(grad_x[0][k] - 1.0), std::abs(grad_x[1][k])});
  CHECK(er < 1e-9);
  CHECK(es < 1e-9);
  CHECK(eg < 1e-12);
  CHECK_THROWS_AS(fd_operators(sample(sum_sq(), cube(2, 0.0, 1.0), {2, 8})), std::invalid_argument);
}

TEST_CASE("fd operators converge at second order for every catalog member") {
  for (const auto& f : builtin_catalog()) {
    CAPTURE(f.id());
    const std::size_t base = f.dim() == 1 ? 64 : 32;
    const auto [g1, l1] = fd_error(f, base);
    const auto [g2, l2] = fd_error(f, 2 * base);
    // Quadratic members are differentiated exactly; only rate-test real errors.
    if (g1 > 1e-9) CHECK(g1 / g2 >= 3.5);
    if (l1 > 1e-9) CHECK(l1 / l2 >= 3.5);
  }
}

TEST_CASE("AM-GM Hessian inequality") {
  const auto pts = random_points(2, 20, -1.0, 1.0, 11);
  const auto eq = amgm_check(quadratic({1.0, 1.0}), pts);
  CHECK(eq.skipped == 0);
  CHECK(eq.worst_slack == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eq.rows[0].determinant == doctest::Approx(4.0));

  const auto r = amgm_check(quadratic({1.0, 4.0}), pts);
  CHECK(r.rows[0].determinant == doctest::Approx(16.0));
  CHECK(r.rows[0].bound == doctest::Approx(25.0));
  CHECK(r.worst_slack == doctest::Approx(9.0));

  const auto s = amgm_check(skew(), pts);
  CHECK(s.skipped == pts.size());
  CHECK(s.rows[0].determinant == doctest::Approx(-1.0));

  for (const auto& f : builtin_catalog()) {
    if (!f.has_hessian()) continue;
    const auto rep = amgm_check(f, random_points(f.dim(), 50, -1.0, 1.0, 5));
    for (const auto& row : rep.rows)
      if (row.convex) CHECK(row.slack >= -1e-9 * std::max(1.0, row.bound));
  }
}
