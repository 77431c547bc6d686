#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sublevel/field.hpp"
#include "sublevel/geometry.hpp"

using namespace sublevel::field;
using namespace sublevel::geometry;

namespace {

constexpr double kPi = std::numbers::pi;

GridField field_from(const GridSpec& grid, const std::function<double(double, double)>& fn) {
  std::vector<double> v(grid.size());
  for (std::size_t j = 0; j < grid.ny(); ++j)
    for (std::size_t i = 0; i < grid.nx(); ++i) v[grid.index(i, j)] = fn(grid.center(0, i), grid.center(1, j));
  return GridField(grid, std::move(v));
}

std::shared_ptr<const Shape> unit_disk() { return std::make_shared<Disk>(Vec2{0.0, 0.0}, 1.0); }

}  // namespace

TEST_CASE("sublevel measure of ellipses") {
  const auto g = sample(sum_sq(), grid2d({-1, 1}, {-1, 1}, 512));
  const auto m = sublevel_measure(g, 0.25);
  CHECK(m.area == doctest::Approx(kPi / 4).epsilon(0.02));
  CHECK(m.lower <= m.area);
  CHECK(m.area <= m.upper);
  CHECK(m.lower <= m.refined_area);
  CHECK(m.refined_area <= m.upper);
  CHECK(m.lower <= kPi / 4);
  CHECK(kPi / 4 <= m.upper);

  const auto q = sample(quadratic({1.0, 4.0}), grid2d({-1, 1}, {-1, 1}, 512));
  CHECK(sublevel_measure(q, 0.5).area == doctest::Approx(kPi * 0.5 / 2.0).epsilon(0.02));
  CHECK(sublevel_measure(q, -1.0).area == 0.0);
  CHECK(sublevel_measure(q, -1.0).upper == 0.0);

  double prev = -1.0;
  for (double s = 0.0; s <= 1.0; s += 0.05) {
    const double a = sublevel_measure(q, s).area;
    CHECK(a >= prev);
    prev = a;
  }
}

TEST_CASE("sublevel measure in one and three dimensions") {
  const auto g = sample(monomial_1d(2), {{-1.0, 1.0}}, {4096});
  const auto m = sublevel_measure(g, 0.02);
  const double exact = 2.0 * std::sqrt(2.0 * 0.02);
  CHECK(m.area == doctest::Approx(exact).epsilon(0.01));
  CHECK(m.lower <= exact);
  CHECK(exact <= m.upper);

  const auto b = sample(radial_extremal(3), {{-1, 1}, {-1, 1}, {-1, 1}}, {64, 64, 64});
  const double r = std::sqrt(6.0 * 0.1);
  CHECK(sublevel_measure(b, 0.1).area == doctest::Approx(4.0 / 3.0 * kPi * r * r * r).epsilon(0.03));
}

TEST_CASE("level length") {
  const auto x = sample(coordinate(2, 0), grid2d({0, 1}, {0, 1}, 64));
  CHECK(level_length(x, 0.5) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(level_length(x, 2.0) == 0.0);

  const auto s = sample(sum_sq(), grid2d({-1, 1}, {-1, 1}, 512));
  CHECK(level_length(s, 0.25) == doctest::Approx(kPi).epsilon(0.01));
  CHECK(level_length(s, 5.0) == 0.0);
  CHECK(level_length(s, -1.0) == 0.0);
}

TEST_CASE("marching squares segments close around a saddle-free blob") {
  const auto s = sample(sum_sq(), grid2d({-1, 1}, {-1, 1}, 40));
  const auto segs = marching_squares(s, 0.3);
  REQUIRE(!segs.empty());
  for (const auto& seg : segs) {
    CHECK(s[seg.owner] <= 0.3 + 1e-12);
    CHECK(std::abs(std::hypot(seg.a.x, seg.a.y) - std::sqrt(0.3)) < 0.02);
  }
}

TEST_CASE("decompose counts components and holes") {
  const auto grid = grid2d({-1, 1}, {-1, 1}, 200);
  const auto two = field_from(grid, [](double x, double y) {
    return std::min((x - 0.5) * (x - 0.5) + y * y, (x + 0.5) * (x + 0.5) + y * y);
  });
  const auto d2 = decompose(two, 0.04);
  REQUIRE(d2.components.size() == 2);
  for (const auto& c : d2.components) {
    CHECK(c.holes == 0);
    CHECK_FALSE(c.touches_outer_boundary);
    CHECK(c.area == doctest::Approx(kPi * 0.04).epsilon(0.03));
    CHECK(c.boundary_length == doctest::Approx(2 * kPi * 0.2).epsilon(0.02));
  }

  const auto ring = field_from(grid, [](double x, double y) {
    const double r = std::hypot(x, y) - 0.5;
    return r * r;
  });
  const auto d1 = decompose(ring, 0.01);
  REQUIRE(d1.components.size() == 1);
  CHECK(d1.components[0].holes == 1);
  CHECK(d1.components[0].boundary_length == doctest::Approx(2 * kPi * 0.4 + 2 * kPi * 0.6).epsilon(0.02));

  // Component areas add up to the sublevel measure.
  for (double t : {0.005, 0.01, 0.05, 0.2}) {
    const auto d = decompose(ring, t);
    double sum = 0.0;
    for (const auto& c : d.components) sum += c.area;
    CHECK(sum == doctest::Approx(sublevel_measure(ring, t).area));
  }

  const auto edge = decompose(sample(coordinate(2, 0), grid), 0.0);
  REQUIRE(edge.components.size() == 1);
  CHECK(edge.components[0].touches_outer_boundary);
  CHECK(edge.components[0].boundary_length == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("superlevel components of subharmonic-free functions touch the box") {
  const std::vector<AnalyticTestFunction> fs{radial_extremal(2), sum_sq(), quadratic({1.0, 4.0}),
                                             harmonic_probe(0.1, 3), harmonic_probe(1.0, 4),
                                             shifted(harmonic_probe(10.0, 3), 2.0)};
  for (const auto& f : fs) {
    CAPTURE(f.id());
    const auto g = sample(f, grid2d({-1, 1}, {-0.7, 1.3}, 96));
    for (int q = 1; q < 12; ++q) {
      const double t = g.min() + (g.max() - g.min()) * q / 12.0;
      for (const auto& c : decompose_superlevel(g, t).components) CHECK(c.touches_outer_boundary);
    }
  }
  // A function with an interior maximum is caught.
  const auto bump = sample(scaled(sum_sq(), -1.0), grid2d({-1, 1}, {-1, 1}, 64));
  const auto d = decompose_superlevel(bump, -0.1);
  REQUIRE(d.components.size() == 1);
  CHECK_FALSE(d.components[0].touches_outer_boundary);
  CHECK(d.components[0].peak_value <= 0.0);
}

TEST_CASE("domain mask classification") {
  const auto mask = DomainMask::rasterize(unit_disk(), grid2d({-1.2, 1.2}, {-1.2, 1.2}, 96));
  const auto& g = mask.grid();
  std::size_t interior = 0;
  for (std::size_t j = 0; j < g.ny(); ++j) {
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const bool adj = (i > 0 && mask.is_interior(i - 1, j)) || (i + 1 < g.nx() && mask.is_interior(i + 1, j)) ||
                       (j > 0 && mask.is_interior(i, j - 1)) || (j + 1 < g.ny() && mask.is_interior(i, j + 1));
      const auto c = mask.at(i, j);
      if (c == CellClass::interior) ++interior;
      else CHECK((c == CellClass::boundary_layer) == adj);
    }
  }
  CHECK(interior == mask.interior_count());
  CHECK(mask.interior_area() == doctest::Approx(kPi).epsilon(0.02));
  CHECK(mask.boundary_length() == doctest::Approx(2 * kPi));
  CHECK(mask.contains({0.0, 0.0}));
  CHECK_FALSE(mask.contains({0.9, 0.9}));
  CHECK_FALSE(mask.cell_of({5.0, 0.0}).has_value());

  const auto coarse = mask.coarsened();
  CHECK(coarse.grid().nx() == 48);
  CHECK(coarse.interior_area() == doctest::Approx(kPi).epsilon(0.05));
}

TEST_CASE("grid-only masks measure their boundary") {
  const auto grid = grid2d({-1.2, 1.2}, {-1.2, 1.2}, 480);
  auto annulus = std::make_shared<PerforatedDomain>(unit_disk(), std::vector<Disk>{Disk({0.0, 0.0}, 0.25)});
  const auto exact = DomainMask::rasterize(annulus, grid);
  std::vector<std::uint8_t> in(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) in[k] = exact.is_interior(k);
  const DomainMask raw(grid, in);

  CHECK(raw.boundary_length() == doctest::Approx(2 * kPi * 1.25).epsilon(0.03));
  const auto holes = raw.removed_boundary_lengths();
  REQUIRE(holes.size() == 1);
  CHECK(holes[0] == doctest::Approx(2 * kPi * 0.25).epsilon(0.05));
  REQUIRE(exact.removed_boundary_lengths().size() == 1);
  CHECK(exact.removed_boundary_lengths()[0] == doctest::Approx(2 * kPi * 0.25));

  const auto coarse = raw.coarsened();
  CHECK(coarse.interior_count() <= raw.interior_count() / 4);
  CHECK(coarse.interior_area() == doctest::Approx(kPi * (1 - 0.0625)).epsilon(0.05));
}

TEST_CASE("distance transform is exact") {
  const auto grid = grid2d({0, 3}, {0, 2}, 30, 20);
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.03);
  std::vector<std::uint8_t> target(grid.size());
  for (auto& t : target) t = coin(rng);
  target[17] = 1;
  const auto d = distance_transform(grid, target);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double best = INFINITY;
    for (std::size_t q = 0; q < grid.size(); ++q) {
      if (!target[q]) continue;
      const double dx = grid.center(0, k % 30) - grid.center(0, q % 30);
      const double dy = grid.center(1, k / 30) - grid.center(1, q / 30);
      best = std::min(best, std::hypot(dx, dy));
    }
    worst = std::max(worst, std::abs(best - d[k]));
  }
  CHECK(worst < 1e-12);
  const auto none = distance_transform(grid, std::vector<std::uint8_t>(grid.size(), 0));
  CHECK(std::isinf(none[0]));
}

TEST_CASE("distance features") {
  const auto grid = grid2d({-1.1, 1.1}, {-1.1, 1.1}, 440);
  const double h = grid.spacing(0);
  const auto disk = DomainMask::rasterize(unit_disk(), grid);
  const std::vector<double> offsets{0.25, 0.5};
  const auto feat = distance_features(disk, offsets);
  CHECK(std::abs(feat.inradius - 1.0) <= h);
  CHECK(feat.parallel_lengths.at(0.5) == doctest::Approx(2 * kPi * 1.5).epsilon(0.02));
  CHECK(feat.parallel_lengths.at(0.25) == doctest::Approx(2 * kPi * 1.25).epsilon(0.02));

  // Convex polygon: parallel curve excess never beats 2 pi s.
  auto hex = std::make_shared<ConvexPolygon>(std::vector<Vec2>{
      {0.8, 0.0}, {0.4, 0.6}, {-0.4, 0.6}, {-0.8, 0.0}, {-0.4, -0.6}, {0.4, -0.6}});
  const auto hm = DomainMask::rasterize(hex, grid2d({-1, 1}, {-1, 1}, 400));
  const double hh = hm.grid().spacing(0);
  std::vector<double> ss;
  for (int q = 1; q <= 8; ++q) ss.push_back(0.05 * q);
  const auto hf = distance_features(hm, ss);
  for (double s : ss) {
    CHECK(hf.parallel_lengths.at(s) - hex->perimeter() <= 2 * kPi * s + 8 * hh);
    CHECK(hf.parallel_lengths.at(s) - hex->perimeter() == doctest::Approx(2 * kPi * s).epsilon(0.05));
  }
  std::vector<std::uint8_t> in(hm.grid().size());
  for (std::size_t k = 0; k < in.size(); ++k) in[k] = hm.is_interior(k);
  CHECK(DomainMask(hm.grid(), in).boundary_length() == doctest::Approx(hex->perimeter()).epsilon(0.01));

  const DomainMask empty(grid, std::vector<std::uint8_t>(grid.size(), 0));
  CHECK_THROWS_AS(distance_features(empty), std::invalid_argument);
}

TEST_CASE("coarea identity") {
  for (const auto& f : {sum_sq(), harmonic_probe(0.1, 3)}) {
    CAPTURE(f.id());
    const auto g = sample(f, grid2d({-1, 1}, {-1, 1}, 256));
    const auto ops = fd_operators(g);
    double grad_int = 0.0;
    for (std::size_t k = 0; k < g.samples().size(); ++k)
      grad_int += std::hypot(ops.gradient[0][k], ops.gradient[1][k]);
    grad_int *= g.grid().cell_volume();
    const double lo = g.min(), hi = g.max();
    const int nt = 2000;
    const double dt = (hi - lo) / nt;
    double lev_int = 0.0;
    for (int q = 0; q < nt; ++q) lev_int += level_length(g, lo + (q + 0.5) * dt) * dt;
    CHECK(lev_int == doctest::Approx(grad_int).epsilon(0.02));
  }
}
