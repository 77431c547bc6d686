#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sublevel/heat.hpp"
#include "sublevel/stochastic.hpp"

using namespace sublevel;
using namespace sublevel::geometry;
using namespace sublevel::heat;

namespace {

constexpr double kHalfSpace = 2.0 / 1.7724538509055159;  // 2 / sqrt(pi)

std::shared_ptr<const Shape> unit_disk() { return std::make_shared<Disk>(Vec2{0.0, 0.0}, 1.0); }

std::shared_ptr<const DomainMask> disk_mask(std::size_t n) {
  return std::make_shared<const DomainMask>(
      DomainMask::rasterize(unit_disk(), field::grid2d({-1.05, 1.05}, {-1.05, 1.05}, n)));
}

}  // namespace

TEST_CASE("evolve basics") {
  const HeatState s0(disk_mask(64));
  CHECK(heat_content(s0) == 0.0);
  const auto same = evolve(s0, 0.0);
  CHECK(same.temps() == s0.temps());
  CHECK_THROWS_AS(evolve(s0, 0.1, 1.0), std::invalid_argument);
  const auto s1 = evolve(s0, 0.01);
  CHECK(s1.time() == 0.01);
  CHECK_THROWS_AS(evolve(s1, 0.005), std::invalid_argument);
  CHECK(default_dt(s0.mask()) <= s0.stencil().max_stable_dt());
}

TEST_CASE("unit square heats up uniformly") {
  auto sq = std::make_shared<Rectangle>(Vec2{0.0, 0.0}, Vec2{1.0, 1.0});
  auto mask = std::make_shared<const DomainMask>(DomainMask::rasterize(sq, field::grid2d({-0.05, 1.05}, {-0.05, 1.05}, 66)));
  const auto s = evolve(HeatState(mask), 2.0);
  CHECK(1.0 - s.min_temp() < 1e-3);
  CHECK(heat_content(s) == doctest::Approx(mask->interior_area()).epsilon(1e-3));
}

TEST_CASE("symmetric masks stay symmetric; content grows monotonically") {
  const auto mask = disk_mask(96);
  std::vector<HeatSample> series;
  const auto s = evolve(HeatState(mask), 0.02, 0.0, &series);
  const auto& g = mask->grid();
  double asym = 0.0;
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const Vec2 p = mask->cell_center(g.index(i, j));
      asym = std::max({asym, std::abs(s.temp_at(p) - s.temp_at({-p.x, p.y})),
                       std::abs(s.temp_at(p) - s.temp_at({p.y, p.x}))});
    }
  CHECK(asym < 1e-12);
  REQUIRE(series.size() > 10);
  for (std::size_t k = 1; k < series.size(); ++k) {
    CHECK(series[k].heat_content >= series[k - 1].heat_content);
    CHECK(series[k].min_temp >= 0.0);
  }
  CHECK(series.back().time == doctest::Approx(0.02));
}

TEST_CASE("heat content near the boundary follows the half-space profile") {
  const double t = 1e-4;
  const auto mask = disk_mask(1024);
  const double content = heat_content(evolve(HeatState(mask), t));
  CHECK(content == doctest::Approx(kHalfSpace * std::sqrt(t) * 2 * std::numbers::pi).epsilon(0.10));
  CHECK(heat_content(evolve(HeatState(disk_mask(64)), 50.0)) == doctest::Approx(disk_mask(64)->interior_area()));
}

TEST_CASE("heat content ratio against boundary length") {
  const auto disk = disk_mask(512);
  const auto est = lemma7_richardson(*disk, 1e-4);
  CHECK(est.extrapolated == doctest::Approx(kHalfSpace).epsilon(0.15));
  CHECK(est.fine < est.extrapolated);

  auto ann = std::make_shared<PerforatedDomain>(unit_disk(), std::vector<Disk>{Disk({0.0, 0.0}, 0.25)});
  const auto am = DomainMask::rasterize(ann, field::grid2d({-1.05, 1.05}, {-1.05, 1.05}, 512));
  const auto ae = lemma7_richardson(am, 1e-4);
  CHECK(ae.extrapolated >= 0.5);
  CHECK(ae.extrapolated <= 2.0);

  CHECK(lemma7_ratio(*disk_mask(64), 10.0) < std::numbers::pi / (std::sqrt(10.0) * 2 * std::numbers::pi) + 1e-9);

  auto pin = std::make_shared<PerforatedDomain>(unit_disk(), std::vector<Disk>{Disk({0.3, 0.0}, 0.001)});
  const auto pm = DomainMask::rasterize(pin, field::grid2d({-1.05, 1.05}, {-1.05, 1.05}, 64));
  try {
    lemma7_ratio(pm, 1e-4);
    FAIL("expected a hypothesis violation");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("component 0") != std::string::npos);
  }
}

TEST_CASE("half heating") {
  // A disk of radius 0.1: E tau <= 0.1^2 / 4 = 0.0025 <= 8 eps.
  auto small = std::make_shared<Disk>(Vec2{0.0, 0.0}, 0.1);
  const auto sm = DomainMask::rasterize(small, field::grid2d({-0.11, 0.11}, {-0.11, 0.11}, 88));
  const double eps = 0.1 * 0.1 / 32 * 1.25;
  const auto f = field::radial_extremal(2);
  stochastic::WalkConfig cfg;
  cfg.dt = 1e-5;
  cfg.n_paths = 4000;
  const auto e = stochastic::exit_times(sm, {0.0, 0.0}, cfg);
  REQUIRE(e.mean <= 8 * eps);
  const auto r = half_heating_check(sm, f, eps);
  CHECK(r.pass);
  CHECK(r.c == 1.0);
  CHECK(r.time == doctest::Approx(16 * eps));
  CHECK(r.min_temp >= 0.5);

  CHECK(half_heating_check(sm, f, 4 * eps).pass);

  const auto big = *disk_mask(64);
  try {
    half_heating_check(big, f, 1e-4);
    FAIL("expected a precondition violation");
  } catch (const PreconditionError& err) {
    CHECK(std::hypot(err.witness().x, err.witness().y) > 0.9);
  }
  CHECK_THROWS_AS(half_heating_check(sm, field::skew(), eps), PreconditionError);
}

TEST_CASE("temperature equals the hitting probability") {
  const auto mask = disk_mask(256);
  const auto coarse = std::make_shared<const DomainMask>(mask->coarsened());
  const double t = 0.01;
  const auto fine_state = evolve(HeatState(mask), t);
  const auto coarse_state = evolve(HeatState(coarse), t);
  stochastic::WalkConfig cfg;
  cfg.dt = 2e-5;
  cfg.n_paths = 8000;
  for (Vec2 x : {Vec2{0.9, 0.0}, Vec2{0.0, -0.85}, Vec2{0.6, 0.6}}) {
    const auto p = stochastic::hitting_probability(*mask, x, t, cfg);
    const double T = fine_state.temp_at(x);
    const double bias = std::abs(T - coarse_state.temp_at(x));
    CAPTURE(x.x);
    CAPTURE(T);
    CHECK(std::abs(p.absorbed_fraction - T) <= 3 * p.absorbed_std_error + 2 * bias);
  }
}

TEST_CASE("union bound for obstacles") {
  const auto grid = field::grid2d({-1.05, 1.05}, {-1.05, 1.05}, 128);
  const Disk A({-0.4, 0.0}, 0.15), B({0.4, 0.1}, 0.2);
  auto make = [&](std::vector<Disk> holes) {
    return std::make_shared<const DomainMask>(
        DomainMask::rasterize(std::make_shared<PerforatedDomain>(unit_disk(), std::move(holes)), grid));
  };
  const double t = 0.01;
  const auto both = evolve(HeatState(make({A, B})), t);
  const auto only_a = evolve(HeatState(make({A})), t);
  const auto only_b = evolve(HeatState(make({B})), t);
  for (std::size_t k = 0; k < grid.size(); k += 7) {
    const Vec2 p = both.mask().cell_center(k);
    CHECK(both.temp_at(p) <= only_a.temp_at(p) + only_b.temp_at(p) + 1e-12);
  }
}

TEST_CASE("Poisson solve") {
  auto sq = std::make_shared<Rectangle>(Vec2{-1.0, -1.0}, Vec2{1.0, 1.0});
  const auto mask = DomainMask::rasterize(sq, field::grid2d({-1.1, 1.1}, {-1.1, 1.1}, 110));
  const auto z = solve_poisson(mask, [](Vec2) { return 0.0; });
  CHECK(z.max() == 0.0);
  const auto m = solve_poisson(mask, [](Vec2) { return -1.0; });
  // Square of side 2: E tau at the centre is 0.2947 (series solution).
  CHECK(interpolate(m, {0.0, 0.0}) == doctest::Approx(0.2946854).epsilon(0.02));
}
