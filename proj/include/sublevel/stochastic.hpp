#pragma once

// Brownian walks in masked planar domains. Increments have variance 2 dt per
// coordinate, so the generator is the Laplacian and E tau solves
// Delta m = -1 with m = 0 on the boundary.

#include <cstdint>
#include <vector>

#include "sublevel/field.hpp"
#include "sublevel/geometry.hpp"

namespace sublevel::stochastic {

using geometry::DomainMask;
using geometry::Vec2;

struct WalkConfig {
  double dt = 1e-4;
  double max_time = 10.0;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  /// Brownian-bridge crossing test between steps; needs a mask with an
  /// attached Shape, ignored otherwise.
  bool bridge = true;
  /// 0 picks resolve_threads(0).
  unsigned threads = 0;
};

/// The variance convention is fixed and not configurable.
inline constexpr double kIncrementVariancePerDt = 2.0;

struct ExitTimeEstimate {
  Vec2 x0;
  double mean = 0.0;
  double std_error = 0.0;
  /// Fraction of probability mass absorbed before max_time.
  double absorbed_fraction = 0.0;
  double absorbed_std_error = 0.0;
  /// Set when some mass survived to max_time; mean is then a lower bound.
  bool lower_bound = false;
  std::size_t n_paths = 0;
  double dt = 0.0;
  std::uint64_t seed = 0;
};

/// E tau_x0 by Euler walk. With an exact Shape attached, each step survives
/// the half-plane bridge crossing test with probability 1 - exp(-d0 d1 / dt)
/// and the path carries that survival weight instead of a random kill. On
/// grid-only masks a path is absorbed when a step ends in a non-interior
/// cell, and dt must not exceed h^2/4. Per-path time is dt times the expected
/// number of steps taken. Throws std::invalid_argument when x0 is not
/// interior or n_paths is 0.
ExitTimeEstimate exit_times(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg);

/// Coupled estimates at dt, 2 dt, 4 dt, ... (cfg.dt is the finest) built from
/// the same fine increments, so level differences are resolved far below
/// the single-run noise.
struct BiasStudy {
  std::vector<ExitTimeEstimate> levels;
  /// Paired standard errors of E(2^{l+1} dt) - E(2^l dt).
  std::vector<double> differences;
  std::vector<double> difference_std_errors;
  /// differences[1] / differences[0]: about 2 for a first-order bias.
  double shrink = 0.0;
  /// Bias of the finest level from first-order Richardson: E(dt) - (2E(dt) - E(2dt)).
  double bias_estimate = 0.0;
  double extrapolated = 0.0;
};
BiasStudy exit_time_refinement(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg, int n_levels = 3);

/// P(tau_x0 <= t): the absorbed fraction of a walk stopped at t.
ExitTimeEstimate hitting_probability(const DomainMask& mask, Vec2 x0, double t, const WalkConfig& cfg);

struct FeynmanKacEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  double boundary_term = 0.0;
  double integral_term = 0.0;
  double absorbed_fraction = 0.0;
  /// Mass survived to max_time; the stopped representation still holds but
  /// the result is flagged.
  bool biased = false;
  std::size_t n_paths = 0;
  double dt = 0.0;
};

/// E f(w(tau ^ T)) - E int_0^{tau ^ T} Delta f(w(s)) ds. Killed mass is
/// charged f at the nearest boundary point of the step end (or of the closer
/// step end for bridge kills); the time integral is a left Riemann sum.
FeynmanKacEstimate feynman_kac(const field::AnalyticTestFunction& f, const DomainMask& mask, Vec2 x0,
                               const WalkConfig& cfg);

/// feynman_kac at dt, 2 dt, ... on one set of coupled paths.
std::vector<FeynmanKacEstimate> feynman_kac_levels(const field::AnalyticTestFunction& f, const DomainMask& mask,
                                                   Vec2 x0, const WalkConfig& cfg, int n_levels);

struct ExitTimeBound {
  std::vector<ExitTimeEstimate> probes;
  double sup_estimate = 0.0;
  double sup_std_error = 0.0;
  Vec2 argmax;
  double inradius = 0.0;
  double inrad_bound = 0.0;  // 4 inradius^2
  bool holds = false;        // sup <= inrad_bound + 3 stderr
};

ExitTimeBound max_exit_time_bound(const DomainMask& mask, const WalkConfig& cfg, const std::vector<Vec2>& probes);

/// 2 P(B(t) >= d) = erfc(d / sqrt(2t)) for standard Brownian motion
/// (variance t), which equals P(max_{s<=t} B(s) >= d).
double reflection_tail(double d, double t);

struct TailEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
};

/// Monte Carlo P(max_{s<=t} B(s) >= d) for standard Brownian motion on
/// n_steps steps. Between steps the exact bridge crossing probability
/// exp(-2 (d - b0)(d - b1) / dt) is accumulated, so the estimator has no
/// time-step bias.
TailEstimate reflection_tail_mc(double d, double t, std::size_t n_paths, int n_steps, std::uint64_t seed,
                                unsigned threads = 0);

}  // namespace sublevel::stochastic
