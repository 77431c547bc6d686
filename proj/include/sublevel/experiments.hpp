#pragma once

// Statement-level verification harnesses. Every "<~" becomes a ratio that
// must stay inside one empirical constant band across a parameter grid.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sublevel/field.hpp"
#include "sublevel/geometry.hpp"
#include "sublevel/stochastic.hpp"

namespace sublevel::experiments {

using geometry::DomainMask;
using geometry::Vec2;

struct ScalingFit {
  double exponent = 0.0;
  double log_intercept = 0.0;
  double r_squared = 0.0;
  std::size_t n_points = 0;
};

/// Least squares through (log p, log m). Throws std::invalid_argument on
/// fewer than 3 pairs or a nonpositive entry.
ScalingFit fit_scaling(const std::vector<std::pair<double, double>>& pairs);

struct ReportRow {
  std::string series;
  double parameter = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  /// lhs / rhs, or 0 when rhs is 0.
  double ratio = 0.0;
  /// Absolute slack the row was judged with (0 when not applicable).
  double tolerance = 0.0;
  bool pass = false;
};

struct SeriesFit {
  std::string series;
  ScalingFit fit;
};

struct VerificationReport {
  std::string statement;
  std::vector<ReportRow> rows;
  std::vector<SeriesFit> fits;
  /// Scalar results (empirical constants, spreads, flags as 0/1).
  std::map<std::string, double> metrics;
  std::vector<std::string> notes;
  bool pass = false;

  const ReportRow* first_failure() const;
  const ScalingFit* fit(const std::string& series) const;
  double metric(const std::string& key) const;
};

/// n points per decade, geometric, both ends included.
std::vector<double> geometric_grid(double lo, double hi, int per_decade);
/// Exactly n geometric points from lo to hi.
std::vector<double> geometric_points(double lo, double hi, int n);

// ------------------------------------------------------------- scaling laws

/// |{x in [-1, 1] : |x^k / k!| <= t}| on a 1-D grid against the closed form
/// 2 (k! t)^{1/k}; fitted exponent must be 1/k +- 0.03 (fit absent for fewer
/// than 3 levels).
VerificationReport verify_vdcorput(int k, const std::vector<double>& t_grid, std::size_t resolution = 1 << 21);

struct CarberyOptions {
  std::size_t resolution = 512;
  /// Extra series a -> (lambda a1, a2 / lambda, a3, ...).
  std::vector<double> lambdas;
  double control_eps = 1e-3;
  double control_s = 0.5;
  double band = 0.10;  // ratios within +-band of the series median
};

/// Sublevel measures of quadratic(a) over s_grid against s^{n/2}. a is
/// rescaled to 2^n prod a = 1 when needed (noted in the report). The
/// eccentric(control_eps) control must exceed the family at control_s by 10x.
VerificationReport verify_carbery(std::vector<double> a, const std::vector<double>& s_grid,
                                  const CarberyOptions& opt = {});

/// Proposition-2 oscillation over the sampled radius-r ball about 0, and the
/// pointwise sphere bound for each y. f must be 2-D with Delta f >= 1 on
/// the samples (PreconditionError otherwise). Tolerance 2 h max |grad f|.
VerificationReport verify_prop2_prop4(const field::AnalyticTestFunction& f, const std::vector<double>& r_grid,
                                      const std::vector<Vec2>& y_list, std::size_t resolution = 512);

// ------------------------------------------------------------ coarea and FK

/// Integral of level_length over the sampled range against the integral of
/// |grad f| from fd_operators. Row ratio must be within `tolerance` of 1.
VerificationReport verify_coarea(const field::AnalyticTestFunction& f, field::Interval x, field::Interval y,
                                 std::size_t resolution = 512, int n_levels = 4000, double tolerance = 0.02);

struct FkCase {
  std::string mask_name;
  std::shared_ptr<const DomainMask> mask;
  std::vector<Vec2> points;
};

/// Disk and square masks with three interior points each.
std::vector<FkCase> standard_fk_cases(std::size_t resolution = 64);

/// Every 2-D catalog member (plus constant and coordinate probes) on every
/// case. Tolerance 3 stderr + |E(dt) - E(2dt)| from coupled levels.
VerificationReport verify_fk(const std::vector<field::AnalyticTestFunction>& fns, const std::vector<FkCase>& cases,
                             const stochastic::WalkConfig& cfg);

/// Exit-time oracle at the disk center: coupled three-level study.
VerificationReport verify_exit_time(const stochastic::WalkConfig& cfg, std::size_t resolution = 110);

// ------------------------------------------------------- Theorem-2 pipeline

struct GradientIntegral {
  double value = 0.0;
  /// Excluded area times |grad f| / delta^alpha on the excluded subcells.
  double truncation_estimate = 0.0;
  /// Same quadrature at twice the resolution.
  double refined_value = 0.0;
  double relative_change = 0.0;
  bool divergence_suspected = false;
};

/// Midpoint quadrature of |grad f| / |f|^alpha on the box. Cells with
/// |f| < h are split 8 x 8; subcells with |f| < h^2 are excluded. Flags
/// divergence when the truncation estimate exceeds 10% of the value or the
/// value grows by 20% or more on doubling.
GradientIntegral gradient_integral(const field::AnalyticTestFunction& f, double alpha, field::Interval x,
                                   field::Interval y, std::size_t resolution = 256);

struct PigeonholeResult {
  double t1 = 0.0;  // in [-2 eps, -eps)
  double t2 = 0.0;  // in [eps, 2 eps)
  double length1 = 0.0;
  double length2 = 0.0;
  /// (2 eps)^{alpha - 1} times the gradient integral.
  double bound = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Scans t = +-eps (1 + j / n_scan), j = 0..n_scan-1, and keeps the first
/// level of minimal level_length in each band.
PigeonholeResult pigeonhole_levels(const field::GridField& g, double eps, int n_scan, double alpha,
                                   double gradient_integral_value);

struct Thm2Options {
  double alpha = 1.0;
  std::size_t resolution = 512;
  int n_scan = 16;
  std::size_t integral_resolution = 256;
  /// Walk for the exit-time bound on the assembled domain (dt is replaced by
  /// h^2/4 when larger).
  stochastic::WalkConfig walk{1e-6, 10.0, 2000, 1, true, 0};
  int exit_probes = 6;
  /// Band for the heat-content ratio on the assembled domain; the bound is
  /// one-sided, so the lower end defaults to 0.
  double lemma7_lo = 0.0;
  double lemma7_hi = 2.0;
  double spread_limit = 10.0;
};

/// Per-eps stage results of the proof pipeline.
struct PipelineStage {
  double eps = 0.0;
  PigeonholeResult levels;
  std::size_t outer_components = 0;
  std::size_t small_components = 0;
  std::size_t large_components = 0;
  double worst_depth_margin = 0.0;  // min over small components of (min v + 4 c L^2)
  bool depth_pass = true;
  double omega_area = 0.0;
  double exit_sup = 0.0;
  double exit_sup_std_error = 0.0;
  double exit_bound = 0.0;  // (4c + 4) eps
  bool exit_pass = true;
  double heat_ratio = 0.0;
  bool heat_pass = true;
  std::string heat_error;
};

struct Thm2Result {
  VerificationReport report;
  std::vector<PipelineStage> stages;
  GradientIntegral integral;
  double c = 0.0;
};

/// f on [0, 1]^2 with 1 <= Delta f <= c checked on the samples. Rows per
/// eps: lhs = |{|f| <= eps}|, rhs = sqrt(eps) + (2 eps)^{alpha - 1/2} I.
/// Passes when the ratio spread (max/min, measurement bracket) is within
/// spread_limit and every pipeline stage passes.
Thm2Result verify_thm2(const field::AnalyticTestFunction& f, const std::vector<double>& eps_grid,
                       const Thm2Options& opt = {});

struct Thm3Options {
  std::size_t resolution = 256;
  double kappa_lo = 1e-4;
  double kappa_hi = 1.0;
  int bisection_steps = 60;
};

/// Largest kappa with |{|f| >= kappa}| sup |f| >= kappa for every member on
/// [0, 1]^2, by bisection. Rows tabulate p(kappa) for each member and probe.
VerificationReport verify_thm3(const std::vector<field::AnalyticTestFunction>& family,
                               const std::vector<double>& kappa_probes, const Thm3Options& opt = {});

// ------------------------------------------------------------ lemma checks

/// Depth bound for psi with Delta psi = Delta f in D, psi = 0 outside:
/// min psi >= -c sup E tau >= -4 c |dD|^2, on a few disk/rectangle masks.
VerificationReport verify_lemma5(const std::vector<field::AnalyticTestFunction>& fns,
                                 const stochastic::WalkConfig& cfg);

/// E tau <= osc f on small masks for catalog f with Delta f >= 1.
VerificationReport verify_lemma6(const std::vector<field::AnalyticTestFunction>& fns,
                                 const stochastic::WalkConfig& cfg);

// -------------------------------------------------------------- champagne

struct ChampagneSpec {
  double outer_radius = 1.0;
  int bubble_count = 0;
  enum class Law { uniform, power } law = Law::uniform;
  double bubble_radius = 0.02;
  /// Power law: r = bubble_radius * U^{-1/(exponent - 1)}, capped at max_radius.
  double exponent = 3.0;
  double max_radius = 0.08;
  std::uint64_t seed = 1;
  double min_separation = 0.01;
  int retry_cap = 200000;
};

/// Bubbles in placement order; a prefix of a longer run with the same seed.
std::vector<geometry::Disk> place_bubbles(const ChampagneSpec& spec);

/// Disk mask minus bubbles on the box [-1.05 R, 1.05 R]^2. Throws
/// std::runtime_error with the achieved count when placement fails.
DomainMask make_champagne(const ChampagneSpec& spec, std::size_t resolution);

struct ChampagneOptions {
  std::vector<int> counts{0, 25, 50, 100, 200};
  std::vector<double> eps{1e-4, 4e-4};
  std::size_t resolution = 512;
  double band_width = 4.0;
  double disk_tolerance = 0.15;
  /// Exit times at fixed probes (skipped when n_paths = 0).
  stochastic::WalkConfig walk{1e-4, 10.0, 0, 1, true, 0};
  std::size_t walk_resolution = 256;
};

/// Heat-content ratios (Richardson) across bubble counts, and the sup exit
/// time over fixed probes for each count (nonincreasing within 3 sigma).
VerificationReport verify_champagne(const ChampagneSpec& base, const ChampagneOptions& opt = {});

/// Closed form at d = sqrt(t) and Monte Carlo with n_paths.
VerificationReport verify_reflection(std::size_t n_paths, std::uint64_t seed, unsigned threads = 0);

}  // namespace sublevel::experiments
