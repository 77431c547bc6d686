#pragma once

// Explicit heat flow on masked domains (temperature 0 inside at t = 0, held
// at 1 on the boundary layer), heat content, and a Poisson solve on the same
// discrete Laplacian.

#include <array>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "sublevel/field.hpp"
#include "sublevel/geometry.hpp"

namespace sublevel::heat {

using geometry::DomainMask;
using geometry::Vec2;

/// Interior cells of a mask with their 5-point neighbours; -1 marks a
/// neighbour held at the Dirichlet value.
struct Stencil {
  std::vector<std::size_t> cells;
  std::vector<std::array<int, 4>> neighbors;
  /// Position of each grid cell in `cells`, -1 if not interior.
  std::vector<int> slot;
  double hx = 0.0;
  double hy = 0.0;

  explicit Stencil(const DomainMask& mask);
  /// Largest stable explicit step, 1 / (2/hx^2 + 2/hy^2).
  double max_stable_dt() const { return 1.0 / (2.0 / (hx * hx) + 2.0 / (hy * hy)); }
};

struct HeatSample {
  double time = 0.0;
  double heat_content = 0.0;
  double min_temp = 0.0;
};

class HeatState {
 public:
  /// Zero temperature at time 0.
  explicit HeatState(std::shared_ptr<const DomainMask> mask);

  const DomainMask& mask() const { return *mask_; }
  const std::shared_ptr<const DomainMask>& mask_ptr() const { return mask_; }
  const Stencil& stencil() const { return *stencil_; }
  const std::vector<double>& temps() const { return temps_; }
  double time() const { return time_; }
  /// Temperature of the cell containing p; 1 off the interior.
  double temp_at(Vec2 p) const;
  double min_temp() const;

  /// In-place form of evolve().
  void advance(double until, double dt = 0.0, std::vector<HeatSample>* series = nullptr);

 private:
  std::shared_ptr<const DomainMask> mask_;
  std::shared_ptr<const Stencil> stencil_;
  std::vector<double> temps_;
  double time_ = 0.0;
};

/// Default step h^2/5 (inside the h^2/4 limit).
double default_dt(const DomainMask& mask);

/// Forward Euler on the 5-point stencil up to `until`, in equal steps no
/// longer than dt. dt = 0 picks default_dt. Throws
/// std::invalid_argument when dt exceeds the stability limit or until is in
/// the past, std::logic_error if a step leaves [0, 1] or cools a cell.
/// When `series` is given, one sample per step is appended.
HeatState evolve(const HeatState& state, double until, double dt = 0.0, std::vector<HeatSample>* series = nullptr);

/// h^2 * sum of interior temperatures.
double heat_content(const HeatState& state);

/// heat_content(evolve to eps) / (sqrt(eps) * |boundary|). Throws
/// std::invalid_argument naming the first removed component whose boundary
/// is shorter than sqrt(eps).
double lemma7_ratio(const DomainMask& mask, double eps);

struct Lemma7Estimate {
  double fine = 0.0;
  double coarse = 0.0;
  double extrapolated = 0.0;  // 2 fine - coarse
  double boundary_length = 0.0;
};

/// lemma7_ratio on the mask and on mask.coarsened(), first-order Richardson.
Lemma7Estimate lemma7_richardson(const DomainMask& mask, double eps);

struct HalfHeatingReport {
  double c = 0.0;           // max Laplacian over interior samples
  double oscillation = 0.0; // max f - min f over interior samples
  double time = 0.0;        // (8c + 8) eps
  double min_temp = 0.0;
  double min_temp_coarse = 0.0;
  double tolerance = 0.0;   // 2 |min_temp - min_temp_coarse|
  bool pass = false;
};

/// Thrown when the half-heating setting does not hold; names the witness.
class PreconditionError : public std::invalid_argument {
 public:
  PreconditionError(const std::string& what, Vec2 witness) : std::invalid_argument(what), witness_(witness) {}
  Vec2 witness() const { return witness_; }

 private:
  Vec2 witness_;
};

/// Checks 1 <= Delta f and max f - min f <= 4(c + 1) eps on the interior
/// samples, then heats to (8c + 8) eps and asserts min temperature >= 1/2 -
/// tolerance.
HalfHeatingReport half_heating_check(const DomainMask& mask, const field::AnalyticTestFunction& f, double eps);

/// Solves Delta u = rhs on the interior cells with u = 0 at non-interior
/// cell centers, by conjugate gradients. Returns a field that is 0 off the
/// interior.
field::GridField solve_poisson(const DomainMask& mask, const std::function<double(Vec2)>& rhs,
                               double tolerance = 1e-10);

/// Bilinear interpolation between cell centers (clamped at the edge).
double interpolate(const field::GridField& g, Vec2 p);

}  // namespace sublevel::heat
