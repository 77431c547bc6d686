#pragma once

// Analytic test functions and the uniform cell-centered grids they are
// sampled on. Everything downstream (measures, walks, heat flow) consumes
// these two types.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sublevel::field {

using PointView = std::span<const double>;
using Vector = std::vector<double>;
using Matrix = Eigen::MatrixXd;

/// A scalar function on R^n with exact first and second derivatives.
///
/// The Hessian is optional; when present, its trace must agree with the
/// Laplacian evaluator.
class AnalyticTestFunction {
 public:
  using ValueFn = std::function<double(PointView)>;
  using GradientFn = std::function<Vector(PointView)>;
  using HessianFn = std::function<Matrix(PointView)>;

  AnalyticTestFunction(std::string id, int dim, ValueFn value,
                       GradientFn gradient, ValueFn laplacian,
                       HessianFn hessian = {});

  const std::string& id() const { return id_; }
  int dim() const { return dim_; }

  double value(PointView x) const { return value_(x); }
  Vector gradient(PointView x) const { return gradient_(x); }
  double laplacian(PointView x) const { return laplacian_(x); }
  bool has_hessian() const { return static_cast<bool>(hessian_); }
  Matrix hessian(PointView x) const;

 private:
  std::string id_;
  int dim_;
  ValueFn value_;
  GradientFn gradient_;
  ValueFn laplacian_;
  HessianFn hessian_;
};

// Catalog. Constructors throw std::invalid_argument on bad parameters.

/// x^k / k! on the real line.
AnalyticTestFunction monomial_1d(int k);
/// a_1 x_1^2 + ... + a_n x_n^2 with every a_i > 0.
AnalyticTestFunction quadratic(std::vector<double> a);
/// |x|^2 / (2n); the Laplacian is identically 1.
AnalyticTestFunction radial_extremal(int n);
/// x_1^2 + eps x_2^2.
AnalyticTestFunction eccentric(double eps);
/// xy, whose Hessian is indefinite everywhere.
AnalyticTestFunction skew();
/// x_1^2 + x_2^2.
AnalyticTestFunction sum_sq();
/// (x^2 + y^2)/4 + A Re((x + iy)^m): Laplacian 1, tunable oscillation.
AnalyticTestFunction harmonic_probe(double amplitude, int m);
AnalyticTestFunction constant(double value, int n);
/// The coordinate function x_axis on R^n.
AnalyticTestFunction coordinate(int n, int axis);

/// f - delta.
AnalyticTestFunction shifted(const AnalyticTestFunction& f, double delta);
/// s * f.
AnalyticTestFunction scaled(const AnalyticTestFunction& f, double s);

/// Default-parameter members of every catalog family.
std::vector<AnalyticTestFunction> builtin_catalog();

/// Parses "name" or "name:key=v,key=v1,v2" (a bare value continues the
/// previous key's list), e.g. "quadratic:a=1,0.01" or
/// "harmonic_probe:A=0.1,m=3". Every family also accepts scale= and shift=.
AnalyticTestFunction parse_function(const std::string& spec);

/// Family names understood by parse_function, with a one-line description.
std::vector<std::pair<std::string, std::string>> catalog_families();

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

/// Uniform box grid; samples live at cell centers. Linear index runs fastest
/// along axis 0.
class GridSpec {
 public:
  GridSpec(std::vector<Interval> box, std::vector<std::size_t> resolution);

  std::size_t dim() const { return box_.size(); }
  const std::vector<Interval>& box() const { return box_; }
  const std::vector<std::size_t>& resolution() const { return resolution_; }
  double spacing(std::size_t axis) const { return spacing_[axis]; }
  double min_spacing() const;
  std::size_t size() const { return size_; }
  double cell_volume() const;

  double center(std::size_t axis, std::size_t i) const {
    return box_[axis].lo + (static_cast<double>(i) + 0.5) * spacing_[axis];
  }
  void center(std::size_t linear, std::span<double> out) const;

  // 2-D conveniences.
  std::size_t nx() const { return resolution_[0]; }
  std::size_t ny() const { return resolution_[1]; }
  std::size_t index(std::size_t i, std::size_t j) const { return j * resolution_[0] + i; }

  /// Same box, every axis resolution multiplied by `factor`.
  GridSpec refined(std::size_t factor) const;

 private:
  std::vector<Interval> box_;
  std::vector<std::size_t> resolution_;
  std::vector<double> spacing_;
  std::size_t size_ = 0;
};

GridSpec grid2d(Interval x, Interval y, std::size_t nx, std::size_t ny);
inline GridSpec grid2d(Interval x, Interval y, std::size_t n) { return grid2d(x, y, n, n); }

class GridField {
 public:
  GridField(GridSpec grid, std::vector<double> samples);

  const GridSpec& grid() const { return grid_; }
  const std::vector<double>& samples() const { return samples_; }
  double operator[](std::size_t k) const { return samples_[k]; }
  double at(std::size_t i, std::size_t j) const { return samples_[grid_.index(i, j)]; }

  double min() const;
  double max() const;
  GridField map(const std::function<double(double)>& fn) const;

 private:
  GridSpec grid_;
  std::vector<double> samples_;
};

/// samples[i] = f(center of cell i). Requires at least 2 cells per axis.
GridField sample(const AnalyticTestFunction& f, const std::vector<Interval>& box,
                 const std::vector<std::size_t>& resolution);
GridField sample(const AnalyticTestFunction& f, const GridSpec& grid);

struct FdOperators {
  std::vector<GridField> gradient;  // one component per axis
  GridField laplacian;
};

/// Central differences inside, second-order one-sided differences on the
/// outermost layer. The Laplacian is the sum of per-axis second differences,
/// exact on quadratics away from the outer layer.
FdOperators fd_operators(const GridField& g);

struct AmgmRow {
  Vector point;
  bool convex = false;
  double determinant = 0.0;
  double bound = 0.0;  // (trace / n)^n
  double slack = 0.0;  // bound - determinant, meaningful when convex
};

struct AmgmReport {
  std::vector<AmgmRow> rows;
  std::size_t skipped = 0;
  double worst_slack = 0.0;  // min slack over convex rows
};

/// det D^2 f <= (Delta f)^n / n^n at every point where the Hessian is
/// positive semidefinite; other points are recorded and skipped.
AmgmReport amgm_check(const AnalyticTestFunction& f, const std::vector<Vector>& points);

}  // namespace sublevel::field
