#pragma once

// Sublevel-set geometry on 2-D grids: measures, marching-squares level
// curves, component/hole decomposition, distance transforms and masked
// domains. sublevel_measure also accepts grids of any dimension.

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sublevel/field.hpp"

namespace sublevel::geometry {

using field::GridField;
using field::GridSpec;
using field::Interval;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// An exact planar domain. Masks rasterized from a Shape keep a reference to
/// it so walkers can use true boundary distances.
class Shape {
 public:
  virtual ~Shape() = default;
  /// Strictly inside.
  virtual bool contains(Vec2 p) const = 0;
  /// Unsigned distance from p to the boundary.
  virtual double boundary_distance(Vec2 p) const = 0;
  virtual Vec2 nearest_boundary_point(Vec2 p) const = 0;
  virtual double perimeter() const = 0;
  /// Perimeters of bounded holes, if any.
  virtual std::vector<double> hole_perimeters() const { return {}; }
  virtual std::string describe() const = 0;
};

class Disk final : public Shape {
 public:
  Disk(Vec2 center, double radius);
  bool contains(Vec2 p) const override { return norm(p - center_) < radius_; }
  double boundary_distance(Vec2 p) const override { return std::abs(norm(p - center_) - radius_); }
  Vec2 nearest_boundary_point(Vec2 p) const override;
  double perimeter() const override;
  std::string describe() const override;
  Vec2 center() const { return center_; }
  double radius() const { return radius_; }

 private:
  Vec2 center_;
  double radius_;
};

class Rectangle final : public Shape {
 public:
  Rectangle(Vec2 lo, Vec2 hi);
  bool contains(Vec2 p) const override;
  double boundary_distance(Vec2 p) const override;
  Vec2 nearest_boundary_point(Vec2 p) const override;
  double perimeter() const override;
  std::string describe() const override;

 private:
  Vec2 lo_;
  Vec2 hi_;
};

/// Convex polygon with counter-clockwise vertices.
class ConvexPolygon final : public Shape {
 public:
  explicit ConvexPolygon(std::vector<Vec2> vertices);
  bool contains(Vec2 p) const override;
  double boundary_distance(Vec2 p) const override;
  Vec2 nearest_boundary_point(Vec2 p) const override;
  double perimeter() const override;
  std::string describe() const override;

 private:
  std::vector<Vec2> v_;
};

/// An outer shape with disjoint disks removed (annuli, champagne domains).
class PerforatedDomain final : public Shape {
 public:
  PerforatedDomain(std::shared_ptr<const Shape> outer, std::vector<Disk> holes);
  bool contains(Vec2 p) const override;
  double boundary_distance(Vec2 p) const override;
  Vec2 nearest_boundary_point(Vec2 p) const override;
  double perimeter() const override;
  std::vector<double> hole_perimeters() const override;
  std::string describe() const override;
  const std::vector<Disk>& holes() const { return holes_; }

 private:
  std::shared_ptr<const Shape> outer_;
  std::vector<Disk> holes_;
};

enum class CellClass : std::uint8_t { exterior = 0, boundary_layer = 1, interior = 2 };

/// Per-cell classification of a 2-D grid into interior, boundary layer
/// (exterior cells 4-adjacent to the interior) and exterior. Cells beyond the
/// grid edge count as boundary.
class DomainMask {
 public:
  DomainMask(GridSpec grid, const std::vector<std::uint8_t>& interior,
             std::shared_ptr<const Shape> shape = nullptr);

  /// Interior iff the shape contains the cell center.
  static DomainMask rasterize(std::shared_ptr<const Shape> shape, const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  CellClass at(std::size_t i, std::size_t j) const { return cells_[grid_.index(i, j)]; }
  CellClass at(std::size_t k) const { return cells_[k]; }
  bool is_interior(std::size_t k) const { return cells_[k] == CellClass::interior; }
  bool is_interior(std::size_t i, std::size_t j) const { return is_interior(grid_.index(i, j)); }
  std::size_t interior_count() const { return interior_count_; }
  double interior_area() const { return static_cast<double>(interior_count_) * grid_.cell_volume(); }
  const std::shared_ptr<const Shape>& shape() const { return shape_; }

  /// Cell containing p, or nothing outside the grid.
  std::optional<std::size_t> cell_of(Vec2 p) const;
  Vec2 cell_center(std::size_t k) const;
  /// Exact containment when a shape is attached, cell lookup otherwise.
  bool contains(Vec2 p) const;

  /// Exact perimeter for shapes; otherwise the 1/2-contour of the
  /// Gaussian-smoothed (sigma = h) interior indicator.
  double boundary_length() const;
  /// Perimeters of the removed components (bounded holes).
  std::vector<double> removed_boundary_lengths() const;

  /// Same geometry at half the resolution: re-rasterized for shapes, 2x2
  /// blocks (interior iff all four children are) otherwise.
  DomainMask coarsened() const;

  /// Linear indices of interior cells, ascending.
  std::vector<std::size_t> interior_cells() const;

 private:
  GridSpec grid_;
  std::vector<CellClass> cells_;
  std::shared_ptr<const Shape> shape_;
  std::size_t interior_count_ = 0;
};

/// Counting measure with a bracket from one level of refinement: samples are
/// multilinearly interpolated onto the 2x grid; `lower` counts cells whose
/// center and subcells are all below s, `upper` cells with any of them below.
struct SublevelMeasure {
  double area = 0.0;
  double refined_area = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// h^n * #{cells with sample <= s}, any dimension.
SublevelMeasure sublevel_measure(const GridField& g, double s);

struct Segment {
  Vec2 a;
  Vec2 b;
  /// Cell of the sub-threshold node on the segment's low side (ghost nodes map
  /// to their adjacent cell).
  std::size_t owner = 0;
  double length() const { return norm(b - a); }
};

/// Marching-squares isocontour with linear edge interpolation. Nodes are the
/// cell centers plus a ring of ghost nodes on the box edge, linearly
/// extrapolated, so contours run all the way to the box. A node is below the
/// level when its value is <= t. Saddles are resolved by the sign of the
/// square's average.
std::vector<Segment> marching_squares(const GridField& g, double t);

/// Total isocontour length at level t; zero when t is outside the range of
/// the samples.
double level_length(const GridField& g, double t);

struct Component {
  std::size_t cell_count = 0;
  double area = 0.0;
  double boundary_length = 0.0;
  int holes = 0;
  bool touches_outer_boundary = false;
  /// Most extreme sample: the minimum for sublevel components, the maximum
  /// for superlevel components.
  double peak_value = 0.0;
  std::size_t peak_cell = 0;
};

struct LevelSetDecomposition {
  double level = 0.0;
  std::vector<Component> components;
  /// Component id per cell, -1 above the level.
  std::vector<int> labels;
};

/// Components of {samples <= t} under 4-connectivity. Holes are the bounded
/// 8-connected components of the complement, each charged to the component
/// that encloses it.
LevelSetDecomposition decompose(const GridField& g, double t);

/// Components of {samples >= t} under 4-connectivity, flagged by contact with
/// the grid edge.
LevelSetDecomposition decompose_superlevel(const GridField& g, double t);

/// Exact Euclidean distance (squared-distance lower envelopes, one pass per
/// axis) from every cell center to the nearest cell with `target` set.
/// Cells with no target anywhere get +inf.
std::vector<double> distance_transform(const GridSpec& grid, const std::vector<std::uint8_t>& target);

/// Signed distance to the cell-boundary of the interior: positive inside,
/// negative outside, zero half-way between an interior and an exterior center.
/// The grid edge counts as boundary.
GridField signed_distance(const DomainMask& mask);

struct DistanceFeatures {
  double inradius = 0.0;
  Vec2 incenter;
  std::map<double, double> parallel_lengths;
};

/// inradius = max over interior centers of the distance to the nearest
/// outside center (within about h of the truth); parallel_lengths[s] = length of
/// {signed distance = -s}, meaningful for s of a few h or more.
/// Throws std::invalid_argument on an empty interior.
DistanceFeatures distance_features(const DomainMask& mask, std::span<const double> offsets = {});

/// Interior indicator blurred by a Gaussian of width one cell.
GridField smoothed_indicator(const DomainMask& mask);

/// The mask on a box enlarged by `cells` exterior cells on every side.
DomainMask padded(const DomainMask& mask, std::size_t cells = 1);

}  // namespace sublevel::geometry
