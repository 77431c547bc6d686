#include "sublevel/field.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace sublevel::field {

GridSpec::GridSpec(std::vector<Interval> box, std::vector<std::size_t> resolution)
    : box_(std::move(box)), resolution_(std::move(resolution)) {
  if (box_.empty()) throw std::invalid_argument("GridSpec: empty box");
  if (box_.size() != resolution_.size())
    throw std::invalid_argument("GridSpec: box and resolution dimensions differ");
  size_ = 1;
  spacing_.resize(box_.size());
  for (std::size_t a = 0; a < box_.size(); ++a) {
    if (!(box_[a].hi > box_[a].lo)) throw std::invalid_argument("GridSpec: degenerate box axis");
    if (resolution_[a] < 1) throw std::invalid_argument("GridSpec: zero resolution");
    spacing_[a] = box_[a].length() / static_cast<double>(resolution_[a]);
    size_ *= resolution_[a];
  }
}

double GridSpec::min_spacing() const { return *std::min_element(spacing_.begin(), spacing_.end()); }

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (double h : spacing_) v *= h;
  return v;
}

void GridSpec::center(std::size_t linear, std::span<double> out) const {
  for (std::size_t a = 0; a < dim(); ++a) {
    out[a] = center(a, linear % resolution_[a]);
    linear /= resolution_[a];
  }
}

GridSpec GridSpec::refined(std::size_t factor) const {
  auto res = resolution_;
  for (auto& r : res) r *= factor;
  return GridSpec(box_, res);
}

GridSpec grid2d(Interval x, Interval y, std::size_t nx, std::size_t ny) {
  return GridSpec({x, y}, {nx, ny});
}

GridField::GridField(GridSpec grid, std::vector<double> samples)
    : grid_(std::move(grid)), samples_(std::move(samples)) {
  if (samples_.size() != grid_.size())
    throw std::invalid_argument("GridField: sample count does not match grid size");
}

double GridField::min() const { return *std::min_element(samples_.begin(), samples_.end()); }
double GridField::max() const { return *std::max_element(samples_.begin(), samples_.end()); }

GridField GridField::map(const std::function<double(double)>& fn) const {
  std::vector<double> out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(), fn);
  return GridField(grid_, std::move(out));
}

GridField sample(const AnalyticTestFunction& f, const GridSpec& grid) {
  if (static_cast<std::size_t>(f.dim()) != grid.dim())
    throw std::invalid_argument("sample: function '" + f.id() + "' has dimension " +
                                std::to_string(f.dim()) + ", box has " + std::to_string(grid.dim()));
  for (auto r : grid.resolution())
    if (r < 2) throw std::invalid_argument("sample: resolution must be >= 2 per axis");
  std::vector<double> samples(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.center(k, x);
    samples[k] = f.value(x);
  }
  return GridField(grid, std::move(samples));
}

GridField sample(const AnalyticTestFunction& f, const std::vector<Interval>& box,
                 const std::vector<std::size_t>& resolution) {
  return sample(f, GridSpec(box, resolution));
}

FdOperators fd_operators(const GridField& g) {
  const GridSpec& grid = g.grid();
  for (auto r : grid.resolution())
    if (r < 3) throw std::invalid_argument("fd_operators: resolution must be >= 3 per axis");

  const auto& u = g.samples();
  std::vector<std::vector<double>> grad(grid.dim(), std::vector<double>(grid.size()));
  std::vector<double> lap(grid.size(), 0.0);

  std::size_t stride = 1;
  for (std::size_t a = 0; a < grid.dim(); ++a) {
    const std::size_t n = grid.resolution()[a];
    const double h = grid.spacing(a);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const std::size_t i = (k / stride) % n;
      double d1 = 0.0;
      double d2 = 0.0;
      if (i == 0) {
        d1 = (-3.0 * u[k] + 4.0 * u[k + stride] - u[k + 2 * stride]) / (2.0 * h);
        d2 = (u[k] - 2.0 * u[k + stride] + u[k + 2 * stride]) / (h * h);
      } else if (i + 1 == n) {
        d1 = (3.0 * u[k] - 4.0 * u[k - stride] + u[k - 2 * stride]) / (2.0 * h);
        d2 = (u[k] - 2.0 * u[k - stride] + u[k - 2 * stride]) / (h * h);
      } else {
        d1 = (u[k + stride] - u[k - stride]) / (2.0 * h);
        d2 = (u[k + stride] - 2.0 * u[k] + u[k - stride]) / (h * h);
      }
      grad[a][k] = d1;
      lap[k] += d2;
    }
    stride *= n;
  }

  FdOperators out{{}, GridField(grid, std::move(lap))};
  for (auto& comp : grad) out.gradient.emplace_back(grid, std::move(comp));
  return out;
}

AmgmReport amgm_check(const AnalyticTestFunction& f, const std::vector<Vector>& points) {
  if (!f.has_hessian()) throw std::invalid_argument("amgm_check: '" + f.id() + "' has no Hessian");
  AmgmReport report;
  report.worst_slack = std::numeric_limits<double>::infinity();
  const int n = f.dim();
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != n) throw std::invalid_argument("amgm_check: point dimension mismatch");
    AmgmRow row;
    row.point = p;
    const Matrix h = f.hessian(p);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
    row.convex = eig.eigenvalues().minCoeff() >= -1e-12 * scale;
    row.determinant = h.determinant();
    row.bound = std::pow(h.trace() / n, n);
    row.slack = row.bound - row.determinant;
    if (row.convex) {
      report.worst_slack = std::min(report.worst_slack, row.slack);
    } else {
      ++report.skipped;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace sublevel::field
