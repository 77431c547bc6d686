#include "sublevel/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace sublevel::geometry {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec2 closest_on_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double s = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return a + s * ab;
}

}  // namespace

// ---------------------------------------------------------------- shapes

Disk::Disk(Vec2 center, double radius) : center_(center), radius_(radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("Disk: radius must be positive");
}

Vec2 Disk::nearest_boundary_point(Vec2 p) const {
  const Vec2 d = p - center_;
  const double r = norm(d);
  if (r == 0.0) return {center_.x + radius_, center_.y};
  return center_ + (radius_ / r) * d;
}

double Disk::perimeter() const { return 2.0 * std::numbers::pi * radius_; }

std::string Disk::describe() const {
  std::ostringstream os;
  os << "disk(" << center_.x << "," << center_.y << ";r=" << radius_ << ")";
  return os.str();
}

Rectangle::Rectangle(Vec2 lo, Vec2 hi) : lo_(lo), hi_(hi) {
  if (!(hi.x > lo.x && hi.y > lo.y)) throw std::invalid_argument("Rectangle: degenerate box");
}

bool Rectangle::contains(Vec2 p) const {
  return p.x > lo_.x && p.x < hi_.x && p.y > lo_.y && p.y < hi_.y;
}

double Rectangle::boundary_distance(Vec2 p) const {
  if (contains(p)) return std::min({p.x - lo_.x, hi_.x - p.x, p.y - lo_.y, hi_.y - p.y});
  const double dx = std::max({lo_.x - p.x, 0.0, p.x - hi_.x});
  const double dy = std::max({lo_.y - p.y, 0.0, p.y - hi_.y});
  return std::hypot(dx, dy);
}

Vec2 Rectangle::nearest_boundary_point(Vec2 p) const {
  if (!contains(p)) return {std::clamp(p.x, lo_.x, hi_.x), std::clamp(p.y, lo_.y, hi_.y)};
  const std::array<double, 4> d{p.x - lo_.x, hi_.x - p.x, p.y - lo_.y, hi_.y - p.y};
  switch (std::min_element(d.begin(), d.end()) - d.begin()) {
    case 0: return {lo_.x, p.y};
    case 1: return {hi_.x, p.y};
    case 2: return {p.x, lo_.y};
    default: return {p.x, hi_.y};
  }
}

double Rectangle::perimeter() const { return 2.0 * ((hi_.x - lo_.x) + (hi_.y - lo_.y)); }

std::string Rectangle::describe() const {
  std::ostringstream os;
  os << "rectangle(" << lo_.x << "," << lo_.y << ";" << hi_.x << "," << hi_.y << ")";
  return os.str();
}

ConvexPolygon::ConvexPolygon(std::vector<Vec2> vertices) : v_(std::move(vertices)) {
  if (v_.size() < 3) throw std::invalid_argument("ConvexPolygon: need at least 3 vertices");
  for (std::size_t k = 0; k < v_.size(); ++k) {
    const Vec2 a = v_[k], b = v_[(k + 1) % v_.size()], c = v_[(k + 2) % v_.size()];
    const Vec2 ab = b - a, bc = c - b;
    if (ab.x * bc.y - ab.y * bc.x <= 0.0)
      throw std::invalid_argument("ConvexPolygon: vertices must be strictly convex and counter-clockwise");
  }
}

bool ConvexPolygon::contains(Vec2 p) const {
  for (std::size_t k = 0; k < v_.size(); ++k) {
    const Vec2 a = v_[k], b = v_[(k + 1) % v_.size()];
    const Vec2 ab = b - a, ap = p - a;
    if (ab.x * ap.y - ab.y * ap.x <= 0.0) return false;
  }
  return true;
}

double ConvexPolygon::boundary_distance(Vec2 p) const { return norm(p - nearest_boundary_point(p)); }

Vec2 ConvexPolygon::nearest_boundary_point(Vec2 p) const {
  Vec2 best = v_[0];
  double best_d = kInf;
  for (std::size_t k = 0; k < v_.size(); ++k) {
    const Vec2 q = closest_on_segment(p, v_[k], v_[(k + 1) % v_.size()]);
    const double d = norm(p - q);
    if (d < best_d) {
      best_d = d;
      best = q;
    }
  }
  return best;
}

double ConvexPolygon::perimeter() const {
  double s = 0.0;
  for (std::size_t k = 0; k < v_.size(); ++k) s += norm(v_[(k + 1) % v_.size()] - v_[k]);
  return s;
}

std::string ConvexPolygon::describe() const {
  return "convex_polygon(" + std::to_string(v_.size()) + " vertices)";
}

PerforatedDomain::PerforatedDomain(std::shared_ptr<const Shape> outer, std::vector<Disk> holes)
    : outer_(std::move(outer)), holes_(std::move(holes)) {
  if (!outer_) throw std::invalid_argument("PerforatedDomain: null outer shape");
}

bool PerforatedDomain::contains(Vec2 p) const {
  if (!outer_->contains(p)) return false;
  for (const auto& h : holes_)
    if (norm(p - h.center()) <= h.radius()) return false;
  return true;
}

double PerforatedDomain::boundary_distance(Vec2 p) const {
  double d = outer_->boundary_distance(p);
  for (const auto& h : holes_) d = std::min(d, h.boundary_distance(p));
  return d;
}

Vec2 PerforatedDomain::nearest_boundary_point(Vec2 p) const {
  Vec2 best = outer_->nearest_boundary_point(p);
  double best_d = norm(p - best);
  for (const auto& h : holes_) {
    const double d = h.boundary_distance(p);
    if (d < best_d) {
      best_d = d;
      best = h.nearest_boundary_point(p);
    }
  }
  return best;
}

double PerforatedDomain::perimeter() const {
  double s = outer_->perimeter();
  for (const auto& h : holes_) s += h.perimeter();
  return s;
}

std::vector<double> PerforatedDomain::hole_perimeters() const {
  std::vector<double> out;
  out.reserve(holes_.size());
  for (const auto& h : holes_) out.push_back(h.perimeter());
  return out;
}

std::string PerforatedDomain::describe() const {
  return outer_->describe() + " minus " + std::to_string(holes_.size()) + " disks";
}

// ---------------------------------------------------------------- masks

GridField smoothed_indicator(const DomainMask& mask) {
  const auto& g = mask.grid();
  const std::size_t nx = g.nx(), ny = g.ny();
  constexpr int R = 3;
  std::array<double, 2 * R + 1> w;
  double sum = 0.0;
  for (int q = -R; q <= R; ++q) sum += w[q + R] = std::exp(-0.5 * q * q);
  for (auto& x : w) x /= sum;
  std::vector<double> a(g.size()), b(g.size(), 0.0);
  for (std::size_t k = 0; k < g.size(); ++k) a[k] = mask.is_interior(k) ? 1.0 : 0.0;
  auto pass = [&](const std::vector<double>& src, std::vector<double>& dst, bool along_x) {
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) {
        double v = 0.0;
        for (int q = -R; q <= R; ++q) {
          const long ii = static_cast<long>(i) + (along_x ? q : 0);
          const long jj = static_cast<long>(j) + (along_x ? 0 : q);
          if (ii < 0 || jj < 0 || ii >= static_cast<long>(nx) || jj >= static_cast<long>(ny)) continue;
          v += w[q + R] * src[static_cast<std::size_t>(jj) * nx + static_cast<std::size_t>(ii)];
        }
        dst[j * nx + i] = v;
      }
    }
  };
  pass(a, b, true);
  pass(b, a, false);
  return GridField(g, std::move(a));
}

DomainMask::DomainMask(GridSpec grid, const std::vector<std::uint8_t>& interior,
                       std::shared_ptr<const Shape> shape)
    : grid_(std::move(grid)), shape_(std::move(shape)) {
  if (grid_.dim() != 2) throw std::invalid_argument("DomainMask: grid must be 2-D");
  if (interior.size() != grid_.size()) throw std::invalid_argument("DomainMask: cell count mismatch");
  const std::size_t nx = grid_.nx(), ny = grid_.ny();
  cells_.assign(grid_.size(), CellClass::exterior);
  for (std::size_t k = 0; k < interior.size(); ++k) {
    if (interior[k]) {
      cells_[k] = CellClass::interior;
      ++interior_count_;
    }
  }
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t k = grid_.index(i, j);
      if (cells_[k] == CellClass::interior) continue;
      const bool adj = (i > 0 && interior[k - 1]) || (i + 1 < nx && interior[k + 1]) ||
                       (j > 0 && interior[k - nx]) || (j + 1 < ny && interior[k + nx]);
      if (adj) cells_[k] = CellClass::boundary_layer;
    }
  }
}

DomainMask DomainMask::rasterize(std::shared_ptr<const Shape> shape, const GridSpec& grid) {
  if (!shape) throw std::invalid_argument("rasterize: null shape");
  std::vector<std::uint8_t> inside(grid.size(), 0);
  for (std::size_t j = 0; j < grid.ny(); ++j)
    for (std::size_t i = 0; i < grid.nx(); ++i)
      inside[grid.index(i, j)] = shape->contains({grid.center(0, i), grid.center(1, j)}) ? 1 : 0;
  return DomainMask(grid, inside, std::move(shape));
}

std::optional<std::size_t> DomainMask::cell_of(Vec2 p) const {
  const auto& box = grid_.box();
  const double fx = (p.x - box[0].lo) / grid_.spacing(0);
  const double fy = (p.y - box[1].lo) / grid_.spacing(1);
  if (!(fx >= 0.0 && fy >= 0.0)) return std::nullopt;
  const auto i = static_cast<std::size_t>(fx);
  const auto j = static_cast<std::size_t>(fy);
  if (i >= grid_.nx() || j >= grid_.ny()) return std::nullopt;
  return grid_.index(i, j);
}

Vec2 DomainMask::cell_center(std::size_t k) const {
  return {grid_.center(0, k % grid_.nx()), grid_.center(1, k / grid_.nx())};
}

bool DomainMask::contains(Vec2 p) const {
  if (shape_) return shape_->contains(p);
  const auto k = cell_of(p);
  return k && is_interior(*k);
}

std::vector<std::size_t> DomainMask::interior_cells() const {
  std::vector<std::size_t> out;
  out.reserve(interior_count_);
  for (std::size_t k = 0; k < cells_.size(); ++k)
    if (cells_[k] == CellClass::interior) out.push_back(k);
  return out;
}

double DomainMask::boundary_length() const {
  if (shape_) return shape_->perimeter();
  if (interior_count_ == 0) return 0.0;
  const double smooth = level_length(smoothed_indicator(padded(*this, 4)), 0.5);
  if (smooth > 0.0) return smooth;
  // Bands about a cell wide have no 0.5 contour after smoothing; count
  // interior/exterior faces with the isotropic pi/4 correction instead.
  const std::size_t nx = grid_.nx(), ny = grid_.ny();
  double faces_x = 0.0, faces_y = 0.0;
  for (std::size_t j = 0; j < ny; ++j)
    for (std::size_t i = 0; i < nx; ++i) {
      if (!is_interior(grid_.index(i, j))) continue;
      faces_y += (i == 0 || !is_interior(grid_.index(i - 1, j))) + (i + 1 == nx || !is_interior(grid_.index(i + 1, j)));
      faces_x += (j == 0 || !is_interior(grid_.index(i, j - 1))) + (j + 1 == ny || !is_interior(grid_.index(i, j + 1)));
    }
  return std::numbers::pi / 4.0 * (faces_y * grid_.spacing(1) + faces_x * grid_.spacing(0));
}

std::vector<double> DomainMask::removed_boundary_lengths() const {
  if (shape_) return shape_->hole_perimeters();
  const std::size_t nx = grid_.nx(), ny = grid_.ny();
  // 8-connected components of the non-interior set that avoid the grid edge.
  std::vector<int> label(grid_.size(), -1);
  std::vector<double> out;
  std::vector<std::size_t> cells;
  int next = 0;
  for (std::size_t start = 0; start < grid_.size(); ++start) {
    if (is_interior(start) || label[start] >= 0) continue;
    cells.clear();
    bool touches = false;
    std::deque<std::size_t> queue{start};
    label[start] = next;
    std::size_t i0 = nx, i1 = 0, j0 = ny, j1 = 0;
    while (!queue.empty()) {
      const std::size_t k = queue.front();
      queue.pop_front();
      cells.push_back(k);
      const std::size_t i = k % nx, j = k / nx;
      i0 = std::min(i0, i), i1 = std::max(i1, i), j0 = std::min(j0, j), j1 = std::max(j1, j);
      if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) touches = true;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          const long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj;
          if (ii < 0 || jj < 0 || ii >= static_cast<long>(nx) || jj >= static_cast<long>(ny)) continue;
          const std::size_t kk = grid_.index(ii, jj);
          if (is_interior(kk) || label[kk] >= 0) continue;
          label[kk] = next;
          queue.push_back(kk);
        }
      }
    }
    ++next;
    if (touches) continue;
    // Measure the hole as a mask of its own on a cropped grid.
    const std::size_t w = i1 - i0 + 1, hgt = j1 - j0 + 1;
    const auto& box = grid_.box();
    const double hx = grid_.spacing(0), hy = grid_.spacing(1);
    GridSpec sub({{box[0].lo + i0 * hx, box[0].lo + (i1 + 1) * hx},
                  {box[1].lo + j0 * hy, box[1].lo + (j1 + 1) * hy}},
                 {w, hgt});
    std::vector<std::uint8_t> in(sub.size(), 0);
    for (auto k : cells) in[sub.index(k % nx - i0, k / nx - j0)] = 1;
    out.push_back(DomainMask(sub, in).boundary_length());
  }
  return out;
}

DomainMask DomainMask::coarsened() const {
  const std::size_t nx = grid_.nx(), ny = grid_.ny();
  if (shape_) {
    if (nx < 4 || ny < 4) throw std::invalid_argument("coarsened: grid too small");
    return rasterize(shape_, GridSpec(grid_.box(), {nx / 2, ny / 2}));
  }
  if (nx % 2 || ny % 2 || nx < 4 || ny < 4)
    throw std::invalid_argument("coarsened: grid masks need even resolution >= 4");
  GridSpec coarse(grid_.box(), {nx / 2, ny / 2});
  std::vector<std::uint8_t> in(coarse.size(), 0);
  for (std::size_t j = 0; j < ny / 2; ++j)
    for (std::size_t i = 0; i < nx / 2; ++i)
      in[coarse.index(i, j)] = is_interior(2 * i, 2 * j) && is_interior(2 * i + 1, 2 * j) &&
                               is_interior(2 * i, 2 * j + 1) && is_interior(2 * i + 1, 2 * j + 1);
  return DomainMask(coarse, in);
}

DomainMask padded(const DomainMask& mask, std::size_t cells) {
  const auto& g = mask.grid();
  const double hx = g.spacing(0), hy = g.spacing(1);
  const double px = static_cast<double>(cells) * hx, py = static_cast<double>(cells) * hy;
  GridSpec big({{g.box()[0].lo - px, g.box()[0].hi + px}, {g.box()[1].lo - py, g.box()[1].hi + py}},
               {g.nx() + 2 * cells, g.ny() + 2 * cells});
  std::vector<std::uint8_t> in(big.size(), 0);
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i)
      in[big.index(i + cells, j + cells)] = mask.is_interior(i, j);
  return DomainMask(big, in, mask.shape());
}

// ---------------------------------------------------------------- measures

SublevelMeasure sublevel_measure(const GridField& g, double s) {
  const GridSpec& grid = g.grid();
  const std::size_t n = grid.dim();
  const auto& u = g.samples();
  const std::size_t corners = std::size_t{1} << n;
  std::vector<std::size_t> stride(n);
  std::size_t st = 1;
  for (std::size_t a = 0; a < n; ++a) {
    stride[a] = st;
    st *= grid.resolution()[a];
  }

  std::size_t count = 0, sub_count = 0, lower = 0, upper = 0;
  std::vector<std::size_t> idx(n);
  // Per axis and direction: (neighbor offset sign, self weight, neighbor weight).
  std::vector<std::array<long, 2>> nb(n);
  std::vector<std::array<double, 2>> w_self(n), w_nb(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    std::size_t rem = k;
    for (std::size_t a = 0; a < n; ++a) {
      idx[a] = rem % grid.resolution()[a];
      rem /= grid.resolution()[a];
      const std::size_t r = grid.resolution()[a];
      for (int d = 0; d < 2; ++d) {
        const long dir = d == 0 ? -1 : 1;
        const bool has = dir < 0 ? idx[a] > 0 : idx[a] + 1 < r;
        if (has) {
          nb[a][d] = dir;
          w_self[a][d] = 0.75;
          w_nb[a][d] = 0.25;
        } else {
          nb[a][d] = -dir;
          w_self[a][d] = 1.25;
          w_nb[a][d] = -0.25;
        }
      }
    }
    const bool center_below = u[k] <= s;
    if (center_below) ++count;
    bool all = center_below, any = center_below;
    for (std::size_t sc = 0; sc < corners; ++sc) {
      // Tensor-product interpolation over the 2^n corners of the subcell stencil.
      double v = 0.0;
      for (std::size_t c = 0; c < corners; ++c) {
        double w = 1.0;
        long off = 0;
        for (std::size_t a = 0; a < n; ++a) {
          const int d = (sc >> a) & 1;
          if ((c >> a) & 1) {
            w *= w_nb[a][d];
            off += nb[a][d] * static_cast<long>(stride[a]);
          } else {
            w *= w_self[a][d];
          }
        }
        v += w * u[static_cast<std::size_t>(static_cast<long>(k) + off)];
      }
      const bool below = v <= s;
      if (below) ++sub_count;
      all = all && below;
      any = any || below;
    }
    if (all) ++lower;
    if (any) ++upper;
  }
  const double vol = grid.cell_volume();
  SublevelMeasure m;
  m.area = static_cast<double>(count) * vol;
  m.refined_area = static_cast<double>(sub_count) * vol / static_cast<double>(corners);
  m.lower = static_cast<double>(lower) * vol;
  m.upper = static_cast<double>(upper) * vol;
  return m;
}

// ---------------------------------------------------------------- marching squares

namespace {

void require_2d(const GridField& g, const char* who) {
  if (g.grid().dim() != 2) throw std::invalid_argument(std::string(who) + ": field must be 2-D");
  if (g.grid().nx() < 2 || g.grid().ny() < 2)
    throw std::invalid_argument(std::string(who) + ": need at least 2 cells per axis");
}

// Node lattice: cell centers plus ghost nodes on the box edge.
struct NodeLattice {
  std::size_t mx = 0, my = 0;
  std::vector<double> xs, ys, val;
  std::size_t nx = 0, ny = 0;

  explicit NodeLattice(const GridField& g) {
    const GridSpec& grid = g.grid();
    nx = grid.nx();
    ny = grid.ny();
    mx = nx + 2;
    my = ny + 2;
    xs.resize(mx);
    ys.resize(my);
    xs[0] = grid.box()[0].lo;
    xs[mx - 1] = grid.box()[0].hi;
    for (std::size_t i = 0; i < nx; ++i) xs[i + 1] = grid.center(0, i);
    ys[0] = grid.box()[1].lo;
    ys[my - 1] = grid.box()[1].hi;
    for (std::size_t j = 0; j < ny; ++j) ys[j + 1] = grid.center(1, j);

    // Extrapolate rows first, then columns (bilinear at the corners).
    val.assign(mx * my, 0.0);
    for (std::size_t j = 0; j < ny; ++j) {
      for (std::size_t i = 0; i < nx; ++i) val[(j + 1) * mx + i + 1] = g.at(i, j);
      double* row = &val[(j + 1) * mx];
      row[0] = 1.5 * row[1] - 0.5 * row[2];
      row[mx - 1] = 1.5 * row[mx - 2] - 0.5 * row[mx - 3];
    }
    for (std::size_t i = 0; i < mx; ++i) {
      val[i] = 1.5 * val[mx + i] - 0.5 * val[2 * mx + i];
      val[(my - 1) * mx + i] = 1.5 * val[(my - 2) * mx + i] - 0.5 * val[(my - 3) * mx + i];
    }
  }

  double at(std::size_t I, std::size_t J) const { return val[J * mx + I]; }
  std::size_t cell(std::size_t I, std::size_t J) const {
    const std::size_t i = std::clamp<std::size_t>(I, 1, nx) - 1;
    const std::size_t j = std::clamp<std::size_t>(J, 1, ny) - 1;
    return j * nx + i;
  }
};

// Edge pairs per case; saddles (5, 10) are listed with the sub-threshold
// corners separated and flipped when the average is below the level.
constexpr std::array<std::array<int, 4>, 16> kCases{{
    {-1, -1, -1, -1}, {3, 0, -1, -1}, {0, 1, -1, -1}, {3, 1, -1, -1},
    {1, 2, -1, -1},   {3, 0, 1, 2},   {0, 2, -1, -1}, {3, 2, -1, -1},
    {2, 3, -1, -1},   {0, 2, -1, -1}, {0, 1, 2, 3},   {1, 2, -1, -1},
    {1, 3, -1, -1},   {0, 1, -1, -1}, {3, 0, -1, -1}, {-1, -1, -1, -1},
}};

template <typename Visit>
void for_each_segment(const GridField& g, double t, Visit&& visit) {
  const NodeLattice L(g);
  // Corner order: c0=(I,J), c1=(I+1,J), c2=(I+1,J+1), c3=(I,J+1); edge e joins c_e and c_{e+1}.
  constexpr std::array<std::array<int, 2>, 4> kOff{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  for (std::size_t J = 0; J + 1 < L.my; ++J) {
    for (std::size_t I = 0; I + 1 < L.mx; ++I) {
      std::array<double, 4> v;
      int code = 0;
      for (int c = 0; c < 4; ++c) {
        v[c] = L.at(I + kOff[c][0], J + kOff[c][1]);
        if (v[c] <= t) code |= 1 << c;
      }
      if (code == 0 || code == 15) continue;
      std::array<int, 4> edges = kCases[code];
      if (code == 5 || code == 10) {
        const double avg = 0.25 * (v[0] + v[1] + v[2] + v[3]);
        if (avg <= t) edges = kCases[code == 5 ? 10 : 5];
      }
      auto crossing = [&](int e, std::size_t& owner) {
        const int a = e, b = (e + 1) % 4;
        const int lo = (code >> a) & 1 ? a : b;
        const int hi = lo == a ? b : a;
        owner = L.cell(I + kOff[lo][0], J + kOff[lo][1]);
        const double s = (t - v[lo]) / (v[hi] - v[lo]);
        const double x0 = L.xs[I + kOff[lo][0]], y0 = L.ys[J + kOff[lo][1]];
        const double x1 = L.xs[I + kOff[hi][0]], y1 = L.ys[J + kOff[hi][1]];
        return Vec2{x0 + s * (x1 - x0), y0 + s * (y1 - y0)};
      };
      for (int p = 0; p < 4 && edges[p] >= 0; p += 2) {
        Segment seg;
        std::size_t other = 0;
        seg.a = crossing(edges[p], seg.owner);
        seg.b = crossing(edges[p + 1], other);
        visit(seg);
      }
    }
  }
}

}  // namespace

std::vector<Segment> marching_squares(const GridField& g, double t) {
  require_2d(g, "marching_squares");
  std::vector<Segment> out;
  for_each_segment(g, t, [&](const Segment& s) { out.push_back(s); });
  return out;
}

double level_length(const GridField& g, double t) {
  require_2d(g, "level_length");
  if (!(t > g.min() && t < g.max())) return 0.0;
  double total = 0.0;
  for_each_segment(g, t, [&](const Segment& s) { total += s.length(); });
  return total;
}

// ---------------------------------------------------------------- decomposition

namespace {

template <typename Pred>
int label_components(std::size_t nx, std::size_t ny, Pred in_set, bool eight, std::vector<int>& label) {
  label.assign(nx * ny, -1);
  int next = 0;
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < nx * ny; ++start) {
    if (!in_set(start) || label[start] >= 0) continue;
    label[start] = next;
    stack.assign(1, start);
    while (!stack.empty()) {
      const std::size_t k = stack.back();
      stack.pop_back();
      const long i = static_cast<long>(k % nx), j = static_cast<long>(k / nx);
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          if (!eight && di != 0 && dj != 0) continue;
          const long ii = i + di, jj = j + dj;
          if (ii < 0 || jj < 0 || ii >= static_cast<long>(nx) || jj >= static_cast<long>(ny)) continue;
          const std::size_t kk = static_cast<std::size_t>(jj) * nx + static_cast<std::size_t>(ii);
          if (label[kk] >= 0 || !in_set(kk)) continue;
          label[kk] = next;
          stack.push_back(kk);
        }
      }
    }
    ++next;
  }
  return next;
}

}  // namespace

LevelSetDecomposition decompose(const GridField& g, double t) {
  require_2d(g, "decompose");
  const std::size_t nx = g.grid().nx(), ny = g.grid().ny();
  const auto& u = g.samples();
  LevelSetDecomposition out;
  out.level = t;
  const int n = label_components(nx, ny, [&](std::size_t k) { return u[k] <= t; }, false, out.labels);
  out.components.resize(static_cast<std::size_t>(n));
  for (auto& c : out.components) c.peak_value = kInf;
  const double vol = g.grid().cell_volume();
  for (std::size_t k = 0; k < u.size(); ++k) {
    const int id = out.labels[k];
    if (id < 0) continue;
    auto& c = out.components[static_cast<std::size_t>(id)];
    ++c.cell_count;
    const std::size_t i = k % nx, j = k / nx;
    if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) c.touches_outer_boundary = true;
    if (u[k] < c.peak_value) {
      c.peak_value = u[k];
      c.peak_cell = k;
    }
  }
  for (auto& c : out.components) c.area = static_cast<double>(c.cell_count) * vol;

  // Holes: bounded 8-connected components of the complement, charged to the
  // component just below their first cell in scan order.
  std::vector<int> comp;
  const int m = label_components(nx, ny, [&](std::size_t k) { return u[k] > t; }, true, comp);
  std::vector<char> seen(static_cast<std::size_t>(m), 0), touches(static_cast<std::size_t>(m), 0);
  std::vector<std::size_t> first(static_cast<std::size_t>(m), 0);
  for (std::size_t k = 0; k < u.size(); ++k) {
    const int id = comp[k];
    if (id < 0) continue;
    const std::size_t i = k % nx, j = k / nx;
    if (!seen[id]) {
      seen[id] = 1;
      first[id] = k;
    }
    if (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) touches[id] = 1;
  }
  for (int id = 0; id < m; ++id) {
    if (touches[id]) continue;
    const int owner = out.labels[first[id] - nx];
    if (owner >= 0) ++out.components[static_cast<std::size_t>(owner)].holes;
  }

  if (g.min() < t && t < g.max()) {
    for_each_segment(g, t, [&](const Segment& s) {
      const int id = out.labels[s.owner];
      if (id >= 0) out.components[static_cast<std::size_t>(id)].boundary_length += s.length();
    });
  }
  return out;
}

LevelSetDecomposition decompose_superlevel(const GridField& g, double t) {
  LevelSetDecomposition out = decompose(g.map([](double v) { return -v; }), -t);
  out.level = t;
  for (auto& c : out.components) c.peak_value = -c.peak_value;
  return out;
}

// ---------------------------------------------------------------- distances

namespace {

// Lower envelope of parabolas (Felzenszwalb-Huttenlocher) on a uniform line
// with spacing h; f holds squared distances, +inf where unset.
void edt_1d(const double* f, double* d, std::size_t n, std::size_t stride, double h,
            std::vector<std::size_t>& v, std::vector<double>& z, std::vector<double>& tmp) {
  v.resize(n);
  z.resize(n + 1);
  tmp.resize(n);
  for (std::size_t q = 0; q < n; ++q) tmp[q] = f[q * stride];
  const double h2 = h * h;
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q)
    if (std::isfinite(tmp[q])) {
      first = q;
      break;
    }
  if (first == n) {
    for (std::size_t q = 0; q < n; ++q) d[q * stride] = kInf;
    return;
  }
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  auto meet = [&](std::size_t q, std::size_t p) {
    const double a = static_cast<double>(q), b = static_cast<double>(p);
    return ((tmp[q] / h2 + a * a) - (tmp[p] / h2 + b * b)) / (2.0 * (a - b));
  };
  for (std::size_t q = first + 1; q < n; ++q) {
    if (!std::isfinite(tmp[q])) continue;
    double s = meet(q, v[k]);
    while (s <= z[k]) s = meet(q, v[--k]);
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    while (z[k + 1] < static_cast<double>(q)) ++k;
    const double dq = (static_cast<double>(q) - static_cast<double>(v[k])) * h;
    d[q * stride] = dq * dq + tmp[v[k]];
  }
}

}  // namespace

std::vector<double> distance_transform(const GridSpec& grid, const std::vector<std::uint8_t>& target) {
  if (grid.dim() != 2) throw std::invalid_argument("distance_transform: grid must be 2-D");
  if (target.size() != grid.size()) throw std::invalid_argument("distance_transform: size mismatch");
  const std::size_t nx = grid.nx(), ny = grid.ny();
  std::vector<double> f(grid.size()), d(grid.size());
  for (std::size_t k = 0; k < f.size(); ++k) f[k] = target[k] ? 0.0 : kInf;
  std::vector<std::size_t> v;
  std::vector<double> z, tmp;
  for (std::size_t j = 0; j < ny; ++j) edt_1d(&f[j * nx], &d[j * nx], nx, 1, grid.spacing(0), v, z, tmp);
  for (std::size_t i = 0; i < nx; ++i) edt_1d(&d[i], &f[i], ny, nx, grid.spacing(1), v, z, tmp);
  for (auto& x : f) x = std::sqrt(x);
  return f;
}

GridField signed_distance(const DomainMask& mask) {
  const DomainMask big = padded(mask, 1);
  const GridSpec& bg = big.grid();
  std::vector<std::uint8_t> in(bg.size()), out(bg.size());
  for (std::size_t k = 0; k < bg.size(); ++k) {
    in[k] = big.is_interior(k);
    out[k] = !in[k];
  }
  const auto d_out = distance_transform(bg, out);  // from interior cells to the outside
  const auto d_in = distance_transform(bg, in);    // from outside cells to the interior
  const double half = 0.5 * mask.grid().min_spacing();
  const std::size_t nx = mask.grid().nx(), ny = mask.grid().ny();
  std::vector<double> sd(mask.grid().size());
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) {
      const std::size_t kb = bg.index(i + 1, j + 1);
      sd[mask.grid().index(i, j)] = in[kb] ? d_out[kb] - half : -(d_in[kb] - half);
    }
  }
  return GridField(mask.grid(), std::move(sd));
}

DistanceFeatures distance_features(const DomainMask& mask, std::span<const double> offsets) {
  if (mask.interior_count() == 0) throw std::invalid_argument("distance_features: mask has no interior cells");
  double reach = 0.0;
  for (double s : offsets) {
    if (s < 0.0) throw std::invalid_argument("distance_features: offsets must be >= 0");
    reach = std::max(reach, s);
  }
  const double h = mask.grid().min_spacing();
  const auto pad = static_cast<std::size_t>(std::ceil(reach / h)) + 2;
  const DomainMask big = padded(mask, pad);
  const GridField sd = signed_distance(big);

  DistanceFeatures out;
  double best = -kInf;
  for (std::size_t k = 0; k < sd.samples().size(); ++k) {
    if (big.is_interior(k) && sd[k] > best) {
      best = sd[k];
      out.incenter = big.cell_center(k);
    }
  }
  out.inradius = best + 0.5 * h;
  for (double s : offsets) out.parallel_lengths[s] = level_length(sd, -s);
  return out;
}

}  // namespace sublevel::geometry
