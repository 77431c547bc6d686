#include "sublevel/heat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>

namespace sublevel::heat {

Stencil::Stencil(const DomainMask& mask) {
  const auto& g = mask.grid();
  hx = g.spacing(0);
  hy = g.spacing(1);
  const std::size_t nx = g.nx(), ny = g.ny();
  slot.assign(g.size(), -1);
  cells = mask.interior_cells();
  for (std::size_t s = 0; s < cells.size(); ++s) slot[cells[s]] = static_cast<int>(s);
  neighbors.resize(cells.size());
  for (std::size_t s = 0; s < cells.size(); ++s) {
    const std::size_t k = cells[s], i = k % nx, j = k / nx;
    neighbors[s] = {i > 0 ? slot[k - 1] : -1, i + 1 < nx ? slot[k + 1] : -1, j > 0 ? slot[k - nx] : -1,
                    j + 1 < ny ? slot[k + nx] : -1};
  }
}

HeatState::HeatState(std::shared_ptr<const DomainMask> mask) : mask_(std::move(mask)) {
  if (!mask_) throw std::invalid_argument("HeatState: null mask");
  stencil_ = std::make_shared<const Stencil>(*mask_);
  temps_.assign(stencil_->cells.size(), 0.0);
}

double HeatState::temp_at(Vec2 p) const {
  const auto k = mask_->cell_of(p);
  if (!k) return 1.0;
  const int s = stencil_->slot[*k];
  return s < 0 ? 1.0 : temps_[static_cast<std::size_t>(s)];
}

double HeatState::min_temp() const {
  if (temps_.empty()) return 1.0;
  return *std::min_element(temps_.begin(), temps_.end());
}

double default_dt(const DomainMask& mask) {
  const double h = mask.grid().min_spacing();
  return h * h / 5.0;
}

double heat_content(const HeatState& state) {
  double s = 0.0;
  for (double t : state.temps()) s += t;
  return s * state.mask().grid().cell_volume();
}

void HeatState::advance(double until, double dt, std::vector<HeatSample>* series) {
  if (until < time_) throw std::invalid_argument("evolve: target time is before the current time");
  const Stencil& st = *stencil_;
  if (dt == 0.0) dt = default_dt(*mask_);
  if (!(dt > 0.0)) throw std::invalid_argument("evolve: dt must be positive");
  if (dt > st.max_stable_dt() * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "evolve: dt = " << dt << " exceeds the explicit stability limit " << st.max_stable_dt();
    throw std::invalid_argument(os.str());
  }
  const double span = until - time_;
  if (span == 0.0) return;
  const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  const double step = span / static_cast<double>(steps);
  const double ax = step / (st.hx * st.hx), ay = step / (st.hy * st.hy);
  const double start = time_;
  const std::size_t n = temps_.size();
  std::vector<double> next(n);
  constexpr double kSlack = 1e-12;
  for (std::size_t k = 0; k < steps; ++k) {
    for (std::size_t s = 0; s < n; ++s) {
      const auto& nb = st.neighbors[s];
      const double u = temps_[s];
      auto val = [&](int q) { return q < 0 ? 1.0 : temps_[static_cast<std::size_t>(q)]; };
      const double v = u + ax * (val(nb[0]) + val(nb[1]) - 2.0 * u) + ay * (val(nb[2]) + val(nb[3]) - 2.0 * u);
      if (v < -kSlack || v > 1.0 + kSlack || v < u - kSlack) {
        std::ostringstream os;
        os << "evolve: maximum principle violated at cell " << st.cells[s] << " (" << u << " -> " << v << ")";
        throw std::logic_error(os.str());
      }
      next[s] = v;
    }
    temps_.swap(next);
    time_ = start + step * static_cast<double>(k + 1);
    if (series) series->push_back({time_, heat_content(*this), min_temp()});
  }
  time_ = until;
}

HeatState evolve(const HeatState& state, double until, double dt, std::vector<HeatSample>* series) {
  HeatState out = state;
  out.advance(until, dt, series);
  return out;
}

double lemma7_ratio(const DomainMask& mask, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("lemma7_ratio: eps must be positive");
  const double root = std::sqrt(eps);
  const auto removed = mask.removed_boundary_lengths();
  for (std::size_t q = 0; q < removed.size(); ++q) {
    if (removed[q] < root) {
      std::ostringstream os;
      os << "lemma7_ratio: removed component " << q << " has boundary length " << removed[q] << " < sqrt(eps) = "
         << root;
      throw std::invalid_argument(os.str());
    }
  }
  const double length = mask.boundary_length();
  if (!(length > 0.0)) throw std::invalid_argument("lemma7_ratio: mask has no boundary");
  HeatState state(std::make_shared<const DomainMask>(mask));
  state.advance(eps);
  return heat_content(state) / (root * length);
}

Lemma7Estimate lemma7_richardson(const DomainMask& mask, double eps) {
  Lemma7Estimate e;
  e.boundary_length = mask.boundary_length();
  e.fine = lemma7_ratio(mask, eps);
  e.coarse = lemma7_ratio(mask.coarsened(), eps);
  e.extrapolated = 2.0 * e.fine - e.coarse;
  return e;
}

namespace {

double min_temp_after(const DomainMask& mask, double t) {
  HeatState state(std::make_shared<const DomainMask>(mask));
  state.advance(t);
  return state.min_temp();
}

}  // namespace

HalfHeatingReport half_heating_check(const DomainMask& mask, const field::AnalyticTestFunction& f, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("half_heating_check: eps must be positive");
  if (f.dim() != 2) throw std::invalid_argument("half_heating_check: function must be 2-D");
  const auto cells = mask.interior_cells();
  if (cells.empty()) throw std::invalid_argument("half_heating_check: mask has no interior");
  HalfHeatingReport r;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  double lap_min = lo;
  Vec2 at_lo, at_hi, at_lap;
  for (auto k : cells) {
    const Vec2 p = mask.cell_center(k);
    const std::array<double, 2> x{p.x, p.y};
    const double v = f.value(x), l = f.laplacian(x);
    if (v < lo) lo = v, at_lo = p;
    if (v > hi) hi = v, at_hi = p;
    if (l < lap_min) lap_min = l, at_lap = p;
    r.c = std::max(r.c, l);
  }
  auto where = [](Vec2 p) {
    std::ostringstream os;
    os << "(" << p.x << ", " << p.y << ")";
    return os.str();
  };
  if (lap_min < 1.0 - 1e-12)
    throw PreconditionError("half_heating_check: Laplacian " + std::to_string(lap_min) + " < 1 at " + where(at_lap),
                            at_lap);
  r.oscillation = hi - lo;
  if (r.oscillation > 4.0 * (r.c + 1.0) * eps) {
    std::ostringstream os;
    os << "half_heating_check: oscillation " << r.oscillation << " exceeds 4(c+1) eps = " << 4.0 * (r.c + 1.0) * eps
       << "; maximum at " << where(at_hi) << ", minimum at " << where(at_lo);
    throw PreconditionError(os.str(), at_hi);
  }
  r.time = (8.0 * r.c + 8.0) * eps;
  r.min_temp = min_temp_after(mask, r.time);
  r.min_temp_coarse = min_temp_after(mask.coarsened(), r.time);
  r.tolerance = 2.0 * std::abs(r.min_temp - r.min_temp_coarse);
  r.pass = r.min_temp >= 0.5 - r.tolerance;
  return r;
}

field::GridField solve_poisson(const DomainMask& mask, const std::function<double(Vec2)>& rhs, double tolerance) {
  const Stencil st(mask);
  const std::size_t n = st.cells.size();
  std::vector<double> out(mask.grid().size(), 0.0);
  if (n == 0) return field::GridField(mask.grid(), std::move(out));
  const double ax = 1.0 / (st.hx * st.hx), ay = 1.0 / (st.hy * st.hy);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(5 * n);
  Eigen::VectorXd b(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    const auto si = static_cast<int>(s);
    trip.emplace_back(si, si, 2.0 * ax + 2.0 * ay);
    const auto& nb = st.neighbors[s];
    for (int q = 0; q < 4; ++q)
      if (nb[q] >= 0) trip.emplace_back(si, nb[q], q < 2 ? -ax : -ay);
    b[si] = -rhs(mask.cell_center(st.cells[s]));
  }
  Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  A.setFromTriplets(trip.begin(), trip.end());
  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(tolerance);
  cg.setMaxIterations(static_cast<Eigen::Index>(20 * n + 100));
  cg.compute(A);
  const Eigen::VectorXd u = cg.solve(b);
  if (cg.info() != Eigen::Success) throw std::runtime_error("solve_poisson: conjugate gradients did not converge");
  for (std::size_t s = 0; s < n; ++s) out[st.cells[s]] = u[static_cast<Eigen::Index>(s)];
  return field::GridField(mask.grid(), std::move(out));
}

double interpolate(const field::GridField& g, Vec2 p) {
  const auto& grid = g.grid();
  auto axis = [&](std::size_t a, double x, std::size_t& i0, double& w) {
    const std::size_t n = grid.resolution()[a];
    double f = (x - grid.box()[a].lo) / grid.spacing(a) - 0.5;
    f = std::clamp(f, 0.0, static_cast<double>(n - 1));
    i0 = std::min(static_cast<std::size_t>(f), n - 2);
    w = f - static_cast<double>(i0);
  };
  std::size_t i, j;
  double wx, wy;
  axis(0, p.x, i, wx);
  axis(1, p.y, j, wy);
  return (1 - wx) * (1 - wy) * g.at(i, j) + wx * (1 - wy) * g.at(i + 1, j) + (1 - wx) * wy * g.at(i, j + 1) +
         wx * wy * g.at(i + 1, j + 1);
}

}  // namespace sublevel::heat
