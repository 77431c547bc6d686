#include "sublevel/stochastic.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "sublevel/parallel.hpp"

namespace sublevel::stochastic {

namespace {

constexpr int kMaxLevels = 8;
constexpr double kNegligible = 1e-14;

struct LevelOut {
  double tau = 0.0;
  double absorbed = 0.0;
  double boundary = 0.0;
  double integral = 0.0;
};

struct Mean {
  double mean = 0.0;
  double std_error = 0.0;
};

template <typename Get>
Mean mean_of(std::size_t n, Get get) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += get(i);
  const double m = s / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = get(i) - m;
    ss += d * d;
  }
  const double var = n > 1 ? ss / static_cast<double>(n - 1) : 0.0;
  return {m, std::sqrt(var / static_cast<double>(n))};
}

void validate(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg, int n_levels) {
  if (cfg.n_paths == 0) throw std::invalid_argument("walk: n_paths must be >= 1");
  if (!(cfg.dt > 0.0)) throw std::invalid_argument("walk: dt must be positive");
  if (!(cfg.max_time > 0.0)) throw std::invalid_argument("walk: max_time must be positive");
  if (n_levels < 1 || n_levels > kMaxLevels) throw std::invalid_argument("walk: level count out of range");
  if (!mask.contains(x0))
    throw std::invalid_argument("walk: start point (" + std::to_string(x0.x) + ", " + std::to_string(x0.y) +
                                ") is not interior");
  if (!mask.shape()) {
    const double h = mask.grid().min_spacing();
    const double coarsest = cfg.dt * static_cast<double>(1 << (n_levels - 1));
    if (coarsest > 0.25 * h * h * (1.0 + 1e-12))
      throw std::invalid_argument("walk: dt exceeds h^2/4 on a grid-only mask");
  }
}

// One path on n_levels coupled time grids: level l steps every 2^l fine steps.
void walk_path(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg, int n_levels,
               const field::AnalyticTestFunction* f, std::uint64_t path, LevelOut* out) {
  const geometry::Shape* shape = mask.shape().get();
  const bool bridge = cfg.bridge && shape;
  std::mt19937_64 rng(stream_seed(cfg.seed, path));
  std::normal_distribution<double> normal;
  const double sigma = std::sqrt(kIncrementVariancePerDt * cfg.dt);

  auto inside = [&](Vec2 p) { return shape ? shape->contains(p) : mask.contains(p); };
  auto eval = [&](Vec2 p) {
    const std::array<double, 2> x{p.x, p.y};
    return f->value(x);
  };
  auto eval_lap = [&](Vec2 p) {
    const std::array<double, 2> x{p.x, p.y};
    return f->laplacian(x);
  };
  auto on_boundary = [&](Vec2 p) { return shape ? shape->nearest_boundary_point(p) : p; };

  std::array<Vec2, kMaxLevels> pos, pend{};
  std::array<double, kMaxLevels> S, t{}, d0{};
  std::array<bool, kMaxLevels> done{};
  for (int l = 0; l < n_levels; ++l) {
    pos[l] = x0;
    S[l] = 1.0;
    out[l] = LevelOut{};
    if (bridge) d0[l] = shape->boundary_distance(x0);
  }
  int active = n_levels;
  std::uint64_t k = 0;
  while (active > 0) {
    const double zx = normal(rng);
    const double zy = normal(rng);
    const Vec2 inc{sigma * zx, sigma * zy};
    ++k;
    for (int l = 0; l < n_levels; ++l) {
      if (done[l]) continue;
      pend[l] = pend[l] + inc;
      if (k & ((std::uint64_t{1} << l) - 1)) continue;
      const double dtl = cfg.dt * static_cast<double>(std::uint64_t{1} << l);
      LevelOut& o = out[l];
      const Vec2 prev = pos[l];
      const Vec2 next = prev + pend[l];
      pend[l] = {};
      if (f) o.integral += S[l] * dtl * eval_lap(prev);
      o.tau += S[l] * dtl;
      t[l] += dtl;
      bool finish = false;
      if (!inside(next)) {
        if (f) o.boundary += S[l] * eval(on_boundary(next));
        S[l] = 0.0;
        finish = true;
      } else {
        if (bridge) {
          const double d1 = shape->boundary_distance(next);
          const double p = std::exp(-d0[l] * d1 / dtl);
          if (p > 0.0) {
            if (f) o.boundary += S[l] * p * eval(on_boundary(d1 < d0[l] ? next : prev));
            S[l] *= 1.0 - p;
          }
          d0[l] = d1;
        }
        pos[l] = next;
        if (S[l] < kNegligible) {
          if (f) o.boundary += S[l] * eval(on_boundary(next));
          S[l] = 0.0;
          finish = true;
        } else if (t[l] >= cfg.max_time * (1.0 - 1e-12)) {
          if (f) o.boundary += S[l] * eval(next);
          finish = true;
        }
      }
      if (finish) {
        o.absorbed = 1.0 - S[l];
        done[l] = true;
        --active;
      }
    }
  }
}

std::vector<LevelOut> run_paths(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg, int n_levels,
                                const field::AnalyticTestFunction* f) {
  validate(mask, x0, cfg, n_levels);
  if (f && f->dim() != 2) throw std::invalid_argument("walk: function must be 2-D");
  std::vector<LevelOut> out(cfg.n_paths * static_cast<std::size_t>(n_levels));
  parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
    walk_path(mask, x0, cfg, n_levels, f, i, &out[i * static_cast<std::size_t>(n_levels)]);
  });
  return out;
}

ExitTimeEstimate summarize_exit(const std::vector<LevelOut>& out, int n_levels, int l, Vec2 x0,
                                const WalkConfig& cfg) {
  const std::size_t n = cfg.n_paths;
  const auto at = [&](std::size_t i) -> const LevelOut& { return out[i * static_cast<std::size_t>(n_levels) + l]; };
  const Mean tau = mean_of(n, [&](std::size_t i) { return at(i).tau; });
  const Mean abs = mean_of(n, [&](std::size_t i) { return at(i).absorbed; });
  ExitTimeEstimate e;
  e.x0 = x0;
  e.mean = tau.mean;
  e.std_error = tau.std_error;
  e.absorbed_fraction = std::min(1.0, abs.mean);
  e.absorbed_std_error = abs.std_error;
  e.lower_bound = e.absorbed_fraction < 1.0 - 1e-12;
  e.n_paths = n;
  e.dt = cfg.dt * static_cast<double>(1 << l);
  e.seed = cfg.seed;
  return e;
}

FeynmanKacEstimate summarize_fk(const std::vector<LevelOut>& out, int n_levels, int l, const WalkConfig& cfg) {
  const std::size_t n = cfg.n_paths;
  const auto at = [&](std::size_t i) -> const LevelOut& { return out[i * static_cast<std::size_t>(n_levels) + l]; };
  const Mean est = mean_of(n, [&](std::size_t i) { return at(i).boundary - at(i).integral; });
  FeynmanKacEstimate r;
  r.estimate = est.mean;
  r.std_error = est.std_error;
  r.boundary_term = mean_of(n, [&](std::size_t i) { return at(i).boundary; }).mean;
  r.integral_term = mean_of(n, [&](std::size_t i) { return at(i).integral; }).mean;
  r.absorbed_fraction = std::min(1.0, mean_of(n, [&](std::size_t i) { return at(i).absorbed; }).mean);
  r.biased = r.absorbed_fraction < 1.0 - 1e-12;
  r.n_paths = n;
  r.dt = cfg.dt * static_cast<double>(1 << l);
  return r;
}

}  // namespace

ExitTimeEstimate exit_times(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg) {
  const auto out = run_paths(mask, x0, cfg, 1, nullptr);
  return summarize_exit(out, 1, 0, x0, cfg);
}

BiasStudy exit_time_refinement(const DomainMask& mask, Vec2 x0, const WalkConfig& cfg, int n_levels) {
  if (n_levels < 2) throw std::invalid_argument("exit_time_refinement: need at least 2 levels");
  const auto out = run_paths(mask, x0, cfg, n_levels, nullptr);
  BiasStudy b;
  for (int l = 0; l < n_levels; ++l) b.levels.push_back(summarize_exit(out, n_levels, l, x0, cfg));
  const std::size_t n = cfg.n_paths;
  for (int l = 0; l + 1 < n_levels; ++l) {
    const Mean d = mean_of(n, [&](std::size_t i) {
      const std::size_t base = i * static_cast<std::size_t>(n_levels);
      return out[base + l + 1].tau - out[base + l].tau;
    });
    b.differences.push_back(d.mean);
    b.difference_std_errors.push_back(d.std_error);
  }
  if (b.differences.size() >= 2 && b.differences[0] != 0.0) b.shrink = b.differences[1] / b.differences[0];
  b.bias_estimate = -b.differences[0];
  b.extrapolated = b.levels[0].mean + b.bias_estimate;
  return b;
}

ExitTimeEstimate hitting_probability(const DomainMask& mask, Vec2 x0, double t, const WalkConfig& cfg) {
  if (!(t > 0.0)) throw std::invalid_argument("hitting_probability: t must be positive");
  WalkConfig c = cfg;
  c.max_time = t;
  return exit_times(mask, x0, c);
}

FeynmanKacEstimate feynman_kac(const field::AnalyticTestFunction& f, const DomainMask& mask, Vec2 x0,
                               const WalkConfig& cfg) {
  return feynman_kac_levels(f, mask, x0, cfg, 1).front();
}

std::vector<FeynmanKacEstimate> feynman_kac_levels(const field::AnalyticTestFunction& f, const DomainMask& mask,
                                                   Vec2 x0, const WalkConfig& cfg, int n_levels) {
  const auto out = run_paths(mask, x0, cfg, n_levels, &f);
  std::vector<FeynmanKacEstimate> r;
  for (int l = 0; l < n_levels; ++l) r.push_back(summarize_fk(out, n_levels, l, cfg));
  return r;
}

ExitTimeBound max_exit_time_bound(const DomainMask& mask, const WalkConfig& cfg, const std::vector<Vec2>& probes) {
  if (probes.empty()) throw std::invalid_argument("max_exit_time_bound: no probe points");
  ExitTimeBound b;
  b.sup_estimate = -1.0;
  for (const auto& p : probes) {
    b.probes.push_back(exit_times(mask, p, cfg));
    const auto& e = b.probes.back();
    if (e.mean > b.sup_estimate) {
      b.sup_estimate = e.mean;
      b.sup_std_error = e.std_error;
      b.argmax = p;
    }
  }
  b.inradius = geometry::distance_features(mask).inradius;
  b.inrad_bound = 4.0 * b.inradius * b.inradius;
  b.holds = b.sup_estimate <= b.inrad_bound + 3.0 * b.sup_std_error;
  return b;
}

double reflection_tail(double d, double t) {
  if (!(d >= 0.0) || !(t > 0.0)) throw std::invalid_argument("reflection_tail: need d >= 0 and t > 0");
  return std::erfc(d / std::sqrt(2.0 * t));
}

TailEstimate reflection_tail_mc(double d, double t, std::size_t n_paths, int n_steps, std::uint64_t seed,
                                unsigned threads) {
  if (!(d >= 0.0) || !(t > 0.0)) throw std::invalid_argument("reflection_tail_mc: need d >= 0 and t > 0");
  if (n_paths == 0 || n_steps < 1) throw std::invalid_argument("reflection_tail_mc: need paths and steps");
  const double dt = t / n_steps;
  const double sd = std::sqrt(dt);
  std::vector<double> hit(n_paths);
  parallel_for(n_paths, threads, [&](std::size_t i) {
    std::mt19937_64 rng(stream_seed(seed, i));
    std::normal_distribution<double> normal;
    double b = 0.0, survive = 1.0;
    for (int k = 0; k < n_steps && survive > 0.0; ++k) {
      const double b1 = b + sd * normal(rng);
      if (b1 >= d) {
        survive = 0.0;
        break;
      }
      survive *= 1.0 - std::exp(-2.0 * (d - b) * (d - b1) / dt);
      b = b1;
    }
    hit[i] = 1.0 - survive;
  });
  const Mean m = mean_of(n_paths, [&](std::size_t i) { return hit[i]; });
  return {m.mean, m.std_error, n_paths};
}

}  // namespace sublevel::stochastic
