#include "sublevel/field.hpp"
#include "sublevel/numfmt.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

namespace sublevel::field {

namespace {

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

std::string format_double(double v) { return format_number(v); }

std::complex<double> ipow(std::complex<double> z, int m) {
  std::complex<double> r(1.0, 0.0);
  for (int i = 0; i < m; ++i) r *= z;
  return r;
}

}  // namespace

AnalyticTestFunction::AnalyticTestFunction(std::string id, int dim, ValueFn value,
                                           GradientFn gradient, ValueFn laplacian,
                                           HessianFn hessian)
    : id_(std::move(id)),
      dim_(dim),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      laplacian_(std::move(laplacian)),
      hessian_(std::move(hessian)) {
  if (dim_ < 1) throw std::invalid_argument("AnalyticTestFunction: dim must be >= 1");
  if (!value_ || !gradient_ || !laplacian_)
    throw std::invalid_argument("AnalyticTestFunction: value, gradient and laplacian are required");
}

Matrix AnalyticTestFunction::hessian(PointView x) const {
  if (!hessian_) throw std::logic_error("function '" + id_ + "' has no Hessian evaluator");
  return hessian_(x);
}

AnalyticTestFunction monomial_1d(int k) {
  if (k < 1) throw std::invalid_argument("monomial_1d: k must be >= 1");
  const double c0 = 1.0 / factorial(k);
  const double c1 = 1.0 / factorial(k - 1);
  const double c2 = k >= 2 ? 1.0 / factorial(k - 2) : 0.0;
  return AnalyticTestFunction(
      "monomial_1d:k=" + std::to_string(k), 1,
      [k, c0](PointView x) { return c0 * std::pow(x[0], k); },
      [k, c1](PointView x) { return Vector{c1 * std::pow(x[0], k - 1)}; },
      [k, c2](PointView x) { return k >= 2 ? c2 * std::pow(x[0], k - 2) : 0.0; },
      [k, c2](PointView x) {
        Matrix h(1, 1);
        h(0, 0) = k >= 2 ? c2 * std::pow(x[0], k - 2) : 0.0;
        return h;
      });
}

AnalyticTestFunction quadratic(std::vector<double> a) {
  if (a.empty()) throw std::invalid_argument("quadratic: need n >= 1 coefficients");
  std::string id = "quadratic:a=";
  double trace = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!(a[i] > 0.0)) throw std::invalid_argument("quadratic: coefficients must be > 0");
    trace += 2.0 * a[i];
    id += (i ? "," : "") + format_double(a[i]);
  }
  const int n = static_cast<int>(a.size());
  return AnalyticTestFunction(
      id, n,
      [a](PointView x) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * x[i] * x[i];
        return s;
      },
      [a](PointView x) {
        Vector g(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) g[i] = 2.0 * a[i] * x[i];
        return g;
      },
      [trace](PointView) { return trace; },
      [a](PointView) {
        Matrix h = Matrix::Zero(a.size(), a.size());
        for (std::size_t i = 0; i < a.size(); ++i) h(i, i) = 2.0 * a[i];
        return h;
      });
}

AnalyticTestFunction radial_extremal(int n) {
  if (n < 1) throw std::invalid_argument("radial_extremal: n must be >= 1");
  const double inv = 1.0 / (2.0 * n);
  return AnalyticTestFunction(
      "radial_extremal:n=" + std::to_string(n), n,
      [inv](PointView x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s * inv;
      },
      [n](PointView x) {
        Vector g(x.begin(), x.end());
        for (double& v : g) v /= n;
        return g;
      },
      [](PointView) { return 1.0; },
      [n](PointView) { return Matrix(Matrix::Identity(n, n) / n); });
}

AnalyticTestFunction eccentric(double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("eccentric: eps must be > 0");
  auto q = quadratic({1.0, eps});
  return AnalyticTestFunction("eccentric:eps=" + format_double(eps), 2,
                              [q](PointView x) { return q.value(x); },
                              [q](PointView x) { return q.gradient(x); },
                              [q](PointView x) { return q.laplacian(x); },
                              [q](PointView x) { return q.hessian(x); });
}

AnalyticTestFunction skew() {
  return AnalyticTestFunction(
      "skew", 2, [](PointView x) { return x[0] * x[1]; },
      [](PointView x) { return Vector{x[1], x[0]}; }, [](PointView) { return 0.0; },
      [](PointView) {
        Matrix h(2, 2);
        h << 0.0, 1.0, 1.0, 0.0;
        return h;
      });
}

AnalyticTestFunction sum_sq() {
  auto q = quadratic({1.0, 1.0});
  return AnalyticTestFunction("sum_sq", 2, [q](PointView x) { return q.value(x); },
                              [q](PointView x) { return q.gradient(x); },
                              [](PointView) { return 4.0; },
                              [q](PointView x) { return q.hessian(x); });
}

AnalyticTestFunction harmonic_probe(double amplitude, int m) {
  if (m < 0) throw std::invalid_argument("harmonic_probe: m must be >= 0");
  if (!std::isfinite(amplitude)) throw std::invalid_argument("harmonic_probe: amplitude must be finite");
  const double A = amplitude;
  return AnalyticTestFunction(
      "harmonic_probe:A=" + format_double(A) + ",m=" + std::to_string(m), 2,
      [A, m](PointView x) {
        const std::complex<double> z(x[0], x[1]);
        return 0.25 * (x[0] * x[0] + x[1] * x[1]) + A * ipow(z, m).real();
      },
      [A, m](PointView x) {
        const std::complex<double> z(x[0], x[1]);
        const std::complex<double> d = m >= 1 ? static_cast<double>(m) * ipow(z, m - 1) : 0.0;
        // d/dx Re z^m = Re(m z^{m-1}); d/dy Re z^m = -Im(m z^{m-1}).
        return Vector{0.5 * x[0] + A * d.real(), 0.5 * x[1] - A * d.imag()};
      },
      [](PointView) { return 1.0; },
      [A, m](PointView x) {
        const std::complex<double> z(x[0], x[1]);
        const std::complex<double> d2 =
            m >= 2 ? static_cast<double>(m) * (m - 1) * ipow(z, m - 2) : 0.0;
        Matrix h(2, 2);
        h(0, 0) = 0.5 + A * d2.real();
        h(1, 1) = 0.5 - A * d2.real();
        h(0, 1) = h(1, 0) = -A * d2.imag();
        return h;
      });
}

AnalyticTestFunction constant(double value, int n) {
  if (n < 1) throw std::invalid_argument("constant: n must be >= 1");
  return AnalyticTestFunction(
      "constant:value=" + format_double(value) + ",n=" + std::to_string(n), n,
      [value](PointView) { return value; }, [n](PointView) { return Vector(n, 0.0); },
      [](PointView) { return 0.0; }, [n](PointView) { return Matrix(Matrix::Zero(n, n)); });
}

AnalyticTestFunction coordinate(int n, int axis) {
  if (n < 1) throw std::invalid_argument("coordinate: n must be >= 1");
  if (axis < 0 || axis >= n) throw std::invalid_argument("coordinate: axis out of range");
  return AnalyticTestFunction(
      "coordinate:n=" + std::to_string(n) + ",axis=" + std::to_string(axis), n,
      [axis](PointView x) { return x[axis]; },
      [n, axis](PointView) {
        Vector g(n, 0.0);
        g[axis] = 1.0;
        return g;
      },
      [](PointView) { return 0.0; }, [n](PointView) { return Matrix(Matrix::Zero(n, n)); });
}

AnalyticTestFunction shifted(const AnalyticTestFunction& f, double delta) {
  AnalyticTestFunction::HessianFn hess;
  if (f.has_hessian()) hess = [f](PointView x) { return f.hessian(x); };
  return AnalyticTestFunction(
      f.id() + (f.id().find(':') == std::string::npos ? ":" : ",") + "shift=" + format_double(delta),
      f.dim(), [f, delta](PointView x) { return f.value(x) - delta; },
      [f](PointView x) { return f.gradient(x); }, [f](PointView x) { return f.laplacian(x); },
      hess);
}

AnalyticTestFunction scaled(const AnalyticTestFunction& f, double s) {
  AnalyticTestFunction::HessianFn hess;
  if (f.has_hessian()) hess = [f, s](PointView x) { return Matrix(s * f.hessian(x)); };
  return AnalyticTestFunction(
      f.id() + (f.id().find(':') == std::string::npos ? ":" : ",") + "scale=" + format_double(s),
      f.dim(), [f, s](PointView x) { return s * f.value(x); },
      [f, s](PointView x) {
        Vector g = f.gradient(x);
        for (double& v : g) v *= s;
        return g;
      },
      [f, s](PointView x) { return s * f.laplacian(x); }, hess);
}

std::vector<AnalyticTestFunction> builtin_catalog() {
  return {monomial_1d(2),      monomial_1d(3),       monomial_1d(4),
          quadratic({1.0, 4.0}), quadratic({0.5, 0.5}), radial_extremal(2),
          eccentric(0.01),     skew(),               sum_sq(),
          harmonic_probe(0.1, 3), harmonic_probe(1.0, 4)};
}

std::vector<std::pair<std::string, std::string>> catalog_families() {
  return {
      {"monomial_1d:k=K", "x^k/k! on R (k >= 1)"},
      {"quadratic:a=A1,...,An", "a_1 x_1^2 + ... + a_n x_n^2 (a_i > 0)"},
      {"radial_extremal:n=N", "|x|^2/(2n), Laplacian 1"},
      {"eccentric:eps=E", "x_1^2 + eps x_2^2"},
      {"skew", "x y (indefinite Hessian)"},
      {"sum_sq", "x_1^2 + x_2^2"},
      {"harmonic_probe:A=A,m=M", "(x^2+y^2)/4 + A Re((x+iy)^m), Laplacian 1"},
      {"constant:value=C,n=N", "constant function"},
      {"coordinate:n=N,axis=I", "the coordinate x_i"},
  };
}

namespace {

using Params = std::map<std::string, std::vector<double>>;

double single(const Params& p, const std::string& key, const std::string& family) {
  auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument(family + ": missing parameter '" + key + "'");
  if (it->second.size() != 1)
    throw std::invalid_argument(family + ": parameter '" + key + "' takes one value");
  return it->second.front();
}

double single_or(const Params& p, const std::string& key, double fallback, const std::string& family) {
  return p.count(key) ? single(p, key, family) : fallback;
}

int as_int(double v, const std::string& what) {
  if (v != std::floor(v)) throw std::invalid_argument(what + " must be an integer");
  return static_cast<int>(v);
}

}  // namespace

AnalyticTestFunction parse_function(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string family = spec.substr(0, colon);
  Params params;
  if (colon != std::string::npos) {
    std::string key;
    std::stringstream ss(spec.substr(colon + 1));
    std::string token;
    while (std::getline(ss, token, ',')) {
      const auto eq = token.find('=');
      std::string value = token;
      if (eq != std::string::npos) {
        key = token.substr(0, eq);
        value = token.substr(eq + 1);
        if (key.empty()) throw std::invalid_argument("function spec '" + spec + "': empty key");
        if (params.count(key)) throw std::invalid_argument("function spec '" + spec + "': repeated key '" + key + "'");
        params[key];
      } else if (key.empty()) {
        throw std::invalid_argument("function spec '" + spec + "': value without key");
      }
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || value.empty())
        throw std::invalid_argument("function spec '" + spec + "': bad number '" + value + "'");
      params[key].push_back(v);
    }
  }

  const double scale = single_or(params, "scale", 1.0, family);
  const double shift = single_or(params, "shift", 0.0, family);
  params.erase("scale");
  params.erase("shift");

  auto expect_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : params) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k == a;
      if (!ok) throw std::invalid_argument(family + ": unknown parameter '" + k + "'");
    }
  };

  auto base = [&]() -> AnalyticTestFunction {
    if (family == "monomial_1d") {
      expect_keys({"k"});
      return monomial_1d(as_int(single(params, "k", family), "monomial_1d k"));
    }
    if (family == "quadratic") {
      expect_keys({"a"});
      auto it = params.find("a");
      if (it == params.end()) throw std::invalid_argument("quadratic: missing parameter 'a'");
      return quadratic(it->second);
    }
    if (family == "radial_extremal") {
      expect_keys({"n"});
      return radial_extremal(as_int(single_or(params, "n", 2, family), "radial_extremal n"));
    }
    if (family == "eccentric") {
      expect_keys({"eps"});
      return eccentric(single(params, "eps", family));
    }
    if (family == "skew") {
      expect_keys({});
      return skew();
    }
    if (family == "sum_sq") {
      expect_keys({});
      return sum_sq();
    }
    if (family == "harmonic_probe") {
      expect_keys({"A", "m"});
      return harmonic_probe(single(params, "A", family), as_int(single(params, "m", family), "harmonic_probe m"));
    }
    if (family == "constant") {
      expect_keys({"value", "n"});
      return constant(single(params, "value", family), as_int(single_or(params, "n", 2, family), "constant n"));
    }
    if (family == "coordinate") {
      expect_keys({"n", "axis"});
      return coordinate(as_int(single_or(params, "n", 2, family), "coordinate n"),
                        as_int(single_or(params, "axis", 0, family), "coordinate axis"));
    }
    throw std::invalid_argument("unknown function family '" + family + "'");
  }();

  if (scale != 1.0) base = scaled(base, scale);
  if (shift != 0.0) base = shifted(base, shift);
  return base;
}

}  // namespace sublevel::field
