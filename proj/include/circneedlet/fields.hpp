#pragma once

// Circular densities and point samplers: Poisson random measures with control
// R_t·ν and fixed-size i.i.d. samples, both drawn by rejection against the
// uniform proposal.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>

#include "circneedlet/error.hpp"
#include "circneedlet/needlet.hpp"
#include "circneedlet/rng.hpp"
#include "circneedlet/trig_polynomial.hpp"

namespace circneedlet {

enum class DensityKind { uniform, von_mises, floor_mixture };

inline std::string to_string(DensityKind k) {
  switch (k) {
    case DensityKind::uniform: return "uniform";
    case DensityKind::von_mises: return "von_mises";
    case DensityKind::floor_mixture: return "floor_mixture";
  }
  return "unknown";
}

// Density with respect to ρ, so ∫F dρ = 1, bounded as 0 < M0 ≤ F ≤ Minf.
struct CircleDensity {
  std::string id;
  DensityKind kind = DensityKind::uniform;
  double kappa = 0.0;
  double mix_weight = 1.0;
  std::function<double(double)> eval;
  double M0 = 1.0;
  double Minf = 1.0;
  std::optional<TrigPolynomial> fourier;

  double operator()(double theta) const { return eval(theta); }
};

namespace detail {

// a_k = I_k(κ)/I_0(κ), truncated once below 1e-17.
inline std::vector<double> von_mises_fourier(double kappa) {
  std::vector<double> c;
  if (kappa == 0.0) return c;
  const double i0 = boost::math::cyl_bessel_i(0, kappa);
  for (int k = 1; k < 10000; ++k) {
    const double v = boost::math::cyl_bessel_i(k, kappa) / i0;
    if (v < 1e-17) break;
    c.push_back(v);
  }
  return c;
}

inline std::string format_param(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline CircleDensity uniform_density() {
  CircleDensity d;
  d.id = "uniform";
  d.kind = DensityKind::uniform;
  d.eval = [](double) { return 1.0; };
  d.M0 = d.Minf = 1.0;
  d.fourier = TrigPolynomial::even_real(1.0, {});
  return d;
}

// F(θ) = e^{κ cos θ} / I_0(κ), mode at θ = 0.
inline CircleDensity von_mises_density(double kappa) {
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ArgumentError("von_mises: kappa must be >= 0");
  if (kappa == 0.0) {
    CircleDensity d = uniform_density();
    d.id = "von_mises(0)";
    d.kind = DensityKind::von_mises;
    return d;
  }
  // e^{κ(cos θ - 1)}/I_0^{(scaled)}(κ) avoids overflow for large κ
  const double i0_scaled = boost::math::cyl_bessel_i(0, kappa) * std::exp(-kappa);
  CircleDensity d;
  d.id = "von_mises(" + detail::format_param(kappa) + ")";
  d.kind = DensityKind::von_mises;
  d.kappa = kappa;
  d.eval = [kappa, i0_scaled](double th) { return std::exp(kappa * (std::cos(th) - 1.0)) / i0_scaled; };
  d.M0 = std::exp(-2.0 * kappa) / i0_scaled;
  d.Minf = 1.0 / i0_scaled;
  d.fourier = TrigPolynomial::even_real(1.0, detail::von_mises_fourier(kappa));
  return d;
}

// F = weight·1 + (1 - weight)·VM(κ): a von Mises bump over a uniform floor.
inline CircleDensity floor_mixture_density(double weight, double kappa) {
  if (!(weight >= 0.0 && weight <= 1.0)) throw ArgumentError("floor_mixture: weight must lie in [0, 1]");
  const CircleDensity vm = von_mises_density(kappa);
  CircleDensity d;
  d.id = "floor_mixture(" + detail::format_param(weight) + "," + detail::format_param(kappa) + ")";
  d.kind = DensityKind::floor_mixture;
  d.kappa = kappa;
  d.mix_weight = weight;
  d.eval = [weight, f = vm.eval](double th) { return weight + (1.0 - weight) * f(th); };
  d.M0 = weight + (1.0 - weight) * vm.M0;
  d.Minf = weight + (1.0 - weight) * vm.Minf;
  std::vector<double> ck;
  for (int k = 1; k <= vm.fourier->degree(); ++k) ck.push_back((1.0 - weight) * vm.fourier->coefficient(k).real());
  d.fourier = TrigPolynomial::even_real(1.0, ck);
  return d;
}

struct DensitySpec {
  DensityKind kind = DensityKind::uniform;
  double kappa = 0.0;
  double weight = 0.5;
};

inline CircleDensity builtin_density(const DensitySpec& spec) {
  switch (spec.kind) {
    case DensityKind::uniform: return uniform_density();
    case DensityKind::von_mises: return von_mises_density(spec.kappa);
    case DensityKind::floor_mixture: return floor_mixture_density(spec.weight, spec.kappa);
  }
  throw ArgumentError("builtin_density: unknown kind");
}

// Checks the certified bounds on an n-point grid and the normalization by
// trapezoid; throws NumericalFailure with the offending quantity otherwise.
inline void validate_density(const CircleDensity& d, std::size_t n = 10000) {
  if (!(d.M0 > 0.0) || !(d.Minf >= d.M0) || !std::isfinite(d.Minf)) {
    throw NumericalFailure("density " + d.id + ": bounds must satisfy 0 < M0 <= Minf < inf");
  }
  double mass = 0.0;
  for (std::size_t m = 0; m < n; ++m) {
    const double th = kTwoPi * static_cast<double>(m) / static_cast<double>(n);
    const double f = d(th);
    if (f < d.M0 * (1.0 - 1e-12) || f > d.Minf * (1.0 + 1e-12)) {
      throw NumericalFailure("density " + d.id + ": value outside [M0, Minf]");
    }
    mass += f;
  }
  mass /= static_cast<double>(n);
  if (std::fabs(mass - 1.0) > 1e-8) throw NumericalFailure("density " + d.id + ": not normalized");
}

enum class SampleKind { poisson, iid_fixed_n };

struct PointSample {
  std::vector<double> points;
  std::size_t n = 0;
  SampleKind kind = SampleKind::poisson;
  double intensity = 0.0;  // R_t for Poisson samples, 0 otherwise
};

struct PoissonFieldConfig {
  double R_t = 1.0;
  CircleDensity density;
  std::uint64_t seed = 0;
};

// One draw from ν: uniform proposal accepted with probability F(θ)/Minf.
inline double draw_point(const CircleDensity& d, Stream& rng) {
  if (d.kind == DensityKind::uniform) return kTwoPi * rng.uniform();
  for (;;) {
    const double th = kTwoPi * rng.uniform();
    if (rng.uniform() * d.Minf <= d(th)) return th;
  }
}

inline void fill_points(const CircleDensity& d, std::size_t n, Stream& rng, std::vector<double>& out) {
  out.resize(n);
  for (auto& x : out) x = draw_point(d, rng);
}

inline PointSample sample_poisson(const PoissonFieldConfig& cfg, Stream& rng) {
  if (!(cfg.R_t > 0.0)) throw ArgumentError("sample_poisson: R_t must be positive");
  PointSample s;
  s.kind = SampleKind::poisson;
  s.intensity = cfg.R_t;
  s.n = static_cast<std::size_t>(rng.poisson(cfg.R_t));
  fill_points(cfg.density, s.n, rng, s.points);
  return s;
}

inline PointSample sample_poisson(const PoissonFieldConfig& cfg) {
  Stream rng(cfg.seed);
  return sample_poisson(cfg, rng);
}

inline PointSample sample_iid(const CircleDensity& d, std::size_t n, Stream& rng) {
  if (n == 0) throw ArgumentError("sample_iid: n must be >= 1");
  PointSample s;
  s.kind = SampleKind::iid_fixed_n;
  s.n = n;
  fill_points(d, n, rng, s.points);
  return s;
}

inline PointSample sample_iid(const CircleDensity& d, std::size_t n, std::uint64_t seed) {
  Stream rng(seed);
  return sample_iid(d, n, rng);
}

}  // namespace circneedlet
