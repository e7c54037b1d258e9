#pragma once

// Mexican needlets on the unit circle: weight function, frame constants,
// equal-arc partitions, needlet evaluation, coefficients, L^p norms and
// frame-tightness diagnostics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "circneedlet/error.hpp"
#include "circneedlet/trig_polynomial.hpp"

namespace circneedlet {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Largest arc count / Fourier truncation index we are willing to allocate.
inline constexpr std::size_t kMaxArcs = std::size_t{1} << 31;
inline constexpr std::size_t kMaxTerms = std::size_t{1} << 28;

struct NeedletParams {
  double B = 1.3;
  int s = 3;
  double eta = 1.0;
  double trunc_eps = 1e-12;

  void validate() const {
    if (!(B > 1.0) || !std::isfinite(B)) throw ArgumentError("NeedletParams: B must be > 1");
    if (s < 1) throw ArgumentError("NeedletParams: s must be a positive integer");
    if (!(eta > 0.0 && eta <= 1.0)) throw ArgumentError("NeedletParams: eta must lie in (0, 1]");
    if (!(trunc_eps > 0.0 && trunc_eps < 1e-6)) {
      throw ArgumentError("NeedletParams: trunc_eps must lie in (0, 1e-6)");
    }
  }
};

struct FrameConstants {
  double e_s = 0.0;        // Calderon constant Γ(2s)/2^{2s}
  double lambda_Bs = 0.0;  // e_s / (2 log B)
};

// w_s(x) = x^s e^{-x}
inline double weight(int s, double x) {
  if (!(x >= 0.0)) throw DomainError("weight: x must be nonnegative");
  if (x == 0.0 || std::isinf(x)) return 0.0;
  return std::exp(s * std::log(x) - x);
}

inline double calderon_constant(int s) {
  if (s < 1) throw ArgumentError("calderon_constant: s must be >= 1");
  return boost::math::tgamma(2.0 * s) / std::pow(2.0, 2.0 * s);
}

// ∫_0^∞ |w_s(t x)|² dx/x evaluated numerically; equals calderon_constant(s)
// for every t > 0.
inline double calderon_quadrature(int s, double t = 1.0) {
  if (s < 1) throw ArgumentError("calderon_quadrature: s must be >= 1");
  if (!(t > 0.0)) throw ArgumentError("calderon_quadrature: t must be positive");
  boost::math::quadrature::exp_sinh<double> integrator;
  auto f = [s, t](double x) {
    if (x <= 0.0) return 0.0;
    const double w = weight(s, t * x);
    return w * w / x;
  };
  return integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-14);
}

inline FrameConstants frame_constants(const NeedletParams& p) {
  p.validate();
  FrameConstants fc;
  fc.e_s = calderon_constant(p.s);
  fc.lambda_Bs = fc.e_s / (2.0 * std::log(p.B));
  return fc;
}

// Σ_{j∈Z} |w_s(t B^{-2j})|², summed outward from the dominant level until the
// terms fall below trunc_eps of the largest one.
inline double window_sum(const NeedletParams& p, double t) {
  if (!(t > 0.0)) throw ArgumentError("window_sum: t must be positive");
  const double logB = std::log(p.B);
  const long long j0 = std::llround(std::log(t / p.s) / (2.0 * logB));
  auto term = [&](long long j) {
    const double x = t * std::exp(-2.0 * static_cast<double>(j) * logB);
    const double w = weight(p.s, x);
    return w * w;
  };
  double peak = term(j0);
  double sum = peak;
  for (long long j = j0 + 1;; ++j) {
    const double v = term(j);
    sum += v;
    peak = std::max(peak, v);
    if (v < p.trunc_eps * peak || j - j0 > 100000) break;
  }
  for (long long j = j0 - 1;; --j) {
    const double v = term(j);
    sum += v;
    peak = std::max(peak, v);
    if (v < p.trunc_eps * peak || j0 - j > 100000) break;
  }
  return sum;
}

struct WindowBounds {
  double m_hat = 0.0;
  double M_hat = 0.0;
};

inline WindowBounds frame_window_bounds(const NeedletParams& p, std::span<const double> t_grid) {
  p.validate();
  if (t_grid.empty()) throw ArgumentError("frame_window_bounds: empty t grid");
  const double lambda = frame_constants(p).lambda_Bs;
  WindowBounds wb{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (double t : t_grid) {
    const double v = window_sum(p, t) / lambda;
    wb.m_hat = std::min(wb.m_hat, v);
    wb.M_hat = std::max(wb.M_hat, v);
  }
  return wb;
}

// n log-spaced points in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
    g[i] = lo * std::pow(hi / lo, f);
  }
  return g;
}

struct Partition {
  int j = 0;
  std::size_t Q = 0;
  std::vector<double> centers;  // arc midpoints in [0, 2π)
  std::vector<double> lengths;  // ρ-measure of each arc
};

// Q_j = ceil(B^j / η); a value within 1e-12 relative of an integer is taken
// as that integer so that e.g. B^j = 10 does not round up to 11.
inline std::size_t arc_count(const NeedletParams& p, int j) {
  const double x = std::pow(p.B, j) / p.eta;
  if (!std::isfinite(x) || x > static_cast<double>(kMaxArcs)) {
    throw ResourceError("arc_count: Q_j = ceil(B^j/eta) exceeds the supported range");
  }
  const double r = std::round(x);
  const double q = std::fabs(x - r) <= 1e-12 * x ? r : std::ceil(x);
  return std::max<std::size_t>(1, static_cast<std::size_t>(q));
}

namespace detail {

inline Partition partition_any_level(const NeedletParams& p, int j) {
  Partition part;
  part.j = j;
  part.Q = arc_count(p, j);
  part.centers.resize(part.Q);
  part.lengths.assign(part.Q, 1.0 / static_cast<double>(part.Q));
  for (std::size_t q = 0; q < part.Q; ++q) {
    part.centers[q] = kTwoPi * (static_cast<double>(q) + 0.5) / static_cast<double>(part.Q);
  }
  return part;
}

}  // namespace detail

inline Partition make_partition(const NeedletParams& p, int j) {
  p.validate();
  if (j < 0) throw ArgumentError("make_partition: resolution level must be >= 0");
  return detail::partition_any_level(p, j);
}

// Circular distance min(|a-b|, 2π-|a-b|) in radians.
inline double circular_distance(double a, double b) noexcept {
  double d = std::fmod(std::fabs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

// Representative of phi in [-π, π).
inline double wrap_angle(double phi) noexcept {
  double r = std::fmod(phi + std::numbers::pi, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r - std::numbers::pi;
}

// w_s((B^{-j}k)²) for k = 1..k_max, truncated per NeedletParams::trunc_eps.
inline std::vector<double> level_weights(const NeedletParams& p, int j) {
  p.validate();
  const double scale = std::pow(p.B, -static_cast<double>(j));
  const double k_peak = std::sqrt(static_cast<double>(p.s)) / scale;
  if (k_peak > static_cast<double>(kMaxTerms) / 8.0) {
    throw ResourceError("level_weights: truncation index exceeds supported range");
  }
  std::vector<double> w;
  double peak = 0.0;
  for (std::size_t k = 1;; ++k) {
    if (k > kMaxTerms) throw ResourceError("level_weights: truncation index exceeds supported range");
    const double x = scale * static_cast<double>(k);
    const double v = weight(p.s, x * x);
    peak = std::max(peak, v);
    if (static_cast<double>(k) > k_peak && (v < p.trunc_eps * peak || peak == 0.0)) break;
    w.push_back(v);
  }
  if (peak == 0.0) w.clear();
  return w;
}

struct NeedletSpec {
  NeedletParams params;
  int j = 0;
  double center = 0.0;  // x_{jq}, radians
  double length = 1.0;  // λ_{jq}, ρ-measure
  std::shared_ptr<const std::vector<double>> weights;  // shared across arcs of a level

  std::size_t k_max() const noexcept { return weights ? weights->size() : 0; }
  double amplitude() const noexcept { return 2.0 * std::sqrt(length); }
};

inline std::shared_ptr<const std::vector<double>> shared_level_weights(const NeedletParams& p, int j) {
  return std::make_shared<const std::vector<double>>(level_weights(p, j));
}

inline NeedletSpec make_spec(const NeedletParams& p, int j, double center, double length,
                             std::shared_ptr<const std::vector<double>> weights = nullptr) {
  p.validate();
  if (!(length > 0.0 && length <= 1.0)) throw ArgumentError("make_spec: length must lie in (0, 1]");
  NeedletSpec spec;
  spec.params = p;
  spec.j = j;
  spec.center = center;
  spec.length = length;
  spec.weights = weights ? std::move(weights) : shared_level_weights(p, j);
  return spec;
}

inline NeedletSpec make_spec(const NeedletParams& p, const Partition& part, std::size_t q,
                             std::shared_ptr<const std::vector<double>> weights = nullptr) {
  if (q >= part.Q) throw ArgumentError("make_spec: arc index out of range");
  return make_spec(p, part.j, part.centers[q], part.lengths[q], std::move(weights));
}

namespace detail {

inline constexpr std::size_t kLanes = 8;
inline constexpr std::size_t kResync = 64;

// acc[l] = Σ_{k=1}^{K} w_k cos(k ph[l]) for l < kLanes. cos/sin(kφ) advance by
// rotation and are re-anchored exactly every kResync steps.
inline void cosine_block(const double* w, std::size_t K, const double* ph, double* acc) {
  double cr[kLanes], sr[kLanes], c[kLanes], s[kLanes];
  for (std::size_t l = 0; l < kLanes; ++l) {
    cr[l] = std::cos(ph[l]);
    sr[l] = std::sin(ph[l]);
    acc[l] = 0.0;
  }
  for (std::size_t k0 = 1; k0 <= K; k0 += kResync) {
    const double kk = static_cast<double>(k0);
    for (std::size_t l = 0; l < kLanes; ++l) {
      c[l] = std::cos(kk * ph[l]);
      s[l] = std::sin(kk * ph[l]);
    }
    const std::size_t kend = std::min(K, k0 + kResync - 1);
    for (std::size_t k = k0; k <= kend; ++k) {
      const double wk = w[k - 1];
      for (std::size_t l = 0; l < kLanes; ++l) {
        acc[l] += wk * c[l];
        const double cn = c[l] * cr[l] - s[l] * sr[l];
        s[l] = s[l] * cr[l] + c[l] * sr[l];
        c[l] = cn;
      }
    }
  }
}

// Calls sink(index, Σ_k w_k cos(k(θ_i - center))) for every θ_i.
template <class Sink>
void for_each_cosine_sum(std::span<const double> w, double center, std::span<const double> thetas,
                         Sink&& sink) {
  double ph[kLanes];
  double acc[kLanes];
  for (std::size_t base = 0; base < thetas.size(); base += kLanes) {
    const std::size_t m = std::min(kLanes, thetas.size() - base);
    for (std::size_t l = 0; l < kLanes; ++l) {
      ph[l] = l < m ? wrap_angle(thetas[base + l] - center) : 0.0;
    }
    cosine_block(w.data(), w.size(), ph, acc);
    for (std::size_t l = 0; l < m; ++l) sink(base + l, acc[l]);
  }
}

}  // namespace detail

// ψ_{jq;s}(θ) = √λ Σ_{k≠0} w_s((B^{-j}k)²) e^{ik(θ-x)} = 2√λ Σ_{k≥1} w_k cos(k(θ-x)).
inline double evaluate_needlet(const NeedletSpec& spec, double theta) {
  double out = 0.0;
  const double th[1] = {theta};
  detail::for_each_cosine_sum(*spec.weights, spec.center, th,
                              [&](std::size_t, double v) { out = v; });
  return spec.amplitude() * out;
}

inline void evaluate_needlet(const NeedletSpec& spec, std::span<const double> thetas,
                             std::span<double> out) {
  if (out.size() != thetas.size()) throw ArgumentError("evaluate_needlet: output size mismatch");
  const double a = spec.amplitude();
  detail::for_each_cosine_sum(*spec.weights, spec.center, thetas,
                              [&](std::size_t i, double v) { out[i] = a * v; });
}

inline std::vector<double> evaluate_needlet(const NeedletSpec& spec, std::span<const double> thetas) {
  std::vector<double> out(thetas.size());
  evaluate_needlet(spec, thetas, out);
  return out;
}

// Σ_i ψ(θ_i), summed directly over the points.
inline double needlet_sum(const NeedletSpec& spec, std::span<const double> thetas) {
  double total = 0.0;
  detail::for_each_cosine_sum(*spec.weights, spec.center, thetas,
                              [&](std::size_t, double v) { total += v; });
  return spec.amplitude() * total;
}

// Two-sided complex sum over k = -k_max..k_max, term by term. Slow; exists to
// check that the imaginary part cancels.
inline std::complex<double> evaluate_needlet_complex(const NeedletSpec& spec, double theta) {
  const auto& w = *spec.weights;
  const double phi = theta - spec.center;
  std::complex<double> acc = 0.0;
  const auto K = static_cast<long long>(w.size());
  for (long long k = -K; k <= K; ++k) {
    if (k == 0) continue;
    acc += w[static_cast<std::size_t>(std::llabs(k) - 1)] * std::polar(1.0, static_cast<double>(k) * phi);
  }
  return std::sqrt(spec.length) * acc;
}

// Fourier coefficients of ψ itself: a_k = √λ w_|k| e^{-ikx}.
inline TrigPolynomial needlet_as_trig_polynomial(const NeedletSpec& spec) {
  const auto& w = *spec.weights;
  const int K = static_cast<int>(w.size());
  TrigPolynomial p = TrigPolynomial::zero(K);
  const double r = std::sqrt(spec.length);
  for (int k = 1; k <= K; ++k) {
    const double wk = r * w[static_cast<std::size_t>(k - 1)];
    p.set(k, wk * std::polar(1.0, -k * spec.center));
    p.set(-k, wk * std::polar(1.0, k * spec.center));
  }
  return p;
}

inline std::size_t default_quadrature_points(const NeedletSpec& spec) {
  return std::max<std::size_t>(4096, 8 * spec.k_max());
}

inline void check_quadrature(const NeedletSpec& spec, std::size_t n_quad) {
  if (n_quad < 4 * spec.k_max() || n_quad < 4) {
    throw QuadratureResolutionError("quadrature grid of " + std::to_string(n_quad) +
                                    " points does not resolve k_max = " +
                                    std::to_string(spec.k_max()) + " (need >= 4 k_max)");
  }
}

inline std::vector<double> uniform_grid(std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t m = 0; m < n; ++m) g[m] = kTwoPi * static_cast<double>(m) / static_cast<double>(n);
  return g;
}

// ψ at θ_m = 2πm/N.
inline std::vector<double> needlet_on_grid(const NeedletSpec& spec, std::size_t n_quad) {
  check_quadrature(spec, n_quad);
  return evaluate_needlet(spec, uniform_grid(n_quad));
}

// Spectral path: β = √λ Σ_k a_k w_|k| e^{ikx}. Throws NumericalFailure when F
// is real but the imaginary residue exceeds 1e-10 relative.
inline double needlet_coefficient(const NeedletSpec& spec, const TrigPolynomial& F) {
  const auto& w = *spec.weights;
  const int D = std::min<int>(F.degree(), static_cast<int>(w.size()));
  std::complex<double> acc = 0.0;
  double scale = 0.0;
  for (int k = -D; k <= D; ++k) {
    if (k == 0) continue;
    const std::complex<double> term =
        F.coefficient(k) * w[static_cast<std::size_t>(std::abs(k) - 1)] * std::polar(1.0, k * spec.center);
    acc += term;
    scale += std::abs(term);
  }
  acc *= std::sqrt(spec.length);
  scale *= std::sqrt(spec.length);
  if (F.is_real() && std::fabs(acc.imag()) > 1e-10 * std::max(scale, 1e-300)) {
    throw NumericalFailure("needlet_coefficient: imaginary residue for a real F");
  }
  return acc.real();
}

// Quadrature path: trapezoid (1/N) Σ_m F(θ_m) ψ(θ_m) on the uniform grid.
inline double needlet_coefficient_quadrature(const NeedletSpec& spec,
                                             const std::function<double(double)>& F,
                                             std::size_t n_quad = 0) {
  if (n_quad == 0) n_quad = default_quadrature_points(spec);
  const auto grid = uniform_grid(n_quad);
  const auto psi = needlet_on_grid(spec, n_quad);
  double acc = 0.0;
  for (std::size_t m = 0; m < n_quad; ++m) acc += F(grid[m]) * psi[m];
  return acc / static_cast<double>(n_quad);
}

// ‖ψ‖_p^p under ρ.
inline double lp_norm(const NeedletSpec& spec, double p, std::size_t n_quad = 0) {
  if (!(p >= 1.0)) throw ArgumentError("lp_norm: p must be >= 1");
  if (n_quad == 0) n_quad = default_quadrature_points(spec);
  const auto psi = needlet_on_grid(spec, n_quad);
  double acc = 0.0;
  if (p == 2.0) {
    for (double v : psi) acc += v * v;
  } else {
    for (double v : psi) acc += std::pow(std::fabs(v), p);
  }
  return acc / static_cast<double>(n_quad);
}

// ‖ψ‖²_{L²} by Parseval: λ Σ_{k≠0} w_|k|².
inline double squared_norm_spectral(const NeedletSpec& spec) {
  double s = 0.0;
  for (double v : *spec.weights) s += v * v;
  return 2.0 * spec.length * s;
}

// Largest ratio |ψ(θ)| / [B^{j/2} e^{-u²}(1 + u^{2s})], u = B^j Δ/2, on the
// quadrature grid, restricted to points where the envelope exceeds
// envelope_floor (beyond that |ψ| is at truncation-noise level).
inline double fit_localization_constant(const NeedletSpec& spec, double envelope_floor = 1e-8,
                                        std::size_t n_quad = 0) {
  if (n_quad == 0) n_quad = default_quadrature_points(spec);
  const auto grid = uniform_grid(n_quad);
  const auto psi = needlet_on_grid(spec, n_quad);
  const double Bj = std::pow(spec.params.B, spec.j);
  double best = 0.0;
  for (std::size_t m = 0; m < n_quad; ++m) {
    const double u = Bj * circular_distance(grid[m], spec.center) / 2.0;
    const double env = std::exp(-u * u) * (1.0 + std::pow(u, 2 * spec.params.s));
    if (env < envelope_floor) continue;
    best = std::max(best, std::fabs(psi[m]) / (std::sqrt(Bj) * env));
  }
  return best;
}

namespace detail {

// Σ_q |β_{jq}|² at one level for real-or-complex F via the spectral path,
// using Horner in z = e^{ix_q}.
inline double level_energy(const NeedletParams& p, int j, const TrigPolynomial& F) {
  const Partition part = partition_any_level(p, j);
  const int D = F.degree();
  const double scale = std::pow(p.B, -static_cast<double>(j));
  std::vector<std::complex<double>> c(2 * static_cast<std::size_t>(D) + 1);
  bool any = false;
  for (int k = -D; k <= D; ++k) {
    const double x = scale * k;
    const double wk = k == 0 ? 0.0 : weight(p.s, x * x);
    c[static_cast<std::size_t>(k + D)] = F.coefficient(k) * wk;
    any = any || std::abs(c[static_cast<std::size_t>(k + D)]) > 0.0;
  }
  if (!any) return 0.0;
  double total = 0.0;
  for (std::size_t q = 0; q < part.Q; ++q) {
    const std::complex<double> z = std::polar(1.0, part.centers[q]);
    std::complex<double> h = 0.0;
    for (std::size_t i = c.size(); i-- > 0;) h = h * z + c[i];
    h *= std::polar(1.0, -D * part.centers[q]);
    total += part.lengths[q] * std::norm(h);
  }
  return total;
}

// Diagonal (alias-free) energy Σ_k |a_k|² w_k(j)² at one level.
inline double level_diagonal_energy(const NeedletParams& p, int j, const TrigPolynomial& F) {
  const int D = F.degree();
  const double scale = std::pow(p.B, -static_cast<double>(j));
  double e = 0.0;
  for (int k = -D; k <= D; ++k) {
    if (k == 0) continue;
    const double x = scale * k;
    const double wk = weight(p.s, x * x);
    e += std::norm(F.coefficient(k)) * wk * wk;
  }
  return e;
}

}  // namespace detail

// Σ_{j=j_min}^{j_max} Σ_q |β_{jq;s}|² / ‖F‖²_{L²}.
inline double frame_tightness_ratio(const NeedletParams& p, const TrigPolynomial& F, int j_min, int j_max) {
  p.validate();
  if (j_min > j_max) throw ArgumentError("frame_tightness_ratio: empty level range");
  const double norm2 = F.squared_norm();
  if (!(norm2 > 0.0)) throw ArgumentError("frame_tightness_ratio: F must be nonzero");
  double inside = 0.0;
  for (int j = j_min; j <= j_max; ++j) inside += detail::level_diagonal_energy(p, j, F);
  double missing = 0.0;
  for (int j = j_max + 1;; ++j) {
    const double e = detail::level_diagonal_energy(p, j, F);
    missing += e;
    if (e <= 1e-20 * inside || j > j_max + 2000) break;
  }
  for (int j = j_min - 1;; --j) {
    const double e = detail::level_diagonal_energy(p, j, F);
    missing += e;
    if (e <= 1e-20 * inside || j < j_min - 2000) break;
  }
  const double frac = missing / std::max(inside + missing, 1e-300);
  if (!(frac < 1e-6)) {
    throw CoverageError("frame_tightness_ratio: level range [" + std::to_string(j_min) + ", " +
                            std::to_string(j_max) + "] omits a fraction " + std::to_string(frac) +
                            " of the frame energy",
                        frac);
  }
  double total = 0.0;
  for (int j = j_min; j <= j_max; ++j) total += detail::level_energy(p, j, F);
  return total / norm2;
}

}  // namespace circneedlet
