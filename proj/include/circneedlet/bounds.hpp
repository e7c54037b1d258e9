#pragma once

// Computable right-hand sides of the univariate Wasserstein and multivariate
// d₂ normal-approximation bounds for needlet coefficients, their closed-form
// rates, and the covariance envelope.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "circneedlet/coefficients.hpp"
#include "circneedlet/error.hpp"
#include "circneedlet/fields.hpp"
#include "circneedlet/needlet.hpp"

namespace circneedlet {

struct WassersteinTerms {
  double normalization_term = 0.0;  // |1 − ‖h‖²_{L²(μ_t)}|, zero up to quadrature
  double integral_term = 0.0;       // ∫|h|³ dμ_t
  double total() const { return normalization_term + integral_term; }
};

// h = ψ/(√R_t σ), so ∫|h|³dμ_t = R_t^{-1/2} σ^{-3} ∫|ψ|³F dρ.
inline WassersteinTerms wasserstein_terms(const CoefficientMoments& m, const CircleDensity& d, double R_t,
                                          std::size_t n_quad = 0) {
  if (!(R_t > 0.0)) throw ArgumentError("wasserstein_rhs: R_t must be positive");
  if (n_quad == 0) n_quad = default_quadrature_points(m.spec);
  const auto psi = needlet_on_grid(m.spec, n_quad);
  const auto f = detail::density_on_grid(d, n_quad);
  double two = 0.0, three = 0.0;
  for (std::size_t i = 0; i < n_quad; ++i) {
    const double a = std::fabs(psi[i]);
    two += a * a * f[i];
    three += a * a * a * f[i];
  }
  two /= static_cast<double>(n_quad);
  three /= static_cast<double>(n_quad);
  WassersteinTerms w;
  w.normalization_term = std::fabs(1.0 - two / m.sigma2);
  w.integral_term = three / (std::sqrt(R_t) * m.sigma2 * m.sigma());
  return w;
}

// The integral term; the normalization term vanishes identically.
inline double wasserstein_rhs(const CoefficientMoments& m, const CircleDensity& d, double R_t,
                              std::size_t n_quad = 0) {
  return wasserstein_terms(m, d, R_t, n_quad).integral_term;
}

// Σ_{i₁,i₂,i₃} ∫|h_{i₁}||h_{i₂}||h_{i₃}| dμ_t = R_t^{-1/2} ∫(Σ_i |ψ_i|/σ_i)³ F dρ.
inline double triple_term(std::span<const CoefficientMoments> ms, const CircleDensity& d, double R_t,
                          std::size_t n_quad = 0) {
  if (ms.empty()) throw ArgumentError("triple_term: empty coordinate list");
  if (!(R_t > 0.0)) throw ArgumentError("triple_term: R_t must be positive");
  std::size_t need = 0;
  for (const auto& m : ms) need = std::max(need, default_quadrature_points(m.spec));
  if (n_quad == 0) n_quad = need;
  std::vector<double> acc(n_quad, 0.0);
  for (const auto& m : ms) {
    const auto psi = needlet_on_grid(m.spec, n_quad);
    const double inv = 1.0 / m.sigma();
    for (std::size_t i = 0; i < n_quad; ++i) acc[i] += std::fabs(psi[i]) * inv;
  }
  const auto f = detail::density_on_grid(d, n_quad);
  double total = 0.0;
  for (std::size_t i = 0; i < n_quad; ++i) total += acc[i] * acc[i] * acc[i] * f[i];
  return total / static_cast<double>(n_quad) / std::sqrt(R_t);
}

struct BoundReport {
  int j = 0;
  std::vector<std::size_t> qs;
  double R_t = 0.0;
  NeedletParams params;
  std::string density_id;
  double wasserstein_rhs = 0.0;
  double d2_rhs = 0.0;
  double rate_term = 0.0;
  double covariance_hs_term = 0.0;
  double triple_term = 0.0;
};

inline constexpr double kD2TriplePrefactor = 0.31332853432887503;  // √(2π)/8

inline double rate_term(int j, double R_t, double B) {
  const double x = std::pow(B, -static_cast<double>(j)) * R_t;
  if (!(x > 0.0) || !std::isfinite(x)) throw ArgumentError("rate_term: B^{-j} R_t must be positive and finite");
  return 1.0 / std::sqrt(x);
}

// d₂ bound with Σ = I_d: ‖I − C‖_{H.S.} + (√(2π)/8)·triple.
inline BoundReport d2_rhs(std::span<const std::size_t> qs, std::span<const CoefficientMoments> ms,
                          const CircleDensity& d, double R_t) {
  if (ms.size() < 2) throw ArgumentError("d2_rhs: needs d >= 2 coordinates");
  if (qs.size() != ms.size()) throw ArgumentError("d2_rhs: q-list and moments differ in length");
  BoundReport r;
  r.j = ms.front().spec.j;
  r.qs.assign(qs.begin(), qs.end());
  r.R_t = R_t;
  r.params = ms.front().spec.params;
  r.density_id = d.id;
  r.covariance_hs_term = exact_covariance(ms, d).distance_from_identity();
  r.triple_term = triple_term(ms, d, R_t);
  r.d2_rhs = r.covariance_hs_term + kD2TriplePrefactor * r.triple_term;
  r.rate_term = rate_term(r.j, R_t, r.params.B);
  double wmax = 0.0;
  for (const auto& m : ms) wmax = std::max(wmax, wasserstein_rhs(m, d, R_t));
  r.wasserstein_rhs = wmax;
  return r;
}

inline BoundReport univariate_report(std::size_t q, const CoefficientMoments& m, const CircleDensity& d,
                                     double R_t) {
  BoundReport r;
  r.j = m.spec.j;
  r.qs = {q};
  r.R_t = R_t;
  r.params = m.spec.params;
  r.density_id = d.id;
  r.wasserstein_rhs = wasserstein_rhs(m, d, R_t);
  r.rate_term = rate_term(r.j, R_t, r.params.B);
  return r;
}

struct TheoreticalRate {
  double univariate = 0.0;    // (B^{-j}R_t)^{-1/2}
  double multivariate = 0.0;  // d·(B^{-j}R_t)^{-1/2}
};

inline TheoreticalRate theoretical_rate(int j, double R_t, double B, std::size_t d = 1) {
  const double u = rate_term(j, R_t, B);
  return {u, static_cast<double>(d) * u};
}

// exp(−c_env B^{2j} Δ²)(1 + (B^j Δ)^{2s})
inline double covariance_envelope(int j, double B, int s, double delta, double c_env = 0.25) {
  if (!(delta >= 0.0)) throw ArgumentError("covariance_envelope: delta must be nonnegative");
  const double u = std::pow(B, j) * delta;
  return std::exp(-c_env * u * u) * (1.0 + std::pow(u, 2 * s));
}

// Largest |Υ(q₁,q₂)| / envelope over off-diagonal pairs. Pairs whose
// envelope underflows to 0 report +inf when the entry is nonzero.
inline double max_envelope_ratio(const CovarianceMatrix& C, std::span<const CoefficientMoments> ms, double c_env = 0.25) {
  double best = 0.0;
  for (std::size_t a = 0; a < C.d; ++a) {
    for (std::size_t b = a + 1; b < C.d; ++b) {
      const auto& s = ms[a].spec;
      const double delta = circular_distance(s.center, ms[b].spec.center);
      const double env = covariance_envelope(s.j, s.params.B, s.params.s, delta, c_env);
      const double v = std::fabs(C(a, b));
      const double r = env > 0.0 ? v / env : (v > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
      best = std::max(best, r);
    }
  }
  return best;
}

// Smallest C with values[i] ≤ C·bounds[i] for all i.
inline double fitted_constant(std::span<const double> values, std::span<const double> bounds) {
  if (values.size() != bounds.size() || values.empty()) throw ArgumentError("fitted_constant: size mismatch");
  double c = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(bounds[i] > 0.0)) throw ArgumentError("fitted_constant: bounds must be positive");
    c = std::max(c, values[i] / bounds[i]);
  }
  return c;
}

// ν-mass of the arc of ρ-measure `measure` centered at `center`, by
// trapezoid on n points across the arc.
inline double arc_mass(const CircleDensity& d, double center, double measure, std::size_t n = 2048) {
  if (!(measure > 0.0 && measure <= 1.0)) throw ArgumentError("arc_mass: measure must lie in (0, 1]");
  const double half = std::numbers::pi * measure;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double th = center - half + 2.0 * half * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    acc += d(th);
  }
  return measure * acc / static_cast<double>(n);
}

// Number of points within circular distance π·measure of center.
inline std::size_t count_in_arc(std::span<const double> points, double center, double measure) {
  const double half = std::numbers::pi * measure;
  return static_cast<std::size_t>(std::count_if(points.begin(), points.end(),
                                                [&](double x) { return circular_distance(x, center) <= half; }));
}

}  // namespace circneedlet
