#pragma once

// Hard-thresholding needlet density estimator with a plug-in threshold rule.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/tools/roots.hpp>

#include "circneedlet/coefficients.hpp"
#include "circneedlet/error.hpp"
#include "circneedlet/fields.hpp"
#include "circneedlet/needlet.hpp"
#include "circneedlet/stats.hpp"

namespace circneedlet {

struct ThresholdConfig {
  int J0 = 0;
  double kappa = 2.0;
  std::size_t n = 0;
  double tau_n = 0.0;  // √(log n / n)
  int Jn = 0;          // floor(log √(n / log n) / log B)

  double threshold() const { return kappa * tau_n; }
};

inline double tau_for(std::size_t n) {
  if (n < 2) throw ArgumentError("tau_n: n must be >= 2");
  const double dn = static_cast<double>(n);
  return std::sqrt(std::log(dn) / dn);
}

inline int finest_level(std::size_t n, double B) {
  if (n < 3) throw ArgumentError("finest_level: n must be >= 3");
  const double dn = static_cast<double>(n);
  const double x = std::log(std::sqrt(dn / std::log(dn))) / std::log(B);
  const double r = std::round(x);
  return static_cast<int>(std::fabs(x - r) <= 1e-12 * std::max(1.0, std::fabs(x)) ? r : std::floor(x));
}

inline ThresholdConfig make_threshold_config(std::size_t n, double B, double kappa = 2.0, int J0 = 0) {
  if (!(kappa > 0.0)) throw ArgumentError("ThresholdConfig: kappa must be positive");
  if (J0 < 0) throw ArgumentError("ThresholdConfig: J0 must be >= 0");
  ThresholdConfig c;
  c.J0 = J0;
  c.kappa = kappa;
  c.n = n;
  c.tau_n = tau_for(n);
  c.Jn = finest_level(n, B);
  if (c.Jn < c.J0) {
    throw ConfigError("ThresholdConfig: Jn = " + std::to_string(c.Jn) + " is below J0 = " + std::to_string(J0));
  }
  return c;
}

// β̂ = (1/n) Σ_i ψ(X_i)
inline double empirical_coefficient(const NeedletSpec& spec, const PointSample& sample) {
  if (sample.points.empty()) throw ArgumentError("empirical_coefficient: empty sample");
  return needlet_sum(spec, sample.points) / static_cast<double>(sample.points.size());
}

// All β̂_{jq} of one level through the empirical Fourier coefficients
// ĉ_k = (1/n) Σ_i e^{ikX_i}: β̂_q = 2√λ Σ_k w_k Re(ĉ_k e^{-ikx_q}).
inline std::vector<double> empirical_level_coefficients(const Partition& part, std::span<const double> weights,
                                                        const PointSample& sample) {
  if (sample.points.empty()) throw ArgumentError("empirical_level_coefficients: empty sample");
  const std::size_t K = weights.size();
  std::vector<std::complex<double>> c(K, 0.0);
  for (double x : sample.points) {
    const std::complex<double> z = std::polar(1.0, x);
    std::complex<double> zk = z;
    for (std::size_t k = 1; k <= K; ++k) {
      if (k % 64 == 1 && k > 1) zk = std::polar(1.0, static_cast<double>(k) * x);
      c[k - 1] += zk;
      zk *= z;
    }
  }
  const double inv_n = 1.0 / static_cast<double>(sample.points.size());
  std::vector<double> beta(part.Q);
  for (std::size_t q = 0; q < part.Q; ++q) {
    const double xq = part.centers[q];
    double acc = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
      acc += weights[k - 1] * (c[k - 1] * std::polar(1.0, -static_cast<double>(k) * xq)).real();
    }
    beta[q] = 2.0 * std::sqrt(part.lengths[q]) * acc * inv_n;
  }
  return beta;
}

struct SurvivingCoefficient {
  int j = 0;
  std::size_t q = 0;
  double beta = 0.0;
  NeedletSpec spec;
};

struct DensityEstimate {
  NeedletParams params;
  ThresholdConfig config;
  double lambda_Bs = 0.0;
  std::vector<SurvivingCoefficient> coefficients;

  // F̂(θ) = 1 + Λ⁻¹ Σ β̂ ψ(θ)
  double operator()(double theta) const {
    double acc = 0.0;
    for (const auto& c : coefficients) acc += c.beta * evaluate_needlet(c.spec, theta);
    return 1.0 + acc / lambda_Bs;
  }

  std::vector<double> on_grid(std::span<const double> thetas) const {
    std::vector<double> out(thetas.size(), 0.0);
    std::vector<double> psi(thetas.size());
    for (const auto& c : coefficients) {
      evaluate_needlet(c.spec, thetas, psi);
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += c.beta * psi[i];
    }
    for (auto& v : out) v = 1.0 + v / lambda_Bs;
    return out;
  }

  std::size_t max_k() const {
    std::size_t k = 0;
    for (const auto& c : coefficients) k = std::max(k, c.spec.k_max());
    return k;
  }
};

inline DensityEstimate estimate_density(const PointSample& sample, const NeedletParams& p,
                                        const ThresholdConfig& cfg) {
  p.validate();
  if (cfg.Jn < cfg.J0) throw ConfigError("estimate_density: Jn is below J0");
  if (sample.points.empty()) throw ArgumentError("estimate_density: empty sample");
  DensityEstimate est;
  est.params = p;
  est.config = cfg;
  est.lambda_Bs = frame_constants(p).lambda_Bs;
  const double thr = cfg.threshold();
  for (int j = cfg.J0; j <= cfg.Jn; ++j) {
    const Partition part = make_partition(p, j);
    const auto w = shared_level_weights(p, j);
    const auto beta = empirical_level_coefficients(part, *w, sample);
    for (std::size_t q = 0; q < part.Q; ++q) {
      if (std::fabs(beta[q]) >= thr) est.coefficients.push_back({j, q, beta[q], make_spec(p, part, q, w)});
    }
  }
  return est;
}

inline std::size_t estimate_quadrature_points(const DensityEstimate& est) {
  return std::max<std::size_t>(4096, 8 * est.max_k());
}

// ∫F̂ dρ by trapezoid.
inline double estimate_mass(const DensityEstimate& est, std::size_t n_quad = 0) {
  if (n_quad == 0) n_quad = estimate_quadrature_points(est);
  const auto f = est.on_grid(uniform_grid(n_quad));
  double acc = 0.0;
  for (double v : f) acc += v;
  return acc / static_cast<double>(n_quad);
}

// ∫(F̂ − F)² dρ by trapezoid.
inline double mise(const DensityEstimate& est, const CircleDensity& truth, std::size_t n_quad = 0) {
  if (n_quad == 0) n_quad = estimate_quadrature_points(est);
  const auto grid = uniform_grid(n_quad);
  const auto f = est.on_grid(grid);
  double acc = 0.0;
  for (std::size_t i = 0; i < n_quad; ++i) {
    const double e = f[i] - truth(grid[i]);
    acc += e * e;
  }
  return acc / static_cast<double>(n_quad);
}

// ∫(1 − F)² dρ, the loss of the constant estimator.
inline double constant_estimator_mise(const CircleDensity& truth, std::size_t n_quad = 4096) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n_quad; ++i) {
    const double e = 1.0 - truth(kTwoPi * static_cast<double>(i) / static_cast<double>(n_quad));
    acc += e * e;
  }
  return acc / static_cast<double>(n_quad);
}

inline constexpr std::size_t kMinPilot = 50;

// κ with κτ_n equal to the q-quantile of |β̂| under N(m, v) fitted to the
// pilot values: P(|N(m, v)| ≤ κτ_n) = q.
inline double plugin_kappa(std::span<const double> pilot, double tau_n, double q = 0.995) {
  if (pilot.size() < kMinPilot) {
    throw InsufficientPilotError("plugin_kappa: need at least " + std::to_string(kMinPilot) +
                                 " pilot replications, got " + std::to_string(pilot.size()));
  }
  if (!(q > 0.0 && q < 1.0)) throw ArgumentError("plugin_kappa: q must lie in (0, 1)");
  if (!(tau_n > 0.0)) throw ArgumentError("plugin_kappa: tau_n must be positive");
  const double m = mean(pilot);
  const double sd = std::sqrt(variance(pilot));
  if (!(sd > 0.0)) throw DegenerateSampleError("plugin_kappa: pilot has zero variance");
  const boost::math::normal_distribution<double> z;
  auto mass = [&](double t) {
    return boost::math::cdf(z, (t - m) / sd) - boost::math::cdf(z, (-t - m) / sd) - q;
  };
  double hi = std::fabs(m) + 10.0 * sd;
  boost::math::tools::eps_tolerance<double> tol(50);
  std::uintmax_t iters = 200;
  const auto [lo_t, hi_t] = boost::math::tools::toms748_solve(mass, 0.0, hi, tol, iters);
  return 0.5 * (lo_t + hi_t) / tau_n;
}

inline double plugin_kappa(std::span<const CoefficientSample> pilots, int j_star, double tau_n, double q = 0.995) {
  std::vector<double> values;
  for (const auto& s : pilots) {
    if (s.j == j_star) values.insert(values.end(), s.values.begin(), s.values.end());
  }
  return plugin_kappa(values, tau_n, q);
}

}  // namespace circneedlet
