#pragma once

// Population moments of needlets under a density, normalized compensated
// coefficients β̃ on Poisson samples, fixed-n (de-Poissonized) coordinates and
// covariance matrices of coefficient vectors.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "circneedlet/error.hpp"
#include "circneedlet/fields.hpp"
#include "circneedlet/needlet.hpp"

namespace circneedlet {

struct CoefficientMoments {
  NeedletSpec spec;
  std::string density_id;
  double b = 0.0;       // E ψ(X₁)
  double sigma2 = 0.0;  // E ψ²(X₁)
  double norm2 = 0.0;   // ‖ψ‖²_{L²(ρ)}

  double sigma() const { return std::sqrt(sigma2); }
};

namespace detail {

// ∫ψ₁ψ₂F dρ for two needlets of the same level with centers x₁, x₂:
// λ Σ_m a_m Σ_k w_|k| w_|m+k| e^{-ikx₁} e^{i(m+k)x₂}, k, m+k ≠ 0.
inline std::complex<double> spectral_cross_moment(const NeedletSpec& s1, const NeedletSpec& s2,
                                                  const TrigPolynomial& F) {
  const auto& w1 = *s1.weights;
  const auto& w2 = *s2.weights;
  const long long K1 = static_cast<long long>(w1.size());
  const long long K2 = static_cast<long long>(w2.size());
  const int D = F.degree();
  std::complex<double> total = 0.0;
  for (int m = -D; m <= D; ++m) {
    const std::complex<double> am = F.coefficient(m);
    if (am == 0.0) continue;
    // e^{-ik x₁} e^{i(m+k) x₂} = e^{imx₂} e^{ik(x₂-x₁)}
    const std::complex<double> step = std::polar(1.0, s2.center - s1.center);
    const long long lo = std::max(-K1, -K2 - m);
    const long long hi = std::min(K1, K2 - m);
    std::complex<double> acc = 0.0;
    std::complex<double> rot = std::polar(1.0, static_cast<double>(lo) * (s2.center - s1.center));
    for (long long k = lo; k <= hi; ++k, rot *= step) {
      if ((k - lo) % 64 == 0) rot = std::polar(1.0, static_cast<double>(k) * (s2.center - s1.center));
      const long long l = m + k;
      if (k == 0 || l == 0) continue;
      acc += w1[static_cast<std::size_t>(std::llabs(k) - 1)] * w2[static_cast<std::size_t>(std::llabs(l) - 1)] * rot;
    }
    total += am * std::polar(1.0, m * s2.center) * acc;
  }
  return std::sqrt(s1.length * s2.length) * total;
}

inline double trapezoid(std::span<const double> values) {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc / static_cast<double>(values.size());
}

inline std::vector<double> density_on_grid(const CircleDensity& d, std::size_t n) {
  std::vector<double> f(n);
  for (std::size_t m = 0; m < n; ++m) f[m] = d(kTwoPi * static_cast<double>(m) / static_cast<double>(n));
  return f;
}

}  // namespace detail

// b and σ² by the spectral path when the density carries Fourier coefficients,
// by trapezoid quadrature otherwise. The M0/Minf sandwich on σ² is enforced.
inline CoefficientMoments population_moments(const NeedletSpec& spec, const CircleDensity& d,
                                             std::size_t n_quad = 0) {
  CoefficientMoments m;
  m.spec = spec;
  m.density_id = d.id;
  m.norm2 = squared_norm_spectral(spec);
  if (d.fourier) {
    m.b = needlet_coefficient(spec, *d.fourier);
    m.sigma2 = detail::spectral_cross_moment(spec, spec, *d.fourier).real();
  } else {
    if (n_quad == 0) n_quad = default_quadrature_points(spec);
    const auto psi = needlet_on_grid(spec, n_quad);
    const auto f = detail::density_on_grid(d, n_quad);
    double b = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n_quad; ++i) {
      b += psi[i] * f[i];
      s2 += psi[i] * psi[i] * f[i];
    }
    m.b = b / static_cast<double>(n_quad);
    m.sigma2 = s2 / static_cast<double>(n_quad);
  }
  if (!(m.sigma2 > 0.0) || !std::isfinite(m.sigma2)) {
    throw NumericalFailure("population_moments: sigma2 is not positive for level " + std::to_string(spec.j));
  }
  const double slack = 1e-9 * m.norm2;
  if (m.sigma2 < d.M0 * m.norm2 - slack || m.sigma2 > d.Minf * m.norm2 + slack) {
    throw NumericalFailure("population_moments: sigma2 outside [M0, Minf]·‖psi‖²");
  }
  return m;
}

inline std::vector<CoefficientMoments> level_moments(const NeedletParams& p, const Partition& part,
                                                     std::span<const std::size_t> qs,
                                                     const CircleDensity& d) {
  const auto w = shared_level_weights(p, part.j);
  std::vector<CoefficientMoments> out;
  out.reserve(qs.size());
  for (std::size_t q : qs) out.push_back(population_moments(make_spec(p, part, q, w), d));
  return out;
}

namespace detail {

inline void require_poisson(const PointSample& s, double R_t, const char* who) {
  if (s.kind != SampleKind::poisson) throw ArgumentError(std::string(who) + ": sample must be Poisson");
  if (!(R_t > 0.0) || std::fabs(s.intensity - R_t) > 1e-12 * R_t) {
    throw ArgumentError(std::string(who) + ": R_t does not match the sample intensity");
  }
}

inline void require_distinct(std::span<const std::size_t> qs, std::size_t n_moments, const char* who) {
  if (qs.size() != n_moments) throw ArgumentError(std::string(who) + ": q-list and moments differ in length");
  std::set<std::size_t> seen(qs.begin(), qs.end());
  if (seen.size() != qs.size()) throw ArgumentError(std::string(who) + ": duplicate q indices");
}

}  // namespace detail

// β̃ = (Σ_i ψ(X_i) − R_t b) / (√R_t σ)
inline double beta_tilde(const PointSample& sample, const CoefficientMoments& m, double R_t) {
  detail::require_poisson(sample, R_t, "beta_tilde");
  const double s = needlet_sum(m.spec, sample.points);
  return (s - R_t * m.b) / (std::sqrt(R_t) * m.sigma());
}

// One replication row Y_t, all coordinates from the same sample.
inline std::vector<double> build_vector(std::span<const std::size_t> qs, const PointSample& sample,
                                        std::span<const CoefficientMoments> moments, double R_t) {
  detail::require_distinct(qs, moments.size(), "build_vector");
  detail::require_poisson(sample, R_t, "build_vector");
  std::vector<double> row(moments.size());
  for (std::size_t i = 0; i < moments.size(); ++i) row[i] = beta_tilde(sample, moments[i], R_t);
  return row;
}

// Fixed-n coordinates (Σψ(X_i) − n b)/(√n σ); b = 0 for the uniform density.
inline std::vector<double> depoissonized_vector(const PointSample& sample, std::span<const std::size_t> qs,
                                                std::span<const CoefficientMoments> moments) {
  detail::require_distinct(qs, moments.size(), "depoissonized_vector");
  if (sample.n == 0 || sample.points.empty()) throw ArgumentError("depoissonized_vector: n must be >= 1");
  const double n = static_cast<double>(sample.points.size());
  std::vector<double> row(moments.size());
  for (std::size_t i = 0; i < moments.size(); ++i) {
    const double s = needlet_sum(moments[i].spec, sample.points);
    row[i] = (s - n * moments[i].b) / (std::sqrt(n) * moments[i].sigma());
  }
  return row;
}

enum class CovarianceSource { exact_quadrature, monte_carlo };

struct CovarianceMatrix {
  std::size_t d = 0;
  std::vector<double> entries;  // row-major d×d
  CovarianceSource source = CovarianceSource::exact_quadrature;

  double operator()(std::size_t a, std::size_t b) const { return entries[a * d + b]; }
  double& operator()(std::size_t a, std::size_t b) { return entries[a * d + b]; }

  double min_eigenvalue() const {
    Eigen::MatrixXd M(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = 0; b < d; ++b) M(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = (*this)(a, b);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  // ‖I − C‖_{H.S.}
  double distance_from_identity() const {
    double s = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        const double v = (a == b ? 1.0 : 0.0) - (*this)(a, b);
        s += v * v;
      }
    }
    return std::sqrt(s);
  }
};

// Υ(q₁,q₂) = ∫ψ_{q₁}ψ_{q₂}F dρ / (σ_{q₁}σ_{q₂}); R_t cancels.
inline CovarianceMatrix exact_covariance(std::span<const CoefficientMoments> moments, const CircleDensity& d,
                                         std::size_t n_quad = 0) {
  CovarianceMatrix C;
  C.d = moments.size();
  C.entries.assign(C.d * C.d, 0.0);
  C.source = CovarianceSource::exact_quadrature;
  if (d.fourier) {
    for (std::size_t a = 0; a < C.d; ++a) {
      for (std::size_t b = a; b < C.d; ++b) {
        const double v = a == b ? moments[a].sigma2
                                : detail::spectral_cross_moment(moments[a].spec, moments[b].spec, *d.fourier).real();
        C(a, b) = C(b, a) = v / (moments[a].sigma() * moments[b].sigma());
      }
    }
    return C;
  }
  std::size_t need = 0;
  for (const auto& m : moments) need = std::max(need, default_quadrature_points(m.spec));
  if (n_quad == 0) n_quad = need;
  const auto f = detail::density_on_grid(d, n_quad);
  std::vector<std::vector<double>> psi;
  for (const auto& m : moments) psi.push_back(needlet_on_grid(m.spec, n_quad));
  for (std::size_t a = 0; a < C.d; ++a) {
    for (std::size_t b = a; b < C.d; ++b) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n_quad; ++i) acc += psi[a][i] * psi[b][i] * f[i];
      acc /= static_cast<double>(n_quad);
      C(a, b) = C(b, a) = acc / (moments[a].sigma() * moments[b].sigma());
    }
  }
  return C;
}

enum class SampleCoordinates { poissonized, depoissonized };

struct CoefficientSample {
  int j = 0;
  std::vector<std::size_t> qs;
  double R_t = 0.0;      // intensity, or n for fixed-n rows
  NeedletParams params;
  std::uint64_t seed = 0;
  SampleCoordinates kind = SampleCoordinates::poissonized;
  std::size_t d = 0;
  std::vector<double> values;  // row-major replications × d

  std::size_t rows() const { return d == 0 ? 0 : values.size() / d; }
  double at(std::size_t r, std::size_t c) const { return values[r * d + c]; }

  std::vector<double> column(std::size_t c) const {
    std::vector<double> out(rows());
    for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, c);
    return out;
  }

  void append(std::span<const double> row) {
    if (d == 0) d = row.size();
    if (row.size() != d) throw ArgumentError("CoefficientSample: row width mismatch");
    values.insert(values.end(), row.begin(), row.end());
  }
};

inline CovarianceMatrix monte_carlo_covariance(const CoefficientSample& s) {
  const std::size_t n = s.rows();
  if (n < 2) throw ArgumentError("monte_carlo_covariance: need at least two replications");
  CovarianceMatrix C;
  C.d = s.d;
  C.entries.assign(C.d * C.d, 0.0);
  C.source = CovarianceSource::monte_carlo;
  std::vector<double> mean(s.d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < s.d; ++c) mean[c] += s.at(r, c);
  for (auto& v : mean) v /= static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t a = 0; a < s.d; ++a)
      for (std::size_t b = 0; b < s.d; ++b) C(a, b) += (s.at(r, a) - mean[a]) * (s.at(r, b) - mean[b]);
  for (auto& v : C.entries) v /= static_cast<double>(n - 1);
  return C;
}

}  // namespace circneedlet
