#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "circneedlet/bounds.hpp"
#include "circneedlet/stats.hpp"

using namespace circneedlet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

NeedletParams default_params(double eta = 1.0) {
  NeedletParams p;
  p.B = 1.3;
  p.s = 3;
  p.eta = eta;
  return p;
}

CoefficientMoments moments_at(const NeedletParams& p, int j, double x, const CircleDensity& d) {
  return population_moments(make_spec(p, j, x, 1.0 / static_cast<double>(arc_count(p, j))), d);
}

}  // namespace

TEST_CASE("Wasserstein right-hand side", "[bounds]") {
  const auto p = default_params();
  const auto vm = von_mises_density(2.0);
  const auto m = population_moments(make_spec(p, 6, 0.0, 0.2), vm);
  // mpmath: ∫|ψ|³F dρ = 46.789175316145312, σ² = 9.1779346941692738
  const double ref = 46.789175316145312 / (10.0 * std::pow(9.1779346941692738, 1.5));
  CHECK_THAT(wasserstein_rhs(m, vm, 100.0), WithinRel(ref, 1e-9));
  CHECK_THAT(wasserstein_rhs(m, vm, 400.0), WithinRel(0.5 * wasserstein_rhs(m, vm, 100.0), 1e-14));
  CHECK(wasserstein_terms(m, vm, 100.0).normalization_term < 1e-8);
  CHECK_THROWS_AS(wasserstein_rhs(m, vm, 0.0), ArgumentError);
}

TEST_CASE("Wasserstein rhs grows like B^{j/2} at fixed R_t", "[bounds]") {
  const auto p = default_params();
  const auto u = uniform_density();
  std::vector<double> js, logs;
  for (int j = 8; j <= 20; ++j) {
    js.push_back(j);
    logs.push_back(std::log(wasserstein_rhs(moments_at(p, j, std::numbers::pi, u), u, 500.0)));
  }
  const auto fit = linear_fit(js, logs);
  CHECK_THAT(fit.slope, WithinRel(0.5 * std::log(p.B), 0.02));
  CHECK(fit.r2 > 0.999);
}

TEST_CASE("triple term against an explicit triple loop", "[bounds]") {
  const auto p = default_params();
  const auto d = von_mises_density(1.5);
  const auto part = make_partition(p, 8);
  const std::vector<std::size_t> qs{0, 1, 3};
  const auto ms = level_moments(p, part, qs, d);
  const double R = 700.0;
  const std::size_t n = default_quadrature_points(ms[0].spec);
  const auto grid = uniform_grid(n);
  std::vector<std::vector<double>> h;
  for (const auto& m : ms) {
    auto psi = needlet_on_grid(m.spec, n);
    for (auto& v : psi) v = std::fabs(v) / (std::sqrt(R) * m.sigma());
    h.push_back(psi);
  }
  long double total = 0.0L;
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 3; ++c) {
        long double acc = 0.0L;
        for (std::size_t i = 0; i < n; ++i) acc += h[a][i] * h[b][i] * h[c][i] * R * d(grid[i]);
        total += acc / static_cast<long double>(n);
      }
  CHECK_THAT(triple_term(ms, d, R), WithinRel(static_cast<double>(total), 1e-10));

  // d = 1 reduces to the univariate integral
  CHECK_THAT(triple_term(std::span(ms.data(), 1), d, R), WithinRel(wasserstein_rhs(ms[0], d, R), 1e-12));
}

TEST_CASE("d2 report", "[bounds]") {
  const auto p = default_params();
  const auto u = uniform_density();
  const auto part = make_partition(p, 10);
  const std::vector<std::size_t> far{0, 7};
  const auto ms = level_moments(p, part, far, u);
  const auto r = d2_rhs(far, ms, u, 500.0);
  CHECK(r.covariance_hs_term < 1e-6);
  CHECK_THAT(r.d2_rhs, WithinAbs(r.covariance_hs_term + std::sqrt(2.0 * std::numbers::pi) / 8.0 * r.triple_term, 1e-12));
  CHECK_THAT(r.d2_rhs, WithinRel(kD2TriplePrefactor * r.triple_term, 1e-5));
  CHECK(r.rate_term == rate_term(10, 500.0, 1.3));
  for (double v : {r.d2_rhs, r.covariance_hs_term, r.triple_term, r.wasserstein_rhs, r.rate_term}) {
    CHECK(v >= 0.0);
    CHECK(std::isfinite(v));
  }
  CHECK_THROWS_AS(d2_rhs(std::span(far.data(), 1), std::span(ms.data(), 1), u, 500.0), ArgumentError);

  const auto near = level_moments(p, part, std::vector<std::size_t>{0, 1, 2}, u);
  const std::vector<std::size_t> qn{0, 1, 2};
  const auto rn = d2_rhs(qn, near, u, 500.0);
  CHECK(rn.covariance_hs_term > 1e-3);
  CHECK_THAT(rn.d2_rhs, WithinAbs(rn.covariance_hs_term + kD2TriplePrefactor * rn.triple_term, 1e-12));
}

TEST_CASE("triple term grows at most linearly in d", "[bounds]") {
  const auto p = default_params();
  const auto u = uniform_density();
  const int j = 10;
  const double lam = 1.0 / static_cast<double>(arc_count(p, j));
  auto equispaced = [&](std::size_t d) {
    std::vector<CoefficientMoments> ms;
    for (std::size_t i = 0; i < d; ++i) {
      ms.push_back(population_moments(make_spec(p, j, kTwoPi * static_cast<double>(i) / static_cast<double>(d), lam), u));
    }
    return triple_term(ms, u, 500.0);
  };
  for (std::size_t d : {2u, 3u, 4u}) CHECK(equispaced(2 * d) <= 2.0 * equispaced(d) * 1.1);
}

TEST_CASE("theoretical rates", "[bounds]") {
  const double B = 1.3;
  const auto r = theoretical_rate(10, std::pow(B, 10), B, 3);
  CHECK_THAT(r.univariate, WithinAbs(1.0, 1e-14));
  CHECK_THAT(r.multivariate, WithinAbs(3.0, 1e-13));
  const auto a = theoretical_rate(12, 300.0, B, 2);
  const auto b = theoretical_rate(12, 1200.0, B, 2);
  CHECK_THAT(b.univariate, WithinRel(0.5 * a.univariate, 1e-14));
  CHECK_THAT(b.multivariate, WithinRel(0.5 * a.multivariate, 1e-14));
}

TEST_CASE("effective sample size by counting", "[bounds]") {
  const auto p = default_params();
  const auto d = von_mises_density(2.0);
  const int j = 8;
  const double R = 4000.0;
  const double measure = std::pow(p.B, -j);
  for (double x : {0.0, 1.5, std::numbers::pi}) {
    std::vector<double> counts;
    for (std::uint64_t r = 0; r < 400; ++r) {
      const auto s = sample_poisson(PoissonFieldConfig{R, d, derive_seed(5, {tag_of(x), r})});
      counts.push_back(static_cast<double>(count_in_arc(s.points, x, measure)));
    }
    const double m = mean(counts);
    const double se = std::sqrt(variance(counts) / 400.0);
    CHECK(m >= d.M0 * measure * R - 3.0 * se);
    CHECK(m <= d.Minf * measure * R + 3.0 * se);
    CHECK(std::fabs(m - R * arc_mass(d, x, measure)) < 4.0 * se);
  }
}

TEST_CASE("covariance envelope", "[bounds]") {
  CHECK(covariance_envelope(10, 1.3, 3, 0.0) == 1.0);
  CHECK_THROWS_AS(covariance_envelope(10, 1.3, 3, -0.1), ArgumentError);
  // u^{2s} e^{-u²/4} peaks at u = 2√s; beyond it the envelope decreases
  const double Bj = std::pow(1.3, 10);
  const double start = 2.0 * std::sqrt(3.0) / Bj * 1.01;
  double prev = covariance_envelope(10, 1.3, 3, start);
  for (double delta = start; delta < std::numbers::pi; delta += 0.001) {
    const double v = covariance_envelope(10, 1.3, 3, delta);
    CHECK(v <= prev);
    prev = v;
  }
  const double e4 = covariance_envelope(10, 1.3, 3, 0.2, 1.0);
  CHECK(e4 < covariance_envelope(10, 1.3, 3, 0.2, 0.25));
}

TEST_CASE("fitted constants", "[bounds]") {
  const std::vector<double> v{1.0, 3.0, 2.0};
  const std::vector<double> b{1.0, 2.0, 4.0};
  CHECK(fitted_constant(v, b) == 1.5);
  CHECK_THROWS_AS(fitted_constant(v, std::vector<double>{1.0}), ArgumentError);
}
