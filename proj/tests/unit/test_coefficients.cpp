#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "circneedlet/coefficients.hpp"
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

// A copy of the density with the Fourier series dropped, forcing quadrature.
CircleDensity without_fourier(CircleDensity d) {
  d.fourier.reset();
  return d;
}

}  // namespace

TEST_CASE("moments against mpmath quadrature", "[coefficients]") {
  const auto p = default_params();
  const auto vm = von_mises_density(2.0);
  const auto part = make_partition(p, 6);
  REQUIRE(part.Q == 5);
  const auto s0 = make_spec(p, 6, 0.0, 0.2);
  const auto s1 = make_spec(p, 6, 2.0 * std::numbers::pi / 5.0, 0.2);
  const auto m0 = population_moments(s0, vm);
  const auto m1 = population_moments(s1, vm);
  CHECK_THAT(m0.b, WithinRel(0.0099525984742156118, 1e-10));
  CHECK_THAT(m0.sigma2, WithinRel(9.1779346941692738, 1e-12));
  CHECK_THAT(m1.sigma2, WithinRel(2.801439283823751, 1e-12));
  const std::vector<CoefficientMoments> ms{m0, m1};
  const auto C = exact_covariance(ms, vm);
  CHECK_THAT(C(0, 1), WithinRel(-0.39877439031205839 / std::sqrt(9.1779346941692738 * 2.801439283823751), 1e-10));

  // quadrature path agrees with the spectral path
  const auto vq = without_fourier(vm);
  const auto q0 = population_moments(s0, vq);
  CHECK_THAT(q0.b, WithinAbs(m0.b, 1e-12));
  CHECK_THAT(q0.sigma2, WithinRel(m0.sigma2, 1e-12));
  const std::vector<CoefficientMoments> mq{q0, population_moments(s1, vq)};
  const auto Cq = exact_covariance(mq, vq);
  CHECK_THAT(Cq(0, 1), WithinAbs(C(0, 1), 1e-11));
  CHECK(Cq.source == CovarianceSource::exact_quadrature);
}

TEST_CASE("uniform moments", "[coefficients]") {
  const auto p = default_params();
  const auto u = uniform_density();
  const auto m = population_moments(make_spec(p, 10, std::numbers::pi, 1.0 / 14.0), u);
  CHECK(m.b == 0.0);
  CHECK_THAT(m.sigma2, WithinRel(3.1320592678621565, 1e-13));
  // the continuum limit Γ(2s+½)/2^{2s+½} after undoing the ceiling in λ = 1/Q_j
  const double limit = std::tgamma(6.5) / std::pow(2.0, 6.5);
  for (int j : {8, 12, 16, 20}) {
    const double Q = static_cast<double>(arc_count(p, j));
    const auto mj = population_moments(make_spec(p, j, 1.0, 1.0 / Q), u);
    CHECK_THAT(mj.sigma2 * Q / std::pow(p.B, j), WithinRel(limit, 0.01));
  }
}

TEST_CASE("sigma2 sandwich", "[coefficients]") {
  const auto p = default_params();
  for (const auto& d : {von_mises_density(1.0), von_mises_density(4.0), floor_mixture_density(0.4, 6.0)}) {
    for (int j : {3, 8, 12}) {
      for (double x : {0.0, 1.0, 3.0}) {
        const auto m = population_moments(make_spec(p, j, x, 1.0 / static_cast<double>(arc_count(p, j))), d);
        CHECK(m.sigma2 >= d.M0 * m.norm2);
        CHECK(m.sigma2 <= d.Minf * m.norm2);
      }
    }
  }
}

TEST_CASE("beta tilde", "[coefficients]") {
  const auto p = default_params();
  const auto u = uniform_density();
  const auto spec = make_spec(p, 10, std::numbers::pi, 1.0 / 14.0);
  const auto m = population_moments(spec, u);

  PointSample empty;
  empty.intensity = 100.0;
  CHECK(beta_tilde(empty, m, 100.0) == 0.0);

  PointSample one;
  one.points = {std::numbers::pi};
  one.n = 1;
  one.intensity = 100.0;
  CHECK_THAT(beta_tilde(one, m, 100.0), WithinRel(12.244631330765516 / (10.0 * m.sigma()), 1e-13));
  CHECK_THROWS_AS(beta_tilde(one, m, 50.0), ArgumentError);
  PointSample fixed = one;
  fixed.kind = SampleKind::iid_fixed_n;
  CHECK_THROWS_AS(beta_tilde(fixed, m, 100.0), ArgumentError);

  const std::size_t N = 500;
  std::vector<double> v(N);
  for (std::size_t r = 0; r < N; ++r) {
    v[r] = beta_tilde(sample_poisson(PoissonFieldConfig{500.0, u, derive_seed(21, {r})}), m, 500.0);
  }
  CHECK(std::fabs(mean(v)) < 3.0 / std::sqrt(500.0));
  CHECK(variance(v) > 0.8);
  CHECK(variance(v) < 1.2);
}

TEST_CASE("beta tilde moment contract for several configurations", "[coefficients]") {
  const auto p = default_params();
  const std::size_t N = 600;
  struct Cfg {
    CircleDensity d;
    int j;
    double x;
    double R;
  };
  const std::vector<Cfg> cfgs{{uniform_density(), 6, 1.0, 200.0},
                              {von_mises_density(2.0), 8, 0.3, 1000.0},
                              {floor_mixture_density(0.5, 3.0), 5, 2.0, 300.0}};
  std::uint64_t tag = 0;
  for (const auto& c : cfgs) {
    const auto m = population_moments(make_spec(p, c.j, c.x, 1.0 / static_cast<double>(arc_count(p, c.j))), c.d);
    std::vector<double> v(N);
    for (std::size_t r = 0; r < N; ++r) {
      v[r] = beta_tilde(sample_poisson(PoissonFieldConfig{c.R, c.d, derive_seed(31, {tag, r})}), m, c.R);
    }
    ++tag;
    CHECK(std::fabs(mean(v)) < 3.0 / std::sqrt(static_cast<double>(N)));
    CHECK(std::fabs(variance(v) - 1.0) < 6.0 / std::sqrt(static_cast<double>(N)));
  }
}

TEST_CASE("coefficient vectors", "[coefficients]") {
  const auto p = default_params();
  const auto u = uniform_density();
  const auto part = make_partition(p, 10);
  const std::vector<std::size_t> qs{0, 7};  // antipodal arcs
  const auto ms = level_moments(p, part, qs, u);
  const auto C = exact_covariance(ms, u);
  CHECK_THAT(C(0, 0), WithinAbs(1.0, 1e-12));
  CHECK_THAT(C(1, 1), WithinAbs(1.0, 1e-12));
  CHECK(std::fabs(C(0, 1)) < 1e-6);
  CHECK(C.min_eigenvalue() >= -1e-10);

  CoefficientSample cs;
  cs.j = 10;
  cs.qs = qs;
  cs.R_t = 500.0;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    const auto s = sample_poisson(PoissonFieldConfig{500.0, u, derive_seed(41, {r})});
    const auto row = build_vector(qs, s, ms, 500.0);
    CHECK(row[0] == beta_tilde(s, ms[0], 500.0));
    const std::vector<std::size_t> rq{7, 0};
    const std::vector<CoefficientMoments> rm{ms[1], ms[0]};
    const auto rev = build_vector(rq, s, rm, 500.0);
    REQUIRE(rev[0] == row[1]);
    REQUIRE(rev[1] == row[0]);
    cs.append(row);
  }
  const auto mc = monte_carlo_covariance(cs);
  CHECK(mc.source == CovarianceSource::monte_carlo);
  // correlation standard error ≈ (1 − ρ²)/√N
  CHECK(std::fabs(mc(0, 1) / std::sqrt(mc(0, 0) * mc(1, 1)) - C(0, 1)) < 4.0 / std::sqrt(2000.0));

  const std::vector<std::size_t> dup{3, 3};
  const std::vector<CoefficientMoments> dm{ms[0], ms[0]};
  const auto s = sample_poisson(PoissonFieldConfig{500.0, u, 1});
  CHECK_THROWS_AS(build_vector(dup, s, dm, 500.0), ArgumentError);
}

TEST_CASE("Monte Carlo covariance converges to the exact matrix", "[coefficients]") {
  const auto p = default_params();
  const auto d = von_mises_density(1.0);
  const auto part = make_partition(p, 8);
  const std::vector<std::size_t> qs{0, 1, 2, 5};
  const auto ms = level_moments(p, part, qs, d);
  const auto C = exact_covariance(ms, d);
  CoefficientSample cs;
  const std::size_t N = 2000;
  for (std::uint64_t r = 0; r < N; ++r) {
    cs.append(build_vector(qs, sample_poisson(PoissonFieldConfig{400.0, d, derive_seed(51, {r})}), ms, 400.0));
  }
  const auto mc = monte_carlo_covariance(cs);
  double dev = 0.0;
  for (std::size_t i = 0; i < C.entries.size(); ++i) dev = std::max(dev, std::fabs(mc.entries[i] - C.entries[i]));
  CHECK(dev < 5.0 / std::sqrt(static_cast<double>(N)));
  for (std::size_t a = 0; a < C.d; ++a) {
    CHECK_THAT(C(a, a), WithinAbs(1.0, 1e-8));
    for (std::size_t b = 0; b < C.d; ++b) CHECK(C(a, b) == C(b, a));
  }
  CHECK(C.min_eigenvalue() >= -1e-10);
}

TEST_CASE("exact covariance does not depend on R_t", "[coefficients]") {
  const auto p = default_params();
  const auto d = von_mises_density(2.0);
  const auto part = make_partition(p, 9);
  const std::vector<std::size_t> qs{0, 1, 4};
  const auto ms = level_moments(p, part, qs, d);
  const auto A = exact_covariance(ms, d);
  const auto Bm = exact_covariance(ms, d);
  for (std::size_t i = 0; i < A.entries.size(); ++i) CHECK_THAT(A.entries[i], WithinAbs(Bm.entries[i], 1e-12));
  // β̃ is invariant to how R_t enters the sample; the covariance of the
  // normalized coefficient is the same at two intensities up to MC error
  for (double R : {200.0, 2000.0}) {
    CoefficientSample cs;
    for (std::uint64_t r = 0; r < 1500; ++r) {
      cs.append(build_vector(qs, sample_poisson(PoissonFieldConfig{R, d, derive_seed(61, {r})}), ms, R));
    }
    const auto mc = monte_carlo_covariance(cs);
    for (std::size_t i = 0; i < A.entries.size(); ++i) CHECK(std::fabs(mc.entries[i] - A.entries[i]) < 5.0 / std::sqrt(1500.0));
  }
}

TEST_CASE("empirical isometry for compensated integrals", "[coefficients]") {
  // Cov(Ñ(f), Ñ(g)) = ∫ f g dμ_t for needlets f, g on far arcs
  const auto p = default_params();
  const auto d = von_mises_density(1.0);
  const double R = 800.0;
  const auto f = make_spec(p, 5, 0.0, 0.25);
  const auto g = make_spec(p, 5, 0.9, 0.25);
  const auto mf = population_moments(f, d);
  const auto mg = population_moments(g, d);
  const std::vector<CoefficientMoments> ms{mf, mg};
  const double target = R * exact_covariance(ms, d)(0, 1) * mf.sigma() * mg.sigma();
  const std::size_t N = 2000;
  std::vector<double> x(N), y(N), xy(N);
  for (std::uint64_t r = 0; r < N; ++r) {
    const auto s = sample_poisson(PoissonFieldConfig{R, d, derive_seed(71, {r})});
    x[r] = needlet_sum(f, s.points) - R * mf.b;
    y[r] = needlet_sum(g, s.points) - R * mg.b;
    xy[r] = x[r] * y[r];
  }
  const double se = std::sqrt(variance(xy) / static_cast<double>(N));
  CHECK(std::fabs(mean(xy) - target) < 4.0 * se);
}

TEST_CASE("de-Poissonized coordinates", "[coefficients]") {
  const auto p = default_params();
  const auto u = uniform_density();
  const auto part = make_partition(p, 10);
  const std::vector<std::size_t> qs{3};
  const auto ms = level_moments(p, part, qs, u);
  PointSample one;
  one.kind = SampleKind::iid_fixed_n;
  one.n = 1;
  one.points = {part.centers[3]};
  CHECK_THAT(depoissonized_vector(one, qs, ms)[0], WithinRel(evaluate_needlet(ms[0].spec, part.centers[3]) / ms[0].sigma(), 1e-14));
  PointSample none;
  none.kind = SampleKind::iid_fixed_n;
  CHECK_THROWS_AS(depoissonized_vector(none, qs, ms), ArgumentError);

  std::vector<double> v(500);
  for (std::uint64_t r = 0; r < 500; ++r) v[r] = depoissonized_vector(sample_iid(u, 500, derive_seed(81, {r})), qs, ms)[0];
  CHECK(shapiro_wilk(v).p_value > 0.01);
}

TEST_CASE("largest coefficient sits at the mode", "[coefficients]") {
  const auto p = default_params();
  const auto d = von_mises_density(4.0);
  const auto part = make_partition(p, 12);
  std::vector<std::size_t> qs(part.Q);
  for (std::size_t q = 0; q < part.Q; ++q) qs[q] = q;
  const auto ms = level_moments(p, part, qs, d);
  const double R = 3000.0;
  std::vector<double> score(part.Q, 0.0);
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto s = sample_poisson(PoissonFieldConfig{R, d, derive_seed(91, {r})});
    for (std::size_t q = 0; q < part.Q; ++q) score[q] += std::fabs(needlet_sum(ms[q].spec, s.points) / std::sqrt(R));
  }
  const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
  double nearest = 10.0;
  std::size_t q_near = 0;
  for (std::size_t q = 0; q < part.Q; ++q) {
    if (circular_distance(part.centers[q], 0.0) < nearest) {
      nearest = circular_distance(part.centers[q], 0.0);
      q_near = q;
    }
  }
  CHECK(circular_distance(part.centers[best], part.centers[q_near]) < 1.01 * kTwoPi / static_cast<double>(part.Q));
}
