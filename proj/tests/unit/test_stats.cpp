#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "circneedlet/rng.hpp"
#include "circneedlet/stats.hpp"
#include "reference_tables.hpp"

using namespace circneedlet;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Shapiro-Wilk reference table", "[stats]") {
  for (const auto& c : reference::shapiro_wilk_cases()) {
    INFO(c.name);
    const auto r = shapiro_wilk(c.data);
    CHECK_THAT(r.W, WithinAbs(c.W, 5e-4));
    CHECK(std::fabs(std::log10(r.p_value) - std::log10(c.p)) < 1.0);
  }
}

TEST_CASE("Shapiro-Wilk on the published 25-point example", "[stats]") {
  const auto cases = reference::shapiro_wilk_cases();
  const auto r = shapiro_wilk(cases.front().data);
  // Royston (1995), Applied Statistics 44, AS R94 test data
  CHECK_THAT(r.W, WithinAbs(0.83467, 5e-5));
  CHECK_THAT(r.p_value, WithinRel(0.000914, 0.01));
}

TEST_CASE("Shapiro-Wilk detects exponential data", "[stats]") {
  Stream rng(99);
  std::vector<double> x(500);
  for (auto& v : x) v = rng.exponential();
  CHECK(shapiro_wilk(x).p_value < 1e-3);
  std::vector<double> z(500);
  for (auto& v : z) v = rng.standard_normal();
  CHECK(shapiro_wilk(z).p_value > 1e-3);
}

TEST_CASE("Shapiro-Wilk errors", "[stats]") {
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>{1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(5001, 0.5)), ArgumentError);
  CHECK_THROWS_AS(shapiro_wilk(std::vector<double>(20, 3.0)), DegenerateSampleError);
  const auto r3 = shapiro_wilk(std::vector<double>{1.0, 2.0, 4.0});
  CHECK(r3.W > 0.75);
  CHECK(r3.W <= 1.0);
}

TEST_CASE("Shapiro-Wilk p-value is monotone in W at fixed n", "[stats]") {
  Stream rng(5);
  std::vector<std::pair<double, double>> wp;
  for (int rep = 0; rep < 40; ++rep) {
    std::vector<double> x(60);
    for (auto& v : x) v = rep % 2 ? rng.standard_normal() : rng.exponential();
    const auto r = shapiro_wilk(x);
    wp.emplace_back(r.W, r.p_value);
  }
  std::sort(wp.begin(), wp.end());
  for (std::size_t i = 1; i < wp.size(); ++i) CHECK(wp[i].second >= wp[i - 1].second);
}

TEST_CASE("empirical Wasserstein distance to the normal", "[stats]") {
  const std::size_t n = 400;
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) q[i] = detail::normal_quantile((static_cast<double>(i) + 0.5) / n);
  CHECK_THAT(empirical_wasserstein_normal(q), WithinAbs(0.0, 1e-15));
  std::vector<double> shifted = q;
  for (auto& v : shifted) v += 0.3;
  CHECK_THAT(empirical_wasserstein_normal(shifted), WithinAbs(0.3, 1e-12));
  CHECK_THROWS_AS(empirical_wasserstein_normal(std::vector<double>(9, 0.0)), ArgumentError);

  // consistency: W₁ of i.i.d. normals decays like n^{-1/2}
  Stream rng(11);
  std::vector<double> xs, ys;
  for (std::size_t m : {100u, 1000u, 10000u}) {
    double acc = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
      std::vector<double> z(m);
      for (auto& v : z) v = rng.standard_normal();
      acc += empirical_wasserstein_normal(z);
    }
    xs.push_back(std::log(static_cast<double>(m)));
    ys.push_back(std::log(acc / 30.0));
  }
  const auto fit = linear_fit(xs, ys);
  CHECK(fit.slope > -0.7);
  CHECK(fit.slope < -0.3);
}

TEST_CASE("rate regression", "[stats]") {
  const double B = 1.3;
  std::vector<RateCell> exact, noisy;
  Stream rng(3);
  for (int j : {6, 10, 14}) {
    for (double R : {1e2, 1e3, 1e4}) {
      const double x = std::pow(B, -j) * R;
      exact.push_back({j, R, 1.0 / std::sqrt(x)});
      noisy.push_back({j, R, 0.7 / std::sqrt(x) * (1.0 + 0.05 * rng.standard_normal())});
    }
  }
  const auto f = rate_regression(exact, B);
  CHECK_THAT(f.slope, WithinAbs(-0.5, 1e-12));
  CHECK_THAT(f.r2, WithinAbs(1.0, 1e-12));
  const auto g = rate_regression(noisy, B);
  CHECK(g.slope > -0.55);
  CHECK(g.slope < -0.45);
  std::vector<RateCell> few(exact.begin(), exact.begin() + 4);
  CHECK_THROWS_AS(rate_regression(few, B), ConditioningError);
  std::vector<RateCell> narrow;
  for (int i = 0; i < 6; ++i) narrow.push_back({10, 100.0 + 10.0 * i, 0.1});
  CHECK_THROWS_AS(rate_regression(narrow, B), ConditioningError);
}

TEST_CASE("histogram", "[stats]") {
  Stream rng(8);
  std::vector<double> x(500);
  for (auto& v : x) v = rng.standard_normal();
  const auto h = histogram(x, 20);
  std::size_t total = 0;
  for (const auto& b : h) total += b.count;
  CHECK(total == 500);
  CHECK(h.size() == 20);

  std::vector<double> scores(1000);
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = detail::normal_quantile((i + 0.5) / 1000.0);
  const auto hs = histogram(scores, 21);
  double skew = 0.0, tot = 0.0;
  for (const auto& b : hs) {
    skew += b.center * b.center * b.center * static_cast<double>(b.count);
    tot += static_cast<double>(b.count);
  }
  CHECK(std::fabs(skew / tot) < 0.2);
  for (std::size_t b = 0; b < hs.size(); ++b) CHECK(hs[b].count == hs[hs.size() - 1 - b].count);

  const auto hc = histogram(std::vector<double>(50, 2.0), 5);
  std::size_t occupied = 0;
  for (const auto& b : hc) occupied += b.count > 0;
  CHECK(occupied == 1);
  CHECK_THROWS_AS(histogram(x, 4), ArgumentError);
}
