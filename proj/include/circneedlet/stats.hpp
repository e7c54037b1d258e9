#pragma once

// Normality testing and summary statistics for replication batches.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "circneedlet/error.hpp"

namespace circneedlet {

namespace detail {

inline double normal_quantile(double p) {
  static const boost::math::normal_distribution<double> z;
  return boost::math::quantile(z, p);
}

inline double normal_upper_tail(double x) {
  static const boost::math::normal_distribution<double> z;
  return boost::math::cdf(boost::math::complement(z, x));
}

inline double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) r = r * x + c[i];
  return r;
}

}  // namespace detail

inline double mean(std::span<const double> v) {
  if (v.empty()) throw ArgumentError("mean: empty input");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Unbiased sample variance.
inline double variance(std::span<const double> v) {
  if (v.size() < 2) throw ArgumentError("variance: need at least two values");
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

struct NormalityResult {
  double W = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
};

// Shapiro–Wilk W with Royston's (1995) coefficient and p-value
// approximations, algorithm AS R94, valid for 3 ≤ n ≤ 5000.
inline NormalityResult shapiro_wilk(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 3 || n > 5000) throw ArgumentError("shapiro_wilk: n must lie in [3, 5000], got " + std::to_string(n));
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::fabs(x.front())))) {
    throw DegenerateSampleError("shapiro_wilk: all values are equal");
  }

  const std::size_t n2 = n / 2;
  const double an = static_cast<double>(n);
  std::vector<double> a(n2);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
  } else {
    static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.07119, 4.434685, -2.706056};
    static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    std::vector<double> m(n2);
    double summ2 = 0.0;
    for (std::size_t i = 0; i < n2; ++i) {
      m[i] = detail::normal_quantile((static_cast<double>(i + 1) - 0.375) / (an + 0.25));
      summ2 += m[i] * m[i];
    }
    summ2 *= 2.0;
    const double ssumm2 = std::sqrt(summ2);
    const double rsn = 1.0 / std::sqrt(an);
    const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;
    std::size_t i1;
    double fac;
    if (n > 5) {
      i1 = 2;
      const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
      a[1] = a2;
    } else {
      i1 = 1;
      fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    }
    a[0] = a1;
    for (std::size_t i = i1; i < n2; ++i) a[i] = -m[i] / fac;
  }

  // Scale by the range before forming sums, as AS R94 does.
  double xm = 0.0;
  for (double& v : x) {
    v /= range;
    xm += v;
  }
  xm /= an;
  double ssq = 0.0;
  for (double v : x) ssq += (v - xm) * (v - xm);
  double num = 0.0;
  for (std::size_t i = 0; i < n2; ++i) num += a[i] * (x[n - 1 - i] - x[i]);
  double w = num * num / ssq;
  w = std::min(w, 1.0);

  NormalityResult r;
  r.n = n;
  r.W = w;
  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = std::numbers::pi / 3.0;
    r.p_value = std::max(0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
    return r;
  }
  double w1 = std::log(1.0 - w);
  const double xx = std::log(an);
  double mu, sd;
  if (n <= 11) {
    static constexpr double g[] = {-2.273, 0.459};
    static constexpr double c3[] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
    const double gamma = detail::poly(g, an);
    if (w1 >= gamma) {
      r.p_value = 1e-99;
      return r;
    }
    w1 = -std::log(gamma - w1);
    mu = detail::poly(c3, an);
    sd = std::exp(detail::poly(c4, an));
  } else {
    static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
    mu = detail::poly(c5, xx);
    sd = std::exp(detail::poly(c6, xx));
  }
  r.p_value = w >= 1.0 ? 1.0 : detail::normal_upper_tail((w1 - mu) / sd);
  return r;
}

// W₁ between the empirical law and N(0,1) by quantile coupling at (i−½)/n.
inline double empirical_wasserstein_normal(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 10) throw ArgumentError("empirical_wasserstein_normal: need n >= 10");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += std::fabs(x[i] - detail::normal_quantile((static_cast<double>(i) + 0.5) / static_cast<double>(n)));
  }
  return acc / static_cast<double>(n);
}

struct RateCell {
  int j = 0;
  double R_t = 0.0;
  double W1 = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of y on x.
inline RateFit linear_fit(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size() || n < 2) throw ArgumentError("linear_fit: need at least two paired values");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ConditioningError("linear_fit: predictor has no spread");
  RateFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return f;
}

// log W₁ against log(B^{-j}R_t); at least 5 cells over 2 decades.
inline RateFit rate_regression(std::span<const RateCell> cells, double B) {
  if (cells.size() < 5) throw ConditioningError("rate_regression: need at least 5 cells");
  std::vector<double> xs, ys;
  for (const auto& c : cells) {
    if (!(c.W1 > 0.0) || !(c.R_t > 0.0)) throw DomainError("rate_regression: W1 and R_t must be positive");
    xs.push_back(std::log(c.R_t) - static_cast<double>(c.j) * std::log(B));
    ys.push_back(std::log(c.W1));
  }
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  if (*hi - *lo < 2.0 * std::numbers::ln10) {
    throw ConditioningError("rate_regression: B^{-j} R_t spans fewer than 2 decades");
  }
  return linear_fit(xs, ys);
}

struct HistogramBin {
  double center = 0.0;
  std::size_t count = 0;
};

// Equal-width bins over [min, max]; the maximum lands in the last bin.
inline std::vector<HistogramBin> histogram(std::span<const double> values, std::size_t bins) {
  if (bins < 5) throw ArgumentError("histogram: need at least 5 bins");
  if (values.empty()) throw ArgumentError("histogram: empty input");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<HistogramBin> out(bins);
  const double width = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b].center = lo + (static_cast<double>(b) + 0.5) * width;
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
    out[std::min(b, bins - 1)].count++;
  }
  return out;
}

// Kolmogorov–Smirnov distance of θ values in [0, 2π) to the uniform law.
inline double ks_uniform_circle(std::span<const double> thetas) {
  if (thetas.empty()) throw ArgumentError("ks_uniform_circle: empty input");
  std::vector<double> u(thetas.begin(), thetas.end());
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double F = u[i] / (2.0 * std::numbers::pi);
    d = std::max({d, static_cast<double>(i + 1) / n - F, F - static_cast<double>(i) / n});
  }
  return d;
}

}  // namespace circneedlet
