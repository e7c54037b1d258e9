#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "circneedlet/error.hpp"

namespace circneedlet {

// Finite Fourier series f(θ) = Σ_{|k|≤D} a_k e^{ikθ}, coefficients taken with
// respect to the normalized measure ρ(dθ) = dθ/2π.
class TrigPolynomial {
 public:
  TrigPolynomial() : coeffs_(1, 0.0) {}

  // coeffs[i] holds a_{i-D}; the size must be odd.
  explicit TrigPolynomial(std::vector<std::complex<double>> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty() || coeffs_.size() % 2 == 0) {
      throw ArgumentError("TrigPolynomial: coefficient vector must have odd length 2D+1");
    }
  }

  static TrigPolynomial zero(int degree) {
    return TrigPolynomial(std::vector<std::complex<double>>(2 * static_cast<std::size_t>(degree) + 1));
  }

  // Real cosine series a_0 + Σ_{k≥1} 2 c_k cos(kθ), i.e. a_{±k} = c_k.
  static TrigPolynomial even_real(double a0, const std::vector<double>& ck) {
    TrigPolynomial p = zero(static_cast<int>(ck.size()));
    p.set(0, a0);
    for (std::size_t k = 1; k <= ck.size(); ++k) {
      p.set(static_cast<int>(k), ck[k - 1]);
      p.set(-static_cast<int>(k), ck[k - 1]);
    }
    return p;
  }

  int degree() const noexcept { return static_cast<int>(coeffs_.size() / 2); }

  std::complex<double> coefficient(int k) const noexcept {
    const int d = degree();
    if (k < -d || k > d) return 0.0;
    return coeffs_[static_cast<std::size_t>(k + d)];
  }

  void set(int k, std::complex<double> v) {
    const int d = degree();
    if (k < -d || k > d) throw ArgumentError("TrigPolynomial::set: index out of range");
    coeffs_[static_cast<std::size_t>(k + d)] = v;
  }

  const std::vector<std::complex<double>>& coefficients() const noexcept { return coeffs_; }

  std::complex<double> evaluate_complex(double theta) const {
    std::complex<double> acc = 0.0;
    const int d = degree();
    for (int k = -d; k <= d; ++k) acc += coefficient(k) * std::polar(1.0, k * theta);
    return acc;
  }

  double operator()(double theta) const { return evaluate_complex(theta).real(); }

  // ‖f‖² under ρ by Parseval.
  double squared_norm() const noexcept {
    double s = 0.0;
    for (const auto& c : coeffs_) s += std::norm(c);
    return s;
  }

  bool is_real(double tol = 1e-14) const noexcept {
    const int d = degree();
    for (int k = 0; k <= d; ++k) {
      if (std::abs(coefficient(k) - std::conj(coefficient(-k))) > tol) return false;
    }
    return true;
  }

 private:
  std::vector<std::complex<double>> coeffs_;
};

}  // namespace circneedlet
