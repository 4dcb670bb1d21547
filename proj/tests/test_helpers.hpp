#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "schro/core.hpp"

namespace testing {

using schro::cd;
using schro::CMat;
using schro::CVec;
using schro::RMat;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  cd complex() { return {normal(), normal()}; }

  /// Even count in [2, 2*max_half].
  std::size_t even(int max_half) { return static_cast<std::size_t>(2 * integer(1, max_half)); }

  CVec vector(Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = complex();
    return v;
  }
  CVec real_vector(Eigen::Index n) {
    CVec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }
  CMat matrix(Eigen::Index n) {
    CMat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = complex();
    return m;
  }
  CMat hermitian(Eigen::Index n) {
    const CMat m = matrix(n);
    return 0.5 * (m + m.adjoint());
  }
  CMat psd(Eigen::Index n) {
    const CMat b = matrix(n);
    return b * b.adjoint() / static_cast<double>(n);
  }
  RMat real_symmetric(Eigen::Index n) {
    RMat m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = normal();
    return 0.5 * (m + m.transpose());
  }
  /// A with PSD Hermitian part.
  CMat dissipative(Eigen::Index n) { return psd(n) + cd{0.0, 1.0} * hermitian(n); }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

inline double rel_error(const CVec& got, const CVec& want) {
  const double n = want.norm();
  return n > 0.0 ? (got - want).norm() / n : (got - want).norm();
}

/// Sorted modes j = -n/2 .. n/2-1 with the 1/L scaling, written out directly.
inline std::vector<double> modes_by_formula(double half_width, std::size_t n) {
  std::vector<double> out;
  for (long j = -static_cast<long>(n) / 2; j < static_cast<long>(n) / 2; ++j) {
    out.push_back(std::numbers::pi * static_cast<double>(j) / half_width);
  }
  return out;
}

/// Dense unitary DFT matrix F[j][k] = n^{-1/2} exp(sign i mu_j x_k) with
/// x_k = -L + k dx and sorted mu_j.
inline CMat dense_dft(double half_width, std::size_t n, int sign) {
  const auto mu = modes_by_formula(half_width, n);
  const double dx = 2.0 * half_width / static_cast<double>(n);
  CMat f(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      const double x = -half_width + static_cast<double>(k) * dx;
      f(j, k) = std::exp(cd{0.0, sign * mu[j] * x}) / std::sqrt(static_cast<double>(n));
    }
  }
  return f;
}

/// Adaptive Dormand-Prince 5(4) for y' = f(y).
inline CVec dopri45(const std::function<CVec(const CVec&)>& f, CVec y, double t_end, double tol = 1e-12) {
  static const double a[7][6] = {{},
                                 {1.0 / 5},
                                 {3.0 / 40, 9.0 / 40},
                                 {44.0 / 45, -56.0 / 15, 32.0 / 9},
                                 {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
                                 {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
                                 {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
  static const double b5[7] = {35.0 / 384, 0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84, 0};
  static const double b4[7] = {5179.0 / 57600, 0, 7571.0 / 16695, 393.0 / 640, -92097.0 / 339200, 187.0 / 2100,
                               1.0 / 40};
  double t = 0.0, h = std::min(0.01, t_end);
  std::vector<CVec> k(7);
  while (t < t_end) {
    h = std::min(h, t_end - t);
    for (int s = 0; s < 7; ++s) {
      CVec ys = y;
      for (int r = 0; r < s; ++r) ys += h * a[s][r] * k[r];
      k[s] = f(ys);
    }
    CVec y5 = y, y4 = y;
    for (int s = 0; s < 7; ++s) {
      y5 += h * b5[s] * k[s];
      y4 += h * b4[s] * k[s];
    }
    const double err = (y5 - y4).norm() / std::max(1.0, y5.norm());
    if (err <= tol) {
      t += h;
      y = y5;
    }
    h *= std::clamp(0.9 * std::pow(tol / std::max(err, 1e-300), 0.2), 0.2, 5.0);
  }
  return y;
}

/// Dense exponential through the Hermitian eigendecomposition: exp(-i t h).
inline CMat unitary_of(const CMat& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(h);
  CVec ph(h.rows());
  for (Eigen::Index i = 0; i < ph.size(); ++i) ph[i] = std::exp(cd{0.0, -t * eig.eigenvalues()[i]});
  return eig.eigenvectors() * ph.asDiagonal() * eig.eigenvectors().adjoint();
}

/// Sorted real eigenvalues of a Hermitian matrix.
inline std::vector<double> eigenvalues(const CMat& h) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(h, Eigen::EigenvaluesOnly);
  std::vector<double> v(eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace testing
