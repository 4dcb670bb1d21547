#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace schro {

using cd = std::complex<double>;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

/// Uniform periodic grid on [-half_width, half_width). The right endpoint is
/// identified with the left one and is not stored.
class Grid1D {
 public:
  Grid1D(double half_width, std::size_t count);

  double half_width() const { return half_width_; }
  std::size_t count() const { return count_; }
  double spacing() const { return spacing_; }
  double point(std::size_t i) const { return -half_width_ + static_cast<double>(i) * spacing_; }
  std::vector<double> points() const;

  /// Index of the grid point within `tol` of `value`, if any.
  std::optional<std::size_t> find_point(double value, double tol) const;

  bool operator==(const Grid1D&) const = default;

 private:
  double half_width_;
  std::size_t count_;
  double spacing_;
};

/// Takes a signed count so that nonpositive requests are reported instead of
/// wrapping.
Grid1D make_grid(double half_width, long long count);

/// Fourier wavenumbers of a Grid1D, mu_j = pi*j/half_width for
/// j = -count/2 .. count/2-1.
///
/// `natural` holds them in FFT order (0, 1, .., count/2-1, -count/2, .., -1).
/// Sorted position s corresponds to natural position (s + count/2) % count.
struct ModeVector {
  std::vector<double> natural;

  std::size_t size() const { return natural.size(); }
  std::size_t natural_index(std::size_t sorted_index) const;
  std::size_t sorted_index(std::size_t natural_index) const;
  std::vector<double> sorted() const;
  /// natural_order()[s] = natural index of sorted position s.
  std::vector<std::size_t> natural_order() const;
};

ModeVector fourier_modes(const Grid1D& grid);

enum class AxisKind { x, k, xi, p, eta, index };

/// One tensor factor of a state. Spectral axes (xi, eta) keep the grid of
/// the position axis they were transformed from. An index axis is a bare
/// component index of a finite-dimensional ODE; its grid is a placeholder
/// and `extent` gives the length.
struct Axis {
  AxisKind kind;
  int dimension = 0;  // 1-based for x/k/xi, 0 for p/eta/index
  Grid1D grid;
  std::size_t extent = 0;

  std::size_t size() const { return kind == AxisKind::index ? extent : grid.count(); }
  std::string name() const;
  bool operator==(const Axis&) const = default;
};

Axis x_axis(int dimension, const Grid1D& grid);
Axis k_axis(int dimension, const Grid1D& grid);
Axis p_axis(const Grid1D& grid);
Axis index_axis(std::size_t extent);

/// Complex amplitudes over a tensor-product grid, flattened row-major in
/// layout order (last axis fastest).
class StateVector {
 public:
  StateVector(std::vector<Axis> layout, CVec amplitudes);

  static StateVector zeros(std::vector<Axis> layout);

  const std::vector<Axis>& layout() const { return layout_; }
  const CVec& amplitudes() const { return amplitudes_; }
  std::vector<std::size_t> shape() const;
  std::size_t size() const { return static_cast<std::size_t>(amplitudes_.size()); }
  double norm() const;

  /// Same layout, new amplitudes (sizes must agree).
  StateVector with_amplitudes(CVec amplitudes) const;

 private:
  std::vector<Axis> layout_;
  CVec amplitudes_;
};

double l2_norm(const StateVector& state);

std::size_t shape_product(std::span<const std::size_t> shape);

/// Reorders tensor axes; new axis a is old axis order[a].
StateVector permute_axes(const StateVector& state, std::span<const std::size_t> order);

}  // namespace schro
