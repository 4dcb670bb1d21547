#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Sparse>

#include "schro/core.hpp"

namespace schro {

using SparseCMat = Eigen::SparseMatrix<cd, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<cd>;

/// Hermitian matrix with cached sparsity (max nonzeros per row) and
/// max-norm (largest entry magnitude). Stored dense up to kDenseLimit rows,
/// sparse above.
class HermitianMatrix {
 public:
  static constexpr std::size_t kDenseLimit = 1024;
  /// Entrywise |A - A^H| bound, scaled by max(1, max_norm).
  static constexpr double kTolerance = 1e-12;

  explicit HermitianMatrix(const CMat& dense);
  explicit HermitianMatrix(const SparseCMat& sparse);
  static HermitianMatrix from_triplets(std::size_t dimension, const std::vector<Triplet>& entries);
  static HermitianMatrix zero(std::size_t dimension);

  std::size_t dimension() const { return dimension_; }
  bool is_sparse() const { return std::holds_alternative<SparseCMat>(storage_); }
  std::size_t sparsity() const { return sparsity_; }
  double max_norm() const { return max_norm_; }
  bool is_zero() const { return max_norm_ == 0.0; }

  CMat to_dense() const;
  SparseCMat to_sparse() const;
  CVec apply(const CVec& v) const;
  /// Nonzero entries in row-major order.
  std::vector<Triplet> triplets() const;

 private:
  void finish();

  std::variant<CMat, SparseCMat> storage_;
  std::size_t dimension_ = 0;
  std::size_t sparsity_ = 0;
  double max_norm_ = 0.0;
};

/// Text dump: a header line "dimension <n> nonzeros <nnz>" followed by one
/// "row col re im" line per nonzero, 17 significant digits.
void write_triplets(std::ostream& out, const HermitianMatrix& m);
HermitianMatrix read_triplets(std::istream& in);

/// A = H + i*Hbar with H = (A + A^H)/2, Hbar = i(A^H - A)/2.
struct HermitianPair {
  HermitianMatrix h;
  HermitianMatrix h_bar;
  std::size_t source_dimension = 0;
  /// Smallest eigenvalue of h (NaN when the dense check was skipped).
  double h_min_eigenvalue = 0.0;
  double h_max_eigenvalue = 0.0;
  std::vector<std::string> warnings;

  bool h_is_psd() const;
  CMat reconstruct() const;
};

HermitianPair hermitian_decompose(const CMat& a);
/// Pair for an already Hermitian generator (heat form, Hbar = 0).
HermitianPair hermitian_pair_of(const HermitianMatrix& h);

/// D = diag(mu_j) for the eta axis, modes in ascending order.
struct EtaDiagonal {
  Grid1D grid;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double max_norm() const;
  HermitianMatrix matrix() const;
};

EtaDiagonal assemble_eta_diagonal(const Grid1D& eta_grid);

/// Spectral discretisation of -Laplacian on one periodic axis.
RMat spectral_laplacian(const Grid1D& grid);

/// sum_l P_l^2 + diag(V), row-major over the x grids. Potential samples are
/// complex so callers can hand over parsed data; any imaginary part is an
/// error.
HermitianMatrix assemble_schrodinger_hamiltonian(std::span<const cd> potential,
                                                 std::span<const Grid1D> grids, int d);

/// Samples a real potential on the tensor grid (row-major).
std::vector<cd> sample_potential(std::span<const Grid1D> grids,
                                 const std::function<double(std::span<const double>)>& v);

/// H (x) D + Hbar (x) 1, row-major with the eta index fastest.
HermitianMatrix assemble_total_hamiltonian(const HermitianPair& pair, const EtaDiagonal& d_matrix);

/// Discrete linear-transport model: x grids (their Fourier modes give xi),
/// k grids, and the quadrature-weighted differential cross-section sigma
/// (K^d x K^d). sigma_total holds the column sums of sigma.
class TransportModel {
 public:
  using Kernel = std::function<double(std::span<const double> k, std::span<const double> k_prime)>;

  static constexpr double kSymmetryTolerance = 1e-12;

  static TransportModel from_sigma(std::vector<Grid1D> x_grids, std::vector<Grid1D> k_grids,
                                   RMat sigma);
  /// sigma_{j,j'} = kernel(k_j, k_j') / K^d.
  static TransportModel from_kernel(std::vector<Grid1D> x_grids, std::vector<Grid1D> k_grids,
                                    const Kernel& kernel);
  static TransportModel constant_isotropic(std::vector<Grid1D> x_grids,
                                           std::vector<Grid1D> k_grids, double strength);

  int dimension() const { return static_cast<int>(x_grids_.size()); }
  const std::vector<Grid1D>& x_grids() const { return x_grids_; }
  const std::vector<Grid1D>& k_grids() const { return k_grids_; }
  const RMat& sigma() const { return sigma_; }
  const RVec& sigma_total() const { return sigma_total_; }

  std::size_t x_size() const;
  std::size_t k_size() const;
  /// k vector of flat k index j (row-major over the k grids).
  std::vector<double> k_point(std::size_t j) const;
  /// Sorted Fourier modes per x dimension.
  std::vector<std::vector<double>> xi_modes() const;
  /// Layout (x_1..x_d, k_1..k_d) of phase-space densities on this model.
  std::vector<Axis> phase_space_layout() const;

 private:
  TransportModel(std::vector<Grid1D> x_grids, std::vector<Grid1D> k_grids, RMat sigma);

  std::vector<Grid1D> x_grids_;
  std::vector<Grid1D> k_grids_;
  RMat sigma_;
  RVec sigma_total_;
};

/// L_[xi,k] (x) 1 - 1 (x) Sigma (x) D + 1 (x) sigma (x) D over (xi, k, eta),
/// where L multiplies component (i, j) by xi_i . k_j.
HermitianMatrix assemble_transport_hamiltonian(const TransportModel& model,
                                               const EtaDiagonal& d_matrix);

}  // namespace schro
