#include "schro/operators.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "schro/error.hpp"
#include "schro/spectral.hpp"

namespace schro {
namespace {

double hermitian_defect(const CMat& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

double hermitian_defect(const SparseCMat& m) {
  const SparseCMat diff = m - SparseCMat(m.adjoint());
  double worst = 0.0;
  for (int r = 0; r < diff.outerSize(); ++r) {
    for (SparseCMat::InnerIterator it(diff, r); it; ++it) worst = std::max(worst, std::abs(it.value()));
  }
  return worst;
}

void require_hermitian(double defect, double scale, const char* what) {
  if (!(defect <= HermitianMatrix::kTolerance * std::max(1.0, scale))) {
    std::ostringstream msg;
    msg << what << " is not Hermitian (max |A - A^H| = " << defect << ")";
    throw InvalidArgument(msg.str());
  }
}

SparseCMat dense_to_sparse(const CMat& m) {
  std::vector<Triplet> entries;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (m(r, c) != cd{0.0, 0.0}) entries.emplace_back(r, c, m(r, c));
    }
  }
  SparseCMat s(m.rows(), m.cols());
  s.setFromTriplets(entries.begin(), entries.end());
  return s;
}

}  // namespace

HermitianMatrix::HermitianMatrix(const CMat& dense) {
  if (dense.rows() != dense.cols()) throw InvalidArgument("Hermitian matrix must be square");
  const double scale = dense.size() == 0 ? 0.0 : dense.cwiseAbs().maxCoeff();
  require_hermitian(dense.size() == 0 ? 0.0 : hermitian_defect(dense), scale, "matrix");
  dimension_ = static_cast<std::size_t>(dense.rows());
  if (dimension_ > kDenseLimit) {
    storage_ = dense_to_sparse(dense);
  } else {
    storage_ = dense;
  }
  finish();
}

HermitianMatrix::HermitianMatrix(const SparseCMat& sparse) {
  if (sparse.rows() != sparse.cols()) throw InvalidArgument("Hermitian matrix must be square");
  SparseCMat s = sparse;
  s.prune(cd{0.0, 0.0});
  double scale = 0.0;
  for (int r = 0; r < s.outerSize(); ++r) {
    for (SparseCMat::InnerIterator it(s, r); it; ++it) scale = std::max(scale, std::abs(it.value()));
  }
  require_hermitian(hermitian_defect(s), scale, "sparse matrix");
  dimension_ = static_cast<std::size_t>(s.rows());
  if (dimension_ <= kDenseLimit) {
    storage_ = CMat(s);
  } else {
    s.makeCompressed();
    storage_ = std::move(s);
  }
  finish();
}

HermitianMatrix HermitianMatrix::from_triplets(std::size_t dimension,
                                               const std::vector<Triplet>& entries) {
  const auto n = static_cast<Eigen::Index>(dimension);
  SparseCMat s(n, n);
  s.setFromTriplets(entries.begin(), entries.end());
  return HermitianMatrix(s);
}

HermitianMatrix HermitianMatrix::zero(std::size_t dimension) {
  return from_triplets(dimension, {});
}

void HermitianMatrix::finish() {
  sparsity_ = 0;
  max_norm_ = 0.0;
  if (const auto* d = std::get_if<CMat>(&storage_)) {
    for (Eigen::Index r = 0; r < d->rows(); ++r) {
      std::size_t nnz = 0;
      for (Eigen::Index c = 0; c < d->cols(); ++c) {
        const double a = std::abs((*d)(r, c));
        if (a != 0.0) ++nnz;
        max_norm_ = std::max(max_norm_, a);
      }
      sparsity_ = std::max(sparsity_, nnz);
    }
  } else {
    const auto& s = std::get<SparseCMat>(storage_);
    for (int r = 0; r < s.outerSize(); ++r) {
      std::size_t nnz = 0;
      for (SparseCMat::InnerIterator it(s, r); it; ++it) {
        const double a = std::abs(it.value());
        if (a != 0.0) ++nnz;
        max_norm_ = std::max(max_norm_, a);
      }
      sparsity_ = std::max(sparsity_, nnz);
    }
  }
}

CMat HermitianMatrix::to_dense() const {
  if (const auto* d = std::get_if<CMat>(&storage_)) return *d;
  return CMat(std::get<SparseCMat>(storage_));
}

SparseCMat HermitianMatrix::to_sparse() const {
  if (const auto* s = std::get_if<SparseCMat>(&storage_)) return *s;
  return dense_to_sparse(std::get<CMat>(storage_));
}

CVec HermitianMatrix::apply(const CVec& v) const {
  if (static_cast<std::size_t>(v.size()) != dimension_) throw InvalidArgument("apply: size mismatch");
  if (const auto* d = std::get_if<CMat>(&storage_)) return (*d) * v;
  return std::get<SparseCMat>(storage_) * v;
}

std::vector<Triplet> HermitianMatrix::triplets() const {
  std::vector<Triplet> out;
  if (const auto* d = std::get_if<CMat>(&storage_)) {
    for (Eigen::Index r = 0; r < d->rows(); ++r) {
      for (Eigen::Index c = 0; c < d->cols(); ++c) {
        if ((*d)(r, c) != cd{0.0, 0.0}) out.emplace_back(r, c, (*d)(r, c));
      }
    }
  } else {
    const auto& s = std::get<SparseCMat>(storage_);
    for (int r = 0; r < s.outerSize(); ++r) {
      for (SparseCMat::InnerIterator it(s, r); it; ++it) {
        if (it.value() != cd{0.0, 0.0}) out.emplace_back(it.row(), it.col(), it.value());
      }
    }
  }
  return out;
}

void write_triplets(std::ostream& out, const HermitianMatrix& m) {
  const auto entries = m.triplets();
  out << "dimension " << m.dimension() << " nonzeros " << entries.size() << '\n';
  out << std::setprecision(17);
  for (const auto& t : entries) {
    out << t.row() << ' ' << t.col() << ' ' << t.value().real() << ' ' << t.value().imag() << '\n';
  }
}

HermitianMatrix read_triplets(std::istream& in) {
  std::string word;
  std::size_t dimension = 0, count = 0;
  if (!(in >> word) || word != "dimension" || !(in >> dimension) || !(in >> word) ||
      word != "nonzeros" || !(in >> count)) {
    throw InvalidArgument("triplet header must read 'dimension <n> nonzeros <nnz>'");
  }
  std::vector<Triplet> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    long long r = 0, c = 0;
    double re = 0.0, im = 0.0;
    if (!(in >> r >> c >> re >> im)) {
      throw InvalidArgument("triplet line " + std::to_string(i + 2) + " is malformed");
    }
    if (r < 0 || c < 0 || static_cast<std::size_t>(r) >= dimension ||
        static_cast<std::size_t>(c) >= dimension) {
      throw InvalidArgument("triplet line " + std::to_string(i + 2) + " is out of range");
    }
    entries.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), cd{re, im});
  }
  return HermitianMatrix::from_triplets(dimension, entries);
}

bool HermitianPair::h_is_psd() const {
  if (std::isnan(h_min_eigenvalue)) return true;
  return h_min_eigenvalue >= -1e-10 * h.max_norm();
}

CMat HermitianPair::reconstruct() const {
  return h.to_dense() + cd{0.0, 1.0} * h_bar.to_dense();
}

namespace {

constexpr std::size_t kEigenCheckLimit = 4096;

void fill_spectrum_bounds(HermitianPair& pair) {
  if (pair.h.dimension() == 0) return;
  if (pair.h.dimension() > kEigenCheckLimit) {
    pair.h_min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    pair.h_max_eigenvalue = std::numeric_limits<double>::quiet_NaN();
    pair.warnings.push_back("dimension above dense eigensolve cap; PSD check skipped");
    return;
  }
  Eigen::SelfAdjointEigenSolver<CMat> eig(pair.h.to_dense(), Eigen::EigenvaluesOnly);
  pair.h_min_eigenvalue = eig.eigenvalues().minCoeff();
  pair.h_max_eigenvalue = eig.eigenvalues().maxCoeff();
  if (!pair.h_is_psd()) {
    std::ostringstream msg;
    msg << "Hermitian part is not positive semi-definite (min eigenvalue " << pair.h_min_eigenvalue
        << "); the p > 0 region is no longer decoupled from p < 0";
    pair.warnings.push_back(msg.str());
  }
}

}  // namespace

HermitianPair hermitian_decompose(const CMat& a) {
  if (a.rows() != a.cols()) {
    throw InvalidArgument("hermitian_decompose needs a square matrix, got " +
                          std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  }
  const CMat adj = a.adjoint();
  const CMat h = 0.5 * (a + adj);
  const CMat h_bar = cd{0.0, 0.5} * (adj - a);
  HermitianPair pair{HermitianMatrix(h), HermitianMatrix(h_bar), static_cast<std::size_t>(a.rows()), 0.0, 0.0, {}};
  fill_spectrum_bounds(pair);
  return pair;
}

HermitianPair hermitian_pair_of(const HermitianMatrix& h) {
  HermitianPair pair{h, HermitianMatrix::zero(h.dimension()), h.dimension(), 0.0, 0.0, {}};
  fill_spectrum_bounds(pair);
  return pair;
}

double EtaDiagonal::max_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

HermitianMatrix EtaDiagonal::matrix() const {
  std::vector<Triplet> entries;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (values[j] != 0.0) entries.emplace_back(j, j, cd{values[j], 0.0});
  }
  return HermitianMatrix::from_triplets(values.size(), entries);
}

EtaDiagonal assemble_eta_diagonal(const Grid1D& eta_grid) {
  return EtaDiagonal{eta_grid, fourier_modes(eta_grid).sorted()};
}

RMat spectral_laplacian(const Grid1D& grid) {
  const std::size_t n = grid.count();
  const auto modes = fourier_modes(grid).sorted();
  RMat k(n, n);
  std::vector<cd> column(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(column.begin(), column.end(), cd{0.0, 0.0});
    column[c] = 1.0;
    spectral_forward(column, PhaseSign::negative);
    for (std::size_t j = 0; j < n; ++j) column[j] *= modes[j] * modes[j];
    spectral_inverse(column, PhaseSign::negative);
    for (std::size_t r = 0; r < n; ++r) k(r, c) = column[r].real();
  }
  return 0.5 * (k + k.transpose());
}

std::vector<cd> sample_potential(std::span<const Grid1D> grids,
                                 const std::function<double(std::span<const double>)>& v) {
  std::size_t total = 1;
  for (const auto& g : grids) total *= g.count();
  std::vector<cd> out(total);
  std::vector<std::size_t> idx(grids.size(), 0);
  std::vector<double> point(grids.size());
  for (std::size_t flat = 0; flat < total; ++flat) {
    for (std::size_t a = 0; a < grids.size(); ++a) point[a] = grids[a].point(idx[a]);
    out[flat] = v(point);
    for (std::size_t a = grids.size(); a-- > 0;) {
      if (++idx[a] < grids[a].count()) break;
      idx[a] = 0;
    }
  }
  return out;
}

HermitianMatrix assemble_schrodinger_hamiltonian(std::span<const cd> potential,
                                                 std::span<const Grid1D> grids, int d) {
  if (d < 1) throw InvalidArgument("spatial dimension must be >= 1");
  if (grids.size() != static_cast<std::size_t>(d)) {
    throw InvalidArgument("need one grid per spatial dimension");
  }
  std::vector<std::size_t> shape;
  for (const auto& g : grids) shape.push_back(g.count());
  const std::size_t total = shape_product(shape);
  if (potential.size() != total) {
    throw InvalidArgument("potential has " + std::to_string(potential.size()) +
                          " samples, grid has " + std::to_string(total));
  }
  for (const auto& v : potential) {
    if (v.imag() != 0.0 || !std::isfinite(v.real())) {
      throw InvalidArgument("potential must be real and finite");
    }
  }

  std::vector<RMat> laplacians;
  for (const auto& g : grids) laplacians.push_back(spectral_laplacian(g));

  std::vector<std::size_t> strides(shape.size(), 1);
  for (std::size_t a = shape.size(); a-- > 1;) strides[a - 1] = strides[a] * shape[a];

  std::vector<Triplet> entries;
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t row = 0; row < total; ++row) {
    for (std::size_t l = 0; l < shape.size(); ++l) {
      const std::size_t base = row - idx[l] * strides[l];
      for (std::size_t b = 0; b < shape[l]; ++b) {
        const double v = laplacians[l](static_cast<Eigen::Index>(idx[l]), static_cast<Eigen::Index>(b));
        if (v != 0.0) entries.emplace_back(row, base + b * strides[l], cd{v, 0.0});
      }
    }
    if (potential[row].real() != 0.0) entries.emplace_back(row, row, potential[row]);
    for (std::size_t a = shape.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return HermitianMatrix::from_triplets(total, entries);
}

HermitianMatrix assemble_total_hamiltonian(const HermitianPair& pair, const EtaDiagonal& d_matrix) {
  const std::size_t dim = pair.h.dimension();
  if (pair.h_bar.dimension() != dim) throw InvalidArgument("H and Hbar dimensions differ");
  const std::size_t n = d_matrix.size();
  if (n == 0) throw InvalidArgument("empty eta diagonal");
  std::vector<Triplet> entries;
  for (const auto& t : pair.h.triplets()) {
    for (std::size_t j = 0; j < n; ++j) {
      if (d_matrix.values[j] == 0.0) continue;
      entries.emplace_back(t.row() * n + j, t.col() * n + j, t.value() * d_matrix.values[j]);
    }
  }
  for (const auto& t : pair.h_bar.triplets()) {
    for (std::size_t j = 0; j < n; ++j) entries.emplace_back(t.row() * n + j, t.col() * n + j, t.value());
  }
  return HermitianMatrix::from_triplets(dim * n, entries);
}

TransportModel::TransportModel(std::vector<Grid1D> x_grids, std::vector<Grid1D> k_grids, RMat sigma)
    : x_grids_(std::move(x_grids)), k_grids_(std::move(k_grids)), sigma_(std::move(sigma)) {
  if (x_grids_.empty()) throw InvalidArgument("transport model needs d >= 1");
  if (x_grids_.size() != k_grids_.size()) {
    throw InvalidArgument("transport model needs as many k grids as x grids");
  }
  const auto kd = static_cast<Eigen::Index>(k_size());
  if (sigma_.rows() != kd || sigma_.cols() != kd) {
    throw InvalidArgument("sigma must be K^d x K^d = " + std::to_string(kd) + "x" + std::to_string(kd));
  }
  if (!sigma_.allFinite()) throw InvalidArgument("sigma has non-finite entries");
  const double scale = std::max(1.0, sigma_.cwiseAbs().maxCoeff());
  const double asym = (sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTolerance * scale) {
    std::ostringstream msg;
    msg << "sigma must be symmetric for isotropic scattering (max asymmetry " << asym << ")";
    throw InvalidArgument(msg.str());
  }
  sigma_total_ = sigma_.colwise().sum().transpose();
}

TransportModel TransportModel::from_sigma(std::vector<Grid1D> x_grids, std::vector<Grid1D> k_grids,
                                          RMat sigma) {
  return TransportModel(std::move(x_grids), std::move(k_grids), std::move(sigma));
}

TransportModel TransportModel::from_kernel(std::vector<Grid1D> x_grids, std::vector<Grid1D> k_grids,
                                           const Kernel& kernel) {
  std::size_t kd = 1;
  for (const auto& g : k_grids) kd *= g.count();
  // Build a throwaway model for k_point() bookkeeping.
  TransportModel shape_only(x_grids, k_grids, RMat::Zero(static_cast<Eigen::Index>(kd),
                                                         static_cast<Eigen::Index>(kd)));
  RMat sigma(kd, kd);
  for (std::size_t j = 0; j < kd; ++j) {
    const auto kj = shape_only.k_point(j);
    for (std::size_t jp = 0; jp < kd; ++jp) {
      const auto kjp = shape_only.k_point(jp);
      sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(jp)) =
          kernel(kj, kjp) / static_cast<double>(kd);
    }
  }
  return TransportModel(std::move(x_grids), std::move(k_grids), std::move(sigma));
}

TransportModel TransportModel::constant_isotropic(std::vector<Grid1D> x_grids,
                                                  std::vector<Grid1D> k_grids, double strength) {
  return from_kernel(std::move(x_grids), std::move(k_grids),
                     [strength](std::span<const double>, std::span<const double>) { return strength; });
}

std::size_t TransportModel::x_size() const {
  std::size_t n = 1;
  for (const auto& g : x_grids_) n *= g.count();
  return n;
}

std::size_t TransportModel::k_size() const {
  std::size_t n = 1;
  for (const auto& g : k_grids_) n *= g.count();
  return n;
}

std::vector<double> TransportModel::k_point(std::size_t j) const {
  std::vector<double> k(k_grids_.size());
  for (std::size_t a = k_grids_.size(); a-- > 0;) {
    const std::size_t n = k_grids_[a].count();
    k[a] = k_grids_[a].point(j % n);
    j /= n;
  }
  return k;
}

std::vector<std::vector<double>> TransportModel::xi_modes() const {
  std::vector<std::vector<double>> out;
  for (const auto& g : x_grids_) out.push_back(fourier_modes(g).sorted());
  return out;
}

std::vector<Axis> TransportModel::phase_space_layout() const {
  std::vector<Axis> layout;
  for (std::size_t a = 0; a < x_grids_.size(); ++a) layout.push_back(x_axis(static_cast<int>(a + 1), x_grids_[a]));
  for (std::size_t a = 0; a < k_grids_.size(); ++a) layout.push_back(k_axis(static_cast<int>(a + 1), k_grids_[a]));
  return layout;
}

HermitianMatrix assemble_transport_hamiltonian(const TransportModel& model,
                                               const EtaDiagonal& d_matrix) {
  const std::size_t jd = model.x_size();
  const std::size_t kd = model.k_size();
  const std::size_t n = d_matrix.size();
  if (n == 0) throw InvalidArgument("empty eta diagonal");
  const RMat& sigma = model.sigma();
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > TransportModel::kSymmetryTolerance * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw InvalidArgument("sigma is not symmetric; transport Hamiltonian would not be Hermitian");
  }

  const auto xi = model.xi_modes();
  std::vector<std::vector<double>> k_points(kd);
  for (std::size_t j = 0; j < kd; ++j) k_points[j] = model.k_point(j);

  std::vector<Triplet> entries;
  entries.reserve(jd * kd * n * (kd + 1));
  std::vector<std::size_t> xi_idx(xi.size(), 0);
  for (std::size_t i = 0; i < jd; ++i) {
    for (std::size_t j = 0; j < kd; ++j) {
      double streaming = 0.0;
      for (std::size_t a = 0; a < xi.size(); ++a) streaming += xi[a][xi_idx[a]] * k_points[j][a];
      for (std::size_t e = 0; e < n; ++e) {
        const double mu = d_matrix.values[e];
        const std::size_t row = (i * kd + j) * n + e;
        const double diag = streaming + mu * (sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) -
                                             model.sigma_total()[static_cast<Eigen::Index>(j)]);
        if (diag != 0.0) entries.emplace_back(row, row, cd{diag, 0.0});
        if (mu == 0.0) continue;
        for (std::size_t jp = 0; jp < kd; ++jp) {
          if (jp == j) continue;
          const double s = sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(jp));
          if (s != 0.0) entries.emplace_back(row, (i * kd + jp) * n + e, cd{mu * s, 0.0});
        }
      }
    }
    for (std::size_t a = xi.size(); a-- > 0;) {
      if (++xi_idx[a] < xi[a].size()) break;
      xi_idx[a] = 0;
    }
  }
  return HermitianMatrix::from_triplets(jd * kd * n, entries);
}

}  // namespace schro
