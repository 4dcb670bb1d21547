#include "schro/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "schro/error.hpp"

namespace schro {
namespace {

void require_trailing(const StateVector& s, AxisKind kind, const char* what) {
  if (s.layout().empty() || s.layout().back().kind != kind) {
    throw InvalidArgument(std::string(what) + ": trailing axis has the wrong kind");
  }
}

std::vector<Axis> without_last(const std::vector<Axis>& layout) {
  return {layout.begin(), layout.end() - 1};
}

// Columns are eta (or p) slices: element (a, j) is flat index a*n + j.
CMat as_blocks(const CVec& flat, std::size_t dim, std::size_t n) {
  return Eigen::Map<const Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      flat.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(n));
}

CVec from_blocks(const CMat& blocks) {
  Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = blocks;
  return Eigen::Map<const CVec>(rm.data(), rm.size());
}

std::size_t zero_index(const Grid1D& p) { return p.count() / 2; }

// |p_k| measured from the p = 0 index, so the extension is exactly even.
double profile_distance(const Grid1D& p, std::size_t k) {
  const auto z = static_cast<long>(zero_index(p));
  return static_cast<double>(std::labs(static_cast<long>(k) - z)) * p.spacing();
}

}  // namespace

std::string to_string(RecoveryMethod m) {
  switch (m) {
    case RecoveryMethod::projection: return "projection";
    case RecoveryMethod::integration: return "integration";
    case RecoveryMethod::point: return "point";
  }
  return "?";
}

RecoveryMethod parse_recovery_method(const std::string& name) {
  if (name == "projection") return RecoveryMethod::projection;
  if (name == "integration") return RecoveryMethod::integration;
  if (name == "point") return RecoveryMethod::point;
  throw InvalidArgument("unknown recovery method '" + name + "'");
}

WarpedState warp_extend(const StateVector& u0, const Grid1D& p_grid, double tolerance) {
  for (const auto& a : u0.layout()) {
    if (a.kind == AxisKind::p || a.kind == AxisKind::eta) {
      throw InvalidArgument("warp_extend: input already carries a p/eta axis");
    }
  }
  const std::size_t n = p_grid.count();
  const std::size_t dim = u0.size();
  CVec w(static_cast<Eigen::Index>(dim * n));
  std::vector<double> profile(n);
  for (std::size_t j = 0; j < n; ++j) profile[j] = std::exp(-profile_distance(p_grid, j));
  for (std::size_t i = 0; i < dim; ++i) {
    const cd v = u0.amplitudes()[static_cast<Eigen::Index>(i)];
    for (std::size_t j = 0; j < n; ++j) w[static_cast<Eigen::Index>(i * n + j)] = profile[j] * v;
  }
  auto layout = u0.layout();
  layout.push_back(p_axis(p_grid));
  WarpedState out{StateVector(std::move(layout), std::move(w)), p_grid, {}};
  if (std::exp(-p_grid.half_width()) > tolerance) {
    std::ostringstream msg;
    msg << "p half width " << p_grid.half_width() << " leaves exp(-L) = "
        << std::exp(-p_grid.half_width()) << " above tolerance " << tolerance;
    out.warnings.push_back(msg.str());
  }
  return out;
}

SpectralState dft_p(const WarpedState& w, PhaseSign sign) {
  require_trailing(w.state, AxisKind::p, "dft_p");
  return SpectralState{to_spectral(w.state, w.state.layout().size() - 1, sign), w.p_grid, sign};
}

WarpedState idft_p(const SpectralState& s) {
  require_trailing(s.state, AxisKind::eta, "idft_p");
  return WarpedState{to_grid(s.state, s.state.layout().size() - 1, s.sign), s.eta_grid, {}};
}

SpectralState evolve_blocks(const SpectralState& s0, const HermitianPair& pair,
                            const EtaDiagonal& d_matrix, double t, unsigned threads) {
  require_trailing(s0.state, AxisKind::eta, "evolve_blocks");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  const std::size_t n = d_matrix.size();
  const std::size_t dim = pair.h.dimension();
  if (s0.state.layout().back().grid.count() != n) {
    throw InvalidArgument("evolve_blocks: eta axis and D have different sizes");
  }
  if (s0.state.size() != dim * n || pair.h_bar.dimension() != dim) {
    throw InvalidArgument("evolve_blocks: state size does not match H (x) D");
  }
  if (t == 0.0) return s0;

  const CMat in = as_blocks(s0.state.amplitudes(), dim, n);
  CMat out(in.rows(), in.cols());
  const cd minus_i_t{0.0, -t};

  if (pair.h_bar.is_zero()) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(pair.h.to_dense());
    if (eig.info() != Eigen::Success) throw InternalError("eigendecomposition of H failed");
    const CMat& v = eig.eigenvectors();
    const RVec& lambda = eig.eigenvalues();
    const CMat coeffs = v.adjoint() * in;
    parallel_for(n, threads, [&](std::size_t j) {
      const double mu = d_matrix.values[j];
      CVec c = coeffs.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(minus_i_t * (mu * lambda[k]));
      out.col(static_cast<Eigen::Index>(j)) = v * c;
    });
  } else {
    const CMat h = pair.h.to_dense();
    const CMat h_bar = pair.h_bar.to_dense();
    parallel_for(n, threads, [&](std::size_t j) {
      const CMat block = d_matrix.values[j] * h + h_bar;
      Eigen::SelfAdjointEigenSolver<CMat> eig(block);
      if (eig.info() != Eigen::Success) throw InternalError("eigendecomposition of an eta block failed");
      const CMat& v = eig.eigenvectors();
      CVec c = v.adjoint() * in.col(static_cast<Eigen::Index>(j));
      for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(minus_i_t * eig.eigenvalues()[k]);
      out.col(static_cast<Eigen::Index>(j)) = v * c;
    });
  }
  return SpectralState{s0.state.with_amplitudes(from_blocks(out)), s0.eta_grid, s0.sign};
}

CVec evolve_hermitian(const CVec& v0, const HermitianMatrix& h, double t, unsigned threads) {
  const std::size_t dim = h.dimension();
  if (static_cast<std::size_t>(v0.size()) != dim) throw InvalidArgument("evolve_hermitian: size mismatch");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  if (t == 0.0) return v0;

  const auto entries = h.triplets();
  std::vector<std::size_t> parent(dim);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  };
  for (const auto& e : entries) {
    const auto a = find(static_cast<std::size_t>(e.row()));
    const auto b = find(static_cast<std::size_t>(e.col()));
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }

  // Components in order of their smallest member; members ascending.
  std::vector<std::size_t> comp_of(dim), local(dim);
  std::vector<std::vector<std::size_t>> members;
  std::vector<std::size_t> root_comp(dim, dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const auto r = find(i);
    if (root_comp[r] == dim) {
      root_comp[r] = members.size();
      members.emplace_back();
    }
    comp_of[i] = root_comp[r];
    local[i] = members[comp_of[i]].size();
    members[comp_of[i]].push_back(i);
  }
  std::vector<std::vector<Triplet>> blocks(members.size());
  for (const auto& e : entries) {
    const auto r = static_cast<std::size_t>(e.row());
    blocks[comp_of[r]].emplace_back(local[r], local[static_cast<std::size_t>(e.col())], e.value());
  }

  constexpr std::size_t kBlockCap = 4096;
  CVec out(v0.size());
  const cd minus_i_t{0.0, -t};
  parallel_for(members.size(), threads, [&](std::size_t c) {
    const auto& idx = members[c];
    const auto m = static_cast<Eigen::Index>(idx.size());
    if (idx.size() > kBlockCap) {
      throw ResourceLimit("coupled block of size " + std::to_string(idx.size()) + " exceeds " +
                          std::to_string(kBlockCap));
    }
    CMat block = CMat::Zero(m, m);
    for (const auto& e : blocks[c]) block(e.row(), e.col()) += e.value();
    CVec v(m);
    for (Eigen::Index k = 0; k < m; ++k) v[k] = v0[static_cast<Eigen::Index>(idx[k])];
    if (m == 1) {
      v[0] *= std::exp(minus_i_t * block(0, 0).real());
    } else {
      Eigen::SelfAdjointEigenSolver<CMat> eig(block);
      if (eig.info() != Eigen::Success) throw InternalError("eigendecomposition of a block failed");
      CVec coeff = eig.eigenvectors().adjoint() * v;
      for (Eigen::Index k = 0; k < m; ++k) coeff[k] *= std::exp(minus_i_t * eig.eigenvalues()[k]);
      v = eig.eigenvectors() * coeff;
    }
    for (Eigen::Index k = 0; k < m; ++k) out[static_cast<Eigen::Index>(idx[k])] = v[k];
  });
  return out;
}

SpectralState evolve_splitstep_heat(const SpectralState& s0, std::span<const cd> potential,
                                    std::span<const Grid1D> grids, double t, std::size_t steps,
                                    unsigned threads) {
  require_trailing(s0.state, AxisKind::eta, "evolve_splitstep_heat");
  if (steps == 0) throw InvalidArgument("split-step needs at least one step");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  const auto& layout = s0.state.layout();
  if (layout.size() != grids.size() + 1) throw InvalidArgument("split-step: one x axis per grid required");
  std::vector<std::size_t> shape;
  for (std::size_t a = 0; a < grids.size(); ++a) {
    if (layout[a].kind != AxisKind::x || !(layout[a].grid == grids[a])) {
      throw InvalidArgument("split-step: axis " + layout[a].name() + " does not match the x grid");
    }
    shape.push_back(grids[a].count());
  }
  const std::size_t dim = shape_product(shape);
  if (potential.size() != dim) throw InvalidArgument("split-step: potential size mismatch");
  for (const auto& v : potential) {
    if (v.imag() != 0.0) {
      throw InvalidArgument("split-step handles the heat form only (Hbar = 0); potential is complex");
    }
  }
  if (t == 0.0) return s0;

  // |xi|^2 per flat index in the sorted spectral ordering.
  std::vector<std::vector<double>> modes;
  for (const auto& g : grids) modes.push_back(fourier_modes(g).sorted());
  std::vector<double> xi2(dim, 0.0);
  {
    std::vector<std::size_t> idx(shape.size(), 0);
    for (std::size_t flat = 0; flat < dim; ++flat) {
      for (std::size_t a = 0; a < shape.size(); ++a) xi2[flat] += modes[a][idx[a]] * modes[a][idx[a]];
      for (std::size_t a = shape.size(); a-- > 0;) {
        if (++idx[a] < shape[a]) break;
        idx[a] = 0;
      }
    }
  }

  const std::size_t n = layout.back().grid.count();
  const auto eta = fourier_modes(s0.eta_grid).sorted();
  const double dt = t / static_cast<double>(steps);
  const CMat in = as_blocks(s0.state.amplitudes(), dim, n);
  CMat out(in.rows(), in.cols());
  parallel_for(n, threads, [&](std::size_t j) {
    const double mu = eta[j];
    CVec half_v(static_cast<Eigen::Index>(dim)), kinetic(static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < dim; ++i) {
      half_v[static_cast<Eigen::Index>(i)] = std::exp(cd{0.0, -0.5 * dt * mu * potential[i].real()});
      kinetic[static_cast<Eigen::Index>(i)] = std::exp(cd{0.0, -dt * mu * xi2[i]});
    }
    CVec v = in.col(static_cast<Eigen::Index>(j));
    for (std::size_t s = 0; s < steps; ++s) {
      v = v.cwiseProduct(half_v);
      for (std::size_t a = 0; a < shape.size(); ++a) spectral_forward_axis(v, shape, a, PhaseSign::negative);
      v = v.cwiseProduct(kinetic);
      for (std::size_t a = 0; a < shape.size(); ++a) spectral_inverse_axis(v, shape, a, PhaseSign::negative);
      v = v.cwiseProduct(half_v);
    }
    out.col(static_cast<Eigen::Index>(j)) = v;
  });
  return SpectralState{s0.state.with_amplitudes(from_blocks(out)), s0.eta_grid, s0.sign};
}

RecoveryResult recover_integrate(const WarpedState& w, bool calibrate) {
  require_trailing(w.state, AxisKind::p, "recover_integrate");
  const std::size_t n = w.p_grid.count();
  const std::size_t dim = w.state.size() / n;
  const double h = w.p_grid.spacing();
  std::vector<double> weight(n, 0.0);
  const std::size_t z = zero_index(w.p_grid);
  for (std::size_t k = z; k < n; ++k) weight[k] = h;
  weight[z] = 0.5 * h;
  weight[0] = 0.5 * h;
  if (calibrate) {
    double q = 0.0;
    for (std::size_t k = 0; k < n; ++k) q += weight[k] * std::exp(-profile_distance(w.p_grid, k));
    for (auto& x : weight) x /= q;
  }
  CVec u = CVec::Zero(static_cast<Eigen::Index>(dim));
  const auto& a = w.state.amplitudes();
  for (std::size_t i = 0; i < dim; ++i) {
    cd acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (weight[k] != 0.0) acc += weight[k] * a[static_cast<Eigen::Index>(i * n + k)];
    }
    u[static_cast<Eigen::Index>(i)] = acc;
  }
  return RecoveryResult{StateVector(without_last(w.state.layout()), std::move(u)),
                        RecoveryMethod::integration, std::nullopt, std::nullopt, std::nullopt, {}};
}

RecoveryResult recover_point(const WarpedState& w, double p_star, std::optional<double> travel) {
  require_trailing(w.state, AxisKind::p, "recover_point");
  if (!(p_star > 0.0)) throw InvalidArgument("p_star must be positive");
  const auto k = w.p_grid.find_point(p_star, 1e-9 * w.p_grid.spacing());
  if (!k) {
    std::ostringstream msg;
    msg << "p_star = " << p_star << " is not a point of the p grid (spacing " << w.p_grid.spacing() << ")";
    throw InvalidArgument(msg.str());
  }
  const std::size_t n = w.p_grid.count();
  const std::size_t dim = w.state.size() / n;
  const double p = w.p_grid.point(*k);
  const double scale = std::exp(p);
  CVec u(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    u[static_cast<Eigen::Index>(i)] = scale * w.state.amplitudes()[static_cast<Eigen::Index>(i * n + *k)];
  }
  RecoveryResult r{StateVector(without_last(w.state.layout()), std::move(u)), RecoveryMethod::point,
                   std::nullopt, p, std::nullopt, {}};
  if (travel && p + *travel >= w.p_grid.half_width()) {
    std::ostringstream msg;
    msg << "p_star + t*lambda_max = " << p + *travel << " reaches the p boundary "
        << w.p_grid.half_width() << "; wrap-around may contaminate the point value";
    r.warnings.push_back(msg.str());
  }
  return r;
}

RecoveryResult project_positive(const WarpedState& w) {
  require_trailing(w.state, AxisKind::p, "project_positive");
  const std::size_t n = w.p_grid.count();
  const std::size_t dim = w.state.size() / n;
  const std::size_t z = zero_index(w.p_grid);
  const auto& a = w.state.amplitudes();
  const double w_norm = a.norm();

  double profile_sq = 0.0, block_sq = 0.0;
  std::vector<double> profile(n, 0.0);
  for (std::size_t k = z; k < n; ++k) {
    profile[k] = std::exp(-profile_distance(w.p_grid, k));
    profile_sq += profile[k] * profile[k];
  }
  CVec u = CVec::Zero(static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    cd acc = 0.0;
    for (std::size_t k = z; k < n; ++k) {
      const cd v = a[static_cast<Eigen::Index>(i * n + k)];
      block_sq += std::norm(v);
      acc += profile[k] * v;
    }
    u[static_cast<Eigen::Index>(i)] = acc / profile_sq;
  }
  const double u_norm = u.norm();
  if (w_norm == 0.0 || block_sq <= 1e-28 * w_norm * w_norm || u_norm == 0.0) {
    throw DegenerateState("projection onto p >= 0 found no weight");
  }
  RecoveryResult r{StateVector(without_last(w.state.layout()), std::move(u)), RecoveryMethod::projection,
                   std::nullopt, std::nullopt, std::nullopt, {}};
  const double prob = std::pow(u_norm * std::sqrt(profile_sq) / w_norm, 2);
  r.success_probability = std::min(1.0, prob);
  r.cost_factor = std::sqrt(w.p_grid.spacing()) * w_norm / u_norm;
  return r;
}

PGridChoice default_p_grid(double epsilon, double t, double lambda_max, std::size_t max_count) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  const double travel = t * std::max(0.0, std::isfinite(lambda_max) ? lambda_max : 0.0);
  const double half_width = std::max(12.0, std::log(1.0 / epsilon) + travel + 2.0);
  const double target = std::min(0.05, std::sqrt(epsilon));
  std::size_t n = 2;
  while (2.0 * half_width / static_cast<double>(n) > target) {
    n *= 2;
    if (n > max_count) {
      throw ResourceLimit("default p grid needs more than " + std::to_string(max_count) + " points");
    }
  }
  return {Grid1D(half_width, n), epsilon, travel};
}

namespace {

double row_sum_bound(const HermitianMatrix& h) {
  std::vector<double> sums(h.dimension(), 0.0);
  for (const auto& e : h.triplets()) sums[static_cast<std::size_t>(e.row())] += std::abs(e.value());
  return sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
}

}  // namespace

EvolveResult schrodingerize_evolve(const StateVector& u0, const CMat& a, double t,
                                   const EvolveOptions& options) {
  if (a.rows() != a.cols()) throw InvalidArgument("A must be square");
  if (static_cast<std::size_t>(a.rows()) != u0.size()) {
    throw InvalidArgument("A is " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                          " but u0 has " + std::to_string(u0.size()) + " entries");
  }
  return schrodingerize_evolve(u0, hermitian_decompose(a), t, options);
}

EvolveResult schrodingerize_evolve(const StateVector& u0, const HermitianPair& pair, double t,
                                   const EvolveOptions& options) {
  if (pair.h.dimension() != u0.size()) throw InvalidArgument("generator and u0 dimensions differ");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  std::vector<std::string> warnings = pair.warnings;

  const double lambda_max =
      options.lambda_max ? *options.lambda_max
      : std::isnan(pair.h_max_eigenvalue) ? row_sum_bound(pair.h) : pair.h_max_eigenvalue;
  const double travel = t * std::max(0.0, lambda_max);
  const Grid1D p_grid =
      options.p_grid ? *options.p_grid : default_p_grid(options.epsilon, t, lambda_max).grid;

  WarpedState w0 = warp_extend(u0, p_grid, options.epsilon);
  warnings.insert(warnings.end(), w0.warnings.begin(), w0.warnings.end());
  if (travel >= p_grid.half_width()) {
    std::ostringstream msg;
    msg << "t*lambda_max = " << travel << " exceeds the p half width " << p_grid.half_width()
        << "; stiff components wrap around the periodic p domain";
    warnings.push_back(msg.str());
  }

  const SpectralState s0 = dft_p(w0);
  const EtaDiagonal d = assemble_eta_diagonal(p_grid);
  const SpectralState st = evolve_blocks(s0, pair, d, t, options.threads);
  WarpedState wt = idft_p(st);

  RecoveryResult rec = [&] {
    switch (options.recovery) {
      case RecoveryMethod::projection: return project_positive(wt);
      case RecoveryMethod::point: {
        if (!options.p_star) throw InvalidArgument("point recovery needs p_star");
        return recover_point(wt, *options.p_star, travel);
      }
      case RecoveryMethod::integration: break;
    }
    return recover_integrate(wt, true);
  }();
  warnings.insert(warnings.end(), rec.warnings.begin(), rec.warnings.end());

  std::optional<RecoveryResult> projection;
  if (options.recovery == RecoveryMethod::projection) {
    projection = rec;
  } else if (options.projection_diagnostics) {
    try {
      projection = project_positive(wt);
    } catch (const DegenerateState& e) {
      warnings.push_back(std::string("projection diagnostics skipped: ") + e.what());
    }
  }

  EvolveResult out{std::move(wt), std::move(rec), std::move(projection), p_grid,
                   s0.state.norm(), st.state.norm(), u0.norm(), std::nullopt, std::move(warnings)};

  const double u_norm = out.recovery.u.norm();
  const double s = options.sparsity > 0.0
                       ? options.sparsity
                       : static_cast<double>(std::max<std::size_t>(
                             {pair.h.sparsity(), pair.h_bar.sparsity(), std::size_t{1}}));
  const double m = options.qubits > 0.0
                       ? options.qubits
                       : std::max(1.0, std::ceil(std::log2(static_cast<double>(pair.h.dimension()))));
  const double eps = std::clamp(options.epsilon, 1e-300, 0.999999);
  if (t > 0.0 && u_norm > 0.0 && out.u0_norm > 0.0 && !(pair.h.is_zero() && pair.h_bar.is_zero())) {
    const double ratio = out.u0_norm / u_norm;
    if (pair.h_bar.is_zero()) {
      out.cost = schrodingerisation_cost(ratio, s, t, pair.h.max_norm(), eps, m);
    } else {
      out.cost = general_schrodingerisation_cost(ratio, s, t, pair.h.max_norm(), pair.h_bar.max_norm(),
                                                 eps, m, 1);
    }
  }
  return out;
}

}  // namespace schro
