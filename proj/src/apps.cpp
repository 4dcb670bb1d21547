#include "schro/apps.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "schro/error.hpp"
#include "schro/oracle.hpp"

namespace schro {
namespace {

constexpr double kHeatEpsilon = 1e-3;
constexpr double kGibbsEpsilon = 1e-6;
constexpr double kTransportEpsilon = 1e-3;

EvolveOptions to_options(const PConfig& c, double default_eps, RecoveryMethod default_recovery) {
  EvolveOptions o;
  o.p_grid = c.p_grid;
  o.epsilon = c.epsilon.value_or(default_eps);
  o.recovery = c.recovery.value_or(default_recovery);
  o.p_star = c.p_star;
  o.threads = c.threads;
  return o;
}

CMat dense_checked(const HermitianMatrix& h, const char* what) {
  if (h.dimension() > kOracleDimensionCap) {
    throw ResourceLimit(std::string(what) + ": dimension " + std::to_string(h.dimension()) +
                        " exceeds the dense cap");
  }
  return h.to_dense();
}

double relative_error(const CVec& a, const CVec& ref) {
  const double n = ref.norm();
  return n > 0.0 ? (a - ref).norm() / n : (a - ref).norm();
}

std::vector<std::size_t> x_shape(std::span<const Grid1D> grids) {
  std::vector<std::size_t> s;
  for (const auto& g : grids) s.push_back(g.count());
  return s;
}

// Largest |xi|^2 among the modes of u0 carrying more than eps of its norm.
double resolved_laplacian_max(const StateVector& u0, std::span<const Grid1D> grids, double eps) {
  const auto shape = x_shape(grids);
  CVec hat = u0.amplitudes();
  for (std::size_t a = 0; a < shape.size(); ++a) spectral_forward_axis(hat, shape, a, PhaseSign::negative);
  const double cut = eps * hat.norm();
  std::vector<std::vector<double>> modes;
  for (const auto& g : grids) modes.push_back(fourier_modes(g).sorted());
  double best = 0.0;
  std::vector<std::size_t> idx(shape.size(), 0);
  for (Eigen::Index flat = 0; flat < hat.size(); ++flat) {
    if (std::abs(hat[flat]) > cut) {
      double xi2 = 0.0;
      for (std::size_t a = 0; a < shape.size(); ++a) xi2 += modes[a][idx[a]] * modes[a][idx[a]];
      best = std::max(best, xi2);
    }
    for (std::size_t a = shape.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return best;
}

}  // namespace

HeatResult run_heat(const StateVector& u0, std::span<const cd> potential,
                    std::span<const Grid1D> grids, const PConfig& p_config, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  const int d = static_cast<int>(grids.size());
  const HermitianMatrix h = assemble_schrodinger_hamiltonian(potential, grids, d);
  const HermitianPair pair = hermitian_pair_of(h);
  EvolveOptions opts = to_options(p_config, kHeatEpsilon, RecoveryMethod::integration);

  bool zero_potential = true;
  double v_max = 0.0;
  for (const auto& v : potential) {
    zero_potential = zero_potential && v.real() == 0.0;
    v_max = std::max(v_max, v.real());
  }
  // Stiff modes that u0 does not excite never reach the wrap-around region,
  // so the p domain only has to cover what is actually present.
  opts.lambda_max = resolved_laplacian_max(u0, grids, opts.epsilon) + v_max;

  EvolveResult ev = schrodingerize_evolve(u0, pair, t, opts);
  StateVector ref = zero_potential ? heat_analytic(u0, grids, t)
                                   : u0.with_amplitudes(expm_apply(dense_checked(h, "run_heat"),
                                                                   u0.amplitudes(), t));
  HeatResult out;
  out.u_recovered = ev.recovery.u;
  out.u_reference = ref;
  out.l2_relative_error = relative_error(ev.recovery.u.amplitudes(), ref.amplitudes());
  if (ev.projection) {
    out.projection_error = relative_error(ev.projection->u.amplitudes(), ref.amplitudes());
    out.success_probability = ev.projection->success_probability;
    out.cost_factor = ev.projection->cost_factor;
  }
  out.u0_norm = ev.u0_norm;
  out.u_norm = ev.recovery.u.norm();
  out.reference_norm = ref.norm();
  out.spectral_norm_initial = ev.spectral_norm_initial;
  out.spectral_norm_final = ev.spectral_norm_final;
  out.p_grid = ev.p_grid;
  out.epsilon = opts.epsilon;
  out.cost = ev.cost;
  out.warnings = std::move(ev.warnings);
  return out;
}

GroundStateReport prepare_ground_state(const HermitianMatrix& h, const StateVector& u0,
                                       double epsilon, const PConfig& p_config) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  if (h.dimension() != u0.size()) throw InvalidArgument("H and u0 dimensions differ");
  if (h.dimension() < 2) throw Unsupported("ground-state preparation needs at least two levels");
  const CMat hd = dense_checked(h, "prepare_ground_state");
  Eigen::SelfAdjointEigenSolver<CMat> eig(hd);
  if (eig.info() != Eigen::Success) throw InternalError("eigendecomposition of H failed");
  const RVec& e = eig.eigenvalues();
  const double scale = std::max(1.0, e.cwiseAbs().maxCoeff());
  const double gap = e[1] - e[0];
  if (gap <= 1e-10 * scale) throw Unsupported("ground level is degenerate (gap " + std::to_string(gap) + ")");

  const double u0_norm = u0.norm();
  if (u0_norm == 0.0) throw InvalidArgument("initial state is zero");
  const CVec ground = eig.eigenvectors().col(0);
  const double alpha0_sq = std::norm(ground.dot(u0.amplitudes())) / (u0_norm * u0_norm);
  if (alpha0_sq <= 1e-14) throw InvalidArgument("initial state has no overlap with the ground state");

  GroundStateReport rep{};
  rep.gap = gap;
  rep.alpha0_sq = alpha0_sq;
  rep.epsilon = epsilon;
  rep.ground_energy = e[0];
  rep.t_final = estimate_t_final(gap, std::min(1.0, alpha0_sq), epsilon);

  std::vector<Triplet> shift;
  for (std::size_t i = 0; i < h.dimension(); ++i) shift.emplace_back(i, i, cd{-e[0], 0.0});
  auto entries = h.triplets();
  entries.insert(entries.end(), shift.begin(), shift.end());
  const HermitianPair pair = hermitian_pair_of(HermitianMatrix::from_triplets(h.dimension(), entries));

  EvolveOptions opts = to_options(p_config, epsilon, RecoveryMethod::integration);
  EvolveResult ev = schrodingerize_evolve(u0, pair, rep.t_final, opts);
  const CVec u = ev.recovery.u.amplitudes();
  const double un = u.norm();
  if (!(un > 0.0)) throw DegenerateState("recovered state vanished");
  rep.state = u0.with_amplitudes(u / un);
  rep.fidelity = std::norm(ground.dot(u)) / (un * un);

  CVec c = eig.eigenvectors().adjoint() * u0.amplitudes();
  for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(-(e[k] - e[0]) * rep.t_final);
  rep.exact_fidelity = std::norm(c[0]) / c.squaredNorm();

  if (ev.projection) rep.success_probability = ev.projection->success_probability;
  rep.p_grid = ev.p_grid;
  rep.cost = ground_state_cost(static_cast<double>(std::max<std::size_t>(h.sparsity(), 1)),
                               std::max(h.max_norm(), 1e-300), std::sqrt(std::min(1.0, alpha0_sq)),
                               gap, epsilon);
  rep.warnings = std::move(ev.warnings);
  if (rep.fidelity < 1.0 - epsilon) {
    std::ostringstream msg;
    msg << "fidelity " << rep.fidelity << " is below 1 - epsilon";
    rep.warnings.push_back(msg.str());
  }
  return rep;
}

GibbsReport prepare_gibbs(const HermitianMatrix& h, double beta, const PConfig& p_config) {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("beta must be positive");
  const std::size_t dim = h.dimension();
  if (dim == 0) throw InvalidArgument("empty Hamiltonian");
  const CMat hd = dense_checked(h, "prepare_gibbs");
  Eigen::SelfAdjointEigenSolver<CMat> eig(hd);
  if (eig.info() != Eigen::Success) throw InternalError("eigendecomposition of H failed");
  const RVec& e = eig.eigenvalues();
  const double e_min = e.minCoeff();

  // (H - E_min) (x) 1, row index a*D + b with H acting on a.
  std::vector<Triplet> entries;
  for (const auto& t : h.triplets()) {
    for (std::size_t b = 0; b < dim; ++b) {
      entries.emplace_back(t.row() * dim + b, t.col() * dim + b, t.value());
    }
  }
  for (std::size_t i = 0; i < dim * dim; ++i) entries.emplace_back(i, i, cd{-e_min, 0.0});
  const HermitianPair pair = hermitian_pair_of(HermitianMatrix::from_triplets(dim * dim, entries));

  CVec psi0 = CVec::Zero(static_cast<Eigen::Index>(dim * dim));
  for (std::size_t j = 0; j < dim; ++j) psi0[static_cast<Eigen::Index>(j * dim + j)] = 1.0 / std::sqrt(double(dim));
  const StateVector u0({index_axis(dim), index_axis(dim)}, psi0);

  EvolveOptions opts = to_options(p_config, kGibbsEpsilon, RecoveryMethod::integration);
  EvolveResult ev = schrodingerize_evolve(u0, pair, 0.5 * beta, opts);

  const auto n = static_cast<Eigen::Index>(dim);
  using RowMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMat psi = Eigen::Map<const RowMat>(ev.recovery.u.amplitudes().data(), n, n);
  CMat rho = psi * psi.adjoint();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  const cd tr = rho.trace();
  if (!(std::abs(tr) > 0.0)) throw DegenerateState("purified state vanished");
  rho /= tr.real();

  RVec weights(n);
  double z = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    weights[k] = std::exp(-beta * (e[k] - e_min));
    z += weights[k];
  }
  const CMat rho_exact = eig.eigenvectors() * (weights / z).cast<cd>().asDiagonal() *
                         eig.eigenvectors().adjoint();

  GibbsReport rep{};
  rep.beta = beta;
  rep.rho = rho;
  rep.rho_exact = rho_exact;
  Eigen::SelfAdjointEigenSolver<CMat> diff(rho - rho_exact, Eigen::EigenvaluesOnly);
  rep.trace_distance_to_exact = 0.5 * diff.eigenvalues().cwiseAbs().sum();
  // Z of the unshifted H.
  double z_true = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) z_true += std::exp(-beta * e[k]);
  rep.partition_function = z_true;
  if (ev.projection) rep.success_probability = ev.projection->success_probability;
  rep.p_grid = ev.p_grid;
  rep.cost = gibbs_cost(static_cast<double>(std::max<std::size_t>(h.sparsity(), 1)),
                        std::max(h.max_norm(), 1e-300), beta, dim, z_true, opts.epsilon);
  rep.warnings = std::move(ev.warnings);
  return rep;
}

MomentReport compute_moments(const StateVector& w) {
  const auto& layout = w.layout();
  if (layout.empty() || layout.size() % 2 != 0) throw InvalidArgument("moments need d x axes and d k axes");
  const std::size_t d = layout.size() / 2;
  double weight = 1.0;
  for (std::size_t a = 0; a < d; ++a) {
    if (layout[a].kind != AxisKind::x || layout[d + a].kind != AxisKind::k) {
      throw InvalidArgument("moments need the layout (x_1..x_d, k_1..k_d)");
    }
    weight *= layout[a].grid.spacing() * layout[d + a].grid.spacing();
  }
  const auto& amp = w.amplitudes();
  const double scale = std::max(1.0, amp.size() ? amp.cwiseAbs().maxCoeff() : 0.0);
  for (Eigen::Index i = 0; i < amp.size(); ++i) {
    if (std::abs(amp[i].imag()) > 1e-8 * scale) {
      throw InvalidArgument("moments need a real density; imaginary part " + std::to_string(amp[i].imag()));
    }
  }
  const auto shape = w.shape();
  MomentReport m;
  m.momentum.assign(d, 0.0);
  std::vector<std::size_t> idx(shape.size(), 0);
  for (Eigen::Index flat = 0; flat < amp.size(); ++flat) {
    const double v = amp[flat].real() * weight;
    m.mass += v;
    double k2 = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
      const double k = layout[d + a].grid.point(idx[d + a]);
      m.momentum[a] += k * v;
      k2 += k * k;
    }
    m.energy += 0.5 * k2 * v;
    for (std::size_t a = shape.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  return m;
}

double observable_overlap(const StateVector& g, const StateVector& w) {
  if (!(g.layout() == w.layout())) throw InvalidArgument("observable_overlap: layouts differ");
  const double ng = g.norm(), nw = w.norm();
  if (ng == 0.0 || nw == 0.0) throw InvalidArgument("observable_overlap: zero vector");
  return std::min(1.0, std::norm(g.amplitudes().dot(w.amplitudes())) / (ng * ng * nw * nw));
}

namespace {

struct TransportSetup {
  Grid1D p_grid;
  EtaDiagonal d;
  HermitianMatrix h_total;
  SpectralState s0;
  double travel;
  std::vector<std::string> warnings;
};

double collision_lambda_max(const TransportModel& model) {
  RMat a = -model.sigma();
  a.diagonal() += model.sigma_total();
  if (a.rows() <= static_cast<Eigen::Index>(kOracleDimensionCap)) {
    Eigen::SelfAdjointEigenSolver<RMat> eig(a, Eigen::EigenvaluesOnly);
    return std::max(0.0, eig.eigenvalues().maxCoeff());
  }
  return 2.0 * model.sigma_total().cwiseAbs().maxCoeff();
}

TransportSetup transport_setup(const TransportModel& model, const StateVector& w0, const EvolveOptions& opts,
                               double t_horizon) {
  if (!(w0.layout() == model.phase_space_layout())) {
    throw InvalidArgument("w0 layout must be (x_1..x_d, k_1..k_d) of the model");
  }
  std::vector<std::string> warnings;
  const auto& a = w0.amplitudes();
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i].imag() != 0.0 || a[i].real() < 0.0) {
      warnings.push_back("initial density is not real and nonnegative");
      break;
    }
  }
  const double lambda = collision_lambda_max(model);
  const Grid1D p_grid = opts.p_grid ? *opts.p_grid : default_p_grid(opts.epsilon, t_horizon, lambda).grid;
  StateVector xi_state = w0;
  for (int axis = 0; axis < model.dimension(); ++axis) {
    xi_state = to_spectral(xi_state, static_cast<std::size_t>(axis), PhaseSign::negative);
  }
  WarpedState warped = warp_extend(xi_state, p_grid, opts.epsilon);
  warnings.insert(warnings.end(), warped.warnings.begin(), warped.warnings.end());
  const double travel = t_horizon * lambda;
  if (travel >= p_grid.half_width()) {
    std::ostringstream msg;
    msg << "t*lambda_max(Sigma - sigma) = " << travel << " exceeds the p half width "
        << p_grid.half_width();
    warnings.push_back(msg.str());
  }
  EtaDiagonal d = assemble_eta_diagonal(p_grid);
  HermitianMatrix h_total = assemble_transport_hamiltonian(model, d);
  return {p_grid, std::move(d), std::move(h_total), dft_p(warped, PhaseSign::negative), travel,
          std::move(warnings)};
}

RecoveryResult transport_recover(const TransportModel& model, const SpectralState& s,
                                 const EvolveOptions& opts, double travel) {
  WarpedState w = idft_p(s);
  for (int axis = 0; axis < model.dimension(); ++axis) {
    w.state = to_grid(w.state, static_cast<std::size_t>(axis), PhaseSign::negative);
  }
  switch (opts.recovery) {
    case RecoveryMethod::projection: return project_positive(w);
    case RecoveryMethod::point:
      if (!opts.p_star) throw InvalidArgument("point recovery needs p_star");
      return recover_point(w, *opts.p_star, travel);
    case RecoveryMethod::integration: break;
  }
  return recover_integrate(w, true);
}

StateVector real_part(const StateVector& s) {
  return s.with_amplitudes(s.amplitudes().real().cast<cd>());
}

}  // namespace

TransportResult run_transport(const TransportModel& model, const StateVector& w0,
                              const PConfig& p_config, double t,
                              std::optional<std::size_t> reference_steps) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  const EvolveOptions opts = to_options(p_config, kTransportEpsilon, RecoveryMethod::projection);
  TransportSetup setup = transport_setup(model, w0, opts, t);

  SpectralState st = setup.s0;
  st.state = st.state.with_amplitudes(evolve_hermitian(setup.s0.state.amplitudes(), setup.h_total, t, opts.threads));
  RecoveryResult rec = transport_recover(model, st, opts, setup.travel);

  const StateVector ref = transport_reference(model, w0, t, reference_steps);
  TransportResult out;
  out.w_recovered = real_part(rec.u);
  out.w_reference = ref;
  const double rec_norm = rec.u.norm();
  out.imag_residual = rec_norm > 0.0 ? rec.u.amplitudes().imag().norm() / rec_norm : 0.0;
  out.l2_relative_error = relative_error(out.w_recovered.amplitudes(), ref.amplitudes());
  out.initial_moments = compute_moments(real_part(w0));
  out.moments = compute_moments(out.w_recovered);
  out.mass_drift = out.initial_moments.mass != 0.0
                       ? std::abs(out.moments.mass - out.initial_moments.mass) / std::abs(out.initial_moments.mass)
                       : std::abs(out.moments.mass);
  out.success_probability = rec.success_probability;
  out.cost_factor = rec.cost_factor;
  out.spectral_norm_initial = setup.s0.state.norm();
  out.spectral_norm_final = st.state.norm();
  out.p_grid = setup.p_grid;
  out.epsilon = opts.epsilon;
  out.warnings = std::move(setup.warnings);
  out.warnings.insert(out.warnings.end(), rec.warnings.begin(), rec.warnings.end());
  if (out.imag_residual > 1e-2) {
    std::ostringstream msg;
    msg << "recovered density has imaginary residue " << out.imag_residual;
    out.warnings.push_back(msg.str());
  }
  const double w_norm = out.w_recovered.norm();
  if (t > 0.0 && w_norm > 0.0 && setup.h_total.max_norm() > 0.0) {
    const double qubits = std::max(1.0, std::ceil(std::log2(static_cast<double>(setup.h_total.dimension()))));
    CostReport c = hamsim_cost(static_cast<double>(std::max<std::size_t>(setup.h_total.sparsity(), 1)), t,
                               setup.h_total.max_norm(), opts.epsilon, qubits);
    c.formula = "transport_schrodingerisation";
    const double ratio = w0.norm() / w_norm;
    c.queries *= ratio;
    c.gates *= ratio;
    c.norm_ratio = ratio;
    out.cost = c;
  }
  return out;
}

StationaryResult stationary_transport_state(const TransportModel& model, const StateVector& w0,
                                            const PConfig& p_config, double dt, double t_max,
                                            double tolerance) {
  if (!(dt > 0.0) || !(t_max >= dt)) throw InvalidArgument("need 0 < dt <= t_max");
  // Integration, not projection: its successive differences decay with the
  // relaxation rate, while projection keeps a slowly decaying p-ripple.
  const EvolveOptions opts = to_options(p_config, kTransportEpsilon, RecoveryMethod::integration);
  TransportSetup setup = transport_setup(model, w0, opts, t_max);
  SpectralState s = setup.s0;
  StationaryResult out;
  out.w = real_part(w0);
  CVec previous = out.w.amplitudes();
  while (out.time + 0.5 * dt < t_max) {
    s.state = s.state.with_amplitudes(evolve_hermitian(s.state.amplitudes(), setup.h_total, dt, opts.threads));
    out.time += dt;
    ++out.steps;
    StateVector w = real_part(transport_recover(model, s, opts, setup.travel).u);
    out.last_change = (w.amplitudes() - previous).norm();
    previous = w.amplitudes();
    out.w = std::move(w);
    if (out.last_change < tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace schro
