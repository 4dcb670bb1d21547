#pragma once

#include <optional>
#include <string>
#include <vector>

#include "schro/costs.hpp"
#include "schro/operators.hpp"
#include "schro/parallel.hpp"
#include "schro/spectral.hpp"

namespace schro {

/// w(t, x, p) with the p axis last.
struct WarpedState {
  StateVector state;
  Grid1D p_grid;
  std::vector<std::string> warnings;
};

/// Fourier coefficients in p (eta axis last). `sign` is the phase sign used
/// by the forward transform; idft_p undoes exactly that transform.
struct SpectralState {
  StateVector state;
  Grid1D eta_grid;
  PhaseSign sign = PhaseSign::positive;
};

enum class RecoveryMethod { projection, integration, point };

std::string to_string(RecoveryMethod m);
RecoveryMethod parse_recovery_method(const std::string& name);

struct RecoveryResult {
  StateVector u;
  RecoveryMethod method;
  std::optional<double> success_probability;  // projection only
  std::optional<double> p_star;                 // point only
  /// sqrt(dp) ||w|| / ||u||, the amplitude-amplification repetition factor;
  /// projection only.
  std::optional<double> cost_factor;
  std::vector<std::string> warnings;
};

/// w(0, x_i, p_j) = exp(-|p_j|) u0(x_i). Warns when exp(-L) exceeds
/// `tolerance`.
WarpedState warp_extend(const StateVector& u0, const Grid1D& p_grid, double tolerance = 1e-6);

/// With the default sign, d/dp becomes -i*eta, so each eta block evolves
/// under eta*H + Hbar.
SpectralState dft_p(const WarpedState& w, PhaseSign sign = PhaseSign::positive);
WarpedState idft_p(const SpectralState& s);

/// exp(-i t (mu_j H + Hbar)) on every eta block j. The state index is
/// (component, eta) with eta fastest, matching assemble_total_hamiltonian.
SpectralState evolve_blocks(const SpectralState& s0, const HermitianPair& pair,
                            const EtaDiagonal& d_matrix, double t,
                            unsigned threads = worker_count());

/// exp(-i t H) for an arbitrary Hermitian H, block by block over the
/// connected components of its sparsity graph.
CVec evolve_hermitian(const CVec& v0, const HermitianMatrix& h, double t,
                      unsigned threads = worker_count());

/// Strang splitting for H = -Laplacian + V on the x grids (eta last): half
/// potential step, exact kinetic step in x-Fourier space, half potential step.
/// A potential with an imaginary part would give Hbar != 0 and is rejected.
SpectralState evolve_splitstep_heat(const SpectralState& s0, std::span<const cd> potential,
                                    std::span<const Grid1D> grids, double t, std::size_t steps,
                                    unsigned threads = worker_count());

/// Trapezoid over p >= 0: weight dp, half at p = 0 and half at the
/// p = L endpoint (stored as index 0 by periodicity). With `calibrate` the
/// sum is divided by the same quadrature of exp(-p), so an undisturbed
/// warped profile comes back exactly.
RecoveryResult recover_integrate(const WarpedState& w, bool calibrate = false);

/// exp(p_star) w(., p_star). `travel` = t * lambda_max(H), if known, is used
/// to warn when p_star is outside p_star + travel < L.
RecoveryResult recover_point(const WarpedState& w, double p_star,
                             std::optional<double> travel = std::nullopt);

/// Keeps the p >= 0 block (p = 0 included as a full index) and collapses it
/// onto the exp(-p) profile by least squares.
RecoveryResult project_positive(const WarpedState& w);

struct PGridChoice {
  Grid1D grid;
  double epsilon;
  double travel;
};

/// L = max(12, ln(1/eps) + travel + 2), N the smallest power of two with
/// dp <= min(0.05, sqrt(eps)).
PGridChoice default_p_grid(double epsilon, double t, double lambda_max,
                           std::size_t max_count = std::size_t{1} << 20);

struct EvolveOptions {
  std::optional<Grid1D> p_grid;
  double epsilon = 1e-3;
  RecoveryMethod recovery = RecoveryMethod::integration;
  std::optional<double> p_star;
  /// Largest decay rate the state actually excites. Defaults to the top of
  /// spec(H); used for the default p grid and the wrap-around warning.
  std::optional<double> lambda_max;
  /// Also run projection for its success probability and cost factor.
  bool projection_diagnostics = true;
  unsigned threads = worker_count();
  /// Sparsity and qubit count fed to the cost model; 0 means "infer".
  double sparsity = 0.0;
  double qubits = 0.0;
};

struct EvolveResult {
  WarpedState warped;
  RecoveryResult recovery;
  std::optional<RecoveryResult> projection;
  Grid1D p_grid;
  double spectral_norm_initial = 0.0;
  double spectral_norm_final = 0.0;
  double u0_norm = 0.0;
  std::optional<CostReport> cost;
  std::vector<std::string> warnings;
};

/// du/dt = -A u through the decomposition A = H + i Hbar.
EvolveResult schrodingerize_evolve(const StateVector& u0, const CMat& a, double t,
                                   const EvolveOptions& options = {});
EvolveResult schrodingerize_evolve(const StateVector& u0, const HermitianPair& pair, double t,
                                   const EvolveOptions& options = {});

}  // namespace schro
