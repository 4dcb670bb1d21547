#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "schro/costs.hpp"
#include "schro/operators.hpp"
#include "schro/pipeline.hpp"

namespace schro {

/// Per-application p-grid and recovery settings. Unset fields take the
/// application's default.
struct PConfig {
  std::optional<Grid1D> p_grid;
  std::optional<double> epsilon;
  std::optional<RecoveryMethod> recovery;
  std::optional<double> p_star;
  unsigned threads = worker_count();
};

struct HeatResult {
  StateVector u_recovered = StateVector({}, CVec::Zero(1));
  StateVector u_reference = StateVector({}, CVec::Zero(1));
  double l2_relative_error = 0.0;
  std::optional<double> projection_error;
  std::optional<double> success_probability;
  std::optional<double> cost_factor;
  double u0_norm = 0.0;
  double u_norm = 0.0;
  double reference_norm = 0.0;
  double spectral_norm_initial = 0.0;
  double spectral_norm_final = 0.0;
  Grid1D p_grid = Grid1D(1.0, 2);
  double epsilon = 0.0;
  std::optional<CostReport> cost;
  std::vector<std::string> warnings;
};

/// du/dt = -(-Laplacian + V) u on periodic x grids. The reference is the
/// exact mode-wise decay when V = 0 and the dense exponential otherwise.
HeatResult run_heat(const StateVector& u0, std::span<const cd> potential,
                    std::span<const Grid1D> grids, const PConfig& p_config, double t);

struct GroundStateReport {
  double t_final = 0.0;
  double fidelity = 0.0;        // pipeline
  double exact_fidelity = 0.0;  // exp(-(H - E0) t_final) u0 from the eigendecomposition
  double gap = 0.0;
  double alpha0_sq = 0.0;
  double epsilon = 0.0;
  double ground_energy = 0.0;
  StateVector state = StateVector({}, CVec::Zero(1));  // normalised recovered state
  std::optional<double> success_probability;
  Grid1D p_grid = Grid1D(1.0, 2);
  CostReport cost;
  std::vector<std::string> warnings;
};

/// Imaginary-time evolution to estimate_t_final. The generator is shifted to
/// H - E0 so it stays PSD with a zero ground level; normalised states are
/// unaffected by the shift.
GroundStateReport prepare_ground_state(const HermitianMatrix& h, const StateVector& u0,
                                       double epsilon, const PConfig& p_config = {});

struct GibbsReport {
  double beta = 0.0;
  CMat rho;
  CMat rho_exact;
  double trace_distance_to_exact = 0.0;
  double partition_function = 0.0;
  std::optional<double> success_probability;
  Grid1D p_grid = Grid1D(1.0, 2);
  CostReport cost;
  std::vector<std::string> warnings;
};

/// Purification route: (1/sqrt(D)) sum_j |j>|j> evolved under
/// (H - E_min) (x) 1 for t = beta/2, then the second register is traced out.
GibbsReport prepare_gibbs(const HermitianMatrix& h, double beta, const PConfig& p_config = {});

struct MomentReport {
  double mass = 0.0;
  std::vector<double> momentum;
  double energy = 0.0;
};

/// Quadrature with weights dx^d dk^d for g = 1, k, |k|^2/2. The layout must
/// hold d x axes followed by d k axes.
MomentReport compute_moments(const StateVector& w);

/// |<g/|g|, w/|w|>|^2.
double observable_overlap(const StateVector& g, const StateVector& w);

struct TransportResult {
  StateVector w_recovered = StateVector({}, CVec::Zero(1));  // real part
  StateVector w_reference = StateVector({}, CVec::Zero(1));
  double l2_relative_error = 0.0;
  double imag_residual = 0.0;  // |Im W| / |W| before the real part is taken
  MomentReport moments;
  MomentReport initial_moments;
  double mass_drift = 0.0;  // relative
  std::optional<double> success_probability;
  std::optional<double> cost_factor;
  double spectral_norm_initial = 0.0;
  double spectral_norm_final = 0.0;
  Grid1D p_grid = Grid1D(1.0, 2);
  double epsilon = 0.0;
  std::optional<CostReport> cost;
  std::vector<std::string> warnings;
};

/// Fourier in x, warp in p, evolve under the transport Hamiltonian, invert,
/// recover (projection by default), compare with the RK4 reference.
TransportResult run_transport(const TransportModel& model, const StateVector& w0,
                              const PConfig& p_config, double t,
                              std::optional<std::size_t> reference_steps = std::nullopt);

struct StationaryResult {
  StateVector w = StateVector({}, CVec::Zero(1));
  double time = 0.0;
  double last_change = 0.0;
  bool converged = false;
  std::size_t steps = 0;
};

/// Repeats pipeline steps of length dt until |W(t + dt) - W(t)| < tolerance
/// or t exceeds t_max. Recovery defaults to integration here.
StationaryResult stationary_transport_state(const TransportModel& model, const StateVector& w0,
                                            const PConfig& p_config, double dt, double t_max,
                                            double tolerance = 1e-8);

}  // namespace schro
