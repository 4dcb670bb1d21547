#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "schro/operators.hpp"

namespace schro {

/// Model query/gate counts. Constants hidden by the big-O statements are set
/// to 1 and logarithms are base 2.
struct CostReport {
  std::string formula;
  std::string label = "model cost, constants = 1";
  double tau = 0.0;
  double queries = 0.0;
  double gates = 0.0;
  double qubit_count = 0.0;
  double epsilon = 0.0;
  std::optional<double> norm_ratio;
  /// Prefactor of the stated complexity before the log dressing, when the
  /// formula is not a plain Hamiltonian-simulation count.
  std::optional<double> leading_factor;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const CostReport& report);

/// log2(r) and log2(log2(r)) with r clamped to >= 2 and the inner log
/// clamped to >= 4, so both stay positive and the ratio is monotone.
struct LogDressing {
  double log;
  double loglog;
};
LogDressing log_dressing(double ratio);

CostReport hamsim_cost(double s, double t, double max_norm, double epsilon, double m_h);

/// Heat form: D contributes max_norm * pi/(2 eps); amplitude amplification
/// repeats the simulation norm_ratio times.
CostReport schrodingerisation_cost(double norm_ratio, double s, double t, double max_norm,
                                   double epsilon, double m_h);

/// General A = H + i Hbar: ||H_total||_max = max(||H||_max pi/(2 eps), ||Hbar||_max).
/// The dimension factor d enters the extra two-qubit gate count only.
CostReport general_schrodingerisation_cost(double norm_ratio, double s, double t,
                                           double h_max_norm, double h_bar_max_norm,
                                           double epsilon, double m_h, int d);

double estimate_t_final(double gap, double alpha0_sq, double epsilon);

/// Leading factor s ||H||_max / (|alpha0| gap eps). The log argument omits
/// alpha0 so halving alpha0 exactly doubles every count.
CostReport ground_state_cost(double s, double max_norm, double alpha0, double gap,
                             double epsilon, double m_h = 1.0);

/// Leading factor s ||H||_max beta sqrt(D/Z) / eps.
CostReport gibbs_cost(double s, double max_norm, double beta, std::size_t dim, double partition_z,
                      double epsilon);

struct TransportNormParity {
  double streaming_max_norm;   // ||L_[xi,k]||_max
  double scattering_max_norm;  // max(||sigma (x) D||_max, ||Sigma (x) D||_max)
  double total_max_norm;
  double ratio;                // scattering / streaming
};

TransportNormParity transport_norm_parity(const TransportModel& model, const EtaDiagonal& d_matrix);

}  // namespace schro
