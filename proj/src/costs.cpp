#include "schro/costs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "schro/error.hpp"

namespace schro {
namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw InvalidArgument(std::string(name) + " must be positive and finite");
  }
}

void require_epsilon(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
}

}  // namespace

nlohmann::json to_json(const CostReport& r) {
  nlohmann::json j;
  j["formula"] = r.formula;
  j["label"] = r.label;
  j["tau"] = r.tau;
  j["queries"] = r.queries;
  j["gates"] = r.gates;
  j["qubit_count"] = r.qubit_count;
  j["epsilon"] = r.epsilon;
  j["norm_ratio"] = r.norm_ratio ? nlohmann::json(*r.norm_ratio) : nlohmann::json(nullptr);
  j["leading_factor"] = r.leading_factor ? nlohmann::json(*r.leading_factor) : nlohmann::json(nullptr);
  nlohmann::json inputs = nlohmann::json::object();
  for (const auto& [k, v] : r.inputs) inputs[k] = v;
  j["inputs"] = inputs;
  j["warnings"] = r.warnings;
  return j;
}

LogDressing log_dressing(double ratio) {
  const double l = std::log2(std::max(ratio, 2.0));
  return {l, std::log2(std::max(l, 4.0))};
}

CostReport hamsim_cost(double s, double t, double max_norm, double epsilon, double m_h) {
  require_positive(s, "s");
  require_positive(t, "t");
  require_positive(max_norm, "max_norm");
  require_positive(m_h, "m_h");
  require_epsilon(epsilon);
  CostReport r;
  r.formula = "hamsim";
  r.tau = s * t * max_norm;
  const auto [l, ll] = log_dressing(r.tau / epsilon);
  r.queries = r.tau * l / ll;
  r.gates = r.tau * (m_h + std::pow(l, 2.5)) * l / ll;
  r.qubit_count = m_h;
  r.epsilon = epsilon;
  r.inputs = {{"s", s}, {"t", t}, {"max_norm", max_norm}, {"epsilon", epsilon}, {"m_h", m_h}};
  return r;
}

CostReport schrodingerisation_cost(double norm_ratio, double s, double t, double max_norm,
                                   double epsilon, double m_h) {
  require_positive(norm_ratio, "norm_ratio");
  require_epsilon(epsilon);
  const double d_norm = std::numbers::pi / (2.0 * epsilon);
  CostReport r = hamsim_cost(s, t, max_norm * d_norm, epsilon, m_h);
  r.formula = "schrodingerisation";
  r.queries *= norm_ratio;
  r.gates *= norm_ratio;
  r.norm_ratio = norm_ratio;
  r.inputs = {{"norm_ratio", norm_ratio}, {"s", s}, {"t", t}, {"max_norm", max_norm},
              {"effective_max_norm", max_norm * d_norm}, {"epsilon", epsilon}, {"m_h", m_h}};
  if (norm_ratio < 1.0) r.warnings.push_back("norm_ratio < 1: solution norm grew");
  return r;
}

CostReport general_schrodingerisation_cost(double norm_ratio, double s, double t,
                                           double h_max_norm, double h_bar_max_norm,
                                           double epsilon, double m_h, int d) {
  require_positive(norm_ratio, "norm_ratio");
  require_epsilon(epsilon);
  if (h_max_norm < 0.0 || h_bar_max_norm < 0.0) throw InvalidArgument("max norms must be >= 0");
  if (d < 1) throw InvalidArgument("d must be >= 1");
  const double total = std::max(h_max_norm * std::numbers::pi / (2.0 * epsilon), h_bar_max_norm);
  CostReport r = hamsim_cost(s, t, total, epsilon, m_h);
  const auto [l, ll] = log_dressing(r.tau / epsilon);
  r.formula = "general_schrodingerisation";
  r.queries *= norm_ratio;
  r.gates = norm_ratio * (r.gates + static_cast<double>(d) * r.tau * l / ll);
  r.norm_ratio = norm_ratio;
  r.inputs = {{"norm_ratio", norm_ratio},   {"s", s},
              {"t", t},                     {"h_max_norm", h_max_norm},
              {"h_bar_max_norm", h_bar_max_norm}, {"total_max_norm", total},
              {"epsilon", epsilon},         {"m_h", m_h},
              {"d", static_cast<double>(d)}};
  if (norm_ratio < 1.0) r.warnings.push_back("norm_ratio < 1: solution norm grew");
  return r;
}

double estimate_t_final(double gap, double alpha0_sq, double epsilon) {
  if (!(gap > 0.0) || !std::isfinite(gap)) {
    throw InvalidArgument("spectral gap must be positive (gapless Hamiltonians are not supported)");
  }
  if (!(alpha0_sq > 0.0 && alpha0_sq <= 1.0 + 1e-12)) throw InvalidArgument("alpha0_sq must lie in (0, 1]");
  require_epsilon(epsilon);
  return std::log(1.0 / (epsilon * alpha0_sq)) / gap;
}

CostReport ground_state_cost(double s, double max_norm, double alpha0, double gap,
                             double epsilon, double m_h) {
  require_positive(s, "s");
  require_positive(max_norm, "max_norm");
  require_positive(gap, "gap");
  require_positive(m_h, "m_h");
  require_epsilon(epsilon);
  if (!(alpha0 > 0.0 && alpha0 <= 1.0 + 1e-12)) throw InvalidArgument("alpha0 must lie in (0, 1]");
  CostReport r;
  r.formula = "ground_state";
  const double t_final = estimate_t_final(gap, alpha0 * alpha0, epsilon);
  r.tau = s * t_final * max_norm;
  r.leading_factor = s * max_norm / (alpha0 * gap * epsilon);
  const auto [l, ll] = log_dressing(s * max_norm / (gap * epsilon));
  r.queries = *r.leading_factor * l / ll;
  r.gates = *r.leading_factor * (m_h + std::pow(l, 2.5)) * l / ll;
  r.qubit_count = m_h;
  r.epsilon = epsilon;
  r.inputs = {{"s", s},         {"max_norm", max_norm}, {"alpha0", alpha0}, {"gap", gap},
              {"epsilon", epsilon}, {"m_h", m_h},       {"t_final", t_final}};
  return r;
}

CostReport gibbs_cost(double s, double max_norm, double beta, std::size_t dim, double partition_z,
                      double epsilon) {
  require_positive(s, "s");
  require_positive(max_norm, "max_norm");
  require_positive(beta, "beta");
  require_epsilon(epsilon);
  if (dim == 0) throw InvalidArgument("dimension must be positive");
  if (!(partition_z > 0.0) || !std::isfinite(partition_z)) {
    throw InvalidArgument("partition function must be positive");
  }
  const double d = static_cast<double>(dim);
  const double m = 2.0 * std::max(1.0, std::ceil(std::log2(d)));
  CostReport r;
  r.formula = "gibbs";
  r.tau = s * 0.5 * beta * max_norm;
  r.leading_factor = s * max_norm * beta * std::sqrt(d / partition_z) / epsilon;
  const auto [l, ll] = log_dressing(s * max_norm * beta / epsilon);
  r.queries = *r.leading_factor * l / ll;
  r.gates = *r.leading_factor * (m + std::pow(l, 2.5)) * l / ll;
  r.qubit_count = m;
  r.epsilon = epsilon;
  r.inputs = {{"s", s},       {"max_norm", max_norm}, {"beta", beta},
              {"dim", d},     {"partition_z", partition_z}, {"epsilon", epsilon}};
  return r;
}

TransportNormParity transport_norm_parity(const TransportModel& model, const EtaDiagonal& d_matrix) {
  const auto xi = model.xi_modes();
  // max |xi . k| over the tensor grid is attained at a corner.
  double streaming = 0.0;
  for (std::size_t j = 0; j < model.k_size(); ++j) {
    const auto k = model.k_point(j);
    double acc = 0.0;
    for (std::size_t a = 0; a < k.size(); ++a) {
      double m = 0.0;
      for (double v : xi[a]) m = std::max(m, std::abs(v));
      acc += m * std::abs(k[a]);
    }
    streaming = std::max(streaming, acc);
  }
  const double dn = d_matrix.max_norm();
  const double sigma_norm = model.sigma().cwiseAbs().maxCoeff() * dn;
  const double total_norm = model.sigma_total().cwiseAbs().maxCoeff() * dn;
  TransportNormParity out{};
  out.streaming_max_norm = streaming;
  out.scattering_max_norm = std::max(sigma_norm, total_norm);
  out.total_max_norm = assemble_transport_hamiltonian(model, d_matrix).max_norm();
  out.ratio = streaming > 0.0 ? out.scattering_max_norm / streaming
                              : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace schro
