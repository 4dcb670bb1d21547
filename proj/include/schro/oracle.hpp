#pragma once

#include <optional>
#include <span>

#include "schro/core.hpp"
#include "schro/operators.hpp"

namespace schro {

/// exp(-A t) u0. Normal A goes through its Schur (unitary) diagonalisation;
/// anything else through Eigen's scaling-and-squaring Pade exponential.
CVec expm_apply(const CMat& a, const CVec& u0, double t);

constexpr std::size_t kOracleDimensionCap = 4096;

/// Exact periodic heat flow with V = 0: every x-Fourier mode decays by
/// exp(-|xi|^2 t). The x axes of u0 must be listed in `grids` order.
StateVector heat_analytic(const StateVector& u0, std::span<const Grid1D> grids, double t);

/// Classical RK4 on dW/dt = -k.grad_x W + sigma W - Sigma W, with the x
/// derivative taken spectrally. w0 uses the model's (x, k) layout. Without an
/// explicit step count, steps = ceil(10 t rho) where rho is a power-iteration
/// estimate of the right-hand side's spectral radius.
StateVector transport_reference(const TransportModel& model, const StateVector& w0, double t,
                                std::optional<std::size_t> steps = std::nullopt);

/// dW/dt of the discretised transport equation (exposed for tests).
CVec transport_rhs(const TransportModel& model, const CVec& w);

}  // namespace schro
