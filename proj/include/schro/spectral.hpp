#pragma once

#include <cstddef>
#include <span>

#include "schro/core.hpp"

namespace schro {

/// Sign of the phase in the forward kernel e^{sign * i * mu_j * x_k}.
enum class PhaseSign : int { negative = -1, positive = 1 };

/// Unitary transforms between grid values and Fourier coefficients.
///
/// forward: c_j = n^{-1/2} sum_k f_k exp(sign * i * mu_j * x_k)
/// inverse: f_k = n^{-1/2} sum_j c_j exp(-sign * i * mu_j * x_k)
///
/// with x_k = -L + k*dx and mu_j the wavenumbers of fourier_modes() in
/// sorted (ascending) order. The phases depend only on indices, so the
/// grid's half width never enters.
void spectral_forward(std::span<cd> line, PhaseSign sign);
void spectral_inverse(std::span<cd> line, PhaseSign sign);

/// Applies forward/inverse along one axis of a row-major tensor.
void spectral_forward_axis(CVec& data, std::span<const std::size_t> shape, std::size_t axis,
                           PhaseSign sign);
void spectral_inverse_axis(CVec& data, std::span<const std::size_t> shape, std::size_t axis,
                           PhaseSign sign);

/// State-level wrappers: x <-> xi and p <-> eta, layout relabelled.
StateVector to_spectral(const StateVector& state, std::size_t axis, PhaseSign sign);
StateVector to_grid(const StateVector& state, std::size_t axis, PhaseSign sign);

}  // namespace schro
