#include "schro/spectral.hpp"

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "schro/error.hpp"

namespace schro {
namespace {

// Plans are cached per thread; Eigen::FFT is not safe to share.
Eigen::FFT<double>& thread_fft() {
  thread_local Eigen::FFT<double> fft;
  return fft;
}

// out_j = sum_k in_k exp(dir * 2 pi i j k / n), dir = -1 or +1, unscaled.
void raw_dft(std::vector<cd>& in, std::vector<cd>& out, int dir) {
  auto& fft = thread_fft();
  if (dir < 0) {
    fft.fwd(out, in);
  } else {
    for (auto& v : in) v = std::conj(v);
    fft.fwd(out, in);
    for (auto& v : out) v = std::conj(v);
  }
}

double alternating(std::size_t i) { return (i % 2 == 0) ? 1.0 : -1.0; }

}  // namespace

void spectral_forward(std::span<cd> line, PhaseSign sign) {
  const std::size_t n = line.size();
  if (n == 0) return;
  if (n % 2 != 0) throw InvalidArgument("spectral transform needs an even length");
  std::vector<cd> in(n), out;
  for (std::size_t k = 0; k < n; ++k) in[k] = alternating(k) * line[k];
  raw_dft(in, out, static_cast<int>(sign));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  const double half_sign = alternating(n / 2);
  for (std::size_t j = 0; j < n; ++j) line[j] = (scale * half_sign * alternating(j)) * out[j];
}

void spectral_inverse(std::span<cd> line, PhaseSign sign) {
  const std::size_t n = line.size();
  if (n == 0) return;
  if (n % 2 != 0) throw InvalidArgument("spectral transform needs an even length");
  const double half_sign = alternating(n / 2);
  std::vector<cd> in(n), out;
  for (std::size_t j = 0; j < n; ++j) in[j] = half_sign * alternating(j) * line[j];
  raw_dft(in, out, -static_cast<int>(sign));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t k = 0; k < n; ++k) line[k] = (scale * alternating(k)) * out[k];
}

namespace {

template <class Fn>
void for_each_line(CVec& data, std::span<const std::size_t> shape, std::size_t axis, Fn&& fn) {
  if (axis >= shape.size()) throw InvalidArgument("axis out of range");
  if (shape_product(shape) != static_cast<std::size_t>(data.size())) {
    throw InvalidArgument("tensor shape does not match data length");
  }
  const std::size_t n = shape[axis];
  std::size_t inner = 1;
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t outer = static_cast<std::size_t>(data.size()) / (n * inner);
  std::vector<cd> line(n);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t i = 0; i < inner; ++i) {
      const std::size_t base = o * n * inner + i;
      for (std::size_t k = 0; k < n; ++k) line[k] = data[static_cast<Eigen::Index>(base + k * inner)];
      fn(std::span<cd>(line));
      for (std::size_t k = 0; k < n; ++k) data[static_cast<Eigen::Index>(base + k * inner)] = line[k];
    }
  }
}

}  // namespace

void spectral_forward_axis(CVec& data, std::span<const std::size_t> shape, std::size_t axis,
                           PhaseSign sign) {
  for_each_line(data, shape, axis, [sign](std::span<cd> l) { spectral_forward(l, sign); });
}

void spectral_inverse_axis(CVec& data, std::span<const std::size_t> shape, std::size_t axis,
                           PhaseSign sign) {
  for_each_line(data, shape, axis, [sign](std::span<cd> l) { spectral_inverse(l, sign); });
}

StateVector to_spectral(const StateVector& state, std::size_t axis, PhaseSign sign) {
  auto layout = state.layout();
  if (axis >= layout.size()) throw InvalidArgument("axis out of range");
  auto& ax = layout[axis];
  if (ax.kind == AxisKind::x) {
    ax.kind = AxisKind::xi;
  } else if (ax.kind == AxisKind::p) {
    ax.kind = AxisKind::eta;
  } else {
    throw InvalidArgument("axis " + ax.name() + " is not a position axis");
  }
  CVec data = state.amplitudes();
  const auto shape = state.shape();
  spectral_forward_axis(data, shape, axis, sign);
  return StateVector(std::move(layout), std::move(data));
}

StateVector to_grid(const StateVector& state, std::size_t axis, PhaseSign sign) {
  auto layout = state.layout();
  if (axis >= layout.size()) throw InvalidArgument("axis out of range");
  auto& ax = layout[axis];
  if (ax.kind == AxisKind::xi) {
    ax.kind = AxisKind::x;
  } else if (ax.kind == AxisKind::eta) {
    ax.kind = AxisKind::p;
  } else {
    throw InvalidArgument("axis " + ax.name() + " is not a spectral axis");
  }
  CVec data = state.amplitudes();
  const auto shape = state.shape();
  spectral_inverse_axis(data, shape, axis, sign);
  return StateVector(std::move(layout), std::move(data));
}

}  // namespace schro
