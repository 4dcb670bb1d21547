#include "schro/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "schro/error.hpp"

namespace schro {

Grid1D::Grid1D(double half_width, std::size_t count)
    : half_width_(half_width), count_(count), spacing_(0.0) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw InvalidArgument("grid half_width must be positive and finite");
  }
  if (count < 2 || count % 2 != 0) {
    throw InvalidArgument("grid count must be an even integer >= 2, got " + std::to_string(count));
  }
  spacing_ = 2.0 * half_width / static_cast<double>(count);
}

std::vector<double> Grid1D::points() const {
  std::vector<double> out(count_);
  for (std::size_t i = 0; i < count_; ++i) out[i] = point(i);
  return out;
}

std::optional<std::size_t> Grid1D::find_point(double value, double tol) const {
  const double pos = (value + half_width_) / spacing_;
  const double nearest = std::round(pos);
  if (nearest < 0.0 || nearest >= static_cast<double>(count_)) return std::nullopt;
  const auto idx = static_cast<std::size_t>(nearest);
  if (std::abs(point(idx) - value) > tol) return std::nullopt;
  return idx;
}

Grid1D make_grid(double half_width, long long count) {
  if (count <= 0) {
    throw InvalidArgument("grid count must be positive, got " + std::to_string(count));
  }
  return Grid1D(half_width, static_cast<std::size_t>(count));
}

std::size_t ModeVector::natural_index(std::size_t sorted_index) const {
  const std::size_t n = natural.size();
  return (sorted_index + n / 2) % n;
}

std::size_t ModeVector::sorted_index(std::size_t natural_index) const {
  const std::size_t n = natural.size();
  return (natural_index + n / 2) % n;
}

std::vector<double> ModeVector::sorted() const {
  std::vector<double> out(natural.size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = natural[natural_index(s)];
  return out;
}

std::vector<std::size_t> ModeVector::natural_order() const {
  std::vector<std::size_t> out(natural.size());
  for (std::size_t s = 0; s < out.size(); ++s) out[s] = natural_index(s);
  return out;
}

ModeVector fourier_modes(const Grid1D& grid) {
  const auto n = static_cast<long long>(grid.count());
  const double scale = std::numbers::pi / grid.half_width();
  ModeVector modes;
  modes.natural.resize(grid.count());
  for (long long i = 0; i < n; ++i) {
    const long long j = i < n / 2 ? i : i - n;
    modes.natural[static_cast<std::size_t>(i)] = scale * static_cast<double>(j);
  }
  return modes;
}

std::string Axis::name() const {
  switch (kind) {
    case AxisKind::x: return "x" + std::to_string(dimension);
    case AxisKind::k: return "k" + std::to_string(dimension);
    case AxisKind::xi: return "xi" + std::to_string(dimension);
    case AxisKind::p: return "p";
    case AxisKind::eta: return "eta";
    case AxisKind::index: return "index";
  }
  return "?";
}

Axis x_axis(int dimension, const Grid1D& grid) { return Axis{AxisKind::x, dimension, grid}; }
Axis k_axis(int dimension, const Grid1D& grid) { return Axis{AxisKind::k, dimension, grid}; }
Axis p_axis(const Grid1D& grid) { return Axis{AxisKind::p, 0, grid}; }

Axis index_axis(std::size_t extent) {
  if (extent == 0) throw InvalidArgument("index axis needs a positive extent");
  return Axis{AxisKind::index, 0, Grid1D(1.0, 2), extent};
}

std::size_t shape_product(std::span<const std::size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

StateVector::StateVector(std::vector<Axis> layout, CVec amplitudes)
    : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)) {
  const auto s = shape();
  if (shape_product(s) != static_cast<std::size_t>(amplitudes_.size())) {
    throw InvalidArgument("state amplitudes length " + std::to_string(amplitudes_.size()) +
                          " does not match layout size " + std::to_string(shape_product(s)));
  }
}

StateVector StateVector::zeros(std::vector<Axis> layout) {
  std::size_t n = 1;
  for (const auto& a : layout) n *= a.size();
  return StateVector(std::move(layout), CVec::Zero(static_cast<Eigen::Index>(n)));
}

std::vector<std::size_t> StateVector::shape() const {
  std::vector<std::size_t> s;
  s.reserve(layout_.size());
  for (const auto& a : layout_) s.push_back(a.size());
  return s;
}

double StateVector::norm() const { return amplitudes_.norm(); }

StateVector StateVector::with_amplitudes(CVec amplitudes) const {
  return StateVector(layout_, std::move(amplitudes));
}

double l2_norm(const StateVector& state) { return state.norm(); }

StateVector permute_axes(const StateVector& state, std::span<const std::size_t> order) {
  const auto old_shape = state.shape();
  const std::size_t rank = old_shape.size();
  if (order.size() != rank) throw InvalidArgument("permutation rank mismatch");
  std::vector<bool> seen(rank, false);
  for (auto o : order) {
    if (o >= rank || seen[o]) throw InvalidArgument("not a permutation of the axes");
    seen[o] = true;
  }

  std::vector<std::size_t> old_strides(rank, 1);
  for (std::size_t a = rank; a-- > 1;) old_strides[a - 1] = old_strides[a] * old_shape[a];

  std::vector<Axis> layout;
  std::vector<std::size_t> new_shape;
  for (auto o : order) {
    layout.push_back(state.layout()[o]);
    new_shape.push_back(old_shape[o]);
  }

  const auto& src = state.amplitudes();
  CVec dst(src.size());
  std::vector<std::size_t> idx(rank, 0);
  for (Eigen::Index flat = 0; flat < dst.size(); ++flat) {
    std::size_t old_flat = 0;
    for (std::size_t a = 0; a < rank; ++a) old_flat += idx[a] * old_strides[order[a]];
    dst[flat] = src[static_cast<Eigen::Index>(old_flat)];
    for (std::size_t a = rank; a-- > 0;) {
      if (++idx[a] < new_shape[a]) break;
      idx[a] = 0;
    }
  }
  return StateVector(std::move(layout), std::move(dst));
}

}  // namespace schro
