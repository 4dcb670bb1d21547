#include "schro/oracle.hpp"

#include <cmath>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "schro/error.hpp"
#include "schro/spectral.hpp"

namespace schro {

CVec expm_apply(const CMat& a, const CVec& u0, double t) {
  if (a.rows() != a.cols()) throw InvalidArgument("expm_apply: matrix must be square");
  if (a.rows() != u0.size()) throw InvalidArgument("expm_apply: vector size mismatch");
  if (static_cast<std::size_t>(a.rows()) > kOracleDimensionCap) {
    throw ResourceLimit("expm_apply: dimension " + std::to_string(a.rows()) + " exceeds dense cap " +
                        std::to_string(kOracleDimensionCap));
  }
  if (a.size() == 0 || t == 0.0) return u0;
  const double scale = a.cwiseAbs().maxCoeff();
  if (scale == 0.0) return u0;
  const double defect = (a * a.adjoint() - a.adjoint() * a).cwiseAbs().maxCoeff();
  if (defect <= 1e-12 * scale * scale * static_cast<double>(a.rows())) {
    Eigen::ComplexSchur<CMat> schur(a);
    const CMat& q = schur.matrixU();
    const CMat& tri = schur.matrixT();
    CVec c = q.adjoint() * u0;
    for (Eigen::Index k = 0; k < c.size(); ++k) c[k] *= std::exp(-t * tri(k, k));
    return q * c;
  }
  const CMat e = (-t * a).exp();
  return e * u0;
}

StateVector heat_analytic(const StateVector& u0, std::span<const Grid1D> grids, double t) {
  const auto& layout = u0.layout();
  if (layout.size() != grids.size()) throw InvalidArgument("heat_analytic: one grid per axis required");
  std::vector<std::size_t> shape;
  for (std::size_t a = 0; a < grids.size(); ++a) {
    if (layout[a].kind != AxisKind::x || !(layout[a].grid == grids[a])) {
      throw InvalidArgument("heat_analytic: axis " + layout[a].name() + " is not the matching x axis");
    }
    shape.push_back(grids[a].count());
  }
  if (t == 0.0) return u0;
  CVec data = u0.amplitudes();
  for (std::size_t a = 0; a < shape.size(); ++a) spectral_forward_axis(data, shape, a, PhaseSign::negative);
  std::vector<std::vector<double>> modes;
  for (const auto& g : grids) modes.push_back(fourier_modes(g).sorted());
  std::vector<std::size_t> idx(shape.size(), 0);
  for (Eigen::Index flat = 0; flat < data.size(); ++flat) {
    double xi2 = 0.0;
    for (std::size_t a = 0; a < shape.size(); ++a) xi2 += modes[a][idx[a]] * modes[a][idx[a]];
    data[flat] *= std::exp(-xi2 * t);
    for (std::size_t a = shape.size(); a-- > 0;) {
      if (++idx[a] < shape[a]) break;
      idx[a] = 0;
    }
  }
  for (std::size_t a = 0; a < shape.size(); ++a) spectral_inverse_axis(data, shape, a, PhaseSign::negative);
  return u0.with_amplitudes(std::move(data));
}

namespace {

std::vector<std::size_t> phase_shape(const TransportModel& model) {
  std::vector<std::size_t> shape;
  for (const auto& g : model.x_grids()) shape.push_back(g.count());
  for (const auto& g : model.k_grids()) shape.push_back(g.count());
  return shape;
}

}  // namespace

CVec transport_rhs(const TransportModel& model, const CVec& w) {
  const std::size_t d = static_cast<std::size_t>(model.dimension());
  const std::size_t jd = model.x_size();
  const std::size_t kd = model.k_size();
  if (static_cast<std::size_t>(w.size()) != jd * kd) throw InvalidArgument("transport_rhs: size mismatch");
  const auto shape = phase_shape(model);

  // Streaming term in x-Fourier space: -i (xi . k) W_hat.
  CVec hat = w;
  for (std::size_t a = 0; a < d; ++a) spectral_forward_axis(hat, shape, a, PhaseSign::negative);
  const auto xi = model.xi_modes();
  std::vector<std::vector<double>> kp(kd);
  for (std::size_t j = 0; j < kd; ++j) kp[j] = model.k_point(j);
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t i = 0; i < jd; ++i) {
    for (std::size_t j = 0; j < kd; ++j) {
      double dot = 0.0;
      for (std::size_t a = 0; a < d; ++a) dot += xi[a][idx[a]] * kp[j][a];
      hat[static_cast<Eigen::Index>(i * kd + j)] *= cd{0.0, -dot};
    }
    for (std::size_t a = d; a-- > 0;) {
      if (++idx[a] < xi[a].size()) break;
      idx[a] = 0;
    }
  }
  for (std::size_t a = 0; a < d; ++a) spectral_inverse_axis(hat, shape, a, PhaseSign::negative);

  // Collision term, applied pointwise in x.
  const auto rows = static_cast<Eigen::Index>(jd);
  const auto cols = static_cast<Eigen::Index>(kd);
  using RowMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMat> wm(w.data(), rows, cols);
  const CMat sigma = model.sigma().cast<cd>();
  RowMat coll = wm * sigma.transpose();
  for (Eigen::Index j = 0; j < cols; ++j) coll.col(j) -= model.sigma_total()[j] * wm.col(j);
  Eigen::Map<const CVec> cflat(coll.data(), coll.size());
  return hat + cflat;
}

StateVector transport_reference(const TransportModel& model, const StateVector& w0, double t,
                                std::optional<std::size_t> steps) {
  if (!(w0.layout() == model.phase_space_layout())) {
    throw InvalidArgument("transport_reference: w0 layout must be (x_1..x_d, k_1..k_d) of the model");
  }
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("evolution time must be >= 0");
  if (t == 0.0) return w0;
  std::size_t n_steps = 0;
  if (steps) {
    if (*steps == 0) throw InvalidArgument("transport_reference: steps must be positive");
    n_steps = *steps;
  } else {
    std::mt19937_64 rng(12345);
    std::normal_distribution<double> g;
    CVec v(w0.amplitudes().size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cd{g(rng), g(rng)};
    v.normalize();
    double rho = 0.0;
    for (int it = 0; it < 60; ++it) {
      CVec fv = transport_rhs(model, v);
      const double nv = fv.norm();
      if (nv == 0.0) break;
      rho = std::max(rho, nv);
      v = fv / nv;
    }
    n_steps = static_cast<std::size_t>(std::ceil(10.0 * t * std::max(rho, 1e-12)));
    n_steps = std::max<std::size_t>(n_steps, 1);
  }
  const double dt = t / static_cast<double>(n_steps);
  CVec w = w0.amplitudes();
  const double start = std::max(w.norm(), 1e-300);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const CVec k1 = transport_rhs(model, w);
    const CVec k2 = transport_rhs(model, w + 0.5 * dt * k1);
    const CVec k3 = transport_rhs(model, w + 0.5 * dt * k2);
    const CVec k4 = transport_rhs(model, w + dt * k3);
    w += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!(w.norm() <= 10.0 * start)) {
      throw StabilityError("transport RK4 blew up at step " + std::to_string(s + 1) + " of " +
                           std::to_string(n_steps));
    }
  }
  return w0.with_amplitudes(std::move(w));
}

}  // namespace schro
