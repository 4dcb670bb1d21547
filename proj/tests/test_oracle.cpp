#include <doctest.h>

#include <cmath>
#include <numbers>

#include "schro/error.hpp"
#include "schro/oracle.hpp"
#include "test_helpers.hpp"

using namespace schro;
using testing::Gen;

namespace {

const double pi = std::numbers::pi;

StateVector on_grid(const Grid1D& g, const std::function<cd(double)>& f) {
  CVec v(static_cast<Eigen::Index>(g.count()));
  for (std::size_t i = 0; i < g.count(); ++i) v[static_cast<Eigen::Index>(i)] = f(g.point(i));
  return StateVector({x_axis(1, g)}, v);
}

StateVector phase_space(const TransportModel& m, const std::function<cd(double, double)>& f) {
  const Grid1D& gx = m.x_grids()[0];
  const Grid1D& gk = m.k_grids()[0];
  CVec v(static_cast<Eigen::Index>(gx.count() * gk.count()));
  for (std::size_t i = 0; i < gx.count(); ++i)
    for (std::size_t j = 0; j < gk.count(); ++j)
      v[static_cast<Eigen::Index>(i * gk.count() + j)] = f(gx.point(i), gk.point(j));
  return StateVector(m.phase_space_layout(), v);
}

// Distance of W from its k-average, taken pointwise in x.
double deviation_from_k_average(const StateVector& w, std::size_t jd, std::size_t kd) {
  double sum = 0.0;
  for (std::size_t i = 0; i < jd; ++i) {
    cd mean = 0.0;
    for (std::size_t j = 0; j < kd; ++j) mean += w.amplitudes()[static_cast<Eigen::Index>(i * kd + j)];
    mean /= static_cast<double>(kd);
    for (std::size_t j = 0; j < kd; ++j) sum += std::norm(w.amplitudes()[static_cast<Eigen::Index>(i * kd + j)] - mean);
  }
  return std::sqrt(sum);
}

}  // namespace

TEST_CASE("expm_trivial_generators") {
  Gen gen(61);
  const CVec u = gen.vector(5);
  CHECK(expm_apply(CMat::Zero(5, 5), u, 3.0) == u);
  CHECK(testing::rel_error(expm_apply(CMat::Identity(5, 5), u, 1.0), std::exp(-1.0) * u) < 1e-14);
  CHECK(expm_apply(gen.matrix(5), u, 0.0) == u);
}

TEST_CASE("expm_agrees_with_adaptive_rk") {
  Gen gen(62);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat a = gen.matrix(3);
    const CVec u = gen.vector(3);
    const double t = gen.uniform(0.1, 1.0);
    const CVec want = testing::dopri45([&](const CVec& y) -> CVec { return -a * y; }, u, t, 1e-13);
    CHECK(testing::rel_error(expm_apply(a, u, t), want) < 1e-9);
  }
}

TEST_CASE("expm_normal_path_matches_eigen_unitary") {
  Gen gen(63);
  for (int trial = 0; trial < 20; ++trial) {
    const CMat h = gen.hermitian(6);
    const CVec u = gen.vector(6);
    const double t = gen.uniform(0.0, 3.0);
    const CVec got = expm_apply(cd{0.0, 1.0} * h, u, t);
    CHECK(testing::rel_error(got, testing::unitary_of(h, t) * u) < 1e-12);
  }
}

TEST_CASE("expm_jordan_block_closed_form") {
  CMat a(2, 2);
  a << 1.0, 1.0, 0.0, 1.0;
  CVec u(2);
  u << 0.3, -1.2;
  for (double t : {0.25, 1.0, 4.0}) {
    CVec want(2);
    want << std::exp(-t) * (u[0] - t * u[1]), std::exp(-t) * u[1];
    CHECK(testing::rel_error(expm_apply(a, u, t), want) < 1e-12);
  }
}

TEST_CASE("expm_semigroup_random") {
  Gen gen(64);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = gen.integer(1, 8);
    const CMat a = gen.dissipative(n);
    const CVec u = gen.vector(n);
    const double t1 = gen.uniform(0.0, 1.0), t2 = gen.uniform(0.0, 1.0);
    const CVec whole = expm_apply(a, u, t1 + t2);
    const CVec split = expm_apply(a, expm_apply(a, u, t2), t1);
    CHECK(testing::rel_error(split, whole) < 1e-10);
  }
}

TEST_CASE("expm_rejects_bad_shapes") {
  CHECK_THROWS_AS(expm_apply(CMat::Zero(2, 3), CVec::Zero(2), 1.0), InvalidArgument);
  CHECK_THROWS_AS(expm_apply(CMat::Zero(2, 2), CVec::Zero(3), 1.0), InvalidArgument);
  const auto n = static_cast<Eigen::Index>(kOracleDimensionCap + 1);
  CHECK_THROWS_AS(expm_apply(CMat::Zero(n, n), CVec::Zero(n), 1.0), ResourceLimit);
}

TEST_CASE("heat_analytic_examples") {
  const Grid1D g(1.0, 64);
  const std::vector<Grid1D> grids = {g};
  const StateVector c = on_grid(g, [](double) { return cd{2.5, 0.0}; });
  CHECK(testing::rel_error(heat_analytic(c, grids, 7.0).amplitudes(), c.amplitudes()) < 1e-14);

  const StateVector u = on_grid(g, [](double x) { return cd{std::cos(pi * x), 0.0}; });
  const StateVector ut = heat_analytic(u, grids, 0.1);
  const double amp = std::exp(-pi * pi * 0.1);
  CHECK(amp == doctest::Approx(0.37266).epsilon(1e-4));
  CHECK(testing::rel_error(ut.amplitudes(), amp * u.amplitudes()) < 1e-13);
  CHECK(heat_analytic(u, grids, 0.0).amplitudes() == u.amplitudes());
}

TEST_CASE("heat_analytic_2d_product_of_modes") {
  const Grid1D gx(1.0, 16), gy(2.0, 8);
  const std::vector<Grid1D> grids = {gx, gy};
  CVec v(16 * 8), want(16 * 8);
  const double t = 0.05;
  const double decay = std::exp(-(pi * pi + (pi / 2) * (pi / 2)) * t);
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      const double f = std::cos(pi * gx.point(i)) * std::sin(pi / 2 * gy.point(j));
      v[static_cast<Eigen::Index>(i * 8 + j)] = f;
      want[static_cast<Eigen::Index>(i * 8 + j)] = decay * f;
    }
  const StateVector s({x_axis(1, gx), x_axis(2, gy)}, v);
  CHECK(testing::rel_error(heat_analytic(s, grids, t).amplitudes(), want) < 1e-13);
  const std::vector<Grid1D> wrong = {gy, gx};
  CHECK_THROWS_AS(heat_analytic(s, wrong, t), InvalidArgument);
}

TEST_CASE("heat_analytic_norm_nonincreasing_random") {
  Gen gen(65);
  for (int trial = 0; trial < 50; ++trial) {
    const Grid1D g(gen.uniform(0.5, 4.0), gen.even(32));
    const std::vector<Grid1D> grids = {g};
    const StateVector u({x_axis(1, g)}, gen.vector(static_cast<Eigen::Index>(g.count())));
    double previous = u.norm();
    for (double t = 0.05; t < 1.0; t += 0.1) {
      const double n = heat_analytic(u, grids, t).norm();
      CHECK(n <= previous * (1 + 1e-14));
      previous = n;
    }
  }
}

TEST_CASE("transport_reference_free_streaming_translates") {
  const Grid1D gx(1.0, 32), gk(1.0, 2);
  const auto m = TransportModel::from_sigma({gx}, {gk}, RMat::Zero(2, 2));
  auto profile = [](double x) { return std::cos(pi * x) + 0.5 * std::sin(2 * pi * x); };
  const StateVector w0 = phase_space(m, [&](double x, double) { return cd{profile(x), 0.0}; });
  const double t = 0.7;
  const StateVector wt = transport_reference(m, w0, t);
  const StateVector want = phase_space(m, [&](double x, double k) { return cd{profile(x - k * t), 0.0}; });
  CHECK(testing::rel_error(wt.amplitudes(), want.amplitudes()) < 1e-6);
}

TEST_CASE("transport_reference_conserves_mass") {
  Gen gen(66);
  for (int trial = 0; trial < 5; ++trial) {
    const Grid1D gx(1.0, 16), gk(1.0, 8);
    const auto m = TransportModel::from_kernel(
        {gx}, {gk}, [](std::span<const double> k, std::span<const double> kp) { return 1.0 + 0.5 * k[0] * kp[0]; });
    CVec v = gen.real_vector(16 * 8).cwiseAbs().cast<cd>();
    const StateVector w0(m.phase_space_layout(), v);
    const double dxdk = gx.spacing() * gk.spacing();
    const double mass0 = w0.amplitudes().real().sum() * dxdk;
    for (double t : {0.25, 0.5, 1.0}) {
      const double mass = transport_reference(m, w0, t).amplitudes().real().sum() * dxdk;
      CHECK(std::abs(mass - mass0) < 1e-8 * std::abs(mass0));
    }
  }
}

TEST_CASE("transport_reference_relaxes_towards_k_average") {
  const Grid1D gx(1.0, 8), gk(1.0, 16);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 1.0);
  const StateVector w0 = phase_space(m, [](double, double k) { return cd{1.0 + k + 0.3 * k * k, 0.0}; });
  double previous = deviation_from_k_average(w0, 8, 16);
  for (double t = 0.2; t <= 2.0 + 1e-9; t += 0.2) {
    const double dev = deviation_from_k_average(transport_reference(m, w0, t), 8, 16);
    CHECK(dev < previous);
    previous = dev;
  }
  CHECK(previous < 0.5 * deviation_from_k_average(w0, 8, 16));
}

TEST_CASE("transport_reference_detects_instability") {
  const Grid1D gx(1.0, 32), gk(1.0, 4);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 1.0);
  Gen gen(67);
  const StateVector w0(m.phase_space_layout(), gen.vector(32 * 4));
  CHECK_THROWS_AS(transport_reference(m, w0, 10.0, std::size_t{2}), StabilityError);
  CHECK_THROWS_AS(transport_reference(m, w0, 1.0, std::size_t{0}), InvalidArgument);
  CHECK(transport_reference(m, w0, 0.0).amplitudes() == w0.amplitudes());
}

TEST_CASE("transport_rhs_scattering_matches_explicit_sum") {
  Gen gen(68);
  const Grid1D gx(1.0, 4), gk(1.0, 6);
  const auto m = TransportModel::from_kernel(
      {gx}, {gk}, [](std::span<const double> k, std::span<const double> kp) { return std::exp(-(k[0] - kp[0]) * (k[0] - kp[0])); });
  // x-independent data sees only the collision term
  CVec w(4 * 6);
  CVec col = gen.vector(6);
  for (int i = 0; i < 4; ++i) w.segment(i * 6, 6) = col;
  const CVec got = transport_rhs(m, w);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 6; ++j) {
      cd want = 0.0;
      double total = 0.0;
      for (int l = 0; l < 6; ++l) {
        want += m.sigma()(j, l) * col[l];
        total += m.sigma()(l, j);
      }
      want -= total * col[j];
      CHECK(std::abs(got[i * 6 + j] - want) < 1e-12);
    }
}
