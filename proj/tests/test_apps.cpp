#include <doctest.h>

#include <cmath>
#include <numbers>

#include "schro/apps.hpp"
#include "schro/error.hpp"
#include "schro/oracle.hpp"
#include "test_helpers.hpp"

using namespace schro;
using testing::Gen;

namespace {

const double pi = std::numbers::pi;

StateVector heat_initial(const Grid1D& g) {
  CVec v(static_cast<Eigen::Index>(g.count()));
  for (std::size_t i = 0; i < g.count(); ++i) v[static_cast<Eigen::Index>(i)] = 1.0 + std::cos(pi * g.point(i));
  return StateVector({x_axis(1, g)}, v);
}

HeatResult standard_heat(std::size_t m, std::size_t n, double t = 0.1, double l = 12.0) {
  const Grid1D g(1.0, m);
  const std::vector<Grid1D> grids = {g};
  const std::vector<cd> v(m, 0.0);
  PConfig pc;
  pc.p_grid = Grid1D(l, n);
  return run_heat(heat_initial(g), v, grids, pc, t);
}

StateVector index_state(const CVec& v) { return StateVector({index_axis(static_cast<std::size_t>(v.size()))}, v); }

StateVector phase_space(const TransportModel& m, const std::function<double(double, double)>& f) {
  const Grid1D& gx = m.x_grids()[0];
  const Grid1D& gk = m.k_grids()[0];
  CVec v(static_cast<Eigen::Index>(gx.count() * gk.count()));
  for (std::size_t i = 0; i < gx.count(); ++i)
    for (std::size_t j = 0; j < gk.count(); ++j)
      v[static_cast<Eigen::Index>(i * gk.count() + j)] = f(gx.point(i), gk.point(j));
  return StateVector(m.phase_space_layout(), v);
}

double k_deviation(const StateVector& w, std::size_t jd, std::size_t kd) {
  double sum = 0.0;
  for (std::size_t i = 0; i < jd; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < kd; ++j) mean += w.amplitudes()[static_cast<Eigen::Index>(i * kd + j)].real();
    mean /= static_cast<double>(kd);
    for (std::size_t j = 0; j < kd; ++j) {
      const double d = w.amplitudes()[static_cast<Eigen::Index>(i * kd + j)].real() - mean;
      sum += d * d;
    }
  }
  return std::sqrt(sum);
}

double trace_distance(const CMat& a, const CMat& b) {
  Eigen::SelfAdjointEigenSolver<CMat> eig(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * eig.eigenvalues().cwiseAbs().sum();
}

}  // namespace

TEST_CASE("heat_standard_instance") {
  const HeatResult r = standard_heat(64, 256);
  CHECK(r.l2_relative_error < 1e-3);
  const Grid1D g(1.0, 64);
  CVec want(64);
  for (std::size_t i = 0; i < 64; ++i) want[i] = 1.0 + std::exp(-pi * pi * 0.1) * std::cos(pi * g.point(i));
  CHECK(testing::rel_error(r.u_reference.amplitudes(), want) < 1e-13);
  CHECK(testing::rel_error(r.u_recovered.amplitudes(), want) < 1e-3);
  CHECK(std::abs(r.spectral_norm_final / r.spectral_norm_initial - 1.0) < 1e-10);
  REQUIRE(r.success_probability.has_value());
  CHECK(*r.success_probability > 0.0);
  CHECK(*r.success_probability <= 1.0);
  REQUIRE(r.cost.has_value());
  REQUIRE(r.cost->norm_ratio.has_value());
  CHECK(*r.cost->norm_ratio == doctest::Approx(r.u0_norm / r.u_norm));
}

TEST_CASE("heat_zero_time_round_trip") {
  CHECK(standard_heat(64, 256, 0.0).l2_relative_error < 1e-10);
  CHECK(standard_heat(16, 32, 0.0, 8.0).l2_relative_error < 1e-10);
}

TEST_CASE("heat_doubling_n_reduces_error") {
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t n : {64, 128, 256}) {
    const double e = standard_heat(64, n).l2_relative_error;
    CHECK(e < previous);
    previous = e;
  }
}

TEST_CASE("heat_refinement_battery_nonincreasing") {
  // Simultaneous doubling of M and N on smooth periodic data. L is wide
  // enough for the fastest decay path (4 pi^2 t < 8) so the p window does
  // not cap the error.
  Gen gen(71);
  for (int trial = 0; trial < 6; ++trial) {
    const double a1 = gen.uniform(-1, 1), a2 = gen.uniform(-0.5, 0.5), t = gen.uniform(0.02, 0.2);
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t m : {16, 32, 64}) {
      const Grid1D g(1.0, m);
      CVec v(static_cast<Eigen::Index>(m));
      for (std::size_t i = 0; i < m; ++i) {
        const double x = g.point(i);
        v[static_cast<Eigen::Index>(i)] = 2.0 + a1 * std::cos(pi * x) + a2 * std::sin(2 * pi * x);
      }
      const std::vector<Grid1D> grids = {g};
      PConfig pc;
      pc.p_grid = Grid1D(24.0, 8 * m);
      const HeatResult r = run_heat(StateVector({x_axis(1, g)}, v), std::vector<cd>(m, 0.0), grids, pc, t);
      CHECK(r.l2_relative_error <= previous);
      previous = r.l2_relative_error;
    }
  }
}

TEST_CASE("heat_with_potential_uses_dense_reference") {
  const Grid1D g(1.0, 16);
  const std::vector<Grid1D> grids = {g};
  const auto v = sample_potential(grids, [](std::span<const double> x) { return 1.0 + x[0] * x[0]; });
  StateVector u0 = heat_initial(g);
  PConfig pc;
  pc.p_grid = Grid1D(12.0, 512);
  const HeatResult r = run_heat(u0, v, grids, pc, 0.1);
  const HermitianMatrix h = assemble_schrodinger_hamiltonian(v, grids, 1);
  const CVec want = expm_apply(h.to_dense(), u0.amplitudes(), 0.1);
  CHECK(testing::rel_error(r.u_reference.amplitudes(), want) < 1e-12);
  CHECK(r.l2_relative_error < 1e-3);
}

TEST_CASE("estimate_t_final_examples") {
  CHECK(estimate_t_final(1.0, 0.5, 0.01) == doctest::Approx(std::log(200.0)).epsilon(1e-12));
  CHECK(estimate_t_final(1.0, 0.5, 0.01) == doctest::Approx(5.2983).epsilon(1e-4));
  CHECK(estimate_t_final(2.0, 0.5, 0.01) == doctest::Approx(2.6492).epsilon(1e-4));
  CHECK(estimate_t_final(1.0, 1.0, std::exp(-1.0)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(estimate_t_final(0.0, 0.5, 0.01), InvalidArgument);
  CHECK_THROWS_AS(estimate_t_final(-1.0, 0.5, 0.01), InvalidArgument);
}

TEST_CASE("ground_state_two_level_closed_form") {
  CMat h = CMat::Zero(2, 2);
  h(1, 1) = 1.0;
  CVec u(2);
  u << 1.0, 1.0;
  u /= std::sqrt(2.0);
  const GroundStateReport r = prepare_ground_state(HermitianMatrix(h), index_state(u), 0.01);
  CHECK(r.t_final == doctest::Approx(5.2983).epsilon(1e-4));
  const double closed = 1.0 / (1.0 + std::exp(-2.0 * r.t_final));
  CHECK(closed == doctest::Approx(1 - 2.5e-5).epsilon(1e-6));
  CHECK(r.exact_fidelity == doctest::Approx(closed).epsilon(1e-12));
  CHECK(r.fidelity >= 0.99);
  CHECK(std::abs(r.fidelity - closed) < 1e-4);
  CHECK(r.gap == doctest::Approx(1.0));
  CHECK(r.alpha0_sq == doctest::Approx(0.5));
}

TEST_CASE("ground_state_from_exact_ground_vector") {
  Gen gen(72);
  const CMat h = gen.psd(4);
  Eigen::SelfAdjointEigenSolver<CMat> eig(h);
  const CVec g = eig.eigenvectors().col(0);
  const GroundStateReport r = prepare_ground_state(HermitianMatrix(h), index_state(g), 1e-3);
  CHECK(r.fidelity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(r.exact_fidelity == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ground_state_battery_reaches_requested_fidelity") {
  Gen gen(73);
  int accepted = 0;
  for (int trial = 0; trial < 60 && accepted < 12; ++trial) {
    const CMat h = gen.psd(4);
    const CVec u = gen.vector(4).normalized();
    const auto ev = testing::eigenvalues(h);
    Eigen::SelfAdjointEigenSolver<CMat> eig(h);
    const double alpha0_sq = std::norm(eig.eigenvectors().col(0).dot(u));
    if (ev[1] - ev[0] < 0.1 || alpha0_sq < 0.1) continue;
    ++accepted;
    for (double eps : {1e-2, 1e-3}) {
      const GroundStateReport r = prepare_ground_state(HermitianMatrix(h), index_state(u), eps);
      CHECK(r.t_final > 0.0);
      CHECK(r.fidelity >= 1.0 - eps);
      CHECK(r.exact_fidelity >= 1.0 - eps);
    }
  }
  CHECK(accepted >= 10);
}

TEST_CASE("ground_state_rejects_bad_inputs") {
  CMat h = CMat::Zero(2, 2);
  h(1, 1) = 1.0;
  CVec orth(2);
  orth << 0.0, 1.0;
  CHECK_THROWS_AS(prepare_ground_state(HermitianMatrix(h), index_state(orth), 0.01), InvalidArgument);
  CVec u(2);
  u << 1.0, 1.0;
  CHECK_THROWS_AS(prepare_ground_state(HermitianMatrix(CMat::Identity(2, 2)), index_state(u), 0.01), Unsupported);
}

TEST_CASE("gibbs_two_level_closed_form") {
  CMat h = CMat::Zero(2, 2);
  h(1, 1) = 1.0;
  const GibbsReport r = prepare_gibbs(HermitianMatrix(h), 1.0);
  const double z = 1.0 + std::exp(-1.0);
  CHECK(r.partition_function == doctest::Approx(z).epsilon(1e-12));
  CHECK(r.rho_exact(0, 0).real() == doctest::Approx(0.7311).epsilon(1e-4));
  CHECK(r.rho_exact(1, 1).real() == doctest::Approx(0.2689).epsilon(1e-3));
  CHECK(trace_distance(r.rho, r.rho_exact) < 1e-6);
  CHECK(r.trace_distance_to_exact < 1e-6);
}

TEST_CASE("gibbs_infinite_temperature_limit") {
  Gen gen(74);
  const CMat h = gen.hermitian(3);
  const GibbsReport r = prepare_gibbs(HermitianMatrix(h), 1e-6);
  CHECK((r.rho - CMat::Identity(3, 3) / 3.0).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("gibbs_real_symmetric_matches_eigensolve") {
  Gen gen(75);
  for (int trial = 0; trial < 5; ++trial) {
    const CMat h = gen.real_symmetric(3).cast<cd>();
    const double beta = gen.uniform(0.2, 2.0);
    const GibbsReport r = prepare_gibbs(HermitianMatrix(h), beta);
    Eigen::SelfAdjointEigenSolver<CMat> eig(h);
    CVec w(3);
    for (int i = 0; i < 3; ++i) w[i] = std::exp(-beta * eig.eigenvalues()[i]);
    const double z = w.real().sum();
    const CMat want = eig.eigenvectors() * (w / z).asDiagonal() * eig.eigenvectors().adjoint();
    CHECK(r.partition_function == doctest::Approx(z).epsilon(1e-10));
    CHECK(trace_distance(r.rho, want) < 1e-4);
  }
}

TEST_CASE("gibbs_density_matrix_valid_at_any_resolution") {
  Gen gen(76);
  for (int trial = 0; trial < 8; ++trial) {
    const CMat h = gen.hermitian(3);
    PConfig pc;
    const std::size_t n = gen.even(64);
    pc.p_grid = Grid1D(gen.uniform(4.0, 14.0), n);
    const GibbsReport r = prepare_gibbs(HermitianMatrix(h), gen.uniform(0.1, 3.0), pc);
    CHECK((r.rho - r.rho.adjoint()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(r.rho.trace() - 1.0) < 1e-10);
    CHECK(testing::eigenvalues(r.rho).front() > -1e-10);
  }
}

TEST_CASE("moments_examples") {
  const Grid1D gx(1.0, 4), gk(2.0, 8);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 0.0);
  // uniform over the k points that come in +/- pairs
  const StateVector flat = phase_space(m, [&](double, double k) { return k == -2.0 ? 0.0 : 1.0; });
  const MomentReport a = compute_moments(flat);
  CHECK(std::abs(a.momentum[0]) < 1e-14);
  CHECK(a.mass == doctest::Approx(4 * 7 * gx.spacing() * gk.spacing()));
  CHECK(a.energy > 0.0);

  const double x0 = gx.point(2), k0 = gk.point(5);
  const StateVector delta = phase_space(m, [&](double x, double k) { return x == x0 && k == k0 ? 1.0 : 0.0; });
  const MomentReport b = compute_moments(delta);
  const double cell = gx.spacing() * gk.spacing();
  CHECK(b.mass == doctest::Approx(cell));
  CHECK(b.momentum[0] == doctest::Approx(k0 * cell));
  CHECK(b.energy == doctest::Approx(0.5 * k0 * k0 * cell));

  StateVector bad = flat.with_amplitudes(flat.amplitudes() * cd{1.0, 1e-3});
  CHECK_THROWS_AS(compute_moments(bad), InvalidArgument);
  CHECK_THROWS_AS(compute_moments(StateVector({x_axis(1, gx)}, CVec::Zero(4))), InvalidArgument);
}

TEST_CASE("moments_signs_for_nonnegative_density_random") {
  Gen gen(77);
  for (int trial = 0; trial < 50; ++trial) {
    const Grid1D gx(gen.uniform(0.5, 3), gen.even(8)), gk(gen.uniform(0.5, 3), gen.even(8));
    const auto m = TransportModel::constant_isotropic({gx}, {gk}, 0.0);
    const CVec v = gen.real_vector(static_cast<Eigen::Index>(gx.count() * gk.count())).cwiseAbs().cast<cd>();
    const MomentReport r = compute_moments(StateVector(m.phase_space_layout(), v));
    CHECK(r.mass > 0.0);
    CHECK(r.energy >= 0.0);
  }
}

TEST_CASE("moments_of_reference_run_conserve_mass") {
  const Grid1D gx(1.0, 8), gk(1.0, 8);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 0.8);
  const StateVector w0 = phase_space(m, [](double x, double k) { return 1.0 + 0.5 * std::cos(pi * x) * std::exp(-k * k); });
  const double mass0 = compute_moments(w0).mass;
  for (double t : {0.3, 0.6, 1.2}) {
    StateVector w = transport_reference(m, w0, t);
    w = w.with_amplitudes(w.amplitudes().real().cast<cd>());
    CHECK(std::abs(compute_moments(w).mass - mass0) < 1e-8 * mass0);
  }
}

TEST_CASE("observable_overlap_examples") {
  const Grid1D g(1.0, 2);
  auto s = [&](double a, double b) {
    CVec v(2);
    v << a, b;
    return StateVector({x_axis(1, g)}, v);
  };
  CHECK(observable_overlap(s(0.3, 0.4), s(0.3, 0.4)) == doctest::Approx(1.0));
  CHECK(observable_overlap(s(1, 0), s(0, 2)) == 0.0);
  CHECK(observable_overlap(s(1, 0), s(1 / std::sqrt(2.0), 1 / std::sqrt(2.0))) == doctest::Approx(0.5));
  CHECK_THROWS_AS(observable_overlap(s(0, 0), s(1, 0)), InvalidArgument);
  CHECK_THROWS_AS(observable_overlap(s(1, 0), StateVector({x_axis(1, Grid1D(2.0, 2))}, CVec::Ones(2))), InvalidArgument);
}

TEST_CASE("observable_overlap_symmetry_phase_scale_random") {
  Gen gen(78);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = gen.even(16);
    const Grid1D g(1.0, n);
    const StateVector a({x_axis(1, g)}, gen.vector(static_cast<Eigen::Index>(n)));
    const StateVector b({x_axis(1, g)}, gen.vector(static_cast<Eigen::Index>(n)));
    const double o = observable_overlap(a, b);
    CHECK(o >= 0.0);
    CHECK(o <= 1.0);
    CHECK(observable_overlap(b, a) == doctest::Approx(o).epsilon(1e-12));
    const cd phase = std::exp(cd{0.0, gen.uniform(0, 2 * pi)});
    const double scale = std::pow(10.0, gen.uniform(-3, 3));
    CHECK(observable_overlap(a.with_amplitudes(phase * scale * a.amplitudes()), b) == doctest::Approx(o).epsilon(1e-12));
    CHECK(observable_overlap(a, b.with_amplitudes(scale * b.amplitudes())) == doctest::Approx(o).epsilon(1e-12));
  }
}

TEST_CASE("transport_free_streaming_matches_reference") {
  const Grid1D gx(1.0, 16), gk(1.0, 8);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 0.0);
  const StateVector w0 = phase_space(m, [](double x, double k) { return (1.0 + 0.5 * std::cos(pi * x)) * std::exp(-2 * k * k); });
  const TransportResult r = run_transport(m, w0, {}, 0.5);
  CHECK(r.l2_relative_error < 1e-3);
  CHECK(std::abs(r.spectral_norm_final / r.spectral_norm_initial - 1.0) < 1e-10);
}

TEST_CASE("transport_standard_instance") {
  const Grid1D gx(1.0, 16), gk(1.0, 16);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 1.0);
  const StateVector w0 = phase_space(m, [](double x, double k) {
    return (1.0 + 0.5 * std::cos(pi * x)) * std::exp(-(k - 0.3) * (k - 0.3) / (2 * 0.35 * 0.35));
  });
  PConfig pc;
  pc.p_grid = Grid1D(8.0, 64);
  const TransportResult r = run_transport(m, w0, pc, 1.0);
  CHECK(r.l2_relative_error < 1e-2);
  CHECK(r.mass_drift < 1e-3);
  CHECK(r.moments.mass > 0.0);
}

TEST_CASE("transport_homogeneous_data_relaxes") {
  const Grid1D gx(1.0, 4), gk(1.0, 16);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 1.0);
  const StateVector w0 = phase_space(m, [](double, double k) { return 1.0 + k + 0.3 * k * k; });
  PConfig pc;
  pc.p_grid = Grid1D(8.0, 64);
  double previous = k_deviation(w0, 4, 16);
  for (double t : {0.25, 0.5, 1.0, 2.0}) {
    const TransportResult r = run_transport(m, w0, pc, t);
    const double dev = k_deviation(r.w_recovered, 4, 16);
    CHECK(dev < previous);
    CHECK(r.mass_drift < 1e-3);
    previous = dev;
  }
}

TEST_CASE("transport_three_dimensional_smoke") {
  const Grid1D gx(1.0, 4), gk(1.0, 2);
  const auto m = TransportModel::constant_isotropic({gx, gx, gx}, {gk, gk, gk}, 0.5);
  const std::size_t kd = m.k_size();
  CVec v(static_cast<Eigen::Index>(m.x_size() * kd));
  for (std::size_t a = 0; a < 4; ++a)
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t j = 0; j < kd; ++j) {
          const double x = gx.point(a), y = gx.point(b), z = gx.point(c);
          v[static_cast<Eigen::Index>(((a * 4 + b) * 4 + c) * kd + j)] =
              2.0 + std::cos(pi * x) * std::cos(pi * y) + 0.5 * std::sin(pi * z) + 0.3 * double(j % 3);
        }
  const StateVector w0(m.phase_space_layout(), v);
  PConfig pc;
  pc.p_grid = Grid1D(8.0, 64);
  const TransportResult r = run_transport(m, w0, pc, 0.2);
  CHECK(r.l2_relative_error < 1e-2);
  CHECK(r.moments.momentum.size() == 3);
  CHECK(r.mass_drift < 1e-3);
}

TEST_CASE("stationary_state_is_k_average") {
  const Grid1D gx(1.0, 4), gk(1.0, 8);
  const auto m = TransportModel::constant_isotropic({gx}, {gk}, 2.0);
  const StateVector w0 = phase_space(m, [](double, double k) { return 1.0 + 0.5 * k; });
  const PConfig pc;
  const StationaryResult r = stationary_transport_state(m, w0, pc, 0.5, 15.0, 1e-8);
  CHECK(r.converged);
  CHECK(r.last_change < 1e-8);
  double mean = 0.0;
  for (std::size_t j = 0; j < 8; ++j) mean += 1.0 + 0.5 * gk.point(j);
  mean /= 8.0;
  CHECK((r.w.amplitudes().array() - mean).abs().maxCoeff() < 1e-4);
  CHECK_THROWS_AS(stationary_transport_state(m, w0, pc, 0.0, 1.0), InvalidArgument);
}
