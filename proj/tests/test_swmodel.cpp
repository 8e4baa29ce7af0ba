#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dacomp/shallow_water.hpp"
#include "test_support.hpp"

using namespace dacomp;

namespace {

ShallowWaterState flat_rest(const SwConfig& cfg) {
  ShallowWaterState s;
  s.h = Eigen::MatrixXd::Constant(cfg.nx, cfg.ny, cfg.base_level);
  s.u = Eigen::MatrixXd::Zero(cfg.nx, cfg.ny);
  s.v = Eigen::MatrixXd::Zero(cfg.nx, cfg.ny);
  return s;
}

}  // namespace

TEST_CASE("swmodel: flat rest is a fixed point") {
  const SwConfig cfg;
  ShallowWaterState s = flat_rest(cfg);
  const ShallowWaterState next = step(s, cfg);
  CHECK((next.h - s.h).norm() == 0.0);
  CHECK(next.u.norm() == 0.0);
  CHECK(next.v.norm() == 0.0);
  CHECK(next.t == doctest::Approx(cfg.dt));
}

TEST_CASE("swmodel: interior drag-only decay of a uniform velocity") {
  SwConfig cfg;
  cfg.gravity = 0.0;  // remove the pressure term entirely
  ShallowWaterState s = flat_rest(cfg);
  const double u0 = 0.25;
  s.u = Eigen::MatrixXd::Constant(cfg.nx, cfg.ny, u0);
  const ShallowWaterState next = step(s, cfg);
  // Interior cells follow u1 = u0 (1 - b dt); walls are pinned to zero.
  CHECK(next.u(cfg.nx / 2, cfg.ny / 2) ==
        doctest::Approx(u0 * (1.0 - cfg.drag * cfg.dt)).epsilon(1e-13));
  CHECK(next.u(0, cfg.ny / 2) == 0.0);
}

TEST_CASE("swmodel: cylinder initial condition is centered and still") {
  const SwConfig cfg;
  const ShallowWaterState s = initial_state(cfg);
  CHECK(s.u.norm() == 0.0);
  CHECK(s.v.norm() == 0.0);
  CHECK(s.h.minCoeff() == doctest::Approx(cfg.base_level));
  CHECK(s.h.maxCoeff() ==
        doctest::Approx(cfg.base_level + cfg.cylinder_height));
  // Mirror symmetry of the initial bump.
  CHECK((s.h - s.h.colwise().reverse()).norm() < 1e-14);
  CHECK((s.h - s.h.rowwise().reverse()).norm() < 1e-14);
}

TEST_CASE("swmodel: symmetric initial condition stays symmetric") {
  const SwConfig cfg;
  ShallowWaterState s = initial_state(cfg);
  for (int k = 0; k < 500; ++k) s = step(s, cfg);
  // h is mirror symmetric; u is antisymmetric under the x reflection and
  // symmetric under the y reflection (and vice versa for v).
  CHECK((s.h - s.h.colwise().reverse()).norm() < 1e-12);
  CHECK((s.h - s.h.rowwise().reverse()).norm() < 1e-12);
  CHECK((s.u + s.u.colwise().reverse()).norm() < 1e-12);
  CHECK((s.u - s.u.rowwise().reverse()).norm() < 1e-12);
  CHECK((s.v - s.v.colwise().reverse()).norm() < 1e-12);
  CHECK((s.v + s.v.rowwise().reverse()).norm() < 1e-12);
}

TEST_CASE("swmodel: mass is conserved without drag") {
  SwConfig cfg;
  cfg.drag = 0.0;
  ShallowWaterState s = initial_state(cfg);
  const double mass0 = s.h.sum();
  for (int k = 0; k < 1000; ++k) s = step(s, cfg);
  CHECK(std::abs(s.h.sum() - mass0) < 1e-6 * mass0);
}

TEST_CASE("swmodel: CFL guard rejects an over-long time step") {
  SwConfig cfg;
  cfg.dt = 1.0;  // wave crosses many cells per step
  const ShallowWaterState s = initial_state(cfg);
  CHECK_THROWS_AS(step(s, cfg), NumericalError);
}

TEST_CASE("swmodel: simulate returns the requested save times") {
  const SwConfig cfg;
  const ShallowWaterState s = initial_state(cfg);

  const std::vector<ShallowWaterState> only_start =
      simulate(s, cfg, 0.0, {0.0});
  REQUIRE(only_start.size() == 1);
  CHECK(only_start[0].t == 0.0);

  const std::vector<ShallowWaterState> states =
      simulate(s, cfg, 0.01, {0.0, 0.005, 0.01});
  REQUIRE(states.size() == 3);
  CHECK(states[1].t == doctest::Approx(0.005));
  CHECK(states[2].t == doctest::Approx(0.01));

  CHECK_THROWS_AS(simulate(s, cfg, 0.01, {0.00333}), ParameterError);
}

TEST_CASE("swmodel: observe_exact aggregates 2x2 velocity blocks") {
  const SwConfig cfg;
  ShallowWaterState s = flat_rest(cfg);
  s.u = Eigen::MatrixXd::Ones(cfg.nx, cfg.ny);
  const Eigen::VectorXd y = observe_exact(s, cfg);
  REQUIRE(y.size() == cfg.obs_dim());
  for (Eigen::Index i = 0; i < cfg.obs_dim() / 2; ++i)
    CHECK(y(i) == doctest::Approx(4.0).epsilon(1e-14));
  for (Eigen::Index i = cfg.obs_dim() / 2; i < cfg.obs_dim(); ++i)
    CHECK(y(i) == 0.0);
}

TEST_CASE("swmodel: linear operator matches the aggregation stencil") {
  const SwConfig cfg;
  const Eigen::MatrixXd h = linear_operator(cfg);
  REQUIRE(h.rows() == cfg.obs_dim());
  REQUIRE(h.cols() == cfg.state_dim());

  for (Eigen::Index i = 0; i < h.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index j = 0; j < h.cols(); ++j) {
      CHECK((h(i, j) == 0.0 || h(i, j) == 1.0));
      if (h(i, j) == 1.0) ++ones;
    }
    CHECK(ones == 4);
  }

  CHECK((h * Eigen::VectorXd::Ones(cfg.state_dim()) -
         Eigen::VectorXd::Constant(cfg.obs_dim(), 4.0))
            .norm() < 1e-14);

  std::mt19937_64 rng(3);
  ShallowWaterState s = flat_rest(cfg);
  for (int trial = 0; trial < 50; ++trial) {
    s.set_velocity_state(test::random_vector(cfg.state_dim(), rng));
    CHECK((h * s.velocity_state() - observe_exact(s, cfg)).norm() < 1e-14);
  }
}

TEST_CASE("swmodel: velocity state round trip") {
  const SwConfig cfg;
  std::mt19937_64 rng(5);
  ShallowWaterState s = flat_rest(cfg);
  const Eigen::VectorXd x = test::random_vector(cfg.state_dim(), rng);
  s.set_velocity_state(x);
  CHECK((s.velocity_state() - x).norm() == 0.0);
}

TEST_CASE("swmodel: observation covariance amplifies the center") {
  const SwConfig cfg;
  CovarianceMatrix r = observation_covariance(cfg, 0.2, 4.0, 4.0, 1.0);
  REQUIRE(r.dim() == cfg.obs_dim());
  CHECK(r.is_positive_semidefinite());

  const Eigen::Index m = cfg.obs_dim() / 2;
  // Center cell of the u block vs a corner cell: 4x the deviation means
  // 16x the variance.
  const Eigen::Index nyo = cfg.ny / 2;
  const Eigen::Index center = (cfg.nx / 4) * nyo + nyo / 2;
  CHECK(r.entries()(center, center) ==
        doctest::Approx(16.0 * r.entries()(0, 0)).epsilon(1e-10));
  // u and v blocks are uncorrelated.
  CHECK(r.entries().block(0, m, m, m).norm() == 0.0);
}

TEST_CASE("swmodel: observe adds correlated noise deterministically") {
  const SwConfig cfg;
  CovarianceMatrix r = observation_covariance(cfg, 0.2, 4.0, 4.0, 1.0);
  const ShallowWaterState s = initial_state(cfg);
  const Eigen::VectorXd a = observe(s, cfg, r, 33);
  const Eigen::VectorXd b = observe(s, cfg, r, 33);
  const Eigen::VectorXd c = observe(s, cfg, r, 34);
  CHECK((a - b).norm() == 0.0);
  CHECK((a - c).norm() > 0.0);
  CHECK((a - observe_exact(s, cfg)).norm() > 0.0);
}

TEST_CASE("swmodel: background covariance at t = 0 is per-field SOAR") {
  const SwConfig cfg;
  CovarianceMatrix b = background_covariance_t0(cfg, 0.2, 4.0);
  REQUIRE(b.dim() == cfg.nx * cfg.ny);
  GridGeometry geom(cfg.nx, cfg.ny);
  CovarianceMatrix field = build_soar_covariance(
      geom, SoarKernelSpec::homogeneous(4.0, 0.04, cfg.nx * cfg.ny));
  CHECK((b.entries() - field.entries()).norm() < 1e-12);
}

TEST_CASE("swmodel: zero-noise twin dataset collapses onto the truth") {
  SwConfig cfg;
  CovarianceMatrix r = observation_covariance(cfg, 0.2, 4.0, 4.0, 1.0);
  const SoarKernelSpec zero_noise =
      SoarKernelSpec::homogeneous(4.0, 0.0, cfg.nx * cfg.ny);
  const std::vector<double> times = {0.0, 0.01};
  const TwinDataset ds =
      make_twin_dataset(cfg, zero_noise, r, 6, 3, times, {0.01}, 1);

  for (const double t : times) {
    const Eigen::MatrixXd& members = ds.backgrounds.at(t);
    for (Eigen::Index g = 0; g < members.cols(); ++g)
      CHECK((members.col(g) - ds.truth_at(t)).norm() < 1e-12);
  }
  CHECK(ds.exact_b_at(0.01).entries().norm() < 1e-20);
}

TEST_CASE("swmodel: twin dataset is deterministic under a fixed seed") {
  SwConfig cfg;
  CovarianceMatrix r = observation_covariance(cfg, 0.2, 4.0, 4.0, 1.0);
  const SoarKernelSpec noise =
      SoarKernelSpec::homogeneous(4.0, 0.04, cfg.nx * cfg.ny);
  const std::vector<double> times = {0.0, 0.005};
  const TwinDataset a =
      make_twin_dataset(cfg, noise, r, 8, 4, times, {0.005}, 7);
  const TwinDataset b =
      make_twin_dataset(cfg, noise, r, 8, 4, times, {0.005}, 7);
  CHECK((a.backgrounds.at(0.005) - b.backgrounds.at(0.005)).norm() == 0.0);
  CHECK((a.observations.at(0.005) - b.observations.at(0.005)).norm() == 0.0);
  CHECK((a.exact_b_at(0.005).entries() - b.exact_b_at(0.005).entries())
            .norm() == 0.0);
}

TEST_CASE("swmodel: background error correlations shrink along the flow") {
  SwConfig cfg;
  CovarianceMatrix r = observation_covariance(cfg, 0.2, 4.0, 4.0, 1.0);
  const SoarKernelSpec noise =
      SoarKernelSpec::homogeneous(4.0, 0.04, cfg.nx * cfg.ny);
  const std::vector<double> analysis = {0.02, 0.16};
  const TwinDataset ds =
      make_twin_dataset(cfg, noise, r, 60, 5, analysis, analysis, 3);

  // Mean u-block neighbor correlation at lattice distance 1, compared with
  // the initial SOAR kernel value (1 + 1/4) exp(-1/4).
  const auto mean_corr = [&](const Eigen::MatrixXd& b) {
    double acc = 0.0;
    long count = 0;
    for (Eigen::Index i = 0; i < cfg.nx; ++i) {
      for (Eigen::Index j = 0; j + 1 < cfg.ny; ++j) {
        const Eigen::Index p = i * cfg.ny + j;
        const double denom = std::sqrt(b(p, p) * b(p + 1, p + 1));
        if (denom > 0.0) {
          acc += b(p, p + 1) / denom;
          ++count;
        }
      }
    }
    return acc / static_cast<double>(count);
  };
  const double initial = 1.25 * std::exp(-0.25);
  const double early = mean_corr(ds.exact_b_at(0.02).entries());
  const double late = mean_corr(ds.exact_b_at(0.16).entries());
  CHECK(early < initial);
  CHECK(late < early);
}
