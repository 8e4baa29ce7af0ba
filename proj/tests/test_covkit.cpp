#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "dacomp/covariance.hpp"
#include "dacomp/grid.hpp"
#include "test_support.hpp"

using namespace dacomp;
using dacomp::test::random_spd;

namespace {

double soar(double r, double length) {
  return (1.0 + r / length) * std::exp(-r / length);
}

}  // namespace

TEST_CASE("covkit: SOAR diagonal equals the marginal variance") {
  GridGeometry geom(4, 4);
  CovarianceMatrix c =
      build_soar_covariance(geom, SoarKernelSpec::homogeneous(2.0, 0.04, 16));
  for (Eigen::Index i = 0; i < 16; ++i)
    CHECK(c.entries()(i, i) == doctest::Approx(0.04).epsilon(1e-14));
}

TEST_CASE("covkit: SOAR correlation at r = L equals 2/e") {
  // 20x20 grid, L = 4, sigma = 0.2: the background covariance at t = 0.
  GridGeometry geom(20, 20);
  CovarianceMatrix c =
      build_soar_covariance(geom, SoarKernelSpec::homogeneous(4.0, 0.04, 400));
  const Eigen::Index p = geom.flatten(10, 10);
  const Eigen::Index q = geom.flatten(10, 14);  // distance exactly 4
  const double corr = c.entries()(p, q) / c.entries()(p, p);
  CHECK(corr == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("covkit: SOAR matches a brute-force kernel evaluation") {
  GridGeometry geom(3, 3);
  CovarianceMatrix c =
      build_soar_covariance(geom, SoarKernelSpec::homogeneous(1.0, 1.0, 9));
  for (Eigen::Index p = 0; p < 9; ++p) {
    for (Eigen::Index q = 0; q < 9; ++q) {
      const double di = static_cast<double>(p / 3 - q / 3);
      const double dj = static_cast<double>(p % 3 - q % 3);
      const double r = std::sqrt(di * di + dj * dj);
      CHECK(c.entries()(p, q) == doctest::Approx(soar(r, 1.0)).epsilon(1e-13));
    }
  }
  CHECK(c.is_positive_semidefinite());
}

TEST_CASE("covkit: inverse_sqrt on identity and diagonal matrices") {
  CovarianceMatrix id(Eigen::MatrixXd::Identity(5, 5));
  CHECK((inverse_sqrt(id) - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-12);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const Eigen::MatrixXd r = inverse_sqrt(CovarianceMatrix(d));
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(std::abs(r(0, 1)) < 1e-14);
}

TEST_CASE("covkit: inverse_sqrt residual check on a random SPD matrix") {
  std::mt19937_64 rng(31);
  CovarianceMatrix c(random_spd(6, rng));
  const Eigen::MatrixXd r = inverse_sqrt(c);
  CHECK((r * r * c.entries() - Eigen::MatrixXd::Identity(6, 6)).norm() < 1e-10);
}

TEST_CASE("covkit: matrix_sqrt squares back to the input") {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const Eigen::MatrixXd s = matrix_sqrt(CovarianceMatrix(d));
  CHECK(s(0, 0) == doctest::Approx(2.0).epsilon(1e-13));
  CHECK(s(1, 1) == doctest::Approx(3.0).epsilon(1e-13));

  CovarianceMatrix id(Eigen::MatrixXd::Identity(4, 4));
  CHECK((matrix_sqrt(id) - Eigen::MatrixXd::Identity(4, 4)).norm() < 1e-12);

  std::mt19937_64 rng(7);
  CovarianceMatrix c(random_spd(6, rng));
  const Eigen::MatrixXd root = matrix_sqrt(c);
  CHECK((root * root - c.entries()).norm() / c.entries().norm() < 1e-8);
}

TEST_CASE("covkit: regularize_spd leaves an SPD input unchanged at mu = 0") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd m = random_spd(5, rng);
  const RegularizedMatrix out = regularize_spd(m, 0.0);
  CHECK((out.cov.entries() - m).norm() < 1e-13);
  CHECK(out.strictly_positive_definite);
}

TEST_CASE("covkit: regularize_spd lifts a small negative eigenvalue") {
  // Constructed 4x4 with eigenvalues (1, 0.5, 0.1, -1e-3).
  std::mt19937_64 rng(13);
  Eigen::MatrixXd a = test::random_matrix(4, 4, rng);
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lambda(4);
  lambda << 1.0, 0.5, 0.1, -1e-3;
  const Eigen::MatrixXd m = q * lambda.asDiagonal() * q.transpose();

  const RegularizedMatrix out = regularize_spd(m, 0.1);
  CHECK(out.cov.min_eigenvalue() > 0.0);
  CHECK(out.strictly_positive_definite);
}

TEST_CASE("covkit: regularize_spd blend formula in both modes") {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd m = test::random_matrix(5, 5, rng);
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  const double mu = 0.1;

  const Eigen::MatrixXd expected_norm =
      (1.0 - mu) * sym +
      mu * (sym.trace() / 5.0) * Eigen::MatrixXd::Identity(5, 5);
  CHECK((regularize_spd(m, mu, SpdRegularizer::kTraceNormalized).cov.entries() -
         expected_norm)
            .norm() < 1e-12);

  const Eigen::MatrixXd expected_lit =
      (1.0 - mu) * sym + mu * sym.trace() * Eigen::MatrixXd::Identity(5, 5);
  CHECK((regularize_spd(m, mu, SpdRegularizer::kPaperLiteral).cov.entries() -
         expected_lit)
            .norm() < 1e-12);
}

TEST_CASE("covkit: regularize_spd symmetry and definiteness reporting" *
          doctest::description("property")) {
  std::mt19937_64 rng(19);
  for (int trial = 0; trial < 25; ++trial) {
    // Near-SPD inputs (an SPD matrix plus a small asymmetric perturbation)
    // must come back strictly positive definite; arbitrary inputs must at
    // least come back symmetric with an honest flag.
    const Eigen::MatrixXd near_spd =
        random_spd(6, rng) + 1e-3 * test::random_matrix(6, 6, rng);
    const RegularizedMatrix fixed = regularize_spd(near_spd, 0.1);
    CHECK(fixed.cov.is_positive_semidefinite());
    CHECK(fixed.strictly_positive_definite);

    const Eigen::MatrixXd m = test::random_matrix(6, 6, rng);
    const RegularizedMatrix out = regularize_spd(m, 0.1);
    CHECK((out.cov.entries() - out.cov.entries().transpose()).norm() < 1e-13);
    CHECK(out.strictly_positive_definite == (out.cov.min_eigenvalue() > 0.0));
    CHECK(out.min_eigenvalue ==
          doctest::Approx(out.cov.min_eigenvalue()).epsilon(1e-10));
  }
}

TEST_CASE("covkit: sample_gaussian degenerate and statistical behavior") {
  const Eigen::VectorXd mean = Eigen::VectorXd::Constant(3, 1.5);
  CovarianceMatrix zero(Eigen::MatrixXd::Zero(3, 3));
  const Eigen::MatrixXd cols = sample_gaussian(mean, zero, 4, 99);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK((cols.col(j) - mean).norm() < 1e-14);

  CovarianceMatrix diag(0.04 * Eigen::MatrixXd::Identity(3, 3));
  const Eigen::MatrixXd draws =
      sample_gaussian(Eigen::VectorXd::Zero(3), diag, 10000, 42);
  const Eigen::MatrixXd emp = empirical_covariance(draws);
  for (Eigen::Index i = 0; i < 3; ++i)
    CHECK(emp(i, i) == doctest::Approx(0.04).epsilon(0.05));
}

TEST_CASE("covkit: sampling reproduces the t = 0 background covariance") {
  GridGeometry geom(20, 20);
  CovarianceMatrix b =
      build_soar_covariance(geom, SoarKernelSpec::homogeneous(4.0, 0.04, 400));
  const Eigen::MatrixXd draws =
      sample_gaussian(Eigen::VectorXd::Zero(400), b, 1000, 5);
  const Eigen::MatrixXd emp = empirical_covariance(draws);
  CHECK((emp - b.entries()).norm() / b.entries().norm() < 0.10);
}

TEST_CASE("covkit: sample_gaussian is deterministic under a fixed seed") {
  std::mt19937_64 rng(23);
  CovarianceMatrix c(random_spd(5, rng));
  const Eigen::MatrixXd a = sample_gaussian(Eigen::VectorXd::Zero(5), c, 7, 77);
  const Eigen::MatrixXd b = sample_gaussian(Eigen::VectorXd::Zero(5), c, 7, 77);
  CHECK((a - b).norm() == 0.0);
}

TEST_CASE("covkit: empirical_covariance hand cases") {
  Eigen::MatrixXd same(2, 3);
  same << 1, 1, 1, -2, -2, -2;
  CHECK(empirical_covariance(same).norm() < 1e-14);

  Eigen::MatrixXd pair(2, 2);
  pair << 1, -1, 0, 0;
  const Eigen::MatrixXd c = empirical_covariance(pair);
  CHECK(c(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::abs(c(0, 1)) < 1e-14);
  CHECK(std::abs(c(1, 1)) < 1e-14);
}

TEST_CASE("covkit: empirical_covariance converges on 5000 draws") {
  std::mt19937_64 rng(29);
  CovarianceMatrix c(random_spd(20, rng));
  const Eigen::MatrixXd draws =
      sample_gaussian(Eigen::VectorXd::Zero(20), c, 5000, 8);
  CHECK((empirical_covariance(draws) - c.entries()).norm() /
            c.entries().norm() <
        0.10);
}

TEST_CASE("covkit: CovarianceMatrix invariants" * doctest::description("property")) {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 10; ++trial) {
    CovarianceMatrix c(random_spd(8, rng));
    CHECK(c.is_positive_semidefinite());

    const Eigen::VectorXd& ev = c.eigenvalues();
    for (Eigen::Index i = 1; i < ev.size(); ++i) CHECK(ev(i - 1) >= ev(i));
    CHECK((c.eigenvectors().transpose() * c.eigenvectors() -
           Eigen::MatrixXd::Identity(8, 8))
              .norm() < 1e-12);

    const Eigen::VectorXd b = test::random_vector(8, rng);
    CHECK((c.entries() * c.solve(b) - b).norm() < 1e-9 * b.norm());

    const Eigen::MatrixXd& root = c.sqrt_psd();
    CHECK((root * root - c.entries()).norm() < 1e-10);
  }
}

TEST_CASE("covkit: sorted_symmetric_eig uses a deterministic sign convention") {
  std::mt19937_64 rng(41);
  const Eigen::MatrixXd m = random_spd(6, rng);
  const EigenDecomposition a = sorted_symmetric_eig(m);
  const EigenDecomposition b = sorted_symmetric_eig(m);
  CHECK((a.vectors - b.vectors).norm() == 0.0);
  for (Eigen::Index k = 0; k < 6; ++k) {
    Eigen::Index imax;
    a.vectors.col(k).cwiseAbs().maxCoeff(&imax);
    CHECK(a.vectors(imax, k) > 0.0);
  }
}
