#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/Dense>

#include "dacomp/desroziers.hpp"
#include "test_support.hpp"

using namespace dacomp;
using dacomp::test::random_spd;
using dacomp::test::random_vector;

namespace {

ResidualBank bank_from(const Eigen::MatrixXd& omb,
                       const std::optional<Eigen::MatrixXd>& oma = std::nullopt,
                       const std::optional<Eigen::MatrixXd>& amb = std::nullopt) {
  ResidualBank b;
  b.window = SamplingWindow{0.0, 1.0, 1.0, static_cast<int>(omb.cols())};
  b.omb = omb;
  b.oma = oma;
  b.amb = amb;
  b.times.assign(static_cast<std::size_t>(omb.cols()), 0.0);
  b.members.resize(static_cast<std::size_t>(omb.cols()));
  for (int g = 0; g < omb.cols(); ++g) b.members[static_cast<std::size_t>(g)] = g;
  return b;
}

// Synthetic linear-Gaussian residual bank: per-pair BLUE analyses under the
// exact covariances, identity operator.
ResidualBank synthetic_bank(const CovarianceMatrix& b, const CovarianceMatrix& r,
                            Eigen::Index n, std::uint64_t seed) {
  const Eigen::Index d = b.dim();
  const Eigen::MatrixXd xb =
      sample_gaussian(Eigen::VectorXd::Zero(d), b, n, seed);
  const Eigen::MatrixXd yo = sample_gaussian(Eigen::VectorXd::Zero(d), r, n,
                                             seed ^ 0x9e3779b97f4a7c15ull);
  EnsembleSeries bg, obs;
  bg[0.0] = xb;
  obs[0.0] = yo;
  const ProblemTemplate tmpl{b, r, ObservationOperator::identity(d)};
  const SamplingWindow w{0.0, 1.0, 1.0, static_cast<int>(n)};
  return collect_residuals(bg, obs, tmpl, w, true);
}

}  // namespace

TEST_CASE("diagnose: sampling windows are start-inclusive, end-exclusive") {
  const SamplingWindow medium{0.1, 0.3, 0.01, 10};
  const std::vector<double> t = medium.times();
  REQUIRE(t.size() == 20);
  CHECK(t.front() == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(t.back() == doctest::Approx(0.29).epsilon(1e-9));
}

TEST_CASE("diagnose: Eq-28 estimate with oma = omb is the second moment") {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd omb = test::random_matrix(4, 6, rng);
  const ResidualBank b = bank_from(omb, omb);
  const Eigen::MatrixXd est = estimate_R_desroziers(b);
  const Eigen::MatrixXd moment = omb * omb.transpose() / 6.0;
  CHECK((est - moment).norm() < 1e-13);
}

TEST_CASE("diagnose: single matched pair gives the symmetrized outer product") {
  std::mt19937_64 rng(5);
  const Eigen::VectorXd u = random_vector(4, rng);
  const Eigen::VectorXd v = random_vector(4, rng);
  // The estimators need two columns; a duplicated pair has the same mean.
  Eigen::MatrixXd oma(4, 2), omb(4, 2);
  oma << u, u;
  omb << v, v;
  const Eigen::MatrixXd est = estimate_R_desroziers(bank_from(omb, oma));
  const Eigen::MatrixXd expected =
      0.5 * (u * v.transpose() + v * u.transpose());
  CHECK((est - expected).norm() < 1e-13);
}

TEST_CASE("diagnose: one-column banks are insufficient data") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd one = test::random_matrix(4, 1, rng);
  CovarianceMatrix r(Eigen::MatrixXd::Identity(4, 4));
  CHECK_THROWS_AS(estimate_R_desroziers(bank_from(one, one)),
                  InsufficientDataError);
  CHECK_THROWS_AS(estimate_HBHt_from_omb(bank_from(one), r),
                  InsufficientDataError);
  CHECK_THROWS_AS(estimate_HBHt_cross(bank_from(one, std::nullopt, one)),
                  InsufficientDataError);
}

TEST_CASE("diagnose: Eq-28 Monte-Carlo convergence to R") {
  GridGeometry g(4, 5);
  CovarianceMatrix b =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(2.0, 0.5, 20));
  CovarianceMatrix r =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.2, 20));
  const ResidualBank bank = synthetic_bank(b, r, 5000, 101);
  const Eigen::MatrixXd est = estimate_R_desroziers(bank);
  CHECK((est - r.entries()).norm() / r.entries().norm() < 0.10);
}

TEST_CASE("diagnose: omb estimator vanishes without background error") {
  const Eigen::Index d = 12;
  std::mt19937_64 rng(11);
  CovarianceMatrix r(random_spd(d, rng, 0.2, 1.0));
  const Eigen::Index n = 4000;
  // omb = observation noise only.
  const Eigen::MatrixXd omb =
      sample_gaussian(Eigen::VectorXd::Zero(d), r, n, 55);
  const HbhtEstimate est = estimate_HBHt_from_omb(bank_from(omb), r);
  // Sampling noise of a second moment scales like 1/sqrt(n).
  CHECK(est.hbht.norm() / static_cast<double>(d) <
        3.0 * r.entries().norm() / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("diagnose: scalar omb arithmetic") {
  Eigen::MatrixXd omb(1, 2);
  const double a = std::sqrt(5.0);
  omb << a, -a;  // second moment exactly 5
  CovarianceMatrix r(Eigen::MatrixXd::Identity(1, 1));
  const HbhtEstimate est = estimate_HBHt_from_omb(bank_from(omb), r);
  CHECK(est.hbht(0, 0) == doctest::Approx(4.0).epsilon(1e-13));
}

TEST_CASE("diagnose: cross estimator hand cases") {
  std::mt19937_64 rng(13);
  const Eigen::MatrixXd omb = test::random_matrix(5, 4, rng);
  const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(5, 4);
  CHECK(estimate_HBHt_cross(bank_from(omb, std::nullopt, zero)).norm() <
        1e-14);

  const Eigen::VectorXd u = random_vector(5, rng);
  const Eigen::VectorXd v = random_vector(5, rng);
  Eigen::MatrixXd amb(5, 2), omb2(5, 2);
  amb << u, u;
  omb2 << v, v;
  const Eigen::MatrixXd est = estimate_HBHt_cross(bank_from(omb2, std::nullopt, amb));
  CHECK((est - 0.5 * (u * v.transpose() + v * u.transpose())).norm() < 1e-13);
}

TEST_CASE("diagnose: omb and cross estimators agree on synthetic data") {
  GridGeometry g(4, 5);
  CovarianceMatrix b =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(2.0, 0.5, 20));
  CovarianceMatrix r =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.2, 20));
  const ResidualBank bank = synthetic_bank(b, r, 5000, 103);
  const Eigen::MatrixXd via_omb = estimate_HBHt_from_omb(bank, r).hbht;
  const Eigen::MatrixXd via_cross = estimate_HBHt_cross(bank);
  CHECK((via_omb - via_cross).norm() / b.entries().norm() < 0.15);
  CHECK((via_omb - b.entries()).norm() / b.entries().norm() < 0.10);
}

TEST_CASE("diagnose: Eq-28 plus Eq-30 recover the raw omb moment exactly") {
  // omb = oma + amb columnwise, so the symmetrized cross moments must sum
  // to the symmetrized omb second moment, sample by sample.
  GridGeometry g(3, 4);
  CovarianceMatrix b =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.5, 0.3, 12));
  CovarianceMatrix r =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.1, 12));
  const ResidualBank bank = synthetic_bank(b, r, 200, 107);
  const Eigen::MatrixXd lhs =
      estimate_R_desroziers(bank) + estimate_HBHt_cross(bank);
  const Eigen::MatrixXd raw = bank.omb * bank.omb.transpose() /
                              static_cast<double>(bank.count());
  CHECK((lhs - 0.5 * (raw + raw.transpose())).norm() < 1e-10);
}

TEST_CASE("diagnose: estimators are symmetric and deterministic" *
          doctest::description("property")) {
  std::mt19937_64 rng(17);
  const Eigen::MatrixXd omb = test::random_matrix(6, 9, rng);
  const Eigen::MatrixXd oma = test::random_matrix(6, 9, rng);
  CovarianceMatrix r(random_spd(6, rng));

  const Eigen::MatrixXd r1 = estimate_R_desroziers(bank_from(omb, oma));
  const Eigen::MatrixXd r2 = estimate_R_desroziers(bank_from(omb, oma));
  CHECK((r1 - r2).norm() == 0.0);
  CHECK((r1 - r1.transpose()).norm() < 1e-14);

  const Eigen::MatrixXd h1 = estimate_HBHt_from_omb(bank_from(omb), r).hbht;
  CHECK((h1 - h1.transpose()).norm() < 1e-14);
}

TEST_CASE("diagnose: relative error decays like one over sqrt(n)") {
  GridGeometry g(4, 5);
  CovarianceMatrix b =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(2.0, 0.5, 20));
  CovarianceMatrix r =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.2, 20));

  const int reps = 8;
  double err[3] = {0.0, 0.0, 0.0};
  double logn[3];
  for (int rep = 0; rep < reps; ++rep) {
    int k = 0;
    for (const Eigen::Index n : {500, 2000, 8000}) {
      const ResidualBank bank =
          synthetic_bank(b, r, n, 1000 + 17ull * static_cast<std::uint64_t>(rep) +
                                      static_cast<std::uint64_t>(k));
      err[k] += (estimate_R_desroziers(bank) - r.entries()).norm() /
                r.entries().norm() / reps;
      logn[k] = std::log(static_cast<double>(n));
      ++k;
    }
  }
  double sx = 0, sy = 0, sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sx += logn[i];
    sy += std::log(err[i]);
    sxy += logn[i] * std::log(err[i]);
    sxx += logn[i] * logn[i];
  }
  const double slope = (3 * sxy - sx * sy) / (3 * sxx - sx * sx);
  CHECK(slope > -0.65);
  CHECK(slope < -0.35);
}

TEST_CASE("diagnose: collect_residuals fills the strategy layout") {
  GridGeometry g(2, 2);
  CovarianceMatrix b =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.3, 4));
  CovarianceMatrix r =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.1, 4));
  const ProblemTemplate tmpl{b, r, ObservationOperator::identity(4)};

  const SamplingWindow medium{0.1, 0.3, 0.01, 10};
  EnsembleSeries bg, obs;
  std::mt19937_64 rng(19);
  for (const double t : medium.times()) {
    bg[t] = test::random_matrix(4, 10, rng);
    obs[t] = test::random_matrix(4, 10, rng);
  }
  const ResidualBank bank = collect_residuals(bg, obs, tmpl, medium);
  CHECK(bank.count() == 200);  // 20 steps x 10 members
  CHECK_FALSE(bank.oma.has_value());

  // A missing time step is a data gap.
  EnsembleSeries partial = bg;
  partial.erase(std::next(partial.begin())->first);
  CHECK_THROWS_AS(collect_residuals(partial, obs, tmpl, medium), DataGapError);
}

TEST_CASE("diagnose: bank save/load round trip") {
  GridGeometry g(3, 3);
  CovarianceMatrix b =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.4, 9));
  CovarianceMatrix r =
      build_soar_covariance(g, SoarKernelSpec::homogeneous(1.0, 0.2, 9));
  const ResidualBank bank = synthetic_bank(b, r, 25, 109);

  const auto prefix = std::filesystem::temp_directory_path() / "dacomp_bank";
  save_bank(prefix, bank);
  const ResidualBank loaded = load_bank(prefix);
  CHECK((loaded.omb - bank.omb).norm() == 0.0);
  REQUIRE(loaded.oma.has_value());
  CHECK((*loaded.oma - *bank.oma).norm() == 0.0);
  CHECK(loaded.times == bank.times);
  CHECK(loaded.members == bank.members);
  CHECK(loaded.window.t_start == bank.window.t_start);
  for (const auto& entry : std::filesystem::directory_iterator(
           std::filesystem::temp_directory_path())) {
    if (entry.path().filename().string().rfind("dacomp_bank", 0) == 0)
      std::filesystem::remove(entry.path());
  }
}
