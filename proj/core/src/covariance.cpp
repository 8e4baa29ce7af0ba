#include "dacomp/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

namespace dacomp {

EigenDecomposition sorted_symmetric_eig(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success)
    throw NumericalError("sorted_symmetric_eig: eigensolver failed");

  const Eigen::Index n = sym.rows();
  // Eigen returns ascending order; reverse to non-increasing, breaking ties
  // by original index.
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return solver.eigenvalues()(a) > solver.eigenvalues()(b);
                   });

  EigenDecomposition out;
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = solver.eigenvalues()(order[k]);
    Eigen::VectorXd v = solver.eigenvectors().col(order[k]);
    // Sign convention: first component of largest magnitude made positive.
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double a = std::abs(v(i));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (v(imax) < 0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

CovarianceMatrix::CovarianceMatrix(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols())
    throw DimensionError("CovarianceMatrix: input must be square");
  entries_ = 0.5 * (m + m.transpose());
}

CovarianceMatrix::CovarianceMatrix(const CovarianceMatrix& other) {
  std::lock_guard<std::mutex> lock(other.cache_mutex_);
  entries_ = other.entries_;
  cache_ = other.cache_;
}

CovarianceMatrix& CovarianceMatrix::operator=(const CovarianceMatrix& other) {
  if (this != &other) {
    std::scoped_lock lock(cache_mutex_, other.cache_mutex_);
    entries_ = other.entries_;
    cache_ = other.cache_;
  }
  return *this;
}

CovarianceMatrix::CovarianceMatrix(CovarianceMatrix&& other) noexcept {
  std::lock_guard<std::mutex> lock(other.cache_mutex_);
  entries_ = std::move(other.entries_);
  cache_ = std::move(other.cache_);
}

CovarianceMatrix& CovarianceMatrix::operator=(
    CovarianceMatrix&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(cache_mutex_, other.cache_mutex_);
    entries_ = std::move(other.entries_);
    cache_ = std::move(other.cache_);
  }
  return *this;
}

const CovarianceMatrix::Cache& CovarianceMatrix::cache() const {
  std::lock_guard<std::mutex> lock(cache_mutex_);
  if (!cache_) {
    auto c = std::make_shared<Cache>();
    c->eig = sorted_symmetric_eig(entries_);
    Eigen::VectorXd clamped = c->eig.values.cwiseMax(0.0);
    c->sqrt_psd = c->eig.vectors * clamped.cwiseSqrt().asDiagonal() *
                  c->eig.vectors.transpose();
    cache_ = std::move(c);
  }
  return *cache_;
}

const Eigen::VectorXd& CovarianceMatrix::eigenvalues() const {
  return cache().eig.values;
}

const Eigen::MatrixXd& CovarianceMatrix::eigenvectors() const {
  return cache().eig.vectors;
}

const Eigen::MatrixXd& CovarianceMatrix::sqrt_psd() const {
  return cache().sqrt_psd;
}

double CovarianceMatrix::min_eigenvalue() const {
  return eigenvalues()(dim() - 1);
}

bool CovarianceMatrix::is_positive_semidefinite() const {
  const double lmax = std::abs(max_eigenvalue());
  return min_eigenvalue() >= -kPsdTolerance * std::max(lmax, 1e-300);
}

Eigen::VectorXd CovarianceMatrix::solve(const Eigen::VectorXd& b) const {
  if (b.size() != dim())
    throw DimensionError("CovarianceMatrix::solve: dimension mismatch");
  const auto& eig = cache().eig;
  const double floor = kEigenvalueFloor * std::abs(eig.values(0));
  for (Eigen::Index i = 0; i < dim(); ++i) {
    if (eig.values(i) <= floor) {
      std::ostringstream os;
      os << "CovarianceMatrix::solve: eigenvalue " << i << " ("
         << eig.values(i) << ") below floor " << floor;
      throw SingularMatrixError(os.str(), i);
    }
  }
  Eigen::VectorXd w = eig.vectors.transpose() * b;
  w.array() /= eig.values.array();
  return eig.vectors * w;
}

CovarianceMatrix build_soar_covariance(const GridGeometry& geom,
                                       const SoarKernelSpec& spec) {
  if (spec.length_scale <= 0)
    throw ParameterError("build_soar_covariance: length scale must be > 0");
  const Eigen::Index n = geom.size();
  if (spec.variance_field.size() != n)
    throw DimensionError(
        "build_soar_covariance: variance field size does not match grid");
  if ((spec.variance_field.array() < 0).any())
    throw ParameterError("build_soar_covariance: negative variance");

  const Eigen::VectorXd sigma = spec.variance_field.cwiseSqrt();
  Eigen::MatrixXd c(n, n);
  const double L = spec.length_scale;
  for (Eigen::Index p = 0; p < n; ++p) {
    c(p, p) = spec.variance_field(p);
    for (Eigen::Index q = p + 1; q < n; ++q) {
      const double r = geom.distance(p, q);
      const double phi = (1.0 + r / L) * std::exp(-r / L);
      const double v = sigma(p) * sigma(q) * phi;
      c(p, q) = v;
      c(q, p) = v;
    }
  }
  return CovarianceMatrix(c);
}

namespace {

Eigen::MatrixXd power_through_eig(const CovarianceMatrix& cov,
                                 double exponent, const char* who) {
  const auto& vals = cov.eigenvalues();
  const auto& vecs = cov.eigenvectors();
  const double floor = kEigenvalueFloor * std::abs(vals(0));
  Eigen::VectorXd powered(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) <= floor) {
      std::ostringstream os;
      os << who << ": eigenvalue " << i << " (" << vals(i)
         << ") below floor " << floor;
      throw SingularMatrixError(os.str(), i);
    }
    powered(i) = std::pow(vals(i), exponent);
  }
  return vecs * powered.asDiagonal() * vecs.transpose();
}

}  // namespace

Eigen::MatrixXd inverse_sqrt(const CovarianceMatrix& cov) {
  return power_through_eig(cov, -0.5, "inverse_sqrt");
}

Eigen::MatrixXd matrix_sqrt(const CovarianceMatrix& cov) {
  return power_through_eig(cov, 0.5, "matrix_sqrt");
}

RegularizedMatrix regularize_spd(const Eigen::MatrixXd& m, double mu,
                                 SpdRegularizer mode) {
  if (m.rows() != m.cols())
    throw DimensionError("regularize_spd: input must be square");
  if (mu < 0.0 || mu > 1.0)
    throw ParameterError("regularize_spd: mu must lie in [0, 1]");

  const Eigen::Index n = m.rows();
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  const double tr = sym.trace();
  const double scale =
      mode == SpdRegularizer::kPaperLiteral ? tr : tr / static_cast<double>(n);

  Eigen::MatrixXd out = (1.0 - mu) * sym;
  out.diagonal().array() += mu * scale;

  RegularizedMatrix result;
  result.cov = CovarianceMatrix(out);
  result.min_eigenvalue = result.cov.min_eigenvalue();
  result.strictly_positive_definite =
      result.min_eigenvalue >
      kEigenvalueFloor * std::abs(result.cov.max_eigenvalue());
  return result;
}

Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mean,
                                const CovarianceMatrix& cov, Eigen::Index n,
                                std::uint64_t seed) {
  if (mean.size() != cov.dim())
    throw DimensionError("sample_gaussian: mean/covariance dimension mismatch");
  if (n <= 0) throw ParameterError("sample_gaussian: n must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(mean.size(), n);
  for (Eigen::Index col = 0; col < n; ++col)
    for (Eigen::Index row = 0; row < mean.size(); ++row)
      z(row, col) = normal(rng);

  Eigen::MatrixXd samples = cov.sqrt_psd() * z;
  samples.colwise() += mean;
  return samples;
}

Eigen::MatrixXd empirical_covariance(
    const Eigen::MatrixXd& samples,
    const std::optional<Eigen::VectorXd>& center) {
  const Eigen::Index n = samples.cols();
  if (n < 2)
    throw InsufficientDataError(
        "empirical_covariance: need at least 2 columns");

  Eigen::VectorXd m = center ? *center : samples.rowwise().mean().eval();
  if (m.size() != samples.rows())
    throw DimensionError("empirical_covariance: center dimension mismatch");

  Eigen::MatrixXd centered = samples.colwise() - m;
  Eigen::MatrixXd c =
      (centered * centered.transpose()) / static_cast<double>(n - 1);
  return 0.5 * (c + c.transpose());
}

}  // namespace dacomp
