#ifndef DACOMP_COVARIANCE_HPP
#define DACOMP_COVARIANCE_HPP

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>

#include <Eigen/Core>

#include "dacomp/errors.hpp"
#include "dacomp/grid.hpp"

namespace dacomp {

// Relative tolerance below which an eigenvalue counts as numerically zero
// for matrix-root purposes.
inline constexpr double kEigenvalueFloor = 1e-12;

// Relative tolerance for the PSD invariant check.
inline constexpr double kPsdTolerance = 1e-10;

struct EigenDecomposition {
  Eigen::VectorXd values;   // non-increasing
  Eigen::MatrixXd vectors;  // orthonormal columns, deterministic signs
};

// Eigendecomposition of a symmetric matrix with values sorted in
// non-increasing order and each eigenvector's largest-magnitude component
// made positive (deterministic across runs).
EigenDecomposition sorted_symmetric_eig(const Eigen::MatrixXd& sym);

// Dense symmetric positive (semi-)definite matrix with a cached, thread-safe
// eigendecomposition. Stored exactly symmetrized. Immutable after
// construction; cheap to copy (cache is shared).
class CovarianceMatrix {
 public:
  CovarianceMatrix() = default;

  // Symmetrizes the input as (m + m^T)/2. Does not eigendecompose.
  explicit CovarianceMatrix(const Eigen::MatrixXd& m);

  Eigen::Index dim() const { return entries_.rows(); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  // Non-increasing eigenvalues; computed on first use, synchronized.
  const Eigen::VectorXd& eigenvalues() const;
  const Eigen::MatrixXd& eigenvectors() const;

  // PSD sqrt with negative eigenvalues clamped to zero (sampling path).
  const Eigen::MatrixXd& sqrt_psd() const;

  double max_eigenvalue() const { return eigenvalues()(0); }
  double min_eigenvalue() const;

  // True when all eigenvalues >= -kPsdTolerance * max |eigenvalue|.
  bool is_positive_semidefinite() const;

  // C^{-1} b through the eigendecomposition; throws SingularMatrixError if
  // any eigenvalue is below the floor.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  struct Cache {
    EigenDecomposition eig;
    Eigen::MatrixXd sqrt_psd;
  };
  const Cache& cache() const;

  Eigen::MatrixXd entries_;
  mutable std::shared_ptr<const Cache> cache_;
  mutable std::mutex cache_mutex_;

 public:
  CovarianceMatrix(const CovarianceMatrix& other);
  CovarianceMatrix& operator=(const CovarianceMatrix& other);
  CovarianceMatrix(CovarianceMatrix&& other) noexcept;
  CovarianceMatrix& operator=(CovarianceMatrix&& other) noexcept;
};

// SOAR (Balgovind) kernel: phi(r) = (1 + r/L) exp(-r/L), with per-point
// marginal variances sigma_i^2.
struct SoarKernelSpec {
  double length_scale = 1.0;
  Eigen::VectorXd variance_field;

  static SoarKernelSpec homogeneous(double length_scale, double variance,
                                    Eigen::Index n) {
    SoarKernelSpec s;
    s.length_scale = length_scale;
    s.variance_field = Eigen::VectorXd::Constant(n, variance);
    return s;
  }
};

// entries[p][q] = sigma_p sigma_q (1 + r/L) exp(-r/L), r the Euclidean
// lattice distance. SPD for any L > 0.
CovarianceMatrix build_soar_covariance(const GridGeometry& geom,
                                       const SoarKernelSpec& spec);

// V diag(lambda^{-1/2}) V^T. Throws SingularMatrixError when an eigenvalue
// falls below kEigenvalueFloor * lambda_max.
Eigen::MatrixXd inverse_sqrt(const CovarianceMatrix& cov);

// V diag(lambda^{1/2}) V^T, same floor policy.
Eigen::MatrixXd matrix_sqrt(const CovarianceMatrix& cov);

enum class SpdRegularizer {
  kTraceNormalized,  // C = (Tr(M_sym)/dim) I   (default)
  kPaperLiteral,     // C = Tr(M_sym) I
};

struct RegularizedMatrix {
  CovarianceMatrix cov;
  bool strictly_positive_definite = false;  // warning flag when false
  double min_eigenvalue = 0.0;
};

// (1-mu)/2 (M + M^T) + mu C, with C per the selected regularizer mode.
RegularizedMatrix regularize_spd(
    const Eigen::MatrixXd& m, double mu,
    SpdRegularizer mode = SpdRegularizer::kTraceNormalized);

// n columns mean + cov^{1/2} z, z standard normal; deterministic under a
// fixed seed. Uses the symmetric PSD square root.
Eigen::MatrixXd sample_gaussian(const Eigen::VectorXd& mean,
                                const CovarianceMatrix& cov, Eigen::Index n,
                                std::uint64_t seed);

// (1/(n-1)) sum (s - m)(s - m)^T over columns; m is the provided center or
// the sample mean. Symmetric by construction.
Eigen::MatrixXd empirical_covariance(
    const Eigen::MatrixXd& samples,
    const std::optional<Eigen::VectorXd>& center = std::nullopt);

}  // namespace dacomp

#endif
