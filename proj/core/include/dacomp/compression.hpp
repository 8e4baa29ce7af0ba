#ifndef DACOMP_COMPRESSION_HPP
#define DACOMP_COMPRESSION_HPP

#include <filesystem>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dacomp/assimilation.hpp"
#include "dacomp/covariance.hpp"

namespace dacomp {

// Observation snapshots: one column per time (and ensemble member).
struct SnapshotMatrix {
  Eigen::MatrixXd snapshots;   // dim(y) x n_obs
  std::vector<double> times;   // per-column timestamps, seconds
};

enum class ProjectionKind { kObservation, kInformation };

// Rank-q compression map z -> Lq^T R^{-1/2} z, with the spectrum retained
// for truncation diagnostics. The R stored here is the matrix assumed at
// build time (which may differ from the true observation covariance).
struct ProjectionOperator {
  Eigen::MatrixXd modes;        // Lq, orthonormal columns
  Eigen::MatrixXd r_inv_sqrt;   // R_A^{-1/2} used at build time
  CovarianceMatrix assumed_r;   // R_A itself
  Eigen::Index rank = 0;        // q
  ProjectionKind kind = ProjectionKind::kObservation;
  Eigen::VectorXd spectrum;     // full non-increasing, nonnegative
  int negatives_clamped = 0;    // IC only: eigenvalues clamped at zero

  Eigen::VectorXd apply(const Eigen::VectorXd& y) const {
    return modes.transpose() * (r_inv_sqrt * y);
  }

  // Same operator truncated to a smaller rank (columns are nested).
  ProjectionOperator truncated(Eigen::Index q) const;
};

struct ReducedProblem {
  AssimilationProblem reduced;
  const AssimilationProblem* parent = nullptr;
};

// PCA of the noise-normalized snapshots: Lq = first q left singular vectors
// of R^{-1/2} Y; spectrum = squared singular values / (n_obs - 1).
ProjectionOperator build_oc(const SnapshotMatrix& snapshots,
                            const CovarianceMatrix& r, Eigen::Index q);

// Lq = top-q eigenvectors of the symmetrized R^{-1/2} HBH^T R^{-1/2};
// spectrum = its eigenvalues clamped at zero (count reported).
ProjectionOperator build_ic(const Eigen::MatrixXd& hbht,
                            const CovarianceMatrix& r, Eigen::Index q);

// y_q = Lq^T R_A^{-1/2} y, H_q = Lq^T R_A^{-1/2} o H,
// R_q = Lq^T R_A^{-1/2} R_true R_A^{-1/2} Lq. When the assumed R equals the
// problem's true R, R_q is the identity exactly. An explicit R_assumed
// overrides the operator's build-time matrix.
ReducedProblem reduce_problem(
    const AssimilationProblem& problem, const ProjectionOperator& proj,
    const std::optional<CovarianceMatrix>& r_assumed = std::nullopt);

struct TruncationIndicators {
  double information_loss;  // E_q = 1 - sigma_{q-1}/sigma_q, as printed
  double conditioning;      // mu_q = sigma_1 / sigma_q
  double objective;         // f = (sigma_q sigma_{q-1} + sigma_1)/(sigma_1 sigma_q)
};

// q is 1-based and must be >= 2 (the indicators reference sigma_{q-1}).
TruncationIndicators truncation_indicators(const Eigen::VectorXd& spectrum,
                                           Eigen::Index q);

// Conventional tail-energy diagnostic: sum_{i>q} sigma_i / sum sigma_i.
double tail_energy(const Eigen::VectorXd& spectrum, Eigen::Index q);

// Largest q with sigma_q >= sqrt(sigma_1); 1 when nothing beyond the first
// mode clears the threshold.
Eigen::Index optimal_truncation(const Eigen::VectorXd& spectrum);

void save_projection(const std::filesystem::path& path,
                     const ProjectionOperator& proj);
ProjectionOperator load_projection(const std::filesystem::path& path);

}  // namespace dacomp

#endif
