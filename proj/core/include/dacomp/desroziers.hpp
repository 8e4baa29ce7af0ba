#ifndef DACOMP_DESROZIERS_HPP
#define DACOMP_DESROZIERS_HPP

#include <filesystem>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dacomp/assimilation.hpp"
#include "dacomp/covariance.hpp"

namespace dacomp {

// Uniformly sampled flow-independent window: times T_s + k Delta_t,
// start-inclusive, end-exclusive.
struct SamplingWindow {
  double t_start = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  int n_members = 1;

  std::vector<double> times() const;
};

// Per-window residual collection. Columns share the observation dimension;
// oma/amb, when present, are matched column-for-column with omb.
struct ResidualBank {
  SamplingWindow window;
  Eigen::MatrixXd omb;                  // y - H(x_b)
  std::optional<Eigen::MatrixXd> oma;   // y - H(x_a)
  std::optional<Eigen::MatrixXd> amb;   // H(x_a) - H(x_b)
  std::vector<double> times;            // per-column tags
  std::vector<int> members;

  Eigen::Index count() const { return omb.cols(); }
  void check() const;

  // Mean residual; the estimators assume centered errors, this makes any
  // bias visible.
  Eigen::VectorXd omb_mean() const { return omb.rowwise().mean(); }
};

// Eq-28-style estimate: symmetrized mean of (y-H(x_a))(y-H(x_b))^T,
// normalized by n (no mean subtraction). Not regularized.
Eigen::MatrixXd estimate_R_desroziers(const ResidualBank& bank);

struct HbhtEstimate {
  Eigen::MatrixXd hbht;
  int negative_eigenvalues = 0;  // diagnostic; nothing is removed
};

// Symmetrized second moment of omb minus R.
HbhtEstimate estimate_HBHt_from_omb(const ResidualBank& bank,
                                    const CovarianceMatrix& r);

// Symmetrized mean of (H(x_a)-H(x_b))(y-H(x_b))^T.
Eigen::MatrixXd estimate_HBHt_cross(const ResidualBank& bank);

// Trajectory/observation ensembles keyed by time: one matrix of member
// columns per time step.
using EnsembleSeries = std::map<double, Eigen::MatrixXd>;

// Covariances and operator shared by every per-pair analysis; x_b and y are
// filled in per (time, member).
struct ProblemTemplate {
  CovarianceMatrix background_cov;
  CovarianceMatrix observation_cov;
  ObservationOperator op;
};

// Builds the bank over the window: omb for every (time, member) pair;
// oma/amb only when with_analyses is set (runs blue_analysis per pair with
// the template's covariances).
ResidualBank collect_residuals(const EnsembleSeries& backgrounds,
                               const EnsembleSeries& observations,
                               const ProblemTemplate& problem,
                               const SamplingWindow& window,
                               bool with_analyses = false);

// Bank persistence: binary matrices next to a small CSV index (window
// parameters in the header line, then one time,member row per column).
void save_bank(const std::filesystem::path& prefix, const ResidualBank& bank);
ResidualBank load_bank(const std::filesystem::path& prefix);

}  // namespace dacomp

#endif
