#ifndef DACOMP_ASSIMILATION_HPP
#define DACOMP_ASSIMILATION_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "dacomp/covariance.hpp"
#include "dacomp/errors.hpp"

namespace dacomp {

// State -> observation map. Linear operators carry their matrix; nonlinear
// ones may optionally supply a linearization used for analytic gradients.
struct ObservationOperator {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> apply;
  std::optional<Eigen::MatrixXd> linear;

  static ObservationOperator from_matrix(const Eigen::MatrixXd& h) {
    ObservationOperator op;
    op.linear = h;
    op.apply = [h](const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return h * x;
    };
    return op;
  }

  static ObservationOperator identity(Eigen::Index n) {
    return from_matrix(Eigen::MatrixXd::Identity(n, n));
  }

  bool is_linear() const { return linear.has_value(); }
};

// The quintuple (x_b, y, B, R, H) defining one analysis.
struct AssimilationProblem {
  Eigen::VectorXd background;    // x_b
  Eigen::VectorXd observation;   // y
  CovarianceMatrix background_cov;   // B
  CovarianceMatrix observation_cov;  // R
  ObservationOperator op;        // H / script-H

  void check_dimensions() const;
};

struct AnalysisResult {
  Eigen::VectorXd analysis;  // x_a
  std::optional<CovarianceMatrix> analysis_cov;  // A, linear case only
  std::optional<Eigen::MatrixXd> gain;           // K
  Eigen::VectorXd omb;  // y - H(x_b)
  Eigen::VectorXd oma;  // y - H(x_a)
  std::vector<double> cost_trace;  // iterative path only
};

struct InfluenceSummary {
  Eigen::MatrixXd S;  // K^T H^T
  double dfs = 0.0;   // Tr(S)
  double er = 0.0;    // -1/2 ln det(I - S), via the stable form
};

// 1/2 |x - x_b|^2_{B^-1} + 1/2 |y - H(x)|^2_{R^-1}
double cost(const AssimilationProblem& problem, const Eigen::VectorXd& x);

// Analytic gradient when the operator is linear (or carries a
// linearization); central finite differences on the observation term
// otherwise, step 1e-6 * max(1, |x_i|) per component.
Eigen::VectorXd cost_gradient(const AssimilationProblem& problem,
                              const Eigen::VectorXd& x);

// Closed-form analysis for linear H:
//   K = B H^T (H B H^T + R)^{-1},  x_a = x_b + K (y - H x_b),
//   A = (I - K H) B.
// The gain is obtained by solving against (H B H^T + R), never by forming
// its inverse.
AnalysisResult blue_analysis(const AssimilationProblem& problem);

struct MinimizerOptions {
  int max_iterations = 500;
  double gradient_tolerance = 1e-8;  // relative to max(1, |grad J(x_b)|)
  int lbfgs_memory = 10;
};

// Quasi-Newton (L-BFGS with backtracking line search) minimization of the
// 3D-Var cost. Stops when |grad J| <= tol * max(1, |grad J(x_b)|).
AnalysisResult variational_analysis(const AssimilationProblem& problem,
                                    const MinimizerOptions& opts = {});

// S = K^T H^T with DFS and ER computed through M M^T where
// M = R^{-1/2} H B^{1/2}:
//   DFS = Tr(M M^T (I + M M^T)^{-1}),  ER = 1/2 ln det(I + M M^T),
// the latter as a sum of ln(1 + lambda_i) over eigenvalues.
InfluenceSummary influence_matrix(const AssimilationProblem& problem);

// Writes x_a plus scalar diagnostics (innovation norms, DFS, ER, Tr(A))
// as a two-line CSV.
void write_analysis_csv(const std::filesystem::path& path,
                        const AnalysisResult& result,
                        const std::optional<InfluenceSummary>& info);

}  // namespace dacomp

#endif
