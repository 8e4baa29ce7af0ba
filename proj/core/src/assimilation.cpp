#include "dacomp/assimilation.hpp"

#include <cmath>
#include <deque>
#include <fstream>

#include <Eigen/Cholesky>

#include "dacomp/matrix_io.hpp"

namespace dacomp {

void AssimilationProblem::check_dimensions() const {
  if (background.size() != background_cov.dim())
    throw DimensionError("AssimilationProblem: dim(x_b) != dim(B)");
  if (observation.size() != observation_cov.dim())
    throw DimensionError("AssimilationProblem: dim(y) != dim(R)");
  if (op.linear) {
    if (op.linear->cols() != background.size() ||
        op.linear->rows() != observation.size())
      throw DimensionError("AssimilationProblem: H shape mismatch");
  }
  if (!op.apply)
    throw ParameterError("AssimilationProblem: missing observation operator");
}

double cost(const AssimilationProblem& problem, const Eigen::VectorXd& x) {
  problem.check_dimensions();
  const Eigen::VectorXd db = x - problem.background;
  const Eigen::VectorXd dy = problem.observation - problem.op.apply(x);
  return 0.5 * db.dot(problem.background_cov.solve(db)) +
         0.5 * dy.dot(problem.observation_cov.solve(dy));
}

Eigen::VectorXd cost_gradient(const AssimilationProblem& problem,
                              const Eigen::VectorXd& x) {
  problem.check_dimensions();
  const Eigen::VectorXd db = x - problem.background;
  const Eigen::VectorXd dy = problem.observation - problem.op.apply(x);
  Eigen::VectorXd grad = problem.background_cov.solve(db);
  const Eigen::VectorXd rinv_dy = problem.observation_cov.solve(dy);

  if (problem.op.linear) {
    grad.noalias() -= problem.op.linear->transpose() * rinv_dy;
    return grad;
  }

  // Nonlinear operator without a linearization: central finite differences
  // on the observation term, component by component.
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = 1e-6 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x;
    Eigen::VectorXd xm = x;
    xp(i) += step;
    xm(i) -= step;
    const Eigen::VectorXd dh =
        (problem.op.apply(xp) - problem.op.apply(xm)) / (2.0 * step);
    grad(i) -= dh.dot(rinv_dy);
  }
  return grad;
}

AnalysisResult blue_analysis(const AssimilationProblem& problem) {
  problem.check_dimensions();
  if (!problem.op.linear)
    throw ParameterError("blue_analysis: requires a linear operator");
  const Eigen::MatrixXd& h = *problem.op.linear;
  const Eigen::MatrixXd& b = problem.background_cov.entries();

  const Eigen::MatrixXd bht = b * h.transpose();
  Eigen::MatrixXd g = h * bht + problem.observation_cov.entries();
  g = 0.5 * (g + g.transpose());

  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw SingularMatrixError("blue_analysis: H B H^T + R is not SPD", -1);
  // Guard against numerical singularity the LDLT does not flag.
  const Eigen::VectorXd d = ldlt.vectorD();
  if (d.minCoeff() <= kEigenvalueFloor * d.maxCoeff())
    throw SingularMatrixError("blue_analysis: H B H^T + R nearly singular",
                              -1);

  // K = B H^T G^{-1}, via solves on G rather than an explicit inverse.
  const Eigen::MatrixXd gain =
      ldlt.solve(bht.transpose()).transpose();

  AnalysisResult out;
  out.omb = problem.observation - h * problem.background;
  out.analysis = problem.background + gain * out.omb;
  out.oma = problem.observation - h * out.analysis;
  Eigen::MatrixXd a = b - gain * h * b;
  out.analysis_cov = CovarianceMatrix(a);
  out.gain = gain;
  return out;
}

AnalysisResult variational_analysis(const AssimilationProblem& problem,
                                    const MinimizerOptions& opts) {
  problem.check_dimensions();
  const Eigen::Index n = problem.background.size();

  Eigen::VectorXd x = problem.background;
  Eigen::VectorXd grad = cost_gradient(problem, x);
  double j = cost(problem, x);
  const double gtol =
      opts.gradient_tolerance * std::max(1.0, grad.norm());

  std::vector<double> trace{j};
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  Eigen::VectorXd best_x = x;
  double best_j = j;

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    if (grad.norm() <= gtol) {
      AnalysisResult out;
      out.analysis = x;
      out.omb = problem.observation - problem.op.apply(problem.background);
      out.oma = problem.observation - problem.op.apply(x);
      out.cost_trace = std::move(trace);
      return out;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = grad;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t k = s_hist.size(); k-- > 0;) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (std::size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd direction = -q;
    double slope = grad.dot(direction);
    if (slope >= 0) {  // not a descent direction, fall back to steepest
      direction = -grad;
      slope = -grad.squaredNorm();
    }

    // Backtracking Armijo line search.
    double step = 1.0;
    const double c1 = 1e-4;
    double j_new = j;
    Eigen::VectorXd x_new(n);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * direction;
      j_new = cost(problem, x_new);
      if (std::isfinite(j_new) && j_new <= j + c1 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted)
      throw ConvergenceError("variational_analysis: line search failed",
                             best_x, best_j);

    Eigen::VectorXd grad_new = cost_gradient(problem, x_new);
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = grad_new - grad;
    const double sy = s.dot(yv);
    if (sy > 1e-14 * s.norm() * yv.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(yv);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.lbfgs_memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    grad = std::move(grad_new);
    j = j_new;
    trace.push_back(j);
    if (j < best_j) {
      best_j = j;
      best_x = x;
    }
  }

  if (grad.norm() <= gtol) {
    AnalysisResult out;
    out.analysis = x;
    out.omb = problem.observation - problem.op.apply(problem.background);
    out.oma = problem.observation - problem.op.apply(x);
    out.cost_trace = std::move(trace);
    return out;
  }
  throw ConvergenceError(
      "variational_analysis: no convergence within max iterations", best_x,
      best_j);
}

InfluenceSummary influence_matrix(const AssimilationProblem& problem) {
  problem.check_dimensions();
  if (!problem.op.linear)
    throw ParameterError("influence_matrix: requires a linear operator");
  const Eigen::MatrixXd& h = *problem.op.linear;

  const Eigen::MatrixXd rinv_sqrt = inverse_sqrt(problem.observation_cov);
  const Eigen::MatrixXd b_sqrt = matrix_sqrt(problem.background_cov);
  const Eigen::MatrixXd m = rinv_sqrt * h * b_sqrt;
  Eigen::MatrixXd mmt = m * m.transpose();
  mmt = 0.5 * (mmt + mmt.transpose());

  const EigenDecomposition eig = sorted_symmetric_eig(mmt);

  InfluenceSummary out;
  out.dfs = 0.0;
  out.er = 0.0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    const double lambda = std::max(eig.values(i), 0.0);
    const double arg = 1.0 + lambda;
    if (arg <= 0.0)
      throw NumericalError("influence_matrix: degenerate spectrum");
    out.dfs += lambda / arg;
    out.er += 0.5 * std::log(arg);
  }

  const AnalysisResult blue = blue_analysis(problem);
  out.S = blue.gain->transpose() * h.transpose();
  return out;
}

void write_analysis_csv(const std::filesystem::path& path,
                        const AnalysisResult& result,
                        const std::optional<InfluenceSummary>& info) {
  std::ofstream os(path);
  if (!os) throw IoError("write_analysis_csv: cannot open " + path.string());
  os << "omb_norm,oma_norm,dfs,er,tr_A";
  for (Eigen::Index i = 0; i < result.analysis.size(); ++i) os << ",x_a_" << i;
  os << '\n';
  os << format_double(result.omb.norm()) << ','
     << format_double(result.oma.norm()) << ','
     << (info ? format_double(info->dfs) : "") << ','
     << (info ? format_double(info->er) : "") << ','
     << (result.analysis_cov
             ? format_double(result.analysis_cov->entries().trace())
             : "");
  for (Eigen::Index i = 0; i < result.analysis.size(); ++i)
    os << ',' << format_double(result.analysis(i));
  os << '\n';
}

}  // namespace dacomp
