#include "dacomp/compression.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/SVD>

#include "dacomp/matrix_io.hpp"

namespace dacomp {

ProjectionOperator ProjectionOperator::truncated(Eigen::Index q) const {
  if (q < 1 || q > rank)
    throw ParameterError("ProjectionOperator::truncated: invalid rank");
  ProjectionOperator out = *this;
  out.modes = modes.leftCols(q);
  out.rank = q;
  return out;
}

namespace {

void apply_sign_convention(Eigen::MatrixXd& columns) {
  for (Eigen::Index k = 0; k < columns.cols(); ++k) {
    Eigen::Index imax = 0;
    double amax = -1.0;
    for (Eigen::Index i = 0; i < columns.rows(); ++i) {
      const double a = std::abs(columns(i, k));
      if (a > amax) {
        amax = a;
        imax = i;
      }
    }
    if (columns(imax, k) < 0) columns.col(k) = -columns.col(k);
  }
}

}  // namespace

ProjectionOperator build_oc(const SnapshotMatrix& snapshots,
                            const CovarianceMatrix& r, Eigen::Index q) {
  const Eigen::Index m = snapshots.snapshots.rows();
  const Eigen::Index n = snapshots.snapshots.cols();
  if (n < 1) throw InsufficientDataError("build_oc: no snapshots");
  if (m != r.dim())
    throw DimensionError("build_oc: snapshot/R dimension mismatch");
  if (q < 1) throw ParameterError("build_oc: rank must be >= 1");

  ProjectionOperator out;
  out.kind = ProjectionKind::kObservation;
  out.r_inv_sqrt = inverse_sqrt(r);
  out.assumed_r = r;

  const Eigen::MatrixXd normalized = out.r_inv_sqrt * snapshots.snapshots;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(normalized,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();

  Eigen::Index numeric_rank = 0;
  const double tol = std::max(m, n) * 1e-14 * sv(0);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++numeric_rank;
  if (q > numeric_rank) {
    std::ostringstream os;
    os << "build_oc: requested rank " << q << " exceeds snapshot rank "
       << numeric_rank;
    throw RankError(os.str(), numeric_rank);
  }

  Eigen::MatrixXd u = svd.matrixU().leftCols(q);
  apply_sign_convention(u);
  out.modes = std::move(u);
  out.rank = q;
  // Eigenvalues of the empirical snapshot covariance.
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  out.spectrum = sv.array().square() / denom;
  return out;
}

ProjectionOperator build_ic(const Eigen::MatrixXd& hbht,
                            const CovarianceMatrix& r, Eigen::Index q) {
  if (hbht.rows() != hbht.cols())
    throw DimensionError("build_ic: HBH^T must be square");
  if (hbht.rows() != r.dim())
    throw DimensionError("build_ic: HBH^T/R dimension mismatch");
  if (q < 1 || q > r.dim())
    throw ParameterError("build_ic: rank out of range");

  ProjectionOperator out;
  out.kind = ProjectionKind::kInformation;
  out.r_inv_sqrt = inverse_sqrt(r);
  out.assumed_r = r;

  const Eigen::MatrixXd sym_hbht = 0.5 * (hbht + hbht.transpose());
  Eigen::MatrixXd normalized = out.r_inv_sqrt * sym_hbht * out.r_inv_sqrt;
  normalized = 0.5 * (normalized + normalized.transpose());

  EigenDecomposition eig = sorted_symmetric_eig(normalized);
  if (eig.values(0) <= 0.0)
    throw NumericalError("build_ic: all eigenvalues non-positive");

  out.negatives_clamped = 0;
  for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
    if (eig.values(i) < 0.0) {
      eig.values(i) = 0.0;
      ++out.negatives_clamped;
    }
  }
  out.modes = eig.vectors.leftCols(q);
  out.rank = q;
  out.spectrum = std::move(eig.values);
  return out;
}

ReducedProblem reduce_problem(
    const AssimilationProblem& problem, const ProjectionOperator& proj,
    const std::optional<CovarianceMatrix>& r_assumed) {
  problem.check_dimensions();
  if (proj.rank < 1)
    throw ParameterError("reduce_problem: projection rank must be >= 1");
  if (proj.modes.rows() != problem.observation.size())
    throw DimensionError(
        "reduce_problem: projection built over a different observation dim");

  const CovarianceMatrix& r_a = r_assumed ? *r_assumed : proj.assumed_r;
  const Eigen::MatrixXd r_a_inv_sqrt =
      r_assumed ? inverse_sqrt(*r_assumed) : proj.r_inv_sqrt;
  const Eigen::MatrixXd pt = proj.modes.transpose() * r_a_inv_sqrt;  // q x m

  ReducedProblem out;
  out.parent = &problem;
  out.reduced.background = problem.background;
  out.reduced.background_cov = problem.background_cov;
  out.reduced.observation = pt * problem.observation;

  // Honest reduced observation covariance. Exactly the identity when the
  // assumed matrix coincides with the true one.
  if (r_a.entries() == problem.observation_cov.entries()) {
    out.reduced.observation_cov = CovarianceMatrix(
        Eigen::MatrixXd::Identity(proj.rank, proj.rank));
  } else {
    out.reduced.observation_cov = CovarianceMatrix(
        pt * problem.observation_cov.entries() * pt.transpose());
  }

  if (problem.op.linear) {
    out.reduced.op = ObservationOperator::from_matrix(pt * *problem.op.linear);
  } else {
    auto parent_apply = problem.op.apply;
    out.reduced.op.apply = [pt, parent_apply](
                               const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return pt * parent_apply(x);
    };
  }
  return out;
}

TruncationIndicators truncation_indicators(const Eigen::VectorXd& spectrum,
                                           Eigen::Index q) {
  if (q < 2 || q > spectrum.size())
    throw ParameterError("truncation_indicators: q must lie in [2, len]");
  const double s1 = spectrum(0);
  const double sq = spectrum(q - 1);
  const double sq_prev = spectrum(q - 2);
  if (sq <= 0.0)
    throw NumericalError("truncation_indicators: spectrum exhausted at q");
  TruncationIndicators out;
  out.information_loss = 1.0 - sq_prev / sq;
  out.conditioning = s1 / sq;
  out.objective = (sq * sq_prev + s1) / (s1 * sq);
  return out;
}

double tail_energy(const Eigen::VectorXd& spectrum, Eigen::Index q) {
  if (q < 0 || q > spectrum.size())
    throw ParameterError("tail_energy: q out of range");
  const double total = spectrum.sum();
  if (total <= 0.0) return 0.0;
  return spectrum.tail(spectrum.size() - q).sum() / total;
}

Eigen::Index optimal_truncation(const Eigen::VectorXd& spectrum) {
  if (spectrum.size() == 0)
    throw ParameterError("optimal_truncation: empty spectrum");
  if (spectrum(0) <= 0.0)
    throw NumericalError("optimal_truncation: leading eigenvalue must be > 0");
  const double threshold = std::sqrt(spectrum(0));
  Eigen::Index q = 1;
  for (Eigen::Index i = 1; i < spectrum.size(); ++i)
    if (spectrum(i) >= threshold) q = i + 1;
  return q;
}

void save_projection(const std::filesystem::path& path,
                     const ProjectionOperator& proj) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("save_projection: cannot open " + path.string());
  const std::uint64_t kind =
      proj.kind == ProjectionKind::kObservation ? 0u : 1u;
  const std::uint64_t rank = static_cast<std::uint64_t>(proj.rank);
  const std::uint64_t clamped =
      static_cast<std::uint64_t>(proj.negatives_clamped);
  os.write(reinterpret_cast<const char*>(&kind), 8);
  os.write(reinterpret_cast<const char*>(&rank), 8);
  os.write(reinterpret_cast<const char*>(&clamped), 8);
  write_matrix_binary(os, proj.spectrum);
  write_matrix_binary(os, proj.modes);
  write_matrix_binary(os, proj.r_inv_sqrt);
  write_matrix_binary(os, proj.assumed_r.entries());
  if (!os) throw IoError("save_projection: write failed " + path.string());
}

ProjectionOperator load_projection(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("load_projection: cannot open " + path.string());
  std::uint64_t kind = 0, rank = 0, clamped = 0;
  is.read(reinterpret_cast<char*>(&kind), 8);
  is.read(reinterpret_cast<char*>(&rank), 8);
  is.read(reinterpret_cast<char*>(&clamped), 8);
  if (!is || kind > 1)
    throw IoError("load_projection: bad header in " + path.string());
  ProjectionOperator out;
  out.kind = kind == 0 ? ProjectionKind::kObservation
                       : ProjectionKind::kInformation;
  out.rank = static_cast<Eigen::Index>(rank);
  out.negatives_clamped = static_cast<int>(clamped);
  out.spectrum = read_matrix_binary(is);
  out.modes = read_matrix_binary(is);
  out.r_inv_sqrt = read_matrix_binary(is);
  out.assumed_r = CovarianceMatrix(read_matrix_binary(is));
  return out;
}

}  // namespace dacomp
