#include "dacomp/desroziers.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "dacomp/matrix_io.hpp"

namespace dacomp {

std::vector<double> SamplingWindow::times() const {
  if (dt <= 0.0) throw ParameterError("SamplingWindow: dt must be > 0");
  if (t_end <= t_start)
    throw ParameterError("SamplingWindow: t_start must precede t_end");
  const auto n = static_cast<Eigen::Index>(
      std::llround((t_end - t_start) / dt));
  if (n < 1) throw ParameterError("SamplingWindow: empty window");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < n; ++k)
    out.push_back(t_start + static_cast<double>(k) * dt);
  return out;
}

void ResidualBank::check() const {
  const Eigen::Index n = omb.cols();
  if (oma && (oma->cols() != n || oma->rows() != omb.rows()))
    throw DimensionError("ResidualBank: oma shape mismatch");
  if (amb && (amb->cols() != n || amb->rows() != omb.rows()))
    throw DimensionError("ResidualBank: amb shape mismatch");
  if (static_cast<Eigen::Index>(times.size()) != n ||
      static_cast<Eigen::Index>(members.size()) != n)
    throw DimensionError("ResidualBank: tag count mismatch");
}

Eigen::MatrixXd estimate_R_desroziers(const ResidualBank& bank) {
  bank.check();
  if (!bank.oma)
    throw InsufficientDataError("estimate_R_desroziers: bank has no oma");
  if (bank.count() < 2)
    throw InsufficientDataError("estimate_R_desroziers: need >= 2 columns");
  const Eigen::MatrixXd raw =
      (*bank.oma * bank.omb.transpose()) / static_cast<double>(bank.count());
  return 0.5 * (raw + raw.transpose());
}

HbhtEstimate estimate_HBHt_from_omb(const ResidualBank& bank,
                                    const CovarianceMatrix& r) {
  bank.check();
  if (bank.count() < 2)
    throw InsufficientDataError("estimate_HBHt_from_omb: need >= 2 columns");
  if (r.dim() != bank.omb.rows())
    throw DimensionError("estimate_HBHt_from_omb: R dimension mismatch");
  Eigen::MatrixXd raw =
      (bank.omb * bank.omb.transpose()) / static_cast<double>(bank.count());
  raw = 0.5 * (raw + raw.transpose());
  HbhtEstimate out;
  out.hbht = raw - r.entries();
  const EigenDecomposition eig = sorted_symmetric_eig(out.hbht);
  for (Eigen::Index i = 0; i < eig.values.size(); ++i)
    if (eig.values(i) < 0.0) ++out.negative_eigenvalues;
  return out;
}

Eigen::MatrixXd estimate_HBHt_cross(const ResidualBank& bank) {
  bank.check();
  if (!bank.amb)
    throw InsufficientDataError("estimate_HBHt_cross: bank has no amb");
  if (bank.count() < 2)
    throw InsufficientDataError("estimate_HBHt_cross: need >= 2 columns");
  const Eigen::MatrixXd raw =
      (*bank.amb * bank.omb.transpose()) / static_cast<double>(bank.count());
  return 0.5 * (raw + raw.transpose());
}

namespace {

const Eigen::MatrixXd& find_time(const EnsembleSeries& series, double t,
                                 const char* what) {
  // Times are exact multiples of the model step in practice; allow a small
  // absolute slack for accumulated rounding.
  for (const auto& [time, states] : series)
    if (std::abs(time - t) <= 1e-9) return states;
  std::ostringstream os;
  os << what << ": no data at time " << t;
  throw DataGapError(os.str(), t);
}

}  // namespace

ResidualBank collect_residuals(const EnsembleSeries& backgrounds,
                               const EnsembleSeries& observations,
                               const ProblemTemplate& problem,
                               const SamplingWindow& window,
                               bool with_analyses) {
  const std::vector<double> times = window.times();
  const int n_members = window.n_members;
  if (n_members < 1)
    throw ParameterError("collect_residuals: need at least one member");

  const Eigen::Index obs_dim = problem.observation_cov.dim();
  const Eigen::Index n_cols =
      static_cast<Eigen::Index>(times.size()) * n_members;

  ResidualBank bank;
  bank.window = window;
  bank.omb.resize(obs_dim, n_cols);
  if (with_analyses) {
    bank.oma.emplace(obs_dim, n_cols);
    bank.amb.emplace(obs_dim, n_cols);
  }
  bank.times.reserve(static_cast<std::size_t>(n_cols));
  bank.members.reserve(static_cast<std::size_t>(n_cols));

  Eigen::Index col = 0;
  for (const double t : times) {
    const Eigen::MatrixXd& xb = find_time(backgrounds, t, "collect_residuals");
    const Eigen::MatrixXd& y = find_time(observations, t, "collect_residuals");
    if (xb.cols() < n_members || y.cols() < n_members)
      throw InsufficientDataError(
          "collect_residuals: fewer ensemble members than requested");
    for (int g = 0; g < n_members; ++g, ++col) {
      const Eigen::VectorXd hxb = problem.op.apply(xb.col(g));
      bank.omb.col(col) = y.col(g) - hxb;
      bank.times.push_back(t);
      bank.members.push_back(g);
      if (with_analyses) {
        AssimilationProblem p;
        p.background = xb.col(g);
        p.observation = y.col(g);
        p.background_cov = problem.background_cov;
        p.observation_cov = problem.observation_cov;
        p.op = problem.op;
        const AnalysisResult a = blue_analysis(p);
        const Eigen::VectorXd hxa = problem.op.apply(a.analysis);
        bank.oma->col(col) = y.col(g) - hxa;
        bank.amb->col(col) = hxa - hxb;
      }
    }
  }
  return bank;
}

void save_bank(const std::filesystem::path& prefix, const ResidualBank& bank) {
  bank.check();
  write_matrix_binary(prefix.string() + "_omb.bin", bank.omb);
  if (bank.oma) write_matrix_binary(prefix.string() + "_oma.bin", *bank.oma);
  if (bank.amb) write_matrix_binary(prefix.string() + "_amb.bin", *bank.amb);

  std::ofstream os(prefix.string() + "_index.csv");
  if (!os) throw IoError("save_bank: cannot open index file");
  os << "# t_start=" << format_double(bank.window.t_start)
     << " t_end=" << format_double(bank.window.t_end)
     << " dt=" << format_double(bank.window.dt)
     << " members=" << bank.window.n_members
     << " oma=" << (bank.oma ? 1 : 0) << " amb=" << (bank.amb ? 1 : 0)
     << '\n';
  os << "time,member\n";
  for (Eigen::Index i = 0; i < bank.count(); ++i)
    os << format_double(bank.times[static_cast<std::size_t>(i)]) << ','
       << bank.members[static_cast<std::size_t>(i)] << '\n';
}

ResidualBank load_bank(const std::filesystem::path& prefix) {
  std::ifstream is(prefix.string() + "_index.csv");
  if (!is) throw IoError("load_bank: cannot open index file");
  std::string header;
  std::getline(is, header);
  ResidualBank bank;
  int has_oma = 0, has_amb = 0;
  {
    std::stringstream ss(header);
    std::string token;
    while (ss >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = token.substr(0, eq);
      const std::string value = token.substr(eq + 1);
      if (key == "t_start") bank.window.t_start = std::stod(value);
      else if (key == "t_end") bank.window.t_end = std::stod(value);
      else if (key == "dt") bank.window.dt = std::stod(value);
      else if (key == "members") bank.window.n_members = std::stoi(value);
      else if (key == "oma") has_oma = std::stoi(value);
      else if (key == "amb") has_amb = std::stoi(value);
    }
  }
  std::string line;
  std::getline(is, line);  // column header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string t, g;
    std::getline(ss, t, ',');
    std::getline(ss, g, ',');
    bank.times.push_back(std::stod(t));
    bank.members.push_back(std::stoi(g));
  }

  bank.omb = read_matrix_binary(prefix.string() + "_omb.bin");
  if (has_oma) bank.oma = read_matrix_binary(prefix.string() + "_oma.bin");
  if (has_amb) bank.amb = read_matrix_binary(prefix.string() + "_amb.bin");
  bank.check();
  return bank;
}

}  // namespace dacomp
