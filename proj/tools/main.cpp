#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dacomp/experiment.hpp"
#include "dacomp/matrix_io.hpp"

namespace fs = std::filesystem;
using namespace dacomp;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  long seed = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file");
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "override the configured seed");
  }

  TwinExperimentConfig load() const {
    Config c;
    if (!config_path.empty()) c = Config::parse_file(config_path);
    TwinExperimentConfig cfg = experiment_config_from(c);
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    return cfg;
  }

  fs::path out() const {
    fs::create_directories(out_dir);
    return out_dir;
  }
};

std::vector<Eigen::Index> parse_q_list(const std::vector<long>& raw) {
  std::vector<Eigen::Index> q;
  for (const long v : raw) q.push_back(static_cast<Eigen::Index>(v));
  if (q.empty()) q = {5, 10, 20, 29, 50, 100, 150};
  return q;
}

Eigen::VectorXd read_vector(const fs::path& path) {
  const Eigen::MatrixXd m = read_matrix_binary(path);
  if (m.cols() != 1 && m.rows() != 1)
    throw DimensionError("expected a vector in " + path.string());
  if (m.cols() == 1) return m.col(0);
  return m.row(0).transpose();
}

int cmd_simulate(const CommonArgs& args) {
  const TwinExperimentConfig cfg = args.load();
  const fs::path out = args.out();
  const TwinDataset ds = build_dataset(cfg);

  Eigen::MatrixXd truth(ds.truth.front().size(),
                        static_cast<Eigen::Index>(ds.truth.size()));
  for (std::size_t i = 0; i < ds.truth.size(); ++i)
    truth.col(static_cast<Eigen::Index>(i)) = ds.truth[i];
  write_matrix_binary(out / "truth.bin", truth);

  std::ofstream idx(out / "times.csv");
  idx << "index,time\n";
  for (std::size_t i = 0; i < ds.save_times.size(); ++i)
    idx << i << ',' << format_double(ds.save_times[i]) << '\n';

  Eigen::Index k = 0;
  for (const auto& [t, members] : ds.backgrounds) {
    char name[64];
    std::snprintf(name, sizeof(name), "background_%03lld.bin",
                  static_cast<long long>(k));
    write_matrix_binary(out / name, members);
    std::snprintf(name, sizeof(name), "observation_%03lld.bin",
                  static_cast<long long>(k));
    write_matrix_binary(out / name, ds.observations.at(t));
    ++k;
  }
  write_manifest(out / "manifest.cfg", cfg);
  std::cout << "wrote " << ds.truth.size() << " truth states and " << k
            << " ensemble time slices to " << out.string() << "\n";
  return 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& strategy) {
  const TwinExperimentConfig cfg = args.load();
  const fs::path out = args.out();
  const TwinDataset ds = build_dataset(cfg);

  const ResidualBank bank = strategy_bank(ds, cfg, strategy);
  save_bank((out / ("bank_" + strategy)).string(), bank);

  const HbhtEstimate est = estimate_HBHt_from_omb(bank, ds.observation_cov);
  write_matrix_binary(out / ("hbht_" + strategy + ".bin"), est.hbht);
  if (bank.oma) {
    write_matrix_binary(out / ("r_hat_" + strategy + ".bin"),
                        estimate_R_desroziers(bank));
  }
  write_manifest(out / "manifest.cfg", cfg);
  std::cout << "strategy " << strategy << ": " << bank.count()
            << " residual pairs, " << est.negative_eigenvalues
            << " negative HBHt eigenvalues\n";
  return 0;
}

int cmd_compress(const CommonArgs& args, const std::string& method_label,
                 long q_raw) {
  const TwinExperimentConfig cfg = args.load();
  const fs::path out = args.out();
  const TwinDataset ds = build_dataset(cfg);
  const Method m = method_from_name(method_label);
  const Eigen::Index q =
      q_raw > 0 ? static_cast<Eigen::Index>(q_raw) : ds.observation_cov.dim();

  ProjectionOperator proj;
  switch (m) {
    case Method::kOc:
      proj = build_oc(oc_snapshots(ds, cfg), ds.observation_cov, q);
      break;
    case Method::kIcSmall:
    case Method::kIcMedium:
    case Method::kIcLarge: {
      const std::string name = m == Method::kIcSmall    ? "small"
                               : m == Method::kIcMedium ? "medium"
                                                        : "large";
      proj = strategy_projection(ds, cfg, name, q);
      break;
    }
    case Method::kIcOptimal: {
      const double t = ds.analysis_times.front();
      const Eigen::MatrixXd hbht =
          ds.h_matrix * ds.exact_b_at(t).entries() * ds.h_matrix.transpose();
      proj = build_ic(hbht, ds.observation_cov, q);
      break;
    }
    case Method::kFull:
      throw ParameterError("compress: 'full' is not a compression method");
  }
  save_projection(out / ("projection_" + method_label + ".bin"), proj);

  std::ofstream os(out / ("spectrum_" + method_label + ".csv"));
  os << "index,eigenvalue\n";
  for (Eigen::Index i = 0; i < proj.spectrum.size(); ++i)
    os << (i + 1) << ',' << format_double(proj.spectrum(i)) << '\n';
  write_manifest(out / "manifest.cfg", cfg);
  std::cout << method_label << ": rank " << proj.rank << ", q_optimal "
            << optimal_truncation(proj.spectrum) << "\n";
  return 0;
}

int cmd_assimilate(const CommonArgs& args, const std::string& xb_path,
                   const std::string& y_path, const std::string& b_path,
                   const std::string& r_path, const std::string& h_path,
                   const std::string& proj_path) {
  const fs::path out = args.out();
  AssimilationProblem p;
  p.background = read_vector(xb_path);
  p.observation = read_vector(y_path);
  p.background_cov = CovarianceMatrix(read_matrix_binary(b_path));
  p.observation_cov = CovarianceMatrix(read_matrix_binary(r_path));
  p.op = ObservationOperator::from_matrix(read_matrix_binary(h_path));
  p.check_dimensions();

  AnalysisResult result;
  std::optional<InfluenceSummary> info;
  if (!proj_path.empty()) {
    const ProjectionOperator proj = load_projection(proj_path);
    const ReducedProblem reduced = reduce_problem(p, proj);
    result = blue_analysis(reduced.reduced);
    info = influence_matrix(reduced.reduced);
  } else {
    result = blue_analysis(p);
    info = influence_matrix(p);
  }
  write_analysis_csv(out / "analysis.csv", result, info);

  Config manifest;
  if (!args.config_path.empty())
    manifest = Config::parse_file(args.config_path);
  manifest.set("version", kVersion);
  manifest.set("inputs.background", xb_path);
  manifest.set("inputs.observation", y_path);
  manifest.write_file(out / "manifest.cfg");
  std::cout << "analysis written, DFS " << info->dfs << ", ER " << info->er
            << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args, const std::vector<long>& q_raw) {
  const TwinExperimentConfig cfg = args.load();
  const fs::path out = args.out();
  const TwinDataset ds = build_dataset(cfg);

  std::vector<Method> methods = {Method::kFull};
  methods.insert(methods.end(), kAllCompressionMethods.begin(),
                 kAllCompressionMethods.end());
  const ExperimentReport report =
      run_qsweep(ds, cfg, methods, parse_q_list(q_raw));
  write_sweep_csv(out / "sweep.csv", report);
  write_spectra_csv(out / "spectra.csv", report);
  write_manifest(out / "manifest.cfg", cfg);
  std::cout << "sweep: " << report.entries.size() << " entries\n";
  return 0;
}

int cmd_table2(const CommonArgs& args, long q_raw) {
  const TwinExperimentConfig cfg = args.load();
  const fs::path out = args.out();
  const TwinDataset ds = build_dataset(cfg);
  const Eigen::Index q = static_cast<Eigen::Index>(q_raw);

  const std::map<std::string, double> table =
      run_correction_table(ds, cfg, kAllCompressionMethods, q);
  write_correction_csv(out / "table2.csv", table, q);
  write_manifest(out / "manifest.cfg", cfg);
  for (const auto& [label, value] : table) {
    char line[128];
    std::snprintf(line, sizeof(line), "%-12s %6.1f %%\n", label.c_str(),
                  value);
    std::cout << line;
  }
  return 0;
}

int cmd_misspec(const CommonArgs& args, const std::string& which,
                const std::vector<long>& q_raw) {
  const TwinExperimentConfig cfg = args.load();
  const fs::path out = args.out();
  const TwinDataset ds = build_dataset(cfg);

  const ExperimentReport report = run_misspecified_R(
      ds, cfg, misspec_case_from(which), parse_q_list(q_raw));
  write_sweep_csv(out / ("misspec_" + which + ".csv"), report);
  write_spectra_csv(out / ("misspec_" + which + "_spectra.csv"), report);
  write_manifest(out / "manifest.cfg", cfg);
  std::cout << "misspec " << which << ": " << report.entries.size()
            << " entries\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"shallow-water observation compression experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  CommonArgs common;
  std::string strategy = "medium";
  std::string method = "IC-medium";
  std::string misspec_which = "wrong-lengthscale";
  long q = 29;
  std::vector<long> q_list;
  std::string xb_path, y_path, b_path, r_path, h_path, proj_path;

  CLI::App* simulate = app.add_subcommand("simulate", "generate a twin dataset");
  common.attach(simulate);

  CLI::App* estimate =
      app.add_subcommand("estimate", "Desroziers estimates over a strategy");
  common.attach(estimate);
  estimate->add_option("--strategy", strategy, "small | medium | large");

  CLI::App* compress =
      app.add_subcommand("compress", "build and save a projection");
  common.attach(compress);
  compress->add_option("--method", method, "OC | IC-small | IC-medium | IC-large | IC-optimal");
  compress->add_option("--q", q, "projection rank (default: full rank)");

  CLI::App* assimilate =
      app.add_subcommand("assimilate", "one analysis from matrix files");
  common.attach(assimilate);
  assimilate->add_option("--background", xb_path)->required();
  assimilate->add_option("--observation", y_path)->required();
  assimilate->add_option("--bcov", b_path)->required();
  assimilate->add_option("--rcov", r_path)->required();
  assimilate->add_option("--hop", h_path)->required();
  assimilate->add_option("--projection", proj_path,
                         "optional saved projection to reduce with");

  CLI::App* sweep = app.add_subcommand("sweep", "posterior-error q-sweep");
  common.attach(sweep);
  sweep->add_option("--q", q_list, "q values (default 5 10 20 29 50 100 150)");

  CLI::App* table2 =
      app.add_subcommand("table2", "correction percentages at fixed q");
  common.attach(table2);
  table2->add_option("--q", q, "projection rank");

  CLI::App* misspec =
      app.add_subcommand("misspec", "misspecified-R study");
  common.attach(misspec);
  misspec->add_option("--case", misspec_which,
                      "homogeneous-variance | wrong-lengthscale");
  misspec->add_option("--q", q_list, "q values");

  if (argc <= 1) {
    std::cerr << app.help() << std::flush;
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(common);
    if (estimate->parsed()) return cmd_estimate(common, strategy);
    if (compress->parsed()) return cmd_compress(common, method, q);
    if (assimilate->parsed())
      return cmd_assimilate(common, xb_path, y_path, b_path, r_path, h_path,
                            proj_path);
    if (sweep->parsed()) return cmd_sweep(common, q_list);
    if (table2->parsed()) return cmd_table2(common, q);
    if (misspec->parsed()) return cmd_misspec(common, misspec_which, q_list);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
