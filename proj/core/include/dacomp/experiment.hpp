#ifndef DACOMP_EXPERIMENT_HPP
#define DACOMP_EXPERIMENT_HPP

#include <map>
#include <string>
#include <vector>

#include "dacomp/compression.hpp"
#include "dacomp/config.hpp"
#include "dacomp/shallow_water.hpp"

namespace dacomp {

inline constexpr const char* kVersion = "dacomp 0.1.0";

enum class Method {
  kFull,
  kOc,
  kIcSmall,
  kIcMedium,
  kIcLarge,
  kIcOptimal,
};

std::string method_name(Method m);
Method method_from_name(const std::string& name);

inline const std::vector<Method> kAllCompressionMethods = {
    Method::kOc, Method::kIcSmall, Method::kIcMedium, Method::kIcLarge,
    Method::kIcOptimal};

// Full experiment configuration with the twin-experiment defaults.
struct TwinExperimentConfig {
  SwConfig model;
  double sigma_b = 0.2;
  double length_b = 4.0;
  double sigma_r = 0.2;
  double center_factor = 4.0;
  double center_radius = 4.0;
  double length_r = 1.0;
  Eigen::Index n_large = 1000;
  Eigen::Index n_small = 10;
  std::vector<double> analysis_times = {0.16, 0.165, 0.170, 0.175};
  SamplingWindow strategy_small{0.16, 0.18, 0.001, 10};
  SamplingWindow strategy_medium{0.1, 0.3, 0.01, 10};
  SamplingWindow strategy_large{0.0, 2.0, 0.1, 10};
  std::string oc_window = "medium";       // snapshot window for OC
  std::string hbht_estimator = "omb";     // "omb" (Eq-29 style) or "cross"
  std::string spd_regularizer = "trace-normalized";  // or "paper-literal"
  double regularization_mu = 0.1;         // Eq-35 blend weight
  std::string correction_ratio = "time-averaged";    // or "per-pair"
  std::uint64_t seed = 1;

  const SamplingWindow& strategy(const std::string& name) const;
  const SamplingWindow& strategy_for(Method m) const;

  // Every save time the dataset needs: all strategy windows plus the
  // analysis times.
  std::vector<double> required_save_times() const;
};

TwinExperimentConfig experiment_config_from(const Config& cfg);
Config experiment_config_to(const TwinExperimentConfig& cfg);

// Dataset generation for the configured twin experiment.
TwinDataset build_dataset(const TwinExperimentConfig& cfg);

// Residual bank for one named strategy window over the dataset's small
// ensemble (analyses included only for the cross estimator).
ResidualBank strategy_bank(const TwinDataset& ds,
                           const TwinExperimentConfig& cfg,
                           const std::string& strategy_name);

// HBH^T estimate feeding the piecewise IC strategies.
Eigen::MatrixXd strategy_hbht(const TwinDataset& ds,
                              const TwinExperimentConfig& cfg,
                              const std::string& strategy_name);

// Full IC pipeline for one strategy: estimate, SPD-regularize per the
// configured Eq-35 mode, build the projection.
ProjectionOperator strategy_projection(const TwinDataset& ds,
                                       const TwinExperimentConfig& cfg,
                                       const std::string& strategy_name,
                                       Eigen::Index q);

// Pooled observation snapshots for OC.
SnapshotMatrix oc_snapshots(const TwinDataset& ds,
                            const TwinExperimentConfig& cfg);

struct SweepEntry {
  std::string method;  // method label, e.g. "OC", "IC-medium", "full"
  Eigen::Index q;
  double posterior_error;  // averaged Tr(A_t) over the analysis times

  static const SweepEntry& find(const std::vector<SweepEntry>& entries,
                                const std::string& method, Eigen::Index q);
};

struct ExperimentReport {
  std::vector<SweepEntry> entries;
  std::map<std::string, Eigen::VectorXd> spectra;   // per method label
  std::map<std::string, Eigen::Index> q_optimal;    // per method label
};

// Posterior-error sweep: for each method and q, build the projection,
// reduce, and average Tr(A_t) over the analysis times with B = B_E,t and
// the exact R. Full-rank methods collapse to the uncompressed analysis.
ExperimentReport run_qsweep(const TwinDataset& ds,
                            const TwinExperimentConfig& cfg,
                            const std::vector<Method>& methods,
                            const std::vector<Eigen::Index>& q_values);

// Per-method correction ratio |H(x_b) - H(x_a,compressed)| /
// |H(x_b) - H(x_a,full)| in percent, pooled over the analysis times and the
// small ensemble.
std::map<std::string, double> run_correction_table(
    const TwinDataset& ds, const TwinExperimentConfig& cfg,
    const std::vector<Method>& methods, Eigen::Index q);

enum class MisspecCase { kHomogeneousVariance, kWrongLengthscale };
MisspecCase misspec_case_from(const std::string& label);

// The assumed observation covariance of the misspecification study.
CovarianceMatrix assumed_R(const TwinDataset& ds,
                           const TwinExperimentConfig& cfg, MisspecCase which);

// OC and IC built with the assumed R, analyses carried out with the honest
// reduced covariance, plus the exact-R IC reference curve (labelled
// "IC-exact-R").
ExperimentReport run_misspecified_R(const TwinDataset& ds,
                                    const TwinExperimentConfig& cfg,
                                    MisspecCase which,
                                    const std::vector<Eigen::Index>& q_values);

// Tr(A) for the analysis defined by B, the (possibly reduced) operator H,
// and observation covariance R, without forming A.
double posterior_trace(const CovarianceMatrix& b, const Eigen::MatrixXd& h,
                       const Eigen::MatrixXd& r);

// CSV / manifest emission. All floats at 17 significant digits.
void write_sweep_csv(const std::filesystem::path& path,
                     const ExperimentReport& report);
void write_spectra_csv(const std::filesystem::path& path,
                       const ExperimentReport& report);
void write_correction_csv(const std::filesystem::path& path,
                          const std::map<std::string, double>& table,
                          Eigen::Index q);
void write_manifest(const std::filesystem::path& path,
                    const TwinExperimentConfig& cfg);

}  // namespace dacomp

#endif
