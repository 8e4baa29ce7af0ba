#include "dacomp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

#include <Eigen/Cholesky>

#include "dacomp/matrix_io.hpp"

namespace dacomp {

std::string method_name(Method m) {
  switch (m) {
    case Method::kFull: return "full";
    case Method::kOc: return "OC";
    case Method::kIcSmall: return "IC-small";
    case Method::kIcMedium: return "IC-medium";
    case Method::kIcLarge: return "IC-large";
    case Method::kIcOptimal: return "IC-optimal";
  }
  throw ParameterError("method_name: unknown method");
}

Method method_from_name(const std::string& name) {
  if (name == "full") return Method::kFull;
  if (name == "OC") return Method::kOc;
  if (name == "IC-small") return Method::kIcSmall;
  if (name == "IC-medium") return Method::kIcMedium;
  if (name == "IC-large") return Method::kIcLarge;
  if (name == "IC-optimal") return Method::kIcOptimal;
  throw ParameterError("method_from_name: unknown method '" + name + "'");
}

const SweepEntry& SweepEntry::find(const std::vector<SweepEntry>& entries,
                                   const std::string& method,
                                   Eigen::Index q) {
  for (const SweepEntry& e : entries)
    if (e.method == method && e.q == q) return e;
  throw ParameterError("SweepEntry::find: no entry for " + method + " at q=" +
                       std::to_string(q));
}

const SamplingWindow& TwinExperimentConfig::strategy(
    const std::string& name) const {
  if (name == "small") return strategy_small;
  if (name == "medium") return strategy_medium;
  if (name == "large") return strategy_large;
  throw ParameterError("unknown strategy '" + name + "'");
}

const SamplingWindow& TwinExperimentConfig::strategy_for(Method m) const {
  switch (m) {
    case Method::kIcSmall: return strategy_small;
    case Method::kIcMedium: return strategy_medium;
    case Method::kIcLarge: return strategy_large;
    default:
      throw ParameterError("strategy_for: method has no sampling window");
  }
}

std::vector<double> TwinExperimentConfig::required_save_times() const {
  std::vector<double> times;
  for (const auto* w : {&strategy_small, &strategy_medium, &strategy_large}) {
    const auto wt = w->times();
    times.insert(times.end(), wt.begin(), wt.end());
  }
  times.insert(times.end(), analysis_times.begin(), analysis_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end(),
                          [](double a, double b) {
                            return std::abs(a - b) <= 1e-9;
                          }),
              times.end());
  return times;
}

namespace {

void read_window(const Config& c, const std::string& section,
                 SamplingWindow& w) {
  w.t_start = c.get_double(section + ".t_start", w.t_start);
  w.t_end = c.get_double(section + ".t_end", w.t_end);
  w.dt = c.get_double(section + ".dt", w.dt);
  w.n_members = static_cast<int>(c.get_int(section + ".members", w.n_members));
}

void write_window(Config& c, const std::string& section,
                  const SamplingWindow& w) {
  c.set_double(section + ".t_start", w.t_start);
  c.set_double(section + ".t_end", w.t_end);
  c.set_double(section + ".dt", w.dt);
  c.set_int(section + ".members", w.n_members);
}

}  // namespace

TwinExperimentConfig experiment_config_from(const Config& c) {
  TwinExperimentConfig cfg;
  cfg.model.nx = c.get_int("model.nx", cfg.model.nx);
  cfg.model.ny = c.get_int("model.ny", cfg.model.ny);
  cfg.model.dt = c.get_double("model.dt", cfg.model.dt);
  cfg.model.dx = c.get_double("model.dx", cfg.model.dx);
  cfg.model.drag = c.get_double("model.drag", cfg.model.drag);
  cfg.model.gravity = c.get_double("model.gravity", cfg.model.gravity);
  cfg.model.base_level = c.get_double("model.base_level", cfg.model.base_level);
  cfg.model.cylinder_height =
      c.get_double("model.cylinder_height", cfg.model.cylinder_height);
  cfg.model.cylinder_radius =
      c.get_double("model.cylinder_radius", cfg.model.cylinder_radius);

  cfg.sigma_b = c.get_double("noise.sigma_b", cfg.sigma_b);
  cfg.length_b = c.get_double("noise.length_b", cfg.length_b);
  cfg.sigma_r = c.get_double("observation.sigma_r", cfg.sigma_r);
  cfg.center_factor =
      c.get_double("observation.center_factor", cfg.center_factor);
  cfg.center_radius =
      c.get_double("observation.center_radius", cfg.center_radius);
  cfg.length_r = c.get_double("observation.length_r", cfg.length_r);

  cfg.n_large = c.get_int("experiment.n_large", cfg.n_large);
  cfg.n_small = c.get_int("experiment.n_small", cfg.n_small);
  cfg.analysis_times =
      c.get_double_list("experiment.analysis_times", cfg.analysis_times);
  cfg.oc_window = c.get_string("experiment.oc_window", cfg.oc_window);
  cfg.hbht_estimator =
      c.get_string("experiment.hbht_estimator", cfg.hbht_estimator);
  cfg.spd_regularizer =
      c.get_string("experiment.spd_regularizer", cfg.spd_regularizer);
  cfg.regularization_mu =
      c.get_double("experiment.regularization_mu", cfg.regularization_mu);
  cfg.correction_ratio =
      c.get_string("experiment.correction_ratio", cfg.correction_ratio);
  cfg.seed = static_cast<std::uint64_t>(c.get_int("experiment.seed", 1));

  read_window(c, "strategy.small", cfg.strategy_small);
  read_window(c, "strategy.medium", cfg.strategy_medium);
  read_window(c, "strategy.large", cfg.strategy_large);
  return cfg;
}

Config experiment_config_to(const TwinExperimentConfig& cfg) {
  Config c;
  c.set_int("model.nx", cfg.model.nx);
  c.set_int("model.ny", cfg.model.ny);
  c.set_double("model.dt", cfg.model.dt);
  c.set_double("model.dx", cfg.model.dx);
  c.set_double("model.drag", cfg.model.drag);
  c.set_double("model.gravity", cfg.model.gravity);
  c.set_double("model.base_level", cfg.model.base_level);
  c.set_double("model.cylinder_height", cfg.model.cylinder_height);
  c.set_double("model.cylinder_radius", cfg.model.cylinder_radius);
  c.set_double("noise.sigma_b", cfg.sigma_b);
  c.set_double("noise.length_b", cfg.length_b);
  c.set_double("observation.sigma_r", cfg.sigma_r);
  c.set_double("observation.center_factor", cfg.center_factor);
  c.set_double("observation.center_radius", cfg.center_radius);
  c.set_double("observation.length_r", cfg.length_r);
  c.set_int("experiment.n_large", cfg.n_large);
  c.set_int("experiment.n_small", cfg.n_small);
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < cfg.analysis_times.size(); ++i) {
      if (i) os << ", ";
      os << format_double(cfg.analysis_times[i]);
    }
    c.set("experiment.analysis_times", os.str());
  }
  c.set("experiment.oc_window", cfg.oc_window);
  c.set("experiment.hbht_estimator", cfg.hbht_estimator);
  c.set("experiment.spd_regularizer", cfg.spd_regularizer);
  c.set_double("experiment.regularization_mu", cfg.regularization_mu);
  c.set("experiment.correction_ratio", cfg.correction_ratio);
  c.set_int("experiment.seed", static_cast<long>(cfg.seed));
  write_window(c, "strategy.small", cfg.strategy_small);
  write_window(c, "strategy.medium", cfg.strategy_medium);
  write_window(c, "strategy.large", cfg.strategy_large);
  return c;
}

TwinDataset build_dataset(const TwinExperimentConfig& cfg) {
  const CovarianceMatrix r =
      observation_covariance(cfg.model, cfg.sigma_r, cfg.center_factor,
                             cfg.center_radius, cfg.length_r);
  const SoarKernelSpec noise = SoarKernelSpec::homogeneous(
      cfg.length_b, cfg.sigma_b * cfg.sigma_b, cfg.model.nx * cfg.model.ny);
  return make_twin_dataset(cfg.model, noise, r, cfg.n_large, cfg.n_small,
                           cfg.required_save_times(), cfg.analysis_times,
                           cfg.seed);
}

ResidualBank strategy_bank(const TwinDataset& ds,
                           const TwinExperimentConfig& cfg,
                           const std::string& strategy_name) {
  const SamplingWindow& window = cfg.strategy(strategy_name);
  const bool cross = cfg.hbht_estimator == "cross";
  ProblemTemplate tmpl;
  tmpl.observation_cov = ds.observation_cov;
  tmpl.op = ObservationOperator::from_matrix(ds.h_matrix);
  if (cross) {
    // The cross estimator needs per-pair analyses; they use the exact B at
    // the first analysis time, the covariance the assimilation step itself
    // assumes within the window.
    if (ds.exact_background_cov.empty())
      throw InsufficientDataError("strategy_bank: no exact B available");
    tmpl.background_cov = ds.exact_background_cov.front();
  }
  return collect_residuals(ds.backgrounds, ds.observations, tmpl, window,
                           cross);
}

Eigen::MatrixXd strategy_hbht(const TwinDataset& ds,
                              const TwinExperimentConfig& cfg,
                              const std::string& strategy_name) {
  const ResidualBank bank = strategy_bank(ds, cfg, strategy_name);
  if (cfg.hbht_estimator == "cross") return estimate_HBHt_cross(bank);
  if (cfg.hbht_estimator != "omb")
    throw ParameterError("strategy_hbht: unknown estimator '" +
                         cfg.hbht_estimator + "'");
  return estimate_HBHt_from_omb(bank, ds.observation_cov).hbht;
}

ProjectionOperator strategy_projection(const TwinDataset& ds,
                                       const TwinExperimentConfig& cfg,
                                       const std::string& strategy_name,
                                       Eigen::Index q) {
  SpdRegularizer mode;
  if (cfg.spd_regularizer == "trace-normalized")
    mode = SpdRegularizer::kTraceNormalized;
  else if (cfg.spd_regularizer == "paper-literal")
    mode = SpdRegularizer::kPaperLiteral;
  else
    throw ParameterError("strategy_projection: unknown regularizer '" +
                         cfg.spd_regularizer + "'");
  const RegularizedMatrix reg = regularize_spd(
      strategy_hbht(ds, cfg, strategy_name), cfg.regularization_mu, mode);
  return build_ic(reg.cov.entries(), ds.observation_cov, q);
}

SnapshotMatrix oc_snapshots(const TwinDataset& ds,
                            const TwinExperimentConfig& cfg) {
  const SamplingWindow& window = cfg.strategy(cfg.oc_window);
  const std::vector<double> times = window.times();
  const Eigen::Index m = ds.observation_cov.dim();

  SnapshotMatrix snap;
  snap.snapshots.resize(m,
                        static_cast<Eigen::Index>(times.size()) *
                            window.n_members);
  Eigen::Index col = 0;
  for (const double t : times) {
    const Eigen::MatrixXd* found = nullptr;
    for (const auto& [time, obs] : ds.observations)
      if (std::abs(time - t) <= 1e-9) found = &obs;
    if (!found) throw DataGapError("oc_snapshots: no observations", t);
    for (int g = 0; g < window.n_members; ++g, ++col) {
      snap.snapshots.col(col) = found->col(g);
      snap.times.push_back(t);
    }
  }
  return snap;
}

double posterior_trace(const CovarianceMatrix& b, const Eigen::MatrixXd& h,
                       const Eigen::MatrixXd& r) {
  const Eigen::MatrixXd w = h * b.entries();  // q x n
  Eigen::MatrixXd g = w * h.transpose() + r;
  g = 0.5 * (g + g.transpose());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(g);
  if (ldlt.info() != Eigen::Success)
    throw SingularMatrixError("posterior_trace: gain system not solvable", -1);
  const Eigen::MatrixXd x = ldlt.solve(w);
  return b.entries().trace() - (w.array() * x.array()).sum();
}

namespace {

// Everything needed to evaluate one method at every q and analysis time.
struct MethodPlan {
  std::string label;
  bool full = false;
  // One projection for the piecewise strategies and OC; one per analysis
  // time for IC-optimal and the misspecification runs.
  std::vector<ProjectionOperator> per_time;
  bool shared = true;  // per_time[0] applies at every time

  const ProjectionOperator& at(std::size_t time_index) const {
    return shared ? per_time.front() : per_time[time_index];
  }
};

Eigen::Index max_rank_needed(const std::vector<Eigen::Index>& q_values,
                             Eigen::Index obs_dim) {
  Eigen::Index q_max = 1;
  for (const Eigen::Index q : q_values) {
    if (q < 1)
      throw ParameterError("q values must be >= 1");
    if (q > obs_dim)
      throw RankError("q exceeds the observation dimension", obs_dim);
    q_max = std::max(q_max, q);
  }
  return q_max;
}

MethodPlan plan_for(const TwinDataset& ds, const TwinExperimentConfig& cfg,
                    Method m, Eigen::Index q_max) {
  MethodPlan plan;
  plan.label = method_name(m);
  switch (m) {
    case Method::kFull:
      plan.full = true;
      return plan;
    case Method::kOc:
      plan.per_time.push_back(
          build_oc(oc_snapshots(ds, cfg), ds.observation_cov, q_max));
      return plan;
    case Method::kIcSmall:
    case Method::kIcMedium:
    case Method::kIcLarge: {
      const std::string name = m == Method::kIcSmall    ? "small"
                               : m == Method::kIcMedium ? "medium"
                                                        : "large";
      plan.per_time.push_back(strategy_projection(ds, cfg, name, q_max));
      return plan;
    }
    case Method::kIcOptimal: {
      plan.shared = false;
      for (const double t : ds.analysis_times) {
        const Eigen::MatrixXd hbht =
            ds.h_matrix * ds.exact_b_at(t).entries() * ds.h_matrix.transpose();
        plan.per_time.push_back(build_ic(hbht, ds.observation_cov, q_max));
      }
      return plan;
    }
  }
  throw ParameterError("plan_for: unknown method");
}

// H_q = Lq^T R_A^{-1/2} H for the projection truncated to rank q.
Eigen::MatrixXd reduced_operator(const ProjectionOperator& proj,
                                 Eigen::Index q, const Eigen::MatrixXd& h) {
  return proj.modes.leftCols(q).transpose() * (proj.r_inv_sqrt * h);
}

// Honest reduced observation covariance against the true R.
Eigen::MatrixXd reduced_r(const ProjectionOperator& proj, Eigen::Index q,
                          const CovarianceMatrix& r_true) {
  if (proj.assumed_r.entries() == r_true.entries())
    return Eigen::MatrixXd::Identity(q, q);
  const Eigen::MatrixXd pt =
      proj.modes.leftCols(q).transpose() * proj.r_inv_sqrt;
  return pt * r_true.entries() * pt.transpose();
}

ExperimentReport sweep_over(const TwinDataset& ds,
                            const std::vector<MethodPlan>& plans,
                            const std::vector<Eigen::Index>& q_values) {
  ExperimentReport report;
  for (const MethodPlan& plan : plans) {
    if (!plan.full) {
      report.spectra[plan.label] = plan.per_time.front().spectrum;
      report.q_optimal[plan.label] =
          optimal_truncation(plan.per_time.front().spectrum);
    }
    for (const Eigen::Index q : q_values) {
      double total = 0.0;
      for (std::size_t ti = 0; ti < ds.analysis_times.size(); ++ti) {
        const CovarianceMatrix& b =
            ds.exact_background_cov[ti];
        if (plan.full) {
          total += posterior_trace(b, ds.h_matrix,
                                   ds.observation_cov.entries());
        } else {
          const ProjectionOperator& proj = plan.at(ti);
          total += posterior_trace(b, reduced_operator(proj, q, ds.h_matrix),
                                   reduced_r(proj, q, ds.observation_cov));
        }
      }
      report.entries.push_back(
          {plan.label, q,
           total / static_cast<double>(ds.analysis_times.size())});
    }
  }
  return report;
}

}  // namespace

ExperimentReport run_qsweep(const TwinDataset& ds,
                            const TwinExperimentConfig& cfg,
                            const std::vector<Method>& methods,
                            const std::vector<Eigen::Index>& q_values) {
  const Eigen::Index q_max =
      max_rank_needed(q_values, ds.observation_cov.dim());
  std::vector<MethodPlan> plans;
  plans.reserve(methods.size());
  for (const Method m : methods) plans.push_back(plan_for(ds, cfg, m, q_max));
  return sweep_over(ds, plans, q_values);
}

std::map<std::string, double> run_correction_table(
    const TwinDataset& ds, const TwinExperimentConfig& cfg,
    const std::vector<Method>& methods, Eigen::Index q) {
  if (q < 1 || q > ds.observation_cov.dim())
    throw ParameterError("run_correction_table: q out of range");
  const bool per_pair = cfg.correction_ratio == "per-pair";
  const bool vs_innovation = cfg.correction_ratio == "innovation";

  std::vector<MethodPlan> plans;
  bool with_full = false;
  for (const Method m : methods) {
    if (m == Method::kFull) {
      with_full = true;
      continue;
    }
    plans.push_back(plan_for(ds, cfg, m, q));
  }

  std::map<std::string, double> comp_norm, pair_ratio;
  std::map<std::string, Eigen::Index> pair_count;
  double full_norm = 0.0, innovation_norm = 0.0;
  std::vector<double> full_pair_norms;

  for (std::size_t ti = 0; ti < ds.analysis_times.size(); ++ti) {
    const double t = ds.analysis_times[ti];
    const CovarianceMatrix& b = ds.exact_background_cov[ti];
    const Eigen::MatrixXd& h = ds.h_matrix;
    const Eigen::MatrixXd hb = h * b.entries();  // m x n

    const Eigen::MatrixXd* xb = nullptr;
    const Eigen::MatrixXd* yy = nullptr;
    for (const auto& [time, states] : ds.eval_backgrounds)
      if (std::abs(time - t) <= 1e-9) xb = &states;
    for (const auto& [time, obs] : ds.eval_observations)
      if (std::abs(time - t) <= 1e-9) yy = &obs;
    if (!xb || !yy)
      throw DataGapError("run_correction_table: missing ensemble data", t);

    // Full-rank analysis: H x_a - H x_b = (H B H^T) G^{-1} (y - H x_b).
    Eigen::MatrixXd g_full =
        hb * h.transpose() + ds.observation_cov.entries();
    g_full = 0.5 * (g_full + g_full.transpose());
    const Eigen::LDLT<Eigen::MatrixXd> full_ldlt(g_full);
    const Eigen::MatrixXd hbht = hb * h.transpose();

    struct ReducedPieces {
      Eigen::MatrixXd h_q;        // q x n
      Eigen::MatrixXd hb_hqt;     // m x q,  H B H_q^T
      Eigen::LDLT<Eigen::MatrixXd> ldlt;
    };
    std::vector<ReducedPieces> pieces;
    for (const MethodPlan& plan : plans) {
      ReducedPieces p;
      const ProjectionOperator& proj = plan.at(ti);
      p.h_q = reduced_operator(proj, q, h);
      p.hb_hqt = hb * p.h_q.transpose();
      Eigen::MatrixXd g =
          p.h_q * b.entries() * p.h_q.transpose() + reduced_r(proj, q, ds.observation_cov);
      g = 0.5 * (g + g.transpose());
      p.ldlt.compute(g);
      pieces.push_back(std::move(p));
    }

    for (Eigen::Index g_i = 0; g_i < xb->cols(); ++g_i) {
      const Eigen::VectorXd hxb = h * xb->col(g_i);
      const Eigen::VectorXd innov = yy->col(g_i) - hxb;
      const double nf = (hbht * full_ldlt.solve(innov)).norm();
      full_norm += nf;
      innovation_norm += innov.norm();
      full_pair_norms.push_back(nf);
      for (std::size_t pi = 0; pi < plans.size(); ++pi) {
        const ReducedPieces& p = pieces[pi];
        const Eigen::VectorXd innov_q =
            plans[pi].at(ti).modes.leftCols(q).transpose() *
                (plans[pi].at(ti).r_inv_sqrt * yy->col(g_i)) -
            p.h_q * xb->col(g_i);
        const double nc = (p.hb_hqt * p.ldlt.solve(innov_q)).norm();
        comp_norm[plans[pi].label] += nc;
        if (per_pair && nf > 0) {
          pair_ratio[plans[pi].label] += nc / nf;
          pair_count[plans[pi].label] += 1;
        }
      }
    }
  }

  std::map<std::string, double> table;
  if (with_full)
    table[method_name(Method::kFull)] =
        vs_innovation ? 100.0 * full_norm / innovation_norm : 100.0;
  for (const MethodPlan& plan : plans) {
    if (per_pair) {
      table[plan.label] = 100.0 * pair_ratio[plan.label] /
                          static_cast<double>(pair_count[plan.label]);
    } else {
      const double denom = vs_innovation ? innovation_norm : full_norm;
      table[plan.label] = 100.0 * comp_norm[plan.label] / denom;
    }
  }
  return table;
}

MisspecCase misspec_case_from(const std::string& label) {
  if (label == "homogeneous-variance")
    return MisspecCase::kHomogeneousVariance;
  if (label == "wrong-lengthscale") return MisspecCase::kWrongLengthscale;
  throw ParameterError("unknown misspecification case '" + label + "'");
}

CovarianceMatrix assumed_R(const TwinDataset& ds,
                           const TwinExperimentConfig& cfg,
                           MisspecCase which) {
  switch (which) {
    case MisspecCase::kHomogeneousVariance: {
      // Same correlation structure, homogeneous marginal variance
      // sigma_r^2 everywhere (0.04 at the defaults).
      const Eigen::MatrixXd& r = ds.observation_cov.entries();
      const Eigen::VectorXd d_inv_sqrt =
          r.diagonal().cwiseSqrt().cwiseInverse();
      const Eigen::MatrixXd corr =
          d_inv_sqrt.asDiagonal() * r * d_inv_sqrt.asDiagonal();
      return CovarianceMatrix(cfg.sigma_r * cfg.sigma_r * corr);
    }
    case MisspecCase::kWrongLengthscale:
      // Same marginal variances, correlation scale 5 instead of the true
      // value.
      return observation_covariance(cfg.model, cfg.sigma_r,
                                    cfg.center_factor, cfg.center_radius,
                                    5.0);
  }
  throw ParameterError("assumed_R: unknown case");
}

ExperimentReport run_misspecified_R(const TwinDataset& ds,
                                    const TwinExperimentConfig& cfg,
                                    MisspecCase which,
                                    const std::vector<Eigen::Index>& q_values) {
  const Eigen::Index q_max =
      max_rank_needed(q_values, ds.observation_cov.dim());
  const CovarianceMatrix r_a = assumed_R(ds, cfg, which);

  std::vector<MethodPlan> plans;

  {
    MethodPlan oc;
    oc.label = "OC";
    oc.per_time.push_back(build_oc(oc_snapshots(ds, cfg), r_a, q_max));
    plans.push_back(std::move(oc));
  }
  {
    // IC from the exact per-time HBH^T, compressed under the assumed R.
    MethodPlan ic;
    ic.label = "IC";
    ic.shared = false;
    for (const double t : ds.analysis_times) {
      const Eigen::MatrixXd hbht =
          ds.h_matrix * ds.exact_b_at(t).entries() * ds.h_matrix.transpose();
      ic.per_time.push_back(build_ic(hbht, r_a, q_max));
    }
    plans.push_back(std::move(ic));
  }
  {
    // Exact-R information-based reference.
    MethodPlan ref = plan_for(ds, cfg, Method::kIcOptimal, q_max);
    ref.label = "IC-exact-R";
    plans.push_back(std::move(ref));
  }

  return sweep_over(ds, plans, q_values);
}

void write_sweep_csv(const std::filesystem::path& path,
                     const ExperimentReport& report) {
  std::ofstream os(path);
  if (!os) throw IoError("write_sweep_csv: cannot open " + path.string());
  os << "method,q,E_posterior\n";
  for (const SweepEntry& e : report.entries)
    os << e.method << ',' << e.q << ',' << format_double(e.posterior_error)
       << '\n';
}

void write_spectra_csv(const std::filesystem::path& path,
                       const ExperimentReport& report) {
  std::ofstream os(path);
  if (!os) throw IoError("write_spectra_csv: cannot open " + path.string());
  os << "method,index,eigenvalue,q_optimal\n";
  for (const auto& [label, spectrum] : report.spectra) {
    const Eigen::Index q_opt = report.q_optimal.at(label);
    for (Eigen::Index i = 0; i < spectrum.size(); ++i)
      os << label << ',' << (i + 1) << ',' << format_double(spectrum(i))
         << ',' << q_opt << '\n';
  }
}

void write_correction_csv(const std::filesystem::path& path,
                          const std::map<std::string, double>& table,
                          Eigen::Index q) {
  std::ofstream os(path);
  if (!os) throw IoError("write_correction_csv: cannot open " + path.string());
  os << "method,q,correction_percent\n";
  for (const auto& [label, value] : table)
    os << label << ',' << q << ',' << format_double(value) << '\n';
}

void write_manifest(const std::filesystem::path& path,
                    const TwinExperimentConfig& cfg) {
  Config manifest = experiment_config_to(cfg);
  manifest.set("version", kVersion);
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char buf[64];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
  manifest.set("timestamp", buf);
  manifest.set_int("seed", static_cast<long>(cfg.seed));
  manifest.write_file(path);
}

}  // namespace dacomp
