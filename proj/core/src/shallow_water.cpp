#include "dacomp/shallow_water.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dacomp {

namespace {

constexpr double kTimeSlack = 1e-9;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace

Eigen::VectorXd ShallowWaterState::velocity_state() const {
  const Eigen::Index nx = u.rows(), ny = u.cols();
  Eigen::VectorXd x(2 * nx * ny);
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      x(i * ny + j) = u(i, j);
      x(nx * ny + i * ny + j) = v(i, j);
    }
  return x;
}

void ShallowWaterState::set_velocity_state(const Eigen::VectorXd& x) {
  const Eigen::Index nx = u.rows(), ny = u.cols();
  if (x.size() != 2 * nx * ny)
    throw DimensionError("set_velocity_state: dimension mismatch");
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      u(i, j) = x(i * ny + j);
      v(i, j) = x(nx * ny + i * ny + j);
    }
}

ShallowWaterState initial_state(const SwConfig& cfg) {
  if (cfg.nx < 2 || cfg.ny < 2)
    throw ParameterError("initial_state: grid too small");
  if (cfg.base_level <= 0)
    throw ParameterError("initial_state: base level must be positive");
  ShallowWaterState s;
  s.h = Eigen::MatrixXd::Constant(cfg.nx, cfg.ny, cfg.base_level);
  s.u = Eigen::MatrixXd::Zero(cfg.nx, cfg.ny);
  s.v = Eigen::MatrixXd::Zero(cfg.nx, cfg.ny);
  s.t = 0.0;
  const double ci = 0.5 * static_cast<double>(cfg.nx - 1);
  const double cj = 0.5 * static_cast<double>(cfg.ny - 1);
  const double r2 = cfg.cylinder_radius * cfg.cylinder_radius;
  for (Eigen::Index i = 0; i < cfg.nx; ++i)
    for (Eigen::Index j = 0; j < cfg.ny; ++j) {
      const double di = static_cast<double>(i) - ci;
      const double dj = static_cast<double>(j) - cj;
      if (di * di + dj * dj <= r2) s.h(i, j) += cfg.cylinder_height;
    }
  return s;
}

ShallowWaterState step(const ShallowWaterState& state, const SwConfig& cfg) {
  const Eigen::Index nx = cfg.nx, ny = cfg.ny;
  if (state.h.rows() != nx || state.h.cols() != ny)
    throw DimensionError("step: state/config grid mismatch");

  if (cfg.dx <= 0.0) throw ParameterError("step: dx must be > 0");
  const double speed = std::max(
      {state.u.cwiseAbs().maxCoeff(), state.v.cwiseAbs().maxCoeff(),
       std::sqrt(cfg.gravity * state.h.maxCoeff())});
  if (!(cfg.dt * speed < cfg.dx) || !state.h.allFinite() ||
      !state.u.allFinite() || !state.v.allFinite()) {
    std::ostringstream os;
    os << "step: CFL guard breach or non-finite field at step "
       << static_cast<long long>(std::llround(state.t / cfg.dt));
    throw NumericalError(os.str());
  }
  if (state.h.minCoeff() <= 0.0) {
    std::ostringstream os;
    os << "step: water height non-positive at step "
       << static_cast<long long>(std::llround(state.t / cfg.dt));
    throw NumericalError(os.str());
  }

  ShallowWaterState next = state;
  next.t = state.t + cfg.dt;

  // Momentum: centered pressure gradient in the interior, one-sided at the
  // walls, linear drag.
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      double dhdx, dhdy;
      if (i == 0)
        dhdx = state.h(1, j) - state.h(0, j);
      else if (i == nx - 1)
        dhdx = state.h(nx - 1, j) - state.h(nx - 2, j);
      else
        dhdx = 0.5 * (state.h(i + 1, j) - state.h(i - 1, j));
      if (j == 0)
        dhdy = state.h(i, 1) - state.h(i, 0);
      else if (j == ny - 1)
        dhdy = state.h(i, ny - 1) - state.h(i, ny - 2);
      else
        dhdy = 0.5 * (state.h(i, j + 1) - state.h(i, j - 1));
      next.u(i, j) =
          state.u(i, j) +
          cfg.dt * (-cfg.gravity * dhdx / cfg.dx - cfg.drag * state.u(i, j));
      next.v(i, j) =
          state.v(i, j) +
          cfg.dt * (-cfg.gravity * dhdy / cfg.dx - cfg.drag * state.v(i, j));
    }

  // Reflective walls: no normal or tangential flow on the domain edge.
  next.u.row(0).setZero();
  next.u.row(nx - 1).setZero();
  next.u.col(0).setZero();
  next.u.col(ny - 1).setZero();
  next.v.row(0).setZero();
  next.v.row(nx - 1).setZero();
  next.v.col(0).setZero();
  next.v.col(ny - 1).setZero();

  // Continuity in flux form with zero wall fluxes, so mass is conserved
  // exactly up to roundoff. Donor-cell upwind interface fluxes (first
  // order, mirror-symmetric) with the freshly updated velocities
  // (forward-backward stepping), which keeps both the gravity-wave modes
  // and the sharp initial front stable under explicit time integration.
  const auto flux_x = [&](Eigen::Index i, Eigen::Index j) {
    const double uf = 0.5 * (next.u(i, j) + next.u(i + 1, j));
    return uf * (uf > 0.0 ? state.h(i, j) : state.h(i + 1, j));
  };
  const auto flux_y = [&](Eigen::Index i, Eigen::Index j) {
    const double vf = 0.5 * (next.v(i, j) + next.v(i, j + 1));
    return vf * (vf > 0.0 ? state.h(i, j) : state.h(i, j + 1));
  };
  for (Eigen::Index i = 0; i < nx; ++i)
    for (Eigen::Index j = 0; j < ny; ++j) {
      const double fx_e = i + 1 < nx ? flux_x(i, j) : 0.0;
      const double fx_w = i > 0 ? flux_x(i - 1, j) : 0.0;
      const double fy_n = j + 1 < ny ? flux_y(i, j) : 0.0;
      const double fy_s = j > 0 ? flux_y(i, j - 1) : 0.0;
      next.h(i, j) = state.h(i, j) -
                     cfg.dt / cfg.dx * ((fx_e - fx_w) + (fy_n - fy_s));
    }

  return next;
}

std::vector<ShallowWaterState> simulate(const ShallowWaterState& initial,
                                        const SwConfig& cfg, double t_end,
                                        const std::vector<double>& save_times) {
  if (t_end < 0) throw ParameterError("simulate: t_end must be >= 0");
  const auto n_steps = static_cast<long long>(std::llround(t_end / cfg.dt));

  std::set<long long> save_steps;
  for (const double t : save_times) {
    const auto k = static_cast<long long>(std::llround(t / cfg.dt));
    if (std::abs(static_cast<double>(k) * cfg.dt - t) > kTimeSlack ||
        k < 0 || k > n_steps)
      throw ParameterError(
          "simulate: save times must be multiples of dt within [0, t_end]");
    save_steps.insert(k);
  }

  std::vector<ShallowWaterState> out;
  ShallowWaterState current = initial;
  current.t = 0.0;
  if (save_steps.count(0)) out.push_back(current);
  for (long long k = 1; k <= n_steps; ++k) {
    current = step(current, cfg);
    current.t = static_cast<double>(k) * cfg.dt;
    if (save_steps.count(k)) out.push_back(current);
  }
  return out;
}

Eigen::VectorXd observe_exact(const ShallowWaterState& state,
                              const SwConfig& cfg) {
  if (cfg.nx % 2 != 0 || cfg.ny % 2 != 0)
    throw DimensionError("observe: grid dimensions must be even");
  const Eigen::Index ox = cfg.nx / 2, oy = cfg.ny / 2;
  Eigen::VectorXd y(2 * ox * oy);
  for (Eigen::Index bi = 0; bi < ox; ++bi)
    for (Eigen::Index bj = 0; bj < oy; ++bj) {
      const Eigen::Index i = 2 * bi, j = 2 * bj;
      y(bi * oy + bj) = state.u(i, j) + state.u(i + 1, j) +
                        state.u(i, j + 1) + state.u(i + 1, j + 1);
      y(ox * oy + bi * oy + bj) = state.v(i, j) + state.v(i + 1, j) +
                                  state.v(i, j + 1) + state.v(i + 1, j + 1);
    }
  return y;
}

Eigen::VectorXd observe(const ShallowWaterState& state, const SwConfig& cfg,
                        const CovarianceMatrix& r, std::uint64_t seed) {
  Eigen::VectorXd y = observe_exact(state, cfg);
  if (r.dim() != y.size())
    throw DimensionError("observe: R dimension mismatch");
  const Eigen::VectorXd noise =
      sample_gaussian(Eigen::VectorXd::Zero(y.size()), r, 1, seed).col(0);
  return y + noise;
}

Eigen::MatrixXd linear_operator(const SwConfig& cfg) {
  if (cfg.nx % 2 != 0 || cfg.ny % 2 != 0)
    throw DimensionError("linear_operator: grid dimensions must be even");
  const Eigen::Index nx = cfg.nx, ny = cfg.ny;
  const Eigen::Index ox = nx / 2, oy = ny / 2;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(2 * ox * oy, 2 * nx * ny);
  for (Eigen::Index bi = 0; bi < ox; ++bi)
    for (Eigen::Index bj = 0; bj < oy; ++bj) {
      const Eigen::Index row_u = bi * oy + bj;
      const Eigen::Index row_v = ox * oy + row_u;
      for (Eigen::Index di = 0; di < 2; ++di)
        for (Eigen::Index dj = 0; dj < 2; ++dj) {
          const Eigen::Index cell = (2 * bi + di) * ny + (2 * bj + dj);
          h(row_u, cell) = 1.0;
          h(row_v, nx * ny + cell) = 1.0;
        }
    }
  return h;
}

CovarianceMatrix observation_covariance(const SwConfig& cfg, double sigma_r,
                                        double center_factor,
                                        double center_radius,
                                        double length_r) {
  const Eigen::Index ox = cfg.nx / 2, oy = cfg.ny / 2;
  const GridGeometry obs_grid(ox, oy);
  const double ci = 0.5 * static_cast<double>(cfg.nx - 1);
  const double cj = 0.5 * static_cast<double>(cfg.ny - 1);

  SoarKernelSpec spec;
  spec.length_scale = length_r;
  spec.variance_field.resize(ox * oy);
  for (Eigen::Index bi = 0; bi < ox; ++bi)
    for (Eigen::Index bj = 0; bj < oy; ++bj) {
      // Observation cell centers in fine-grid coordinates.
      const double di = 2.0 * static_cast<double>(bi) + 0.5 - ci;
      const double dj = 2.0 * static_cast<double>(bj) + 0.5 - cj;
      const bool central =
          di * di + dj * dj <= center_radius * center_radius;
      const double dev = central ? center_factor * sigma_r : sigma_r;
      spec.variance_field(obs_grid.flatten(bi, bj)) = dev * dev;
    }

  const CovarianceMatrix per_field = build_soar_covariance(obs_grid, spec);
  const Eigen::Index m = per_field.dim();
  Eigen::MatrixXd full = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  full.topLeftCorner(m, m) = per_field.entries();
  full.bottomRightCorner(m, m) = per_field.entries();
  return CovarianceMatrix(full);
}

CovarianceMatrix background_covariance_t0(const SwConfig& cfg, double sigma_b,
                                          double length_b) {
  const GridGeometry grid(cfg.nx, cfg.ny);
  return build_soar_covariance(
      grid, SoarKernelSpec::homogeneous(length_b, sigma_b * sigma_b,
                                        grid.size()));
}

const CovarianceMatrix& TwinDataset::exact_b_at(double t) const {
  for (std::size_t i = 0; i < analysis_times.size(); ++i)
    if (std::abs(analysis_times[i] - t) <= kTimeSlack)
      return exact_background_cov[i];
  throw DataGapError("TwinDataset: no exact B at requested time", t);
}

const Eigen::VectorXd& TwinDataset::truth_at(double t) const {
  for (std::size_t i = 0; i < save_times.size(); ++i)
    if (std::abs(save_times[i] - t) <= kTimeSlack) return truth[i];
  throw DataGapError("TwinDataset: no truth state at requested time", t);
}

TwinDataset make_twin_dataset(const SwConfig& cfg,
                              const SoarKernelSpec& initial_noise,
                              const CovarianceMatrix& r,
                              Eigen::Index n_large, Eigen::Index n_small,
                              const std::vector<double>& save_times,
                              const std::vector<double>& analysis_times,
                              std::uint64_t seed) {
  if (n_small > n_large)
    throw ParameterError("make_twin_dataset: n_small must be <= n_large");
  if (n_small < 1) throw ParameterError("make_twin_dataset: n_small >= 1");
  const Eigen::Index field_dim = cfg.nx * cfg.ny;
  if (initial_noise.variance_field.size() != field_dim)
    throw DimensionError(
        "make_twin_dataset: noise spec must cover one velocity field");

  TwinDataset ds;
  ds.cfg = cfg;
  ds.seed = seed;
  ds.save_times = save_times;
  std::sort(ds.save_times.begin(), ds.save_times.end());
  ds.save_times.erase(
      std::unique(ds.save_times.begin(), ds.save_times.end(),
                  [](double a, double b) {
                    return std::abs(a - b) <= kTimeSlack;
                  }),
      ds.save_times.end());
  ds.analysis_times = analysis_times;
  ds.observation_cov = r;
  ds.h_matrix = linear_operator(cfg);

  std::vector<double> all_times = ds.save_times;
  all_times.insert(all_times.end(), analysis_times.begin(),
                   analysis_times.end());
  std::sort(all_times.begin(), all_times.end());
  all_times.erase(std::unique(all_times.begin(), all_times.end(),
                              [](double a, double b) {
                                return std::abs(a - b) <= kTimeSlack;
                              }),
                  all_times.end());
  const double t_small_end =
      all_times.empty() ? 0.0 : all_times.back();
  const double t_large_end =
      analysis_times.empty()
          ? 0.0
          : *std::max_element(analysis_times.begin(), analysis_times.end());

  // Truth trajectory at every requested time.
  const ShallowWaterState init = initial_state(cfg);
  const std::vector<ShallowWaterState> truth_states =
      simulate(init, cfg, t_small_end, all_times);

  const GridGeometry grid(cfg.nx, cfg.ny);
  const CovarianceMatrix noise_cov =
      build_soar_covariance(grid, initial_noise);
  const Eigen::VectorXd zero_field = Eigen::VectorXd::Zero(field_dim);

  // Large-ensemble states are only kept at the analysis times.
  std::vector<Eigen::MatrixXd> large_states(
      analysis_times.size(),
      Eigen::MatrixXd(cfg.state_dim(), n_large));
  // Small-ensemble members carry full trajectories over the save times.
  for (const double t : ds.save_times)
    ds.backgrounds[t] = Eigen::MatrixXd(cfg.state_dim(), n_small);

  for (Eigen::Index g = 0; g < n_large; ++g) {
    const std::uint64_t member_seed = mix_seed(seed, static_cast<std::uint64_t>(g));
    const Eigen::MatrixXd noise =
        sample_gaussian(zero_field, noise_cov, 2, member_seed);

    ShallowWaterState member = init;
    for (Eigen::Index i = 0; i < cfg.nx; ++i)
      for (Eigen::Index j = 0; j < cfg.ny; ++j) {
        member.u(i, j) += noise(grid.flatten(i, j), 0);
        member.v(i, j) += noise(grid.flatten(i, j), 1);
      }

    const bool keep_trajectory = g < n_small;
    const double t_end = keep_trajectory ? t_small_end : t_large_end;
    std::vector<double> member_times;
    if (keep_trajectory) {
      member_times = all_times;
    } else {
      member_times = analysis_times;
      std::sort(member_times.begin(), member_times.end());
    }
    const std::vector<ShallowWaterState> traj =
        simulate(member, cfg, t_end, member_times);

    for (const ShallowWaterState& s : traj) {
      const Eigen::VectorXd x = s.velocity_state();
      for (std::size_t a = 0; a < analysis_times.size(); ++a)
        if (std::abs(analysis_times[a] - s.t) <= kTimeSlack)
          large_states[a].col(g) = x;
      if (keep_trajectory)
        for (auto& [t, states] : ds.backgrounds)
          if (std::abs(t - s.t) <= kTimeSlack) states.col(g) = x;
    }
  }

  for (const Eigen::MatrixXd& states : large_states)
    ds.exact_background_cov.emplace_back(empirical_covariance(states));

  // Held-out evaluation members: the slice after the first n_small when
  // the large ensemble is big enough, the first n_small otherwise.
  const Eigen::Index eval_first = n_large >= 2 * n_small ? n_small : 0;
  for (std::size_t a = 0; a < analysis_times.size(); ++a) {
    ds.eval_backgrounds[analysis_times[a]] =
        large_states[a].middleCols(eval_first, n_small);
  }

  // Truth snapshots and noisy observation ensembles, one entry per save
  // time in ascending order.
  ds.truth.reserve(ds.save_times.size());
  const Eigen::VectorXd zero_obs = Eigen::VectorXd::Zero(r.dim());
  std::size_t time_index = 0;
  for (const double t : ds.save_times) {
    const ShallowWaterState* found = nullptr;
    for (const ShallowWaterState& s : truth_states)
      if (std::abs(t - s.t) <= kTimeSlack) found = &s;
    if (!found)
      throw DataGapError("make_twin_dataset: missing truth state", t);
    ds.truth.push_back(found->velocity_state());
    const Eigen::VectorXd y_exact = ds.h_matrix * ds.truth.back();
    const std::uint64_t obs_seed =
        mix_seed(seed ^ 0x6F1D3557A5B4C2E9ull, time_index);
    const Eigen::MatrixXd noise =
        sample_gaussian(zero_obs, r, n_small, obs_seed);
    ds.observations[t] = noise.colwise() + y_exact;
    ++time_index;
  }

  // Independent observation noise for the evaluation ensemble.
  for (std::size_t a = 0; a < analysis_times.size(); ++a) {
    const double t = analysis_times[a];
    const Eigen::VectorXd y_exact = ds.h_matrix * ds.truth_at(t);
    const std::uint64_t obs_seed =
        mix_seed(seed ^ 0x3C79AC492BA7B653ull, a);
    const Eigen::MatrixXd noise =
        sample_gaussian(zero_obs, r, n_small, obs_seed);
    ds.eval_observations[t] = noise.colwise() + y_exact;
  }

  return ds;
}

}  // namespace dacomp
