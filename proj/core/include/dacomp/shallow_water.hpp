#ifndef DACOMP_SHALLOW_WATER_HPP
#define DACOMP_SHALLOW_WATER_HPP

#include <cstdint>
#include <map>
#include <vector>

#include <Eigen/Core>

#include "dacomp/covariance.hpp"
#include "dacomp/desroziers.hpp"

namespace dacomp {

struct SwConfig {
  Eigen::Index nx = 20;
  Eigen::Index ny = 20;
  double dt = 1e-4;      // s
  // Unit system: x in 0.1 m, u and v in 0.1 m/s, h in mm; earth gravity is
  // then ~1 and the 1 mm cells of the 20 mm domain are 0.01 units wide.
  double dx = 0.01;
  double drag = 0.1;     // viscous drag b
  double gravity = 1.0;  // g, scaled units
  // Initial condition: a still cylinder of water at the domain center.
  double base_level = 1.0;       // mm
  double cylinder_height = 0.1;  // mm added inside the cylinder
  double cylinder_radius = 2.5;  // grid cells

  Eigen::Index state_dim() const { return 2 * nx * ny; }  // (u, v)
  Eigen::Index obs_dim() const { return 2 * (nx / 2) * (ny / 2); }
};

// Water height and velocities on the regular grid. h in mm, u and v in
// 0.1 m/s units, t in seconds.
struct ShallowWaterState {
  Eigen::MatrixXd h;  // nx x ny, > 0 everywhere
  Eigen::MatrixXd u;
  Eigen::MatrixXd v;
  double t = 0.0;

  // Row-major (u, v) concatenation; h is carried by the model but is not
  // part of the assimilated state.
  Eigen::VectorXd velocity_state() const;
  void set_velocity_state(const Eigen::VectorXd& x);
};

ShallowWaterState initial_state(const SwConfig& cfg);

// One forward-Euler step:
//   u <- u + dt (-g dh/dx - b u),  v likewise,
//   h <- h - dt (d(uh)/dx + d(vh)/dy)  in flux form with zero wall fluxes.
// Reflective boundary: u, v = 0 on the domain edge. Throws NumericalError on
// a CFL guard breach or non-finite values.
ShallowWaterState step(const ShallowWaterState& state, const SwConfig& cfg);

// Repeated stepping; returns the states at the requested save times
// (which must be multiples of dt inside [0, t_end]), plus t = 0 if listed.
std::vector<ShallowWaterState> simulate(const ShallowWaterState& initial,
                                        const SwConfig& cfg, double t_end,
                                        const std::vector<double>& save_times);

// Noise-free 2x2 aggregation of u and v: u-block then v-block, each
// row-major over the (nx/2) x (ny/2) observation lattice.
Eigen::VectorXd observe_exact(const ShallowWaterState& state,
                              const SwConfig& cfg);

// Aggregation plus one draw of correlated observation noise.
Eigen::VectorXd observe(const ShallowWaterState& state, const SwConfig& cfg,
                        const CovarianceMatrix& r, std::uint64_t seed);

// Explicit 0/1 matrix form of the aggregation stencil over the (u, v)
// state, shape obs_dim x state_dim.
Eigen::MatrixXd linear_operator(const SwConfig& cfg);

// The non-homogeneous observation covariance of the twin experiment: SOAR
// with scale length_r on the observation lattice, marginal deviation
// sigma_r away from the center and center_factor * sigma_r within
// center_radius (fine-grid cells) of the domain center; assembled
// block-diagonally over (u, v).
CovarianceMatrix observation_covariance(const SwConfig& cfg, double sigma_r,
                                        double center_factor,
                                        double center_radius, double length_r);

// Per-field background covariance at t = 0: homogeneous SOAR over the
// model grid.
CovarianceMatrix background_covariance_t0(const SwConfig& cfg, double sigma_b,
                                          double length_b);

struct TwinDataset {
  SwConfig cfg;
  std::uint64_t seed = 0;
  std::vector<double> save_times;

  std::vector<Eigen::VectorXd> truth;  // (u,v) state per save time
  EnsembleSeries backgrounds;          // n_small member columns per save time
  EnsembleSeries observations;         // n_small noisy obs per save time

  std::vector<double> analysis_times;
  std::vector<CovarianceMatrix> exact_background_cov;  // B_E,t per analysis time

  // Held-out evaluation ensemble at the analysis times: members disjoint
  // from the first n_small (when n_large allows) with independent
  // observation noise. Scoring against it avoids the selection bias of
  // judging projections on the residuals that built them.
  EnsembleSeries eval_backgrounds;
  EnsembleSeries eval_observations;

  CovarianceMatrix observation_cov;  // exact R
  Eigen::MatrixXd h_matrix;          // linear aggregation operator

  const CovarianceMatrix& exact_b_at(double t) const;
  const Eigen::VectorXd& truth_at(double t) const;
};

// Twin-experiment generation: one truth run, n_large perturbed background
// trajectories through identical dynamics (members are deterministic under
// (seed, member index)), exact covariances B_E,t estimated from the large
// ensemble at the analysis times, and n_small observation ensembles with
// fresh i.i.d. noise per save time. Only the first n_small members are
// retained as trajectories.
TwinDataset make_twin_dataset(const SwConfig& cfg,
                              const SoarKernelSpec& initial_noise,
                              const CovarianceMatrix& r,
                              Eigen::Index n_large, Eigen::Index n_small,
                              const std::vector<double>& save_times,
                              const std::vector<double>& analysis_times,
                              std::uint64_t seed);

}  // namespace dacomp

#endif
