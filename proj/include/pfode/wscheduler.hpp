#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pfode/dynamics.hpp"
#include "pfode/oracle.hpp"
#include "pfode/schedule.hpp"

namespace pfode {

// Resampling weight g(sigma) = (sigma / sigma_max)^{-q}; w = g^2.
struct ResampleWeights {
  double q = 0.25;

  void validate() const;
  double sqrt_w(double sigma, double sigma_max) const;
};

// ||v_trial - v_t|| / dt_trial.
double s_hat(const Vector& v_t, const Vector& v_trial, double dt_trial);
inline double s_hat(const VelocityEval& v_t, const VelocityEval& v_trial, double dt_trial) {
  return s_hat(v_t.v, v_trial.v, dt_trial);
}
// Batch form: root mean square over columns of the per-sample estimate.
double s_hat(const Samples& v_t, const Samples& v_trial, double dt_trial);

// sqrt(2 eta / s_hat), or dt_max when s_hat is zero. Never exceeds dt_max.
double max_step(double eta, double s_hat, double dt_max);

struct ScheduleOptions {
  int reference_grid_points = 64;  // EDM rho = 7 warm-start grid
  double dt_max_fraction = 1.0;    // cap on any step, as a fraction of t_0
  double rtol = 0.02;              // line-search agreement |bound - gap| <= rtol gap
  double delta_fraction = 1e-4;    // smallest candidate gap, relative to the current t
  int max_steps = 20000;

  void validate() const;
};

struct BuildResult {
  TimestepSchedule schedule;
  std::vector<double> candidate_dt;  // line-search output per step
  std::vector<double> committed_dt;  // closed-form step actually taken
  std::vector<char> converged;       // line search met the tolerance within budget
};

// Line-search iteration budget for a bracket of width gap_limit:
// ceil(log2(gap_limit / delta)) + 2.
int linesearch_budget(double gap_limit, double delta);

// Adaptive Wasserstein-bounded schedule. x0 is a batch (columns) of prior
// draws at t_0 = p.t_max(); every oracle call is batched over it.
BuildResult build_schedule(const Denoiser& den, const Parameterization& p, const EtaSchedule& eta,
                           const Samples& x0, const ScheduleOptions& opts = {});
// Draws n prior samples with `seed` and builds from them.
BuildResult build_schedule(const Denoiser& den, const Parameterization& p, const EtaSchedule& eta,
                           int n_samples, std::uint64_t seed, const ScheduleOptions& opts = {});

// Builds with `eta`, then with eta scaled by 1/4 repeatedly (at most
// `max_refinements` times) until the schedule has at least `min_steps`
// steps. Used when a coarse adaptive grid has to feed resample_n_steps.
BuildResult build_schedule_resolving(const Denoiser& den, const Parameterization& p, const EtaSchedule& eta,
                                     int n_samples, std::uint64_t seed, int min_steps,
                                     const ScheduleOptions& opts = {}, int max_refinements = 6);

enum class EtaProxy { Budget, Realized };

// N-step geodesic resampling of `base` with cost increments
// sqrt(w(t_j)) sqrt(eta_j) per base step.
TimestepSchedule resample_n_steps(const Parameterization& p, const TimestepSchedule& base,
                                  const ResampleWeights& weights, int n, EtaProxy proxy = EtaProxy::Budget);

// sqrt(L~) for every step of `grid`, integrating the piecewise-constant base
// cost density over each interval.
std::vector<double> geodesic_costs(const Parameterization& p, const TimestepSchedule& base,
                                   const ResampleWeights& weights, const std::vector<double>& grid,
                                   EtaProxy proxy = EtaProxy::Budget);

double coefficient_of_variation(const std::vector<double>& values);

struct EtaProfileRow {
  int step = 0;
  double t = 0.0;
  double sigma = 0.0;
  double eta_t = 0.0;
};

// Realized per-step Euler local error proxy dt^2 S / 2 along Euler
// trajectories started from `x0` at schedule.times[0]. The final step into
// sigma = 0 uses a half-gap trial.
std::vector<EtaProfileRow> eta_profile(const TimestepSchedule& schedule, const Denoiser& den,
                                       const Parameterization& p, const Samples& x0);
// Starts from exact marginal samples.
std::vector<EtaProfileRow> eta_profile(const TimestepSchedule& schedule, const GaussianMixture& gm,
                                       const Parameterization& p, int n_samples, std::uint64_t seed);

struct BoundReport {
  double lhs = 0.0;             // endpoint W2(reference, Euler)
  double lipschitz = 0.0;       // L
  double sum_local = 0.0;       // sum dt_i^2 Mbar_i / 2
  double log_rhs = 0.0;         // L t_0 + log(sum_local)
  double rhs = 0.0;             // exp(log_rhs); may be +inf
  std::vector<double> m_bar;    // per step
  bool holds = false;
  int n_samples = 0;
};

struct BoundOptions {
  int dense_points = 8;        // sub-grid points per step for the suprema
  int flow_substeps = 400;
};

BoundReport total_bound_check(const TimestepSchedule& schedule, const Denoiser& den, const Parameterization& p,
                              const Samples& x0, const BoundOptions& opts = {});
BoundReport total_bound_check(const TimestepSchedule& schedule, const GaussianMixture& gm,
                              const Parameterization& p, int n_samples, std::uint64_t seed,
                              const BoundOptions& opts = {});

}  // namespace pfode
