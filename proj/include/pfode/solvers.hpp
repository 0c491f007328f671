#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "pfode/dynamics.hpp"
#include "pfode/schedule.hpp"

namespace pfode {

enum class LambdaKind { Step, Linear, Cosine, PureEuler, PureHeun };
enum class CurvatureSource { Cached, Lookahead };

std::string_view to_string(LambdaKind kind);
LambdaKind lambda_kind_from_string(std::string_view name);

// Lambda(t) mixing x = Lambda x_Euler + (1 - Lambda) x_Heun.
//
// Step switches per step on the relative curvature estimate: Euler when
// kappa < tau_k, Heun otherwise. Cached reads the one-step delayed estimate
// from the previous and current grid velocities (no extra NFE); Lookahead
// spends the predictor evaluation up front and measures kappa_rel(i) directly.
//
// Linear and Cosine blend every step with Lambda driven by the fraction of
// log(sigma_max) -> log(sigma_min) already traversed.
struct SolverPolicy {
  LambdaKind lambda = LambdaKind::PureHeun;
  double tau_k = 0.0;
  CurvatureSource curvature_source = CurvatureSource::Cached;

  static SolverPolicy euler() { return {LambdaKind::PureEuler}; }
  static SolverPolicy heun() { return {LambdaKind::PureHeun}; }
  static SolverPolicy step(double tau_k, CurvatureSource src = CurvatureSource::Cached) {
    return {LambdaKind::Step, tau_k, src};
  }
  static SolverPolicy linear() { return {LambdaKind::Linear}; }
  static SolverPolicy cosine() { return {LambdaKind::Cosine}; }

  void validate() const;
  // Lambda for Linear/Cosine at normalized log-sigma progress in [0, 1].
  double blend_weight(double progress) const;

  bool operator==(const SolverPolicy&) const = default;
};

enum class SolverUsed { Euler, Heun, Blend };
std::string_view to_string(SolverUsed s);

struct StepRecord {
  double t_from = 0.0;
  double t_to = 0.0;
  SolverUsed solver = SolverUsed::Euler;
  double lambda = 1.0;                // 1 = Euler, 0 = Heun
  std::optional<double> kappa_hat;    // estimate that drove the choice, if any
  int nfe = 0;
  Vector x_out;
};

// x - (t_from - t_to) v(x, t_from). nfe is 0 when `cached` is supplied
// (it must be the velocity at (x, t_from)).
StepRecord euler_step(const Denoiser& den, const Parameterization& p, const Vector& x, double t_from,
                      double t_to, const std::optional<VelocityEval>& cached = std::nullopt);

// Explicit trapezoid (Heun). Degenerates to euler_step when sigma(t_to) = 0.
StepRecord heun_step(const Denoiser& den, const Parameterization& p, const Vector& x, double t_from,
                     double t_to, const std::optional<VelocityEval>& cached = std::nullopt);

// Lambda x_E + (1 - Lambda) x_H from the same start point.
StepRecord blend_step(const Denoiser& den, const Parameterization& p, const Vector& x, double t_from,
                      double t_to, double lambda, const std::optional<VelocityEval>& cached = std::nullopt);

struct CurvatureMeasures {
  double kappa_abs = 0.0;  // |v_curr - v_prev| / dt
  double kappa_rel = 0.0;  // kappa_abs / |v_prev|, attributed to the earlier index
  double kappa_hat = 0.0;  // same pair read as the cached estimate at the later index
  bool degenerate = false; // |v_prev| = 0 with v_curr != v_prev
};

CurvatureMeasures curvature_measures(const Vector& v_prev, const Vector& v_curr, double dt_prev);
inline CurvatureMeasures curvature_measures(const VelocityEval& v_prev, const VelocityEval& v_curr,
                                            double dt_prev) {
  return curvature_measures(v_prev.v, v_curr.v, dt_prev);
}

struct RunReport {
  std::vector<Vector> trajectory;   // x_0 .. x_N
  std::vector<Vector> velocities;   // v(x_i, t_i) for i < N
  std::vector<StepRecord> steps;
  long total_nfe = 0;

  const Vector& final_state() const { return trajectory.back(); }
};

// Integrates one trajectory over `schedule`. Without x0, the start is drawn
// from the prior s(t_0) sigma(t_0) N(0, I) with `seed`.
RunReport mixed_sample(const Denoiser& den, const Parameterization& p, const TimestepSchedule& schedule,
                       const SolverPolicy& policy, std::optional<Vector> x0 = std::nullopt,
                       std::uint64_t seed = 0);

}  // namespace pfode
