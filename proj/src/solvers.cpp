#include "pfode/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace pfode {

std::string_view to_string(LambdaKind kind) {
  switch (kind) {
    case LambdaKind::Step: return "step";
    case LambdaKind::Linear: return "linear";
    case LambdaKind::Cosine: return "cosine";
    case LambdaKind::PureEuler: return "euler";
    case LambdaKind::PureHeun: return "heun";
  }
  return "?";
}

LambdaKind lambda_kind_from_string(std::string_view name) {
  if (name == "step") return LambdaKind::Step;
  if (name == "linear") return LambdaKind::Linear;
  if (name == "cosine") return LambdaKind::Cosine;
  if (name == "euler") return LambdaKind::PureEuler;
  if (name == "heun") return LambdaKind::PureHeun;
  throw DomainError("unknown lambda schedule '" + std::string(name) + "'");
}

std::string_view to_string(SolverUsed s) {
  switch (s) {
    case SolverUsed::Euler: return "euler";
    case SolverUsed::Heun: return "heun";
    case SolverUsed::Blend: return "blend";
  }
  return "?";
}

void SolverPolicy::validate() const {
  if (lambda == LambdaKind::Step && !(tau_k >= 0.0)) throw DomainError("tau_k must be >= 0");
}

double SolverPolicy::blend_weight(double progress) const {
  const double u = std::clamp(progress, 0.0, 1.0);
  switch (lambda) {
    case LambdaKind::Linear: return 1.0 - u;
    case LambdaKind::Cosine: return 0.5 * (1.0 + std::cos(std::numbers::pi * u));
    case LambdaKind::PureEuler: return 1.0;
    case LambdaKind::PureHeun: return 0.0;
    case LambdaKind::Step: break;
  }
  throw DomainError("blend_weight is undefined for the step schedule");
}

namespace {

void check_times(double t_from, double t_to) {
  if (!(t_from > t_to) || !(t_to >= 0.0) || !std::isfinite(t_from)) {
    throw DomainError("solver steps need t_from > t_to >= 0");
  }
}

VelocityEval start_velocity(const Denoiser& den, const Parameterization& p, const Vector& x, double t,
                            const std::optional<VelocityEval>& cached, int& nfe) {
  if (cached) return *cached;
  ++nfe;
  return velocity(den, p, x, t);
}

}  // namespace

StepRecord euler_step(const Denoiser& den, const Parameterization& p, const Vector& x, double t_from,
                      double t_to, const std::optional<VelocityEval>& cached) {
  check_times(t_from, t_to);
  StepRecord rec{t_from, t_to, SolverUsed::Euler, 1.0, std::nullopt, 0, {}};
  const auto v = start_velocity(den, p, x, t_from, cached, rec.nfe);
  rec.x_out = x - (t_from - t_to) * v.v;
  return rec;
}

StepRecord heun_step(const Denoiser& den, const Parameterization& p, const Vector& x, double t_from,
                     double t_to, const std::optional<VelocityEval>& cached) {
  check_times(t_from, t_to);
  if (p.sigma(t_to) == 0.0) return euler_step(den, p, x, t_from, t_to, cached);
  StepRecord rec{t_from, t_to, SolverUsed::Heun, 0.0, std::nullopt, 0, {}};
  const auto v = start_velocity(den, p, x, t_from, cached, rec.nfe);
  const double dt = t_from - t_to;
  const Vector predictor = x - dt * v.v;
  const auto v_end = velocity(den, p, predictor, t_to);
  ++rec.nfe;
  rec.x_out = x - dt * (0.5 * (v.v + v_end.v));
  return rec;
}

StepRecord blend_step(const Denoiser& den, const Parameterization& p, const Vector& x, double t_from,
                      double t_to, double lambda, const std::optional<VelocityEval>& cached) {
  check_times(t_from, t_to);
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("blend weight must lie in [0, 1]");
  int nfe = 0;
  const auto v = start_velocity(den, p, x, t_from, cached, nfe);
  const auto euler = euler_step(den, p, x, t_from, t_to, v);
  const auto heun = heun_step(den, p, x, t_from, t_to, v);
  StepRecord rec{t_from, t_to, SolverUsed::Blend, lambda, std::nullopt, nfe + heun.nfe, {}};
  rec.x_out = lambda * euler.x_out + (1.0 - lambda) * heun.x_out;
  return rec;
}

CurvatureMeasures curvature_measures(const Vector& v_prev, const Vector& v_curr, double dt_prev) {
  if (!(dt_prev > 0.0)) throw DomainError("curvature_measures requires dt_prev > 0");
  CurvatureMeasures out;
  const double diff = (v_curr - v_prev).norm();
  out.kappa_abs = diff / dt_prev;
  const double base = v_prev.norm();
  if (base > 0.0) {
    out.kappa_rel = out.kappa_abs / base;
  } else if (diff == 0.0) {
    out.kappa_rel = 0.0;
  } else {
    out.kappa_rel = std::numeric_limits<double>::infinity();
    out.degenerate = true;
  }
  out.kappa_hat = out.kappa_rel;
  return out;
}

RunReport mixed_sample(const Denoiser& den, const Parameterization& p, const TimestepSchedule& schedule,
                       const SolverPolicy& policy, std::optional<Vector> x0, std::uint64_t seed) {
  schedule.validate();
  policy.validate();
  const std::size_t n_steps = schedule.steps();
  RunReport report;
  report.trajectory.reserve(n_steps + 1);
  report.steps.reserve(n_steps);
  if (!x0) x0 = sample_prior(den.dim(), p, schedule.times.front(), 1, seed).col(0);
  if (x0->size() != den.dim()) throw DomainError("x0 dimension does not match the denoiser");
  report.trajectory.push_back(*x0);

  const double log_span = std::log(p.sigma_max()) - std::log(p.sigma_min());
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Vector& x = report.trajectory.back();
    const double t_from = schedule.times[i];
    const double t_to = schedule.times[i + 1];
    const bool final_step = p.sigma(t_to) == 0.0;

    const VelocityEval v = velocity(den, p, x, t_from);
    report.velocities.push_back(v.v);
    StepRecord rec;
    // One-step delayed estimate from the cached grid velocities; free.
    std::optional<CurvatureMeasures> cached;
    if (i > 0) cached = curvature_measures(report.velocities[i - 1], v.v, schedule.times[i - 1] - t_from);

    switch (policy.lambda) {
      case LambdaKind::PureEuler:
        rec = euler_step(den, p, x, t_from, t_to, v);
        break;
      case LambdaKind::PureHeun:
        rec = heun_step(den, p, x, t_from, t_to, v);
        break;
      case LambdaKind::Linear:
      case LambdaKind::Cosine: {
        const double progress = (std::log(p.sigma_max()) - std::log(schedule.sigmas[i])) / log_span;
        rec = blend_step(den, p, x, t_from, t_to, policy.blend_weight(progress), v);
        break;
      }
      case LambdaKind::Step: {
        const double dt = t_from - t_to;
        if (final_step) {
          rec = euler_step(den, p, x, t_from, t_to, v);
        } else if (policy.curvature_source == CurvatureSource::Lookahead) {
          const Vector predictor = x - dt * v.v;
          const VelocityEval v_end = velocity(den, p, predictor, t_to);
          const auto m = curvature_measures(v.v, v_end.v, dt);
          if (!m.degenerate && m.kappa_rel < policy.tau_k) {
            rec = {t_from, t_to, SolverUsed::Euler, 1.0, m.kappa_rel, 1, predictor};
          } else {
            rec = {t_from, t_to, SolverUsed::Heun, 0.0, m.kappa_rel, 1, x - dt * (0.5 * (v.v + v_end.v))};
          }
        } else if (i == 0) {
          rec = heun_step(den, p, x, t_from, t_to, v);
        } else {
          const auto& m = *cached;
          if (!m.degenerate && m.kappa_hat < policy.tau_k) {
            rec = euler_step(den, p, x, t_from, t_to, v);
          } else {
            rec = heun_step(den, p, x, t_from, t_to, v);
          }
          rec.kappa_hat = m.kappa_hat;
        }
        break;
      }
    }
    if (cached && !rec.kappa_hat) rec.kappa_hat = cached->kappa_hat;
    rec.nfe += 1;  // the grid evaluation v(x_i, t_i)
    if (!rec.x_out.allFinite()) throw NumericalError("solver produced a non-finite state");
    report.total_nfe += rec.nfe;
    report.trajectory.push_back(rec.x_out);
    report.steps.push_back(std::move(rec));
  }
  return report;
}

}  // namespace pfode
