#include "pfode/wscheduler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pfode/metrics.hpp"
#include "pfode/rng.hpp"

namespace pfode {

void ResampleWeights::validate() const {
  if (!(q >= 0.0) || !std::isfinite(q)) throw DomainError("resample q must be finite and >= 0");
}

double ResampleWeights::sqrt_w(double sigma, double sigma_max) const {
  if (q == 0.0) return 1.0;
  if (!(sigma > 0.0)) throw DomainError("resample weight undefined at sigma = 0");
  return std::pow(sigma / sigma_max, -q);
}

double s_hat(const Vector& v_t, const Vector& v_trial, double dt_trial) {
  if (!(dt_trial > 0.0)) throw DomainError("s_hat: dt_trial must be positive");
  return (v_trial - v_t).norm() / dt_trial;
}

double s_hat(const Samples& v_t, const Samples& v_trial, double dt_trial) {
  if (!(dt_trial > 0.0)) throw DomainError("s_hat: dt_trial must be positive");
  if (v_t.cols() == 0) return 0.0;
  const double ms = (v_trial - v_t).colwise().squaredNorm().sum() / static_cast<double>(v_t.cols());
  return std::sqrt(ms) / dt_trial;
}

double max_step(double eta, double s, double dt_max) {
  if (!(eta > 0.0)) throw DomainError("max_step: eta must be positive");
  if (!(s >= 0.0)) throw DomainError("max_step: s_hat must be >= 0");
  if (s == 0.0) return dt_max;
  return std::min(std::sqrt(2.0 * eta / s), dt_max);
}

void ScheduleOptions::validate() const {
  if (reference_grid_points < 2) throw DomainError("reference_grid_points must be >= 2");
  if (!(dt_max_fraction > 0.0 && dt_max_fraction <= 1.0)) throw DomainError("dt_max_fraction must be in (0, 1]");
  if (!(rtol > 0.0 && rtol < 1.0)) throw DomainError("rtol must be in (0, 1)");
  if (!(delta_fraction > 0.0 && delta_fraction < 1.0)) throw DomainError("delta_fraction must be in (0, 1)");
  if (max_steps < 1) throw DomainError("max_steps must be >= 1");
}

int linesearch_budget(double gap_limit, double delta) {
  if (!(gap_limit > 0.0) || !(delta > 0.0)) throw DomainError("linesearch_budget: positive inputs required");
  return static_cast<int>(std::ceil(std::log2(std::max(1.0, gap_limit / delta)))) + 2;
}

namespace {

void check_finite(const Samples& x, const char* what) {
  if (!x.allFinite()) throw NumericalError(std::string("build_schedule: non-finite ") + what);
}

// Gap from t to the first reference time strictly below it.
double warm_start_gap(const std::vector<double>& ref, double t) {
  for (double r : ref)
    if (r < t) return t - r;
  return t;
}

}  // namespace

BuildResult build_schedule(const Denoiser& den, const Parameterization& p, const EtaSchedule& eta,
                           const Samples& x0, const ScheduleOptions& opts) {
  eta.validate();
  opts.validate();
  if (x0.rows() != den.dim()) throw DomainError("build_schedule: x0 dimension does not match the denoiser");
  if (x0.cols() == 0) throw DomainError("build_schedule: empty sample batch");

  const double t0 = p.t_max();
  const double t_min = p.t_min();
  const double cap = opts.dt_max_fraction * t0;
  const double snap = 1e-12 * t0;
  const std::vector<double> ref = edm_reference_grid(p, opts.reference_grid_points - 1).times;

  BuildResult out;
  TimestepSchedule& sched = out.schedule;
  sched.times.push_back(t0);

  Samples x = x0;
  double t = t0;
  VelocityBatch vb = velocity_batch(den, p, x, t);
  long nfe = 1;
  check_finite(vb.v, "velocity");

  while (true) {
    if (static_cast<int>(sched.per_step.size()) >= opts.max_steps)
      throw NumericalError("build_schedule: step budget exceeded");
    const double eta_i = eta(p.sigma(t), p.sigma_max());

    if (t - t_min <= snap) {
      // Terminal step into sigma = 0. The oracle is singular there, so the
      // variation estimate comes from a half-gap trial.
      const double g = 0.5 * t;
      const Samples x_tr = x - g * vb.v;
      const VelocityBatch v_tr = velocity_batch(den, p, x_tr, t - g);
      ++nfe;
      const double s = s_hat(vb.v, v_tr.v, g);
      sched.per_step.push_back({eta_i, s, 1});
      out.candidate_dt.push_back(t);
      out.committed_dt.push_back(t);
      out.converged.push_back(1);
      sched.times.push_back(0.0);
      break;
    }

    const double gap_limit = std::min(cap, t - t_min);
    const double delta = std::min(opts.delta_fraction * t, gap_limit);
    const int budget = linesearch_budget(gap_limit, delta);
    double g = std::clamp(warm_start_gap(ref, t), delta, gap_limit);

    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    double bound = g, s = 0.0;
    int iters = 0;
    bool ok = false;
    Samples x_tr;
    VelocityBatch v_tr;
    while (true) {
      x_tr = x - g * vb.v;
      v_tr = velocity_batch(den, p, x_tr, t - g);
      ++nfe;
      ++iters;
      check_finite(v_tr.v, "trial velocity");
      s = s_hat(vb.v, v_tr.v, g);
      bound = max_step(eta_i, s, gap_limit);
      if (std::abs(bound - g) <= opts.rtol * g || (bound >= g && g >= gap_limit) ||
          (bound <= g && g <= delta)) {
        ok = true;
        break;
      }
      if (iters >= budget) break;
      if (bound < g) hi = g;
      else lo = g;
      double next = std::clamp(bound, 0.5 * g, 2.0 * g);
      next = std::clamp(next, delta, gap_limit);
      if ((next <= lo || next >= hi) && lo > 0.0 && std::isfinite(hi)) next = std::sqrt(lo * hi);
      g = next;
    }

    const double dt = bound;
    const bool lands_on_min = dt >= t - t_min;
    const double t_next = lands_on_min ? t_min : t - dt;

    sched.per_step.push_back({eta_i, s, iters});
    out.candidate_dt.push_back(g);
    out.committed_dt.push_back(t - t_next);
    out.converged.push_back(ok ? 1 : 0);
    sched.times.push_back(t_next);

    if (dt == g) {
      x = std::move(x_tr);
      vb = std::move(v_tr);
    } else {
      x -= (t - t_next) * vb.v;
      vb = velocity_batch(den, p, x, t_next);
      ++nfe;
    }
    check_finite(x, "state");
    t = t_next;
  }

  sched.sigmas.resize(sched.times.size());
  for (std::size_t i = 0; i < sched.times.size(); ++i) sched.sigmas[i] = p.sigma(sched.times[i]);
  sched.total_nfe = nfe;
  sched.validate();
  return out;
}

BuildResult build_schedule(const Denoiser& den, const Parameterization& p, const EtaSchedule& eta,
                           int n_samples, std::uint64_t seed, const ScheduleOptions& opts) {
  if (n_samples < 1) throw DomainError("build_schedule: need at least one sample");
  const Samples x0 = sample_prior(den.dim(), p, p.t_max(), n_samples, seed, derive_stream(seed, "schedule"));
  return build_schedule(den, p, eta, x0, opts);
}

BuildResult build_schedule_resolving(const Denoiser& den, const Parameterization& p, const EtaSchedule& eta,
                                     int n_samples, std::uint64_t seed, int min_steps,
                                     const ScheduleOptions& opts, int max_refinements) {
  EtaSchedule e = eta;
  BuildResult r = build_schedule(den, p, e, n_samples, seed, opts);
  for (int i = 0; i < max_refinements && static_cast<int>(r.schedule.steps()) < min_steps; ++i) {
    e.eta_min *= 0.25;
    e.eta_max *= 0.25;
    r = build_schedule(den, p, e, n_samples, seed, opts);
  }
  return r;
}

namespace {

std::vector<double> base_increments(const Parameterization& p, const TimestepSchedule& base,
                                    const ResampleWeights& weights, EtaProxy proxy) {
  if (base.per_step.size() != base.steps())
    throw DomainError("resample: base schedule carries no per-step eta proxies");
  std::vector<double> inc(base.steps());
  for (std::size_t j = 0; j < inc.size(); ++j) {
    const StepMeta& m = base.per_step[j];
    double eta_j = m.eta_used;
    if (proxy == EtaProxy::Realized) {
      const double dt = base.step_size(j);
      eta_j = 0.5 * dt * dt * m.s_hat;
    }
    if (!(eta_j > 0.0)) throw DomainError("resample: eta proxies must be positive");
    inc[j] = weights.sqrt_w(base.sigmas[j], p.sigma_max()) * std::sqrt(eta_j);
  }
  return inc;
}

}  // namespace

TimestepSchedule resample_n_steps(const Parameterization& p, const TimestepSchedule& base,
                                  const ResampleWeights& weights, int n, EtaProxy proxy) {
  weights.validate();
  base.validate();
  if (n < 1) throw DomainError("resample: N must be positive");
  if (static_cast<std::size_t>(n) > base.steps())
    throw DomainError("resample: N exceeds the base schedule resolution");

  const std::vector<double> inc = base_increments(p, base, weights, proxy);
  if (static_cast<std::size_t>(n) == base.steps()) {
    TimestepSchedule same = base;
    for (auto& m : same.per_step) m.linesearch_iters = 0;
    return same;
  }
  std::vector<double> gamma(inc.size() + 1, 0.0);
  std::partial_sum(inc.begin(), inc.end(), gamma.begin() + 1);
  const double total = gamma.back();

  std::vector<double> times(n + 1);
  times.front() = base.times.front();
  times.back() = 0.0;
  std::size_t j = 0;
  for (int k = 1; k < n; ++k) {
    const double target = total * static_cast<double>(k) / static_cast<double>(n);
    while (j + 1 < inc.size() && gamma[j + 1] < target) ++j;
    const double frac = (target - gamma[j]) / inc[j];
    times[k] = base.times[j] - frac * (base.times[j] - base.times[j + 1]);
  }
  for (int k = 1; k <= n; ++k)
    if (!(times[k] < times[k - 1])) throw NumericalError("resample: output grid is not strictly decreasing");

  TimestepSchedule out = TimestepSchedule::from_times(p, std::move(times));
  // Each output step inherits the proxies of the base step it starts in.
  out.per_step.resize(n);
  std::size_t b = 0;
  for (int k = 0; k < n; ++k) {
    while (b + 1 < base.steps() && base.times[b + 1] >= out.times[k]) ++b;
    out.per_step[k] = {base.per_step[b].eta_used, base.per_step[b].s_hat, 0};
  }
  out.total_nfe = base.total_nfe;
  return out;
}

std::vector<double> geodesic_costs(const Parameterization& p, const TimestepSchedule& base,
                                   const ResampleWeights& weights, const std::vector<double>& grid,
                                   EtaProxy proxy) {
  const std::vector<double> inc = base_increments(p, base, weights, proxy);
  std::vector<double> out;
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const double a = grid[k], b = grid[k + 1];
    double acc = 0.0;
    for (std::size_t j = 0; j < inc.size(); ++j) {
      const double hi = std::min(a, base.times[j]);
      const double lo = std::max(b, base.times[j + 1]);
      if (hi > lo) acc += inc[j] * (hi - lo) / base.step_size(j);
    }
    out.push_back(acc);
  }
  return out;
}

double coefficient_of_variation(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  return mean == 0.0 ? 0.0 : std::sqrt(var) / mean;
}

std::vector<EtaProfileRow> eta_profile(const TimestepSchedule& schedule, const Denoiser& den,
                                       const Parameterization& p, const Samples& x0) {
  schedule.validate();
  if (x0.rows() != den.dim()) throw DomainError("eta_profile: x0 dimension does not match the denoiser");
  std::vector<EtaProfileRow> rows;
  if (x0.cols() == 0) return rows;
  Samples x = x0;
  VelocityBatch vb = velocity_batch(den, p, x, schedule.times[0]);
  for (std::size_t i = 0; i < schedule.steps(); ++i) {
    const double t = schedule.times[i], dt = schedule.step_size(i);
    EtaProfileRow row{static_cast<int>(i), t, schedule.sigmas[i], 0.0};
    if (schedule.times[i + 1] > 0.0) {
      Samples x_next = x - dt * vb.v;
      VelocityBatch v_next = velocity_batch(den, p, x_next, schedule.times[i + 1]);
      row.eta_t = 0.5 * dt * dt * s_hat(vb.v, v_next.v, dt);
      x = std::move(x_next);
      vb = std::move(v_next);
    } else {
      const double g = 0.5 * dt;
      const VelocityBatch v_half = velocity_batch(den, p, x - g * vb.v, t - g);
      row.eta_t = 0.5 * dt * dt * s_hat(vb.v, v_half.v, g);
      x -= dt * vb.v;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<EtaProfileRow> eta_profile(const TimestepSchedule& schedule, const GaussianMixture& gm,
                                       const Parameterization& p, int n_samples, std::uint64_t seed) {
  schedule.validate();
  const Samples x0 = sample_marginal(gm, p, schedule.times[0], n_samples, seed, derive_stream(seed, "eta-profile"));
  return eta_profile(schedule, static_cast<const Denoiser&>(gm), p, x0);
}

BoundReport total_bound_check(const TimestepSchedule& schedule, const Denoiser& den, const Parameterization& p,
                              const Samples& x0, const BoundOptions& opts) {
  schedule.validate();
  if (opts.dense_points < 1) throw DomainError("total_bound_check: dense_points must be >= 1");
  if (x0.rows() != den.dim()) throw DomainError("total_bound_check: x0 dimension does not match the denoiser");
  BoundReport rep;
  rep.n_samples = static_cast<int>(x0.cols());
  if (x0.cols() == 0) {
    rep.holds = true;
    rep.log_rhs = -std::numeric_limits<double>::infinity();
    return rep;
  }

  const double t0 = schedule.times.front();
  const int k_pts = opts.dense_points;
  Samples x = x0;
  for (std::size_t i = 0; i < schedule.steps(); ++i) {
    const double t = schedule.times[i], dt = schedule.step_size(i);
    const VelocityBatch vb = velocity_batch(den, p, x, t);
    Vector sup = Vector::Zero(x.cols());
    const bool to_zero = schedule.times[i + 1] == 0.0;
    const int last = to_zero ? k_pts - 1 : k_pts;
    for (int k = 0; k <= last; ++k) {
      const double h = dt * static_cast<double>(k) / static_cast<double>(k_pts);
      const double tau = t - h;
      const Samples y = x - h * vb.v;
      sup = sup.cwiseMax(curvature_norms(den, p, y, tau));
      rep.lipschitz = std::max(rep.lipschitz, velocity_jacobian_norms(den, p, y, tau).maxCoeff());
    }
    const double m = std::sqrt(sup.squaredNorm() / static_cast<double>(x.cols()));
    rep.m_bar.push_back(m);
    rep.sum_local += 0.5 * dt * dt * m;
    x -= dt * vb.v;
  }

  const Samples ref = reference_flow(den, p, x0, t0, 0.0, opts.flow_substeps);
  rep.lhs = w2(ref, x).w2;
  rep.log_rhs = rep.lipschitz * t0 + std::log(rep.sum_local);
  rep.rhs = std::exp(rep.log_rhs);
  rep.holds = rep.lhs == 0.0 || std::log(rep.lhs) <= rep.log_rhs;
  return rep;
}

BoundReport total_bound_check(const TimestepSchedule& schedule, const GaussianMixture& gm,
                              const Parameterization& p, int n_samples, std::uint64_t seed,
                              const BoundOptions& opts) {
  schedule.validate();
  const Samples x0 = sample_marginal(gm, p, schedule.times[0], n_samples, seed, derive_stream(seed, "total-bound"));
  return total_bound_check(schedule, static_cast<const Denoiser&>(gm), p, x0, opts);
}

}  // namespace pfode
