#include "pfode/verify.hpp"

#include <algorithm>
#include <cmath>

#include "pfode/dynamics.hpp"
#include "pfode/metrics.hpp"
#include "pfode/parallel.hpp"
#include "pfode/rng.hpp"

namespace pfode {

std::string_view to_string(Suite s) {
  switch (s) {
    case Suite::Curvature: return "curvature";
    case Suite::StepBound: return "stepbound";
    case Suite::TotalBound: return "totalbound";
    case Suite::Proxy: return "proxy";
    case Suite::Resample: return "resample";
  }
  return "unknown";
}

Suite suite_from_string(std::string_view name) {
  for (Suite s : {Suite::Curvature, Suite::StepBound, Suite::TotalBound, Suite::Proxy, Suite::Resample})
    if (to_string(s) == name) return s;
  throw DomainError("unknown suite '" + std::string(name) +
                    "' (expected curvature, stepbound, totalbound, proxy or resample)");
}

bool VerifyReport::all_pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

Json VerifyReport::to_json() const {
  Json arr = Json::array();
  for (const auto& c : checks)
    arr.push_back({{"name", c.name}, {"observed", c.observed}, {"bound", c.bound}, {"pass", c.pass}});
  return {{"schema_version", kSchemaVersion}, {"suite", suite}, {"pass", all_pass()}, {"checks", arr}};
}

namespace {

Samples start_states(const Model& model, const Parameterization& p, double t, int n, std::uint64_t seed,
                     std::string_view purpose) {
  const std::uint64_t stream = derive_stream(seed, purpose);
  if (model.mixture) return sample_marginal(*model.mixture, p, t, n, seed, stream);
  return sample_prior(model.denoiser->dim(), p, t, n, seed, stream);
}

const GaussianMixture& need_mixture(const Model& model, const char* suite) {
  if (!model.mixture) throw DomainError(std::string(suite) + " suite needs a Gaussian-mixture source");
  return *model.mixture;
}

double rel_err(const Vector& approx, const Vector& exact) {
  const double scale = exact.norm();
  return scale > 0.0 ? (approx - exact).norm() / scale : (approx - exact).norm();
}

std::vector<Parameterization> all_kinds(const Parameterization& like) {
  std::vector<Parameterization> out;
  for (Kind k : {Kind::EDM, Kind::VP, Kind::VE})
    out.emplace_back(k, like.sigma_min(), like.sigma_max(), like.beta_d(), like.beta_min());
  return out;
}

int flow_substeps(const Parameterization& p, double t_from, double t_to) {
  const double lo = t_to > 0.0 ? p.sigma(t_to) : kFlowSigmaEnd;
  const double span = std::log(p.sigma(t_from)) - std::log(lo);
  return std::max(8, static_cast<int>(std::ceil(span / 0.1)));
}

void add(VerifyReport& r, std::string name, double observed, double bound, bool pass) {
  r.checks.push_back({std::move(name), observed, bound, pass});
}

}  // namespace

FiniteDifferenceErrors curvature_fd_errors(const Model& model, const Parameterization& p, int probes,
                                           std::uint64_t seed) {
  const Denoiser& den = *model.denoiser;
  Philox rng(seed, derive_stream(seed, "fd-sigma"));
  std::vector<double> times(probes);
  for (auto& t : times)
    t = p.time_of_sigma(std::exp(std::log(0.01) + rng.uniform() * (std::log(50.0) - std::log(0.01))));

  std::vector<FiniteDifferenceErrors> per(probes);
  parallel_for(static_cast<std::size_t>(probes), [&](std::size_t i) {
    const double t = times[i];
    const Vector x = start_states(model, p, t, 1, seed + i, "fd-x").col(0);
    const double h = 0.01 * p.sigma(t) / p.sigma_derivatives(t).first;
    const int sub = 6;
    const Vector m2 = reference_flow(den, p, x, t, t - 2 * h, sub), m1 = reference_flow(den, p, x, t, t - h, sub);
    const Vector p1 = reference_flow(den, p, x, t, t + h, sub), p2 = reference_flow(den, p, x, t, t + 2 * h, sub);
    const Vector d_h = (p1 - 2.0 * x + m1) / (h * h);
    const Vector d_2h = (p2 - 2.0 * x + m2) / (4.0 * h * h);
    auto eps = [&](const Vector& y, double s) { return velocity(den, p, y, s).eps; };
    const Vector e_h = (eps(p1, t + h) - eps(m1, t - h)) / (2.0 * h);
    const Vector e_2h = (eps(p2, t + 2 * h) - eps(m2, t - 2 * h)) / (4.0 * h);
    const CurvatureEval special = curvature(den, p, x, t);
    const CurvatureEval gen = curvature_general(den, p, x, t);
    per[i].xddot = rel_err(special.xddot, (4.0 * d_h - d_2h) / 3.0);
    per[i].eps_dot = rel_err(special.eps_dot, (4.0 * e_h - e_2h) / 3.0);
    per[i].specialised_vs_general = rel_err(special.xddot, gen.xddot);
  });
  FiniteDifferenceErrors worst;
  for (const auto& e : per) {
    worst.xddot = std::max(worst.xddot, e.xddot);
    worst.eps_dot = std::max(worst.eps_dot, e.eps_dot);
    worst.specialised_vs_general = std::max(worst.specialised_vs_general, e.specialised_vs_general);
  }
  return worst;
}

VerifyReport run_suite(Suite suite, const Model& model, const ExperimentConfig& config) {
  VerifyReport r;
  r.suite = std::string(to_string(suite));
  const Parameterization& p = config.parameterization;
  const Denoiser& den = *model.denoiser;
  const std::uint64_t seed = config.seed;

  switch (suite) {
    case Suite::Curvature: {
      for (const auto& q : all_kinds(p)) {
        const std::string k(to_string(q.kind()));
        const auto e = curvature_fd_errors(model, q, 100, seed);
        add(r, "xddot_fd_rel_err_" + k, e.xddot, 1e-3, e.xddot < 1e-3);
        add(r, "eps_dot_fd_rel_err_" + k, e.eps_dot, 1e-4, e.eps_dot < 1e-4);
        add(r, "specialised_vs_general_" + k, e.specialised_vs_general, 1e-10, e.specialised_vs_general < 1e-10);
      }
      break;
    }
    case Suite::StepBound: {
      const GaussianMixture& gm = need_mixture(model, "stepbound");
      const int build_n = std::max(config.samples, 1);
      const TimestepSchedule sched = build_schedule(gm, p, config.eta, build_n, seed).schedule;
      const int n = gm.dim() == 1 ? 8192 : 1024;
      std::vector<double> ratio(sched.steps());
      parallel_for(sched.steps(), [&](std::size_t i) {
        const double t = sched.times[i], t_next = sched.times[i + 1];
        const Samples x = sample_marginal(gm, p, t, n, seed, derive_stream(seed + i, "stepbound"));
        const Samples ref = reference_flow(gm, p, x, t, t_next, flow_substeps(p, t, t_next));
        const Samples eul = x - sched.step_size(i) * velocity_batch(gm, p, x, t).v;
        ratio[i] = w2(ref, eul).w2 / sched.per_step[i].eta_used;
      });
      const double within =
          static_cast<double>(std::count_if(ratio.begin(), ratio.end(), [](double v) { return v <= 1.5; })) /
          static_cast<double>(ratio.size());
      add(r, "fraction_steps_w2_within_1.5_eta", within, 0.95, within >= 0.95);
      add(r, "max_w2_over_eta", *std::max_element(ratio.begin(), ratio.end()), 1.5, true);
      double worst = 0.0;
      for (std::size_t i = 0; i < sched.steps(); ++i) {
        const double dt = sched.step_size(i);
        const auto& m = sched.per_step[i];
        worst = std::max(worst, dt * dt * m.s_hat - 2.0 * m.eta_used);
      }
      add(r, "max_committed_excess_dt2_s_minus_2eta", worst, 1e-12, worst <= 1e-12);
      break;
    }
    case Suite::TotalBound: {
      const GaussianMixture& gm = need_mixture(model, "totalbound");
      for (const auto& q : all_kinds(p)) {
        const std::string k(to_string(q.kind()));
        const TimestepSchedule sched = build_schedule(gm, q, config.eta, std::max(config.samples, 1), seed).schedule;
        const BoundReport b = total_bound_check(sched, gm, q, 512, seed);
        add(r, "log_lhs_minus_log_rhs_" + k, std::log(b.lhs) - b.log_rhs, 0.0, b.holds);
      }
      break;
    }
    case Suite::Proxy: {
      const TimestepSchedule grid = edm_reference_grid(p, 18);
      const Samples x0 = sample_prior(den.dim(), p, grid.times[0], 16, seed, derive_stream(seed, "proxy"));
      long mismatched = 0, checked = 0;
      for (Eigen::Index j = 0; j < x0.cols(); ++j) {
        const RunReport run = mixed_sample(den, p, grid, SolverPolicy::euler(), Vector(x0.col(j)));
        for (std::size_t i = 1; i < run.steps.size(); ++i) {
          const double fwd =
              curvature_measures(run.velocities[i - 1], run.velocities[i], grid.step_size(i - 1)).kappa_rel;
          ++checked;
          if (!run.steps[i].kappa_hat || *run.steps[i].kappa_hat != fwd) ++mismatched;
        }
      }
      add(r, "kappa_hat_vs_delayed_kappa_rel_mismatches", static_cast<double>(mismatched), 0.0, mismatched == 0);
      add(r, "interior_steps_checked", static_cast<double>(checked), 1.0, checked >= 1);
      break;
    }
    case Suite::Resample: {
      std::vector<int> ns = config.resample ? std::vector<int>{config.resample->n} : std::vector<int>{10, 18, 40};
      std::vector<double> qs = config.resample ? std::vector<double>{config.resample->q} : std::vector<double>{0.0, 0.25};
      const int need = 2 * *std::max_element(ns.begin(), ns.end());
      const TimestepSchedule base =
          build_schedule_resolving(den, p, config.eta, std::max(config.samples, 1), seed, need).schedule;
      for (int n : ns) {
        if (static_cast<std::size_t>(n) > base.steps()) {
          add(r, "resample_N" + std::to_string(n) + "_fits_base", static_cast<double>(base.steps()), n, false);
          continue;
        }
        for (double q : qs) {
          const TimestepSchedule out = resample_n_steps(p, base, {q}, n);
          const std::string tag = "N" + std::to_string(n) + "_q" + format_double(q);
          const double cv = coefficient_of_variation(geodesic_costs(p, base, {q}, out.times));
          add(r, "cv_sqrt_cost_" + tag, cv, 0.05, cv < 0.05);
          const bool shape = static_cast<int>(out.times.size()) == n + 1 && out.times.front() == base.times.front() &&
                             out.times.back() == 0.0;
          add(r, "length_and_endpoints_" + tag, shape ? 1.0 : 0.0, 1.0, shape);
        }
      }
      break;
    }
  }
  return r;
}

}  // namespace pfode
