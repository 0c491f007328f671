#include "pfode/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

#include "pfode/io.hpp"
#include "pfode/metrics.hpp"
#include "pfode/parallel.hpp"
#include "pfode/rng.hpp"
#include "pfode/verify.hpp"

namespace fs = std::filesystem;

namespace pfode::cli {

namespace {

struct Loaded {
  ExperimentConfig config;
  Model model;
  fs::path out_dir;
};

Loaded load(const Options& opts) {
  if (opts.config.empty()) throw ConfigError("--config", "a config file is required");
  Loaded l;
  l.config = config_from_json(read_json(opts.config));
  if (opts.seed) l.config.seed = *opts.seed;
  l.model = load_model(l.config.mixture, fs::path(opts.config).parent_path());
  l.out_dir = opts.out.empty() ? fs::path(l.config.output_dir) : fs::path(opts.out);
  return l;
}

TimestepSchedule load_schedule(const Options& opts, const Parameterization& p) {
  if (opts.schedule.empty()) throw ConfigError("--schedule", "a schedule is required");
  if (opts.schedule.rfind("edm-grid:", 0) == 0) {
    const std::string n = opts.schedule.substr(9);
    int steps = 0;
    try {
      steps = std::stoi(n);
    } catch (const std::exception&) {
      throw ConfigError("--schedule", "bad grid size '" + n + "'");
    }
    return edm_reference_grid(p, steps);
  }
  ScheduleFile f = schedule_from_json(read_json(opts.schedule));
  if (!(f.parameterization == p))
    throw DomainError("schedule parameterization does not match the config (" +
                      std::string(to_string(f.parameterization.kind())) + " vs " +
                      std::string(to_string(p.kind())) + ")");
  return std::move(f.schedule);
}

Samples start_states(const Model& m, const Parameterization& p, double t, int n, std::uint64_t seed,
                     std::string_view purpose) {
  const std::uint64_t stream = derive_stream(seed, purpose);
  if (m.mixture) return sample_marginal(*m.mixture, p, t, n, seed, stream);
  return sample_prior(m.denoiser->dim(), p, t, n, seed, stream);
}

std::string fd(double v) { return format_double(v); }

}  // namespace

int cmd_schedule(const Options& opts, std::ostream& out) {
  const Loaded l = load(opts);
  const auto& c = l.config;
  if (c.samples < 1) throw ConfigError("samples", "schedule construction needs at least one sample");
  // A resampled grid needs a base with at least 2N steps.
  const BuildResult built =
      c.resample ? build_schedule_resolving(*l.model.denoiser, c.parameterization, c.eta, c.samples, c.seed,
                                            2 * c.resample->n)
                 : build_schedule(*l.model.denoiser, c.parameterization, c.eta, c.samples, c.seed);
  ScheduleFile f{c.parameterization, c.eta, c.resample, built.schedule};
  if (c.resample) {
    write_json(l.out_dir / "schedule_base.json", to_json(f));
    f.schedule = resample_n_steps(c.parameterization, built.schedule, {c.resample->q}, c.resample->n);
  }
  write_json(l.out_dir / "schedule.json", to_json(f));

  const auto& ps = built.schedule.per_step;
  double lo = ps.front().eta_used, hi = lo, sum = 0.0;
  for (const auto& m : ps) {
    lo = std::min(lo, m.eta_used);
    hi = std::max(hi, m.eta_used);
    sum += m.eta_used;
  }
  out << "adaptive steps: " << built.schedule.steps() << "\n";
  if (c.resample) out << "resampled steps: " << f.schedule.steps() << " (q = " << fd(c.resample->q) << ")\n";
  out << "build NFE: " << built.schedule.total_nfe << "\n";
  out << "eta used: min " << fd(lo) << " mean " << fd(sum / ps.size()) << " max " << fd(hi) << "\n";
  out << "wrote " << (l.out_dir / "schedule.json").string() << "\n";
  return kOk;
}

int cmd_sample(const Options& opts, std::ostream& out) {
  const Loaded l = load(opts);
  const auto& c = l.config;
  const Parameterization& p = c.parameterization;
  const Denoiser& den = *l.model.denoiser;
  const TimestepSchedule sched = load_schedule(opts, p);
  const int n = c.samples;
  const int dim = den.dim();

  const Samples x0 = sample_prior(dim, p, sched.times.front(), n, c.seed, derive_stream(c.seed, "sample"));
  std::vector<RunReport> runs(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
    runs[j] = mixed_sample(den, p, sched, c.policy, Vector(x0.col(static_cast<Eigen::Index>(j))));
  });

  std::ostringstream csv;
  csv << "traj,step,t,sigma,solver,kappa_hat,nfe";
  for (int d = 0; d < dim; ++d) csv << ",x" << d;
  csv << "\n";
  long total_nfe = 0;
  std::map<int, long> histogram;
  Samples endpoints(dim, n);
  for (int j = 0; j < n; ++j) {
    const RunReport& r = runs[j];
    total_nfe += r.total_nfe;
    endpoints.col(j) = r.final_state();
    for (std::size_t i = 0; i < r.trajectory.size(); ++i) {
      csv << j << "," << i << "," << fd(sched.times[i]) << "," << fd(sched.sigmas[i]) << ",";
      if (i < r.steps.size()) {
        const StepRecord& s = r.steps[i];
        ++histogram[s.nfe];
        csv << to_string(s.solver) << "," << (s.kappa_hat ? fd(*s.kappa_hat) : "") << "," << s.nfe;
      } else {
        csv << "end,,0";
      }
      for (int d = 0; d < dim; ++d) csv << "," << fd(r.trajectory[i][d]);
      csv << "\n";
    }
  }
  write_text(l.out_dir / "trajectories.csv", csv.str());

  Json hist = Json::object();
  for (const auto& [k, v] : histogram) hist[std::to_string(k)] = v;
  Json summary = {{"schema_version", kSchemaVersion},
                  {"samples", n},
                  {"steps", sched.steps()},
                  {"policy", to_json(c.policy)},
                  {"total_nfe", total_nfe},
                  {"mean_nfe_per_trajectory", n > 0 ? Json(static_cast<double>(total_nfe) / n) : Json(nullptr)},
                  {"per_step_nfe_histogram", hist}};
  if (n > 0) {
    const int m = dim == 1 ? n : std::min(n, kAssignmentCap);
    const Samples ref = reference_flow(den, p, Samples(x0.leftCols(m)), sched.times.front(), 0.0, 800);
    summary["endpoint_w2_vs_reference"] = w2(ref, Samples(endpoints.leftCols(m))).w2;
    summary["endpoint_w2_samples"] = m;
  } else {
    summary["endpoint_w2_vs_reference"] = nullptr;
    summary["endpoint_w2_samples"] = 0;
  }
  write_json(l.out_dir / "summary.json", summary);
  out << "trajectories: " << n << ", total NFE: " << total_nfe << "\n";
  if (n > 0) out << "endpoint W2 vs reference: " << fd(summary["endpoint_w2_vs_reference"].get<double>()) << "\n";
  return kOk;
}

int cmd_verify(const Options& opts, std::ostream& out) {
  if (opts.suite.empty()) throw ConfigError("--suite", "a suite name is required");
  const Suite suite = suite_from_string(opts.suite);
  const Loaded l = load(opts);
  const VerifyReport rep = run_suite(suite, l.model, l.config);
  const Json j = rep.to_json();
  write_json(l.out_dir / ("verify_" + opts.suite + ".json"), j);
  out << j.dump(2) << "\n";
  return rep.all_pass() ? kOk : kVerifyFailed;
}

int cmd_analyze(const Options& opts, std::ostream& out) {
  const Loaded l = load(opts);
  const auto& c = l.config;
  const Parameterization& p = c.parameterization;
  const Denoiser& den = *l.model.denoiser;
  std::ostringstream csv;
  fs::path file;

  if (opts.what == "curvature_vs_sigma") {
    const int n_grid = 64;
    std::vector<double> grid(n_grid);
    for (int i = 0; i < n_grid; ++i)
      grid[i] = std::exp(std::log(p.sigma_max()) + (std::log(p.sigma_min()) - std::log(p.sigma_max())) * i / (n_grid - 1));
    const Samples x0 = start_states(l.model, p, p.time_of_sigma(grid.front()), c.samples, c.seed, "sweep");
    const auto bins = curvature_sweep_from(den, p, grid, x0);
    csv << "sigma,kappa_mean,kappa_std\n";
    for (const auto& b : bins) csv << fd(b.sigma) << "," << fd(b.kappa_mean) << "," << fd(b.kappa_std) << "\n";
    file = l.out_dir / "curvature_vs_sigma.csv";
  } else if (opts.what == "eta_profile") {
    const TimestepSchedule sched = load_schedule(opts, p);
    const Samples x0 = start_states(l.model, p, sched.times.front(), c.samples, c.seed, "eta-profile");
    csv << "step,t,sigma,eta_t\n";
    for (const auto& r : eta_profile(sched, den, p, x0))
      csv << r.step << "," << fd(r.t) << "," << fd(r.sigma) << "," << fd(r.eta_t) << "\n";
    file = l.out_dir / "eta_profile.csv";
  } else if (opts.what == "convergence") {
    // Endpoint error of uniform Euler steps from sigma = 1 to sigma = 0.5
    // against the reference flow.
    const double t_a = p.time_of_sigma(1.0), t_b = p.time_of_sigma(0.5);
    const Samples x = start_states(l.model, p, t_a, std::max(1, std::min(c.samples, 64)), c.seed, "convergence");
    const Samples exact = reference_flow(den, p, x, t_a, t_b, 2000);
    csv << "dt,err\n";
    for (int steps : {5, 10, 25, 50, 100, 250, 500}) {
      const double dt = (t_a - t_b) / steps;
      Samples y = x;
      for (int k = 0; k < steps; ++k) y -= dt * velocity_batch(den, p, y, t_a - k * dt).v;
      csv << fd(dt) << "," << fd(std::sqrt((y - exact).colwise().squaredNorm().mean())) << "\n";
    }
    file = l.out_dir / "convergence.csv";
  } else {
    throw ConfigError("--what", "expected curvature_vs_sigma, eta_profile or convergence");
  }
  write_text(file, csv.str());
  out << "wrote " << file.string() << "\n";
  return kOk;
}

int cmd_presets(const Options& opts, std::ostream& out) {
  for (const auto& name : preset_names()) {
    out << name << "\n";
    if (!opts.out.empty()) {
      Json j = to_json(make_preset(name));
      j["name"] = name;
      write_json(fs::path(opts.out) / (name + ".json"), j);
    }
  }
  return kOk;
}

int guarded(int (*cmd)(const Options&, std::ostream&), const Options& opts, std::ostream& out, std::ostream& err) {
  try {
    return cmd(opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const SingularityError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNumerical;
  }
}

}  // namespace pfode::cli
