#pragma once

#include <vector>

#include "pfode/parameterization.hpp"

namespace pfode {

struct StepMeta {
  double eta_used = 0.0;     // committed local W2 budget for the step
  double s_hat = 0.0;        // trial-step velocity variation estimate
  int linesearch_iters = 0;
};

// Strictly decreasing time grid t_0 > ... > t_N = 0 with per-step metadata.
// per_step is either empty (a fixed grid) or has one entry per step.
struct TimestepSchedule {
  std::vector<double> times;
  std::vector<double> sigmas;
  std::vector<StepMeta> per_step;
  long total_nfe = 0;  // oracle calls spent constructing the grid

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  double step_size(std::size_t i) const { return times[i] - times[i + 1]; }

  // Throws DomainError unless times/sigmas agree in length, decrease
  // strictly and end at exactly zero.
  void validate() const;

  // Grid with sigmas filled in from p.
  static TimestepSchedule from_times(const Parameterization& p, std::vector<double> times);
  static TimestepSchedule from_sigmas(const Parameterization& p, std::vector<double> sigmas);
};

// eta(sigma) = (eta_max - eta_min) (sigma / sigma_max)^p + eta_min
struct EtaSchedule {
  double eta_min = 0.02;
  double eta_max = 0.20;
  double p = 1.0;

  static EtaSchedule constant(double eta) { return {eta, eta, 0.0}; }

  void validate() const;
  double operator()(double sigma, double sigma_max) const;

  bool operator==(const EtaSchedule&) const = default;
};

}  // namespace pfode
