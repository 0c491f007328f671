#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "pfode/io.hpp"

namespace pfode {

enum class Suite { Curvature, StepBound, TotalBound, Proxy, Resample };

std::string_view to_string(Suite s);
Suite suite_from_string(std::string_view name);

struct Check {
  std::string name;
  double observed = 0.0;
  double bound = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::string suite;
  std::vector<Check> checks;

  bool all_pass() const;
  Json to_json() const;
};

VerifyReport run_suite(Suite suite, const Model& model, const ExperimentConfig& config);

// Largest relative error of the closed-form x'' (and eps_dot) against
// Richardson-extrapolated central differences of the reference flow, over
// `probes` points with sigma log-uniform in [0.01, 50].
struct FiniteDifferenceErrors {
  double xddot = 0.0;
  double eps_dot = 0.0;
  double specialised_vs_general = 0.0;
};
FiniteDifferenceErrors curvature_fd_errors(const Model& model, const Parameterization& p, int probes,
                                           std::uint64_t seed);

}  // namespace pfode
