#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "pfode/oracle.hpp"
#include "pfode/parameterization.hpp"
#include "pfode/schedule.hpp"
#include "pfode/solvers.hpp"
#include "pfode/wscheduler.hpp"

namespace pfode {

using Json = nlohmann::json;

constexpr int kSchemaVersion = 1;

Json to_json(const GaussianMixture& gm);
GaussianMixture mixture_from_json(const Json& j, const std::string& path = "");

Json to_json(const Parameterization& p);
Parameterization parameterization_from_json(const Json& j, const std::string& path = "parameterization");

Json to_json(const EtaSchedule& eta);
EtaSchedule eta_from_json(const Json& j, const std::string& path = "eta");

Json to_json(const SolverPolicy& policy);
SolverPolicy policy_from_json(const Json& j, const std::string& path = "policy");

struct ResampleSpec {
  double q = 0.25;
  int n = 18;
  bool operator==(const ResampleSpec&) const = default;
};

// Schedule interchange file.
struct ScheduleFile {
  Parameterization parameterization;
  EtaSchedule eta;
  std::optional<ResampleSpec> resample;
  TimestepSchedule schedule;
};

Json to_json(const ScheduleFile& f);
ScheduleFile schedule_from_json(const Json& j);

struct ExperimentConfig {
  std::string mixture = "preset:bimodal-1d";  // file path, "preset:NAME" or "constant:v1,v2,..."
  Parameterization parameterization;
  SolverPolicy policy;
  EtaSchedule eta;
  std::optional<ResampleSpec> resample;
  int samples = 256;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  bool operator==(const ExperimentConfig&) const = default;
};

Json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const Json& j);

Json read_json(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json(const std::filesystem::path& path, const Json& j);
void write_text(const std::filesystem::path& path, const std::string& text);

// What a config's mixture string resolves to. `mixture` is set for
// Gaussian-mixture sources, which are the only ones with exact marginals.
struct Model {
  std::unique_ptr<Denoiser> denoiser;
  const GaussianMixture* mixture = nullptr;
};

// Relative file paths are resolved against `base_dir`.
Model load_model(const std::string& source, const std::filesystem::path& base_dir = {});

// Shortest text that reads back to the same double.
std::string format_double(double v);

}  // namespace pfode
