#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace pfode::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kVerifyFailed = 2, kNumerical = 3 };

struct Options {
  std::string config;
  std::string schedule;  // file path, or "edm-grid:N" where a grid is accepted
  std::string suite;
  std::string what;
  std::string out;       // overrides the config's output_dir
  std::optional<std::uint64_t> seed;
};

int cmd_schedule(const Options& opts, std::ostream& out);
int cmd_sample(const Options& opts, std::ostream& out);
int cmd_verify(const Options& opts, std::ostream& out);
int cmd_analyze(const Options& opts, std::ostream& out);
int cmd_presets(const Options& opts, std::ostream& out);

// Runs a command, mapping library exceptions to exit codes and printing
// the message to `err`.
int guarded(int (*cmd)(const Options&, std::ostream&), const Options& opts, std::ostream& out, std::ostream& err);

}  // namespace pfode::cli
