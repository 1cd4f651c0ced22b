#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

namespace frackap::cli {

// Stable process exit codes.
enum ExitCode : int { kOk = 0, kChecksFailed = 1, kInputError = 2, kNumericalError = 3 };

struct RunConfig {
  std::string subcommand;
  std::string input;
  // Empty writes to the output stream passed to run().
  std::string output;
  std::string format = "csv";
  int verbosity = 0;
  int threads = 0;
  std::optional<std::uint64_t> seed;
};

// Each command reads its parsed JSON request and writes its table (csv or
// json) to out. Errors propagate as exceptions; run() maps them to exit codes.
int cmd_kernel(const nlohmann::json& request, const RunConfig& cfg, std::ostream& out);
int cmd_transform(const nlohmann::json& request, const RunConfig& cfg, std::ostream& out);
int cmd_capacity(const nlohmann::json& request, const RunConfig& cfg, std::ostream& out);
int cmd_verify(const nlohmann::json& request, const RunConfig& cfg, std::ostream& out);

// Full front end: flag parsing, input/output files, table cache, exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace frackap::cli
