#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace schro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr const char* kSummarySchemaVersion = "1.0";

/// Config problem, reported as "<source>:<line>: <message>".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct Config {
  nlohmann::json doc;
  std::string text;    // original text, for line lookups
  std::string source;  // file name used in messages
};

Config parse_config(const std::string& text, const std::string& source);
Config load_config(const std::filesystem::path& path);

/// Line of the last key of `path` in the config text (1 when not found).
int locate(const Config& config, const std::vector<std::string>& path);

struct RunOutcome {
  int exit_code = kExitOk;
  nlohmann::json summary;
  std::string message;
  std::filesystem::path directory;
};

/// Runs one experiment and writes its artifacts. Validation problems throw
/// ConfigError; numerical failures come back with exit code 3.
RunOutcome run_experiment(const Config& config,
                          const std::optional<std::filesystem::path>& directory = std::nullopt);

int run_command(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);
int sweep_command(const std::filesystem::path& config_path, const std::string& axis,
                  const std::vector<std::string>& values, std::ostream& out, std::ostream& err);

/// "%.17g".
std::string format_double(double v);

}  // namespace schro::cli
