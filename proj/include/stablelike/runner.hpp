#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace stablelike {

struct ExperimentConfig {
  std::string subcommand;
  nlohmann::json params = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out_dir;
  std::map<std::string, double> tolerances;  // overrides, validated per experiment
};

struct CliOverrides {
  std::optional<std::string> config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<std::string> out;
};

// Exit codes.
constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

// Config file keys: subcommand, seed, jobs, out, tolerances, params. Command
// line values win over the file; STABLELIKE_OUT is the only environment input.
ExperimentConfig load_config(const std::string& subcommand, const CliOverrides& cli);

struct RunResult {
  int exit_code = kExitConfig;
  std::string status;  // pass, fail, error, config-error
  std::string message;
  std::string out_dir;
  std::vector<std::string> artifacts;  // file names relative to out_dir, manifest last
  nlohmann::json report;
};

RunResult run(const ExperimentConfig& cfg);
// load_config + run; configuration problems give exit 2 and write nothing.
RunResult run_from_cli(const std::string& subcommand, const CliOverrides& cli);

const std::vector<std::string>& subcommands();
bool is_stochastic(const std::string& subcommand);

// Shortest round-trip decimal form, independent of locale.
std::string format_number(double x);
std::string csv_escape(const std::string& field);

// RFC 4180: CRLF line ends, fields quoted only when needed.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add(std::vector<std::string> row);
  std::string str() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string sha256_hex(const std::string& bytes);

}  // namespace stablelike
