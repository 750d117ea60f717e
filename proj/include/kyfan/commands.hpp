#pragma once

#include "kyfan/report.hpp"

#include <map>
#include <optional>
#include <string>

namespace kyfan::cli {

enum ExitCode : int { kStable = 0, kUnstable = 1, kInconclusive = 2, kInputError = 3 };

struct AnalyzeFlags {
  std::map<std::string, double> tolerances;  // --tol.<name> overrides
  std::optional<int> rotation_samples;
  std::optional<std::uint64_t> seed;
  bool probe = false;
  int d2_samples = 0;
  bool timings = false;
};

struct CommandResult {
  int exit_code = 0;
  io::ordered_json output;
  std::string csv;  // probe rows, when a probe ran
  std::string table;
};

// Applies the command-line overrides on top of the problem file.
io::Problem with_flags(io::Problem p, const AnalyzeFlags& flags);

CommandResult error_result(const std::string& kind, const std::string& message, const std::string& pointer = "");

CommandResult run_analyze(const io::Problem& problem, const AnalyzeFlags& flags);
CommandResult run_tilt(const io::Problem& problem, const AnalyzeFlags& flags);
CommandResult run_subgrad_check(const io::Problem& problem, const std::optional<MatrixXd>& gamma,
                                const AnalyzeFlags& flags);
CommandResult run_d2(const io::Problem& problem, const MatrixXd& g, const std::optional<MatrixXd>& gamma,
                     bool cross_check, const AnalyzeFlags& flags);

struct ValidateOptions {
  std::string suite = "all";  // formula | prox | quotient | all
  std::uint64_t seed = 1;
  int count = 50;
};

CommandResult run_oracle_validate(const ValidateOptions& opt);

}  // namespace kyfan::cli
