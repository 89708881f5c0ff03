#pragma once

// Command implementations behind the `qheun` executable. Each command
// returns its textual output, the files it wants written, and an exit code,
// so that it can be driven from tests without a process boundary.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qheun/roots.hpp"

namespace qheun {

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kExcluded = 2;
inline constexpr int kVerifyFailed = 3;
}  // namespace exit_code

struct RunConfig {
  std::string params_path;
  /// Parameter file contents; used instead of params_path when set.
  std::optional<std::string> params_text;
  std::vector<std::string> q;
  mpfr_prec_t bits = Real::kDefaultBits;
  double tol_exponent = 0.05;
  double tol_prefactor = 0.01;
  std::string out_dir;

  // sweep
  std::string axis;
  std::string from, to, step;
  std::string compensate;
};

struct CommandResult {
  int exit_code = exit_code::kOk;
  std::string out;
  std::string err;
  /// File name (relative to the output directory) to contents.
  std::map<std::string, std::string> files;
};

/// `key = value` lines; blank lines and `#` comments are ignored. Every key
/// of RawParams must appear exactly once.
RawParams parse_params(std::string_view text);

/// QHEUN_BITS when set to a positive integer, else 512.
mpfr_prec_t default_bits();

/// 1/1000, 1/10000, 1/1000000: slopes come from the two smallest, prefactors
/// and residuals from the smallest.
std::vector<Rational> default_q_values();

/// Relative residual accepted by cmd_verify.
inline constexpr double kResidualThreshold = 1e-30;
/// Precision ceiling for the residual check.
inline constexpr mpfr_prec_t kMaxResidualBits = 4096;

struct VerifiedRoot {
  Real value;
  double est_exponent = 0;
  std::optional<PredictedRoot> prediction;
  MatchEntry match;
  Real residual;
};

struct Verification {
  CaseTag tag;
  std::vector<PredictedRoot> predictions;
  Rational q_small;
  Rational q_large;
  std::vector<VerifiedRoot> roots;
  bool exponents_ok = false;
  bool residuals_ok = false;
  bool pass() const { return exponents_ok && residuals_ok; }
};

/// predict -> roots at the two smallest q -> slopes -> match ->
/// residual at the smallest q. Requires classified parameters and at least
/// two q values.
Verification run_verification(const HeunParams& p, const std::vector<Rational>& qs, mpfr_prec_t bits,
                              double tol_exponent, double tol_prefactor);

std::string verification_csv(const Verification& v);

CommandResult cmd_analyze(const RunConfig& cfg);
CommandResult cmd_predict(const RunConfig& cfg);
CommandResult cmd_roots(const RunConfig& cfg);
CommandResult cmd_verify(const RunConfig& cfg);
CommandResult cmd_sweep(const RunConfig& cfg);
CommandResult cmd_selftest(const RunConfig& cfg);

/// Dispatches on the subcommand name.
CommandResult run_command(std::string_view name, const RunConfig& cfg);

/// Writes result files under `dir` (created if missing).
void write_files(const CommandResult& r, const std::string& dir);

}  // namespace qheun
