#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "krylovflow/analysis.hpp"
#include "krylovflow/bilanczos.hpp"
#include "krylovflow/continuum.hpp"
#include "krylovflow/error.hpp"
#include "krylovflow/krylov_chain.hpp"
#include "krylovflow/spin_algebra.hpp"

namespace krylovflow {

inline constexpr int kConfigVersion = 1;
/// Oracle runs integrate the full d^2 problem; capped well below the dense limit.
inline constexpr int kMaxOracleSites = 4;

enum class SeedKind { kUniform, kCustom };

/// Everything a run needs. Parsed from a JSON document; see README for the
/// key list. Omitted keys take the defaults below.
struct RunConfig {
  ModelSpec model = ModelSpec::with_default_placement(5, -1.05, 0.5, 0.01, 0.01);
  SeedKind seed_kind = SeedKind::kUniform;
  std::string seed_file;  // CSV `row,col,re,im`, 0-based, when kCustom

  BiLanczosConfig bilanczos;
  int structure_coefficients = 50;
  double structure_tol = 1e-6;

  double t_max = 10.0;
  int n_samples = 400;
  StepControl step;

  double bound_tol = 1e-6;
  double mt_tol = 1e-4;
  double mt_floor = 1e-6;

  double oracle_t_compare = 5.0;

  FilterConfig filter;
  std::string filter_input;  // coefficients CSV; empty means this run's own

  std::vector<ContinuumSpec> continuum_cases;
  double continuum_t_max = 3.0;
  int continuum_samples = 301;
  double continuum_rel_tol = 1e-12;

  double saturation_alpha0 = 1.0;
  double saturation_gamma0 = 1.0;
  int saturation_krylov_dim = 400;
  double saturation_t_max = 10.0;
  int saturation_samples = 400;

  std::string output_dir = "krylovflow_out";

  /// Throws Error(kInvalidArgument) on any out-of-range field.
  void validate() const;
  /// Canonical JSON text (sorted keys, every field explicit).
  std::string to_json_text() const;
};

/// Relative paths inside the document resolve against `base_dir`.
RunConfig parse_config(const std::string& json_text, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

enum class Command { kLanczos, kEvolve, kBound, kOracle, kContinuum, kSaturation, kFilter, kFull };

std::optional<Command> parse_command(const std::string& name);
const char* to_string(Command c) noexcept;
const std::vector<std::string>& command_names();

struct RunOptions {
  std::optional<std::string> out_dir;  // overrides RunConfig::output_dir
  bool quiet = false;
  std::ostream* log = nullptr;  // progress lines; null means std::clog
};

struct RunResult {
  std::string output_dir;
  std::vector<std::string> artifacts;  // file names relative to output_dir
};

/// Runs one subcommand. On error every file written by this call is removed
/// and `error.json` is left in the output directory, then the Error is
/// rethrown.
RunResult run_pipeline(const RunConfig& cfg, Command command, const RunOptions& options = {});

/// 1 usage/config, 2 numerical, 3 invariant.
int exit_code_for(ErrorKind kind) noexcept;

/// One-line machine-readable error document.
std::string error_json(ErrorKind kind, const std::string& message, const std::string& command);

}  // namespace krylovflow
