#pragma once

// Experiment runner behind the command-line tool: one JSON document
// describes a run, the runner solves every refinement level and writes
// level_<N>.csv, summary.csv, plot files and meta.json.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stefan/core_model.hpp"
#include "stefan/donsker.hpp"
#include "stefan/drivers.hpp"
#include "stefan/particle.hpp"

namespace stefan::runner {

enum class Command { SolveDonsker, SolveParticle, Convergence, JumpStudy, IterationTable };
enum class SolverKind { Donsker, Particle };

std::optional<Command> parse_command(std::string_view name);
std::string_view command_name(Command c);

inline constexpr std::size_t kDefaultLevels[] = {100, 200, 400, 800, 1600, 3200};
inline constexpr std::size_t kDefaultParticlesPerStep = 2000;

struct RunConfig {
  Command command = Command::SolveDonsker;
  SolverKind solver = SolverKind::Donsker;
  std::vector<double> alphas;
  double horizon = 0.0;
  InitialLaw law = InitialLaw::uniform(0.0, 1.0);
  bool implicit = true;
  InitMode init_mode = InitMode::CellMass;
  bool perturb_initial = false;
  drivers::DriverSpec driver;
  std::vector<std::size_t> levels;
  std::optional<std::size_t> particles;  // fixed count; otherwise per-step count times N
  std::size_t particles_per_step = kDefaultParticlesPerStep;
  bool nested = true;
  std::size_t fit_drop_threshold = 4;
  std::size_t threads = 1;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = ".";

  double alpha() const { return alphas.front(); }
  std::size_t particle_count(std::size_t steps) const {
    return particles ? *particles : particles_per_step * steps;
  }
};

/// Parses the JSON document for `command`. Throws ConfigInvalid naming the
/// offending field.
RunConfig parse_config(Command command, std::string_view json_text);

/// Writes all artifacts into config.out_dir. `config_text` is hashed into
/// meta.json. Throws OutputUnwritable when the directory cannot be written.
void run(const RunConfig& config, std::string_view config_text);

/// Exit status convention of the command-line tool.
enum ExitCode : int { kOk = 0, kInvalid = 2, kSolverError = 3 };

/// 64-bit FNV-1a hash, printed as 16 hex digits.
std::string fnv1a_hex(std::string_view text);

}  // namespace stefan::runner
