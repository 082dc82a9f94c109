#pragma once

// Explicit and implicit Monte Carlo particle schemes on frozen driver paths.
// Particle m sits at X_k = x0_m + Z_k - Lambda_k and is absorbed the first
// time X_k <= 0. All counting is done on integers; the loss is always
// alpha * count / n.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <vector>

#include "stefan/core_model.hpp"
#include "stefan/drivers.hpp"

namespace stefan::particle {

enum class Scheme { Explicit, Implicit };

struct ParticleConfig {
  double alpha;
  GridSpec grid;
  InitialLaw law;
  drivers::DriverSpec driver;
  std::size_t particles;
  Scheme scheme = Scheme::Implicit;
};

struct ParticleSolution {
  static constexpr std::size_t never = std::numeric_limits<std::size_t>::max();

  LossCurve loss;
  std::vector<std::size_t> absorbed_counts;    // per step, cumulative
  std::vector<std::size_t> fixed_point_iters;  // per step, >= 1
  std::vector<std::size_t> absorbed_step;      // per particle, or `never`
};

/// Advances the particle system one grid time at a time given the
/// unshifted positions x0 + Z_k of every particle.
class AbsorptionCounter {
 public:
  AbsorptionCounter(double alpha, std::size_t particles, Scheme scheme);

  /// Processes step k = steps_done(); returns the loss Lambda_k.
  double advance(std::span<const double> free_positions);

  std::size_t steps_done() const noexcept { return step_; }
  std::size_t absorbed() const noexcept { return dead_; }
  bool is_absorbed(std::size_t m) const noexcept;
  double loss_of(std::size_t count) const noexcept {
    return alpha_ * static_cast<double>(count) / static_cast<double>(n_);
  }

  ParticleSolution finish() &&;

 private:
  std::size_t implicit_count(std::span<const double> free_positions, std::size_t& iterations);

  double alpha_;
  std::size_t n_;
  Scheme scheme_;
  std::size_t step_ = 0;
  std::size_t dead_ = 0;
  std::vector<double> loss_;
  std::vector<std::size_t> counts_;
  std::vector<std::size_t> iters_;
  std::vector<std::size_t> absorbed_step_;
  std::vector<double> candidates_;
};

/// Initial positions x0_m = F^{-1}(U_m) from the particle's own stream.
std::vector<double> sample_initial_positions(const InitialLaw& law, std::size_t particles, std::uint64_t seed);

ParticleSolution solve_explicit(double alpha, const drivers::PathMatrix& paths, std::span<const double> x0);
ParticleSolution solve_implicit(double alpha, const drivers::PathMatrix& paths, std::span<const double> x0);

/// Samples x0 and paths from the config and runs the scheme. Markov drivers
/// are streamed step by step (memory O(n)); with substeps > 1 every grid step
/// is the sum of `substeps` finer increments, which reproduces the
/// restriction of the fine-grid paths exactly (nested meshes).
ParticleSolution solve(const ParticleConfig& config, std::size_t substeps = 1);

/// Several schemes on the same x0 and paths in one pass; config.scheme is
/// ignored.
std::vector<ParticleSolution> solve_schemes(const ParticleConfig& config, std::span<const Scheme> schemes,
                                            std::size_t substeps = 1);

/// Columns k, t_k, Lambda, L, fixed_point_iters.
void write_csv(const ParticleSolution& solution, const GridSpec& grid, std::ostream& out);

}  // namespace stefan::particle
