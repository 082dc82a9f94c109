#pragma once

// Driver processes Z sampled on the time grid: Brownian motion, fractional
// Brownian motion and scaled i.i.d. random walks.

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

#include "stefan/core_model.hpp"
#include "stefan/rng.hpp"

namespace stefan::drivers {

enum class IncrementLaw { Rademacher, StandardNormal };

struct Brownian {};
struct FractionalBrownian {
  double hurst;
};
struct ScaledWalk {
  IncrementLaw increments;
};

struct DriverSpec {
  using Kind = std::variant<Brownian, FractionalBrownian, ScaledWalk>;

  Kind kind = Brownian{};
  std::uint64_t seed = 0;

  static DriverSpec brownian(std::uint64_t seed) { return {Brownian{}, seed}; }
  static DriverSpec fractional(double hurst, std::uint64_t seed);
  static DriverSpec walk(IncrementLaw law, std::uint64_t seed) { return {ScaledWalk{law}, seed}; }

  /// Markov drivers can be advanced one step at a time without storing paths.
  bool is_markov() const noexcept { return !std::holds_alternative<FractionalBrownian>(kind); }
};

/// n driver paths on the grid, row-major: values[m * (N + 1) + k] = Z_{t_k}
/// of particle m, with Z_0 = 0.
class PathMatrix {
 public:
  PathMatrix(std::size_t particles, std::size_t steps);
  PathMatrix(std::size_t particles, std::size_t steps, std::vector<double> values);

  std::size_t particles() const noexcept { return particles_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t columns() const noexcept { return steps_ + 1; }

  double operator()(std::size_t m, std::size_t k) const { return values_[m * columns() + k]; }
  double& operator()(std::size_t m, std::size_t k) { return values_[m * columns() + k]; }
  std::span<const double> row(std::size_t m) const { return {values_.data() + m * columns(), columns()}; }
  std::span<double> row(std::size_t m) { return {values_.data() + m * columns(), columns()}; }
  const std::vector<double>& data() const noexcept { return values_; }

  /// Paths seen only at every (steps / coarse_steps)-th grid time.
  PathMatrix restrict_to(std::size_t coarse_steps) const;

  friend bool operator==(const PathMatrix&, const PathMatrix&) = default;

 private:
  std::size_t particles_;
  std::size_t steps_;
  std::vector<double> values_;
};

/// Step-by-step generator for Markov drivers. A coarse step of a grid with
/// `substeps` fine steps per coarse step adds the fine increments one at a
/// time, so the result equals the restriction of the fine-grid path bit for
/// bit.
class IncrementSource {
 public:
  IncrementSource(const DriverSpec& spec, double coarse_step, std::size_t substeps = 1);

  /// Z of particle m after coarse step k (k >= 1) given Z after step k - 1.
  double advance(std::uint64_t m, std::size_t k, double z) const;

 private:
  double fine_increment(const rng::CounterStream& s, std::uint64_t j) const;

  DriverSpec spec_;
  std::size_t substeps_;
  double fine_scale_;
};

/// Covariance 0.5 (s^{2H} + t^{2H} - |t - s|^{2H}) on the given times.
Eigen::MatrixXd fbm_covariance(double hurst, std::span<const double> times);

/// n independent paths; deterministic in (seed, particle, step).
/// Throws CovarianceNotPD when the fBm covariance cannot be factorized.
PathMatrix sample_paths(const DriverSpec& spec, const GridSpec& grid, std::size_t particles);

/// Binary dump: little-endian u64 n, u64 N, then n * (N + 1) f64 row-major.
void write_paths(const PathMatrix& paths, std::ostream& out);
PathMatrix read_paths(std::istream& in);
void save_paths(const PathMatrix& paths, const std::filesystem::path& file);
PathMatrix load_paths(const std::filesystem::path& file);

}  // namespace stefan::drivers
