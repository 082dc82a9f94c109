#include "stefan/drivers.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "stefan/error.hpp"

namespace stefan::drivers {

static_assert(std::endian::native == std::endian::little, "binary path dumps assume a little-endian host");

DriverSpec DriverSpec::fractional(double hurst, std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw std::invalid_argument("fractional driver: hurst must lie in (0, 1)");
  return {FractionalBrownian{hurst}, seed};
}

// ---------------------------------------------------------------------------
// PathMatrix

PathMatrix::PathMatrix(std::size_t particles, std::size_t steps)
    : particles_(particles), steps_(steps), values_(particles * (steps + 1), 0.0) {}

PathMatrix::PathMatrix(std::size_t particles, std::size_t steps, std::vector<double> values)
    : particles_(particles), steps_(steps), values_(std::move(values)) {
  if (values_.size() != particles_ * (steps_ + 1))
    throw std::invalid_argument("path matrix: value count does not match n * (N + 1)");
  for (std::size_t m = 0; m < particles_; ++m) {
    if ((*this)(m, 0) != 0.0) throw std::invalid_argument("path matrix: paths must start at 0");
  }
}

PathMatrix PathMatrix::restrict_to(std::size_t coarse_steps) const {
  if (coarse_steps == 0 || steps_ % coarse_steps != 0)
    throw std::invalid_argument("restrict_to: coarse step count must divide the fine one");
  const std::size_t stride = steps_ / coarse_steps;
  PathMatrix out(particles_, coarse_steps);
  for (std::size_t m = 0; m < particles_; ++m) {
    for (std::size_t k = 0; k <= coarse_steps; ++k) out(m, k) = (*this)(m, k * stride);
  }
  return out;
}

// ---------------------------------------------------------------------------
// IncrementSource

IncrementSource::IncrementSource(const DriverSpec& spec, double coarse_step, std::size_t substeps)
    : spec_(spec), substeps_(substeps) {
  if (!spec.is_markov()) throw std::invalid_argument("increment source: fractional Brownian motion is not Markov");
  if (substeps == 0) throw std::invalid_argument("increment source: substeps must be positive");
  if (!(coarse_step > 0.0)) throw std::invalid_argument("increment source: step must be > 0");
  fine_scale_ = std::sqrt(coarse_step / static_cast<double>(substeps));
}

double IncrementSource::fine_increment(const rng::CounterStream& s, std::uint64_t j) const {
  if (const auto* walk = std::get_if<ScaledWalk>(&spec_.kind); walk && walk->increments == IncrementLaw::Rademacher)
    return fine_scale_ * static_cast<double>(s.rademacher(j));
  return fine_scale_ * s.normal(j);
}

double IncrementSource::advance(std::uint64_t m, std::size_t k, double z) const {
  const rng::CounterStream stream(spec_.seed, m);
  const std::uint64_t first = static_cast<std::uint64_t>(k - 1) * substeps_;
  const std::uint64_t end = first + substeps_;
  std::uint64_t j = first;
  const auto* walk = std::get_if<ScaledWalk>(&spec_.kind);
  if (!walk || walk->increments == IncrementLaw::StandardNormal) {
    // Same draws as fine_increment, two per Philox call.
    if (j & 1u) z += fine_increment(stream, j++);
    for (; j + 1 < end; j += 2) {
      const auto u = stream.uniform_pair(j >> 1);
      z += fine_scale_ * rng::inverse_normal_cdf(u[0]);
      z += fine_scale_ * rng::inverse_normal_cdf(u[1]);
    }
  }
  for (; j < end; ++j) z += fine_increment(stream, j);
  return z;
}

// ---------------------------------------------------------------------------
// Sampling

Eigen::MatrixXd fbm_covariance(double hurst, std::span<const double> times) {
  const auto n = static_cast<Eigen::Index>(times.size());
  const double two_h = 2.0 * hurst;
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      const double s = times[static_cast<std::size_t>(i)];
      const double t = times[static_cast<std::size_t>(j)];
      const double c = 0.5 * (std::pow(s, two_h) + std::pow(t, two_h) - std::pow(std::abs(t - s), two_h));
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }
  return cov;
}

namespace {

PathMatrix sample_fractional(double hurst, std::uint64_t seed, const GridSpec& grid, std::size_t particles) {
  const std::size_t steps = grid.steps();
  std::vector<double> times(steps);
  for (std::size_t k = 0; k < steps; ++k) times[k] = grid.time(k + 1);
  const Eigen::LLT<Eigen::MatrixXd> llt(fbm_covariance(hurst, times));
  if (llt.info() != Eigen::Success)
    throw CovarianceNotPD("fBm covariance is not numerically positive definite (H too extreme for N)");
  const Eigen::MatrixXd lower = llt.matrixL();

  PathMatrix out(particles, steps);
  Eigen::VectorXd z(static_cast<Eigen::Index>(steps));
  for (std::size_t m = 0; m < particles; ++m) {
    const rng::CounterStream stream(seed, m);
    for (std::size_t j = 0; j < steps; ++j) z[static_cast<Eigen::Index>(j)] = stream.normal(j);
    const Eigen::VectorXd path = lower.triangularView<Eigen::Lower>() * z;
    for (std::size_t k = 0; k < steps; ++k) out(m, k + 1) = path[static_cast<Eigen::Index>(k)];
  }
  return out;
}

}  // namespace

PathMatrix sample_paths(const DriverSpec& spec, const GridSpec& grid, std::size_t particles) {
  if (particles == 0) throw std::invalid_argument("sample_paths: need at least one particle");
  if (const auto* fbm = std::get_if<FractionalBrownian>(&spec.kind)) {
    if (!(fbm->hurst > 0.0 && fbm->hurst < 1.0)) throw std::invalid_argument("sample_paths: hurst must lie in (0, 1)");
    return sample_fractional(fbm->hurst, spec.seed, grid, particles);
  }
  const IncrementSource source(spec, grid.step());
  PathMatrix out(particles, grid.steps());
  for (std::size_t m = 0; m < particles; ++m) {
    double z = 0.0;
    for (std::size_t k = 1; k <= grid.steps(); ++k) {
      z = source.advance(m, k, z);
      out(m, k) = z;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary dump

void write_paths(const PathMatrix& paths, std::ostream& out) {
  const std::uint64_t header[2] = {paths.particles(), paths.steps()};
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(paths.data().data()),
            static_cast<std::streamsize>(paths.data().size() * sizeof(double)));
  if (!out) throw OutputUnwritable("failed to write path matrix");
}

PathMatrix read_paths(std::istream& in) {
  std::uint64_t header[2] = {0, 0};
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in) throw std::runtime_error("path dump: truncated header");
  const std::uint64_t count = header[0] * (header[1] + 1);
  std::vector<double> values(count);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(count * sizeof(double)));
  if (!in) throw std::runtime_error("path dump: truncated payload");
  return PathMatrix(header[0], header[1], std::move(values));
}

void save_paths(const PathMatrix& paths, const std::filesystem::path& file) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw OutputUnwritable("cannot open " + file.string());
  write_paths(paths, out);
}

PathMatrix load_paths(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  return read_paths(in);
}

}  // namespace stefan::drivers
