#include "stefan/particle.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include "stefan/csv.hpp"
#include "stefan/rng.hpp"

namespace stefan::particle {

AbsorptionCounter::AbsorptionCounter(double alpha, std::size_t particles, Scheme scheme)
    : alpha_(alpha), n_(particles), scheme_(scheme), absorbed_step_(particles, ParticleSolution::never) {
  if (!(alpha > 0.0)) throw std::invalid_argument("particle: alpha must be > 0");
  if (particles == 0) throw std::invalid_argument("particle: need at least one particle");
}

std::size_t AbsorptionCounter::implicit_count(std::span<const double> free_positions, std::size_t& iterations) {
  // Only alive particles with x0 + Z_k <= alpha can be absorbed by any loss.
  candidates_.clear();
  for (std::size_t m = 0; m < n_; ++m) {
    if (absorbed_step_[m] == ParticleSolution::never && free_positions[m] <= alpha_)
      candidates_.push_back(free_positions[m]);
  }
  std::sort(candidates_.begin(), candidates_.end());

  std::size_t count = dead_;
  iterations = 0;
  while (true) {
    ++iterations;
    const double lambda = loss_of(count);
    const auto hit = std::partition_point(candidates_.begin(), candidates_.end(),
                                          [lambda](double x) { return x - lambda <= 0.0; });
    const std::size_t next = dead_ + static_cast<std::size_t>(hit - candidates_.begin());
    if (next == count) return count;
    count = next;
  }
}

double AbsorptionCounter::advance(std::span<const double> free_positions) {
  if (free_positions.size() != n_) throw std::invalid_argument("particle: position count mismatch");
  std::size_t iterations = 1;
  const std::size_t count = scheme_ == Scheme::Explicit ? dead_ : implicit_count(free_positions, iterations);
  const double lambda = loss_of(count);

  for (std::size_t m = 0; m < n_; ++m) {
    if (absorbed_step_[m] == ParticleSolution::never && free_positions[m] - lambda <= 0.0) {
      absorbed_step_[m] = step_;
      ++dead_;
    }
  }
  loss_.push_back(lambda);
  counts_.push_back(dead_);
  iters_.push_back(iterations);
  ++step_;
  return lambda;
}

bool AbsorptionCounter::is_absorbed(std::size_t m) const noexcept {
  return absorbed_step_[m] != ParticleSolution::never;
}

ParticleSolution AbsorptionCounter::finish() && {
  return {LossCurve(alpha_, std::move(loss_)), std::move(counts_), std::move(iters_), std::move(absorbed_step_)};
}

std::vector<double> sample_initial_positions(const InitialLaw& law, std::size_t particles, std::uint64_t seed) {
  std::vector<double> x0(particles);
  for (std::size_t m = 0; m < particles; ++m) {
    const rng::CounterStream stream(seed, m, rng::Purpose::InitialPosition);
    x0[m] = law.quantile(stream.uniform(0));
  }
  return x0;
}

namespace {

ParticleSolution run_frozen(double alpha, const drivers::PathMatrix& paths, std::span<const double> x0,
                            Scheme scheme) {
  const std::size_t n = paths.particles();
  if (x0.size() != n) throw std::invalid_argument("particle: x0 size must equal the particle count");
  AbsorptionCounter counter(alpha, n, scheme);
  std::vector<double> free(n);
  for (std::size_t k = 0; k <= paths.steps(); ++k) {
    for (std::size_t m = 0; m < n; ++m) free[m] = x0[m] + paths(m, k);
    counter.advance(free);
  }
  return std::move(counter).finish();
}

}  // namespace

ParticleSolution solve_explicit(double alpha, const drivers::PathMatrix& paths, std::span<const double> x0) {
  return run_frozen(alpha, paths, x0, Scheme::Explicit);
}

ParticleSolution solve_implicit(double alpha, const drivers::PathMatrix& paths, std::span<const double> x0) {
  return run_frozen(alpha, paths, x0, Scheme::Implicit);
}

std::vector<ParticleSolution> solve_schemes(const ParticleConfig& config, std::span<const Scheme> schemes,
                                            std::size_t substeps) {
  const std::size_t n = config.particles;
  const GridSpec& grid = config.grid;
  const std::vector<double> x0 = sample_initial_positions(config.law, n, config.driver.seed);

  std::vector<AbsorptionCounter> counters;
  for (Scheme s : schemes) counters.emplace_back(config.alpha, n, s);

  if (!config.driver.is_markov()) {
    if (substeps != 1) throw std::invalid_argument("particle: nested substeps need a Markov driver");
    const drivers::PathMatrix paths = drivers::sample_paths(config.driver, grid, n);
    std::vector<ParticleSolution> out;
    for (Scheme s : schemes) out.push_back(run_frozen(config.alpha, paths, x0, s));
    return out;
  }

  const drivers::IncrementSource source(config.driver, grid.step(), substeps);
  std::vector<double> z(n, 0.0);
  std::vector<double> free(x0);
  for (std::size_t k = 0; k <= grid.steps(); ++k) {
    if (k > 0) {
      for (std::size_t m = 0; m < n; ++m) {
        // Absorbed particles no longer influence any scheme.
        const bool needed = std::any_of(counters.begin(), counters.end(),
                                        [m](const AbsorptionCounter& c) { return !c.is_absorbed(m); });
        if (!needed) continue;
        z[m] = source.advance(m, k, z[m]);
        free[m] = x0[m] + z[m];
      }
    }
    for (auto& c : counters) c.advance(free);
  }
  std::vector<ParticleSolution> out;
  for (auto& c : counters) out.push_back(std::move(c).finish());
  return out;
}

ParticleSolution solve(const ParticleConfig& config, std::size_t substeps) {
  const Scheme scheme[] = {config.scheme};
  return std::move(solve_schemes(config, scheme, substeps).front());
}

void write_csv(const ParticleSolution& solution, const GridSpec& grid, std::ostream& out) {
  csv::Writer w(out);
  w.row("k", "t_k", "Lambda", "L", "fixed_point_iters");
  for (std::size_t k = 0; k < solution.loss.size(); ++k)
    w.row(k, grid.time(k), solution.loss[k], solution.loss.fraction(k), solution.fixed_point_iters[k]);
}

}  // namespace stefan::particle
