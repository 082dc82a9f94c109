#include "stefan/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "stefan/error.hpp"

namespace stefan::oracle {

std::vector<double> loss_map(const DiscreteAtomsLaw& law, double alpha, const GridSpec& grid,
                             std::span<const double> candidate) {
  const std::size_t steps = grid.steps();
  if (candidate.size() != steps + 1) throw std::invalid_argument("loss_map: candidate needs N + 1 values");
  if (steps > 30 || std::ldexp(static_cast<double>(law.atoms.size()), static_cast<int>(steps)) > kPathBudget)
    throw InstanceTooLarge("enumeration exceeds the path budget");

  const double pitch = grid.pitch();
  std::vector<long> level(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) level[k] = static_cast<long>(std::floor(candidate[k] / pitch));

  const std::uint64_t sequences = std::uint64_t{1} << steps;
  std::vector<double> absorbed(steps + 1, 0.0);
  for (const Atom& atom : law.atoms) {
    const long start = static_cast<long>(std::floor(atom.location / pitch));
    // counts[k]: sign sequences absorbed at exactly step k.
    std::vector<std::uint64_t> counts(steps + 1, 0);
    for (std::uint64_t bits = 0; bits < sequences; ++bits) {
      long pos = start;
      if (pos <= level[0]) {
        ++counts[0];
        continue;
      }
      for (std::size_t k = 1; k <= steps; ++k) {
        const long prev = pos;
        pos += ((bits >> (k - 1)) & 1u) ? 1 : -1;
        if (std::min(prev, pos) <= level[k]) {
          ++counts[k];
          break;
        }
      }
    }
    std::uint64_t cumulative = 0;
    for (std::size_t k = 0; k <= steps; ++k) {
      cumulative += counts[k];
      absorbed[k] += atom.mass * std::ldexp(static_cast<double>(cumulative), -static_cast<int>(steps));
    }
  }
  for (double& a : absorbed) a *= alpha;
  return absorbed;
}

LossCurve exact_donsker_minimal(const DiscreteAtomsLaw& law, double alpha, const GridSpec& grid) {
  std::vector<double> current(grid.steps() + 1, 0.0);
  while (true) {
    std::vector<double> next = loss_map(law, alpha, grid, current);
    if (next == current) return LossCurve(alpha, std::move(current));
    current = std::move(next);
  }
}

std::size_t absorbed_count(const drivers::PathMatrix& paths, std::span<const double> x0, double alpha,
                           std::span<const double> frozen, std::size_t k, std::size_t j) {
  const std::size_t n = paths.particles();
  const double candidate = alpha * static_cast<double>(j) / static_cast<double>(n);
  std::size_t count = 0;
  for (std::size_t m = 0; m < n; ++m) {
    bool hit = x0[m] + paths(m, k) - candidate <= 0.0;
    for (std::size_t i = 0; i < k && !hit; ++i) hit = x0[m] + paths(m, i) - frozen[i] <= 0.0;
    if (hit) ++count;
  }
  return count;
}

LossCurve exhaustive_particle_minimal(const drivers::PathMatrix& paths, std::span<const double> x0, double alpha) {
  const std::size_t n = paths.particles();
  if (x0.size() != n) throw std::invalid_argument("oracle: x0 size must equal the particle count");
  std::vector<double> loss;
  for (std::size_t k = 0; k <= paths.steps(); ++k) {
    std::size_t j = 0;
    while (absorbed_count(paths, x0, alpha, loss, k, j) != j) {
      if (++j > n) throw std::logic_error("oracle: no self-consistent loss");
    }
    loss.push_back(alpha * static_cast<double>(j) / static_cast<double>(n));
  }
  return LossCurve(alpha, std::move(loss));
}

}  // namespace stefan::oracle
