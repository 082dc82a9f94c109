#include "stefan/donsker.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "stefan/csv.hpp"

namespace stefan::donsker {

namespace {

long lattice_index(double loss, double pitch) { return static_cast<long>(std::floor(loss / pitch)); }

// Mass removed by a step with boundary index iota: everything at or below
// iota plus the half of cell iota + 1 that moves down.
double killed_mass(const std::vector<double>& u, long iota) {
  if (iota < 0) return 0.0;
  const auto last = std::min<std::size_t>(static_cast<std::size_t>(iota), u.size() - 1);
  double sum = 0.0;
  for (std::size_t j = 0; j <= last; ++j) sum += u[j];
  const auto next = static_cast<std::size_t>(iota) + 1;
  if (next < u.size()) sum += 0.5 * u[next];
  return sum;
}

std::vector<double> propagate(const std::vector<double>& u, long iota) {
  // One extra cell when the top is occupied so no mass leaves upwards.
  const std::size_t size = u.size() + (u.back() != 0.0 ? 1 : 0);
  std::vector<double> w(size, 0.0);
  const std::size_t first = iota < 0 ? 0 : static_cast<std::size_t>(iota) + 1;
  auto at = [&](std::size_t i) { return i < u.size() ? u[i] : 0.0; };
  for (std::size_t i = first; i < size; ++i) {
    const double down = at(i + 1);
    w[i] = (i == first || i == 0) ? 0.5 * down : 0.5 * at(i - 1) + 0.5 * down;
  }
  return w;
}

}  // namespace

InitResult init_loss(const DensityVector& masses, double alpha, double pitch) {
  const auto& m = masses.masses;
  long iota = 0;
  std::size_t iterations = 0;
  while (true) {
    ++iterations;
    double sum = 0.0;
    const auto last = std::min<std::size_t>(static_cast<std::size_t>(iota), m.size() - 1);
    for (std::size_t j = 0; j <= last; ++j) sum += m[j];
    const double lambda = clamp_loss(alpha * sum, alpha);
    const long next = lattice_index(lambda, pitch);
    if (next == iota) return {lambda, iota, iterations};
    iota = next;
  }
}

StepResult step(const DensityVector& u_prev, double loss_prev, double alpha, double pitch, Mode mode) {
  if (u_prev.masses.empty()) throw std::invalid_argument("step: empty density");
  StepResult out;
  long iota = lattice_index(loss_prev, pitch);
  out.trace.push_back({loss_prev, iota});
  double lambda = loss_prev;
  std::size_t iterations = 0;
  while (true) {
    ++iterations;
    lambda = clamp_loss(loss_prev + alpha * killed_mass(u_prev.masses, iota), alpha);
    const long next = lattice_index(lambda, pitch);
    out.trace.push_back({lambda, next});
    if (mode == Mode::Explicit || next == iota) break;
    iota = next;
  }
  out.density.masses = propagate(u_prev.masses, iota);
  out.density.time_index = u_prev.time_index + 1;
  out.loss = lambda;
  out.iterations = iterations;
  return out;
}

std::size_t perturbation_shift(double step) {
  const double l = std::log(step);
  return static_cast<std::size_t>(std::floor(l * l));
}

DonskerSolution solve(const DonskerConfig& config) {
  if (!(config.alpha > 0.0)) throw std::invalid_argument("donsker: alpha must be > 0");
  const GridSpec& grid = config.grid;
  const double pitch = grid.pitch();
  const std::size_t steps = grid.steps();

  Discretization disc = discretize_initial(config.law, grid, config.init_mode);
  const std::size_t shift = config.perturb_initial ? perturbation_shift(grid.step()) : 0;

  DensityVector u;
  u.masses.assign(shift + disc.density.masses.size() + steps + 1, 0.0);
  for (std::size_t i = 0; i < disc.density.masses.size(); ++i) u.masses[i + shift] = disc.density.masses[i];
  u.time_index = 0;

  std::vector<double> loss(steps + 1);
  DonskerSolution sol{LossCurve(config.alpha, {0.0}), {}, {}, {}, {}, disc.support_truncated, shift};
  sol.iterations_per_step.reserve(steps + 1);
  sol.boundary_index.reserve(steps + 1);
  sol.mass_remaining.reserve(steps + 1);

  const InitResult init = init_loss(u, config.alpha, pitch);
  for (std::size_t j = 0; j <= static_cast<std::size_t>(init.iota) && j < u.masses.size(); ++j) u.masses[j] = 0.0;
  loss[0] = init.loss;
  sol.iterations_per_step.push_back(init.iterations);
  sol.boundary_index.push_back(lattice_index(init.loss, pitch));
  sol.mass_remaining.push_back(u.total());

  for (std::size_t k = 1; k <= steps; ++k) {
    StepResult r = step(u, loss[k - 1], config.alpha, pitch, config.mode);
    u = std::move(r.density);
    loss[k] = r.loss;
    sol.iterations_per_step.push_back(r.iterations);
    sol.boundary_index.push_back(lattice_index(r.loss, pitch));
    sol.mass_remaining.push_back(u.total());
  }

  sol.loss = LossCurve(config.alpha, std::move(loss));
  sol.final_density = std::move(u);
  return sol;
}

void write_csv(const DonskerSolution& solution, const GridSpec& grid, std::ostream& out) {
  csv::Writer w(out);
  w.row("k", "t_k", "Lambda", "L", "i_k", "iterations", "mass_remaining");
  for (std::size_t k = 0; k < solution.loss.size(); ++k) {
    w.row(k, grid.time(k), solution.loss[k], solution.loss.fraction(k), solution.boundary_index[k],
          solution.iterations_per_step[k], solution.mass_remaining[k]);
  }
}

}  // namespace stefan::donsker
