#pragma once

// Deterministic tree recursion for the Donsker (Rademacher walk) version of
// the problem. Masses live on the absolute lattice i * sqrt(h); the boundary
// is tracked by the index iota = floor(Lambda / sqrt(h)). A walker at index i
// survives a step into i' as long as min(i, i') > iota.

#include <cstddef>
#include <iosfwd>
#include <vector>

#include "stefan/core_model.hpp"

namespace stefan::donsker {

enum class Mode { Implicit, Explicit };

struct DonskerConfig {
  double alpha;
  GridSpec grid;
  InitialLaw law;
  Mode mode = Mode::Implicit;
  bool perturb_initial = false;
  InitMode init_mode = InitMode::CellMass;
};

struct DonskerSolution {
  LossCurve loss;
  DensityVector final_density;
  std::vector<std::size_t> iterations_per_step;  // N + 1 entries, k = 0 included
  std::vector<long> boundary_index;              // floor(Lambda_k / sqrt(h))
  std::vector<double> mass_remaining;            // sum of u^k
  bool support_truncated = false;
  std::size_t index_shift = 0;                   // cells added by perturb_initial
};

struct InitResult {
  double loss;
  long iota;
  std::size_t iterations;
};

/// Fixed point of lambda <- alpha * sum_{j <= iota} m_j started at
/// lambda = 0, iota = 0.
InitResult init_loss(const DensityVector& masses, double alpha, double pitch);

struct Iterate {
  double loss;
  long iota;
};

struct StepResult {
  DensityVector density;
  double loss;
  std::size_t iterations;
  std::vector<Iterate> trace;  // lambda^0, lambda^1, ... ending at the returned loss
};

/// One time step. Implicit iterates from lambda^0 = loss_prev until iota is
/// unchanged; Explicit returns the first iterate. The density must already
/// vanish at indices <= floor(loss_prev / pitch) and at the top cell.
StepResult step(const DensityVector& u_prev, double loss_prev, double alpha, double pitch, Mode mode);

/// Number of cells the initial lattice is shifted up by when perturbing:
/// floor(ln(h)^2).
std::size_t perturbation_shift(double step);

DonskerSolution solve(const DonskerConfig& config);

/// Columns k, t_k, Lambda, L, i_k, iterations, mass_remaining.
void write_csv(const DonskerSolution& solution, const GridSpec& grid, std::ostream& out);

}  // namespace stefan::donsker
