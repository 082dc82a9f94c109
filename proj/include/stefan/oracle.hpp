#pragma once

// Brute-force references for tiny instances. Nothing here shares code with
// the solvers: the tree is checked by enumerating every Rademacher sign
// sequence, the particle schemes by scanning every admissible loss value.

#include <cstddef>
#include <span>
#include <vector>

#include "stefan/core_model.hpp"
#include "stefan/drivers.hpp"

namespace stefan::oracle {

/// Upper bound on 2^N * (number of atoms) for one loss-map evaluation.
inline constexpr double kPathBudget = 1e7;

/// One exact evaluation of the loss map on a candidate loss path
/// (one value per grid time): alpha times the probability that the walk
/// started from the atoms has been absorbed by each t_k.
std::vector<double> loss_map(const DiscreteAtomsLaw& law, double alpha, const GridSpec& grid,
                             std::span<const double> candidate);

/// Iterates the loss map from the zero path until it is unchanged.
/// Throws InstanceTooLarge beyond the enumeration budget.
LossCurve exact_donsker_minimal(const DiscreteAtomsLaw& law, double alpha, const GridSpec& grid);

/// Number of particles absorbed by step k when the loss at step k is
/// alpha * j / n and earlier steps use `frozen` (k entries).
std::size_t absorbed_count(const drivers::PathMatrix& paths, std::span<const double> x0, double alpha,
                           std::span<const double> frozen, std::size_t k, std::size_t j);

/// At every k, the smallest j in {0, ..., n} whose loss alpha * j / n is
/// self-consistent, i.e. absorbed_count(..., j) == j.
LossCurve exhaustive_particle_minimal(const drivers::PathMatrix& paths, std::span<const double> x0, double alpha);

}  // namespace stefan::oracle
