#include <doctest.h>

#include <cmath>
#include <random>

#include "instances.hpp"
#include "stefan/donsker.hpp"
#include "stefan/error.hpp"
#include "stefan/oracle.hpp"
#include "stefan/particle.hpp"

using namespace stefan;

namespace {

LossCurve solver_loss(const testing::TreeInstance& inst) {
  return donsker::solve({inst.alpha, inst.grid, InitialLaw::atoms(inst.law.atoms), donsker::Mode::Implicit, false,
                         InitMode::CellMass})
      .loss;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("tree oracle trivial cases") {
    const GridSpec g(0.25, 4, 40);  // pitch 1/4
    const auto far = oracle::exact_donsker_minimal({{{5.0, 1.0}}}, 1.0, g);
    for (double v : far.values()) CHECK(v == 0.0);
    const auto at_zero = oracle::exact_donsker_minimal({{{0.0, 1.0}}}, 1.0, g);
    for (double v : at_zero.values()) CHECK(v == 1.0);
  }

  TEST_CASE("two-atom cascade matches the tree solver") {
    const GridSpec g(3.0 / 16.0, 3, 12);  // pitch 1/4, atoms at sqrt(h) and 3 sqrt(h)
    auto tree_of = [&](const DiscreteAtomsLaw& law) {
      return donsker::solve({1.0, g, InitialLaw::atoms(law.atoms), donsker::Mode::Implicit, false, InitMode::CellMass})
          .loss;
    };
    SUBCASE("dyadic masses agree bit for bit") {
      const DiscreteAtomsLaw law{{{0.25, 0.375}, {0.75, 0.625}}};
      CHECK(oracle::exact_donsker_minimal(law, 1.0, g) == tree_of(law));
    }
    SUBCASE("masses 0.4 and 0.6 agree up to summation order") {
      // Path enumeration and the lattice recursion add the same terms in a
      // different order, so the last bit can differ.
      const DiscreteAtomsLaw law{{{0.25, 0.4}, {0.75, 0.6}}};
      const auto exact = oracle::exact_donsker_minimal(law, 1.0, g);
      const auto tree = tree_of(law);
      for (std::size_t k = 0; k <= 3; ++k) CHECK(std::abs(exact[k] - tree[k]) <= 4 * 0x1p-52);
      CHECK(tree[3] == doctest::Approx(0.45).epsilon(1e-15));
    }
  }

  TEST_CASE("the result is a fixed point of the loss map") {
    std::mt19937_64 gen(5);
    for (int i = 0; i < 30; ++i) {
      const auto inst = testing::random_tree_instance(gen);
      const auto exact = oracle::exact_donsker_minimal(inst.law, inst.alpha, inst.grid);
      CHECK(oracle::loss_map(inst.law, inst.alpha, inst.grid, exact.values()) ==
            std::vector<double>(exact.values().begin(), exact.values().end()));
    }
  }

  TEST_CASE("tree solver equals the oracle on random dyadic instances") {
    std::mt19937_64 gen(2);
    for (int i = 0; i < 50; ++i) {
      const auto inst = testing::random_tree_instance(gen);
      CAPTURE(i);
      CHECK(solver_loss(inst) == oracle::exact_donsker_minimal(inst.law, inst.alpha, inst.grid));
    }
  }

  TEST_CASE("enumeration budget") {
    const GridSpec g(24.0 / 16.0, 24, 40);
    CHECK_THROWS_AS(oracle::exact_donsker_minimal({{{1.0, 1.0}}}, 1.0, g), InstanceTooLarge);
  }

  TEST_CASE("particle oracle examples") {
    using drivers::PathMatrix;
    SUBCASE("far from the boundary") {
      const PathMatrix p(2, 2, {0, 0.1, -0.1, 0, -0.2, 0.3});
      const std::vector<double> x0 = {10.0, 12.0};
      const auto loss = oracle::exhaustive_particle_minimal(p, x0, 1.0);
      for (double v : loss.values()) CHECK(v == 0.0);
    }
    SUBCASE("everyone starts on the boundary") {
      const PathMatrix p(3, 2, std::vector<double>(9, 0.0));
      const std::vector<double> x0 = {0.0, 0.0, 0.0};
      const auto loss = oracle::exhaustive_particle_minimal(p, x0, 1.0);
      for (double v : loss.values()) CHECK(v == 1.0);
    }
    SUBCASE("cascade") {
      const PathMatrix p(2, 1, {0, -0.45, 0, -0.25});
      const std::vector<double> x0 = {0.4, 0.8};
      const auto loss = oracle::exhaustive_particle_minimal(p, x0, 1.0);
      CHECK(loss[0] == 0.0);
      CHECK(loss[1] == 0.5);
    }
  }

  TEST_CASE("the scan returns the smallest self-consistent value") {
    std::mt19937_64 gen(8);
    for (int i = 0; i < 50; ++i) {
      const auto inst = testing::random_particle_instance(gen);
      const auto loss = oracle::exhaustive_particle_minimal(inst.paths, inst.x0, inst.alpha);
      const std::size_t n = inst.paths.particles();
      for (std::size_t k = 0; k < loss.size(); ++k) {
        const std::span<const double> frozen = loss.values().first(k);
        const auto j = static_cast<std::size_t>(std::llround(loss[k] * static_cast<double>(n) / inst.alpha));
        CHECK(oracle::absorbed_count(inst.paths, inst.x0, inst.alpha, frozen, k, j) == j);
        for (std::size_t s = 0; s < j; ++s)
          CHECK(oracle::absorbed_count(inst.paths, inst.x0, inst.alpha, frozen, k, s) != s);
      }
    }
  }
}
