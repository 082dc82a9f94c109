#pragma once

// Initial laws, time/space grids, loss curves and the lattice discretization
// of the initial position shared by the tree and particle solvers.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace stefan {

/// Gamma(shape k, scale theta) law, density x^{k-1} e^{-x/theta} / (Gamma(k) theta^k).
struct GammaLaw {
  double shape;
  double scale;
};

/// Density 1/alpha - c x^a on [0, A], zero beyond. A is fixed by unit mass.
struct PolyCutoffLaw {
  double alpha;
  double exponent;
  double coefficient;
  double cutoff;
};

struct Atom {
  double location;
  double mass;
};

struct DiscreteAtomsLaw {
  std::vector<Atom> atoms;  // sorted by location
};

struct UniformLaw {
  double lo;
  double hi;
};

/// Law of the initial position X_{0-}. Always a probability measure on
/// [0, inf); construct through the named factories, which validate.
class InitialLaw {
 public:
  using Variant = std::variant<GammaLaw, PolyCutoffLaw, DiscreteAtomsLaw, UniformLaw>;

  static InitialLaw gamma(double shape, double scale);
  static InitialLaw poly_cutoff(double alpha, double exponent, double coefficient);
  static InitialLaw atoms(std::vector<Atom> atoms);
  static InitialLaw uniform(double lo, double hi);

  const Variant& variant() const noexcept { return law_; }

  double cdf(double x) const;
  /// Lebesgue density; nullopt for atomic laws.
  std::optional<double> density(double x) const;
  bool has_density() const noexcept;
  /// Supremum of the density; +inf for unbounded densities and atoms.
  double density_sup() const;
  /// Smallest x (to bisection accuracy) with cdf(x) >= p, p in (0, 1].
  double quantile(double p) const;
  /// Point beyond which at most `tail` mass lies; exact support end for
  /// compactly supported laws.
  double upper_bound(double tail = 1e-10) const;

  std::string describe() const;

 private:
  explicit InitialLaw(Variant v) : law_(std::move(v)) {}
  Variant law_;
};

double cdf(const InitialLaw& law, double x);

/// Cutoff A with integral_0^A (1/alpha - c x^a) dx = 1, found by bisection
/// on [0, (1/(alpha c))^{1/a}]. Throws NoValidCutoff when no such A keeps
/// the density nonnegative.
double solve_cutoff(double alpha, double exponent, double coefficient);

/// Uniform time grid t_k = k T / N with spatial pitch sqrt(T/N) and a
/// spatial index range [0, max_index].
class GridSpec {
 public:
  GridSpec(double horizon, std::size_t steps, std::size_t max_index);

  /// Chooses max_index so that mass starting below the (1 - 1e-10) quantile
  /// of `law` (shifted up by `shift` cells) never reaches the top in N steps.
  static GridSpec for_law(double horizon, std::size_t steps, const InitialLaw& law,
                          std::size_t shift = 0);

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t max_index() const noexcept { return max_index_; }
  double step() const noexcept { return step_; }
  double pitch() const noexcept { return pitch_; }
  double time(std::size_t k) const noexcept {
    return horizon_ * static_cast<double>(k) / static_cast<double>(steps_);
  }

 private:
  double horizon_;
  std::size_t steps_;
  std::size_t max_index_;
  double step_;
  double pitch_;
};

/// Loss path Lambda on the grid, values[k] = Lambda_{t_k}, nondecreasing in
/// [0, alpha]. The absorbed fraction is L = Lambda / alpha.
class LossCurve {
 public:
  LossCurve(double alpha, std::vector<double> values);

  double alpha() const noexcept { return alpha_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }
  double fraction(std::size_t k) const { return values_[k] / alpha_; }
  double back() const { return values_.back(); }

  friend bool operator==(const LossCurve&, const LossCurve&) = default;

 private:
  double alpha_;
  std::vector<double> values_;
};

/// Clamp into [0, alpha] after arithmetic.
double clamp_loss(double value, double alpha) noexcept;

/// Sub-probability masses u_i on the lattice i * pitch at time index k
/// (k = -1 for the law of X_{0-} before any absorption).
struct DensityVector {
  std::vector<double> masses;
  long time_index = -1;

  double total() const noexcept;
};

enum class InitMode { CellMass, DensitySample };

struct Discretization {
  DensityVector density;
  /// Set when the index range cuts off more than 1e-8 of the law's mass.
  bool support_truncated = false;
};

/// CellMass: m_i = P(X_{0-} in [i h^{1/2}, (i+1) h^{1/2})).
/// DensitySample: m_i = V_{0-}(i h^{1/2}) h^{1/2}; requires a density.
Discretization discretize_initial(const InitialLaw& law, const GridSpec& grid,
                                  InitMode mode = InitMode::CellMass);

}  // namespace stefan
