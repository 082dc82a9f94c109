#include "stefan/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "stefan/error.hpp"
#include "stefan/special_functions.hpp"

namespace stefan {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kAtomMassTolerance = 1e-12;
constexpr double kTruncationTolerance = 1e-8;

double poly_primitive(const PolyCutoffLaw& p, double x) {
  return x / p.alpha - p.coefficient * std::pow(x, p.exponent + 1.0) / (p.exponent + 1.0);
}

// Bracketed Newton on a continuous cdf; falls back to bisection whenever the
// Newton step leaves the bracket.
double continuous_quantile(const InitialLaw& law, double p) {
  double lo = 0.0;
  double hi = 1.0;
  while (law.cdf(hi) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return std::numeric_limits<double>::infinity();
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double f = law.cdf(x) - p;
    if (f == 0.0) return x;
    if (f < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
    const double dens = law.density(x).value_or(0.0);
    double next = dens > 0.0 ? x - f / dens : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * std::max(1.0, x)) {
      x = next;
      break;
    }
    x = next;
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// InitialLaw

InitialLaw InitialLaw::gamma(double shape, double scale) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw std::invalid_argument("gamma law: shape must be > 0");
  if (!(scale > 0.0) || !std::isfinite(scale)) throw std::invalid_argument("gamma law: scale must be > 0");
  return InitialLaw(GammaLaw{shape, scale});
}

InitialLaw InitialLaw::poly_cutoff(double alpha, double exponent, double coefficient) {
  const double cutoff = solve_cutoff(alpha, exponent, coefficient);
  return InitialLaw(PolyCutoffLaw{alpha, exponent, coefficient, cutoff});
}

InitialLaw InitialLaw::atoms(std::vector<Atom> atoms) {
  if (atoms.empty()) throw std::invalid_argument("atoms law: at least one atom required");
  double total = 0.0;
  for (const auto& a : atoms) {
    if (!(a.location >= 0.0) || !std::isfinite(a.location))
      throw std::invalid_argument("atoms law: locations must be finite and >= 0");
    if (!(a.mass > 0.0)) throw std::invalid_argument("atoms law: masses must be > 0");
    total += a.mass;
  }
  if (std::abs(total - 1.0) > kAtomMassTolerance)
    throw std::invalid_argument("atoms law: masses must sum to 1");
  std::stable_sort(atoms.begin(), atoms.end(),
                   [](const Atom& x, const Atom& y) { return x.location < y.location; });
  return InitialLaw(DiscreteAtomsLaw{std::move(atoms)});
}

InitialLaw InitialLaw::uniform(double lo, double hi) {
  if (!(lo >= 0.0) || !std::isfinite(hi) || !(hi > lo))
    throw std::invalid_argument("uniform law: need 0 <= lo < hi");
  return InitialLaw(UniformLaw{lo, hi});
}

double InitialLaw::cdf(double x) const {
  if (std::isnan(x)) return x;
  if (x < 0.0) return 0.0;
  return std::visit(
      overloaded{
          [x](const GammaLaw& g) { return regularized_gamma_p(g.shape, x / g.scale); },
          [x](const PolyCutoffLaw& p) { return x >= p.cutoff ? 1.0 : std::clamp(poly_primitive(p, x), 0.0, 1.0); },
          [x](const DiscreteAtomsLaw& d) {
            double acc = 0.0;
            for (const auto& a : d.atoms) {
              if (a.location > x) break;
              acc += a.mass;
            }
            return std::min(acc, 1.0);
          },
          [x](const UniformLaw& u) {
            if (x <= u.lo) return 0.0;
            if (x >= u.hi) return 1.0;
            return (x - u.lo) / (u.hi - u.lo);
          },
      },
      law_);
}

std::optional<double> InitialLaw::density(double x) const {
  return std::visit(
      overloaded{
          [x](const GammaLaw& g) -> std::optional<double> {
            if (x < 0.0) return 0.0;
            if (x == 0.0) {
              if (g.shape < 1.0) return std::numeric_limits<double>::infinity();
              return g.shape == 1.0 ? 1.0 / g.scale : 0.0;
            }
            const double logd = (g.shape - 1.0) * std::log(x) - x / g.scale - std::lgamma(g.shape) -
                                g.shape * std::log(g.scale);
            return std::exp(logd);
          },
          [x](const PolyCutoffLaw& p) -> std::optional<double> {
            if (x < 0.0 || x > p.cutoff) return 0.0;
            return std::max(0.0, 1.0 / p.alpha - p.coefficient * std::pow(x, p.exponent));
          },
          [](const DiscreteAtomsLaw&) -> std::optional<double> { return std::nullopt; },
          [x](const UniformLaw& u) -> std::optional<double> {
            return (x >= u.lo && x <= u.hi) ? 1.0 / (u.hi - u.lo) : 0.0;
          },
      },
      law_);
}

bool InitialLaw::has_density() const noexcept {
  return !std::holds_alternative<DiscreteAtomsLaw>(law_);
}

double InitialLaw::density_sup() const {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{
                        [this](const GammaLaw& g) {
                          if (g.shape < 1.0) return inf;
                          if (g.shape == 1.0) return 1.0 / g.scale;
                          return *density((g.shape - 1.0) * g.scale);
                        },
                        [](const PolyCutoffLaw& p) { return 1.0 / p.alpha; },
                        [](const DiscreteAtomsLaw&) { return inf; },
                        [](const UniformLaw& u) { return 1.0 / (u.hi - u.lo); },
                    },
                    law_);
}

double InitialLaw::quantile(double p) const {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must lie in (0, 1]");
  return std::visit(overloaded{
                        [&](const GammaLaw&) { return continuous_quantile(*this, p); },
                        [&](const PolyCutoffLaw& c) {
                          return p == 1.0 ? c.cutoff : continuous_quantile(*this, p);
                        },
                        [p](const DiscreteAtomsLaw& d) {
                          double acc = 0.0;
                          for (const auto& a : d.atoms) {
                            acc += a.mass;
                            if (acc >= p) return a.location;
                          }
                          return d.atoms.back().location;
                        },
                        [p](const UniformLaw& u) { return u.lo + p * (u.hi - u.lo); },
                    },
                    law_);
}

double InitialLaw::upper_bound(double tail) const {
  return std::visit(overloaded{
                        [&](const GammaLaw&) { return quantile(1.0 - tail); },
                        [](const PolyCutoffLaw& p) { return p.cutoff; },
                        [](const DiscreteAtomsLaw& d) { return d.atoms.back().location; },
                        [](const UniformLaw& u) { return u.hi; },
                    },
                    law_);
}

std::string InitialLaw::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{
                 [&](const GammaLaw& g) { os << "gamma(shape=" << g.shape << ", scale=" << g.scale << ")"; },
                 [&](const PolyCutoffLaw& p) {
                   os << "poly_cutoff(alpha=" << p.alpha << ", exponent=" << p.exponent
                      << ", coefficient=" << p.coefficient << ", cutoff=" << p.cutoff << ")";
                 },
                 [&](const DiscreteAtomsLaw& d) { os << "atoms(" << d.atoms.size() << ")"; },
                 [&](const UniformLaw& u) { os << "uniform(" << u.lo << ", " << u.hi << ")"; },
             },
             law_);
  return os.str();
}

double cdf(const InitialLaw& law, double x) { return law.cdf(x); }

// ---------------------------------------------------------------------------
// solve_cutoff

double solve_cutoff(double alpha, double exponent, double coefficient) {
  if (!(alpha > 0.0)) throw std::invalid_argument("solve_cutoff: alpha must be > 0");
  if (!(exponent > 0.0)) throw std::invalid_argument("solve_cutoff: exponent must be > 0");
  if (!(coefficient > 0.0)) throw std::invalid_argument("solve_cutoff: coefficient must be > 0");

  const PolyCutoffLaw shape{alpha, exponent, coefficient, 0.0};
  // The density vanishes at the bracket end; beyond it would turn negative.
  const double a_max = std::pow(1.0 / (alpha * coefficient), 1.0 / exponent);
  if (!std::isfinite(a_max) || poly_primitive(shape, a_max) < 1.0) {
    std::ostringstream os;
    os << "no cutoff with nonnegative density: integral reaches only " << poly_primitive(shape, a_max)
       << " < 1";
    throw NoValidCutoff(os.str());
  }
  double lo = 0.0;
  double hi = a_max;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (poly_primitive(shape, mid) < 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(poly_primitive(shape, lo) - 1.0) <= std::abs(poly_primitive(shape, hi) - 1.0) ? lo : hi;
}

// ---------------------------------------------------------------------------
// GridSpec

GridSpec::GridSpec(double horizon, std::size_t steps, std::size_t max_index)
    : horizon_(horizon), steps_(steps), max_index_(max_index) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw std::invalid_argument("grid: horizon must be > 0");
  if (steps == 0) throw std::invalid_argument("grid: steps must be positive");
  if (max_index == 0) throw std::invalid_argument("grid: max_index must be positive");
  step_ = horizon_ / static_cast<double>(steps_);
  pitch_ = std::sqrt(step_);
}

GridSpec GridSpec::for_law(double horizon, std::size_t steps, const InitialLaw& law, std::size_t shift) {
  if (!(horizon > 0.0) || steps == 0) throw std::invalid_argument("grid: horizon and steps must be positive");
  const double pitch = std::sqrt(horizon / static_cast<double>(steps));
  const double top = law.upper_bound(1e-10);
  const auto support_cells = static_cast<std::size_t>(std::ceil(top / pitch));
  return GridSpec(horizon, steps, support_cells + shift + steps + 2);
}

// ---------------------------------------------------------------------------
// LossCurve

LossCurve::LossCurve(double alpha, std::vector<double> values) : alpha_(alpha), values_(std::move(values)) {
  if (!(alpha > 0.0)) throw std::invalid_argument("loss curve: alpha must be > 0");
  if (values_.empty()) throw std::invalid_argument("loss curve: no values");
  constexpr double tol = 1e-12;
  double prev = 0.0;
  for (auto& v : values_) {
    if (!(v >= -tol && v <= alpha_ + tol)) throw std::invalid_argument("loss curve: value outside [0, alpha]");
    if (v < prev - tol) throw std::invalid_argument("loss curve: values must be nondecreasing");
    v = clamp_loss(v, alpha_);
    prev = v;
  }
}

double clamp_loss(double value, double alpha) noexcept { return std::clamp(value, 0.0, alpha); }

double DensityVector::total() const noexcept { return std::accumulate(masses.begin(), masses.end(), 0.0); }

// ---------------------------------------------------------------------------
// discretize_initial

Discretization discretize_initial(const InitialLaw& law, const GridSpec& grid, InitMode mode) {
  const std::size_t cells = grid.max_index() + 1;
  const double pitch = grid.pitch();
  Discretization out;
  out.density.masses.assign(cells, 0.0);
  auto& m = out.density.masses;

  if (mode == InitMode::DensitySample) {
    if (!law.has_density()) throw std::invalid_argument("density sampling needs a law with a density");
    for (std::size_t i = 0; i < cells; ++i) {
      const double v = *law.density(static_cast<double>(i) * pitch);
      if (!std::isfinite(v)) throw std::invalid_argument("density sampling hit an unbounded density");
      m[i] = v * pitch;
    }
    // Left-point sums of decreasing densities overshoot 1; scale those down
    // so the masses stay a sub-probability.
    const double total = out.density.total();
    if (total > 1.0) {
      for (double& v : m) v /= total;
    }
  } else if (const auto* atoms = std::get_if<DiscreteAtomsLaw>(&law.variant())) {
    // Atom at x lands in cell floor(x / pitch), the lattice point below it.
    for (const auto& a : atoms->atoms) {
      const double cell = std::floor(a.location / pitch);
      if (cell < static_cast<double>(cells)) m[static_cast<std::size_t>(cell)] += a.mass;
    }
  } else {
    double lower = law.cdf(0.0);
    for (std::size_t i = 0; i < cells; ++i) {
      const double upper = law.cdf(static_cast<double>(i + 1) * pitch);
      m[i] = std::max(0.0, upper - lower);
      lower = upper;
    }
  }
  out.support_truncated = out.density.total() < 1.0 - kTruncationTolerance;
  return out;
}

}  // namespace stefan
