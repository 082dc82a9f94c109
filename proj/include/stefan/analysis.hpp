#pragma once

// Refinement diagnostics: Richardson-type error estimators, least-squares
// convergence orders, jump detection and the weak-feedback check.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "stefan/core_model.hpp"

namespace stefan::analysis {

struct Level {
  std::size_t steps;
  LossCurve curve;
};

/// Loss curves on nested meshes T / N, N increasing, each dividing the next.
class RefinementStudy {
 public:
  RefinementStudy(double horizon, std::string scheme = {});

  void add(std::size_t steps, LossCurve curve);

  double horizon() const noexcept { return horizon_; }
  const std::string& scheme() const noexcept { return scheme_; }
  const std::vector<Level>& levels() const noexcept { return levels_; }
  double step(std::size_t level) const { return horizon_ / static_cast<double>(levels_.at(level).steps); }

 private:
  double horizon_;
  std::string scheme_;
  std::vector<Level> levels_;
};

struct Point {
  double h;
  double value;
};

/// 2 (L_T^h - L_T^{2h}) for every level whose predecessor has half as many
/// steps; sign preserved. Throws NeedTwoLevels / invalid_argument.
std::vector<Point> error_estimator(const RefinementStudy& study);

/// OLS slope of log|value| against log h. Throws DegenerateFit on a zero
/// value and invalid_argument with fewer than two points.
double fit_order(std::span<const Point> points);

struct OrderFit {
  double slope;
  std::size_t used;    // points entering the fit
  std::size_t absent;  // zero estimators left out
  bool dropped_coarsest;
};

/// Fit used for studies: zero values are treated as absent, and the coarsest
/// remaining point is dropped when at least `drop_threshold` remain
/// (0 disables dropping).
OrderFit fit_study_order(std::span<const Point> points, std::size_t drop_threshold = 4);

struct Jump {
  std::size_t index;  // k attaining the largest one-step increment (smallest on ties)
  double time;        // t_k
  double size;        // increment in L units
};

Jump detect_jump(const LossCurve& curve, const GridSpec& grid);
Jump detect_jump(const LossCurve& curve, double horizon);

struct JumpObservation {
  std::size_t steps;
  Jump jump;
};

struct JumpEstimate {
  double h;
  double time_estimator;  // 4 |t*^{2h} - t*^h|
  double size_estimator;  // 4 |J^{2h} - J^h|
};

std::vector<JumpEstimate> jump_refinement_estimators(double horizon, std::span<const JumpObservation> observations);
std::vector<JumpEstimate> jump_refinement_estimators(const RefinementStudy& study);

/// Slope at or above which an observed rate counts as consistent with the
/// sqrt(h) log(h)^2 bound of the weak-feedback regime.
inline constexpr double kWeakFeedbackSlopeFloor = 0.4;

struct WeakFeedbackReport {
  double alpha_times_density_sup;
  bool weak_feedback;
  std::optional<double> rate_slope;
  bool consistent;  // weak feedback and slope >= kWeakFeedbackSlopeFloor
};

WeakFeedbackReport weak_feedback_check(double alpha, const InitialLaw& law,
                                       std::span<const Point> estimators = {});

}  // namespace stefan::analysis
