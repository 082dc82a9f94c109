#include "stefan/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stefan/error.hpp"

namespace stefan::analysis {

RefinementStudy::RefinementStudy(double horizon, std::string scheme) : horizon_(horizon), scheme_(std::move(scheme)) {
  if (!(horizon > 0.0)) throw std::invalid_argument("study: horizon must be > 0");
}

void RefinementStudy::add(std::size_t steps, LossCurve curve) {
  if (steps == 0) throw std::invalid_argument("study: steps must be positive");
  if (curve.size() != steps + 1) throw std::invalid_argument("study: curve needs N + 1 values");
  if (!levels_.empty()) {
    const std::size_t prev = levels_.back().steps;
    if (steps <= prev || steps % prev != 0)
      throw std::invalid_argument("study: levels must increase and each must divide the next");
  }
  levels_.push_back({steps, std::move(curve)});
}

std::vector<Point> error_estimator(const RefinementStudy& study) {
  const auto& levels = study.levels();
  if (levels.size() < 2) throw NeedTwoLevels();
  std::vector<Point> out;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (levels[i].steps != 2 * levels[i - 1].steps)
      throw std::invalid_argument("error estimator needs consecutive halvings of the step");
    const double fine = levels[i].curve.fraction(levels[i].steps);
    const double coarse = levels[i - 1].curve.fraction(levels[i - 1].steps);
    out.push_back({study.step(i), 2.0 * (fine - coarse)});
  }
  return out;
}

double fit_order(std::span<const Point> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_order: need at least two points");
  double sx = 0.0, sy = 0.0;
  for (const Point& p : points) {
    if (p.value == 0.0) throw DegenerateFit("fit_order: zero error at h = " + std::to_string(p.h));
    if (!(p.h > 0.0)) throw std::invalid_argument("fit_order: h must be > 0");
    sx += std::log(p.h);
    sy += std::log(std::abs(p.value));
  }
  const double n = static_cast<double>(points.size());
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (const Point& p : points) {
    const double dx = std::log(p.h) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(std::abs(p.value)) - my);
  }
  if (sxx == 0.0) throw DegenerateFit("fit_order: all points share the same h");
  return sxy / sxx;
}

OrderFit fit_study_order(std::span<const Point> points, std::size_t drop_threshold) {
  std::vector<Point> kept;
  for (const Point& p : points) {
    if (p.value != 0.0) kept.push_back(p);
  }
  OrderFit fit{0.0, 0, points.size() - kept.size(), false};
  std::sort(kept.begin(), kept.end(), [](const Point& a, const Point& b) { return a.h > b.h; });
  if (drop_threshold > 0 && kept.size() >= drop_threshold) {
    kept.erase(kept.begin());
    fit.dropped_coarsest = true;
  }
  fit.used = kept.size();
  fit.slope = fit_order(kept);
  return fit;
}

Jump detect_jump(const LossCurve& curve, double horizon) {
  if (curve.size() < 2) throw std::invalid_argument("detect_jump: need N >= 1");
  const std::size_t steps = curve.size() - 1;
  std::size_t best = 1;
  double best_inc = curve.fraction(1) - curve.fraction(0);
  for (std::size_t k = 2; k <= steps; ++k) {
    const double inc = curve.fraction(k) - curve.fraction(k - 1);
    if (inc > best_inc) {
      best_inc = inc;
      best = k;
    }
  }
  return {best, horizon * static_cast<double>(best) / static_cast<double>(steps), best_inc};
}

Jump detect_jump(const LossCurve& curve, const GridSpec& grid) {
  if (curve.size() != grid.steps() + 1) throw std::invalid_argument("detect_jump: curve does not match grid");
  return detect_jump(curve, grid.horizon());
}

std::vector<JumpEstimate> jump_refinement_estimators(double horizon, std::span<const JumpObservation> observations) {
  if (observations.size() < 2) throw NeedTwoLevels();
  std::vector<JumpEstimate> out;
  for (std::size_t i = 1; i < observations.size(); ++i) {
    const auto& fine = observations[i];
    const auto& coarse = observations[i - 1];
    if (fine.steps != 2 * coarse.steps)
      throw std::invalid_argument("jump estimators need consecutive halvings of the step");
    out.push_back({horizon / static_cast<double>(fine.steps), 4.0 * std::abs(coarse.jump.time - fine.jump.time),
                   4.0 * std::abs(coarse.jump.size - fine.jump.size)});
  }
  return out;
}

std::vector<JumpEstimate> jump_refinement_estimators(const RefinementStudy& study) {
  std::vector<JumpObservation> obs;
  for (const Level& l : study.levels()) obs.push_back({l.steps, detect_jump(l.curve, study.horizon())});
  return jump_refinement_estimators(study.horizon(), obs);
}

WeakFeedbackReport weak_feedback_check(double alpha, const InitialLaw& law, std::span<const Point> estimators) {
  WeakFeedbackReport r{alpha * law.density_sup(), false, std::nullopt, false};
  r.weak_feedback = r.alpha_times_density_sup < 1.0;
  if (estimators.size() >= 2) r.rate_slope = fit_study_order(estimators).slope;
  r.consistent = r.weak_feedback && r.rate_slope && *r.rate_slope >= kWeakFeedbackSlopeFloor;
  return r;
}

}  // namespace stefan::analysis
