#include <doctest.h>

#include <cmath>
#include <random>

#include "stefan/analysis.hpp"
#include "stefan/error.hpp"

using namespace stefan;
using namespace stefan::analysis;

namespace {

// Loss curve whose terminal fraction is `terminal`, rising linearly.
LossCurve curve_ending_at(std::size_t steps, double terminal) {
  std::vector<double> v(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) v[k] = terminal * static_cast<double>(k) / static_cast<double>(steps);
  return LossCurve(1.0, std::move(v));
}

RefinementStudy study_from(double T, const std::vector<std::size_t>& levels, auto terminal_of_h) {
  RefinementStudy s(T);
  for (std::size_t n : levels) s.add(n, curve_ending_at(n, terminal_of_h(T / static_cast<double>(n))));
  return s;
}

}  // namespace

TEST_SUITE("analysis") {
  TEST_CASE("estimators of identical losses vanish") {
    const auto s = study_from(1.0, {10, 20, 40}, [](double) { return 0.3; });
    for (const auto& p : error_estimator(s)) CHECK(p.value == 0.0);
  }

  TEST_CASE("estimator of C - sqrt(h)") {
    const auto s = study_from(1.0, {10, 20, 40, 80}, [](double h) { return 0.9 - std::sqrt(h); });
    const auto est = error_estimator(s);
    REQUIRE(est.size() == 3);
    for (const auto& p : est) {
      CHECK(p.value == doctest::Approx(2.0 * (std::sqrt(2.0) - 1.0) * std::sqrt(p.h)).epsilon(1e-12));
      CHECK(p.value > 0.0);
    }
    CHECK(fit_order(est) == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("estimator keeps its sign and is linear") {
    const auto a = error_estimator(study_from(1.0, {10, 20, 40}, [](double h) { return 0.5 + h; }));
    const auto b = error_estimator(study_from(1.0, {10, 20, 40}, [](double h) { return 0.2 + 3.0 * h * h; }));
    const auto ab = error_estimator(study_from(1.0, {10, 20, 40}, [](double h) { return 0.7 + h + 3.0 * h * h; }));
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].value < 0.0);
      CHECK(ab[i].value == doctest::Approx(a[i].value + b[i].value).epsilon(1e-12));
    }
  }

  TEST_CASE("study validation") {
    RefinementStudy s(1.0);
    s.add(10, curve_ending_at(10, 0.1));
    CHECK_THROWS_AS(error_estimator(s), NeedTwoLevels);
    CHECK_THROWS_AS(s.add(15, curve_ending_at(15, 0.1)), std::invalid_argument);
    CHECK_THROWS_AS(s.add(20, curve_ending_at(10, 0.1)), std::invalid_argument);
    s.add(40, curve_ending_at(40, 0.1));
    CHECK_THROWS_AS(error_estimator(s), std::invalid_argument);  // not a halving
  }

  TEST_CASE("fit_order recovers power laws") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> expo(0.1, 2.5), scale(0.01, 100.0);
    for (int i = 0; i < 50; ++i) {
      const double p = expo(gen), c = scale(gen);
      std::vector<Point> pts;
      for (double h = 0.1; h > 1e-4; h /= 2) pts.push_back({h, -c * std::pow(h, p)});
      CHECK(std::abs(fit_order(pts) - p) < 1e-12);
    }
    CHECK(fit_order(std::vector<Point>{{1.0, 1.0}, {0.5, 0.5}, {0.25, 0.25}, {0.125, 0.125}}) ==
          doctest::Approx(1.0).epsilon(1e-14));
    CHECK_THROWS_AS(fit_order(std::vector<Point>{{1.0, 1.0}, {0.5, 0.0}}), DegenerateFit);
    CHECK_THROWS_AS(fit_order(std::vector<Point>{{1.0, 1.0}}), std::invalid_argument);
  }

  TEST_CASE("study fits skip zeros and the coarsest point") {
    std::vector<Point> pts;
    for (double h : {0.1, 0.05, 0.025, 0.0125, 0.00625}) pts.push_back({h, std::sqrt(h)});
    pts[0].value = 5.0;  // pre-asymptotic outlier
    pts[2].value = 0.0;  // no change between levels
    const auto fit = fit_study_order(pts);
    CHECK(fit.absent == 1);
    CHECK(fit.dropped_coarsest);
    CHECK(fit.used == 3);
    CHECK(fit.slope == doctest::Approx(0.5).epsilon(1e-12));
    const auto keep_all = fit_study_order(std::span(pts).subspan(1), 0);
    CHECK_FALSE(keep_all.dropped_coarsest);
    CHECK(keep_all.slope == doctest::Approx(0.5).epsilon(1e-12));
  }

  TEST_CASE("detect_jump") {
    const GridSpec g(1.0, 10, 1);
    SUBCASE("linear curve ties break to the first step") {
      // Dyadic increments so that the ties are exact.
      const auto j = detect_jump(curve_ending_at(8, 0.5), GridSpec(1.0, 8, 1));
      CHECK(j.index == 1);
      CHECK(j.time == 0.125);
      CHECK(j.size == 0.0625);
    }
    SUBCASE("single step") {
      std::vector<double> v(11, 0.0);
      for (std::size_t k = 7; k <= 10; ++k) v[k] = 0.5;
      const auto j = detect_jump(LossCurve(1.0, v), g);
      CHECK(j.index == 7);
      CHECK(j.time == doctest::Approx(0.7));
      CHECK(j.size == 0.5);
    }
    SUBCASE("jump size is in L units") {
      std::vector<double> v(11, 0.0);
      for (std::size_t k = 3; k <= 10; ++k) v[k] = 1.2;
      CHECK(detect_jump(LossCurve(1.5, v), g).size == doctest::Approx(0.8));
    }
    SUBCASE("matches a linear scan on random curves") {
      std::mt19937_64 gen(9);
      std::uniform_int_distribution<int> inc(0, 5);
      for (int t = 0; t < 200; ++t) {
        std::vector<double> v(11, 0.0);
        for (std::size_t k = 1; k <= 10; ++k) v[k] = v[k - 1] + 0.01 * inc(gen);
        const LossCurve c(1.0, v);
        const auto j = detect_jump(c, g);
        double best = -1.0;
        for (std::size_t k = 1; k <= 10; ++k) best = std::max(best, c.fraction(k) - c.fraction(k - 1));
        CHECK(c.fraction(j.index) - c.fraction(j.index - 1) == best);
        for (std::size_t k = 1; k < j.index; ++k) CHECK(c.fraction(k) - c.fraction(k - 1) < best);
      }
    }
  }

  TEST_CASE("jump refinement estimators") {
    SUBCASE("unchanged jump time gives a zero estimator") {
      const JumpObservation obs[] = {{10, {5, 0.5, 0.7}}, {20, {10, 0.5, 0.75}}};
      const auto e = jump_refinement_estimators(1.0, obs);
      REQUIRE(e.size() == 1);
      CHECK(e[0].time_estimator == 0.0);
      CHECK(e[0].size_estimator == doctest::Approx(0.2));
      CHECK(e[0].h == 0.05);
    }
    SUBCASE("t* = c + sqrt(h)") {
      std::vector<JumpObservation> obs;
      for (std::size_t n : {16u, 32u, 64u, 128u}) {
        const double h = 1.0 / static_cast<double>(n);
        obs.push_back({n, {0, 0.3 + std::sqrt(h), 0.8}});
      }
      for (const auto& e : jump_refinement_estimators(1.0, obs))
        CHECK(e.time_estimator == doctest::Approx(4.0 * (std::sqrt(2.0) - 1.0) * std::sqrt(e.h)).epsilon(1e-12));
    }
    SUBCASE("validation") {
      const JumpObservation one[] = {{10, {5, 0.5, 0.7}}};
      CHECK_THROWS_AS(jump_refinement_estimators(1.0, one), NeedTwoLevels);
    }
  }

  TEST_CASE("weak feedback check") {
    SUBCASE("Gamma(2, 1/3): density peak 3/e at x = 1/3") {
      const auto law = InitialLaw::gamma(2.0, 1.0 / 3.0);
      // Dense grid search of the density as an independent maximum.
      double sup = 0.0;
      for (int i = 1; i <= 200000; ++i) sup = std::max(sup, *law.density(i * 1e-5));
      const auto weak = weak_feedback_check(0.5, law);
      CHECK(weak.alpha_times_density_sup == doctest::Approx(0.5 * sup).epsilon(1e-9));
      CHECK(weak.alpha_times_density_sup == doctest::Approx(1.5 / std::exp(1.0)).epsilon(1e-12));
      CHECK(weak.weak_feedback);
      CHECK_FALSE(weak.rate_slope);
      CHECK_FALSE(weak.consistent);

      const auto strong = weak_feedback_check(1.5, law);
      CHECK(strong.alpha_times_density_sup == doctest::Approx(4.5 / std::exp(1.0)).epsilon(1e-12));
      CHECK_FALSE(strong.weak_feedback);
    }
    SUBCASE("Uniform(0, 4) with alpha 1") {
      std::vector<Point> pts;
      for (double h = 1e-2; h > 1e-5; h /= 2) pts.push_back({h, std::sqrt(h)});
      const auto r = weak_feedback_check(1.0, InitialLaw::uniform(0.0, 4.0), pts);
      CHECK(r.alpha_times_density_sup == 0.25);
      CHECK(r.weak_feedback);
      REQUIRE(r.rate_slope);
      CHECK(*r.rate_slope >= kWeakFeedbackSlopeFloor);
      CHECK(r.consistent);
    }
    SUBCASE("log(h)^2 sqrt(h) series approaches slope 0.5") {
      double previous = -1.0;
      for (double finest : {1e-4, 1e-8, 1e-16, 1e-32}) {
        std::vector<Point> pts;
        for (double h = finest * 64; h >= finest; h /= 2) pts.push_back({h, std::log(h) * std::log(h) * std::sqrt(h)});
        const double slope = fit_study_order(pts, 0).slope;
        CHECK(slope < 0.5);
        CHECK(slope > previous);
        previous = slope;
      }
      CHECK(previous > 0.45);
    }
  }
}
