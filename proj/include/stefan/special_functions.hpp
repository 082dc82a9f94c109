#pragma once

namespace stefan {

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
/// Series for x < a + 1, continued fraction otherwise; absolute error
/// below 1e-12 over the parameter range used here.
double regularized_gamma_p(double a, double x);

}  // namespace stefan
