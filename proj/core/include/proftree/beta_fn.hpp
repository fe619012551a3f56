#pragma once

namespace proftree {

/// log of the complete beta function B(a, b), a > 0, b > 0.
double log_beta(double a, double b);

/// Regularized incomplete beta function I_x(a, b) for a > 0, b > 0,
/// x in [0, 1]. Continued-fraction evaluation (modified Lentz), relative
/// tolerance 1e-12. Throws NumericError if the fraction does not converge.
double ibeta(double a, double b, double x);

/// Density of the Beta(a, b) distribution at x.
double beta_pdf(double a, double b, double x);

}  // namespace proftree
