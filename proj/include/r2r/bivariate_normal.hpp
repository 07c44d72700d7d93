#pragma once

namespace r2r {

double normal_pdf(double x);
/// Standard normal CDF via erfc (accurate in both tails).
double normal_cdf(double x);

/// L(h, k; r) = P(X > h, Y > k) for standard bivariate normal (X, Y) with
/// correlation r in [-1, 1]. Drezner-Wesolowsky / Genz Gauss-Legendre
/// scheme, absolute error below 1e-14 across the parameter range.
double bivariate_normal_upper(double h, double k, double r);

}  // namespace r2r
