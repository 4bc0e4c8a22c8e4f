#pragma once

namespace sepsis {

double sigmoid(double x);
double logit(double p);

// Standard normal CDF and its inverse (Acklam initial guess + one Halley
// refinement; accurate to ~1e-15 over the open unit interval).
double normal_cdf(double x);
double normal_quantile(double p);

double truncated_normal_pdf(double x, double mean, double sd, double lo, double hi);

// Regularized incomplete beta I_x(a, b), series + continued-fraction (Lentz).
double reg_incomplete_beta(double a, double b, double x);

// Two-sided p-value for a t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

}  // namespace sepsis
