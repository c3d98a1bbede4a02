#pragma once

#include <span>

namespace eegdiff::eval {

// I_x(a, b) by the modified Lentz continued fraction, converged to a
// relative change below 1e-10 per term.
double regularized_incomplete_beta(double a, double b, double x);

// P(T <= t) for Student's t with dof degrees of freedom.
double student_t_cdf(double t, double dof);

struct TTestResult {
  double t_statistic = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;  // two-sided
  bool significant = false;
};

// Paired t-test on d = a - b. Throws when n < 2 or the differences have
// zero variance.
TTestResult paired_ttest(std::span<const double> a, std::span<const double> b, double alpha = 0.05);

}  // namespace eegdiff::eval
