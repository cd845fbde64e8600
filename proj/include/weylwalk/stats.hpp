#pragma once

#include <cstddef>
#include <vector>

namespace weylwalk {

double sample_mean(const std::vector<double>& x);
/// Unbiased (n - 1) standard deviation; 0 for fewer than two values.
double sample_stddev(const std::vector<double>& x);
/// Linear-interpolated quantile, q in [0, 1]. Copies and sorts.
double quantile(std::vector<double> x, double q);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  std::size_t n = 0;
  /// Two-sided p-value for slope = 0 (Student t, n - 2 dof); 1 when n < 3.
  double p_value = 1.0;
};

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sided Student t critical value at level alpha.
double student_t_critical(double alpha, double dof);

}  // namespace weylwalk
