#pragma once

#include <span>
#include <vector>

namespace mottlab::lab {

double mean(std::span<const double> v);
// Sample standard deviation (n - 1).
double stddev(std::span<const double> v);
// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> v, double q);
double median(std::vector<double> v);
/// Large-sample standard error of the median, sqrt(pi/2) sd / sqrt(n).
double median_stderr(std::span<const double> v);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  std::size_t n = 0;
};

LinearFit linear_fit(std::span<const double> x, std::span<const double> y);

}  // namespace mottlab::lab
