#pragma once

#include <span>

namespace spdemil {

/// Least-squares slope of log(y) against log(x). Throws InvalidArgument for
/// fewer than two points, non-positive data, or a degenerate x range.
double fit_loglog_slope(std::span<const double> x, std::span<const double> y);

/// Pairwise (cascade) summation; result does not depend on how the caller
/// scheduled the production of the terms.
double pairwise_sum(std::span<const double> values);

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); zero for n < 2.
double sample_std(std::span<const double> values);

}  // namespace spdemil
