#pragma once

#include <span>
#include <vector>

namespace proxiphene {

double mean(std::span<const double> v);
/// Sample standard deviation (n - 1); 0 for fewer than two values.
double sample_sd(std::span<const double> v);

/// Two-sided p-value of a standard-normal z statistic.
double normal_two_sided_p(double z);

/// Upper-tail probability P(X > x) for X ~ chi-squared(df); df = 0 gives 1 for x <= 0.
double chi_squared_upper_tail(double x, double df);
/// x such that P(X > x) = alpha for X ~ chi-squared(df).
double chi_squared_critical(double alpha, double df);

/// 1-based ranks; ties receive the average of the ranks they span.
std::vector<double> average_ranks(std::span<const double> v);
/// Pearson correlation; returns 0 when either input is constant.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

/// Linear-interpolated quantile (type 7) of an unsorted sample, q in [0, 1].
double quantile(std::vector<double> v, double q);

}  // namespace proxiphene
