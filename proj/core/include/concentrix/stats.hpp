#pragma once

#include <cstddef>
#include <span>

namespace concentrix {

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Exact two-sided Clopper-Pearson interval for `successes` out of `trials`
/// at the given confidence level (e.g. 0.99).
Interval clopper_pearson(std::size_t successes, std::size_t trials,
                         double confidence);

/// Two-sided standard-normal quantile z with P(|Z| <= z) = confidence.
double normal_two_sided_quantile(double confidence);

/// P(Z > z) for a standard normal Z.
double normal_upper_tail(double z);

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

/// Sample mean with standard error sd / sqrt(count) (unbiased variance).
MeanEstimate mean_with_stderr(std::span<const double> values);

/// Batch-means standard error of the mean of a (possibly correlated) series,
/// using `batches` equal consecutive batches (the tail remainder is dropped).
double batch_means_stderr(std::span<const double> series, std::size_t batches);

}  // namespace concentrix
