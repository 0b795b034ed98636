#include "concentrix/stats.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "concentrix/errors.hpp"

namespace concentrix {

Interval clopper_pearson(std::size_t successes, std::size_t trials,
                         double confidence) {
  if (trials == 0 || successes > trials) {
    throw Error(ErrorKind::kInvalidArgument,
                "clopper_pearson: need 0 <= successes <= trials, trials > 0");
  }
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument,
                "clopper_pearson: confidence must lie in (0, 1)");
  }
  const double tail = 0.5 * (1.0 - confidence);
  const double x = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  Interval ci;
  ci.low = successes == 0 ? 0.0
                          : boost::math::ibeta_inv(x, n - x + 1.0, tail);
  ci.high = successes == trials
                ? 1.0
                : boost::math::ibeta_inv(x + 1.0, n - x, 1.0 - tail);
  return ci;
}

double normal_two_sided_quantile(double confidence) {
  const boost::math::normal standard;
  return boost::math::quantile(standard, 0.5 + 0.5 * confidence);
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

MeanEstimate mean_with_stderr(std::span<const double> values) {
  MeanEstimate est;
  est.count = values.size();
  if (values.empty()) return est;
  double sum = 0.0;
  for (double v : values) sum += v;
  est.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return est;
  double ss = 0.0;
  for (double v : values) ss += (v - est.mean) * (v - est.mean);
  const double n = static_cast<double>(values.size());
  est.std_error = std::sqrt(ss / (n - 1.0) / n);
  return est;
}

double batch_means_stderr(std::span<const double> series, std::size_t batches) {
  if (batches < 2 || series.size() < batches) {
    throw Error(ErrorKind::kInvalidArgument,
                "batch_means_stderr: need at least two non-empty batches");
  }
  const std::size_t len = series.size() / batches;
  double grand = 0.0;
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t t = b * len; t < (b + 1) * len; ++t) s += series[t];
    means[b] = s / static_cast<double>(len);
    grand += means[b];
  }
  grand /= static_cast<double>(batches);
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);
  const double b = static_cast<double>(batches);
  return std::sqrt(ss / (b - 1.0) / b);
}

}  // namespace concentrix
