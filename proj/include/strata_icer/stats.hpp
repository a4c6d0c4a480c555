#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace strata_icer {

/// Welford running moments. Feeding identical values yields a mean equal to
/// that value and a variance of exactly zero, which the zero-noise guarantees
/// of the estimator depend on. Sample variance uses the n-1 denominator.
class RunningStats {
 public:
  void add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }

  std::size_t count() const { return count_; }
  double mean() const { return mean_; }

  double sample_variance() const {
    return count_ > 1 ? m2_ / static_cast<double>(count_ - 1) : 0.0;
  }

  double sample_sd() const { return std::sqrt(sample_variance()); }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline RunningStats accumulate(std::span<const double> xs) {
  RunningStats s;
  for (double x : xs) s.add(x);
  return s;
}

}  // namespace strata_icer
