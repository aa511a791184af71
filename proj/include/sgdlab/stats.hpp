// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sgdlab/types.hpp"

namespace sgdlab {

struct MeanWithError {
  double mean = 0.0;
  double se = 0.0;
};

/// Batch-means accumulator for a fixed number of scalar channels.
///
/// Samples are summed into consecutive batches of batch_size; the standard
/// error of the overall mean is the standard deviation of the batch means
/// over √(number of batches). Partial trailing batches are dropped.
class BatchMeans {
 public:
  BatchMeans(std::size_t channels, std::uint64_t batch_size);

  void add(std::span<const double> sample);

  /// Appends another accumulator's completed batches (replica pooling).
  void absorb(const BatchMeans& other);

  std::size_t channels() const { return channels_; }
  std::uint64_t batch_size() const { return batch_size_; }
  std::size_t num_batches() const { return batches_.size() / channels_; }
  /// Mean of channel c in batch b.
  double batch_mean(std::size_t b, std::size_t c) const { return batches_[b * channels_ + c]; }

  /// Throws NoiseFloorError with fewer than two completed batches.
  MeanWithError summary(std::size_t channel) const;
  std::vector<MeanWithError> summary() const;

  /// Mean and SE of Σ_c coeffs[c]·channel c, from the combined batch series.
  MeanWithError linear(std::span<const double> coeffs) const;

 private:
  std::size_t channels_;
  std::uint64_t batch_size_;
  std::uint64_t filled_ = 0;
  std::vector<double> current_;
  std::vector<double> batches_;
};

/// Mean and standard error of independent values.
MeanWithError mean_and_se(std::span<const double> values);

/// Log-log least-squares fit y ≈ e^a · x^slope.
struct ScalingFit {
  std::vector<double> abscissae;
  std::vector<double> ordinates;
  std::vector<double> se;
  std::vector<bool> used;  // false: excluded as below the noise floor
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;    // RMS residual in log space
  double half_width = 0.0;  // jackknife 95% half-width of the slope

  std::size_t num_used() const;
};

/// OLS on (log x, log y) over points with y > floor_sigmas·se (y must be
/// positive). Throws NoiseFloorError when fewer than three points survive and
/// InvalidArgument when the grid has fewer than min_points points or spans
/// less than min_span (ratio max/min of x).
ScalingFit fit_loglog(std::vector<double> x, std::vector<double> y, std::vector<double> se,
                      double floor_sigmas = 3.0, std::size_t min_points = 4,
                      double min_span = 10.0);

/// Weighted least squares y ≈ c1/k + c2/k². Weights are 1/se² when every se
/// is positive, otherwise uniform.
struct InversePowerFit {
  double c1 = 0.0;
  double c2 = 0.0;
  double c1_se = 0.0;
  double c2_se = 0.0;
};

InversePowerFit fit_inverse_powers(std::span<const double> k, std::span<const double> y,
                                   std::span<const double> se);

}  // namespace sgdlab
