// SPDX-License-Identifier: Apache-2.0
#include "sgdlab/stats.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace sgdlab {

BatchMeans::BatchMeans(std::size_t channels, std::uint64_t batch_size)
    : channels_(channels), batch_size_(batch_size), current_(channels, 0.0) {
  if (channels == 0) throw InvalidArgument("BatchMeans: need at least one channel");
  if (batch_size == 0) throw InvalidArgument("BatchMeans: batch size must be positive");
}

void BatchMeans::add(std::span<const double> sample) {
  if (sample.size() != channels_) throw DimensionError("BatchMeans::add: channel count mismatch");
  for (std::size_t c = 0; c < channels_; ++c) current_[c] += sample[c];
  if (++filled_ == batch_size_) {
    const double inv = 1.0 / static_cast<double>(batch_size_);
    for (std::size_t c = 0; c < channels_; ++c) {
      batches_.push_back(current_[c] * inv);
      current_[c] = 0.0;
    }
    filled_ = 0;
  }
}

void BatchMeans::absorb(const BatchMeans& other) {
  if (other.channels_ != channels_) throw DimensionError("BatchMeans::absorb: channel count mismatch");
  batches_.insert(batches_.end(), other.batches_.begin(), other.batches_.end());
}

MeanWithError BatchMeans::summary(std::size_t channel) const {
  std::vector<double> coeffs(channels_, 0.0);
  coeffs.at(channel) = 1.0;
  return linear(coeffs);
}

std::vector<MeanWithError> BatchMeans::summary() const {
  std::vector<MeanWithError> out;
  out.reserve(channels_);
  for (std::size_t c = 0; c < channels_; ++c) out.push_back(summary(c));
  return out;
}

MeanWithError BatchMeans::linear(std::span<const double> coeffs) const {
  if (coeffs.size() != channels_) throw DimensionError("BatchMeans::linear: coefficient count mismatch");
  const std::size_t nb = num_batches();
  if (nb < 2) throw NoiseFloorError("batch means: fewer than two completed batches");
  std::vector<double> v(nb, 0.0);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t c = 0; c < channels_; ++c)
      if (coeffs[c] != 0.0) v[b] += coeffs[c] * batches_[b * channels_ + c];
  return mean_and_se(v);
}

MeanWithError mean_and_se(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) throw NoiseFloorError("mean_and_se: need at least two values");
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n))};
}

std::size_t ScalingFit::num_used() const {
  return static_cast<std::size_t>(std::count(used.begin(), used.end(), true));
}

namespace {

struct Line {
  double slope;
  double intercept;
};

Line ols(const std::vector<double>& lx, const std::vector<double>& ly) {
  const double n = static_cast<double>(lx.size());
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace

ScalingFit fit_loglog(std::vector<double> x, std::vector<double> y, std::vector<double> se,
                      double floor_sigmas, std::size_t min_points, double min_span) {
  if (x.size() != y.size() || x.size() != se.size())
    throw DimensionError("fit_loglog: abscissae, ordinates and errors differ in length");
  if (x.size() < min_points) {
    std::ostringstream os;
    os << "fit_loglog: grid has " << x.size() << " points, need " << min_points;
    throw InvalidArgument(os.str());
  }
  for (double v : x)
    if (!(v > 0.0)) throw InvalidArgument("fit_loglog: abscissae must be positive");
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (*hi / *lo < min_span * (1.0 - 1e-12)) {
    std::ostringstream os;
    os << "fit_loglog: grid spans a factor " << *hi / *lo << ", need " << min_span;
    throw InvalidArgument(os.str());
  }

  ScalingFit fit;
  fit.used.assign(x.size(), false);
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y[i] > 0.0 && y[i] > floor_sigmas * se[i]) {
      fit.used[i] = true;
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  fit.abscissae = std::move(x);
  fit.ordinates = std::move(y);
  fit.se = std::move(se);
  if (lx.size() < 3) {
    std::ostringstream os;
    os << "fit_loglog: only " << lx.size() << " points above the noise floor";
    throw NoiseFloorError(os.str());
  }

  const Line line = ols(lx, ly);
  fit.slope = line.slope;
  fit.intercept = line.intercept;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (line.intercept + line.slope * lx[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / static_cast<double>(lx.size()));

  // Leave-one-out jackknife for the slope.
  const std::size_t n = lx.size();
  std::vector<double> loo(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::vector<double> ax, ay;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == j) continue;
      ax.push_back(lx[i]);
      ay.push_back(ly[i]);
    }
    loo[j] = ols(ax, ay).slope;
  }
  const double mean_loo = std::accumulate(loo.begin(), loo.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double s : loo) var += (s - mean_loo) * (s - mean_loo);
  var *= static_cast<double>(n - 1) / static_cast<double>(n);
  fit.half_width = 1.96 * std::sqrt(var);
  return fit;
}

InversePowerFit fit_inverse_powers(std::span<const double> k, std::span<const double> y,
                                   std::span<const double> se) {
  if (k.size() != y.size() || k.size() != se.size())
    throw DimensionError("fit_inverse_powers: length mismatch");
  if (k.size() < 3) throw InvalidArgument("fit_inverse_powers: need at least three points");
  const bool weighted = std::all_of(se.begin(), se.end(), [](double s) { return s > 0.0; });
  const auto n = static_cast<Eigen::Index>(k.size());
  Matrix a(n, 2);
  Vector b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weighted ? 1.0 / se[static_cast<std::size_t>(i)] : 1.0;
    const double kk = k[static_cast<std::size_t>(i)];
    a(i, 0) = w / kk;
    a(i, 1) = w / (kk * kk);
    b(i) = w * y[static_cast<std::size_t>(i)];
  }
  const Eigen::ColPivHouseholderQR<Matrix> qr(a);
  const Vector c = qr.solve(b);
  const Matrix ata_inv = (a.transpose() * a).inverse();
  double scale = 1.0;
  if (!weighted) {
    const double rss = (a * c - b).squaredNorm();
    scale = n > 2 ? rss / static_cast<double>(n - 2) : 0.0;
  }
  InversePowerFit fit;
  fit.c1 = c(0);
  fit.c2 = c(1);
  fit.c1_se = std::sqrt(scale * ata_inv(0, 0));
  fit.c2_se = std::sqrt(scale * ata_inv(1, 1));
  return fit;
}

}  // namespace sgdlab
