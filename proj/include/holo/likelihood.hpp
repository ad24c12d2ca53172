#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/forward.hpp"
#include "holo/prior.hpp"
#include "holo/random.hpp"

namespace holo {

/// Per-pixel Gaussian noise level, in hologram intensity units.
struct NoiseModel {
  double sigma = 0.0;

  explicit NoiseModel(double s) : sigma(s) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValueError("noise sigma must be positive, got " + format_double(sigma));
  }

  /// Standard deviation of the pixels in a particle-free window.
  static NoiseModel from_region(const Hologram& h, std::size_t i0, std::size_t j0, std::size_t w, std::size_t hgt) {
    const auto region = crop(h, i0, j0, w, hgt);
    const auto& v = region.data();
    if (v.size() < 2) throw ValueError("noise region needs at least two pixels");
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return NoiseModel(std::sqrt(ss / static_cast<double>(v.size() - 1)));
  }
};

/// `count` distinct flat pixel indices drawn uniformly without replacement,
/// returned in ascending order. Deterministic for a given seed.
inline std::vector<std::size_t> random_subset(const DetectorGrid& grid, std::size_t count, std::uint64_t seed) {
  const std::size_t total = grid.size();
  if (count < 1 || count > total) {
    throw BoundsError("subset size " + std::to_string(count) + " outside [1, " + std::to_string(total) + "]");
  }
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count == total) return idx;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Gaussian log-likelihood of a hologram restricted to a pixel subset:
///   -sum (d - m)^2 / (2 sigma^2) - N log(sigma sqrt(2 pi)).
/// Invalid parameters score -inf.
class Likelihood {
 public:
  /// An empty subset means every pixel.
  Likelihood(AlphaModel model, const Hologram& data, NoiseModel noise, std::vector<std::size_t> subset = {})
      : model_(std::move(model)), noise_(noise), subset_(std::move(subset)) {
    if (subset_.empty()) {
      subset_.resize(data.grid().size());
      std::iota(subset_.begin(), subset_.end(), std::size_t{0});
    }
    for (auto k : subset_) {
      if (k >= data.grid().size()) throw BoundsError("subset index " + std::to_string(k) + " outside the hologram");
    }
    points_ = reduced_pixel_points(data.grid(), model_.optics(), subset_);
    values_.reserve(subset_.size());
    for (auto k : subset_) values_.push_back(data.data()[k]);
    norm_ = static_cast<double>(subset_.size()) * std::log(noise_.sigma * std::sqrt(2.0 * std::numbers::pi));
  }

  double operator()(std::span<const double> params) const {
    if (!model_.decode(params).valid()) return -std::numeric_limits<double>::infinity();
    const auto predicted = model_.intensities(params, points_);
    double chi2 = 0.0;
    for (std::size_t p = 0; p < predicted.size(); ++p) {
      const double r = values_[p] - predicted[p];
      chi2 += r * r;
    }
    return -chi2 / (2.0 * noise_.sigma * noise_.sigma) - norm_;
  }

  const AlphaModel& model() const noexcept { return model_; }
  const std::vector<std::size_t>& subset() const noexcept { return subset_; }
  std::size_t size() const noexcept { return subset_.size(); }

 private:
  AlphaModel model_;
  NoiseModel noise_;
  std::vector<std::size_t> subset_;
  std::vector<Vec3> points_;
  std::vector<double> values_;
  double norm_ = 0.0;
};

inline double log_likelihood(const AlphaModel& model, std::span<const double> params, const Hologram& data,
                             NoiseModel noise, std::vector<std::size_t> subset = {}) {
  return Likelihood(model, data, noise, std::move(subset))(params);
}

/// log prior + log likelihood; the likelihood is skipped outside the prior
/// support.
class LogPosterior {
 public:
  explicit LogPosterior(Likelihood lik) : lik_(std::move(lik)), priors_(lik_.model().spec().free_priors()) {}

  double operator()(std::span<const double> params) const {
    const double lp = log_prior(priors_, params);
    if (lp == -std::numeric_limits<double>::infinity()) return lp;
    return lp + lik_(params);
  }

  const Likelihood& likelihood() const noexcept { return lik_; }

 private:
  Likelihood lik_;
  std::vector<Prior> priors_;
};

}  // namespace holo
