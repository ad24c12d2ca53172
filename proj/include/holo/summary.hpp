#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "holo/error.hpp"
#include "holo/inference.hpp"

namespace holo {

struct CredibleInterval {
  double level = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::array<double, 3> kCredibleLevels{0.68, 0.95, 0.99};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;
  double median = 0.0;
  std::array<CredibleInterval, kCredibleLevels.size()> intervals{};
  double map = 0.0;             // value at the maximum-posterior sample
  double autocorr_time = 0.0;   // integrated autocorrelation time, in steps
};

struct Summary {
  std::vector<ParamSummary> params;
  std::vector<double> correlation;  // dim x dim, row-major
  double map_log_posterior = 0.0;
  double mean_acceptance = 0.0;
  std::size_t samples = 0;

  std::size_t dim() const noexcept { return params.size(); }
  double corr(std::size_t i, std::size_t j) const { return correlation[i * dim() + j]; }
  const ParamSummary& param(const std::string& name) const {
    for (const auto& p : params) {
      if (p.name == name) return p;
    }
    throw ValueError("no summary for parameter '" + name + "'");
  }
};

/// Quantile with linear interpolation between order statistics of a
/// sorted sample.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValueError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

/// Integrated autocorrelation time of parameter p, averaging the
/// autocovariance over walkers and truncating the sum with Sokal's
/// adaptive window (c = 5).
inline double autocorrelation_time(const SampleSet& s, std::size_t p) {
  const std::size_t n = s.steps;
  if (n < 2) return 1.0;
  std::vector<double> means(s.walkers, 0.0);
  for (std::size_t w = 0; w < s.walkers; ++w) {
    for (std::size_t t = 0; t < n; ++t) means[w] += s.at(w, t, p);
    means[w] /= static_cast<double>(n);
  }
  auto acov = [&](std::size_t lag) {
    double sum = 0.0;
    for (std::size_t w = 0; w < s.walkers; ++w) {
      for (std::size_t t = 0; t + lag < n; ++t) sum += (s.at(w, t, p) - means[w]) * (s.at(w, t + lag, p) - means[w]);
    }
    return sum / static_cast<double>(s.walkers * n);
  };
  const double c0 = acov(0);
  if (!(c0 > 0.0)) return 1.0;
  double tau = 1.0;
  for (std::size_t lag = 1; lag < n; ++lag) {
    tau += 2.0 * acov(lag) / c0;
    if (static_cast<double>(lag) >= 5.0 * tau) break;
  }
  return std::max(tau, 1.0);
}

/// Statistics over all retained samples pooled across walkers.
inline Summary summarize(const SampleSet& s) {
  const std::size_t n = s.count();
  const std::size_t d = s.dim();
  if (n == 0 || d == 0) throw ValueError("cannot summarize an empty sample set");
  Summary out;
  out.samples = n;
  out.params.resize(d);

  std::size_t best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (s.log_posterior[i] > s.log_posterior[best]) best = i;
  }
  out.map_log_posterior = s.log_posterior[best];

  std::vector<double> means(d, 0.0);
  std::vector<double> column(n);
  for (std::size_t p = 0; p < d; ++p) {
    for (std::size_t i = 0; i < n; ++i) column[i] = s.samples[i * d + p];
    double mean = 0.0;
    for (double v : column) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    auto& ps = out.params[p];
    ps.name = s.names[p];
    ps.mean = mean;
    ps.std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    ps.map = s.samples[best * d + p];
    std::sort(column.begin(), column.end());
    ps.median = quantile_sorted(column, 0.5);
    for (std::size_t l = 0; l < kCredibleLevels.size(); ++l) {
      const double tail = 0.5 * (1.0 - kCredibleLevels[l]);
      ps.intervals[l] = {kCredibleLevels[l], quantile_sorted(column, tail), quantile_sorted(column, 1.0 - tail)};
    }
    ps.autocorr_time = autocorrelation_time(s, p);
    means[p] = mean;
  }

  out.correlation.assign(d * d, 0.0);
  std::vector<double> cov(d * d, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = s.samples.data() + i * d;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov[a * d + b] += (row[a] - means[a]) * (row[b] - means[b]);
    }
  }
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a; b < d; ++b) {
      const double denom = std::sqrt(cov[a * d + a] * cov[b * d + b]);
      const double r = denom > 0.0 ? cov[a * d + b] / denom : std::numeric_limits<double>::quiet_NaN();
      out.correlation[a * d + b] = r;
      out.correlation[b * d + a] = r;
    }
  }

  double acc = 0.0;
  for (double a : s.acceptance) acc += a;
  out.mean_acceptance = s.acceptance.empty() ? 0.0 : acc / static_cast<double>(s.acceptance.size());
  return out;
}

struct HistogramBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
};

/// Equal-width marginal histogram of parameter p over the sample range.
inline std::vector<HistogramBin> marginal_histogram(const SampleSet& s, std::size_t p, std::size_t bins = 30) {
  if (s.count() == 0) throw ValueError("cannot histogram an empty sample set");
  if (p >= s.dim()) throw BoundsError("parameter index " + std::to_string(p) + " out of range");
  if (bins < 1) throw ValueError("histogram needs at least one bin");
  const std::size_t d = s.dim();
  double lo = s.samples[p], hi = s.samples[p];
  for (std::size_t i = 0; i < s.count(); ++i) {
    lo = std::min(lo, s.samples[i * d + p]);
    hi = std::max(hi, s.samples[i * d + p]);
  }
  if (hi == lo) {
    // Degenerate sample: a single bin of zero width.
    return {{lo, hi, s.count()}};
  }
  const double width = (hi - lo) / static_cast<double>(bins);
  std::vector<HistogramBin> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    out[b].lo = lo + width * static_cast<double>(b);
    out[b].hi = b + 1 == bins ? hi : lo + width * static_cast<double>(b + 1);
  }
  for (std::size_t i = 0; i < s.count(); ++i) {
    auto b = static_cast<std::size_t>((s.samples[i * d + p] - lo) / width);
    ++out[std::min(b, bins - 1)].count;
  }
  return out;
}

}  // namespace holo
