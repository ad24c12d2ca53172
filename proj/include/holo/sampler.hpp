#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "holo/error.hpp"
#include "holo/random.hpp"

/// Affine-invariant ensemble sampler (Goodman & Weare stretch move).
namespace holo {

using LogProbFn = std::function<double(std::span<const double>)>;

/// Walker positions (row per walker) and their log probabilities.
struct Ensemble {
  std::size_t dim = 0;
  std::vector<double> positions;  // walkers x dim
  std::vector<double> log_prob;

  std::size_t walkers() const noexcept { return log_prob.size(); }
  std::span<double> walker(std::size_t k) noexcept { return {positions.data() + k * dim, dim}; }
  std::span<const double> walker(std::size_t k) const noexcept { return {positions.data() + k * dim, dim}; }
};

/// Stretch factor z on [1/a, a] with density proportional to 1/sqrt(z),
/// by inversion of its CDF.
inline double draw_stretch(Rng& rng, double a) {
  const double u = rng.uniform();
  const double t = (a - 1.0) * u + 1.0;
  return t * t / a;
}

inline bool ensemble_collapsed(const Ensemble& e) {
  for (std::size_t k = 1; k < e.walkers(); ++k) {
    const auto w0 = e.walker(0);
    const auto wk = e.walker(k);
    for (std::size_t d = 0; d < e.dim; ++d) {
      if (w0[d] != wk[d]) return false;
    }
  }
  return true;
}

/// One parallel stretch-move sweep. The ensemble is split into halves
/// [0, K/2) and [K/2, K); each half is updated against the current
/// positions of the other. Walker k draws from rngs[k] only, so the result
/// is the same for any thread count. Returns per-walker acceptance flags.
inline std::vector<char> stretch_move(Ensemble& e, const LogProbFn& log_prob, std::span<Rng> rngs,
                                      double a = 2.0, std::size_t threads = 1) {
  const std::size_t n = e.walkers();
  if (n < 2) throw InferenceError("stretch move needs at least 2 walkers, got " + std::to_string(n));
  if (rngs.size() != n) throw InferenceError("stretch move needs one random stream per walker");
  if (!(a > 1.0)) throw ValueError("stretch scale a must exceed 1");
  for (std::size_t k = 0; k < n; ++k) {
    if (!std::isfinite(e.log_prob[k])) {
      throw InferenceError("walker " + std::to_string(k) + " has a non-finite log probability");
    }
  }
  if (ensemble_collapsed(e)) throw InferenceError("ensemble collapsed: all walkers are identical");

  const std::size_t d = e.dim;
  std::vector<char> accepted(n, 0);
  const std::size_t half = n / 2;
  const std::size_t bounds[3] = {0, half, n};
  std::vector<double> proposal;
  std::vector<double> stretch;
  std::vector<double> proposal_lp;

  for (int h = 0; h < 2; ++h) {
    const std::size_t lo = bounds[h], hi = bounds[h + 1];
    const std::size_t olo = bounds[1 - h], ohi = bounds[2 - h];
    const std::size_t m = hi - lo;
    proposal.assign(m * d, 0.0);
    stretch.assign(m, 0.0);
    proposal_lp.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = lo + i;
      Rng& rng = rngs[k];
      const std::size_t j = olo + static_cast<std::size_t>(rng.below(ohi - olo));
      const double z = draw_stretch(rng, a);
      stretch[i] = z;
      const auto xk = e.walker(k);
      const auto xj = e.walker(j);
      for (std::size_t p = 0; p < d; ++p) proposal[i * d + p] = xj[p] + z * (xk[p] - xj[p]);
    }
    parallel_for(m, threads, [&](std::size_t i) {
      proposal_lp[i] = log_prob(std::span<const double>(proposal.data() + i * d, d));
    });
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t k = lo + i;
      const double u = rngs[k].uniform();
      const double lp = proposal_lp[i];
      if (std::isnan(lp) || lp == -std::numeric_limits<double>::infinity()) continue;
      const double log_ratio = (static_cast<double>(d) - 1.0) * std::log(stretch[i]) + lp - e.log_prob[k];
      if (std::log(u) < log_ratio) {
        auto xk = e.walker(k);
        for (std::size_t p = 0; p < d; ++p) xk[p] = proposal[i * d + p];
        e.log_prob[k] = lp;
        accepted[k] = 1;
      }
    }
  }
  return accepted;
}

/// Evaluates log_prob for each walker in place, in parallel when requested.
inline void evaluate_ensemble(Ensemble& e, const LogProbFn& log_prob, std::size_t threads = 1) {
  e.log_prob.resize(e.positions.size() / (e.dim ? e.dim : 1));
  parallel_for(e.walkers(), threads, [&](std::size_t k) { e.log_prob[k] = log_prob(e.walker(k)); });
}

}  // namespace holo
