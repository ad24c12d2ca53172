#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/forward.hpp"
#include "holo/likelihood.hpp"
#include "holo/random.hpp"
#include "holo/sampler.hpp"

namespace holo {

/// Pixel-subset size: an absolute count, a fraction of the image, or all
/// pixels. Counts above the image size clamp to the image size.
struct SubsetSize {
  std::size_t count = 0;  // 0: use fraction
  double fraction = 1.0;

  static SubsetSize all() { return {0, 1.0}; }
  static SubsetSize of_count(std::size_t n) {
    if (n < 1) throw ValueError("subset count must be at least 1");
    return {n, 1.0};
  }
  static SubsetSize of_fraction(double f) {
    if (!(f > 0.0 && f <= 1.0)) throw ValueError("subset fraction must lie in (0, 1], got " + format_double(f));
    return {0, f};
  }

  bool is_all() const noexcept { return count == 0 && fraction == 1.0; }

  std::size_t resolve(std::size_t total) const {
    if (count > 0) return std::min(count, total);
    const auto n = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(total)));
    return std::clamp<std::size_t>(n, 1, total);
  }

  friend bool operator==(const SubsetSize&, const SubsetSize&) = default;
};

struct Stage {
  SubsetSize subset;
  std::size_t walkers = 100;
  std::size_t steps = 100;
  double burn_in = 0.0;  // fraction of steps discarded; only the last stage keeps samples

  friend bool operator==(const Stage&, const Stage&) = default;
};

/// Sampling schedule. Early stages localise the posterior on small pixel
/// subsets; the last stage produces the returned samples.
struct Strategy {
  std::vector<Stage> stages;
  std::uint64_t seed = 0;
  double stretch = 2.0;
  double init_spread = 0.05;    // first-stage walker spread around the guess, in prior scales
  double reseed_jitter = 1e-4;  // between-stage jitter, in prior scales
  std::size_t threads = 1;

  /// Default schedule: (50 px, 200 steps), (200 px, 300 steps), then the
  /// final subset for `final_steps` steps with half discarded as burn-in.
  static Strategy tempered(SubsetSize final_subset = SubsetSize::all(), std::uint64_t seed = 0,
                           std::size_t walkers = 100, std::size_t final_steps = 1000) {
    Strategy s;
    s.seed = seed;
    s.stages = {{SubsetSize::of_count(50), walkers, 200, 0.0},
                {SubsetSize::of_count(200), walkers, 300, 0.0},
                {final_subset, walkers, final_steps, 0.5}};
    return s;
  }

  const Stage& final_stage() const { return stages.back(); }

  friend bool operator==(const Strategy&, const Strategy&) = default;
};

/// Post-burn-in samples of the final stage plus full provenance.
struct SampleSet {
  std::vector<std::string> names;
  std::size_t walkers = 0;
  std::size_t steps = 0;              // retained steps per walker
  std::vector<double> samples;        // walker x step x param
  std::vector<double> log_posterior;  // walker x step
  std::vector<double> acceptance;     // per walker, over the whole final stage
  std::vector<std::size_t> subset;    // pixel indices used by the final stage
  Strategy strategy;
  std::shared_ptr<const AlphaModel> model;
  double noise_sigma = 0.0;

  std::size_t dim() const noexcept { return names.size(); }
  std::size_t count() const noexcept { return walkers * steps; }
  double at(std::size_t walker, std::size_t step, std::size_t param) const {
    return samples[(walker * steps + step) * dim() + param];
  }
  double log_post(std::size_t walker, std::size_t step) const { return log_posterior[walker * steps + step]; }
};

namespace detail {

inline void check_strategy(const Strategy& s, std::size_t dim) {
  if (s.stages.empty()) throw ValueError("strategy has no stages");
  for (std::size_t i = 0; i < s.stages.size(); ++i) {
    const auto& st = s.stages[i];
    if (st.walkers < 2 * dim || st.walkers < 2) {
      throw ValueError("stage " + std::to_string(i) + " has " + std::to_string(st.walkers) +
                       " walkers; need at least 2 x " + std::to_string(dim) + " free parameters");
    }
    if (st.steps < 1) throw ValueError("stage " + std::to_string(i) + " has no steps");
    if (!(st.burn_in >= 0.0 && st.burn_in < 1.0)) throw ValueError("burn-in fraction must lie in [0, 1)");
  }
}

constexpr int kMaxInitTries = 1000;

inline Ensemble initial_ensemble(const LogPosterior& post, std::span<const double> guess,
                                 std::span<const Prior> priors, std::size_t walkers, double spread, Rng& rng,
                                 std::size_t threads) {
  const std::size_t d = guess.size();
  Ensemble e;
  e.dim = d;
  e.positions.assign(walkers * d, 0.0);
  e.log_prob.assign(walkers, -std::numeric_limits<double>::infinity());
  // Draw every walker first, then score; redraw only the non-finite ones.
  std::vector<std::size_t> pending(walkers);
  for (std::size_t k = 0; k < walkers; ++k) pending[k] = k;
  for (int attempt = 0; attempt < kMaxInitTries && !pending.empty(); ++attempt) {
    for (auto k : pending) {
      auto w = e.walker(k);
      for (std::size_t p = 0; p < d; ++p) w[p] = guess[p] + spread * priors[p].scale() * rng.normal();
    }
    parallel_for(pending.size(), threads, [&](std::size_t i) { e.log_prob[pending[i]] = post(e.walker(pending[i])); });
    std::erase_if(pending, [&](std::size_t k) { return std::isfinite(e.log_prob[k]); });
  }
  if (!pending.empty()) {
    throw InferenceError("no finite-posterior starting point found for " + std::to_string(pending.size()) +
                         " walkers after " + std::to_string(kMaxInitTries) + " attempts");
  }
  return e;
}

// Resamples the previous cloud with weights exp(logp - max), then jitters
// each copy so that no two walkers coincide.
inline Ensemble reseed_ensemble(const Ensemble& prev, const LogPosterior& post, std::span<const Prior> priors,
                                std::size_t walkers, double jitter, Rng& rng, std::size_t threads) {
  const std::size_t d = prev.dim;
  const double top = *std::max_element(prev.log_prob.begin(), prev.log_prob.end());
  std::vector<double> cdf(prev.walkers());
  double acc = 0.0;
  for (std::size_t k = 0; k < prev.walkers(); ++k) {
    acc += std::exp(prev.log_prob[k] - top);
    cdf[k] = acc;
  }
  std::vector<std::size_t> parent(walkers);
  for (auto& p : parent) {
    const double u = rng.uniform() * acc;
    p = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    p = std::min(p, prev.walkers() - 1);
  }
  Ensemble e;
  e.dim = d;
  e.positions.assign(walkers * d, 0.0);
  e.log_prob.assign(walkers, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> pending(walkers);
  for (std::size_t k = 0; k < walkers; ++k) pending[k] = k;
  for (int attempt = 0; attempt < kMaxInitTries && !pending.empty(); ++attempt) {
    for (auto k : pending) {
      const auto src = prev.walker(parent[k]);
      auto w = e.walker(k);
      for (std::size_t p = 0; p < d; ++p) w[p] = src[p] + jitter * priors[p].scale() * rng.normal();
    }
    parallel_for(pending.size(), threads, [&](std::size_t i) { e.log_prob[pending[i]] = post(e.walker(pending[i])); });
    std::erase_if(pending, [&](std::size_t k) { return std::isfinite(e.log_prob[k]); });
  }
  if (!pending.empty()) throw InferenceError("could not reseed walkers with a finite posterior between stages");
  return e;
}

}  // namespace detail

/// Runs the staged ensemble sampler on `data`. The model's ParamSpec holds
/// the free parameters, their priors and the initial guess.
inline SampleSet run_inference(const AlphaModel& model, const Hologram& data, NoiseModel noise,
                               const Strategy& strategy) {
  const auto& spec = model.spec();
  const std::size_t d = spec.free_count();
  if (d == 0) throw ValueError("model has no free parameters");
  detail::check_strategy(strategy, d);
  const auto priors = spec.free_priors();
  const auto guess = spec.guess();
  if (!std::isfinite(log_prior(priors, guess))) throw InferenceError("initial guess lies outside the prior support");

  const std::size_t total = data.grid().size();
  Ensemble ensemble;
  SampleSet out;
  out.names = spec.free_names();
  out.strategy = strategy;
  out.model = std::make_shared<AlphaModel>(model);
  out.noise_sigma = noise.sigma;

  for (std::size_t s = 0; s < strategy.stages.size(); ++s) {
    const Stage& stage = strategy.stages[s];
    const bool last = s + 1 == strategy.stages.size();
    const std::size_t count = stage.subset.resolve(total);
    auto subset = random_subset(data.grid(), count, derive_seed(strategy.seed, 1, s));
    LogPosterior post(Likelihood(model, data, noise, subset));
    const LogProbFn fn = [&post](std::span<const double> v) { return post(v); };

    Rng init_rng(derive_seed(strategy.seed, 2, s));
    ensemble = s == 0 ? detail::initial_ensemble(post, guess, priors, stage.walkers, strategy.init_spread, init_rng,
                                                 strategy.threads)
                      : detail::reseed_ensemble(ensemble, post, priors, stage.walkers, strategy.reseed_jitter,
                                                init_rng, strategy.threads);

    std::vector<Rng> rngs;
    rngs.reserve(stage.walkers);
    for (std::size_t k = 0; k < stage.walkers; ++k) rngs.emplace_back(derive_seed(strategy.seed, 3 + s, k));

    const auto burn = static_cast<std::size_t>(std::floor(stage.burn_in * static_cast<double>(stage.steps)));
    const std::size_t kept = stage.steps - burn;
    std::vector<std::size_t> accepted(stage.walkers, 0);
    if (last) {
      out.walkers = stage.walkers;
      out.steps = kept;
      out.samples.assign(stage.walkers * kept * d, 0.0);
      out.log_posterior.assign(stage.walkers * kept, 0.0);
      out.subset = subset;
    }
    for (std::size_t t = 0; t < stage.steps; ++t) {
      const auto flags = stretch_move(ensemble, fn, rngs, strategy.stretch, strategy.threads);
      for (std::size_t k = 0; k < flags.size(); ++k) accepted[k] += flags[k];
      if (last && t >= burn) {
        const std::size_t step = t - burn;
        for (std::size_t k = 0; k < stage.walkers; ++k) {
          const auto w = ensemble.walker(k);
          std::copy(w.begin(), w.end(), out.samples.begin() + static_cast<std::ptrdiff_t>((k * kept + step) * d));
          out.log_posterior[k * kept + step] = ensemble.log_prob[k];
        }
      }
    }
    if (last) {
      out.acceptance.resize(stage.walkers);
      for (std::size_t k = 0; k < stage.walkers; ++k) {
        out.acceptance[k] = static_cast<double>(accepted[k]) / static_cast<double>(stage.steps);
      }
    }
  }
  return out;
}

}  // namespace holo
