#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/inference.hpp"
#include "holo/summary.hpp"

namespace holo {

struct FrameResult {
  std::size_t frame = 0;
  Summary summary;
};

/// Per-frame summaries in frame order. When a frame fails, `error` holds
/// its context and `frames` the results completed before it.
struct Trajectory {
  std::vector<FrameResult> frames;
  std::optional<std::string> error;

  bool complete() const noexcept { return !error.has_value(); }
};

/// Seed used for frame t; frame 0 keeps the strategy seed unchanged.
inline std::uint64_t frame_seed(std::uint64_t seed, std::size_t t) {
  return t == 0 ? seed : derive_seed(seed, 0x7472616bULL, t);
}

/// Fits frames strictly in order. Frame 0 starts from the model's guess;
/// every later frame starts at the previous posterior mean with the priors
/// recentered there (widths unchanged).
inline Trajectory track_timeseries(std::span<const Hologram> frames, const AlphaModel& model, NoiseModel noise,
                                   const Strategy& strategy) {
  if (frames.empty()) throw ValueError("track_timeseries needs at least one frame");
  for (std::size_t t = 1; t < frames.size(); ++t) {
    if (!(frames[t].grid() == frames[0].grid())) {
      throw ShapeError("frame " + std::to_string(t) + " has a different detector grid from frame 0");
    }
    if (frames[t].optics() != frames[0].optics()) {
      throw ValueError("frame " + std::to_string(t) + " has different optics from frame 0");
    }
  }
  Trajectory traj;
  AlphaModel current = model;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    try {
      Strategy st = strategy;
      st.seed = frame_seed(strategy.seed, t);
      const auto samples = run_inference(current, frames[t], noise, st);
      auto summary = summarize(samples);
      std::vector<double> means;
      for (const auto& p : summary.params) means.push_back(p.mean);
      traj.frames.push_back({t, std::move(summary)});
      current = current.with_spec(current.spec().with_free_values(means, true));
    } catch (const Error& e) {
      traj.error = "frame " + std::to_string(t) + ": " + e.what();
      break;
    }
  }
  return traj;
}

}  // namespace holo
