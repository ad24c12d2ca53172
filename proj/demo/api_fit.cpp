// Library use without the CLI: simulate, fit three parameters, print the
// posterior summary.

#include <iostream>

#include "holo/holo.hpp"

int main() {
  using namespace holo;
  const OpticalTrain optics(0.66, 1.33, {1.0, 0.0});
  const DetectorGrid grid(60, 60, 0.1);
  const Sphere truth{{3.02, 2.97, 10.0}, 0.5, {1.59, 0.0}};
  const auto data = synthesize_hologram(truth, 0.8, grid, optics);

  Sphere guess = truth;
  guess.center = {3.1, 2.9, 10.5};
  ParamSpec spec(guess, 0.8);
  spec.set_free("sphere[0].x", Prior::uniform(2, 4))
      .set_free("sphere[0].y", Prior::uniform(2, 4))
      .set_free("sphere[0].z", Prior::uniform(6, 14));
  const AlphaModel model(spec, optics);

  const auto samples = run_inference(model, data, NoiseModel(0.02), Strategy::tempered(SubsetSize::of_count(200), 1, 24, 400));
  const auto summary = summarize(samples);
  for (const auto& p : summary.params) {
    std::cout << p.name << ": " << p.mean << " +/- " << p.std << "  (95% " << p.intervals[1].lo << " .. "
              << p.intervals[1].hi << ")\n";
  }
}
