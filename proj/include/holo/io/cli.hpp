#pragma once

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/forward.hpp"
#include "holo/inference.hpp"
#include "holo/io/config.hpp"
#include "holo/io/image.hpp"
#include "holo/io/results.hpp"
#include "holo/likelihood.hpp"
#include "holo/propagation.hpp"
#include "holo/random.hpp"
#include "holo/summary.hpp"
#include "holo/tracking.hpp"
#include "holo/version.hpp"

namespace holo::io {

inline constexpr const char* kUsage =
    "usage: holo <command> --config <file> [--seed N] [--subset N|FRACTION|all] [--out PATH]\n"
    "\n"
    "commands:\n"
    "  simulate     write a synthetic hologram (io.data, or frames + io.frames manifest)\n"
    "  fit          sample the posterior of the model's free parameters for io.data\n"
    "  reconstruct  propagate io.data to the reconstruct z planes\n"
    "  track        fit every frame in the io.frames manifest, in order\n"
    "\n"
    "--out names the output image (simulate) or output directory (others).\n";

namespace detail {

struct CliOptions {
  std::string command;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> subset;
  std::optional<std::string> out;
};

inline std::string utc_timestamp(std::chrono::system_clock::time_point t) {
  const std::time_t tt = std::chrono::system_clock::to_time_t(t);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Comments start at '#' and values are single lines.
inline std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '#', '_');
  return s;
}

inline std::filesystem::path absolute_from_cwd(const std::string& p) {
  return std::filesystem::absolute(std::filesystem::path(p)).lexically_normal();
}

// Applies command-line overrides and pins every io path to an absolute
// location, so the echo in a result document runs from anywhere.
inline ConfigDocument effective_document(const CliOptions& o) {
  auto doc = ConfigDocument::load(o.config);
  if (o.seed) doc.set("strategy", "seed", std::to_string(*o.seed));
  if (o.subset) doc.set("strategy", "subset", *o.subset);
  for (const char* key : {"data", "background", "frames", "out"}) {
    if (const auto v = doc.get("io", key)) {
      std::filesystem::path p(*v);
      if (!p.is_absolute()) p = doc.base_dir() / p;
      doc.set("io", key, p.lexically_normal().string());
    }
  }
  if (o.out && o.command != "simulate") doc.set("io", "out", absolute_from_cwd(*o.out).string());
  return doc;
}

inline Hologram load_data_image(const std::filesystem::path& path, const RunConfig& cfg) {
  auto h = load_image(path.string(), cfg.optics, cfg.spacing);
  if (cfg.io.background) {
    const auto bg = load_image(cfg.io.background->string(), cfg.optics, cfg.spacing);
    h = normalize_by_background(h, bg);
  }
  if (cfg.detector && (cfg.detector->nx() != h.nx() || cfg.detector->ny() != h.ny())) {
    throw ShapeError(path.string() + ": image is " + std::to_string(h.nx()) + "x" + std::to_string(h.ny()) +
                     " but [detector] declares " + std::to_string(cfg.detector->nx()) + "x" +
                     std::to_string(cfg.detector->ny()));
  }
  if (!h.optics()) throw ConfigError(path.string() + ": optics neither in [optics] nor embedded in the image");
  return h;
}

inline NoiseModel noise_for(const RunConfig& cfg, const Hologram& h) {
  if (cfg.noise_sigma) return NoiseModel(*cfg.noise_sigma);
  if (cfg.noise_region) {
    const auto& r = *cfg.noise_region;
    return NoiseModel::from_region(h, r[0], r[1], r[2], r[3]);
  }
  throw ConfigError("[noise] needs sigma or region");
}

inline AlphaModel model_for(const RunConfig& cfg, const Hologram& h) {
  return AlphaModel(cfg.param_spec(), cfg.optics ? *cfg.optics : *h.optics());
}

inline std::filesystem::path out_dir(const RunConfig& cfg) {
  if (!cfg.io.out) throw ConfigError("no output directory: set [io] out or pass --out");
  return *cfg.io.out;
}

inline void print_summary(std::ostream& out, const Summary& s) {
  for (const auto& p : s.params) {
    out << "  " << p.name << " = " << format_double(p.mean) << " +/- " << format_double(p.std) << "\n";
  }
}

inline int run_simulate(const CliOptions& o, const ConfigDocument&, const RunConfig& cfg, std::ostream& out) {
  if (!cfg.optics) throw ConfigError("simulate needs [optics]");
  if (!cfg.detector) throw ConfigError("simulate needs [detector] nx, ny and spacing");
  if (!cfg.scatterer) throw ConfigError("simulate needs [scatterer]");
  const std::size_t frames = cfg.simulate.frames;
  std::optional<std::filesystem::path> dest;
  if (o.out) dest = absolute_from_cwd(*o.out);
  else if (frames == 1) dest = cfg.io.data;
  else dest = cfg.io.frames;
  if (!dest) throw ConfigError(frames == 1 ? "no output image: set [io] data or pass --out"
                                           : "no frame manifest: set [io] frames or pass --out");
  if (dest->has_parent_path()) std::filesystem::create_directories(dest->parent_path());

  std::string manifest;
  for (std::size_t t = 0; t < frames; ++t) {
    auto spheres = spheres_of(*cfg.scatterer);
    for (auto& s : spheres) {
      for (int a = 0; a < 3; ++a) s.center[a] += static_cast<double>(t) * cfg.simulate.velocity[a];
    }
    const Scatterer sc = std::holds_alternative<Sphere>(*cfg.scatterer) ? Scatterer(spheres[0])
                                                                       : Scatterer(SphereCluster{spheres});
    const auto clean = synthesize_hologram(sc, cfg.alpha, *cfg.detector, *cfg.optics);
    std::vector<double> v = clean.data();
    if (cfg.simulate.noise_sigma > 0.0) {
      Rng rng(derive_seed(cfg.simulate.noise_seed, 0x6e6f697365ULL, t));
      for (auto& x : v) x = std::max(0.0, x + cfg.simulate.noise_sigma * rng.normal());
    }
    Metadata meta{{"simulated", "true"}, {"noise_sigma", format_double(cfg.simulate.noise_sigma)}};
    if (frames > 1) meta["frame"] = std::to_string(t);
    const Hologram h(std::move(v), clean.grid(), clean.optics(), std::move(meta));
    std::filesystem::path file = *dest;
    if (frames > 1) {
      char tag[32];
      std::snprintf(tag, sizeof tag, "_%03zu.tif", t);
      file = dest->parent_path() / (dest->stem().string() + tag);
      manifest += file.filename().string() + "\n";
    }
    save_image(file.string(), h, PixelType::f64);
    out << "wrote " << file.string() << "\n";
  }
  if (frames > 1) {
    write_text(*dest, "# frames written by holo simulate\n" + manifest);
    out << "wrote " << dest->string() << "\n";
  }
  return 0;
}

inline int run_fit(const ConfigDocument& doc, const RunConfig& cfg, std::ostream& out) {
  if (!cfg.io.data) throw ConfigError("fit needs [io] data");
  const auto dir = out_dir(cfg);
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  const auto data = load_data_image(*cfg.io.data, cfg);
  const auto model = model_for(cfg, data);
  const auto noise = noise_for(cfg, data);
  const auto samples = run_inference(model, data, noise, cfg.strategy);
  const auto summary = summarize(samples);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ResultDocument r;
  r.config = doc;
  r.result = {{"software_version", kVersion},
              {"command", "fit"},
              {"theory", model.theory().name()},
              {"seed", std::to_string(cfg.strategy.seed)},
              {"noise_sigma", format_double(noise.sigma)},
              {"samples_file", kSamplesFile},
              {"walkers", std::to_string(samples.walkers)},
              {"retained_steps", std::to_string(samples.steps)},
              {"final_subset_pixels", std::to_string(samples.subset.size())}};
  r.summary = summary;
  r.timing = {{"started", utc_timestamp(started)},
              {"finished", utc_timestamp(std::chrono::system_clock::now())},
              {"wall_seconds", format_double(wall)}};
  save_result(r, &samples, dir);
  out << "fit " << samples.walkers << " walkers x " << samples.steps << " steps, " << samples.subset.size()
      << " pixels\n";
  print_summary(out, summary);
  out << "wrote " << (dir / kResultFile).string() << "\n";
  return 0;
}

inline int run_reconstruct(const RunConfig& cfg, std::ostream& out) {
  if (!cfg.io.data) throw ConfigError("reconstruct needs [io] data");
  if (cfg.reconstruct.z.empty()) throw ConfigError("reconstruct needs [reconstruct] z or z_range");
  const auto dir = out_dir(cfg);
  const auto data = load_data_image(*cfg.io.data, cfg);
  const auto stack = propagate(data, cfg.reconstruct.z, PropagationOptions{cfg.reconstruct.pad});
  std::filesystem::create_directories(dir);

  ConfigDocument manifest;
  manifest.set("optics", "wavelength", format_double(stack.optics.wavelength()));
  manifest.set("optics", "medium_index", format_double(stack.optics.medium_index()));
  manifest.set("optics", "polarization",
               format_double(stack.optics.polarization()[0]) + " " + format_double(stack.optics.polarization()[1]));
  manifest.set("detector", "nx", std::to_string(stack.grid.nx()));
  manifest.set("detector", "ny", std::to_string(stack.grid.ny()));
  manifest.set("detector", "spacing", format_double(stack.grid.spacing()));
  manifest.set("stack", "source", cfg.io.data->string());
  manifest.set("stack", "slices", std::to_string(stack.slices.size()));
  manifest.set("stack", "brightest", std::to_string(brightest_slice(stack)));
  for (std::size_t s = 0; s < stack.slices.size(); ++s) {
    const auto& slice = stack.slices[s];
    char name[32];
    std::snprintf(name, sizeof name, "slice_%03zu.tif", s);
    std::vector<double> mag(slice.field.size());
    for (std::size_t k = 0; k < mag.size(); ++k) mag[k] = std::abs(slice.field[k]);
    save_float_tiff((dir / name).string(), mag, stack.grid.nx(), stack.grid.ny(),
                    "z: " + format_double(slice.z) + "\nspacing: " + format_double(stack.grid.spacing()) + "\n");
    manifest.set("stack", "slice." + std::to_string(s), format_double(slice.z) + " " + name);
  }
  write_text(dir / "stack.txt", manifest.to_string());
  out << "reconstructed " << stack.slices.size() << " slices; brightest at z = "
      << format_double(stack.slices[brightest_slice(stack)].z) << "\n";
  out << "wrote " << (dir / "stack.txt").string() << "\n";
  return 0;
}

inline int run_track(const ConfigDocument& doc, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  if (!cfg.io.frames) throw ConfigError("track needs [io] frames");
  const auto dir = out_dir(cfg);
  const auto started = std::chrono::system_clock::now();
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Hologram> frames;
  for (const auto& p : read_manifest(*cfg.io.frames)) frames.push_back(load_data_image(p, cfg));
  const auto model = model_for(cfg, frames[0]);
  const auto noise = noise_for(cfg, frames[0]);
  const auto traj = track_timeseries(frames, model, noise, cfg.strategy);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  ResultDocument r;
  r.config = doc;
  r.result = {{"software_version", kVersion},
              {"command", "track"},
              {"theory", model.theory().name()},
              {"seed", std::to_string(cfg.strategy.seed)},
              {"noise_sigma", format_double(noise.sigma)},
              {"frames", std::to_string(frames.size())}};
  r.frames = traj.frames;
  if (traj.error) r.track_error = one_line(*traj.error);
  r.timing = {{"started", utc_timestamp(started)},
              {"finished", utc_timestamp(std::chrono::system_clock::now())},
              {"wall_seconds", format_double(wall)}};
  save_result(r, nullptr, dir);
  for (const auto& f : traj.frames) {
    out << "frame " << f.frame << "\n";
    print_summary(out, f.summary);
  }
  out << "wrote " << (dir / kResultFile).string() << "\n";
  if (traj.error) {
    err << "error: inference: " << one_line(*traj.error) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace detail

/// Entry point of the holo executable. Returns 0 on success, 1 on a
/// runtime error (one `error: <kind>: <message>` line on err) and 2 on a
/// usage error.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  static const std::vector<std::string> commands{"simulate", "fit", "reconstruct", "track"};
  if (args.size() >= 2 && (args[1] == "--help" || args[1] == "-h")) {
    out << kUsage;
    return 0;
  }
  if (args.size() >= 2 && args[1] == "--version") {
    out << "holo " << kVersion << "\n";
    return 0;
  }
  if (args.size() < 2 || std::find(commands.begin(), commands.end(), args[1]) == commands.end()) {
    if (args.size() >= 2) err << "unknown command '" << args[1] << "'\n";
    err << kUsage;
    return 2;
  }

  detail::CliOptions o;
  o.command = args[1];
  CLI::App app{"holo " + o.command, "holo " + o.command};
  app.add_option("--config", o.config, "configuration file")->required();
  app.add_option("--seed", o.seed, "override [strategy] seed");
  app.add_option("--subset", o.subset, "override [strategy] subset");
  app.add_option("--out", o.out, "output image (simulate) or directory");
  std::vector<std::string> rest(args.begin() + 2, args.end());
  std::reverse(rest.begin(), rest.end());  // CLI11 consumes the vector from the back
  try {
    app.parse(rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << detail::one_line(e.what()) << "\n" << kUsage;
    return 2;
  }

  try {
    const auto doc = detail::effective_document(o);
    const auto cfg = RunConfig::from_document(doc);
    if (o.command == "simulate") return detail::run_simulate(o, doc, cfg, out);
    if (o.command == "fit") return detail::run_fit(doc, cfg, out);
    if (o.command == "reconstruct") return detail::run_reconstruct(cfg, out);
    return detail::run_track(doc, cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << detail::one_line(e.what()) << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: io: " << detail::one_line(e.what()) << "\n";
  } catch (const std::exception& e) {
    err << "error: internal: " << detail::one_line(e.what()) << "\n";
  }
  return 1;
}

inline int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_main(args);
}

}  // namespace holo::io
