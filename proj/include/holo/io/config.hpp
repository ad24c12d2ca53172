#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/forward.hpp"
#include "holo/inference.hpp"
#include "holo/numeric_text.hpp"
#include "holo/prior.hpp"
#include "holo/scatterers.hpp"

/// Structured text configuration: `[section]` headers, `key: value` lines,
/// `#` comments. All lengths share one unit, whichever the file uses.
namespace holo::io {

/// Ordered sections of ordered key/value pairs. Syntax only; the schema is
/// checked by RunConfig::from_document.
class ConfigDocument {
 public:
  struct Entry {
    std::string key;
    std::string value;
    std::size_t line = 0;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  static ConfigDocument parse(const std::string& text, const std::string& source = "<config>") {
    ConfigDocument doc;
    doc.source_ = source;
    std::istringstream in(text);
    std::string raw;
    std::size_t lineno = 0;
    Section* current = nullptr;
    while (std::getline(in, raw)) {
      ++lineno;
      const auto hash = raw.find('#');
      const std::string line(trim(std::string_view(raw).substr(0, hash)));
      if (line.empty()) continue;
      const std::string where = source + ":" + std::to_string(lineno);
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError(where + ": malformed section header '" + line + "'");
        const std::string name(trim(std::string_view(line).substr(1, line.size() - 2)));
        if (name.empty()) throw ConfigError(where + ": empty section name");
        if (doc.find_section(name)) throw ConfigError(where + ": section [" + name + "] appears twice");
        doc.sections_.push_back({name, {}});
        current = &doc.sections_.back();
        continue;
      }
      const auto colon = line.find(':');
      if (colon == std::string::npos) throw ConfigError(where + ": expected 'key: value', got '" + line + "'");
      if (!current) throw ConfigError(where + ": key outside any section");
      const std::string key(trim(std::string_view(line).substr(0, colon)));
      const std::string value(trim(std::string_view(line).substr(colon + 1)));
      if (key.empty()) throw ConfigError(where + ": empty key");
      for (const auto& e : current->entries) {
        if (e.key == key) throw ConfigError(where + ": key '" + key + "' repeated in [" + current->name + "]");
      }
      current->entries.push_back({key, value, lineno});
    }
    return doc;
  }

  static ConfigDocument load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    auto doc = parse(ss.str(), path.string());
    doc.base_dir_ = std::filesystem::absolute(path).parent_path();
    return doc;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& s : sections_) {
      if (!out.empty()) out += "\n";
      out += "[" + s.name + "]\n";
      for (const auto& e : s.entries) out += e.key + ": " + e.value + "\n";
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw IoError(path.string() + ": cannot write");
    out << to_string();
    if (!out) throw IoError(path.string() + ": write failed");
  }

  const std::vector<Section>& sections() const noexcept { return sections_; }
  const std::string& source() const noexcept { return source_; }
  /// Directory that relative paths resolve against.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  void set_base_dir(std::filesystem::path p) { base_dir_ = std::move(p); }

  const Section* find_section(const std::string& name) const {
    for (const auto& s : sections_) {
      if (s.name == name) return &s;
    }
    return nullptr;
  }

  std::optional<std::string> get(const std::string& section, const std::string& key) const {
    if (const auto* s = find_section(section)) {
      for (const auto& e : s->entries) {
        if (e.key == key) return e.value;
      }
    }
    return std::nullopt;
  }

  /// Replaces the value in place, or appends the key (and section).
  void set(const std::string& section, const std::string& key, std::string value) {
    Section* s = nullptr;
    for (auto& sec : sections_) {
      if (sec.name == section) s = &sec;
    }
    if (!s) {
      sections_.push_back({section, {}});
      s = &sections_.back();
    }
    for (auto& e : s->entries) {
      if (e.key == key) {
        e.value = std::move(value);
        return;
      }
    }
    s->entries.push_back({key, std::move(value), 0});
  }

  void remove_section(const std::string& name) {
    std::erase_if(sections_, [&](const Section& s) { return s.name == name; });
  }

  /// Copy holding only the named sections, in document order.
  ConfigDocument only(const std::vector<std::string>& names) const {
    ConfigDocument out = *this;
    std::erase_if(out.sections_, [&](const Section& s) {
      return std::find(names.begin(), names.end(), s.name) == names.end();
    });
    return out;
  }

 private:
  std::vector<Section> sections_;
  std::string source_ = "<config>";
  std::filesystem::path base_dir_ = std::filesystem::current_path();
};

struct SimulateOptions {
  double noise_sigma = 0.0;
  std::uint64_t noise_seed = 0;
  std::size_t frames = 1;
  Vec3 velocity{0.0, 0.0, 0.0};  // center displacement per frame
};

struct ReconstructOptions {
  std::vector<double> z;
  bool pad = false;
};

struct IoPaths {
  std::optional<std::filesystem::path> data;
  std::optional<std::filesystem::path> background;
  std::optional<std::filesystem::path> frames;  // manifest, one image path per line
  std::optional<std::filesystem::path> out;
};

/// Sections a result document adds on top of the configuration echo.
inline const std::vector<std::string>& result_sections() {
  static const std::vector<std::string> s{"result", "summary", "correlation", "timing", "trajectory"};
  return s;
}

inline const std::vector<std::string>& config_sections() {
  static const std::vector<std::string> s{"optics",   "detector",    "scatterer", "model", "noise",
                                          "strategy", "simulate",    "reconstruct", "io"};
  return s;
}

namespace detail {

inline bool is_sphere_key(const std::string& key) {
  // sphere.<N>.center | sphere.<N>.r | sphere.<N>.n
  if (key.rfind("sphere.", 0) != 0) return false;
  const auto dot = key.find('.', 7);
  if (dot == std::string::npos || dot == 7) return false;
  for (std::size_t i = 7; i < dot; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) return false;
  }
  const auto field = key.substr(dot + 1);
  return field == "center" || field == "r" || field == "n";
}

inline bool key_allowed(const std::string& section, const std::string& key) {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> fixed{
      {"optics", {"wavelength", "medium_index", "polarization"}},
      {"detector", {"nx", "ny", "spacing", "origin"}},
      {"scatterer", {"kind"}},
      {"model", {"alpha", "free"}},
      {"noise", {"sigma", "region"}},
      {"strategy",
       {"walkers", "seed", "subset", "stages", "steps", "burn_in", "stretch", "init_spread", "reseed_jitter",
        "threads"}},
      {"simulate", {"noise_sigma", "noise_seed", "frames", "velocity"}},
      {"reconstruct", {"z", "z_range", "pad"}},
      {"io", {"data", "background", "frames", "out"}},
  };
  for (const auto& [name, keys] : fixed) {
    if (name != section) continue;
    if (std::find(keys.begin(), keys.end(), key) != keys.end()) return true;
    if (section == "scatterer") return is_sphere_key(key);
    if (section == "model") return key.rfind("prior.", 0) == 0 && key.size() > 6;
    return false;
  }
  return false;
}

struct Reader {
  const ConfigDocument& doc;

  std::string where(const std::string& section, const std::string& key) const {
    std::size_t line = 0;
    if (const auto* s = doc.find_section(section)) {
      for (const auto& e : s->entries) {
        if (e.key == key) line = e.line;
      }
    }
    return doc.source() + (line ? ":" + std::to_string(line) : std::string()) + ": [" + section + "] " + key;
  }

  template <typename F>
  auto convert(const std::string& section, const std::string& key, F&& f) const -> decltype(f(std::string())) {
    const auto v = doc.get(section, key);
    try {
      return f(*v);
    } catch (const Error& e) {
      throw ConfigError(where(section, key) + ": " + e.what());
    }
  }

  std::optional<double> num(const std::string& s, const std::string& k) const {
    if (!doc.get(s, k)) return std::nullopt;
    return convert(s, k, [&](const std::string& v) { return parse_double(v, "value"); });
  }

  std::optional<std::uint64_t> uint(const std::string& s, const std::string& k) const {
    if (!doc.get(s, k)) return std::nullopt;
    return convert(s, k, [&](const std::string& v) { return parse_uint(v, "value"); });
  }

  std::optional<std::vector<double>> nums(const std::string& s, const std::string& k, std::size_t n) const {
    if (!doc.get(s, k)) return std::nullopt;
    return convert(s, k, [&](const std::string& v) {
      const auto tok = split_ws(v);
      if (n && tok.size() != n) {
        throw ValueError("expected " + std::to_string(n) + " numbers, got " + std::to_string(tok.size()));
      }
      std::vector<double> out;
      for (const auto& t : tok) out.push_back(parse_double(t, "value"));
      return out;
    });
  }

  std::optional<bool> boolean(const std::string& s, const std::string& k) const {
    if (!doc.get(s, k)) return std::nullopt;
    return convert(s, k, [&](const std::string& v) {
      if (v == "true" || v == "yes" || v == "1") return true;
      if (v == "false" || v == "no" || v == "0") return false;
      throw ValueError("expected true or false, got '" + v + "'");
    });
  }

  std::optional<std::filesystem::path> path(const std::string& s, const std::string& k) const {
    const auto v = doc.get(s, k);
    if (!v) return std::nullopt;
    if (v->empty()) throw ConfigError(where(s, k) + ": empty path");
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : doc.base_dir() / p;
  }

  double required(const std::string& s, const std::string& k) const {
    if (!doc.get(s, k)) throw ConfigError(doc.source() + ": missing required key [" + s + "] " + k);
    return *num(s, k);
  }
};

inline SubsetSize parse_subset(const std::string& v) {
  if (v == "all") return SubsetSize::all();
  if (v.find_first_of(".eE") != std::string::npos) return SubsetSize::of_fraction(parse_double(v, "subset"));
  return SubsetSize::of_count(static_cast<std::size_t>(parse_uint(v, "subset")));
}

inline std::string subset_to_string(const SubsetSize& s) {
  if (s.is_all()) return "all";
  if (s.count > 0) return std::to_string(s.count);
  std::string f = format_double(s.fraction);
  if (f.find_first_of(".eE") == std::string::npos) f += ".0";
  return f;
}

}  // namespace detail

/// Typed view of a ConfigDocument. Every section is optional; each
/// subcommand checks for the pieces it needs.
struct RunConfig {
  std::optional<OpticalTrain> optics;
  std::optional<DetectorGrid> detector;
  std::optional<double> spacing;  // detector spacing, even without nx/ny
  std::optional<Scatterer> scatterer;
  double alpha = 1.0;
  std::vector<std::pair<std::string, Prior>> free;
  std::optional<double> noise_sigma;
  std::optional<std::array<std::size_t, 4>> noise_region;  // i0 j0 w h
  Strategy strategy;
  SimulateOptions simulate;
  ReconstructOptions reconstruct;
  IoPaths io;

  static RunConfig from_document(const ConfigDocument& doc) {
    for (const auto& s : doc.sections()) {
      const auto& known = config_sections();
      const auto& extra = result_sections();
      if (std::find(known.begin(), known.end(), s.name) == known.end() &&
          std::find(extra.begin(), extra.end(), s.name) == extra.end()) {
        throw ConfigError(doc.source() + ": unknown section [" + s.name + "]");
      }
      if (std::find(extra.begin(), extra.end(), s.name) != extra.end()) continue;
      for (const auto& e : s.entries) {
        if (!detail::key_allowed(s.name, e.key)) {
          throw ConfigError(doc.source() + ":" + std::to_string(e.line) + ": unknown key '" + e.key + "' in [" +
                            s.name + "]");
        }
      }
    }
    const detail::Reader rd{doc};
    RunConfig c;

    if (doc.find_section("optics")) {
      const double wl = rd.required("optics", "wavelength");
      const double mi = rd.required("optics", "medium_index");
      const auto pol = rd.nums("optics", "polarization", 2).value_or(std::vector<double>{1.0, 0.0});
      c.optics = rd.convert("optics", "wavelength", [&](const std::string&) {
        return OpticalTrain(wl, mi, {pol[0], pol[1]});
      });
    }

    if (doc.find_section("detector")) {
      c.spacing = rd.num("detector", "spacing");
      const auto nx = rd.uint("detector", "nx");
      const auto ny = rd.uint("detector", "ny");
      if (nx || ny) {
        if (!nx || !ny || !c.spacing) throw ConfigError(doc.source() + ": [detector] needs nx, ny and spacing together");
        std::size_t i0 = 0, j0 = 0;
        if (const auto o = rd.nums("detector", "origin", 2)) {
          i0 = static_cast<std::size_t>((*o)[0]);
          j0 = static_cast<std::size_t>((*o)[1]);
        }
        c.detector = rd.convert("detector", "nx", [&](const std::string&) {
          return DetectorGrid(static_cast<std::size_t>(*nx), static_cast<std::size_t>(*ny), *c.spacing, i0, j0);
        });
      }
    }

    if (doc.find_section("scatterer")) c.scatterer = read_scatterer(doc, rd);

    if (doc.find_section("model")) {
      c.alpha = rd.num("model", "alpha").value_or(1.0);
      if (const auto f = doc.get("model", "free")) {
        for (const auto& name : split_ws(*f)) {
          const auto prior_text = doc.get("model", "prior." + name);
          if (!prior_text) throw ConfigError(doc.source() + ": free parameter '" + name + "' has no [model] prior." + name);
          c.free.emplace_back(
              name, rd.convert("model", "prior." + name, [](const std::string& v) { return Prior::parse(v); }));
        }
      }
      for (const auto& e : doc.find_section("model")->entries) {
        if (e.key.rfind("prior.", 0) != 0) continue;
        const auto name = e.key.substr(6);
        const bool listed = std::any_of(c.free.begin(), c.free.end(), [&](const auto& p) { return p.first == name; });
        if (!listed) {
          throw ConfigError(doc.source() + ":" + std::to_string(e.line) + ": prior for '" + name +
                            "' but it is not in [model] free");
        }
      }
    }

    c.noise_sigma = rd.num("noise", "sigma");
    if (const auto r = rd.nums("noise", "region", 4)) {
      std::array<std::size_t, 4> reg{};
      for (std::size_t i = 0; i < 4; ++i) reg[i] = static_cast<std::size_t>((*r)[i]);
      c.noise_region = reg;
    }
    if (c.noise_sigma && c.noise_region) throw ConfigError(doc.source() + ": [noise] takes sigma or region, not both");

    c.strategy = read_strategy(doc, rd);

    c.simulate.noise_sigma = rd.num("simulate", "noise_sigma").value_or(0.0);
    if (c.simulate.noise_sigma < 0.0) throw ConfigError(rd.where("simulate", "noise_sigma") + ": must be >= 0");
    c.simulate.noise_seed = rd.uint("simulate", "noise_seed").value_or(0);
    c.simulate.frames = static_cast<std::size_t>(rd.uint("simulate", "frames").value_or(1));
    if (c.simulate.frames < 1) throw ConfigError(rd.where("simulate", "frames") + ": must be at least 1");
    if (const auto v = rd.nums("simulate", "velocity", 3)) c.simulate.velocity = {(*v)[0], (*v)[1], (*v)[2]};

    if (doc.get("reconstruct", "z") && doc.get("reconstruct", "z_range")) {
      throw ConfigError(doc.source() + ": [reconstruct] takes z or z_range, not both");
    }
    if (const auto z = rd.nums("reconstruct", "z", 0)) c.reconstruct.z = *z;
    if (const auto r = rd.nums("reconstruct", "z_range", 3)) {
      const auto n = static_cast<std::size_t>((*r)[2]);
      if (n < 1 || static_cast<double>(n) != (*r)[2]) {
        throw ConfigError(rd.where("reconstruct", "z_range") + ": count must be a positive integer");
      }
      for (std::size_t i = 0; i < n; ++i) {
        c.reconstruct.z.push_back(n == 1 ? (*r)[0]
                                         : (*r)[0] + ((*r)[1] - (*r)[0]) * static_cast<double>(i) /
                                                         static_cast<double>(n - 1));
      }
    }
    c.reconstruct.pad = rd.boolean("reconstruct", "pad").value_or(false);

    c.io.data = rd.path("io", "data");
    c.io.background = rd.path("io", "background");
    c.io.frames = rd.path("io", "frames");
    c.io.out = rd.path("io", "out");
    if (c.scatterer) (void)param_spec(c);  // surfaces bad free names and alpha early
    return c;
  }

  ParamSpec param_spec() const { return param_spec(*this); }

  AlphaModel model() const {
    if (!optics) throw ConfigError("[optics] section is required");
    return AlphaModel(param_spec(), *optics);
  }

 private:
  static ParamSpec param_spec(const RunConfig& c) {
    if (!c.scatterer) throw ConfigError("[scatterer] section is required");
    try {
      ParamSpec spec(*c.scatterer, c.alpha);
      for (const auto& [name, prior] : c.free) spec.set_free(name, prior);
      return spec;
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(std::string("[model]: ") + e.what());
    }
  }

  static Scatterer read_scatterer(const ConfigDocument& doc, const detail::Reader& rd) {
    const std::string kind = doc.get("scatterer", "kind").value_or("sphere");
    if (kind == "ellipsoid") {
      throw ConfigError(rd.where("scatterer", "kind") +
                        ": ellipsoid has no scattering theory; supported kinds: sphere, cluster");
    }
    if (kind != "sphere" && kind != "cluster") {
      throw ConfigError(rd.where("scatterer", "kind") + ": unknown kind '" + kind + "' (sphere, cluster)");
    }
    std::vector<Sphere> spheres;
    for (std::size_t i = 0;; ++i) {
      const std::string p = "sphere." + std::to_string(i) + ".";
      const bool any = doc.get("scatterer", p + "center") || doc.get("scatterer", p + "r") || doc.get("scatterer", p + "n");
      if (!any) break;
      Sphere s;
      const auto c = rd.nums("scatterer", p + "center", 3);
      if (!c) throw ConfigError(doc.source() + ": missing [scatterer] " + p + "center");
      s.center = {(*c)[0], (*c)[1], (*c)[2]};
      s.r = rd.required("scatterer", p + "r");
      const auto n = rd.nums("scatterer", p + "n", 0);
      if (!n || n->empty() || n->size() > 2) {
        throw ConfigError(doc.source() + ": [scatterer] " + p + "n needs 'real' or 'real imag'");
      }
      s.n = {(*n)[0], n->size() == 2 ? (*n)[1] : 0.0};
      spheres.push_back(s);
    }
    for (const auto& e : doc.find_section("scatterer")->entries) {
      if (!detail::is_sphere_key(e.key)) continue;
      const auto idx = std::stoul(e.key.substr(7));
      if (idx >= spheres.size()) {
        throw ConfigError(doc.source() + ":" + std::to_string(e.line) + ": sphere index " + std::to_string(idx) +
                          " skips a lower index");
      }
    }
    if (spheres.empty()) throw ConfigError(doc.source() + ": [scatterer] declares no spheres");
    if (kind == "sphere") {
      if (spheres.size() != 1) throw ConfigError(doc.source() + ": kind sphere takes exactly one sphere.0");
      return spheres[0];
    }
    return SphereCluster{spheres};
  }

  // stages: "tempered" (default), "none", or "count:steps ..." for the
  // preliminary stages; the final stage comes from subset/steps/burn_in.
  static Strategy read_strategy(const ConfigDocument& doc, const detail::Reader& rd) {
    const auto walkers = static_cast<std::size_t>(rd.uint("strategy", "walkers").value_or(100));
    const auto seed = rd.uint("strategy", "seed").value_or(0);
    const auto steps = static_cast<std::size_t>(rd.uint("strategy", "steps").value_or(1000));
    SubsetSize subset = SubsetSize::all();
    if (doc.get("strategy", "subset")) subset = rd.convert("strategy", "subset", detail::parse_subset);
    Strategy s = Strategy::tempered(subset, seed, walkers, steps);
    if (const auto b = rd.num("strategy", "burn_in")) s.stages.back().burn_in = *b;
    const std::string stages = doc.get("strategy", "stages").value_or("tempered");
    if (stages != "tempered") {
      const Stage last = s.stages.back();
      s.stages.clear();
      if (stages != "none") {
        s.stages = rd.convert("strategy", "stages", [&](const std::string& v) {
          std::vector<Stage> out;
          for (const auto& tok : split_ws(v)) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw ValueError("stage '" + tok + "' is not subset:steps");
            out.push_back({detail::parse_subset(tok.substr(0, colon)), walkers,
                           static_cast<std::size_t>(parse_uint(tok.substr(colon + 1), "stage steps")), 0.0});
          }
          return out;
        });
      }
      s.stages.push_back(last);
    }
    if (const auto v = rd.num("strategy", "stretch")) s.stretch = *v;
    if (const auto v = rd.num("strategy", "init_spread")) s.init_spread = *v;
    if (const auto v = rd.num("strategy", "reseed_jitter")) s.reseed_jitter = *v;
    if (const auto v = rd.uint("strategy", "threads")) s.threads = static_cast<std::size_t>(*v);
    if (!(s.stretch > 1.0)) throw ConfigError(rd.where("strategy", "stretch") + ": must exceed 1");
    if (!(s.stages.back().burn_in >= 0.0 && s.stages.back().burn_in < 1.0)) {
      throw ConfigError(rd.where("strategy", "burn_in") + ": must lie in [0, 1)");
    }
    return s;
  }
};

/// Reads a frame manifest: one image path per line, `#` comments, paths
/// relative to the manifest's directory.
inline std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string() + ": cannot open frame manifest");
  std::vector<std::filesystem::path> out;
  std::string raw;
  const auto base = std::filesystem::absolute(path).parent_path();
  while (std::getline(in, raw)) {
    const std::string line(trim(std::string_view(raw).substr(0, raw.find('#'))));
    if (line.empty()) continue;
    std::filesystem::path p(line);
    out.push_back(p.is_absolute() ? p : base / p);
  }
  if (out.empty()) throw IoError(path.string() + ": frame manifest lists no images");
  return out;
}

}  // namespace holo::io
