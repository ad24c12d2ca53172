#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/prior.hpp"

namespace holo {

using cplx = std::complex<double>;

/// Homogeneous sphere. center[2] is the height above the detector plane.
struct Sphere {
  Vec3 center{0.0, 0.0, 0.0};
  double r = 0.0;
  cplx n{1.0, 0.0};

  friend bool operator==(const Sphere&, const Sphere&) = default;
};

/// Rigid set of non-interacting spheres.
struct SphereCluster {
  std::vector<Sphere> spheres;

  friend bool operator==(const SphereCluster&, const SphereCluster&) = default;
};

/// Describes an ellipsoid so it can be named and rejected; no scattering
/// theory in this library handles it.
struct Ellipsoid {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 semi_axes{0.0, 0.0, 0.0};
  cplx n{1.0, 0.0};

  friend bool operator==(const Ellipsoid&, const Ellipsoid&) = default;
};

using Scatterer = std::variant<Sphere, SphereCluster, Ellipsoid>;

inline std::string kind_name(const Scatterer& s) {
  switch (s.index()) {
    case 0: return "sphere";
    case 1: return "cluster";
    default: return "ellipsoid";
  }
}

inline std::optional<std::string> invalid_reason(const Sphere& s, std::size_t idx = 0) {
  const std::string tag = "sphere[" + std::to_string(idx) + "]";
  for (double c : s.center) {
    if (!std::isfinite(c)) return tag + " has a non-finite center coordinate";
  }
  if (!(s.r > 0.0) || !std::isfinite(s.r)) return tag + " radius must be positive, got " + format_double(s.r);
  if (!(s.center[2] > s.r)) return tag + " intersects the detector plane (z = " + format_double(s.center[2]) + ")";
  if (!(s.n.real() > 0.0) || s.n.imag() < 0.0 || !std::isfinite(s.n.real()) || !std::isfinite(s.n.imag())) {
    return tag + " index needs Re(n) > 0 and Im(n) >= 0";
  }
  return std::nullopt;
}

/// Empty when the scatterer satisfies its invariants; otherwise a reason.
inline std::optional<std::string> invalid_reason(const Scatterer& s) {
  if (const auto* sp = std::get_if<Sphere>(&s)) return invalid_reason(*sp);
  if (const auto* cl = std::get_if<SphereCluster>(&s)) {
    if (cl->spheres.empty()) return "cluster has no spheres";
    for (std::size_t i = 0; i < cl->spheres.size(); ++i) {
      if (auto why = invalid_reason(cl->spheres[i], i)) return why;
    }
    for (std::size_t i = 0; i < cl->spheres.size(); ++i) {
      for (std::size_t j = i + 1; j < cl->spheres.size(); ++j) {
        const auto& a = cl->spheres[i];
        const auto& b = cl->spheres[j];
        const double dx = a.center[0] - b.center[0];
        const double dy = a.center[1] - b.center[1];
        const double dz = a.center[2] - b.center[2];
        if (std::sqrt(dx * dx + dy * dy + dz * dz) < a.r + b.r) {
          return "spheres " + std::to_string(i) + " and " + std::to_string(j) + " overlap";
        }
      }
    }
    return std::nullopt;
  }
  return std::nullopt;
}

/// Spheres making up a sphere or cluster scatterer, in order.
inline std::vector<Sphere> spheres_of(const Scatterer& s) {
  if (const auto* sp = std::get_if<Sphere>(&s)) return {*sp};
  if (const auto* cl = std::get_if<SphereCluster>(&s)) return cl->spheres;
  return {};
}

/// Parameter naming: "sphere[i].x|y|z|r|n" and "alpha". For "n" only the
/// real part is a parameter; the imaginary part stays at its template value.
namespace detail {

enum class ParamField { x, y, z, r, n, alpha };

struct ParamRef {
  std::size_t sphere = 0;
  ParamField field = ParamField::alpha;
};

inline ParamRef parse_param_name(const std::string& name, std::size_t n_spheres) {
  if (name == "alpha") return {0, ParamField::alpha};
  const std::string prefix = "sphere[";
  const auto close = name.find("].");
  if (name.rfind(prefix, 0) != 0 || close == std::string::npos) {
    throw ValueError("unknown parameter name '" + name + "'");
  }
  std::size_t idx = 0;
  try {
    idx = static_cast<std::size_t>(parse_uint(name.substr(prefix.size(), close - prefix.size()), name));
  } catch (const ValueError&) {
    throw ValueError("unknown parameter name '" + name + "'");
  }
  if (idx >= n_spheres) {
    throw ValueError("parameter '" + name + "' refers to sphere " + std::to_string(idx) + " but the scatterer has " +
                     std::to_string(n_spheres));
  }
  const std::string f = name.substr(close + 2);
  if (f == "x") return {idx, ParamField::x};
  if (f == "y") return {idx, ParamField::y};
  if (f == "z") return {idx, ParamField::z};
  if (f == "r") return {idx, ParamField::r};
  if (f == "n") return {idx, ParamField::n};
  throw ValueError("unknown parameter name '" + name + "'");
}

inline double get_field(const Sphere& s, ParamField f) {
  switch (f) {
    case ParamField::x: return s.center[0];
    case ParamField::y: return s.center[1];
    case ParamField::z: return s.center[2];
    case ParamField::r: return s.r;
    case ParamField::n: return s.n.real();
    default: return 0.0;
  }
}

inline void set_field(Sphere& s, ParamField f, double v) {
  switch (f) {
    case ParamField::x: s.center[0] = v; break;
    case ParamField::y: s.center[1] = v; break;
    case ParamField::z: s.center[2] = v; break;
    case ParamField::r: s.r = v; break;
    case ParamField::n: s.n = cplx(v, s.n.imag()); break;
    default: break;
  }
}

inline std::size_t sphere_count(const Scatterer& s) { return spheres_of(s).size(); }

}  // namespace detail

/// Parameter layout of a model: every scalar of the scatterer template
/// plus alpha, each fixed at a value or free with a prior. Order is
/// declaration order and defines the layout of parameter vectors.
class ParamSpec {
 public:
  struct Entry {
    std::string name;
    bool free = false;
    double value = 0.0;  // fixed value, or the initial guess when free
    std::optional<Prior> prior;
    detail::ParamRef ref;
  };

  ParamSpec(Scatterer templ, double alpha) : template_(std::move(templ)) {
    const auto spheres = spheres_of(template_);
    for (std::size_t i = 0; i < spheres.size(); ++i) {
      const std::string p = "sphere[" + std::to_string(i) + "].";
      entries_.push_back({p + "x", false, spheres[i].center[0], {}, {i, detail::ParamField::x}});
      entries_.push_back({p + "y", false, spheres[i].center[1], {}, {i, detail::ParamField::y}});
      entries_.push_back({p + "z", false, spheres[i].center[2], {}, {i, detail::ParamField::z}});
      entries_.push_back({p + "r", false, spheres[i].r, {}, {i, detail::ParamField::r}});
      entries_.push_back({p + "n", false, spheres[i].n.real(), {}, {i, detail::ParamField::n}});
    }
    entries_.push_back({"alpha", false, alpha, {}, {0, detail::ParamField::alpha}});
  }

  /// Frees a parameter. Free parameters are ordered by the sequence of
  /// set_free calls, not by the template layout.
  ParamSpec& set_free(const std::string& name, Prior prior) {
    auto& e = entry_mut(name);
    if (e.free) throw ValueError("parameter '" + name + "' is already free");
    const auto ref = detail::parse_param_name(name, detail::sphere_count(template_));
    if (ref.field == detail::ParamField::n && spheres_of(template_)[ref.sphere].n.imag() != 0.0) {
      throw UnsupportedError("parameter '" + name + "' cannot be free: complex-index inference is not supported");
    }
    e.free = true;
    e.prior = std::move(prior);
    free_order_.push_back(name);
    free_refs_.push_back(ref);
    return *this;
  }

  ParamSpec& set_value(const std::string& name, double v) {
    entry_mut(name).value = v;
    return *this;
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Scatterer& template_scatterer() const noexcept { return template_; }
  const std::vector<std::string>& free_names() const noexcept { return free_order_; }
  std::size_t free_count() const noexcept { return free_order_.size(); }
  const std::vector<detail::ParamRef>& free_refs() const noexcept { return free_refs_; }

  const Entry& entry(const std::string& name) const {
    for (const auto& e : entries_) {
      if (e.name == name) return e;
    }
    throw ValueError("unknown parameter name '" + name + "'");
  }

  std::vector<Prior> free_priors() const {
    std::vector<Prior> out;
    for (const auto& n : free_order_) out.push_back(*entry(n).prior);
    return out;
  }

  /// Current values of the free parameters (the initial guess).
  std::vector<double> guess() const {
    std::vector<double> out;
    for (const auto& n : free_order_) out.push_back(entry(n).value);
    return out;
  }

  /// Copy with free values replaced by v and, if requested, their priors
  /// recentered on v with widths preserved.
  ParamSpec with_free_values(std::span<const double> v, bool recenter_priors = false) const {
    check_length(v);
    ParamSpec out = *this;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto& e = out.entry_mut(free_order_[i]);
      e.value = v[i];
      if (recenter_priors) e.prior = e.prior->recentered(v[i]);
    }
    return out;
  }

  void check_length(std::span<const double> v) const {
    if (v.size() != free_order_.size()) {
      throw ShapeError("parameter vector has " + std::to_string(v.size()) + " values but " +
                       std::to_string(free_order_.size()) + " parameters are free");
    }
  }

 private:
  Entry& entry_mut(const std::string& name) {
    for (auto& e : entries_) {
      if (e.name == name) return e;
    }
    throw ValueError("unknown parameter name '" + name + "'");
  }

  Scatterer template_;
  std::vector<Entry> entries_;
  std::vector<std::string> free_order_;
  std::vector<detail::ParamRef> free_refs_;
};

/// A scatterer plus alpha decoded from a parameter vector. `invalid` is set
/// when the values violate an invariant; callers decide how to treat it.
struct ModelParameters {
  Scatterer scatterer;
  double alpha = 1.0;
  std::optional<std::string> invalid;

  bool valid() const noexcept { return !invalid.has_value(); }
};

/// Free-parameter values of `s` (and `alpha`) in spec order.
inline std::vector<double> to_params(const Scatterer& s, const ParamSpec& spec, std::optional<double> alpha = {}) {
  const auto spheres = spheres_of(s);
  std::vector<double> out;
  out.reserve(spec.free_count());
  for (const auto& name : spec.free_names()) {
    const auto ref = detail::parse_param_name(name, spheres.size());
    if (ref.field == detail::ParamField::alpha) {
      out.push_back(alpha.value_or(spec.entry("alpha").value));
    } else {
      out.push_back(detail::get_field(spheres[ref.sphere], ref.field));
    }
  }
  return out;
}

/// Builds the scatterer described by spec with free values taken from v.
inline ModelParameters from_params(const ParamSpec& spec, std::span<const double> v) {
  spec.check_length(v);
  auto spheres = spheres_of(spec.template_scatterer());
  double alpha = 0.0;
  // Fixed values first, then overwrite with the free vector.
  for (const auto& e : spec.entries()) {
    if (e.ref.field == detail::ParamField::alpha) {
      alpha = e.value;
    } else {
      detail::set_field(spheres[e.ref.sphere], e.ref.field, e.value);
    }
  }
  const auto& refs = spec.free_refs();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto& ref = refs[i];
    if (ref.field == detail::ParamField::alpha) {
      alpha = v[i];
    } else {
      detail::set_field(spheres[ref.sphere], ref.field, v[i]);
    }
  }
  ModelParameters out;
  const auto& templ = spec.template_scatterer();
  if (std::holds_alternative<Sphere>(templ)) {
    out.scatterer = spheres.front();
  } else if (std::holds_alternative<SphereCluster>(templ)) {
    out.scatterer = SphereCluster{std::move(spheres)};
  } else {
    out.scatterer = templ;
  }
  out.alpha = alpha;
  out.invalid = invalid_reason(out.scatterer);
  if (!out.invalid && !(alpha > 0.0 && alpha <= 2.0)) {
    out.invalid = "alpha must lie in (0, 2], got " + format_double(alpha);
  }
  return out;
}

}  // namespace holo
