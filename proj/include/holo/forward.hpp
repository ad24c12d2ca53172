#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"
#include "holo/mie.hpp"
#include "holo/scatterers.hpp"

/// Hologram formation: scattered fields at detector pixels added
/// coherently to the transmitted plane wave.
namespace holo {

/// Complex electric field relative to a unit-amplitude incident wave at
/// the same point. The far-field form used here has no longitudinal part,
/// so z is always zero.
struct Field {
  cplx x{0.0, 0.0};
  cplx y{0.0, 0.0};
  cplx z{0.0, 0.0};
};

/// A scattering theory maps a scatterer and a set of field points to the
/// scattered field at those points. Implementations must be pure.
class ScatteringTheory {
 public:
  virtual ~ScatteringTheory() = default;
  virtual std::string name() const = 0;
  virtual std::vector<Field> scattered_field(const Scatterer& s, std::span<const Vec3> points,
                                             const OpticalTrain& optics) const = 0;
};

namespace detail {

// Accumulates the far-field of one sphere into out. The incident wave
// travels towards -z, so the scattering angle obeys cos(theta) = -d_z / R
// for d = P - C, and the phase is referenced to the incident wave at P.
inline void add_sphere_field(const Sphere& s, std::span<const Vec3> points, const OpticalTrain& optics,
                             std::span<Field> out) {
  const double k = optics.wavenumber();
  const auto coeffs = mie::mie_coefficients(k * s.r, s.n / optics.medium_index());
  const double px = optics.polarization()[0];
  const double py = optics.polarization()[1];
  for (std::size_t p = 0; p < points.size(); ++p) {
    const double dx = points[p][0] - s.center[0];
    const double dy = points[p][1] - s.center[1];
    const double dz = points[p][2] - s.center[2];
    const double rho2 = dx * dx + dy * dy;
    const double big_r = std::sqrt(rho2 + dz * dz);
    if (!(big_r > 0.0)) {
      throw ValueError("field point " + std::to_string(p) + " coincides with the sphere center");
    }
    const double mu = std::clamp(-dz / big_r, -1.0, 1.0);
    cplx s1, s2;
    mie::amplitude_at_cos(coeffs, mu, s1, s2);

    // Unit vectors in the transverse plane: rho_hat along the projected
    // scattering direction and perp_hat = z_hat x rho_hat. On axis the
    // azimuth is arbitrary because S1 = S2 (forward) or S1 = -S2 (backward).
    double rx = 1.0, ry = 0.0;
    if (rho2 > 0.0) {
      const double rho = std::sqrt(rho2);
      rx = dx / rho;
      ry = dy / rho;
    }
    const double cos_phi = rx * px + ry * py;
    const double sin_phi = ry * px - rx * py;

    // exp(ik(R - (z_c - z_p))) / (-ikR)
    const double phase = k * (big_r + dz);
    const cplx f = cplx(0.0, 1.0) * std::polar(1.0 / (k * big_r), phase);
    const cplx par = f * s2 * cos_phi * mu;
    const cplx perp = f * s1 * sin_phi;
    out[p].x += par * rx + perp * ry;
    out[p].y += par * ry - perp * rx;
  }
}

inline Sphere scaled(const Sphere& s, double unit) {
  return Sphere{{s.center[0] / unit, s.center[1] / unit, s.center[2] / unit}, s.r / unit, s.n};
}

}  // namespace detail

/// Lorenz-Mie theory for a single sphere.
class MieTheory final : public ScatteringTheory {
 public:
  std::string name() const override { return "mie"; }

  std::vector<Field> scattered_field(const Scatterer& s, std::span<const Vec3> points,
                                     const OpticalTrain& optics) const override {
    const auto* sphere = std::get_if<Sphere>(&s);
    if (!sphere) throw UnsupportedError("mie theory handles a single sphere, got " + kind_name(s));
    std::vector<Field> out(points.size());
    detail::add_sphere_field(*sphere, points, optics, out);
    return out;
  }
};

/// Coherent sum of independent single-sphere fields, each phase-referenced
/// to its own center. Multiple scattering between spheres is neglected, so
/// results are meaningful for well-separated spheres only.
class SuperpositionTheory final : public ScatteringTheory {
 public:
  std::string name() const override { return "mie_superposition"; }

  std::vector<Field> scattered_field(const Scatterer& s, std::span<const Vec3> points,
                                     const OpticalTrain& optics) const override {
    if (std::holds_alternative<Ellipsoid>(s)) {
      throw UnsupportedError("superposition theory handles spheres and clusters, got " + kind_name(s));
    }
    std::vector<Field> out(points.size());
    for (const auto& sphere : spheres_of(s)) detail::add_sphere_field(sphere, points, optics, out);
    return out;
  }
};

/// Theory for a scatterer kind: sphere -> Lorenz-Mie, cluster -> superposition.
inline std::shared_ptr<const ScatteringTheory> auto_select_theory(const Scatterer& s) {
  if (std::holds_alternative<Sphere>(s)) return std::make_shared<MieTheory>();
  if (std::holds_alternative<SphereCluster>(s)) return std::make_shared<SuperpositionTheory>();
  throw UnsupportedError("no scattering theory for scatterer kind '" + kind_name(s) +
                         "'; supported kinds: sphere, cluster");
}

/// Scatterer with every length divided by `unit`.
inline Scatterer reduce_scatterer(const Scatterer& s, double unit) {
  if (const auto* sp = std::get_if<Sphere>(&s)) return detail::scaled(*sp, unit);
  if (const auto* cl = std::get_if<SphereCluster>(&s)) {
    SphereCluster out;
    for (const auto& sp : cl->spheres) out.spheres.push_back(detail::scaled(sp, unit));
    return out;
  }
  return s;
}

/// Pixel positions in units of the vacuum wavelength, for the given flat
/// indices (all pixels when `indices` is empty).
inline std::vector<Vec3> reduced_pixel_points(const DetectorGrid& grid, const OpticalTrain& optics,
                                              std::span<const std::size_t> indices = {}) {
  std::vector<Vec3> pts;
  const double unit = optics.wavelength();
  if (indices.empty()) {
    pts.reserve(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) pts.push_back(grid.reduced_position(k, unit));
  } else {
    pts.reserve(indices.size());
    for (auto k : indices) pts.push_back(grid.reduced_position(k, unit));
  }
  return pts;
}

/// Scattered field of a sphere at every pixel (row-major). Lengths are
/// divided by the wavelength before any arithmetic, which makes the result
/// independent of the length unit.
inline std::vector<Field> scattered_field_at_pixels(const Sphere& s, const DetectorGrid& grid,
                                                    const OpticalTrain& optics) {
  const auto pts = reduced_pixel_points(grid, optics);
  return MieTheory().scattered_field(reduce_scatterer(s, optics.wavelength()), pts, optics.reduced());
}

/// |e_pol + alpha E|^2 = 1 + 2 alpha Re(E . e_pol) + alpha^2 |E|^2, with
/// the transverse field only.
inline double intensity_from_field(const Field& e, const std::array<double, 2>& pol, double alpha) noexcept {
  const cplx proj = e.x * pol[0] + e.y * pol[1];
  return 1.0 + 2.0 * alpha * proj.real() + alpha * alpha * (std::norm(e.x) + std::norm(e.y));
}

/// Normalised hologram of a scatterer. alpha = 0 yields exactly 1 everywhere.
inline Hologram synthesize_hologram(const Scatterer& s, double alpha, const DetectorGrid& grid,
                                    const OpticalTrain& optics,
                                    std::shared_ptr<const ScatteringTheory> theory = nullptr) {
  if (auto why = invalid_reason(s)) throw ValueError("cannot simulate invalid scatterer: " + *why);
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValueError("alpha must be non-negative, got " + format_double(alpha));
  if (!theory) theory = auto_select_theory(s);
  const auto pts = reduced_pixel_points(grid, optics);
  const auto fields = theory->scattered_field(reduce_scatterer(s, optics.wavelength()), pts, optics.reduced());
  std::vector<double> h(fields.size());
  for (std::size_t k = 0; k < h.size(); ++k) h[k] = intensity_from_field(fields[k], optics.polarization(), alpha);
  return Hologram(std::move(h), grid, optics);
}

/// Inference-facing forward model: a parameter layout over a scatterer
/// template, the optical train, and a scattering theory. Alpha scales the
/// scattered field amplitude.
class AlphaModel {
 public:
  AlphaModel(ParamSpec spec, OpticalTrain optics, std::shared_ptr<const ScatteringTheory> theory = nullptr)
      : spec_(std::move(spec)), optics_(std::move(optics)), theory_(std::move(theory)) {
    if (!theory_) theory_ = auto_select_theory(spec_.template_scatterer());
    const double alpha = spec_.entry("alpha").value;
    if (!(alpha > 0.0 && alpha <= 2.0)) throw ValueError("alpha must lie in (0, 2], got " + format_double(alpha));
  }

  const ParamSpec& spec() const noexcept { return spec_; }
  const OpticalTrain& optics() const noexcept { return optics_; }
  const ScatteringTheory& theory() const noexcept { return *theory_; }
  std::shared_ptr<const ScatteringTheory> theory_ptr() const noexcept { return theory_; }

  AlphaModel with_spec(ParamSpec spec) const { return AlphaModel(std::move(spec), optics_, theory_); }

  ModelParameters decode(std::span<const double> params) const { return from_params(spec_, params); }

  /// Model intensities at points given in wavelength units (see
  /// reduced_pixel_points). Throws ValueError for invalid parameters.
  std::vector<double> intensities(std::span<const double> params, std::span<const Vec3> reduced_points) const {
    const auto mp = decode(params);
    if (!mp.valid()) throw ValueError("invalid model parameters: " + *mp.invalid);
    const auto fields =
        theory_->scattered_field(reduce_scatterer(mp.scatterer, optics_.wavelength()), reduced_points, optics_.reduced());
    std::vector<double> h(fields.size());
    for (std::size_t k = 0; k < h.size(); ++k) h[k] = intensity_from_field(fields[k], optics_.polarization(), mp.alpha);
    return h;
  }

 private:
  ParamSpec spec_;
  OpticalTrain optics_;
  std::shared_ptr<const ScatteringTheory> theory_;
};

inline Hologram synthesize_hologram(const AlphaModel& model, std::span<const double> params, const DetectorGrid& grid) {
  const auto mp = model.decode(params);
  if (!mp.valid()) throw ValueError("cannot simulate invalid parameters: " + *mp.invalid);
  return synthesize_hologram(mp.scatterer, mp.alpha, grid, model.optics(), model.theory_ptr());
}

}  // namespace holo
