#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "holo/error.hpp"
#include "holo/numeric_text.hpp"

/// Optical metadata, detector geometry and the coordinate-aware hologram.
///
/// Lengths carry no unit: every length handed to the library (wavelength,
/// pixel spacing, particle position and radius) must use the same unit.
/// Geometry: the detector occupies the plane z = 0 and the illumination
/// travels towards -z, so a scatterer above the detector has z > 0.
namespace holo {

using Vec3 = std::array<double, 3>;

class OpticalTrain {
 public:
  /// Throws ValueError unless wavelength > 0, medium_index > 0 and the
  /// polarization has unit norm to within 1e-12.
  OpticalTrain(double wavelength_vacuum, double medium_index, std::array<double, 2> polarization)
      : wavelength_(wavelength_vacuum), medium_index_(medium_index), pol_(polarization) {
    if (!(wavelength_ > 0.0) || !std::isfinite(wavelength_)) {
      throw ValueError("wavelength must be positive, got " + format_double(wavelength_));
    }
    if (!(medium_index_ > 0.0) || !std::isfinite(medium_index_)) {
      throw ValueError("medium index must be positive, got " + format_double(medium_index_));
    }
    const double norm2 = pol_[0] * pol_[0] + pol_[1] * pol_[1];
    if (!(std::abs(norm2 - 1.0) <= 1e-12)) {
      throw ValueError("polarization must be a unit vector, |p|^2 = " + format_double(norm2));
    }
  }

  double wavelength() const noexcept { return wavelength_; }
  double medium_index() const noexcept { return medium_index_; }
  const std::array<double, 2>& polarization() const noexcept { return pol_; }

  /// k = 2 pi n_medium / lambda_vacuum.
  double wavenumber() const noexcept {
    return 2.0 * std::numbers::pi * medium_index_ / wavelength_;
  }

  /// Same optics in units of the vacuum wavelength (wavelength exactly 1).
  OpticalTrain reduced() const { return OpticalTrain(1.0, medium_index_, pol_); }

  friend bool operator==(const OpticalTrain&, const OpticalTrain&) = default;

 private:
  double wavelength_;
  double medium_index_;
  std::array<double, 2> pol_;
};

/// Rectangular pixel grid in the z = 0 plane. Pixel (i, j) (column i,
/// row j) sits at ((i + i0) * spacing, (j + j0) * spacing, 0), where
/// (i0, j0) is the offset accumulated by cropping.
class DetectorGrid {
 public:
  DetectorGrid(std::size_t nx, std::size_t ny, double spacing, std::size_t i0 = 0, std::size_t j0 = 0)
      : nx_(nx), ny_(ny), spacing_(spacing), i0_(i0), j0_(j0) {
    if (nx_ < 1 || ny_ < 1) throw ValueError("detector must have at least one pixel per axis");
    if (!(spacing_ > 0.0) || !std::isfinite(spacing_)) {
      throw ValueError("pixel spacing must be positive, got " + format_double(spacing_));
    }
  }

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return nx_ * ny_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t origin_i() const noexcept { return i0_; }
  std::size_t origin_j() const noexcept { return j0_; }

  double x(std::size_t i) const noexcept { return static_cast<double>(i + i0_) * spacing_; }
  double y(std::size_t j) const noexcept { return static_cast<double>(j + j0_) * spacing_; }
  Vec3 position(std::size_t i, std::size_t j) const noexcept { return {x(i), y(j), 0.0}; }

  /// Position in units of `unit`, computed as index * (spacing / unit) so
  /// that scaling spacing and unit together leaves the result unchanged.
  Vec3 reduced_position(std::size_t flat, double unit) const noexcept {
    const double s = spacing_ / unit;
    return {static_cast<double>(flat % nx_ + i0_) * s, static_cast<double>(flat / nx_ + j0_) * s, 0.0};
  }

  friend bool operator==(const DetectorGrid&, const DetectorGrid&) = default;

 private:
  std::size_t nx_;
  std::size_t ny_;
  double spacing_;
  std::size_t i0_;
  std::size_t j0_;
};

using Metadata = std::map<std::string, std::string>;

/// Intensity image (row-major, ny rows of nx values) with its grid, the
/// optional optical train, and free-form string metadata.
class Hologram {
 public:
  Hologram(std::vector<double> intensity, DetectorGrid grid, std::optional<OpticalTrain> optics = {},
           Metadata meta = {})
      : data_(std::move(intensity)), grid_(grid), optics_(std::move(optics)), meta_(std::move(meta)) {
    if (data_.size() != grid_.size()) {
      throw ShapeError("intensity has " + std::to_string(data_.size()) + " values but grid is " +
                       std::to_string(grid_.nx()) + "x" + std::to_string(grid_.ny()));
    }
    for (std::size_t k = 0; k < data_.size(); ++k) {
      if (!(data_[k] >= 0.0) || !std::isfinite(data_[k])) {
        throw ValueError("intensity must be finite and non-negative; pixel (" + std::to_string(k % grid_.nx()) +
                         ", " + std::to_string(k / grid_.nx()) + ") = " + format_double(data_[k]));
      }
    }
  }

  static Hologram uniform(DetectorGrid grid, double value, std::optional<OpticalTrain> optics = {}) {
    return Hologram(std::vector<double>(grid.size(), value), grid, std::move(optics));
  }

  const std::vector<double>& data() const noexcept { return data_; }
  const DetectorGrid& grid() const noexcept { return grid_; }
  const std::optional<OpticalTrain>& optics() const noexcept { return optics_; }
  const Metadata& meta() const noexcept { return meta_; }

  std::size_t nx() const noexcept { return grid_.nx(); }
  std::size_t ny() const noexcept { return grid_.ny(); }
  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[j * grid_.nx() + i]; }

  Hologram with_meta(const std::string& key, std::string value) const {
    Hologram h = *this;
    h.meta_[key] = std::move(value);
    return h;
  }

  Hologram with_optics(OpticalTrain optics) const {
    Hologram h = *this;
    h.optics_ = std::move(optics);
    return h;
  }

 private:
  std::vector<double> data_;
  DetectorGrid grid_;
  std::optional<OpticalTrain> optics_;
  Metadata meta_;
};

/// Sub-window of w x hgt pixels starting at column i0, row j0. Pixel
/// coordinates keep their original physical positions; the cumulative
/// offset is recorded in meta as "crop_origin".
inline Hologram crop(const Hologram& h, std::size_t i0, std::size_t j0, std::size_t w, std::size_t hgt) {
  if (w == 0 || hgt == 0) throw BoundsError("crop window must be non-empty");
  if (i0 + w > h.nx()) {
    throw BoundsError("crop column range [" + std::to_string(i0) + ", " + std::to_string(i0 + w) +
                      ") exceeds width " + std::to_string(h.nx()));
  }
  if (j0 + hgt > h.ny()) {
    throw BoundsError("crop row range [" + std::to_string(j0) + ", " + std::to_string(j0 + hgt) +
                      ") exceeds height " + std::to_string(h.ny()));
  }
  std::vector<double> out;
  out.reserve(w * hgt);
  for (std::size_t j = j0; j < j0 + hgt; ++j) {
    for (std::size_t i = i0; i < i0 + w; ++i) out.push_back(h(i, j));
  }
  const auto& g = h.grid();
  DetectorGrid grid(w, hgt, g.spacing(), g.origin_i() + i0, g.origin_j() + j0);
  Metadata meta = h.meta();
  meta["crop_origin"] = std::to_string(grid.origin_i()) + " " + std::to_string(grid.origin_j());
  return Hologram(std::move(out), grid, h.optics(), std::move(meta));
}

/// Pointwise raw / background. Optics and grid come from raw; metadata is
/// merged with raw winning on conflicting keys.
inline Hologram normalize_by_background(const Hologram& raw, const Hologram& background) {
  if (raw.nx() != background.nx() || raw.ny() != background.ny()) {
    throw ShapeError("background is " + std::to_string(background.nx()) + "x" + std::to_string(background.ny()) +
                     " but hologram is " + std::to_string(raw.nx()) + "x" + std::to_string(raw.ny()));
  }
  const auto& b = background.data();
  std::vector<double> out(raw.data().size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    if (!(b[k] > 0.0)) {
      throw ValueError("background pixel (" + std::to_string(k % raw.nx()) + ", " + std::to_string(k / raw.nx()) +
                       ") is not positive: " + format_double(b[k]));
    }
    out[k] = raw.data()[k] / b[k];
  }
  Metadata meta = background.meta();
  for (const auto& [key, value] : raw.meta()) meta[key] = value;
  return Hologram(std::move(out), raw.grid(), raw.optics(), std::move(meta));
}

}  // namespace holo
