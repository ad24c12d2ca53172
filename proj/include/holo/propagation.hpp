#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "holo/core_types.hpp"
#include "holo/error.hpp"

/// Numerical reconstruction by angular-spectrum propagation.
namespace holo {

struct ReconstructionSlice {
  double z = 0.0;
  std::vector<std::complex<double>> field;  // row-major, ny x nx
};

struct ReconstructionStack {
  DetectorGrid grid;
  OpticalTrain optics;
  std::vector<ReconstructionSlice> slices;  // z strictly increasing
};

struct PropagationOptions {
  /// Zero-pad to the next power of two per axis before transforming.
  bool pad_to_pow2 = false;
};

namespace detail {

// FFTW planning is not thread-safe; execution of distinct plans is.
inline std::mutex& fftw_plan_mutex() {
  static std::mutex m;
  return m;
}

class Fft2d {
 public:
  Fft2d(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), buf_(nx * ny) {
    std::lock_guard lock(fftw_plan_mutex());
    auto* p = reinterpret_cast<fftw_complex*>(buf_.data());
    fwd_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft2d() {
    std::lock_guard lock(fftw_plan_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
  }
  Fft2d(const Fft2d&) = delete;
  Fft2d& operator=(const Fft2d&) = delete;

  std::vector<std::complex<double>>& buffer() noexcept { return buf_; }
  void forward() { fftw_execute(fwd_); }
  // Unnormalised; the caller divides by nx * ny.
  void inverse() { fftw_execute(inv_); }

 private:
  std::size_t nx_, ny_;
  std::vector<std::complex<double>> buf_;
  fftw_plan fwd_{};
  fftw_plan inv_{};
};

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Signed spatial frequency of FFT bin `idx` for n samples of spacing d.
inline double fft_frequency(std::size_t idx, std::size_t n, double d) {
  const auto i = static_cast<double>(idx);
  const auto nn = static_cast<double>(n);
  return (idx <= (n - 1) / 2 ? i : i - nn) / (nn * d);
}

}  // namespace detail

/// Transfer function exp(i z kz), kz = sqrt(k^2 - (2 pi fx)^2 - (2 pi fy)^2),
/// applied to the spectrum of `field`; evanescent components are zeroed.
/// `field` is row-major nx * ny with pixel spacing `spacing`.
inline std::vector<std::complex<double>> propagate_field(std::span<const std::complex<double>> field, std::size_t nx,
                                                         std::size_t ny, double spacing, double wavenumber, double z,
                                                         PropagationOptions opts = {}) {
  if (!(z >= 0.0)) throw ValueError("propagation distance must be non-negative, got " + format_double(z));
  if (field.size() != nx * ny) throw ShapeError("field size does not match the grid");
  const std::size_t px = opts.pad_to_pow2 ? detail::next_pow2(nx) : nx;
  const std::size_t py = opts.pad_to_pow2 ? detail::next_pow2(ny) : ny;
  if (z == 0.0 && px == nx && py == ny) return {field.begin(), field.end()};

  detail::Fft2d fft(px, py);
  auto& buf = fft.buffer();
  std::fill(buf.begin(), buf.end(), std::complex<double>{});
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) buf[j * px + i] = field[j * nx + i];
  }
  fft.forward();
  const double k2 = wavenumber * wavenumber;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t j = 0; j < py; ++j) {
    const double ky = two_pi * detail::fft_frequency(j, py, spacing);
    for (std::size_t i = 0; i < px; ++i) {
      const double kx = two_pi * detail::fft_frequency(i, px, spacing);
      const double kz2 = k2 - kx * kx - ky * ky;
      auto& v = buf[j * px + i];
      v = kz2 < 0.0 ? std::complex<double>{} : v * std::polar(1.0, z * std::sqrt(kz2));
    }
  }
  fft.inverse();
  const double norm = 1.0 / static_cast<double>(px * py);
  std::vector<std::complex<double>> out(nx * ny);
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t i = 0; i < nx; ++i) out[j * nx + i] = buf[j * px + i] * norm;
  }
  return out;
}

/// Propagates the scattered-field estimate H - 1 of a hologram to each
/// distance in `zs` (non-negative, strictly increasing).
inline ReconstructionStack propagate(const Hologram& h, std::span<const double> zs, PropagationOptions opts = {}) {
  if (!h.optics()) throw ValueError("propagate: hologram has no optical metadata");
  if (zs.empty()) throw ValueError("propagate: no propagation distances given");
  for (std::size_t i = 0; i < zs.size(); ++i) {
    if (!(zs[i] >= 0.0)) throw ValueError("propagate: distance must be non-negative, got " + format_double(zs[i]));
    if (i > 0 && !(zs[i] > zs[i - 1])) throw ValueError("propagate: distances must be strictly increasing");
  }
  std::vector<std::complex<double>> scattered(h.data().size());
  for (std::size_t k = 0; k < scattered.size(); ++k) scattered[k] = h.data()[k] - 1.0;

  ReconstructionStack stack{h.grid(), *h.optics(), {}};
  const double k = h.optics()->wavenumber();
  for (double z : zs) {
    stack.slices.push_back({z, propagate_field(scattered, h.nx(), h.ny(), h.grid().spacing(), k, z, opts)});
  }
  return stack;
}

inline ReconstructionStack propagate(const Hologram& h, double z, PropagationOptions opts = {}) {
  return propagate(h, std::span<const double>(&z, 1), opts);
}

/// Index of the slice with the largest peak |field|.
inline std::size_t brightest_slice(const ReconstructionStack& stack) {
  std::size_t best = 0;
  double best_val = -1.0;
  for (std::size_t s = 0; s < stack.slices.size(); ++s) {
    double peak = 0.0;
    for (const auto& v : stack.slices[s].field) peak = std::max(peak, std::abs(v));
    if (peak > best_val) {
      best_val = peak;
      best = s;
    }
  }
  return best;
}

}  // namespace holo
