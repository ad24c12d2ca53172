#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "holo/error.hpp"
#include "holo/numeric_text.hpp"

/// Lorenz-Mie scattering by a homogeneous sphere.
///
/// Conventions follow Bohren & Huffman: time dependence exp(-i w t), so an
/// absorbing particle has Im(m) >= 0, and the outgoing Riccati-Bessel
/// function is xi_n(x) = x h_n^(1)(x) = psi_n(x) - i chi_n(x).
namespace holo::mie {

using cplx = std::complex<double>;

/// Series truncation order: floor(x + 4.05 x^(1/3) + 2), at least 3.
inline int wiscombe_order(double x) {
  const int n = static_cast<int>(std::floor(x + 4.05 * std::cbrt(x) + 2.0));
  return std::max(n, 3);
}

/// Start order of the downward recurrence for D_n(z).
///
/// The continued fraction behind the recurrence only converges once the
/// order exceeds |z| by a margin growing like |z|^(1/3), so the start sits
/// above both n_max and |z|.
inline int downward_start_order(cplx z, int n_max) {
  const double az = std::abs(z);
  const int pad = 16 + static_cast<int>(std::ceil(8.0 * std::cbrt(az)));
  return std::max(n_max, static_cast<int>(std::ceil(az))) + pad;
}

/// Logarithmic derivative D_n(z) = psi_n'(z) / psi_n(z) for n = 0..n_max
/// (index = order), by downward recurrence from D_start = 0.
inline std::vector<cplx> log_derivative(cplx z, int n_max) {
  if (!(std::abs(z) > 0.0)) throw ValueError("log_derivative: argument must be non-zero");
  if (n_max < 1) throw ValueError("log_derivative: n_max must be >= 1");
  const int start = downward_start_order(z, n_max);
  std::vector<cplx> d(static_cast<std::size_t>(n_max) + 1);
  cplx dn(0.0, 0.0);
  for (int n = start; n > 0; --n) {
    const cplx nz = static_cast<double>(n) / z;
    dn = nz - 1.0 / (dn + nz);  // dn now holds D_{n-1}
    if (n - 1 <= n_max) d[static_cast<std::size_t>(n - 1)] = dn;
    if (!std::isfinite(dn.real()) || !std::isfinite(dn.imag())) {
      throw NumericError("log_derivative: non-finite value at order " + std::to_string(n - 1));
    }
  }
  return d;
}

struct RiccatiBessel {
  std::vector<double> psi;  // psi_n(x), n = 0..n_max
  std::vector<cplx> xi;     // xi_n(x),  n = 0..n_max
};

/// psi_n and xi_n for n = 0..n_max by upward recurrence from
/// psi_{-1} = cos x, psi_0 = sin x, chi_{-1} = -sin x, chi_0 = cos x.
inline RiccatiBessel riccati_psi_xi(double x, int n_max) {
  if (!(x > 0.0)) throw ValueError("riccati_psi_xi: x must be positive, got " + format_double(x));
  RiccatiBessel out;
  out.psi.resize(static_cast<std::size_t>(n_max) + 1);
  out.xi.resize(static_cast<std::size_t>(n_max) + 1);
  double psi_prev = std::cos(x);
  double psi = std::sin(x);
  double chi_prev = -std::sin(x);
  double chi = std::cos(x);
  out.psi[0] = psi;
  out.xi[0] = cplx(psi, -chi);
  for (int n = 1; n <= n_max; ++n) {
    const double f = (2.0 * n - 1.0) / x;
    const double psi_next = f * psi - psi_prev;
    const double chi_next = f * chi - chi_prev;
    psi_prev = psi;
    psi = psi_next;
    chi_prev = chi;
    chi = chi_next;
    out.psi[static_cast<std::size_t>(n)] = psi;
    out.xi[static_cast<std::size_t>(n)] = cplx(psi, -chi);
  }
  return out;
}

/// Scattering coefficients a_n, b_n for n = 1..n_max, stored at index n-1.
struct MieCoefficients {
  double x = 0.0;
  cplx m{1.0, 0.0};
  int n_max = 0;
  std::vector<cplx> a;
  std::vector<cplx> b;

  cplx a_n(int n) const { return a[static_cast<std::size_t>(n - 1)]; }
  cplx b_n(int n) const { return b[static_cast<std::size_t>(n - 1)]; }
};

/// Coefficients for size parameter x = k r and relative index m. n_max
/// defaults to the Wiscombe order; pass a larger value to extend the series.
inline MieCoefficients mie_coefficients(double x, cplx m, int n_max = 0) {
  if (!(x > 0.0) || !std::isfinite(x)) throw ValueError("mie: size parameter must be positive, got " + format_double(x));
  if (!(m.real() > 0.0) || m.imag() < 0.0) {
    throw ValueError("mie: relative index needs Re(m) > 0 and Im(m) >= 0, got (" + format_double(m.real()) + ", " +
                     format_double(m.imag()) + ")");
  }
  MieCoefficients c;
  c.x = x;
  c.m = m;
  c.n_max = n_max > 0 ? n_max : wiscombe_order(x);
  if (m == cplx(1.0, 0.0)) {
    // Index-matched: no scattering, exactly.
    c.a.assign(static_cast<std::size_t>(c.n_max), cplx(0.0, 0.0));
    c.b.assign(static_cast<std::size_t>(c.n_max), cplx(0.0, 0.0));
    return c;
  }
  const auto d = log_derivative(m * x, c.n_max);
  const auto rb = riccati_psi_xi(x, c.n_max);
  c.a.resize(static_cast<std::size_t>(c.n_max));
  c.b.resize(static_cast<std::size_t>(c.n_max));
  for (int n = 1; n <= c.n_max; ++n) {
    const auto k = static_cast<std::size_t>(n);
    const double nx = n / x;
    const cplx da = d[k] / m + nx;
    const cplx db = d[k] * m + nx;
    const cplx an = (da * rb.psi[k] - rb.psi[k - 1]) / (da * rb.xi[k] - rb.xi[k - 1]);
    const cplx bn = (db * rb.psi[k] - rb.psi[k - 1]) / (db * rb.xi[k] - rb.xi[k - 1]);
    if (!std::isfinite(an.real()) || !std::isfinite(an.imag()) || !std::isfinite(bn.real()) ||
        !std::isfinite(bn.imag())) {
      throw NumericError("mie: non-finite coefficient at order " + std::to_string(n));
    }
    c.a[k - 1] = an;
    c.b[k - 1] = bn;
  }
  return c;
}

struct AngularFunctions {
  std::vector<double> pi;   // pi_n, n = 0..n_max
  std::vector<double> tau;  // tau_n, n = 0..n_max
};

/// Angular functions pi_n(cos theta), tau_n(cos theta), upward recurrence
/// from pi_0 = 0, pi_1 = 1.
inline AngularFunctions pi_tau(double theta, int n_max) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
    throw ValueError("pi_tau: theta must lie in [0, pi], got " + format_double(theta));
  }
  const double mu = std::cos(theta);
  AngularFunctions f;
  f.pi.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  f.tau.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
  if (n_max < 1) return f;
  f.pi[1] = 1.0;
  f.tau[1] = mu;
  for (int n = 2; n <= n_max; ++n) {
    const auto k = static_cast<std::size_t>(n);
    f.pi[k] = ((2.0 * n - 1.0) / (n - 1.0)) * mu * f.pi[k - 1] - (n / (n - 1.0)) * f.pi[k - 2];
    f.tau[k] = n * mu * f.pi[k] - (n + 1.0) * f.pi[k - 1];
  }
  return f;
}

struct AmplitudeMatrix {
  double theta = 0.0;
  cplx s1;
  cplx s2;
};

/// S1, S2 at mu = cos(theta) without allocating; the per-pixel hot path.
inline void amplitude_at_cos(const MieCoefficients& c, double mu, cplx& s1, cplx& s2) noexcept {
  s1 = 0.0;
  s2 = 0.0;
  double pi_prev = 0.0;
  double pi = 1.0;
  for (int n = 1; n <= c.n_max; ++n) {
    if (n > 1) {
      const double next = ((2.0 * n - 1.0) / (n - 1.0)) * mu * pi - (n / (n - 1.0)) * pi_prev;
      pi_prev = pi;
      pi = next;
    }
    const double tau = n * mu * pi - (n + 1.0) * pi_prev;
    const double w = (2.0 * n + 1.0) / (n * (n + 1.0));
    const cplx an = c.a[static_cast<std::size_t>(n - 1)];
    const cplx bn = c.b[static_cast<std::size_t>(n - 1)];
    s1 += w * (an * pi + bn * tau);
    s2 += w * (an * tau + bn * pi);
  }
}

inline AmplitudeMatrix amplitude_matrix(const MieCoefficients& c, double theta) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi)) {
    throw ValueError("amplitude_matrix: theta must lie in [0, pi], got " + format_double(theta));
  }
  AmplitudeMatrix s;
  s.theta = theta;
  // cos(0) is exactly 1, where pi_n = tau_n and S1 = S2 bit for bit.
  amplitude_at_cos(c, theta == 0.0 ? 1.0 : std::cos(theta), s.s1, s.s2);
  return s;
}

struct CrossSections {
  double q_ext = 0.0;
  double q_sca = 0.0;
  double q_abs = 0.0;
};

/// Efficiencies (cross sections normalised by the geometric cross section).
inline CrossSections cross_sections(const MieCoefficients& c) {
  double ext = 0.0;
  double sca = 0.0;
  for (int n = 1; n <= c.n_max; ++n) {
    const cplx an = c.a_n(n);
    const cplx bn = c.b_n(n);
    ext += (2.0 * n + 1.0) * (an + bn).real();
    sca += (2.0 * n + 1.0) * (std::norm(an) + std::norm(bn));
  }
  const double f = 2.0 / (c.x * c.x);
  return {f * ext, f * sca, f * (ext - sca)};
}

}  // namespace holo::mie
