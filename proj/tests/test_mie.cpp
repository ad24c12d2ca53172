#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "holo/mie.hpp"

using namespace holo::mie;

namespace {

// Reference values from tests/oracles/mie_oracle.py (40-digit mpmath
// evaluation of half-integer Bessel functions).
struct CoeffRef {
  double x;
  cplx m;
  int n;
  cplx a, b;
};

const CoeffRef kCoeffRefs[] = {
    {1.0, {1.5, 0.0}, 1, {0.034872697078027158, -0.18345733039737418}, {0.00080050584632154241, -0.028281885310416409}},
    {1.0, {1.5, 0.0}, 2, {0.00010516194202378705, -0.010254310459008779}, {5.7318255675175941e-7, -0.00075708799238497769}},
    {1.0, {1.5, 0.0}, 3, {7.3210965062191223e-8, -0.00027057523852404865}, {1.4184153756006927e-10, -1.1909724494712304e-5}},
    {5.0, {1.33, 0.0}, 1, {0.99357738895338123, -0.079883422022110592}, {0.97223655779310207, 0.16429435012720971}},
    {5.0, {1.33, 0.0}, 3, {0.92473769774964606, -0.26381411658652823}, {0.98299734545611322, -0.12928095096474201}},
    {10.0, {1.5, 0.01}, 1, {0.77220236627392811, 0.32163509526236746}, {0.90800041039121765, 0.038224550185893807}},
    {10.0, {1.5, 0.01}, 2, {0.90059872309369993, 0.0021054668088647194}, {0.82898998051886487, 0.27489603833208769}},
    {10.0, {1.5, 0.01}, 3, {0.90756308810285191, 0.14710614239653521}, {0.88075295868817014, -0.056585942193591445}},
    {30.0, {2.0, 0.0}, 1, {0.99958307492914471, -0.020414486139518286}, {0.84306763468920038, 0.36373699018488256}},
    {30.0, {2.0, 0.0}, 20, {0.92723646239262907, -0.25974796477014339}, {0.41916376974599776, -0.49342223691106781}},
    {30.0, {2.0, 0.0}, 40, {6.2282470931689231e-11, -7.8919244121956797e-6}, {2.8158419811942436e-9, -5.306450766063205e-5}},
    {30.0, {2.0, 0.0}, 44, {3.6498267668988801e-17, -6.0413796163615476e-9}, {3.6175790237549794e-16, -1.9019934342039612e-8}},
};

void expect_close(cplx got, cplx want, double tol) {
  EXPECT_NEAR(got.real(), want.real(), tol) << "got " << got << " want " << want;
  EXPECT_NEAR(got.imag(), want.imag(), tol) << "got " << got << " want " << want;
}

}  // namespace

TEST(WiscombeOrder, KnownValues) {
  EXPECT_EQ(wiscombe_order(10.0), 20);
  EXPECT_EQ(wiscombe_order(1e-3), 3);
  EXPECT_EQ(wiscombe_order(1.0), 7);
}

TEST(LogDerivative, MatchesHighPrecisionAtUnitArgument) {
  const auto d = log_derivative({1.0, 0.0}, 5);
  expect_close(d[1], {1.7940189124919499907, 0.0}, 1e-12);
}

TEST(LogDerivative, MatchesHighPrecisionForComplexArgument) {
  const auto d = log_derivative({10.0, 1.0}, wiscombe_order(10.0));
  expect_close(d[1], {-0.24602875006719436, -0.89968001733136741}, 1e-12);
  expect_close(d[5], {0.33833003889036267, -0.94768931454094721}, 1e-12);
  expect_close(d[10], {0.54829064291980923, -0.19897777394749318}, 1e-12);
  expect_close(d[20], {1.8337943692667941, -0.23546566386518651}, 1e-12);
  for (const auto& v : d) {
    EXPECT_TRUE(std::isfinite(v.real()) && std::isfinite(v.imag()));
  }
}

TEST(LogDerivative, AsymptoticHighOrder) {
  // For n >> |z|, psi_n(z) ~ z^(n+1) / (2n+1)!!, so D_n -> (n + 1) / z ~ n / z.
  const double z = 0.5;
  const auto d = log_derivative({z, 0.0}, 200);
  EXPECT_NEAR(d[200].real() / (200.0 / z), 1.0, 0.01);
}

TEST(LogDerivative, RejectsZeroArgument) { EXPECT_THROW(log_derivative({0.0, 0.0}, 3), holo::ValueError); }

TEST(RiccatiBessel, SeedAndWronskian) {
  for (double x : {0.5, 2.0, 5.0, 20.0}) {
    const int nmax = wiscombe_order(x);
    const auto rb = riccati_psi_xi(x, nmax);
    EXPECT_EQ(rb.psi[0], std::sin(x));
    for (int n = 1; n <= nmax; ++n) {
      const auto k = static_cast<std::size_t>(n);
      const double dpsi = rb.psi[k - 1] - n * rb.psi[k] / x;
      const cplx dxi = rb.xi[k - 1] - static_cast<double>(n) * rb.xi[k] / x;
      const cplx w = rb.psi[k] * dxi - dpsi * rb.xi[k];
      EXPECT_NEAR(w.real(), 0.0, 1e-9) << "x=" << x << " n=" << n;
      EXPECT_NEAR(w.imag(), 1.0, 1e-9) << "x=" << x << " n=" << n;
    }
  }
}

TEST(RiccatiBessel, RealPartOfXiIsPsi) {
  const auto rb = riccati_psi_xi(5.0, 12);
  for (int n = 0; n <= 12; ++n) EXPECT_NEAR(rb.xi[n].real(), rb.psi[n], 1e-10);
}

TEST(RiccatiBessel, RejectsNonPositive) { EXPECT_THROW(riccati_psi_xi(0.0, 3), holo::ValueError); }

TEST(MieCoefficients, MatchHighPrecisionReference) {
  for (const auto& r : kCoeffRefs) {
    const auto c = mie_coefficients(r.x, r.m);
    ASSERT_LE(r.n, c.n_max);
    const double scale = std::max(1e-12, 1e-9 * std::abs(r.a));
    expect_close(c.a_n(r.n), r.a, scale);
    expect_close(c.b_n(r.n), r.b, std::max(1e-12, 1e-9 * std::abs(r.b)));
  }
}

TEST(MieCoefficients, IndexMatchedSphereDoesNotScatter) {
  const auto c = mie_coefficients(0.5, {1.0, 0.0});
  for (int n = 1; n <= c.n_max; ++n) {
    EXPECT_LT(std::abs(c.a_n(n)), 1e-12);
    EXPECT_LT(std::abs(c.b_n(n)), 1e-12);
  }
}

TEST(MieCoefficients, TruncationOrder) { EXPECT_EQ(mie_coefficients(10.0, {1.33, 0.0}).n_max, 20); }

TEST(MieCoefficients, UnitarityCircleForRealIndex) {
  for (double x : {0.1, 1.0, 5.0, 30.0}) {
    for (double m : {1.1, 1.33, 2.0}) {
      const auto c = mie_coefficients(x, {m, 0.0});
      for (int n = 1; n <= c.n_max; ++n) {
        EXPECT_NEAR(std::abs(c.a_n(n) - 0.5), 0.5, 1e-10);
        EXPECT_NEAR(std::abs(c.b_n(n) - 0.5), 0.5, 1e-10);
      }
    }
  }
}

TEST(MieCoefficients, BoundedAndFiniteOverRange) {
  for (double x : {1e-3, 0.05, 1.0, 12.0, 50.0, 100.0}) {
    for (double mr : {1.0, 1.5, 3.0}) {
      for (double mi : {0.0, 0.1, 1.0}) {
        const auto c = mie_coefficients(x, {mr, mi});
        for (int n = 1; n <= c.n_max; ++n) {
          ASSERT_TRUE(std::isfinite(c.a_n(n).real()) && std::isfinite(c.b_n(n).real()));
          EXPECT_LE(std::abs(c.a_n(n)), 1.0 + 1e-12);
          EXPECT_LE(std::abs(c.b_n(n)), 1.0 + 1e-12);
        }
      }
    }
  }
}

TEST(MieCoefficients, RejectsBadInput) {
  EXPECT_THROW(mie_coefficients(0.0, {1.5, 0.0}), holo::ValueError);
  EXPECT_THROW(mie_coefficients(1.0, {-1.5, 0.0}), holo::ValueError);
  EXPECT_THROW(mie_coefficients(1.0, {1.5, -0.1}), holo::ValueError);
}

TEST(PiTau, Seeds) {
  for (double th : {0.0, 0.3, 1.7, std::numbers::pi}) {
    const auto f = pi_tau(th, 4);
    EXPECT_EQ(f.pi[1], 1.0);
    EXPECT_DOUBLE_EQ(f.tau[1], std::cos(th));
  }
}

TEST(PiTau, ForwardClosedForm) {
  const auto f = pi_tau(0.0, 30);
  for (int n = 1; n <= 30; ++n) {
    EXPECT_NEAR(f.pi[n], n * (n + 1) / 2.0, 1e-12 * n * n);
    EXPECT_NEAR(f.tau[n], n * (n + 1) / 2.0, 1e-12 * n * n);
  }
}

TEST(PiTau, LegendreDerivativeAtGeneralAngle) {
  // pi_n = P_n'(mu); check against std::legendre by central differences.
  const double th = 0.9;
  const double mu = std::cos(th);
  const auto f = pi_tau(th, 8);
  for (unsigned n = 1; n <= 8; ++n) {
    const double h = 1e-5;
    const double dp = (std::legendre(n, mu + h) - std::legendre(n, mu - h)) / (2 * h);
    EXPECT_NEAR(f.pi[n], dp, 1e-6);
  }
}

TEST(PiTau, RightAngle) {
  const auto f = pi_tau(std::numbers::pi / 2, 3);
  EXPECT_NEAR(f.tau[2], -3.0, 1e-14);
}

TEST(PiTau, RejectsOutOfRange) {
  EXPECT_THROW(pi_tau(-0.1, 3), holo::ValueError);
  EXPECT_THROW(pi_tau(3.2, 3), holo::ValueError);
}

TEST(AmplitudeMatrix, ForwardDegeneracy) {
  const auto c = mie_coefficients(5.0, {1.5, 0.02});
  const auto s = amplitude_matrix(c, 0.0);
  EXPECT_EQ(s.s1, s.s2);
  cplx half_sum = 0.0;
  for (int n = 1; n <= c.n_max; ++n) half_sum += 0.5 * (2.0 * n + 1.0) * (c.a_n(n) + c.b_n(n));
  expect_close(s.s1, half_sum, 1e-12);
}

TEST(AmplitudeMatrix, OpticalTheorem) {
  for (double x : {0.3, 3.0, 25.0}) {
    const auto c = mie_coefficients(x, {1.4, 0.05});
    const double from_s0 = 4.0 / (x * x) * amplitude_matrix(c, 0.0).s1.real();
    EXPECT_NEAR(from_s0, cross_sections(c).q_ext, 1e-10);
  }
}

TEST(AmplitudeMatrix, IndexMatchedIsZero) {
  const auto c = mie_coefficients(3.0, {1.0, 0.0});
  for (double th : {0.0, 0.5, 2.0, std::numbers::pi}) {
    const auto s = amplitude_matrix(c, th);
    EXPECT_LT(std::abs(s.s1), 1e-12);
    EXPECT_LT(std::abs(s.s2), 1e-12);
  }
}

TEST(AmplitudeMatrix, TruncationStability) {
  for (double x : {0.5, 5.0, 10.0}) {
    const int nmax = wiscombe_order(x);
    const auto c0 = mie_coefficients(x, {1.5, 0.0});
    const auto c5 = mie_coefficients(x, {1.5, 0.0}, nmax + 5);
    for (double th : {0.0, 0.4, 1.5, 3.0}) {
      const auto a = amplitude_matrix(c0, th);
      const auto b = amplitude_matrix(c5, th);
      EXPECT_LT(std::abs(a.s1 - b.s1), 1e-9 * std::abs(b.s1)) << x << " " << th;
      EXPECT_LT(std::abs(a.s2 - b.s2), 1e-9 * std::abs(b.s2)) << x << " " << th;
    }
  }
}

TEST(AmplitudeMatrix, TruncationTailMatchesExactSeries) {
  // At x = 50 the five extra terms are worth ~5e-9 of |S| at side angles even
  // in exact arithmetic (oracle values); the double-precision tail must agree.
  const double x = 50.0;
  const auto c0 = mie_coefficients(x, {1.5, 0.0});
  const auto c5 = mie_coefficients(x, {1.5, 0.0}, wiscombe_order(x) + 5);
  const struct {
    double theta, rel_s1, rel_s2;
  } refs[] = {{0.0, 8.772548488770551e-10, 8.772548488770551e-10},
              {0.4, 5.899159136263999e-10, 8.145030080649585e-10},
              {1.5, 5.470793223534172e-09, 4.792275466609020e-09},
              {3.0, 5.597619111879271e-09, 4.892039638335581e-09}};
  for (const auto& r : refs) {
    const auto a = amplitude_matrix(c0, r.theta);
    const auto b = amplitude_matrix(c5, r.theta);
    EXPECT_NEAR(std::abs(a.s1 - b.s1) / std::abs(b.s1), r.rel_s1, 0.02 * r.rel_s1) << r.theta;
    EXPECT_NEAR(std::abs(a.s2 - b.s2) / std::abs(b.s2), r.rel_s2, 0.02 * r.rel_s2) << r.theta;
  }
}

TEST(AmplitudeMatrix, ContinuousInAngle) {
  const auto c = mie_coefficients(15.0, {1.33, 0.0});
  double max_jump = 0.0;
  double max_s = 0.0;
  const int steps = 20000;
  auto prev = amplitude_matrix(c, 0.0);
  for (int i = 1; i <= steps; ++i) {
    const auto cur = amplitude_matrix(c, std::numbers::pi * i / steps);
    max_jump = std::max(max_jump, std::abs(cur.s1 - prev.s1) + std::abs(cur.s2 - prev.s2));
    max_s = std::max(max_s, std::abs(cur.s1));
    prev = cur;
  }
  EXPECT_LT(max_jump, 0.01 * max_s);
}

TEST(CrossSections, PublishedValues) {
  // Bohren & Huffman's 0.525 um water droplet example, m = 1.55 at 632.8 nm.
  const double x = 2.0 * std::numbers::pi * 0.525 / 0.6328;
  const auto q = cross_sections(mie_coefficients(x, {1.55, 0.0}));
  EXPECT_NEAR(q.q_ext, 3.10543, 1e-5);
  EXPECT_NEAR(q.q_ext, 3.1054255314658775, 1e-10);
  // Wiscombe's NCAR test case x = 10, m = 1.5.
  EXPECT_NEAR(cross_sections(mie_coefficients(10.0, {1.5, 0.0})).q_ext, 2.8819989520758974, 1e-10);
  EXPECT_NEAR(cross_sections(mie_coefficients(1.0, {1.5, 0.0})).q_sca, 0.21509759604288531, 1e-12);
}

TEST(CrossSections, NoAbsorptionForRealIndex) {
  for (double x : {0.1, 2.0, 40.0}) {
    EXPECT_NEAR(cross_sections(mie_coefficients(x, {1.6, 0.0})).q_abs, 0.0, 1e-10);
  }
}

TEST(CrossSections, AbsorbingSphereAbsorbs) {
  const auto q = cross_sections(mie_coefficients(4.0, {1.5, 0.1}));
  EXPECT_GT(q.q_abs, 0.01);
}

TEST(CrossSections, RayleighLimit) {
  const double x = 0.01;
  const cplx m(1.5, 0.0);
  const cplx ratio = (m * m - 1.0) / (m * m + 2.0);
  const double rayleigh = 8.0 / 3.0 * std::pow(x, 4) * std::norm(ratio);
  EXPECT_NEAR(rayleigh, 2.31e-9, 0.01e-9);
  EXPECT_NEAR(cross_sections(mie_coefficients(x, m)).q_sca / rayleigh, 1.0, 0.01);
}

TEST(CrossSections, ExtinctionParadoxTrend) {
  const double q10 = cross_sections(mie_coefficients(10.0, {1.33, 0.0})).q_ext;
  const double q100 = cross_sections(mie_coefficients(100.0, {1.33, 0.0})).q_ext;
  EXPECT_GT(q10, 1.0);
  EXPECT_LT(q10, 4.0);
  EXPECT_LT(std::abs(q100 - 2.0), std::abs(q10 - 2.0));
}
