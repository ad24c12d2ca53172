#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <variant>

#include "holo/error.hpp"
#include "holo/numeric_text.hpp"

namespace holo {

/// Prior on one scalar parameter: uniform, Gaussian, or a Gaussian with
/// hard bounds. Log densities are -inf outside the support.
class Prior {
 public:
  struct Uniform {
    double lo, hi;
  };
  struct Gaussian {
    double mu, sigma;
  };
  struct BoundedGaussian {
    double mu, sigma, lo, hi;
  };

  static Prior uniform(double lo, double hi) {
    check_bounds(lo, hi);
    return Prior(Uniform{lo, hi});
  }
  static Prior gaussian(double mu, double sigma) {
    check_sigma(sigma);
    return Prior(Gaussian{mu, sigma});
  }
  static Prior bounded_gaussian(double mu, double sigma, double lo, double hi) {
    check_sigma(sigma);
    check_bounds(lo, hi);
    return Prior(BoundedGaussian{mu, sigma, lo, hi});
  }

  bool in_support(double v) const {
    if (!std::isfinite(v)) return false;
    return std::visit(
        [v](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Gaussian>) {
            return true;
          } else {
            return v >= p.lo && v <= p.hi;
          }
        },
        dist_);
  }

  /// Uniform and Gaussian are normalised; the bounded Gaussian uses the
  /// untruncated Gaussian normalisation.
  double log_density(double v) const {
    if (!in_support(v)) return -std::numeric_limits<double>::infinity();
    return std::visit(
        [v](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return -std::log(p.hi - p.lo);
          } else {
            const double u = (v - p.mu) / p.sigma;
            return -0.5 * u * u - std::log(p.sigma * std::sqrt(2.0 * std::numbers::pi));
          }
        },
        dist_);
  }

  /// Typical width: sigma for the Gaussians, the standard deviation for
  /// the uniform.
  double scale() const {
    return std::visit(
        [](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return (p.hi - p.lo) / std::sqrt(12.0);
          } else {
            return p.sigma;
          }
        },
        dist_);
  }

  double center() const {
    return std::visit(
        [](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return 0.5 * (p.lo + p.hi);
          } else {
            return p.mu;
          }
        },
        dist_);
  }

  /// Same shape and width, shifted so that its center is `c`.
  Prior recentered(double c) const {
    const double shift = c - center();
    return std::visit(
        [shift, c](const auto& p) -> Prior {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return Prior(Uniform{p.lo + shift, p.hi + shift});
          } else if constexpr (std::is_same_v<T, Gaussian>) {
            return Prior(Gaussian{c, p.sigma});
          } else {
            return Prior(BoundedGaussian{c, p.sigma, p.lo + shift, p.hi + shift});
          }
        },
        dist_);
  }

  /// "uniform lo hi", "gaussian mu sigma", "bounded_gaussian mu sigma lo hi".
  std::string to_string() const {
    return std::visit(
        [](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return "uniform " + format_double(p.lo) + " " + format_double(p.hi);
          } else if constexpr (std::is_same_v<T, Gaussian>) {
            return "gaussian " + format_double(p.mu) + " " + format_double(p.sigma);
          } else {
            return "bounded_gaussian " + format_double(p.mu) + " " + format_double(p.sigma) + " " +
                   format_double(p.lo) + " " + format_double(p.hi);
          }
        },
        dist_);
  }

  static Prior parse(std::string_view text) {
    const auto tok = split_ws(text);
    const std::string what = "prior '" + std::string(trim(text)) + "'";
    auto num = [&](std::size_t i) { return parse_double(tok[i], what); };
    if (tok.size() == 3 && tok[0] == "uniform") return uniform(num(1), num(2));
    if (tok.size() == 3 && tok[0] == "gaussian") return gaussian(num(1), num(2));
    if (tok.size() == 5 && tok[0] == "bounded_gaussian") return bounded_gaussian(num(1), num(2), num(3), num(4));
    throw ValueError(what + ": expected 'uniform lo hi', 'gaussian mu sigma' or 'bounded_gaussian mu sigma lo hi'");
  }

  const auto& distribution() const noexcept { return dist_; }

  friend bool operator==(const Prior& a, const Prior& b) { return a.to_string() == b.to_string(); }

 private:
  using Dist = std::variant<Uniform, Gaussian, BoundedGaussian>;
  explicit Prior(Dist d) : dist_(d) {}

  static void check_bounds(double lo, double hi) {
    if (!(lo < hi)) throw ValueError("prior bounds need lo < hi, got [" + format_double(lo) + ", " + format_double(hi) + "]");
  }
  static void check_sigma(double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValueError("prior sigma must be positive, got " + format_double(sigma));
  }

  Dist dist_;
};

/// Sum of per-parameter log densities.
inline double log_prior(std::span<const Prior> priors, std::span<const double> v) {
  if (priors.size() != v.size()) {
    throw ShapeError("log_prior: " + std::to_string(v.size()) + " values for " + std::to_string(priors.size()) + " priors");
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double term = priors[i].log_density(v[i]);
    if (term == -std::numeric_limits<double>::infinity()) return term;
    lp += term;
  }
  return lp;
}

}  // namespace holo
