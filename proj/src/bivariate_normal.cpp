#include "r2r/bivariate_normal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace r2r {

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace {

// Half of the symmetric 6-, 12- and 20-point Gauss-Legendre rules on [-1, 1].
constexpr std::array<double, 3> kX6 = {-0.932469514203152, -0.6612093864662645,
                                       -0.23861918608319693};
constexpr std::array<double, 3> kW6 = {0.17132449237916975, 0.36076157304813894,
                                       0.46791393457269137};
constexpr std::array<double, 6> kX12 = {-0.9815606342467192, -0.9041172563704748,
                                        -0.7699026741943047, -0.5873179542866175,
                                        -0.3678314989981802, -0.1252334085114689};
constexpr std::array<double, 6> kW12 = {0.04717533638651202, 0.10693932599531888,
                                        0.1600783285433461,  0.20316742672306565,
                                        0.23349253653835464, 0.2491470458134027};
constexpr std::array<double, 10> kX20 = {
    -0.9931285991850949, -0.9639719272779138, -0.9122344282513258, -0.8391169718222188,
    -0.7463319064601508, -0.636053680726515,  -0.5108670019508271, -0.37370608871541955,
    -0.2277858511416451, -0.07652652113349734};
constexpr std::array<double, 10> kW20 = {
    0.017614007139153273, 0.04060142980038622, 0.06267204833410944, 0.08327674157670467,
    0.10193011981724026,  0.11819453196151825, 0.13168863844917653, 0.14209610931838187,
    0.14917298647260366,  0.15275338713072578};

template <std::size_t N>
double integrate_moderate(const std::array<double, N>& x, const std::array<double, N>& w, double h,
                          double k, double r) {
  const double hk = h * k;
  const double hs = 0.5 * (h * h + k * k);
  const double asr = std::asin(r);
  double sum = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    for (double sign : {1.0, -1.0}) {
      const double sn = std::sin(asr * (sign * x[i] + 1.0) * 0.5);
      sum += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
    }
  }
  return sum * asr / (4.0 * std::numbers::pi) + normal_cdf(-h) * normal_cdf(-k);
}

template <std::size_t N>
double integrate_high(const std::array<double, N>& x, const std::array<double, N>& w, double h,
                      double k, double r) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (r < 0.0) k = -k;
  const double hk = h * k;
  double bvn = 0.0;
  if (std::abs(r) < 1.0) {
    const double as = (1.0 - r) * (1.0 + r);
    double a = std::sqrt(as);
    const double bs = (h - k) * (h - k);
    const double c = (4.0 - hk) / 8.0;
    const double d = (12.0 - hk) / 16.0;
    bvn = a * std::exp(-(bs / as + hk) / 2.0) *
          (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
    if (hk > -160.0) {
      const double b = std::sqrt(bs);
      bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
             (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (std::size_t i = 0; i < N; ++i) {
      for (double sign : {1.0, -1.0}) {
        const double xs = std::pow(a * (sign * x[i] + 1.0), 2);
        const double rs = std::sqrt(1.0 - xs);
        const double asr = -(bs / xs + hk) / 2.0;
        if (asr > -100.0) {
          bvn += a * w[i] * std::exp(asr) *
                 (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                  (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
    }
    bvn = -bvn / two_pi;
  }
  if (r > 0.0) return bvn + normal_cdf(-std::max(h, k));
  bvn = -bvn;
  if (k > h) {
    if (h < 0.0) {
      bvn += normal_cdf(k) - normal_cdf(h);
    } else {
      bvn += normal_cdf(-h) - normal_cdf(-k);
    }
  }
  return bvn;
}

}  // namespace

double bivariate_normal_upper(double h, double k, double r) {
  if (!(r >= -1.0 && r <= 1.0)) throw std::domain_error("correlation must lie in [-1, 1]");
  if (std::isinf(h) || std::isinf(k)) {
    if (h == std::numeric_limits<double>::infinity() || k == std::numeric_limits<double>::infinity())
      return 0.0;
    if (h == -std::numeric_limits<double>::infinity()) return normal_cdf(-k);
    return normal_cdf(-h);
  }
  const double ar = std::abs(r);
  double value = 0.0;
  if (ar < 0.3) {
    value = integrate_moderate(kX6, kW6, h, k, r);
  } else if (ar < 0.75) {
    value = integrate_moderate(kX12, kW12, h, k, r);
  } else if (ar < 0.925) {
    value = integrate_moderate(kX20, kW20, h, k, r);
  } else {
    value = integrate_high(kX20, kW20, h, k, r);
  }
  return std::clamp(value, 0.0, 1.0);
}

}  // namespace r2r
