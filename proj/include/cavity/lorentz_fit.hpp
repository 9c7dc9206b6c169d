#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cavity/constants.hpp"

namespace cavity {

// Least-squares fit of the resonance model
//   f(w) = (c / 2L) * gamma / ((w - w0)^2 + (gamma/2)^2)
// to sampled response values. Width and amplitude length are fitted in log
// space so they stay positive across the many decades the stack produces.
struct LorentzianFit {
  double center = 0.0;
  double gamma = 0.0;
  double length = 0.0;     // L in the c*gamma/(2L) amplitude
  double chi2 = 0.0;
  double max_rel_dev = 0.0;
  bool converged = false;
  int iterations = 0;

  double eval(double w) const {
    const double half = 0.5 * gamma;
    return (speed_of_light / (2.0 * length)) * gamma /
           ((w - center) * (w - center) + half * half);
  }
};

namespace detail {

inline bool solve3(const std::array<double, 9>& a, const std::array<double, 3>& b,
                   std::array<double, 3>& x) {
  const double d = a[0] * (a[4] * a[8] - a[5] * a[7]) -
                   a[1] * (a[3] * a[8] - a[5] * a[6]) +
                   a[2] * (a[3] * a[7] - a[4] * a[6]);
  if (std::abs(d) < 1e-300) return false;
  const double inv = 1.0 / d;
  x[0] = inv * (b[0] * (a[4] * a[8] - a[5] * a[7]) -
                a[1] * (b[1] * a[8] - a[5] * b[2]) +
                a[2] * (b[1] * a[7] - a[4] * b[2]));
  x[1] = inv * (a[0] * (b[1] * a[8] - a[5] * b[2]) -
                b[0] * (a[3] * a[8] - a[5] * a[6]) +
                a[2] * (a[3] * b[2] - b[1] * a[6]));
  x[2] = inv * (a[0] * (a[4] * b[2] - b[1] * a[7]) -
                a[1] * (a[3] * b[2] - b[1] * a[6]) +
                b[0] * (a[3] * a[7] - a[4] * a[6]));
  return true;
}

}  // namespace detail

inline LorentzianFit fit_lorentzian(std::span<const double> w,
                                    std::span<const double> y, double center0,
                                    double gamma0, double length0,
                                    int max_iterations = 200) {
  if (w.size() != y.size() || w.size() < 8)
    throw std::invalid_argument("fit_lorentzian: need >= 8 samples");
  if (!(gamma0 > 0.0) || !(length0 > 0.0))
    throw std::invalid_argument("fit_lorentzian: initial gamma and L must be positive");

  // Parameters: p = (w0, ln gamma, ln L).
  double p0 = center0, p1 = std::log(gamma0), p2 = std::log(length0);
  const size_t n = w.size();

  auto chi2_of = [&](double c, double lg, double lL) {
    const double g = std::exp(lg), L = std::exp(lL);
    const double half2 = 0.25 * g * g;
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double dw = w[i] - c;
      const double f = (speed_of_light / (2.0 * L)) * g / (dw * dw + half2);
      const double r = f - y[i];
      s += r * r;
    }
    return s;
  };

  double chi2 = chi2_of(p0, p1, p2);
  double lambda = 1e-3;
  LorentzianFit out;
  int iter = 0;
  for (; iter < max_iterations; ++iter) {
    const double g = std::exp(p1), L = std::exp(p2);
    const double half2 = 0.25 * g * g;
    std::array<double, 9> jtj{};
    std::array<double, 3> jtr{};
    for (size_t i = 0; i < n; ++i) {
      const double dw = w[i] - p0;
      const double D = dw * dw + half2;
      const double f = (speed_of_light / (2.0 * L)) * g / D;
      const double r = f - y[i];
      const double j0 = f * 2.0 * dw / D;           // d f / d w0
      const double j1 = f * (1.0 - g * g / (2.0 * D));  // d f / d ln gamma
      const double j2 = -f;                          // d f / d ln L
      jtj[0] += j0 * j0; jtj[1] += j0 * j1; jtj[2] += j0 * j2;
      jtj[4] += j1 * j1; jtj[5] += j1 * j2; jtj[8] += j2 * j2;
      jtr[0] += j0 * r; jtr[1] += j1 * r; jtr[2] += j2 * r;
    }
    jtj[3] = jtj[1]; jtj[6] = jtj[2]; jtj[7] = jtj[5];

    bool stepped = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      std::array<double, 9> a = jtj;
      a[0] *= (1.0 + lambda);
      a[4] *= (1.0 + lambda);
      a[8] *= (1.0 + lambda);
      std::array<double, 3> step{};
      if (!detail::solve3(a, {-jtr[0], -jtr[1], -jtr[2]}, step)) {
        lambda *= 10.0;
        continue;
      }
      const double q0 = p0 + step[0], q1 = p1 + step[1], q2 = p2 + step[2];
      const double trial = chi2_of(q0, q1, q2);
      if (trial <= chi2) {
        const bool tiny = std::abs(step[0]) < 1e-14 * std::max(1.0, std::abs(p0)) &&
                          std::abs(step[1]) < 1e-14 && std::abs(step[2]) < 1e-14;
        const bool flat = chi2 - trial <= 1e-15 * (chi2 + 1e-300);
        p0 = q0; p1 = q1; p2 = q2;
        chi2 = trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        stepped = true;
        if (tiny || flat) {
          out.converged = true;
          iter = max_iterations;  // leave outer loop
        }
        break;
      }
      lambda *= 5.0;
    }
    if (!stepped) {
      out.converged = true;  // stuck at a (local) minimum
      break;
    }
  }

  out.center = p0;
  out.gamma = std::exp(p1);
  out.length = std::exp(p2);
  out.chi2 = chi2;
  out.iterations = iter;
  double worst = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (y[i] > 0.0) worst = std::max(worst, std::abs(out.eval(w[i]) - y[i]) / y[i]);
  }
  out.max_rel_dev = worst;
  return out;
}

}  // namespace cavity
