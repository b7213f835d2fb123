#pragma once

// Independent reference computations used only by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "hardy/geometry.hpp"

namespace oracle {

inline double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

/// rho(B(e, r)) = int_{-r}^{r} omega_d (2 e^u cosh r - e^{2u} - 1)^{d/2} du, by composite Simpson.
inline double ball_rho(int d, double r, double weight_power = 0.0, int n = 20000) {
  auto f = [&](double u) {
    const double s = 2.0 * std::exp(u) * std::cosh(r) - std::exp(2.0 * u) - 1.0;
    return s <= 0.0 ? 0.0 : unit_ball_volume(d) * std::pow(s, d / 2.0) * std::exp(weight_power * u);
  };
  const double h = 2.0 * r / n;
  double s = f(-r) + f(r);
  for (int k = 1; k < n; ++k) s += (k % 2 ? 4.0 : 2.0) * f(-r + k * h);
  return s * h / 3.0;
}

/// min over u of d(p, (x, e^u)) by a zooming 1-D grid; the distance is unimodal in u for fixed x.
inline double distance_over_u(const hardy::GroupPoint& p, const hardy::Vec& x, const hardy::CZSet& R) {
  const int n = 16;
  double lo = R.u_lo(), hi = R.u_hi(), best = INFINITY;
  for (int pass = 0; pass < 60 && hi - lo > 1e-14; ++pass) {
    double arg = lo, pass_best = INFINITY;
    for (int k = 0; k <= n; ++k) {
      const double u = lo + (hi - lo) * k / n;
      const double dist = hardy::metric_distance(p, hardy::GroupPoint(p.dim, x, std::exp(u)));
      if (dist < pass_best) {
        pass_best = dist;
        arg = u;
      }
    }
    best = std::min(best, pass_best);
    const double w = 2.0 * (hi - lo) / n;
    lo = std::max(R.u_lo(), arg - w);
    hi = std::min(R.u_hi(), arg + w);
  }
  return best;
}

/// d(p, R) by grid refinement: a zooming grid over the cube, each x minimized over u,
/// until the estimate moves by less than tol over several consecutive passes.
inline double distance_grid(const hardy::GroupPoint& p, const hardy::CZSet& R, double tol) {
  const int d = R.dim();
  const int n = 16;
  hardy::Vec lo{}, hi{};
  for (int i = 0; i < d; ++i) {
    lo[i] = R.cube.lo(i);
    hi[i] = R.cube.hi(i);
  }
  double prev = INFINITY, best = INFINITY;
  int quiet = 0;
  for (int pass = 0; pass < 80; ++pass) {
    hardy::Vec arg{};
    double pass_best = INFINITY;
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n + 1);
    for (std::size_t code = 0; code < total; ++code) {
      std::size_t c = code;
      hardy::Vec x{};
      for (int i = 0; i < d; ++i, c /= static_cast<std::size_t>(n + 1))
        x[i] = lo[i] + (hi[i] - lo[i]) * static_cast<double>(c % static_cast<std::size_t>(n + 1)) / n;
      const double dist = distance_over_u(p, x, R);
      if (dist < pass_best) {
        pass_best = dist;
        arg = x;
      }
    }
    best = std::min(best, pass_best);
    quiet = std::abs(prev - best) < tol ? quiet + 1 : 0;
    if (quiet >= 6) break;
    prev = best;
    for (int i = 0; i < d; ++i) {
      const double w = 2.0 * (hi[i] - lo[i]) / n;
      lo[i] = std::max(R.cube.lo(i), arg[i] - w);
      hi[i] = std::min(R.cube.hi(i), arg[i] + w);
    }
  }
  return best;
}

inline hardy::GroupPoint random_point(int d, std::mt19937_64& rng, double spread = 3.0) {
  std::uniform_real_distribution<double> ux(-spread, spread);
  std::uniform_real_distribution<double> uu(-2.0, 2.0);
  hardy::Vec x{};
  for (int i = 0; i < d; ++i) x[i] = ux(rng);
  return hardy::GroupPoint(d, x, std::exp(uu(rng)));
}

}  // namespace oracle
