#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "hardy/decomposition.hpp"
#include "hardy/errors.hpp"
#include "hardy/generators.hpp"
#include "hardy/interpolation.hpp"

using namespace hardy;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g;
  for (int i = 0; i < n; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return g;
}

/// Smallest level at which every root passes the stopping test, with a margin.
double feasible_lambda(const PartitionFunction& f, double p) {
  double worst = 0.0;
  const auto& tree = f.tree();
  for (int r = 0; r < tree.root_count(); ++r) {
    const auto& n = tree.node(r);
    double s = 0.0;
    for (int i = n.leaf_begin; i < n.leaf_end; ++i)
      s += std::pow(std::abs(f.value(static_cast<std::size_t>(i))), p) * tree.leaf_measure(static_cast<std::size_t>(i));
    worst = std::max(worst, s / rho_measure(n.set));
  }
  return 1.01 * std::pow(worst, 1.0 / p);
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("theta_of") {
  CHECK(theta_of(2.0, INFINITY) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(theta_of(1.5, 3.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(theta_of(1.0 + 1e-9, 4.0) < 1e-8);
  CHECK(theta_of(2.0, 4.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  for (double p : {1.2, 2.0, 3.5})
    for (double p1 : {4.0, 10.0, kInf}) {
      const double th = theta_of(p, p1);
      CHECK(1.0 / p == doctest::Approx(1.0 - th + th * (std::isinf(p1) ? 0.0 : 1.0 / p1)).epsilon(1e-14));
    }
  CHECK_THROWS_AS(theta_of(3.0, 3.0), ExponentOrder);
  CHECK_THROWS_AS(theta_of(4.0, 3.0), ExponentOrder);
  CHECK_THROWS_AS(theta_of(1.0, 3.0), ExponentOrder);
}

TEST_CASE("g_objective and lambda_star") {
  CHECK(g_objective(1.0, 1.0, 2.0, INFINITY, 1.0) == doctest::Approx(2.0));
  CHECK(g_objective(1.0, 3.0, 2.0, INFINITY, 1.0) == doctest::Approx(1.0 / 3.0 + 3.0));
  CHECK(lambda_star(1.0, 2.0, INFINITY, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g_objective(1.0, 1e-8, 2.0, 4.0, 1.0) > 1e7);
  CHECK(g_objective(1.0, 1e8, 2.0, 4.0, 1.0) > 1e3);
  CHECK(g_objective(2.0, 0.7, 2.0, 4.0, 1.3) - g_objective(1.0, 0.7, 2.0, 4.0, 1.3) ==
        doctest::Approx(std::pow(0.7, 0.5)).epsilon(1e-13));

  for (double p : {1.5, 2.0, 3.0})
    for (double p1 : {4.0, 8.0, kInf}) {
      if (p1 <= p) continue;
      const double F = 2.7;
      for (double t : {1e-3, 0.5, 40.0}) {
        const double ls = lambda_star(t, p, p1, F);
        const auto grid = log_grid(ls / 100.0, ls * 100.0, 401);
        std::size_t arg = 0;
        for (std::size_t i = 0; i < grid.size(); ++i)
          if (g_objective(t, grid[i], p, p1, F) < g_objective(t, grid[arg], p, p1, F)) arg = i;
        const double step = std::log(grid[1] / grid[0]);
        CHECK(std::abs(std::log(grid[arg] / ls)) <= step);
        for (double lam : grid) CHECK(g_objective(t, ls, p, p1, F) <= g_objective(t, lam, p, p1, F) * (1 + 1e-14));
      }
      const auto ts = log_grid(1e-3, 1e3, 13);
      std::vector<double> gs, ls;
      for (double t : ts) {
        ls.push_back(lambda_star(t, p, p1, F));
        gs.push_back(g_objective(t, ls.back(), p, p1, F));
      }
      CHECK(slope(ts, gs) == doctest::Approx(theta_of(p, p1)).epsilon(1e-6));
      const double lam_exp = std::isinf(p1) ? -1.0 / p : p1 / (p - p * p1);
      CHECK(slope(ts, ls) == doctest::Approx(lam_exp).epsilon(1e-9));
      if (!std::isinf(p1))
        CHECK(p1 * (p - 1.0) / (p * (p1 - 1.0)) == doctest::Approx(theta_of(p, p1)).epsilon(1e-15));
    }
}

TEST_CASE("lambda_decompose properties") {
  std::mt19937_64 rng(41);
  const auto D = ComputationDomain::standard(1);
  const double p = 2.0, p1 = 4.0;
  const auto C = lambda_constants(1, p, p1);
  CHECK(C.a == doctest::Approx(std::sqrt(2.0)));
  CHECK(C.b == doctest::Approx(5.0));
  for (int k = 0; k < 20; ++k) {
    const auto f = k % 2 ? power_law_chain(D, rng, p, 2, 20) : random_function(random_tree(D, rng, 3, 7, 0.5), rng, -3.0, 3.0);
    const double fp = std::pow(lp_norm(f, p), p);
    const double lam0 = feasible_lambda(f, p);
    CHECK_THROWS_AS(lambda_decompose(f, lam0 / 1.02 * 0.9, p, p1), RootAverageTooLarge);
    for (double lam : log_grid(lam0, 4.0 * lp_norm(f, INFINITY), 6)) {
      const auto dec = lambda_decompose(f, lam, p, p1);
      const auto sum = dec.good + dec.bad;
      for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(std::abs(sum.value(i) - f.value(i)) <= 1e-12 * std::max(1.0, std::abs(f.value(i))));
      CHECK(dec.bound_a <= C.a * lam * (1 + 1e-12));
      CHECK(dec.max_mean_ratio <= C.a * (1 + 1e-12));
      CHECK(dec.bound_b <= C.b * std::pow(lam, p1 - p) * fp * (1 + 1e-12));
      CHECK(dec.total_bad_measure <= fp / std::pow(lam, p) * (1 + 1e-12));
      CHECK(dec.bound_c <= C.c * lam * dec.total_bad_measure * (1 + 1e-10));
      CHECK(dec.bound_c <= C.c * std::pow(lam, 1.0 - p) * fp * (1 + 1e-10));
      for (int id : dec.bad_nodes) CHECK(std::abs(integrate_on(dec.bad, f.tree().node(id).set)) <= 1e-12 * std::max(1.0, lp_norm(f, 1.0)));
      if (lam >= lp_norm(f, INFINITY)) {
        CHECK(dec.bad_sets.empty());
        CHECK(dec.bound_c == 0.0);
      }
    }
  }
}

TEST_CASE("K-functional upper bounds") {
  std::mt19937_64 rng(42);
  const auto D = ComputationDomain::standard(1);
  const double p = 2.0, p1 = 4.0;
  const auto ts = log_grid(1e-3, 1e3, 25);
  double lo = INFINITY, hi = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto f = power_law_chain(D, rng, p, 2, 60);
    const auto rep = k_functional_upper(f, ts, p, p1);
    CHECK(rep.theta == doctest::Approx(2.0 / 3.0));
    CHECK(is_concave_nondecreasing(ts, rep.k_upper));
    for (std::size_t i = 0; i < ts.size(); ++i) CHECK(rep.k_upper[i] <= ts[i] * rep.f_norm_p1 * (1 + 1e-12));
    CHECK(rep.mid_slope <= rep.theta + 0.05);
    lo = std::min(lo, rep.c_fit);
    hi = std::max(hi, rep.c_fit);
  }
  CHECK(hi / lo < 10.0);
  const auto f = power_law_chain(D, rng, p, 2, 10);
  CHECK_THROWS_AS(k_functional_upper(f, {}, p, p1), EmptyGrid);
  CHECK_THROWS_AS(k_functional_upper(f, ts, p, p1, 1), EmptyGrid);
  CHECK_THROWS_AS(k_functional_upper(f, ts, 4.0, 2.0), ExponentOrder);
}

TEST_CASE("K-functional of a single atom sits under both pure decompositions") {
  std::mt19937_64 rng(43);
  const auto D = ComputationDomain::standard(1);
  for (int k = 0; k < 5; ++k) {
    const auto g = random_atom(D, rng, 2.0, 1, 3, 4);
    const auto f = 3.0 * rho_measure(g.R) * g.a;
    const auto ts = log_grid(1e-4, 1e2, 13);
    const auto rep = k_functional_upper(f, ts, 2.0, INFINITY);
    REQUIRE(rep.h1_of_f >= 0.0);
    for (std::size_t i = 0; i < ts.size(); ++i)
      CHECK(rep.k_upper[i] <= std::min(rep.h1_of_f, ts[i] * rep.f_norm_p1) * (1 + 1e-12));
    CHECK(is_concave_nondecreasing(ts, rep.k_upper));
  }
}

TEST_CASE("concavity helper") {
  CHECK(is_concave_nondecreasing({1, 2, 3}, {1, 2, 2.5}));
  CHECK_FALSE(is_concave_nondecreasing({1, 2, 3}, {1, 1.2, 2.5}));
  CHECK_FALSE(is_concave_nondecreasing({1, 2, 3}, {1, 2, 1.5}));
}
