#include <doctest.h>

#include <cmath>
#include <random>

#include "hardy/errors.hpp"
#include "hardy/functions.hpp"
#include "hardy/geometry.hpp"
#include "oracles.hpp"

using namespace hardy;

namespace {

CZSet example_set() { return CZSet(DyadicCube{1, 3, {0}}, 0.0, 1.0); }

double dist_vec(const GroupPoint& p, const GroupPoint& q) {
  double s = std::abs(p.a - q.a);
  for (int i = 0; i < p.dim; ++i) s = std::max(s, std::abs(p.x[i] - q.x[i]));
  return s;
}

}  // namespace

TEST_CASE("group product and inverse") {
  const GroupPoint p(1, {1}, 2), q(1, {3}, 4);
  const auto pq = group_mul(p, q);
  CHECK(pq.x[0] == 7.0);
  CHECK(pq.a == 8.0);
  CHECK(group_mul(GroupPoint::identity(1), q) == q);

  std::mt19937_64 rng(1);
  for (int d = 1; d <= 3; ++d) {
    for (int k = 0; k < 100; ++k) {
      const auto a = oracle::random_point(d, rng), b = oracle::random_point(d, rng), c = oracle::random_point(d, rng);
      CHECK(dist_vec(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c))) < 1e-12 * 100);
      CHECK(dist_vec(group_mul(a, group_inv(a)), GroupPoint::identity(d)) < 1e-12);
      CHECK(dist_vec(group_mul(group_inv(a), a), GroupPoint::identity(d)) < 1e-12);
    }
  }
}

TEST_CASE("group point validation") {
  CHECK_THROWS_AS(GroupPoint(1, {0}, 0.0), InvalidArgument);
  CHECK_THROWS_AS(GroupPoint(4, {0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(group_mul(GroupPoint::identity(1), GroupPoint::identity(2)), InvalidArgument);
}

TEST_CASE("metric distance") {
  const auto e = GroupPoint::identity(1);
  CHECK(metric_distance(e, e) == 0.0);
  CHECK(metric_distance(e, GroupPoint(1, {0}, std::exp(1.0))) == doctest::Approx(1.0).epsilon(1e-14));

  std::mt19937_64 rng(2);
  for (int d = 1; d <= 3; ++d) {
    for (int k = 0; k < 200; ++k) {
      const auto g = oracle::random_point(d, rng), p = oracle::random_point(d, rng), q = oracle::random_point(d, rng);
      const double dpq = metric_distance(p, q);
      CHECK(dpq == doctest::Approx(metric_distance(q, p)).epsilon(1e-15));
      CHECK(std::abs(metric_distance(group_mul(g, p), group_mul(g, q)) - dpq) < 1e-12 * std::max(1.0, dpq));
      CHECK(metric_distance(p, q) <= metric_distance(p, g) + metric_distance(g, q) + 1e-12);
      // against the cosh form
      double s = (p.a - q.a) * (p.a - q.a);
      for (int i = 0; i < d; ++i) s += (p.x[i] - q.x[i]) * (p.x[i] - q.x[i]);
      CHECK(dpq == doctest::Approx(std::acosh(1.0 + s / (2 * p.a * q.a))).epsilon(1e-9));
    }
  }
}

TEST_CASE("measures of a set") {
  const auto R = example_set();
  CHECK(rho_measure(R) == 16.0);
  CHECK(lambda_measure(R) == doctest::Approx(8.0 * (std::exp(1.0) - std::exp(-1.0))));
  CHECK(lambda_measure(R) == doctest::Approx(18.8032).epsilon(1e-5));

  // a -> c a with Q fixed multiplies lambda by c^{-d}
  for (int d = 1; d <= 3; ++d) {
    const CZSet S(DyadicCube{d, 2, {}}, 0.3, 0.7), T(DyadicCube{d, 2, {}}, 0.3 + std::log(2.5), 0.7);
    CHECK(lambda_measure(T) == doctest::Approx(lambda_measure(S) * std::pow(2.5, -d)).epsilon(1e-13));
    // direct integration of a^{-(d+1)}
    const double direct = S.cube.volume() * (std::pow(S.a_lo(), -d) - std::pow(S.a_hi(), -d)) / d;
    CHECK(lambda_measure(S) == doctest::Approx(direct).epsilon(1e-13));
  }

  const CZSet thin(DyadicCube{1, -20, {0}}, 0.0, 1e-7);
  CHECK(rho_measure(thin) < 1e-12);
}

TEST_CASE("rho closed form against stratified quadrature") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const auto R = random_admissible_set(1 + k % 3, 0.05, 4.0, rng);
    CHECK(rho_measure_mc(R, 100000, 7 + k) == doctest::Approx(rho_measure(R)).epsilon(1e-3));
  }
  CHECK_THROWS_AS(rho_measure_mc(example_set(), 0, 1), InvalidArgument);
}

TEST_CASE("admissibility") {
  CHECK(is_admissible(DyadicCube{1, 3, {0}}, 1.0, 1.0));
  CHECK_FALSE(is_admissible(DyadicCube{1, 2, {0}}, 1.0, 1.0));
  CHECK(is_admissible(DyadicCube{1, 1, {0}}, 1.0, 0.25));
  // boundary conventions: L equal to the lower bound is admissible, equal to the upper bound is not
  const double r = 0.5;
  CHECK(is_admissible(DyadicCube{1, 0, {0}}, 1.0 / (std::exp(2.0) * r), r));
  CHECK_FALSE(is_admissible(DyadicCube{1, 0, {0}}, 1.0 / (std::exp(8.0) * r), r));
  CHECK_FALSE(is_admissible(DyadicCube{1, 0, {0}}, 1.0, 0.0));
}

TEST_CASE("split example and grandchildren") {
  const auto R = example_set();
  const auto kids = split(R);
  REQUIRE(kids.size() == 2);
  CHECK(kids[0].cube == R.cube);
  CHECK(kids[0].a_center() == doctest::Approx(std::exp(-0.5)));
  CHECK(kids[1].a_center() == doctest::Approx(std::exp(0.5)));
  CHECK(kids[0].r() == 0.5);
  CHECK(rho_measure(kids[0]) == 8.0);
  CHECK(rho_measure(kids[1]) == 8.0);
  double total = 0.0;
  int count = 0;
  for (const auto& k : kids) {
    for (const auto& g : split(k)) {
      CHECK(g.admissible());
      total += rho_measure(g);
      ++count;
    }
  }
  CHECK(count >= 4);
  CHECK(total == doctest::Approx(16.0).epsilon(1e-14));
}

TEST_CASE("split properties on random admissible sets") {
  std::mt19937_64 rng(4);
  for (int d = 1; d <= 3; ++d) {
    for (int k = 0; k < 300; ++k) {
      const auto R = random_admissible_set(d, 0.02, 6.0, rng);
      const auto kids = split(R);
      CHECK((kids.size() == 2 || kids.size() == (std::size_t{1} << d)));
      double total = 0.0;
      for (std::size_t i = 0; i < kids.size(); ++i) {
        CHECK(kids[i].admissible());
        CHECK(R.contains(kids[i]));
        CHECK(std::abs(rho_measure(kids[i]) - rho_measure(R) / kids.size()) <= 1e-12 * rho_measure(R));
        total += rho_measure(kids[i]);
        for (std::size_t j = i + 1; j < kids.size(); ++j) CHECK(overlap_measure(kids[i], kids[j]) == 0.0);
      }
      CHECK(std::abs(total - rho_measure(R)) <= 1e-12 * rho_measure(R));
    }
  }
}

TEST_CASE("split raises on an inadmissible set") {
  const CZSet bad(DyadicCube{1, 10, {0}}, 0.0, 0.01);
  CHECK_THROWS_AS(split(bad), NoAdmissibleSplit);
}

TEST_CASE("enclosing ball") {
  const auto R = example_set();
  const double k0 = default_kappa0(1);
  const auto ball = enclosing_ball(R, k0);
  CHECK(ball.radius == 1.0);
  CHECK(R.contains(ball.center));
  for (double x : {0.0, 8.0})
    for (double a : {R.a_lo(), R.a_hi()}) CHECK(metric_distance(ball.center, GroupPoint(1, {x}, a)) <= k0);
  CHECK_THROWS_AS(enclosing_ball(R, 1e-3), ContainmentViolation);

  std::mt19937_64 rng(5);
  for (int d = 1; d <= 3; ++d)
    for (int k = 0; k < 200; ++k) CHECK_NOTHROW(enclosing_ball(random_admissible_set(d, 0.01, 5.0, rng), default_kappa0(d)));
}

TEST_CASE("point to set distance against grid refinement") {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 60; ++k) {
    const int d = 1 + k % 2;
    const auto R = random_admissible_set(d, 0.1, 2.0, rng);
    const auto c = R.center();
    std::normal_distribution<double> n01(0.0, 1.0);
    Vec x{};
    for (int i = 0; i < d; ++i) x[i] = c.x[i] + R.cube.side() * 2.0 * n01(rng);
    const GroupPoint p(d, x, c.a * std::exp(2.0 * R.r() * n01(rng)));
    const double exact = distance_to_set(p, R);
    const double grid = oracle::distance_grid(p, R, 1e-6);
    CHECK(exact <= grid + 1e-12);
    CHECK(grid - exact < 1e-3 * std::max(1.0, exact));
  }
}

TEST_CASE("dilated set membership") {
  const auto R = example_set();
  CHECK(dilated_contains(R, R.center()));
  CHECK(dilated_contains(R, GroupPoint(1, {8.0}, R.a_hi())));
  // far away: d(p, x_R) > r_R + diam R
  const double diam = metric_distance(GroupPoint(1, {0.0}, R.a_lo()), GroupPoint(1, {8.0}, R.a_hi()));
  const GroupPoint far(1, {4.0}, R.a_center() * std::exp(1.0 + diam + 0.1));
  CHECK(metric_distance(far, R.center()) > dilation_radius(R) + diam);
  CHECK_FALSE(dilated_contains(R, far));
  // just above the top face
  CHECK(dilated_contains(R, GroupPoint(1, {4.0}, R.a_hi() * std::exp(0.99))));
  CHECK_FALSE(dilated_contains(R, GroupPoint(1, {4.0}, R.a_hi() * std::exp(1.01))));

  const auto box = dilated_bounding_box(R);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // nothing of R* lies outside the box: probe a shell around it
  for (int k = 0; k < 2000; ++k) {
    const double u = box.u_lo - 1.0 + (box.u_hi - box.u_lo + 2.0) * unit(rng);
    const double w = box.hi[0] - box.lo[0];
    const double x = box.lo[0] - w + 3.0 * w * unit(rng);
    const bool inside = x >= box.lo[0] && x <= box.hi[0] && u >= box.u_lo && u <= box.u_hi;
    if (!inside) CHECK_FALSE(dilated_contains(R, GroupPoint(1, {x}, std::exp(u))));
  }
}

TEST_CASE("dilated measure is a bounded multiple of rho") {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 30; ++k) {
    const auto R = random_admissible_set(1, 0.05, 4.0, rng);
    const double ratio = dilated_measure_mc(R, 20000, 100 + k) / rho_measure(R);
    CHECK(ratio >= 1.0 - 0.05);
    CHECK(ratio <= default_kappa0(1));
    CHECK(ratio <= 10.0);
  }
}

TEST_CASE("ball growth") {
  // exact oracle and left/right measure agreement on balls at the identity
  for (int d = 1; d <= 3; ++d)
    for (double r : {0.3, 1.0, 2.5})
      CHECK(oracle::ball_rho(d, r) == doctest::Approx(oracle::ball_rho(d, r, -static_cast<double>(d))).epsilon(1e-7));

  CHECK(ball_growth(1, 0.5, 200000, 1) / 0.25 > 0.25);
  CHECK(ball_growth(1, 0.5, 200000, 1) / 0.25 < 4.0);
  CHECK(ball_growth(1, 0.5, 200000, 1) == doctest::Approx(oracle::ball_rho(1, 0.5)).epsilon(0.01));
  double lo = INFINITY, hi = 0.0;
  for (double r : {3.0, 4.0, 5.0}) {
    const double ratio = ball_growth(1, r, 400000, 2) / std::exp(r);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo < 4.0);
  CHECK(ball_growth(1, 1e-4, 10000, 3) < 1e-6);
  CHECK_THROWS_AS(ball_growth(1, 1.0, 0, 1), InvalidArgument);
}

TEST_CASE("right invariance of rho, slice by slice") {
  // f piecewise constant on a random tree; integrate x -> f(x g) exactly over u-slabs and x-intervals
  std::mt19937_64 rng(9);
  auto tree = std::make_shared<const PartitionTree>(PartitionTree::build(
      ComputationDomain::standard(1),
      [&](const CZSet&, std::span<const int> path) { return path.size() < 3 || std::uniform_real_distribution<>(0, 1)(rng) < 0.5; },
      7));
  std::vector<double> v(tree->leaf_count());
  for (auto& x : v) x = std::uniform_real_distribution<>(-1, 1)(rng);
  const PartitionFunction f(tree, v);
  // support of f restricted to a middle node so small right translations keep it inside the domain
  const int node = tree->node_at(std::vector<int>{2, 0});
  REQUIRE(node >= 0);
  const auto fr = restrict_to(f, node);
  const double target = integrate_rho(fr);

  for (const auto& g : {GroupPoint(1, {0.3}, 1.4), GroupPoint(1, {-1.1}, 0.8), GroupPoint(1, {0.0}, 1.25)}) {
    const double shift = std::log(g.a);
    std::vector<double> ub, xb;
    for (std::size_t i = 0; i < tree->leaf_count(); ++i) {
      ub.push_back(tree->leaf_set(i).u_lo() - shift);
      ub.push_back(tree->leaf_set(i).u_hi() - shift);
    }
    std::sort(ub.begin(), ub.end());
    ub.erase(std::unique(ub.begin(), ub.end()), ub.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < ub.size(); ++k) {
      const double um = 0.5 * (ub[k] + ub[k + 1]);
      const double a = std::exp(um);
      // x-breakpoints of the translated slice
      xb.clear();
      for (std::size_t i = 0; i < tree->leaf_count(); ++i) {
        const auto& s = tree->leaf_set(i);
        if (s.u_lo() <= um + shift && um + shift < s.u_hi()) {
          xb.push_back(s.cube.lo(0) - a * g.x[0]);
          xb.push_back(s.cube.hi(0) - a * g.x[0]);
        }
      }
      std::sort(xb.begin(), xb.end());
      double slice = 0.0;
      for (std::size_t j = 0; j + 1 < xb.size(); ++j) {
        if (xb[j + 1] <= xb[j]) continue;
        const GroupPoint p(1, {0.5 * (xb[j] + xb[j + 1])}, a);
        slice += fr.evaluate(group_mul(p, g)) * (xb[j + 1] - xb[j]);
      }
      total += slice * (ub[k + 1] - ub[k]);
    }
    CHECK(total == doctest::Approx(target).epsilon(1e-6));
  }

  // lambda is not right-invariant: right translation by (0, c) maps R to a set of lambda-measure c^{-d} lambda(R)
  const auto R = example_set();
  const CZSet Rc(DyadicCube{1, 3, {0}}, std::log(2.0), 1.0);
  CHECK(lambda_measure(Rc) == doctest::Approx(lambda_measure(R) / 2.0));
}

TEST_CASE("random admissible sets") {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 500; ++k) {
    const auto R = random_admissible_set(1 + k % 3, 0.05, 4.0, rng);
    CHECK(R.admissible());
    CHECK(R.r() >= 0.05);
    CHECK(R.r() <= 4.0);
  }
  CHECK_THROWS_AS(random_admissible_set(1, 0.0, 1.0, rng), InvalidArgument);
}
