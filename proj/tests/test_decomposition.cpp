#include <doctest.h>

#include <cmath>
#include <random>

#include "hardy/decomposition.hpp"
#include "hardy/errors.hpp"
#include "hardy/generators.hpp"

using namespace hardy;

namespace {

/// Tree with one node R split once; returns (tree, node id of R).
std::pair<std::shared_ptr<const PartitionTree>, int> two_block_tree() {
  const std::vector<int> target{3, 1, 0};
  auto t = std::make_shared<const PartitionTree>(PartitionTree::build(
      ComputationDomain::standard(1),
      [&](const CZSet&, std::span<const int> q) {
        return q.size() <= target.size() && std::equal(q.begin(), q.end(), target.begin());
      },
      10));
  return {t, t->node_at(target)};
}

double max_abs_diff(const PartitionFunction& f, const PartitionFunction& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f.value(i) - g.value(i)));
  return m;
}

}  // namespace

TEST_CASE("validate_atom examples") {
  auto [t, id] = two_block_tree();
  const auto& n = t->node(id);
  REQUIRE(n.n_children == 2);
  const auto R = n.set;
  const double rho = rho_measure(R);
  const auto two_block =
      (PartitionFunction::indicator(t, n.first_child) - PartitionFunction::indicator(t, n.first_child + 1)) * (1.0 / rho);
  const auto cert = validate_atom(two_block, INFINITY, R);
  CHECK(cert.valid());
  CHECK(std::abs(cert.sup_norm_residual) < 1e-14);
  CHECK(cert.mean_residual == 0.0);

  const auto flat = PartitionFunction::indicator(t, id) * (1.0 / rho);
  CHECK(validate_atom(flat, INFINITY, R).mean_residual == doctest::Approx(1.0));
  CHECK_FALSE(validate_atom(flat, INFINITY, R).valid());

  const auto doubled = 2.0 * two_block;
  CHECK(validate_atom(doubled, INFINITY, R).sup_norm_residual > 0.0);
  CHECK_FALSE(validate_atom(doubled, INFINITY, R).valid());

  // the two-block atom is also a (1, p)-atom
  for (double p : {1.5, 2.0, 4.0}) CHECK(validate_atom(two_block, p, R).valid());

  const auto outside = two_block + PartitionFunction::indicator(t, 0) * 1e-3;
  CHECK_THROWS_AS(validate_atom(outside, 2.0, R), SupportViolation);
  CHECK_THROWS_AS(validate_atom(two_block, 1.0, R), InvalidArgument);
}

TEST_CASE("cz_decompose basic cases") {
  std::mt19937_64 rng(1);
  const auto D = ComputationDomain::standard(1);
  const auto t = random_tree(D, rng, 2, 8, 0.5);
  const auto f = random_function(t, rng, -0.5, 0.5);
  const auto dec = cz_decompose(f, 1.0, 2.0);
  CHECK(dec.bad_parts.empty());
  CHECK(max_abs_diff(dec.good, f) == 0.0);

  // indicator of one deep leaf
  int deep = t->leaves()[0];
  for (int id : t->leaves())
    if (t->node(id).depth > t->node(deep).depth) deep = id;
  const auto ind = PartitionFunction::indicator(t, deep);
  for (double e : {1.0, 2.0}) {
    const int root = t->path_of(deep)[0];
    const double alpha = 1.1 * std::pow(rho_measure(t->node(deep).set) / rho_measure(t->node(root).set), 1.0 / e);
    const auto dc = cz_decompose(ind, alpha, e);
    REQUIRE_FALSE(dc.bad_parts.empty());
    double covered = 0.0;
    for (const auto& part : dc.bad_parts) {
      CHECK(part.power_average > std::pow(alpha, e));
      CHECK(part.power_average <= 2.0 * std::pow(alpha, e) * (1 + 1e-12));
      double integral = 0.0, l1 = 0.0;
      const auto& nn = t->node(part.node);
      for (int i = nn.leaf_begin; i < nn.leaf_end; ++i) {
        const double v = part.b.values[static_cast<std::size_t>(i - nn.leaf_begin)];
        integral += v * t->leaf_measure(static_cast<std::size_t>(i));
        l1 += std::abs(v) * t->leaf_measure(static_cast<std::size_t>(i));
      }
      CHECK(std::abs(integral) <= 1e-10 * std::max(l1, 1e-300));
      covered += overlap_measure(part.set, t->node(deep).set);
    }
    CHECK(covered == doctest::Approx(rho_measure(t->node(deep).set)));
  }
  CHECK_THROWS_AS(cz_decompose(PartitionFunction::constant(t, 3.0), 1.0, 1.0), RootAverageTooLarge);
}

TEST_CASE("cz_decompose properties on random functions") {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 20; ++k) {
    const int d = 1 + k % 2;
    const auto D = ComputationDomain::standard(d);
    const auto t = random_tree(D, rng, 2, d == 1 ? 9 : 6, 0.55);
    std::vector<double> v(t->leaf_count());
    std::exponential_distribution<double> ex(1.0);
    for (auto& x : v) x = std::pow(ex(rng), 3.0) * (std::uniform_real_distribution<>(0, 1)(rng) < 0.5 ? -1 : 1);
    const PartitionFunction f(t, v);
    for (double e : {1.0, 2.0, 3.0}) {
      double alpha = 0.0;
      for (int r = 0; r < t->root_count(); ++r)
        alpha = std::max(alpha, std::pow(integrate_on(PartitionFunction(t, [&] {
                                            auto w = v;
                                            for (auto& x : w) x = std::pow(std::abs(x), e);
                                            return w;
                                          }()),
                                                      t->node(r).set) /
                                             rho_measure(t->node(r).set),
                                         1.0 / e));
      alpha *= 1.5;
      const auto dc = cz_decompose(f, alpha, e);
      // exact reconstruction
      auto sum = dc.good;
      for (const auto& part : dc.bad_parts) sum += expand(part.b, t);
      CHECK(max_abs_diff(sum, f) <= 1e-12 * lp_norm(f, INFINITY));
      // bounds
      const double level = std::pow(alpha, e);
      const double two_d = std::pow(2.0, d);
      for (const auto& part : dc.bad_parts) {
        CHECK(part.power_average > level);
        CHECK(part.power_average <= two_d * level * (1 + 1e-12));
        // parent did not stop
        const int parent = t->node(part.node).parent;
        REQUIRE(parent >= 0);
        double s = 0.0;
        const auto& pn = t->node(parent);
        for (int i = pn.leaf_begin; i < pn.leaf_end; ++i)
          s += std::pow(std::abs(f.value(static_cast<std::size_t>(i))), e) * t->leaf_measure(static_cast<std::size_t>(i));
        CHECK(s / rho_measure(pn.set) <= level * (1 + 1e-12));
      }
      CHECK(dc.max_good <= std::pow(2.0, d / e) * alpha * (1 + 1e-12));
      CHECK(dc.max_good <= default_kappa0(d) * alpha);
      CHECK(dc.total_bad_measure <= std::pow(lp_norm(f, e), e) / level * (1 + 1e-12));
      if (e == 1.0) CHECK(dc.total_bad_measure <= lp_norm(f, 1) / alpha * (1 + 1e-12));
    }
  }
}

TEST_CASE("reexpand: empty stopping family gives a single atom") {
  auto [t, id] = two_block_tree();
  const auto& n = t->node(id);
  const double rho = rho_measure(n.set);
  const auto a =
      (PartitionFunction::indicator(t, n.first_child) - PartitionFunction::indicator(t, n.first_child + 1)) * (1.0 / rho);
  const double alpha = 2.0, p = 2.0;
  const auto ex = reexpand_atom(a, p, n.set, alpha);
  REQUIRE(ex.terms.size() == 1);
  REQUIRE(ex.terms[0].atoms.size() == 1);
  CHECK(ex.terms[0].coefficient * ex.terms[0].atoms[0].weight == doctest::Approx(std::pow(2.0, 0.5) * alpha * rho));
  CHECK(ex.residuals.empty());
  CHECK(ex.residual_l1 == 0.0);
  // a_0 = 2^{-d/p} alpha^{-1} rho^{-1} b
  const auto a0 = expand(ex.terms[0].atoms[0].atom, t);
  CHECK(max_abs_diff(a0, a * (1.0 / (std::pow(2.0, 0.5) * alpha))) < 1e-15 / rho);
  CHECK(ex.all_checks_pass());
}

TEST_CASE("reexpand: d = 1, p = 2, alpha = 2") {
  const double p = 2.0, alpha = 2.0;
  CHECK(ratio_q(1, p, alpha) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
  std::mt19937_64 rng(3);
  const auto D = ComputationDomain::standard(1);
  for (int k = 0; k < 20; ++k) {
    const auto g = random_atom(D, rng, p, 1, 4, 7, k % 3 == 0);
    REQUIRE(validate_atom(g.a, p, g.R).valid());
    const auto ex = reexpand_atom(g.a, p, g.R, alpha, 8);
    const double rho = rho_measure(g.R);
    CHECK(ex.all_checks_pass());
    for (const auto& c : ex.checks) {
      CHECK(c.ok());
      CHECK(c.residual_l1 <= 2.0 * std::pow(std::sqrt(0.5), c.n) * rho * (1 + 1e-10));
    }
    CHECK(ex.coefficient_sum <= std::pow(2.0, 1.5) * alpha * rho / (1 - std::sqrt(0.5)) * (1 + 1e-10));
    // b = terms + residuals
    const auto b = g.a * rho;
    CHECK(max_abs_diff(ex.reconstruct(g.a.tree_ptr()), b) <= 1e-12 * lp_norm(b, INFINITY));
    // every emitted atom is a (1, inf)-atom
    for (const auto& stage : ex.terms)
      for (const auto& at : stage.atoms) CHECK(validate_atom(expand(at.atom, g.a.tree_ptr()), INFINITY, at.set).valid());
  }
}

TEST_CASE("reexpand: peaked atoms run every stage") {
  const double p = 2.0, alpha = 2.0, q = std::sqrt(0.5);
  std::mt19937_64 rng(31);
  const auto D = ComputationDomain::standard(1);
  for (int k = 0; k < 10; ++k) {
    const auto g = peaked_atom(D, rng, p, 60, 0.4 + 0.01 * k);
    REQUIRE(validate_atom(g.a, p, g.R).valid());
    const auto ex = reexpand_atom(g.a, p, g.R, alpha, 8);
    const double rho = rho_measure(g.R);
    CHECK(ex.depth == 8);
    CHECK(ex.all_checks_pass());
    REQUIRE(ex.checks.size() == 9);
    for (const auto& c : ex.checks) {
      CHECK(c.pieces >= 1);
      CHECK(c.residual_l1 <= 2.0 * std::pow(q, c.n) * rho * (1 + 1e-10));
    }
    const auto b = g.a * rho;
    CHECK(max_abs_diff(ex.reconstruct(g.a.tree_ptr()), b) <= 1e-12 * lp_norm(b, INFINITY));
  }
}

TEST_CASE("reexpand terminates with zero residual and certified norm") {
  std::mt19937_64 rng(4);
  for (int d = 1; d <= 2; ++d) {
    const auto D = ComputationDomain::standard(d);
    for (double p : {1.5, 2.0, 3.0}) {
      const double alpha = optimal_alpha(d, p);
      CHECK(ratio_q(d, p, alpha) == doctest::Approx(1.0 / p).epsilon(1e-12));
      for (int k = 0; k < 5; ++k) {
        const auto g = random_atom(D, rng, p, 1, 3, d == 1 ? 6 : 4);
        const auto ex = reexpand_atom(g.a, p, g.R, alpha, 200);
        CHECK(ex.residuals.empty());
        CHECK(ex.all_checks_pass());
        CHECK(ex.coefficient_sum / rho_measure(g.R) <= certified_cp(d, p, alpha) * (1 + 1e-10));
      }
    }
  }
}

TEST_CASE("reexpand errors and degenerate input") {
  auto [t, id] = two_block_tree();
  const auto R = t->node(id).set;
  const auto zero = PartitionFunction::zero(t);
  const auto ex = reexpand_atom(zero, 2.0, R, 2.0);
  CHECK(ex.terms.empty());
  CHECK(ex.residual_l1 == 0.0);
  CHECK_THROWS_AS(reexpand_atom(zero, 2.0, R, 1.0), AlphaTooSmall);
  CHECK_THROWS_AS(reexpand_atom(zero, 2.0, R, alpha_threshold(1, 2.0)), AlphaTooSmall);
  const auto flat = PartitionFunction::indicator(t, id) * (1.0 / rho_measure(R));
  CHECK_THROWS_AS(reexpand_atom(flat, 2.0, R, 2.0), AtomInvalid);
  const CZSet elsewhere(DyadicCube{1, 3, {1}}, 0.5, 0.5);
  CHECK_THROWS_AS(reexpand_atom(zero, 2.0, elsewhere, 2.0), RegionNotResolved);
  CHECK(alpha_threshold(1, 2.0) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("h1 upper bound") {
  std::mt19937_64 rng(5);
  const auto D = ComputationDomain::standard(1);
  auto [t, id] = two_block_tree();
  CHECK(h1_upper_bound(PartitionFunction::zero(t), 2.0) == 0.0);
  CHECK_THROWS_AS(h1_upper_bound(PartitionFunction::indicator(t, id), 2.0), NonzeroMean);

  for (double p : {1.5, 2.0, 4.0}) {
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
      const auto g = random_atom(D, rng, INFINITY, 1, 4, 6);
      const double c = std::uniform_real_distribution<>(-5, 5)(rng);
      const auto f = c * g.a;
      const auto cert = h1_decompose(f, p);
      worst = std::max(worst, cert.bound / std::abs(c));
      // the certificate reconstructs f from (1, inf)-atoms
      auto sum = PartitionFunction::zero(f.tree_ptr());
      for (const auto& term : cert.terms) {
        const auto atom = expand(term.atom, f.tree_ptr());
        CHECK(validate_atom(atom, INFINITY, f.tree().node(term.node).set).valid());
        sum += term.coefficient * atom;
      }
      CHECK(max_abs_diff(sum, f) <= 1e-12 * lp_norm(f, INFINITY));
    }
    CHECK(worst <= h1_scheme_constant(1, p));
    // (1, p)-atoms too
    for (int k = 0; k < 10; ++k) {
      const auto g = random_atom(D, rng, p, 1, 4, 6);
      CHECK(h1_upper_bound(g.a, p) <= h1_scheme_constant(1, p) * (1 + 1e-12));
    }
  }
}

TEST_CASE("h1 decompositions concatenate") {
  std::mt19937_64 rng(6);
  const auto D = ComputationDomain::standard(1);
  for (int k = 0; k < 10; ++k) {
    const auto t = random_tree(D, rng, 3, 8, 0.5);
    const int node = t->node_at(std::vector<int>{2, 1, 0});
    const auto f = random_atom_on(t, node, rng, 2.0, 1.0);
    const auto g = random_atom_on(t, node, rng, 2.0, 0.7) * 3.0;
    const auto cf = h1_decompose(f, 2.0), cg = h1_decompose(g, 2.0);
    // the union of both atom lists is a decomposition of f + g with coefficient sum bound(f) + bound(g)
    auto sum = PartitionFunction::zero(t);
    double coefficients = 0.0;
    for (const auto* cert : {&cf, &cg})
      for (const auto& term : cert->terms) {
        sum += term.coefficient * expand(term.atom, t);
        coefficients += std::abs(term.coefficient);
      }
    CHECK(max_abs_diff(sum, f + g) <= 1e-12 * lp_norm(f + g, INFINITY));
    CHECK(coefficients == doctest::Approx(cf.bound + cg.bound).epsilon(1e-12));
  }
}

TEST_CASE("h1 support must lie in one root") {
  std::mt19937_64 rng(7);
  const auto t = random_tree(ComputationDomain::standard(1), rng, 1, 3, 0.0);
  const auto f = PartitionFunction::indicator(t, 0) * (1.0 / rho_measure(t->node(0).set)) -
                 PartitionFunction::indicator(t, 1) * (1.0 / rho_measure(t->node(1).set));
  CHECK_THROWS_AS(h1_upper_bound(f, 2.0), SupportViolation);
}
