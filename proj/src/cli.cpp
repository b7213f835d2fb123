#include "hardy/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "hardy/errors.hpp"
#include "hardy/generators.hpp"
#include "hardy/parallel.hpp"

namespace hardy {

namespace {

using Rng = std::mt19937_64;
constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream * 1000003ull + index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return g;
}

/// Accumulates one named property over many instances and keeps the worst one.
class Gate {
 public:
  explicit Gate(std::string name) { c_.name = std::move(name); c_.passed = true; }

  void le(double measured, double bound) {
    const bool ok = measured <= bound;
    record(ok, bound > 0.0 ? measured / bound : (ok ? measured - bound : kInf), measured, bound);
  }
  void ge(double measured, double bound) {
    const bool ok = measured >= bound;
    record(ok, measured > 0.0 ? bound / measured : (ok ? bound - measured : kInf), measured, bound);
  }
  void gt(double measured, double bound) {
    const bool ok = measured > bound;
    record(ok, measured > 0.0 ? bound / measured : kInf, measured, bound);
  }
  void truth(bool ok) { record(ok, ok ? 0.0 : kInf, ok ? 1.0 : 0.0, 1.0); }

  Check done() const {
    Check c = c_;
    if (c.instances == 0) c.passed = false;
    return c;
  }

 private:
  void record(bool ok, double score, double measured, double bound) {
    if (std::isnan(score)) score = kInf;
    if (c_.instances == 0 || score > worst_) {
      worst_ = score;
      c_.measured = measured;
      c_.bound = bound;
    }
    ++c_.instances;
    c_.passed = c_.passed && ok;
  }

  Check c_;
  double worst_ = -kInf;
};

void add(RunReport& rep, const Gate& g) { rep.checks.push_back(g.done()); }

double max_abs_diff(const PartitionFunction& f, const PartitionFunction& g) {
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f.value(i) - g.value(i)));
  return m;
}

GroupPoint random_point(int d, Rng& rng) {
  std::uniform_real_distribution<double> x(-3.0, 3.0), u(-2.0, 2.0);
  Vec v{};
  for (int i = 0; i < d; ++i) v[static_cast<std::size_t>(i)] = x(rng);
  return GroupPoint(d, v, std::exp(u(rng)));
}

/// Largest coordinate gap, relative in x and absolute in ln a.
double point_gap(const GroupPoint& p, const GroupPoint& q) {
  double g = std::abs(std::log(p.a) - std::log(q.a));
  for (int i = 0; i < p.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    g = std::max(g, std::abs(p.x[k] - q.x[k]) / std::max(1.0, std::abs(q.x[k])));
  }
  return g;
}

double determinant(std::vector<std::vector<double>> m) {
  const std::size_t n = m.size();
  double det = 1.0;
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    if (m[piv][c] == 0.0) return 0.0;
    if (piv != c) {
      std::swap(m[piv], m[c]);
      det = -det;
    }
    det *= m[c][c];
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
    }
  }
  return det;
}

/// Central-difference Jacobian determinant of (x, u) -> (x, e^u) g in (x, u) coordinates.
double right_translation_jacobian(const GroupPoint& p, const GroupPoint& g) {
  const int d = p.dim;
  const auto coords = [&](const GroupPoint& q) {
    std::vector<double> c(static_cast<std::size_t>(d + 1));
    for (int i = 0; i < d; ++i) c[static_cast<std::size_t>(i)] = q.x[static_cast<std::size_t>(i)];
    c[static_cast<std::size_t>(d)] = std::log(q.a);
    return c;
  };
  const auto image = [&](std::vector<double> c) {
    Vec x{};
    for (int i = 0; i < d; ++i) x[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)];
    return coords(group_mul(GroupPoint(d, x, std::exp(c[static_cast<std::size_t>(d)])), g));
  };
  const auto base = coords(p);
  const double h = 1e-5;
  std::vector<std::vector<double>> J(base.size(), std::vector<double>(base.size()));
  for (std::size_t j = 0; j < base.size(); ++j) {
    auto plus = base, minus = base;
    plus[j] += h;
    minus[j] -= h;
    const auto fp = image(plus), fm = image(minus);
    for (std::size_t i = 0; i < base.size(); ++i) J[i][j] = (fp[i] - fm[i]) / (2.0 * h);
  }
  return determinant(J);
}

int quadrature_depth(int d) { return d == 1 ? 6 : d == 2 ? 4 : 3; }

/// Atom refined onto the quadrature tree.
std::pair<PartitionFunction, CZSet> atom_on(const std::shared_ptr<const PartitionTree>& quad, const ComputationDomain& D,
                                            Rng& rng) {
  const auto g = random_atom(D, rng, 2.0, 1, 4, 3);
  auto [q, a] = common_refinement(PartitionFunction::zero(quad), g.a);
  return {a, g.R};
}

// ---------------------------------------------------------------------------------------------

void run_geometry(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const int n = cfg.count.value_or(50);
  const double kappa0 = cfg.kappa0_value();
  const auto D = cfg.domain();
  Rng rng(cfg.seed);

  Gate assoc("group_associativity"), inverse("group_inverse"), left("metric_left_invariance"),
      symmetric("metric_symmetry"), triangle("metric_triangle"), right("rho_right_invariance_jacobian"),
      rho_mc("rho_closed_form_vs_monte_carlo");
  CsvTable csv({"set", "r", "log_a", "rho", "lambda", "dilated_ratio"});
  for (int k = 0; k < n; ++k) {
    const auto a = random_point(d, rng), b = random_point(d, rng), c = random_point(d, rng);
    assoc.le(point_gap(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c))), cfg.tol("algebra"));
    inverse.le(std::max(point_gap(group_mul(a, group_inv(a)), GroupPoint::identity(d)),
                        point_gap(group_mul(group_inv(a), a), GroupPoint::identity(d))),
               cfg.tol("algebra"));
    const double dbc = metric_distance(b, c);
    left.le(std::abs(metric_distance(group_mul(a, b), group_mul(a, c)) - dbc) / std::max(1.0, dbc), cfg.tol("algebra"));
    symmetric.le(std::abs(metric_distance(c, b) - dbc) / std::max(1.0, dbc), cfg.tol("algebra"));
    triangle.le(dbc, (metric_distance(b, a) + metric_distance(a, c)) * (1.0 + cfg.tol("algebra")));
    right.le(std::abs(right_translation_jacobian(b, a) - 1.0), cfg.tol("jacobian"));
  }
  const std::uint64_t mc_seed = sub_seed(cfg.seed, 1, 0);
  std::vector<CZSet> mc_sets;
  for (int k = 0; k < n; ++k) mc_sets.push_back(random_admissible_set(d, 0.05, 4.0, rng));
  std::vector<double> mc(mc_sets.size());
  parallel_for(mc_sets.size(), [&](std::size_t i) { mc[i] = rho_measure_mc(mc_sets[i], 100000, mc_seed + i); });
  for (std::size_t i = 0; i < mc_sets.size(); ++i) rho_mc.le(std::abs(mc[i] / rho_measure(mc_sets[i]) - 1.0), cfg.tol("mc_rel"));

  // CZ-set structure on 200 sets spanning r in [0.05, 4]
  constexpr std::size_t kStructureSets = 200;
  Gate split_ok("split_succeeds"), child_adm("children_admissible"), child_eq("children_equal_measure"),
      child_in("children_inside_parent"), dil_k("dilated_measure_le_kappa0"), dil_10("dilated_measure_ratio_le_10"),
      ball_ok("enclosing_ball_contains_set");
  std::vector<CZSet> sets;
  for (std::size_t k = 0; k < kStructureSets; ++k) sets.push_back(random_admissible_set(d, 0.05, 4.0, rng));
  std::vector<double> ratio(sets.size());
  const std::uint64_t dil_seed = sub_seed(cfg.seed, 2, 0);
  parallel_for(sets.size(), [&](std::size_t i) {
    ratio[i] = dilated_measure_mc(sets[i], 20000, dil_seed + i) / rho_measure(sets[i]);
  });
  double lambda_sum = 0.0;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto& R = sets[i];
    const double rho = rho_measure(R);
    lambda_sum += lambda_measure(R) / rho;
    std::vector<CZSet> kids;
    try {
      kids = split(R);
      split_ok.truth(!kids.empty());
    } catch (const NoAdmissibleSplit&) {
      split_ok.truth(false);
    }
    for (const auto& c : kids) {
      child_adm.truth(c.admissible() && is_admissible(c.cube, c.a_center(), c.r()));
      child_eq.le(std::abs(rho_measure(c) * static_cast<double>(kids.size()) - rho) / rho, cfg.tol("measure"));
      child_in.truth(R.contains(c));
    }
    dil_k.le(ratio[i], kappa0);
    dil_10.le(ratio[i], 10.0);
    try {
      const auto ball = enclosing_ball(R, kappa0);
      ball_ok.truth(ball.radius > 0.0 && dilated_contains(R, R.center()));
    } catch (const ContainmentViolation&) {
      ball_ok.truth(false);
    }
    csv.add_row({static_cast<double>(i), R.r(), R.log_a(), rho, lambda_measure(R), ratio[i]});
  }

  // ball growth: r^{d+1} near the identity, e^{dr} far away
  Gate small("ball_growth_small_r_uniform"), large("ball_growth_large_r_uniform");
  const auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  std::vector<double> rs{0.1, 0.2, 0.4}, rl{3.0, 4.0, 5.0}, gs(3), gl(3);
  for (std::size_t i = 0; i < 3; ++i) {
    gs[i] = ball_growth(d, rs[i], 100000, sub_seed(cfg.seed, 3, i)) / std::pow(rs[i], d + 1);
    gl[i] = ball_growth(d, rl[i], 100000, sub_seed(cfg.seed, 4, i)) / std::exp(d * rl[i]);
  }
  small.le(spread(gs), cfg.tol("uniformity"));
  large.le(spread(gl), cfg.tol("uniformity"));

  for (const auto* g : {&assoc, &inverse, &left, &symmetric, &triangle, &right, &rho_mc, &split_ok, &child_adm, &child_eq,
                        &child_in, &dil_k, &dil_10, &ball_ok, &small, &large})
    add(rep, *g);
  rep.results = Json{{"instances", n},
                     {"structure_sets", kStructureSets},
                     {"kappa0", kappa0},
                     {"max_dilated_ratio", *std::max_element(ratio.begin(), ratio.end())},
                     {"mean_lambda_over_rho", lambda_sum / static_cast<double>(sets.size())},
                     {"ball_small_ratios", gs},
                     {"ball_large_ratios", gl},
                     {"domain", to_json(D)}};
  rep.csv = csv.str();
}

void run_cz(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const double p = cfg.p;
  const int n = cfg.count.value_or(20);
  const double kappa0 = cfg.kappa0_value();
  const auto D = cfg.domain();
  Rng rng(cfg.seed);

  Gate recon("reconstruction_exact"), good_k("good_le_kappa0_alpha"), good_sharp("good_le_2^(d/p)_alpha"),
      lower("stopping_average_gt_alpha^p"), upper("stopping_average_le_2^d_alpha^p"), parent("parent_average_le_alpha^p"),
      mean("bad_parts_mean_zero"), measure("bad_measure_le_alpha^-p_norm^p"), disjoint("stopping_sets_disjoint"),
      integral("integral_preserved"), means("bad_means_equal_average_on"), refined("refine_preserves_integral");
  CsvTable csv({"function", "alpha", "bad_sets", "total_bad_measure", "measure_bound", "max_good"});
  Json per = Json::array();
  for (int k = 0; k < n; ++k) {
    const auto tree = random_tree(D, rng, 2, d == 1 ? 9 : 6, 0.55);
    const auto f = heavy_tailed_function(tree, rng);
    if (k == 0) rep.attachments.emplace_back("function.json", to_json(f).dump(2) + "\n");
    const double alpha = cfg.alpha ? *cfg.alpha : 1.5 * min_feasible_alpha(f, p);
    const auto dc = cz_decompose(f, alpha, p);
    const double level = std::pow(alpha, p);
    const double sup = lp_norm(f, kInf);

    auto sum = dc.good;
    for (const auto& part : dc.bad_parts) sum += expand(part.b, tree);
    recon.le(max_abs_diff(sum, f), cfg.tol("reconstruction") * sup);
    good_k.le(dc.max_good, kappa0 * alpha);
    good_sharp.le(dc.max_good, std::pow(2.0, d / p) * alpha * (1.0 + cfg.tol("measure")));
    std::vector<int> cover(tree->leaf_count(), 0);
    for (const auto& part : dc.bad_parts) {
      lower.gt(part.power_average, level);
      upper.le(part.power_average, std::pow(2.0, d) * level * (1.0 + cfg.tol("measure")));
      const auto& node = tree->node(part.node);
      const auto& pn = tree->node(node.parent);
      double s = 0.0;
      for (int i = pn.leaf_begin; i < pn.leaf_end; ++i) {
        const auto li = static_cast<std::size_t>(i);
        s += std::pow(std::abs(f.value(li)), p) * tree->leaf_measure(li);
      }
      parent.le(s / rho_measure(pn.set), level * (1.0 + cfg.tol("measure")));
      double integral = 0.0, l1 = 0.0;
      for (int i = node.leaf_begin; i < node.leaf_end; ++i) {
        const auto li = static_cast<std::size_t>(i);
        const double v = part.b.values[static_cast<std::size_t>(i - node.leaf_begin)];
        integral += v * tree->leaf_measure(li);
        l1 += std::abs(v) * tree->leaf_measure(li);
        ++cover[li];
      }
      mean.le(std::abs(integral), cfg.tol("mean") * l1);
      means.le(std::abs(part.mean - average_on(f, part.set)), cfg.tol("measure") * std::max(1.0, std::abs(part.mean)));
    }
    const double f_int = integrate_rho(f);
    double parts = integrate_rho(dc.good);
    for (const auto& part : dc.bad_parts) parts += integrate_rho(expand(part.b, tree));
    integral.le(std::abs(parts - f_int), cfg.tol("measure") * lp_norm(f, 1.0));
    // resampling a leaf from f itself leaves every integral unchanged
    int widest = tree->leaves()[0];
    for (int id : tree->leaves())
      if (rho_measure(tree->node(id).set) > rho_measure(tree->node(widest).set)) widest = id;
    const auto g = refine(f, widest, [&f](const GroupPoint& x) { return f.evaluate(x); });
    refined.le(std::abs(integrate_rho(g) - f_int), cfg.tol("measure") * lp_norm(f, 1.0));
    disjoint.le(cover.empty() ? 0.0 : *std::max_element(cover.begin(), cover.end()), 1.0);
    const double mbound = std::pow(lp_norm(f, p), p) / level;
    measure.le(dc.total_bad_measure, mbound * (1.0 + cfg.tol("measure")));
    csv.add_row({static_cast<double>(k), alpha, static_cast<double>(dc.bad_parts.size()), dc.total_bad_measure, mbound,
                 dc.max_good});
    per.push_back(Json{{"alpha", alpha},
                       {"leaves", tree->leaf_count()},
                       {"bad_sets", dc.bad_parts.size()},
                       {"total_bad_measure", dc.total_bad_measure},
                       {"max_good", dc.max_good}});
  }
  for (const auto* g : {&recon, &good_k, &good_sharp, &lower, &upper, &parent, &mean, &measure, &disjoint, &integral,
                        &means, &refined})
    add(rep, *g);
  rep.results = Json{{"exponent", p}, {"kappa0", kappa0}, {"functions", per}};
  rep.csv = csv.str();
}

void run_reexpand(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const double p = cfg.p;
  const double alpha = cfg.alpha.value_or(2.0);
  const int n = cfg.count.value_or(20);
  constexpr int kStages = 8;
  const auto D = cfg.domain();
  Rng rng(cfg.seed);

  std::vector<GeneratedAtom> atoms;
  for (int k = 0; k < n; ++k) {
    if (k % 2 == 0) {
      const double gamma = (0.8 + 0.16 * std::uniform_real_distribution<double>(0.0, 1.0)(rng)) / p;
      atoms.push_back(peaked_atom(D, rng, p, 60 / d, gamma));
    } else {
      atoms.push_back(random_atom(D, rng, p, 2, 5, d == 1 ? 6 : 4, k % 4 == 1));
    }
  }
  std::vector<std::optional<AtomicExpansion>> ex(atoms.size());
  // the first expansion runs alone so that precondition errors surface unchanged
  ex[0] = reexpand_atom(atoms[0].a, p, atoms[0].R, alpha, kStages);
  parallel_for(atoms.size() - 1, [&](std::size_t i) {
    ex[i + 1] = reexpand_atom(atoms[i + 1].a, p, atoms[i + 1].R, alpha, kStages);
  });

  const double tol = cfg.tol("mean");
  Gate valid("input_atoms_valid"), means("stage_means_zero"), avg("stage_piece_average_bound"), lp("stage_sum_lp_bound"),
      pointwise("stage_pointwise_bound"), srho("stage_sum_rho_bound"), emitted("emitted_atoms_sup_le_1"),
      resid("residual_l1_le_2^d_q^n_rho"), coeff("coefficient_sum_bound"), recon("reconstruction_exact");
  CsvTable csv({"atom", "n", "pieces", "residual_l1", "residual_bound", "sum_rho", "sum_rho_bound"});
  Json per = Json::array();
  int max_depth = 0;
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& e = *ex[i];
    const double rho = rho_measure(atoms[i].R);
    valid.truth(validate_atom(atoms[i].a, p, atoms[i].R).valid());
    for (const auto& c : e.checks) {
      means.le(c.max_mean_residual, tol);
      avg.le(c.max_piece_average, c.piece_average_bound * (1.0 + tol));
      lp.le(c.sum_lp, c.sum_lp_bound * (1.0 + tol));
      pointwise.le(c.max_pointwise_excess, c.pointwise_bound * (1.0 + 2.0 * tol));
      if (c.n >= 1) {
        srho.le(c.sum_rho, c.sum_rho_bound * (1.0 + tol));
        resid.le(c.residual_l1, std::pow(2.0, d) * std::pow(e.q, c.n) * rho * (1.0 + tol));
      }
      emitted.le(c.max_atom_sup, 1.0 + tol);
      csv.add_row({static_cast<double>(i), static_cast<double>(c.n), static_cast<double>(c.pieces), c.residual_l1,
                   c.residual_bound, c.sum_rho, c.sum_rho_bound});
    }
    coeff.le(e.coefficient_sum, std::pow(2.0, d * (1.0 + 1.0 / p)) * alpha * rho / (1.0 - e.q) * (1.0 + tol));
    const auto b = atoms[i].a * rho;
    recon.le(max_abs_diff(e.reconstruct(atoms[i].a.tree_ptr()), b), cfg.tol("reconstruction") * lp_norm(b, kInf));
    max_depth = std::max(max_depth, e.depth);
    per.push_back(to_json(e));
  }
  for (const auto* g : {&valid, &means, &avg, &lp, &pointwise, &srho, &emitted, &resid, &coeff, &recon}) add(rep, *g);
  rep.results = Json{{"p", p},
                     {"alpha", alpha},
                     {"q", ratio_q(d, p, alpha)},
                     {"alpha_threshold", alpha_threshold(d, p)},
                     {"certified_cp", certified_cp(d, p, alpha)},
                     {"stages", kStages},
                     {"max_depth", max_depth},
                     {"atoms", per}};
  rep.csv = csv.str();
}

void run_bmo(const RunConfig& cfg, RunReport& rep) {
  const int n = cfg.count.value_or(20);
  const auto D = cfg.domain();
  Rng rng(cfg.seed);

  Gate constants("constants_have_zero_oscillation"), mono("oscillation_q_monotone"), shift("constant_shift_invariance"),
      c_ge("bmo_q_constants_ge_1"), u2("bmo_2_constant_uniform"), u4("bmo_4_constant_uniform");
  CsvTable csv({"function", "norm_1", "norm_2", "norm_4", "C_2", "C_4"});
  std::vector<double> c2s, c4s;
  Json per = Json::array();
  for (int k = 0; k < n; ++k) {
    const auto f = random_bmo_function(D, rng);
    const double c = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
    const auto family = default_family(f.tree(), sub_seed(cfg.seed, 10, static_cast<std::uint64_t>(k)));
    const auto r1 = bmo_norm_over(f, family, 1.0), r2 = bmo_norm_over(f, family, 2.0), r4 = bmo_norm_over(f, family, 4.0);
    const auto shifted = bmo_norm_over(f + PartitionFunction::constant(f.tree_ptr(), c), family, 1.0);
    const auto flat = bmo_norm_over(PartitionFunction::constant(f.tree_ptr(), c), family, 1.0);
    constants.le(flat.bmo_norm_lower, cfg.tol("measure") * std::max(1.0, std::abs(c)));
    const double scale = cfg.tol("measure") * std::max(1.0, lp_norm(f, kInf) + std::abs(c));
    for (std::size_t i = 0; i < family.size(); ++i) {
      mono.le(r1.per_set[i].second, r2.per_set[i].second * (1.0 + cfg.tol("measure")));
      mono.le(r2.per_set[i].second, r4.per_set[i].second * (1.0 + cfg.tol("measure")));
      shift.le(std::abs(shifted.per_set[i].second - r1.per_set[i].second), scale);
    }
    const double c2 = r2.bmo_norm_lower / r1.bmo_norm_lower, c4 = r4.bmo_norm_lower / r1.bmo_norm_lower;
    c_ge.ge(c2, 1.0 - cfg.tol("measure"));
    c_ge.ge(c4, 1.0 - cfg.tol("measure"));
    c2s.push_back(c2);
    c4s.push_back(c4);
    csv.add_row({static_cast<double>(k), r1.bmo_norm_lower, r2.bmo_norm_lower, r4.bmo_norm_lower, c2, c4});
    per.push_back(Json{{"family_size", family.size()},
                       {"norm_1", r1.bmo_norm_lower},
                       {"norm_2", r2.bmo_norm_lower},
                       {"norm_4", r4.bmo_norm_lower},
                       {"C_2", c2},
                       {"C_4", c4}});
  }
  const auto spread = [](const std::vector<double>& v) {
    return *std::max_element(v.begin(), v.end()) / *std::min_element(v.begin(), v.end());
  };
  u2.le(spread(c2s), cfg.tol("uniformity"));
  u4.le(spread(c4s), cfg.tol("uniformity"));
  for (const auto* g : {&constants, &mono, &shift, &c_ge, &u2, &u4}) add(rep, *g);
  rep.results = Json{{"functions", per}, {"C_2_spread", spread(c2s)}, {"C_4_spread", spread(c4s)}};
  rep.csv = csv.str();
}

void run_jn(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const int n = cfg.count.value_or(20);
  const auto D = cfg.domain();
  Rng rng(cfg.seed);
  std::vector<double> grid;
  for (int i = 1; i <= 40; ++i) grid.push_back(0.25 * i);

  Gate mono("tails_nonincreasing"), pos("fitted_eta_positive"), floor("fitted_eta_ge_floor"), dom("fitted_A_ge_envelope"),
      train_b("bound_holds_on_fitted_family"), held_b("bound_holds_on_held_out_family"),
      single("single_set_tails_below_envelope");
  CsvTable csv({"function", "t", "tail_fitted", "tail_held_out", "A_exp_minus_eta_t"});
  Json per = Json::array();
  for (int k = 0; k < n; ++k) {
    const auto f = random_bmo_function(D, rng);
    const auto train = default_family(f.tree(), sub_seed(cfg.seed, 20, static_cast<std::uint64_t>(k)), 1000);
    const auto held = random_family(D, sub_seed(cfg.seed, 21, static_cast<std::uint64_t>(k)), 200);
    const double norm = std::max(bmo_norm_over(f, train).bmo_norm_lower, bmo_norm_over(f, held).bmo_norm_lower);
    const auto fit = jn_verify_family(f, train, grid, norm);
    const auto check = jn_verify_family(f, held, grid, norm);
    const auto one = jn_verify(f, train.front(), grid, norm);
    for (std::size_t i = 1; i < grid.size(); ++i) {
      mono.le(fit.tails[i], fit.tails[i - 1]);
      mono.le(check.tails[i], check.tails[i - 1]);
    }
    pos.gt(fit.fitted_eta, 0.0);
    floor.ge(fit.fitted_eta, jn_eta_floor(d));
    dom.ge(fit.fitted_A, fit.envelope_A);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double env = fit.fitted_A * std::exp(-fit.fitted_eta * grid[i]);
      train_b.truth(fit.bound_holds(grid[i], fit.tails[i]));
      held_b.le(check.tails[i], env * (1.0 + 1e-12));
      single.le(one.tails[i] / one.measure, fit.tails[i] * (1.0 + 1e-12));
      csv.add_row({static_cast<double>(k), grid[i], fit.tails[i], check.tails[i], env});
    }
    per.push_back(Json{{"norm", norm},
                       {"fitted", to_json(fit)},
                       {"held_out_family", held.size()},
                       {"fitted_family", train.size()}});
  }
  for (const auto* g : {&mono, &pos, &floor, &dom, &train_b, &held_b, &single}) add(rep, *g);
  rep.results = Json{{"eta_floor", jn_eta_floor(d)}, {"t_grid", grid}, {"functions", per}};
  rep.csv = csv.str();
}

void run_duality(const RunConfig& cfg, RunReport& rep) {
  const int n = cfg.count.value_or(50);
  const auto D = cfg.domain();
  Rng rng(cfg.seed);

  Gate single("single_atom_pairing_le_osc2"), annihilate("constants_pair_to_zero"), h1atom("atom_h1_bound_le_scheme_constant"),
      combo("combination_pairing_le_C_norm_sum"), cert("h1_certificate_pairing_bound");
  CsvTable csv({"instance", "kind", "pairing", "bound"});
  for (int k = 0; k < n; ++k) {
    const auto f = random_bmo_function(D, rng);
    const auto g = random_atom(D, rng, 2.0, 1, 4, 4);
    const double pairing = duality_pairing(f, g.a);
    const double bound = oscillation(f, g.R, 2.0);
    single.le(std::abs(pairing), bound * (1.0 + cfg.tol("measure")) + 1e-14);
    annihilate.le(std::abs(duality_pairing(PartitionFunction::constant(f.tree_ptr(), 4.0), g.a)),
                  cfg.tol("measure") * 4.0 * rho_measure(g.R) * lp_norm(g.a, 1.0) + 1e-15);
    h1atom.le(h1_upper_bound(g.a, 2.0), h1_scheme_constant(D.dim(), 2.0) * (1.0 + cfg.tol("mean")));
    csv.add_row({static_cast<double>(k), 0.0, pairing, bound});
  }

  const int combos = std::max(1, n / 5);
  double C_run = 0.0;
  Json per = Json::array();
  for (int k = 0; k < combos; ++k) {
    const auto f = random_bmo_function(D, rng);
    const int m = std::uniform_int_distribution<int>(2, 5)(rng);
    std::normal_distribution<double> coef(0.0, 1.0);
    std::optional<PartitionFunction> g;
    std::vector<CZSet> supports;
    double lambda_sum = 0.0;
    for (int j = 0; j < m; ++j) {
      const auto a = random_atom(D, rng, 2.0, 1, 4, 4);
      const double lambda = coef(rng);
      lambda_sum += std::abs(lambda);
      supports.push_back(a.R);
      if (!g) {
        g = lambda * a.a;
      } else {
        auto [x, y] = common_refinement(*g, a.a);
        g = x + lambda * y;
      }
    }
    auto family = default_family(f.tree(), sub_seed(cfg.seed, 30, static_cast<std::uint64_t>(k)));
    family.insert(family.end(), supports.begin(), supports.end());
    const double norm2 = bmo_norm_over(f, family, 2.0).bmo_norm_lower;
    const double pairing = duality_pairing(f, *g);
    const double bound = norm2 * lambda_sum;
    combo.le(std::abs(pairing), bound * (1.0 + cfg.tol("measure")) + 1e-14);
    if (bound > 0.0) C_run = std::max(C_run, std::abs(pairing) / bound);

    // the same pairing through explicit (1, inf)-atom decompositions of g on each root
    double cert_bound = 0.0, h1_bound = 0.0;
    std::size_t h1_terms = 0;
    for (int root = 0; root < g->tree().root_count(); ++root) {
      const auto piece = restrict_to(*g, root);
      if (lp_norm(piece, 1.0) == 0.0) continue;
      const auto h1 = h1_decompose(piece, 2.0);
      h1_bound += h1.bound;
      h1_terms += h1.terms.size();
      for (const auto& t : h1.terms) {
        const auto& set = g->tree().node(t.node).set;
        cert_bound += std::abs(t.coefficient) * t.atom.sup() * rho_measure(set) * oscillation(f, set, 1.0);
      }
    }
    cert.le(std::abs(pairing), cert_bound * (1.0 + 1e-10) + 1e-14);
    csv.add_row({static_cast<double>(k), 1.0, pairing, bound});
    per.push_back(Json{{"atoms", m},
                       {"lambda_l1", lambda_sum},
                       {"bmo_2_norm", norm2},
                       {"pairing", pairing},
                       {"h1_bound", h1_bound},
                       {"h1_terms", h1_terms}});
  }
  for (const auto* g : {&single, &annihilate, &h1atom, &combo, &cert}) add(rep, *g);
  rep.results = Json{{"pairs", n},
                     {"h1_scheme_constant", h1_scheme_constant(D.dim(), 2.0)},
                     {"combinations", per},
                     {"C_certified", 1.0},
                     {"C_run", C_run}};
  rep.csv = csv.str();
}

std::vector<CZSet> hormander_family(const PartitionTree& quad, const ComputationDomain& D, Rng& rng, int count) {
  std::vector<CZSet> family;
  for (const auto& node : quad.nodes())
    if (node.set.r() >= 0.125) family.push_back(node.set);
  for (int k = 0; k < count; ++k) family.push_back(random_set_in_domain(D, rng, 0.1, 2.0));
  return family;
}

void run_hormander(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const int n = cfg.count.value_or(20);
  const auto D = cfg.domain();
  Rng rng(cfg.seed);
  KernelParams params;
  const auto K = make_kernel(cfg.kernel, params);
  const auto quad = quadrature_tree(D, quadrature_depth(d));
  auto family = hormander_family(*quad, D, rng, n);
  if (cfg.kernel == "jump") {
    // a set whose cube straddles the jump, when the domain has one
    DyadicCube c{d, 6, {}};
    c.corner = D.q0().corner;
    const std::int64_t k0 = static_cast<std::int64_t>(std::floor(params.jump_at / 64.0));
    c.corner[0] = k0;
    const CZSet across(c, 0.0, 1.0);
    if (across.admissible() && D.contains(across)) family.push_back(across);
  }
  const auto report = hormander_sup(K, *quad, family);
  const auto adj = [&] {
    KernelSpec a = K;
    a.adjoint = true;
    return hormander_sup(a, *quad, family);
  }();
  const auto tr = hormander_sup(transpose(K), *quad, family);

  Gate finite("values_finite_nonnegative"), adjoint("adjoint_flag_matches_transpose");
  CsvTable csv({"set", "r", "log_a", "x_lo", "value", "adjoint_value"});
  for (std::size_t i = 0; i < family.size(); ++i) {
    const double v = report.per_set[i].second;
    finite.truth(std::isfinite(v) && v >= 0.0);
    adjoint.le(std::abs(adj.per_set[i].second - tr.per_set[i].second), cfg.tol("measure") * std::max(1.0, tr.per_set[i].second));
    csv.add_row({static_cast<double>(i), family[i].r(), family[i].log_a(), family[i].cube.lo(0), v, adj.per_set[i].second});
  }
  add(rep, finite);
  add(rep, adjoint);
  if (cfg.kernel == "radial-bump" || cfg.kernel == "zero" || cfg.kernel == "constant") {
    Gate zero("hormander_value_zero");
    for (const auto& [R, v] : report.per_set) zero.le(v, 0.0);
    add(rep, zero);
  } else if (cfg.kernel == "jump") {
    Gate across("positive_on_sets_across_jump"), aside("zero_on_sets_beside_jump");
    for (const auto& [R, v] : report.per_set) {
      if (R.cube.lo(0) < params.jump_at && params.jump_at < R.cube.hi(0)) across.gt(v, 0.0);
      if (R.cube.hi(0) < params.jump_at || R.cube.lo(0) > params.jump_at) aside.le(v, 0.0);
    }
    add(rep, across);
    add(rep, aside);
  } else {
    Gate positive("positive_somewhere");
    positive.gt(report.overall_sup, 0.0);
    add(rep, positive);
  }
  rep.results = Json{{"kernel", cfg.kernel},
                     {"quadrature_depth", quadrature_depth(d)},
                     {"quadrature_leaves", quad->leaf_count()},
                     {"report", to_json(report)},
                     {"adjoint_sup", adj.overall_sup}};
  rep.csv = csv.str();
}

void run_atom_image(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const int n = cfg.count.value_or(20);
  const double kappa0 = cfg.kappa0_value();
  const double qrel = cfg.tol("quadrature_rel");
  const auto D = cfg.domain();
  Rng rng(cfg.seed);
  const auto K = make_kernel(cfg.kernel);
  const auto quad = quadrature_tree(D, quadrature_depth(d));

  std::vector<std::pair<PartitionFunction, CZSet>> atoms;
  for (int k = 0; k < n; ++k) atoms.push_back(atom_on(quad, D, rng));
  std::vector<std::optional<AtomImageReport>> reps(atoms.size());
  std::vector<OperatorNorm> ops(atoms.size());
  std::vector<double> hs(atoms.size()), doubled(atoms.size());
  KernelSpec K2 = K;
  K2.evaluate = [f = K.evaluate](const GroupPoint& x, const GroupPoint& y) { return 2.0 * f(x, y); };
  parallel_for(atoms.size(), [&](std::size_t i) {
    const auto& [a, R] = atoms[i];
    ops[i] = operator_norm_l2(K, a.tree());
    hs[i] = hormander_center(K, a.tree(), R);
    reps[i] = atom_image_l1(K, a, R, ops[i].power_estimate, hs[i], kappa0);
    doubled[i] = atom_image_l1(K2, a, R, 1.0, 0.0, kappa0).total_l1;
  });

  Gate two("two_piece_bound"), on("on_dilated_cauchy_schwarz"), off("off_dilated_hormander"),
      ident("vanishing_mean_identity"), dil("dilated_measure_le_kappa0_rho"), unif("uniform_over_atoms"),
      lin("kernel_scaling"), schur("power_estimate_le_schur_bound");
  CsvTable csv({"atom", "r", "total_l1", "on_dilated_l1", "off_dilated_l1", "on_bound", "off_bound"});
  double sup_total = 0.0, sup_op = 0.0, sup_h = 0.0;
  Json per = Json::array();
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& r = *reps[i];
    const auto& R = atoms[i].second;
    two.le(r.total_l1, r.bound() * (1.0 + qrel));
    on.le(r.on_dilated_l1, r.on_bound * (1.0 + qrel));
    off.le(r.off_dilated_l1, r.off_bound * (1.0 + 1e-10) + 1e-12 * r.off_magnitude);
    ident.le(r.identity_rel_error, qrel);
    dil.le(r.dilated_measure, kappa0 * rho_measure(R));
    lin.le(std::abs(doubled[i] - 2.0 * r.total_l1), cfg.tol("measure") * std::max(1e-300, 2.0 * r.total_l1));
    schur.le(ops[i].power_estimate, ops[i].schur_bound * (1.0 + cfg.tol("measure")));
    sup_total = std::max(sup_total, r.total_l1);
    sup_op = std::max(sup_op, ops[i].power_estimate);
    sup_h = std::max(sup_h, hs[i]);
    csv.add_row({static_cast<double>(i), R.r(), r.total_l1, r.on_dilated_l1, r.off_dilated_l1, r.on_bound, r.off_bound});
    Json j = to_json(r);
    j["R"] = to_json(R);
    j["op_norm"] = ops[i].power_estimate;
    j["schur_bound"] = ops[i].schur_bound;
    per.push_back(j);
  }
  const double uniform_bound = std::sqrt(kappa0) * sup_op + sup_h;
  unif.le(sup_total, uniform_bound * (1.0 + qrel));

  // bounded functions land in BMO: osc(Tf, R) <= 2 (H' + kappa0^{1/2} |T|) |f|_inf
  Gate bmo("bounded_to_bmo");
  const auto tree = random_tree(D, rng, quadrature_depth(d) - 2, quadrature_depth(d) + 1, 0.5);
  const double op = operator_norm_l2(K, *tree).power_estimate;
  KernelSpec adj = K;
  adj.adjoint = true;
  std::vector<double> hadj(tree->node_count());
  parallel_for(hadj.size(), [&](std::size_t i) { hadj[i] = hormander_center(adj, *tree, tree->node(static_cast<int>(i)).set); });
  for (int k = 0; k < 3; ++k) {
    const auto f = random_function(tree, rng);
    const auto Tf = apply_kernel(K, f);
    const double sup = lp_norm(f, kInf);
    for (std::size_t i = 0; i < hadj.size(); ++i)
      bmo.le(oscillation(Tf, tree->node(static_cast<int>(i)).set, 1.0), 2.0 * (hadj[i] + std::sqrt(kappa0) * op) * sup);
  }

  for (const auto* g : {&two, &on, &off, &ident, &dil, &unif, &lin, &schur, &bmo}) add(rep, *g);
  rep.results = Json{{"kernel", cfg.kernel},
                     {"kappa0", kappa0},
                     {"sup_total_l1", sup_total},
                     {"uniform_bound", uniform_bound},
                     {"atoms", per}};
  rep.csv = csv.str();
}

void run_interpolate(const RunConfig& cfg, RunReport& rep) {
  const int d = cfg.dim;
  const double p = cfg.p, p1 = cfg.p1;
  const int n = cfg.count.value_or(20);
  const auto D = cfg.domain();
  Rng rng(cfg.seed);
  const auto ts = log_grid(cfg.t_min, cfg.t_max, cfg.t_steps);
  const double theta = theta_of(p, p1);
  const auto C = lambda_constants(d, p, p1);
  const double rel = cfg.tol("measure");

  std::vector<PartitionFunction> fs;
  for (int k = 0; k < n; ++k) fs.push_back(power_law_chain(D, rng, p, 2, 60));
  std::vector<std::optional<KFunctionalReport>> ks(fs.size());
  for (std::size_t i = 0; i < fs.size(); ++i) ks[i] = k_functional_upper(fs[i], ts, p, p1);

  Gate recon("lambda_reconstruction_exact"), ga("a_good_sup_le_Ca_lambda"),
      gb(std::isinf(p1) ? "b_good_sup_le_Ca_lambda" : "b_good_lp1_le_Cb_lambda^(p1-p)_norm^p"),
      gc("c_bad_h1_le_Cc_lambda^(1-p)_norm^p"), gm("bad_measure_le_lambda^-p_norm^p"), argmin("lambda_star_grid_argmin"),
      closed("G_slope_equals_theta"), concave("k_upper_concave_nondecreasing"), pure("k_upper_le_t_norm_p1"),
      slope("k_upper_mid_slope_le_theta_plus_tol"), cfit("k_upper_constant_uniform");
  CsvTable csv({"function", "t", "k_upper", "t^theta_norm_p"});
  Json per = Json::array();
  double cmin = kInf, cmax = 0.0, worst_a = 0.0, worst_b = 0.0, worst_c = 0.0;
  for (std::size_t k = 0; k < fs.size(); ++k) {
    const auto& f = fs[k];
    const auto& rep_k = *ks[k];
    const double fp = std::pow(lp_norm(f, p), p);
    const double f_norm_p = lp_norm(f, p);
    for (double lam : log_grid(1.01 * min_feasible_alpha(f, p), 4.0 * lp_norm(f, kInf), 6)) {
      const auto dec = lambda_decompose(f, lam, p, p1);
      const auto sum = dec.good + dec.bad;
      for (std::size_t i = 0; i < f.size(); ++i)
        recon.le(std::abs(sum.value(i) - f.value(i)), cfg.tol("reconstruction") * std::max(1.0, std::abs(f.value(i))));
      ga.le(dec.bound_a, C.a * lam * (1.0 + rel));
      worst_a = std::max(worst_a, dec.bound_a / lam);
      if (std::isinf(p1)) {
        gb.le(dec.bound_b, C.a * lam * (1.0 + rel));
      } else {
        gb.le(dec.bound_b, C.b * std::pow(lam, p1 - p) * fp * (1.0 + rel));
        worst_b = std::max(worst_b, dec.bound_b / (std::pow(lam, p1 - p) * fp));
      }
      gc.le(dec.bound_c, C.c * std::pow(lam, 1.0 - p) * fp * (1.0 + 1e-10));
      worst_c = std::max(worst_c, dec.bound_c / (std::pow(lam, 1.0 - p) * fp));
      gm.le(dec.total_bad_measure, fp / std::pow(lam, p) * (1.0 + rel));
    }
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const double t = ts[i];
      const double ls = lambda_star(t, p, p1, f_norm_p);
      const auto lg = log_grid(ls / 100.0, ls * 100.0, 201);
      std::size_t best = 0;
      for (std::size_t j = 1; j < lg.size(); ++j)
        if (g_objective(t, lg[j], p, p1, f_norm_p) < g_objective(t, lg[best], p, p1, f_norm_p)) best = j;
      const double step = std::log(lg[1] / lg[0]);
      argmin.le(std::abs(std::log(lg[best] / ls)), step * (1.0 + rel));
      if (i > 0) {
        const double t0 = ts[i - 1];
        const double s = std::log(g_objective(t, ls, p, p1, f_norm_p) /
                                  g_objective(t0, lambda_star(t0, p, p1, f_norm_p), p, p1, f_norm_p)) /
                         std::log(t / t0);
        closed.le(std::abs(s - theta), cfg.tol("closed_form"));
      }
      pure.le(rep_k.k_upper[i], t * rep_k.f_norm_p1 * (1.0 + rel));
      csv.add_row({static_cast<double>(k), t, rep_k.k_upper[i], std::pow(t, theta) * f_norm_p});
    }
    concave.truth(is_concave_nondecreasing(ts, rep_k.k_upper));
    slope.le(rep_k.mid_slope, theta + cfg.tol("slope"));
    cmin = std::min(cmin, rep_k.c_fit);
    cmax = std::max(cmax, rep_k.c_fit);
    per.push_back(Json{{"f_norm_p", rep_k.f_norm_p},
                       {"f_norm_p1", number(rep_k.f_norm_p1)},
                       {"h1_of_f", rep_k.h1_of_f},
                       {"c_fit", rep_k.c_fit},
                       {"mid_slope", rep_k.mid_slope},
                       {"k_upper", rep_k.k_upper}});
  }
  cfit.le(cmax / cmin, cfg.tol("uniformity"));
  for (const auto* g : {&recon, &ga, &gb, &gc, &gm, &argmin, &closed, &concave, &pure, &slope, &cfit}) add(rep, *g);
  rep.results = Json{{"p", p},
                     {"p1", number(p1)},
                     {"theta", theta},
                     {"constants", Json{{"a", C.a}, {"b", C.b}, {"c", C.c}}},
                     {"measured_constants", Json{{"a", worst_a}, {"b", worst_b}, {"c", worst_c}}},
                     {"t_grid", ts},
                     {"functions", per}};
  rep.csv = csv.str();
}

using Runner = void (*)(const RunConfig&, RunReport&);

const std::vector<std::pair<std::string, Runner>>& runners() {
  static const std::vector<std::pair<std::string, Runner>> r{
      {"geometry-check", run_geometry}, {"cz-decompose", run_cz},       {"reexpand", run_reexpand},
      {"bmo-norm", run_bmo},            {"jn-verify", run_jn},          {"duality", run_duality},
      {"hormander", run_hormander},     {"atom-image", run_atom_image}, {"interpolate", run_interpolate}};
  return r;
}

double read_p(const Json& j) {
  if (j.is_string()) return number_from(j);
  return j.get<double>();
}

}  // namespace

std::map<std::string, double> RunConfig::default_tolerances() {
  return {{"algebra", 1e-12},      {"measure", 1e-12},        {"mean", 1e-10},   {"reconstruction", 1e-12},
          {"mc_rel", 1e-3},        {"quadrature_rel", 1e-3},  {"jacobian", 1e-6}, {"closed_form", 1e-6},
          {"slope", 0.05},         {"uniformity", 10.0}};
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& m) { throw ConfigInvalid(m); };
  if (dim < 1 || dim > kMaxDim) fail("dim must be in 1.." + std::to_string(kMaxDim));
  if (n_layers < 1 || n_layers > 16) fail("n_layers must be in 1..16");
  if (q0_scale < 0 || q0_scale > 40) fail("q0_scale must be in 0..40");
  if (kappa0 && !(std::isfinite(*kappa0) && *kappa0 > 0.0)) fail("kappa0 must be positive");
  for (const auto& [name, v] : tolerances)
    if (!(std::isfinite(v) && v > 0.0)) fail("tolerance " + name + " must be positive");
  for (const auto& [name, v] : default_tolerances())
    if (!tolerances.count(name)) fail("missing tolerance " + name);
  if (alpha && !(std::isfinite(*alpha) && *alpha > 0.0)) fail("alpha must be positive");
  if (!(std::isfinite(p) && p > 1.0)) fail("p must be finite and > 1");
  if (!(p1 > p)) fail("p1 must exceed p");
  if (!(t_min > 0.0 && std::isfinite(t_max) && t_max > t_min)) fail("need 0 < t_min < t_max");
  if (t_steps < 4) fail("t_steps must be at least 4");
  const auto& names = kernel_names();
  if (std::find(names.begin(), names.end(), kernel) == names.end()) fail("unknown kernel " + kernel);
  if (count && *count < 1) fail("count must be positive");
  if (output_dir.empty()) fail("output_dir is empty");
}

double RunConfig::kappa0_value() const { return kappa0 ? *kappa0 : default_kappa0(dim); }

double RunConfig::tol(const std::string& name) const {
  const auto it = tolerances.find(name);
  if (it == tolerances.end()) throw ConfigInvalid("missing tolerance " + name);
  return it->second;
}

ComputationDomain RunConfig::domain() const { return ComputationDomain(dim, q0_scale, n_layers, q0_corner); }

RunConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigInvalid("config must be a JSON object");
  RunConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "dim") c.dim = v.get<int>();
      else if (key == "q0_scale") c.q0_scale = v.get<int>();
      else if (key == "q0_corner") {
        if (!v.is_array() || v.size() > kMaxDim) throw ConfigInvalid("q0_corner must be an array of at most 3 integers");
        c.q0_corner = {};
        for (std::size_t i = 0; i < v.size(); ++i) c.q0_corner[i] = v[i].get<std::int64_t>();
      } else if (key == "n_layers") c.n_layers = v.get<int>();
      else if (key == "kappa0") c.kappa0 = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "tolerances") {
        for (const auto& [name, t] : v.items()) c.tolerances[name] = t.get<double>();
      } else if (key == "output_dir") c.output_dir = v.get<std::string>();
      else if (key == "alpha") c.alpha = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
      else if (key == "p") c.p = read_p(v);
      else if (key == "p1") c.p1 = read_p(v);
      else if (key == "t_min") c.t_min = v.get<double>();
      else if (key == "t_max") c.t_max = v.get<double>();
      else if (key == "t_steps") c.t_steps = v.get<int>();
      else if (key == "kernel") c.kernel = v.get<std::string>();
      else if (key == "count") c.count = v.is_null() ? std::nullopt : std::optional<int>(v.get<int>());
      else throw ConfigInvalid("unknown config key " + key);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigInvalid(std::string("bad config value: ") + e.what());
  }
  c.validate();
  return c;
}

Json to_json(const RunConfig& c) {
  Json tol = Json::object();
  for (const auto& [name, v] : c.tolerances) tol[name] = v;
  Json corner = Json::array();
  for (int i = 0; i < c.dim; ++i) corner.push_back(c.q0_corner[static_cast<std::size_t>(i)]);
  return Json{{"dim", c.dim},
              {"q0_scale", c.q0_scale},
              {"q0_corner", corner},
              {"n_layers", c.n_layers},
              {"kappa0", c.kappa0_value()},
              {"seed", c.seed},
              {"tolerances", tol},
              {"output_dir", c.output_dir},
              {"alpha", c.alpha ? Json(*c.alpha) : Json(nullptr)},
              {"p", c.p},
              {"p1", number(c.p1)},
              {"t_min", c.t_min},
              {"t_max", c.t_max},
              {"t_steps", c.t_steps},
              {"kernel", c.kernel},
              {"count", c.count ? Json(*c.count) : Json(nullptr)}};
}

bool RunReport::passed() const {
  return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

const Check* RunReport::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [name, fn] : runners()) v.push_back(name);
    return v;
  }();
  return names;
}

RunReport run(const std::string& subcommand, const RunConfig& config) {
  config.validate();
  const auto it = std::find_if(runners().begin(), runners().end(), [&](const auto& r) { return r.first == subcommand; });
  if (it == runners().end()) throw ConfigInvalid("unknown subcommand " + subcommand);
  RunReport rep;
  rep.subcommand = subcommand;
  rep.config = to_json(config);
  rep.config.erase("output_dir");
  const auto start = std::chrono::steady_clock::now();
  it->second(config, rep);
  rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::set<std::string> seen;
  for (const auto& c : rep.checks)
    if (!seen.insert(c.name).second) throw Error("check " + c.name + " listed twice");
  return rep;
}

std::string report_json(const RunReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name},
                          {"passed", c.passed},
                          {"measured", number(c.measured)},
                          {"bound", number(c.bound)},
                          {"instances", c.instances}});
  const Json j{{"schema", kReportSchema},
               {"subcommand", r.subcommand},
               {"config", r.config},
               {"passed", r.passed()},
               {"checks", checks},
               {"results", r.results}};
  return j.dump(2) + "\n";
}

std::vector<std::string> write_artifacts(const RunReport& r, const std::string& dir) {
  const std::filesystem::path base(dir);
  std::vector<std::string> out;
  const auto put = [&](const std::string& name, const std::string& content) {
    const auto path = base / name;
    write_text(path, content);
    out.push_back(path.string());
  };
  put(r.subcommand + ".json", report_json(r));
  if (!r.csv.empty()) put(r.subcommand + ".csv", r.csv);
  for (const auto& [suffix, content] : r.attachments) put(r.subcommand + "." + suffix, content);
  return out;
}

}  // namespace hardy
