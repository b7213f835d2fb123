#include "hardy/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hardy/decomposition.hpp"
#include "hardy/errors.hpp"
#include "hardy/parallel.hpp"

namespace hardy {

namespace {

double inv(double p1) { return std::isinf(p1) ? 0.0 : 1.0 / p1; }

void check_order(double p, double p1) {
  if (!(p > 1.0) || !(p1 > p)) throw ExponentOrder("need 1 < p < p1 <= infinity");
}

/// H^1 cost of a mean-zero piece on a node: the re-expansion's coefficients plus sup * rho of leftovers.
double piece_h1_bound(const LocalPiece& piece, const PartitionTree& tree, std::shared_ptr<const PartitionTree> ptr,
                      double p) {
  const auto& n = tree.node(piece.node);
  const double rho = rho_measure(n.set);
  double lp = 0.0;
  for (std::size_t k = 0; k < piece.values.size(); ++k)
    lp += std::pow(std::abs(piece.values[k]), p) * tree.leaf_measure(static_cast<std::size_t>(n.leaf_begin) + k);
  lp = std::pow(lp, 1.0 / p);
  if (lp == 0.0) return 0.0;
  const double s = lp * std::pow(rho, 1.0 - 1.0 / p);
  auto a = expand(piece, ptr);
  a *= 1.0 / s;
  const auto ex = reexpand_atom(a, p, n.set, optimal_alpha(tree.dim(), p), 200);
  double cost = ex.coefficient_sum;
  for (const auto& r : ex.residuals) cost += r.sup() * rho_measure(tree.node(r.node).set);
  return s * cost / rho;
}

}  // namespace

double theta_of(double p, double p1) {
  check_order(p, p1);
  return (1.0 - 1.0 / p) / (1.0 - inv(p1));
}

double g_objective(double t, double lambda, double p, double p1, double f_norm_p) {
  return std::pow(lambda, 1.0 - p) * std::pow(f_norm_p, p * (1.0 - inv(p1))) + t * std::pow(lambda, 1.0 - p * inv(p1));
}

double lambda_star(double t, double p, double p1, double f_norm_p) {
  check_order(p, p1);
  const double e = 1.0 - p * inv(p1);
  const double base = (p - 1.0) / e * std::pow(f_norm_p, p * (1.0 - inv(p1))) / t;
  return std::pow(base, 1.0 / (p - p * inv(p1)));
}

LambdaConstants lambda_constants(int d, double p, double p1) {
  check_order(p, p1);
  LambdaConstants c;
  c.a = std::pow(2.0, d / p);
  c.b = std::isinf(p1) ? c.a : std::pow(2.0, d * p1 / p) + 1.0;
  c.c = std::pow(2.0, 1.0 + d / p) * certified_cp(d, p, optimal_alpha(d, p));
  return c;
}

LambdaDecomposition lambda_decompose(const PartitionFunction& f, double lambda, double p, double p1) {
  check_order(p, p1);
  if (!(lambda > 0.0)) throw InvalidArgument("lambda_decompose: lambda must be positive");
  const auto cz = cz_decompose(f, lambda, p);
  const auto& tree = f.tree();
  LambdaDecomposition out{lambda, p, p1, cz.good, PartitionFunction::zero(f.tree_ptr()), {}, {}, 0.0};
  out.total_bad_measure = cz.total_bad_measure;
  std::vector<double> bad(f.size(), 0.0);
  for (const auto& bp : cz.bad_parts) {
    out.bad_sets.push_back(bp.set);
    out.bad_nodes.push_back(bp.node);
    out.max_mean_ratio = std::max(out.max_mean_ratio, std::abs(bp.mean) / lambda);
    const int begin = tree.node(bp.node).leaf_begin;
    for (std::size_t k = 0; k < bp.b.values.size(); ++k) bad[static_cast<std::size_t>(begin) + k] = bp.b.values[k];
  }
  out.bad = PartitionFunction(f.tree_ptr(), std::move(bad));
  out.bound_a = lp_norm(out.good, INFINITY);
  out.good_norm_p1 = lp_norm(out.good, p1);
  out.bound_b = std::isinf(p1) ? out.good_norm_p1 : std::pow(out.good_norm_p1, p1);
  std::vector<double> costs(cz.bad_parts.size());
  parallel_for(costs.size(),
               [&](std::size_t i) { costs[i] = piece_h1_bound(cz.bad_parts[i].b, tree, f.tree_ptr(), p); });
  for (double c : costs) out.bound_c += c;
  return out;
}

KFunctionalReport k_functional_upper(const PartitionFunction& f, const std::vector<double>& t_grid, double p, double p1,
                                     int lambda_grid_size) {
  check_order(p, p1);
  if (t_grid.empty() || lambda_grid_size < 2) throw EmptyGrid("k_functional_upper: empty t or lambda grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (!(t_grid[i] > 0.0) || (i > 0 && t_grid[i] <= t_grid[i - 1]))
      throw InvalidArgument("k_functional_upper: t grid must be positive and increasing");
  KFunctionalReport rep;
  rep.p = p;
  rep.p1 = p1;
  rep.theta = theta_of(p, p1);
  rep.f_norm_p = lp_norm(f, p);
  if (!(rep.f_norm_p > 0.0)) throw InvalidArgument("k_functional_upper: f = 0");
  rep.f_norm_p1 = lp_norm(f, p1);
  rep.t_grid = t_grid;

  // one grid for every t, so each k_upper(t) is a minimum of the same affine functions of t
  const double per_decade = (lambda_grid_size - 1) / 4.0;
  const double lo = lambda_star(t_grid.back(), p, p1, rep.f_norm_p) / 100.0;
  const double hi = lambda_star(t_grid.front(), p, p1, rep.f_norm_p) * 100.0;
  const int n = static_cast<int>(std::ceil(std::log10(hi / lo) * per_decade)) + 1;
  rep.lambdas.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) rep.lambdas[static_cast<std::size_t>(i)].lambda = lo * std::pow(10.0, i / per_decade);
  for (auto& rec : rep.lambdas) {
    try {
      const auto dec = lambda_decompose(f, rec.lambda, p, p1);
      rec.feasible = true;
      rec.bound_c = dec.bound_c;
      rec.good_norm_p1 = dec.good_norm_p1;
    } catch (const RootAverageTooLarge&) {
      rec.feasible = false;
    }
  }
  try {
    rep.h1_of_f = h1_upper_bound(f, p);
  } catch (const Error&) {
    rep.h1_of_f = -1.0;
  }

  for (double t : t_grid) {
    double best = t * rep.f_norm_p1;
    double arg = 0.0;
    if (rep.h1_of_f >= 0.0 && rep.h1_of_f < best) {
      best = rep.h1_of_f;
      arg = std::numeric_limits<double>::infinity();
    }
    for (const auto& rec : rep.lambdas) {
      if (!rec.feasible) continue;
      const double v = rec.bound_c + t * rec.good_norm_p1;
      if (v < best) {
        best = v;
        arg = rec.lambda;
      }
    }
    rep.k_upper.push_back(best);
    rep.best_lambda.push_back(arg);
    rep.c_fit = std::max(rep.c_fit, best / (std::pow(t, rep.theta) * rep.f_norm_p));
  }

  const std::size_t m = t_grid.size();
  const std::size_t a = m / 4, b = std::max(a + 2, m - m / 4);
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t i = a; i < std::min(b, m); ++i) {
    const double x = std::log(t_grid[i]), y = std::log(rep.k_upper[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt += 1;
  }
  const double den = cnt * sxx - sx * sx;
  rep.mid_slope = den > 0.0 ? (cnt * sxy - sx * sy) / den : 0.0;
  return rep;
}

bool is_concave_nondecreasing(const std::vector<double>& t, const std::vector<double>& k, double slack) {
  for (std::size_t i = 1; i < k.size(); ++i)
    if (k[i] < k[i - 1] * (1.0 - slack)) return false;
  for (std::size_t i = 1; i + 1 < k.size(); ++i) {
    // k(t_i) >= chord value between neighbours
    const double w = (t[i] - t[i - 1]) / (t[i + 1] - t[i - 1]);
    const double chord = (1.0 - w) * k[i - 1] + w * k[i + 1];
    if (k[i] < chord - slack * std::max(std::abs(chord), 1.0)) return false;
  }
  return true;
}

}  // namespace hardy
