#include "hardy/bmo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hardy/errors.hpp"
#include "hardy/generators.hpp"
#include "hardy/parallel.hpp"

namespace hardy {

namespace {

/// (value - f_R, overlap measure) for every leaf meeting R.
std::vector<std::pair<double, double>> deviations(const PartitionFunction& f, const CZSet& R, double& measure) {
  const double mean = average_on(f, R);
  std::vector<std::pair<double, double>> out;
  measure = 0.0;
  f.tree().for_each_overlap(R, [&](int leaf, double m) {
    out.emplace_back(std::abs(f.value(static_cast<std::size_t>(leaf)) - mean), m);
    measure += m;
  });
  return out;
}

double tail_of(const std::vector<std::pair<double, double>>& dev, double level) {
  double s = 0.0;
  for (const auto& [v, m] : dev)
    if (v > level) s += m;
  return s;
}

double exp_mean(const std::vector<std::pair<double, double>>& dev, double measure, double eta, double norm) {
  double s = 0.0;
  for (const auto& [v, m] : dev) s += std::exp(eta * v / norm) * m;
  return s / measure;
}

void check_grid(const std::vector<double>& t_grid) {
  if (t_grid.empty()) throw InvalidArgument("jn: empty t grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > 0.0)) throw InvalidArgument("jn: t values must be positive");
    if (i > 0 && t_grid[i] <= t_grid[i - 1]) throw InvalidArgument("jn: t grid must be increasing");
  }
}

double ls_slope(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 2) return 0.0;
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (const auto& [t, y] : pts) {
    st += t;
    sy += y;
    stt += t * t;
    sty += t * y;
  }
  const double n = static_cast<double>(pts.size());
  const double den = n * stt - st * st;
  return den > 0.0 ? (n * sty - st * sy) / den : 0.0;
}

/// Least squares of ln(tail / measure) on t over the tails above the floor. A flat segment (a two-level
/// distribution) is refitted with the first vanishing tail censored at the floor.
void fit(JNFit& out) {
  const double floor = 1e-8 * out.measure;
  std::vector<std::pair<double, double>> pts;
  std::size_t first_zero = out.t_grid.size();
  for (std::size_t i = 0; i < out.t_grid.size(); ++i) {
    if (out.tails[i] > floor) {
      pts.emplace_back(out.t_grid[i], std::log(out.tails[i] / out.measure));
    } else if (first_zero == out.t_grid.size()) {
      first_zero = i;
    }
  }
  if (pts.empty()) {
    out.fitted_eta = std::numeric_limits<double>::infinity();
    out.fitted_A = 1.0;
    out.envelope_A = 1.0;
    out.fit_points = 0;
    return;
  }
  out.fitted_eta = -ls_slope(pts);
  if (out.fitted_eta <= 0.0 && first_zero < out.t_grid.size()) {
    pts.emplace_back(out.t_grid[first_zero], std::log(floor / out.measure));
    out.fitted_eta = -ls_slope(pts);
  }
  out.fit_points = pts.size();
  double A = 0.0;
  for (std::size_t i = 0; i < out.t_grid.size(); ++i)
    A = std::max(A, out.tails[i] / out.measure * std::exp(out.fitted_eta * out.t_grid[i]));
  out.envelope_A = std::max(A, std::numeric_limits<double>::min());
}

}  // namespace

double oscillation(const PartitionFunction& f, const CZSet& R, double q) {
  if (!(q >= 1.0) || std::isinf(q)) throw InvalidArgument("oscillation: q must be finite and >= 1");
  double measure = 0.0;
  const auto dev = deviations(f, R, measure);
  double s = 0.0;
  for (const auto& [v, m] : dev) s += std::pow(v, q) * m;
  return std::pow(s / measure, 1.0 / q);
}

OscillationReport bmo_norm_over(const PartitionFunction& f, const std::vector<CZSet>& family, double q) {
  if (family.empty()) throw InvalidArgument("bmo_norm_over: empty family");
  std::vector<double> osc(family.size());
  parallel_for(family.size(), [&](std::size_t i) { osc[i] = oscillation(f, family[i], q); });
  OscillationReport rep;
  rep.q = q;
  rep.family_size = family.size();
  rep.per_set.reserve(family.size());
  for (std::size_t i = 0; i < family.size(); ++i) {
    rep.per_set.emplace_back(family[i], osc[i]);
    rep.bmo_norm_lower = std::max(rep.bmo_norm_lower, osc[i]);
  }
  return rep;
}

std::vector<CZSet> tree_family(const PartitionTree& tree) {
  std::vector<CZSet> out;
  out.reserve(tree.node_count());
  for (const auto& n : tree.nodes()) out.push_back(n.set);
  return out;
}

std::vector<CZSet> random_family(const ComputationDomain& domain, std::uint64_t seed, std::size_t count) {
  std::mt19937_64 rng(seed);
  std::vector<CZSet> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(random_set_in_domain(domain, rng, 0.05, 2.0));
  return out;
}

std::vector<CZSet> default_family(const PartitionTree& tree, std::uint64_t seed, std::size_t count) {
  auto out = tree_family(tree);
  const auto extra = random_family(tree.domain(), seed, count);
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

double jn_eta_floor(int d) { return std::log(2.0) / (std::ldexp(1.0, d) + 2.0); }

bool JNFit::bound_holds(double t, double tail, double slack) const {
  if (std::isinf(fitted_eta)) return tail <= slack * measure;
  return tail <= measure * fitted_A * std::exp(-fitted_eta * t) * (1.0 + slack) + slack * measure;
}

JNFit jn_verify(const PartitionFunction& f, const CZSet& R, const std::vector<double>& t_grid, double norm) {
  if (!(norm > 0.0)) throw ZeroBMONorm("jn_verify: BMO norm is zero on the test family");
  check_grid(t_grid);
  JNFit out;
  out.t_grid = t_grid;
  out.norm = norm;
  const auto dev = deviations(f, R, out.measure);
  for (double t : t_grid) out.tails.push_back(tail_of(dev, t * norm));
  fit(out);
  if (std::isfinite(out.fitted_eta)) {
    out.exp_integral_fitted = exp_mean(dev, out.measure, out.fitted_eta, norm);
    out.fitted_A = std::max(*out.exp_integral_fitted, out.envelope_A);
  }
  out.exp_integral_floor = exp_mean(dev, out.measure, jn_eta_floor(f.tree().dim()), norm);
  return out;
}

JNFit jn_verify_family(const PartitionFunction& f, const std::vector<CZSet>& family, const std::vector<double>& t_grid,
                       double norm) {
  if (!(norm > 0.0)) throw ZeroBMONorm("jn_verify: BMO norm is zero on the test family");
  if (family.empty()) throw InvalidArgument("jn_verify: empty family");
  check_grid(t_grid);
  struct PerSet {
    std::vector<std::pair<double, double>> dev;
    double measure = 0.0;
  };
  std::vector<PerSet> sets(family.size());
  parallel_for(family.size(), [&](std::size_t i) { sets[i].dev = deviations(f, family[i], sets[i].measure); });
  JNFit out;
  out.t_grid = t_grid;
  out.norm = norm;
  out.measure = 1.0;
  for (double t : t_grid) {
    double worst = 0.0;
    for (const auto& s : sets) worst = std::max(worst, tail_of(s.dev, t * norm) / s.measure);
    out.tails.push_back(worst);
  }
  fit(out);
  const double floor_eta = jn_eta_floor(f.tree().dim());
  double at_fit = 0.0, at_floor = 0.0;
  for (const auto& s : sets) {
    if (std::isfinite(out.fitted_eta)) at_fit = std::max(at_fit, exp_mean(s.dev, s.measure, out.fitted_eta, norm));
    at_floor = std::max(at_floor, exp_mean(s.dev, s.measure, floor_eta, norm));
  }
  if (std::isfinite(out.fitted_eta)) {
    out.exp_integral_fitted = at_fit;
    out.fitted_A = std::max(at_fit, out.envelope_A);
  }
  out.exp_integral_floor = at_floor;
  return out;
}

double duality_pairing(const PartitionFunction& f, const PartitionFunction& g) {
  if (f.tree_ptr() == g.tree_ptr()) return integrate_rho(multiply(f, g));
  const auto [ff, gg] = common_refinement(f, g);
  return integrate_rho(multiply(ff, gg));
}

}  // namespace hardy
