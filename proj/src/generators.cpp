#include "hardy/generators.hpp"

#include <algorithm>
#include <cmath>

#include "hardy/errors.hpp"

namespace hardy {

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

int uniform_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

bool is_prefix(std::span<const int> a, std::span<const int> b) {
  return a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin());
}

/// Random path of child slots from a root, following split() at every step.
std::vector<int> random_path(const ComputationDomain& domain, std::mt19937_64& rng, int depth) {
  std::vector<int> path{uniform_int(rng, 0, static_cast<int>(domain.roots().size()) - 1)};
  CZSet cur = domain.roots()[static_cast<std::size_t>(path[0])];
  for (int k = 0; k < depth; ++k) {
    const auto kids = split(cur);
    const int c = uniform_int(rng, 0, static_cast<int>(kids.size()) - 1);
    path.push_back(c);
    cur = kids[static_cast<std::size_t>(c)];
  }
  return path;
}

}  // namespace

std::shared_ptr<const PartitionTree> random_tree(const ComputationDomain& domain, std::mt19937_64& rng, int min_depth,
                                                 int max_depth, double split_prob) {
  return std::make_shared<const PartitionTree>(PartitionTree::build(
      domain,
      [&](const CZSet&, std::span<const int> path) {
        return static_cast<int>(path.size()) - 1 < min_depth || uniform(rng, 0.0, 1.0) < split_prob;
      },
      max_depth));
}

PartitionFunction random_function(std::shared_ptr<const PartitionTree> tree, std::mt19937_64& rng, double lo,
                                  double hi) {
  std::vector<double> v(tree->leaf_count());
  for (auto& x : v) x = uniform(rng, lo, hi);
  return PartitionFunction(std::move(tree), std::move(v));
}

PartitionFunction heavy_tailed_function(std::shared_ptr<const PartitionTree> tree, std::mt19937_64& rng) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(tree->leaf_count());
  for (auto& x : v) x = std::pow(ex(rng), 3.0) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
  return PartitionFunction(std::move(tree), std::move(v));
}

CZSet random_set_in_domain(const ComputationDomain& domain, std::mt19937_64& rng, double r_min, double r_max) {
  const int d = domain.dim();
  const double span = domain.u_hi() - domain.u_lo();
  r_max = std::min(r_max, 0.5 * span);
  if (!(r_min > 0.0) || r_max < r_min) throw InvalidArgument("empty r range for sets inside the domain");
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double r = uniform(rng, r_min, r_max);
    const double log_a = uniform(rng, domain.u_lo() + r, domain.u_hi() - r);
    const double a = std::exp(log_a);
    const double lower = r < 1.0 ? std::exp(2.0) * a * r : a * std::exp(2.0 * r);
    const double upper = r < 1.0 ? std::exp(8.0) * a * r : a * std::exp(8.0 * r);
    int j_min = static_cast<int>(std::ceil(std::log2(lower)));
    int j_max = std::min(static_cast<int>(std::ceil(std::log2(upper))) - 1, domain.q0().scale);
    while (std::ldexp(1.0, j_min) < lower) ++j_min;
    while (j_max >= j_min && std::ldexp(1.0, j_max) >= upper) --j_max;
    if (j_max < j_min) continue;
    DyadicCube cube{d, uniform_int(rng, j_min, j_max), {}};
    const std::int64_t per_axis = std::int64_t{1} << (domain.q0().scale - cube.scale);
    for (int i = 0; i < d; ++i)
      cube.corner[i] = domain.q0().corner[i] * per_axis +
                       std::uniform_int_distribution<std::int64_t>(0, per_axis - 1)(rng);
    const CZSet R(cube, log_a, r);
    if (R.admissible() && domain.contains(R)) return R;
  }
  throw InvalidArgument("could not place an admissible set inside the domain");
}

PartitionFunction random_atom_on(std::shared_ptr<const PartitionTree> tree, int node, std::mt19937_64& rng, double p,
                                 double size_fraction) {
  const auto& n = tree->node(node);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<double> v(tree->leaf_count(), 0.0);
  double integral = 0.0, rho = 0.0;
  for (int i = n.leaf_begin; i < n.leaf_end; ++i) {
    v[static_cast<std::size_t>(i)] = n01(rng);
    integral += v[static_cast<std::size_t>(i)] * tree->leaf_measure(static_cast<std::size_t>(i));
    rho += tree->leaf_measure(static_cast<std::size_t>(i));
  }
  if (n.leaf_end - n.leaf_begin < 2) throw InvalidArgument("an atom needs a node with at least two leaves");
  for (int i = n.leaf_begin; i < n.leaf_end; ++i) v[static_cast<std::size_t>(i)] -= integral / rho;
  PartitionFunction a(tree, std::move(v));
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  const double target = size_fraction * std::pow(rho_measure(n.set), inv_p - 1.0);
  a *= target / lp_norm(a, p);
  return a;
}

GeneratedAtom random_atom(const ComputationDomain& domain, std::mt19937_64& rng, double p, int min_depth,
                          int max_depth, int extra_depth, bool extremal) {
  const int depth = uniform_int(rng, min_depth, max_depth);
  const auto path = random_path(domain, rng, depth);
  const double prob = uniform(rng, 0.45, 0.75);
  auto tree = std::make_shared<const PartitionTree>(PartitionTree::build(
      domain,
      [&](const CZSet&, std::span<const int> q) {
        if (q.size() < path.size()) return is_prefix(q, path);
        if (!is_prefix(path, q)) return false;
        // below the atom's node: always split once, then at random
        return q.size() == path.size() || uniform(rng, 0.0, 1.0) < prob;
      },
      depth + extra_depth));
  const int node = tree->node_at(path);
  const double fraction = extremal ? 1.0 : uniform(rng, 0.5, 1.0);
  auto a = random_atom_on(tree, node, rng, p, fraction);
  return GeneratedAtom{std::move(a), node, tree->node(node).set};
}

GeneratedAtom peaked_atom(const ComputationDomain& domain, std::mt19937_64& rng, double p, int levels, double gamma,
                          int min_depth, int max_depth) {
  const int depth = uniform_int(rng, min_depth, max_depth);
  const auto path = random_path(domain, rng, depth + levels);
  const double prob = uniform(rng, 0.1, 0.3) / static_cast<double>(1 << (domain.dim() - 1));
  auto tree = std::make_shared<const PartitionTree>(PartitionTree::build(
      domain,
      [&](const CZSet&, std::span<const int> q) {
        if (q.size() < path.size() && is_prefix(q, path)) return true;
        // a little extra structure off the chain, inside R
        return q.size() > static_cast<std::size_t>(depth) + 1 &&
               is_prefix(std::span<const int>(path.data(), static_cast<std::size_t>(depth) + 1), q) &&
               uniform(rng, 0.0, 1.0) < prob;
      },
      depth + levels + 3));
  const int node = tree->node_at(std::span<const int>(path.data(), static_cast<std::size_t>(depth) + 1));
  const auto& rn = tree->node(node);
  const double rho0 = rho_measure(rn.set);
  std::vector<double> v(tree->leaf_count(), 0.0);
  for (int i = rn.leaf_begin; i < rn.leaf_end; ++i) v[static_cast<std::size_t>(i)] = uniform(rng, -0.5, 0.5);
  for (int k = 1; k <= levels; ++k) {
    const int id = tree->node_at(std::span<const int>(path.data(), static_cast<std::size_t>(depth + k) + 1));
    const auto& n = tree->node(id);
    const double c = uniform(rng, 0.7, 1.3) * std::pow(rho0 / rho_measure(n.set), gamma);
    for (int i = n.leaf_begin; i < n.leaf_end; ++i) v[static_cast<std::size_t>(i)] = c;
  }
  double integral = 0.0;
  for (int i = rn.leaf_begin; i < rn.leaf_end; ++i)
    integral += v[static_cast<std::size_t>(i)] * tree->leaf_measure(static_cast<std::size_t>(i));
  for (int i = rn.leaf_begin; i < rn.leaf_end; ++i) v[static_cast<std::size_t>(i)] -= integral / rho0;
  PartitionFunction a(tree, std::move(v));
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  a *= uniform(rng, 0.8, 1.0) * std::pow(rho0, inv_p - 1.0) / lp_norm(a, p);
  return GeneratedAtom{std::move(a), node, rn.set};
}

PartitionFunction random_bmo_function(const ComputationDomain& domain, std::mt19937_64& rng) {
  // chains along a few random paths, plus random refinement for the atoms and the ln a profile
  const int n_chains = uniform_int(rng, 1, 3);
  std::vector<std::vector<int>> chains;
  for (int c = 0; c < n_chains; ++c) chains.push_back(random_path(domain, rng, uniform_int(rng, 6, 12)));
  const double prob = uniform(rng, 0.25, 0.45) / static_cast<double>(1 << (domain.dim() - 1));
  auto tree = std::make_shared<const PartitionTree>(PartitionTree::build(
      domain,
      [&](const CZSet&, std::span<const int> q) {
        for (const auto& ch : chains)
          if (q.size() < ch.size() && is_prefix(q, ch)) return true;
        return q.size() < 3 || uniform(rng, 0.0, 1.0) < prob;
      },
      14));

  const double slope = uniform(rng, 0.2, 1.0);
  const double cap = uniform(rng, 1.5, 3.5);
  std::vector<double> v(tree->leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double u = tree->leaf_set(i).log_a();
    v[i] = slope * std::clamp(u, -cap, cap);
  }
  for (const auto& ch : chains) {
    const double weight = uniform(rng, 0.5, 2.0) * (uniform(rng, 0.0, 1.0) < 0.5 ? -1.0 : 1.0);
    const int start = uniform_int(rng, 1, 3);
    for (std::size_t k = static_cast<std::size_t>(start); k <= ch.size(); ++k) {
      const int id = tree->node_at(std::span<const int>(ch.data(), k));
      const auto& n = tree->node(id);
      for (int i = n.leaf_begin; i < n.leaf_end; ++i) v[static_cast<std::size_t>(i)] += weight;
    }
  }
  PartitionFunction f(tree, std::move(v));
  const int n_atoms = uniform_int(rng, 1, 4);
  for (int k = 0; k < n_atoms; ++k) {
    const int id = uniform_int(rng, 0, static_cast<int>(tree->node_count()) - 1);
    const auto& n = tree->node(id);
    if (n.leaf_end - n.leaf_begin < 2) continue;
    // sup-normalized so the function stays bounded
    auto a = random_atom_on(tree, id, rng, INFINITY, 1.0);
    f += (uniform(rng, -1.5, 1.5) * rho_measure(n.set)) * a;
  }
  return f;
}

PartitionFunction power_law_chain(const ComputationDomain& domain, std::mt19937_64& rng, double p, int start_depth,
                                  int levels) {
  const auto path = random_path(domain, rng, start_depth + levels);
  const double prob = uniform(rng, 0.2, 0.4) / static_cast<double>(1 << (domain.dim() - 1));
  auto tree = std::make_shared<const PartitionTree>(PartitionTree::build(
      domain,
      [&](const CZSet&, std::span<const int> q) {
        if (q.size() < path.size() && is_prefix(q, path)) return true;
        // light random refinement inside the chain's top node
        return q.size() > static_cast<std::size_t>(start_depth) &&
               is_prefix(std::span<const int>(path.data(), static_cast<std::size_t>(start_depth) + 1), q) &&
               uniform(rng, 0.0, 1.0) < prob;
      },
      start_depth + levels + 2));
  const int top = tree->node_at(std::span<const int>(path.data(), static_cast<std::size_t>(start_depth) + 1));
  const double rho0 = rho_measure(tree->node(top).set);
  std::vector<double> v(tree->leaf_count(), 0.0);
  for (int k = 0; k <= levels; ++k) {
    const int id = tree->node_at(std::span<const int>(path.data(), static_cast<std::size_t>(start_depth + k) + 1));
    const auto& n = tree->node(id);
    const double c = uniform(rng, 0.5, 1.5) * std::pow(rho0 / rho_measure(n.set), 1.0 / p);
    // deeper sets overwrite, so f = c_k on R_k minus R_{k+1}
    for (int i = n.leaf_begin; i < n.leaf_end; ++i) v[static_cast<std::size_t>(i)] = c;
  }
  return PartitionFunction(std::move(tree), std::move(v));
}

}  // namespace hardy
