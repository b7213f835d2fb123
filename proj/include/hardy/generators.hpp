#pragma once

#include <memory>
#include <random>

#include "hardy/functions.hpp"

namespace hardy {

/// Tree split to depth min_depth everywhere, then each node split with probability split_prob up to max_depth.
std::shared_ptr<const PartitionTree> random_tree(const ComputationDomain& domain, std::mt19937_64& rng, int min_depth,
                                                 int max_depth, double split_prob);

/// Uniform leaf values in [lo, hi].
PartitionFunction random_function(std::shared_ptr<const PartitionTree> tree, std::mt19937_64& rng, double lo = -1.0,
                                  double hi = 1.0);

/// Admissible set inside the computation domain with r in [r_min, r_max].
CZSet random_set_in_domain(const ComputationDomain& domain, std::mt19937_64& rng, double r_min, double r_max);

struct GeneratedAtom {
  PartitionFunction a;
  int node = -1;
  CZSet R;
};

/// Random (1, p)-atom on a random node at depth in [min_depth, max_depth], refined below it by extra_depth levels.
/// Its p-norm is a fraction in [0.5, 1] of the admissible maximum (exactly the maximum when extremal).
GeneratedAtom random_atom(const ComputationDomain& domain, std::mt19937_64& rng, double p, int min_depth = 2,
                          int max_depth = 5, int extra_depth = 5, bool extremal = false);

/// (1, p)-atom concentrated along a chain of `levels` nested nodes below a random node R:
/// value ~ (rho(R) / rho(R_k))^gamma on R_k minus R_{k+1}, then mean removed and p-norm normalized.
/// With gamma close to 1/p the re-expansion needs many stages.
GeneratedAtom peaked_atom(const ComputationDomain& domain, std::mt19937_64& rng, double p, int levels, double gamma,
                          int min_depth = 1, int max_depth = 3);

/// Random (1, p)-atom on a given node of an existing tree.
PartitionFunction random_atom_on(std::shared_ptr<const PartitionTree> tree, int node, std::mt19937_64& rng, double p,
                                 double size_fraction);

/// Signed values |X|^3 with X exponential: a few large peaks over a small background.
PartitionFunction heavy_tailed_function(std::shared_ptr<const PartitionTree> tree, std::mt19937_64& rng);

/// Bounded test function: truncated ln a profile, nested-indicator chains and a few atoms.
PartitionFunction random_bmo_function(const ComputationDomain& domain, std::mt19937_64& rng);

/// f = sum_k c_k chi_{R_k} along a random chain of nested nodes starting at depth start_depth,
/// with c_k = jitter_k (rho(R_0) / rho(R_k))^{1/p}: the L^p-critical profile.
PartitionFunction power_law_chain(const ComputationDomain& domain, std::mt19937_64& rng, double p, int start_depth,
                                  int levels);

}  // namespace hardy
