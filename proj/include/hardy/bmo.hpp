#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "hardy/functions.hpp"

namespace hardy {

/// (1/rho(R) ∫_R |f - f_R|^q)^{1/q}, exact on leaf overlaps.
double oscillation(const PartitionFunction& f, const CZSet& R, double q = 1.0);

struct OscillationReport {
  double bmo_norm_lower = 0.0;  // sup over the tested family only
  std::size_t family_size = 0;
  std::vector<std::pair<CZSet, double>> per_set;
  double q = 1.0;
};

OscillationReport bmo_norm_over(const PartitionFunction& f, const std::vector<CZSet>& family, double q = 1.0);

/// Every node of the tree.
std::vector<CZSet> tree_family(const PartitionTree& tree);
/// Seeded admissible sets inside the domain, r in [0.05, 2].
std::vector<CZSet> random_family(const ComputationDomain& domain, std::uint64_t seed, std::size_t count = 200);
/// Tree nodes plus random_family(seed, count).
std::vector<CZSet> default_family(const PartitionTree& tree, std::uint64_t seed, std::size_t count = 200);

struct JNFit {
  std::vector<double> t_grid;
  /// rho({x in R : |f - f_R| > t norm}); for a family fit, the largest tail fraction over the family.
  std::vector<double> tails;
  double measure = 1.0;  // tails are compared against measure * A e^{-eta t}
  double norm = 0.0;
  double fitted_eta = 0.0;  // +inf when every tail vanishes
  /// sup over the fitted sets of the exponential integral at fitted_eta; bounds every tail by Chebyshev.
  double fitted_A = 1.0;
  /// Smallest A with tail <= measure A e^{-eta t} on the grid.
  double envelope_A = 1.0;
  std::size_t fit_points = 0;
  std::optional<double> exp_integral_fitted;  // (1/rho(R)) ∫_R exp(eta |f - f_R| / norm)
  std::optional<double> exp_integral_floor;   // same at eta = jn_eta_floor(d)

  bool accepted() const { return fitted_eta > 0.0; }
  /// tail(t) <= measure A e^{-eta t}, with relative slack.
  bool bound_holds(double t, double tail, double slack = 1e-12) const;
};

/// ln 2 / (2^d + 2).
double jn_eta_floor(int d);

/// Exact tails of |f - f_R| at t * norm and a log-linear fit A e^{-eta t}.
JNFit jn_verify(const PartitionFunction& f, const CZSet& R, const std::vector<double>& t_grid, double norm);

/// Same fit for the envelope sup_R tail_R(t) / rho(R) over a family.
JNFit jn_verify_family(const PartitionFunction& f, const std::vector<CZSet>& family, const std::vector<double>& t_grid,
                       double norm);

/// ∫ f g dρ, on the common refinement when the trees differ.
double duality_pairing(const PartitionFunction& f, const PartitionFunction& g);

}  // namespace hardy
