#pragma once

#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hardy/functions.hpp"

namespace hardy {

using KernelFn = std::function<double(const GroupPoint& x, const GroupPoint& y)>;

struct KernelSpec {
  std::string name;
  KernelFn evaluate;
  /// Hörmander quantities use K(y, x) instead of K(x, y).
  bool adjoint = false;
  /// Drop the diagonal leaf from the quadrature.
  bool singular_diagonal = false;
};

/// Parameters of the built-in kernels.
struct KernelParams {
  double amplitude = 1.0;
  double support = 0.025;  // radial bump: phi vanishes for d >= support
  double decay = 2.0;      // exp-decay rate
  double jump_at = 100.0;  // jump kernel: sign(y_1 - jump_at)
  double psi_center = 128.0;
  double psi_width = 32.0;
};

/// K(x, y) = evaluate(y, x).
KernelSpec transpose(const KernelSpec& K);

KernelSpec zero_kernel();
KernelSpec constant_kernel(double c);
/// amplitude (1 - (d/s)^2)^2 a_y^{-d} for d < s.
KernelSpec radial_bump_kernel(double amplitude, double support);
/// amplitude e^{-decay d} a_y^{-d}.
KernelSpec exp_decay_kernel(double amplitude, double decay);
/// sign(y_1 - jump_at) psi(x) with psi a Gaussian in (x_1, ln a) of the given width.
KernelSpec jump_kernel(const KernelParams& params);
/// By name: zero, constant, radial-bump, exp-decay, jump.
KernelSpec make_kernel(const std::string& name, const KernelParams& params = {});
const std::vector<std::string>& kernel_names();

/// Every node at depth < levels split.
std::shared_ptr<const PartitionTree> quadrature_tree(const ComputationDomain& domain, int levels);

/// (Tf)(c_i) = sum_j K(c_i, c_j) f_j rho_j over leaf centroids.
PartitionFunction apply_kernel(const KernelSpec& K, const PartitionFunction& f);

struct OperatorNorm {
  double power_estimate = 0.0;  // power iteration on the discretization
  double schur_bound = 0.0;     // certified upper bound for the same matrix
  int iterations = 0;
};

OperatorNorm operator_norm_l2(const KernelSpec& K, const PartitionTree& tree, int iterations = 50);

/// Corners plus an n^{d+1} midpoint grid.
std::vector<GroupPoint> sample_points(const CZSet& R, int per_axis = 3);

struct HormanderReport {
  std::vector<std::pair<CZSet, double>> per_set;
  double overall_sup = 0.0;
  std::string truncation_note;
};

/// sup over sampled y, z in R of the sum over leaves with centroid outside R* of |K(x,y) - K(x,z)| rho(leaf).
HormanderReport hormander_sup(const KernelSpec& K, const PartitionTree& tree, const std::vector<CZSet>& family,
                              int per_axis = 3);

/// sup over y in R of the same sum for |K(x,y) - K(x,x_R)|, x_R = R.center(). The y range covers the
/// sample grid and every leaf centroid of the tree inside R.
double hormander_center(const KernelSpec& K, const PartitionTree& tree, const CZSet& R, int per_axis = 3);

struct AtomImageReport {
  double total_l1 = 0.0;
  double on_dilated_l1 = 0.0;
  double off_dilated_l1 = 0.0;
  /// Off-R* integral of |sum_j [K(x,c_j) - K(x,x_R)] a_j rho_j|.
  double off_identity_l1 = 0.0;
  /// Off-R* integral of sum_j |K(x,c_j) a_j| rho_j: the scale of round-off in the two integrals above.
  double off_magnitude = 0.0;
  double identity_rel_error = 0.0;
  double atom_l1 = 0.0;
  double dilated_measure = 0.0;  // leaves with centroid in R*
  double on_bound = 0.0;   // kappa0^{1/2} op
  double off_bound = 0.0;  // hormander * |a|_1
  double bound() const { return on_bound + off_bound; }
};

/// |Ta|_1 and its two-piece bound. a must be a (1,2)-atom on R.
AtomImageReport atom_image_l1(const KernelSpec& K, const PartitionFunction& a, const CZSet& R, double op_norm_l2,
                              double hormander_bound, double kappa0);

}  // namespace hardy
