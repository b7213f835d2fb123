#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hardy/geometry.hpp"

namespace hardy {

/// Q0 x [e^{-N}, e^{N}] tiled by r = 1 layers of admissible dyadic cubes.
class ComputationDomain {
 public:
  ComputationDomain(int dim, int q0_scale, int n_layers, const std::array<std::int64_t, kMaxDim>& q0_corner = {});

  /// Defaults: Q0 = [0, 2^8)^d, N = 4.
  static ComputationDomain standard(int dim);

  int dim() const { return dim_; }
  const DyadicCube& q0() const { return q0_; }
  int n_layers() const { return n_; }
  double u_lo() const { return -static_cast<double>(n_); }
  double u_hi() const { return static_cast<double>(n_); }
  const std::vector<CZSet>& roots() const { return roots_; }
  double measure() const;
  bool contains(const CZSet& R) const;

 private:
  int dim_;
  DyadicCube q0_;
  int n_;
  std::vector<CZSet> roots_;
};

bool operator==(const ComputationDomain& a, const ComputationDomain& b);

/// Refinement tree of CZ sets over a domain. Node ids are stable under refinement; leaves are in depth-first order.
class PartitionTree {
 public:
  struct Node {
    CZSet set;
    int parent = -1;
    int first_child = -1;
    int n_children = 0;
    int depth = 0;
    int leaf_begin = 0;  // [leaf_begin, leaf_end) in leaf order
    int leaf_end = 0;
  };

  /// Path is (root index, child slot, child slot, ...).
  using SplitRule = std::function<bool(const CZSet&, std::span<const int> path)>;

  explicit PartitionTree(ComputationDomain domain);

  static PartitionTree build(ComputationDomain domain, const SplitRule& should_split, int max_depth);

  const ComputationDomain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  std::size_t node_count() const { return nodes_.size(); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  const std::vector<Node>& nodes() const { return nodes_; }
  int root_count() const { return static_cast<int>(domain_.roots().size()); }
  bool is_leaf(int id) const { return node(id).n_children == 0; }
  std::span<const int> leaves() const { return leaf_nodes_; }
  std::size_t leaf_count() const { return leaf_nodes_.size(); }
  const CZSet& leaf_set(std::size_t i) const { return nodes_[static_cast<std::size_t>(leaf_nodes_[i])].set; }
  double leaf_measure(std::size_t i) const { return leaf_rho_[i]; }
  int leaf_index_of(int node_id) const;

  /// Copy with the given leaves split; existing node ids keep their meaning.
  PartitionTree refined(const std::vector<int>& leaf_node_ids) const;

  std::vector<int> path_of(int id) const;
  /// Node reached by the path, or -1 when the path passes below a leaf.
  int node_at(std::span<const int> path) const;
  /// Leaf whose set contains the node at the path (the deepest existing prefix).
  int leaf_along(std::span<const int> path) const;

  /// Node whose set equals R, or -1.
  int find_node(const CZSet& R) const;
  /// Deepest node containing every leaf in [leaf_begin, leaf_end).
  int smallest_node_covering(int leaf_begin, int leaf_end) const;
  /// Leaf index containing p (half-open convention), or -1 outside the domain.
  int locate(const GroupPoint& p) const;

  /// Calls fn(leaf_index, rho(leaf ∩ R)) for every leaf meeting R with positive measure.
  template <class Fn>
  void for_each_overlap(const CZSet& R, Fn&& fn) const {
    for (int root = 0; root < root_count(); ++root) visit_overlap(root, R, fn);
  }

 private:
  void split_node(int id);
  void reindex();

  template <class Fn>
  void visit_overlap(int id, const CZSet& R, Fn& fn) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    const double m = overlap_measure(n.set, R);
    if (m <= 0.0) return;
    if (n.n_children == 0) {
      fn(n.leaf_begin, m);
      return;
    }
    if (m >= rho_measure(n.set)) {
      for (int i = n.leaf_begin; i < n.leaf_end; ++i) fn(i, leaf_rho_[static_cast<std::size_t>(i)]);
      return;
    }
    for (int c = 0; c < n.n_children; ++c) visit_overlap(n.first_child + c, R, fn);
  }

  ComputationDomain domain_;
  std::vector<Node> nodes_;
  std::vector<int> leaf_nodes_;
  std::vector<double> leaf_rho_;
};

/// Real function constant on the leaves of a partition tree.
class PartitionFunction {
 public:
  PartitionFunction(std::shared_ptr<const PartitionTree> tree, std::vector<double> values);

  static PartitionFunction zero(std::shared_ptr<const PartitionTree> tree);
  static PartitionFunction constant(std::shared_ptr<const PartitionTree> tree, double c);
  /// Indicator of a tree node.
  static PartitionFunction indicator(std::shared_ptr<const PartitionTree> tree, int node_id);

  const PartitionTree& tree() const { return *tree_; }
  const std::shared_ptr<const PartitionTree>& tree_ptr() const { return tree_; }
  const std::vector<double>& values() const { return values_; }
  double value(std::size_t leaf) const { return values_[leaf]; }
  std::size_t size() const { return values_.size(); }
  double evaluate(const GroupPoint& p) const;

  PartitionFunction& operator+=(const PartitionFunction& g);
  PartitionFunction& operator-=(const PartitionFunction& g);
  PartitionFunction& operator*=(double c);

 private:
  void require_same_tree(const PartitionFunction& g) const;

  std::shared_ptr<const PartitionTree> tree_;
  std::vector<double> values_;
};

PartitionFunction operator+(PartitionFunction f, const PartitionFunction& g);
PartitionFunction operator-(PartitionFunction f, const PartitionFunction& g);
PartitionFunction operator*(double c, PartitionFunction f);
PartitionFunction operator*(PartitionFunction f, double c);
/// Pointwise product.
PartitionFunction multiply(const PartitionFunction& f, const PartitionFunction& g);

double integrate_rho(const PartitionFunction& f);
/// Integral of f over R ∩ domain.
double integrate_on(const PartitionFunction& f, const CZSet& R);
/// p may be infinity.
double lp_norm(const PartitionFunction& f, double p);
double average_on(const PartitionFunction& f, const CZSet& R);
/// f times the indicator of a node.
PartitionFunction restrict_to(const PartitionFunction& f, int node_id);
/// Union of leaves where f is nonzero, as the smallest covering tree node; -1 for f = 0.
int support_node(const PartitionFunction& f);

using Sampler = std::function<double(const GroupPoint&)>;

inline constexpr int kDefaultSamplesPerAxis = 32;

/// Average of a sampler over a set, midpoint grid in (x, u).
double cell_average(const CZSet& R, const Sampler& sampler, int samples_per_axis = kDefaultSamplesPerAxis);

/// Leaf values from cell-averaged sampling.
PartitionFunction project(std::shared_ptr<const PartitionTree> tree, const Sampler& sampler,
                          int samples_per_axis = kDefaultSamplesPerAxis);

/// Split one leaf and resample the sampler on the new children; other leaves keep their values.
PartitionFunction refine(const PartitionFunction& f, int leaf_node_id, const Sampler& sampler,
                         int samples_per_axis = kDefaultSamplesPerAxis);

/// Values of f carried over to a tree that refines f's tree.
PartitionFunction transfer(const PartitionFunction& f, std::shared_ptr<const PartitionTree> finer);

/// Both functions on the coarsest common refinement of their trees.
std::pair<PartitionFunction, PartitionFunction> common_refinement(const PartitionFunction& f,
                                                                  const PartitionFunction& g);

/// Per-node integrals of a per-leaf quantity (value times leaf measure is the caller's business).
std::vector<double> node_sums(const PartitionTree& tree, std::span<const double> per_leaf);

}  // namespace hardy
