#include "hardy/functions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hardy/errors.hpp"

namespace hardy {

namespace {

bool contains_half_open(const CZSet& R, const GroupPoint& p, double u, bool close_top) {
  if (!R.cube.contains(p.x)) return false;
  if (u < R.u_lo()) return false;
  return close_top ? u <= R.u_hi() : u < R.u_hi();
}

}  // namespace

ComputationDomain::ComputationDomain(int dim, int q0_scale, int n_layers,
                                     const std::array<std::int64_t, kMaxDim>& q0_corner)
    : dim_(dim), q0_{dim, q0_scale, q0_corner}, n_(n_layers) {
  if (dim < 1 || dim > kMaxDim) throw ConfigInvalid("dimension must be in [1, 3]");
  if (n_layers < 1) throw ConfigInvalid("vertical exponent N must be at least 1");
  for (int i = dim; i < kMaxDim; ++i) q0_.corner[i] = 0;
  for (int k = 0; k < n_layers; ++k) {
    const double log_a = -n_layers + 1 + 2 * k;
    const double a = std::exp(log_a);
    int scale = q0_scale;
    while (std::ldexp(1.0, scale) >= std::exp(2.0) * a && !is_admissible(DyadicCube{dim, scale, {}}, a, 1.0)) --scale;
    if (!is_admissible(DyadicCube{dim, scale, {}}, a, 1.0)) {
      throw ConfigInvalid("no admissible cube inside Q0 for layer log_a = " + std::to_string(log_a) +
                          "; enlarge Q0 or reduce N");
    }
    const std::int64_t per_axis = std::int64_t{1} << (q0_scale - scale);
    std::int64_t count = 1;
    for (int i = 0; i < dim; ++i) count *= per_axis;
    for (std::int64_t idx = 0; idx < count; ++idx) {
      DyadicCube c{dim, scale, {}};
      std::int64_t rest = idx;
      for (int i = 0; i < dim; ++i) {
        c.corner[i] = q0_.corner[i] * per_axis + rest % per_axis;
        rest /= per_axis;
      }
      roots_.emplace_back(c, log_a, 1.0);
    }
  }
}

ComputationDomain ComputationDomain::standard(int dim) { return ComputationDomain(dim, 8, 4); }

double ComputationDomain::measure() const { return q0_.volume() * 2.0 * n_; }

bool ComputationDomain::contains(const CZSet& R) const {
  if (R.dim() != dim_) return false;
  for (int i = 0; i < dim_; ++i)
    if (R.cube.lo(i) < q0_.lo(i) || R.cube.hi(i) > q0_.hi(i)) return false;
  const double slack = 1e-12 * n_;
  return R.u_lo() >= u_lo() - slack && R.u_hi() <= u_hi() + slack;
}

bool operator==(const ComputationDomain& a, const ComputationDomain& b) {
  return a.dim() == b.dim() && a.q0() == b.q0() && a.n_layers() == b.n_layers();
}

PartitionTree::PartitionTree(ComputationDomain domain) : domain_(std::move(domain)) {
  for (const auto& R : domain_.roots()) nodes_.push_back(Node{R});
  reindex();
}

PartitionTree PartitionTree::build(ComputationDomain domain, const SplitRule& should_split, int max_depth) {
  PartitionTree tree(std::move(domain));
  // explicit stack of (node id, path length) keeps deep trees off the call stack
  std::vector<std::pair<int, std::vector<int>>> stack;
  for (int root = tree.root_count() - 1; root >= 0; --root) stack.push_back({root, {root}});
  while (!stack.empty()) {
    auto [id, p] = std::move(stack.back());
    stack.pop_back();
    if (static_cast<int>(p.size()) - 1 >= max_depth) continue;
    if (!should_split(tree.nodes_[static_cast<std::size_t>(id)].set, p)) continue;
    tree.split_node(id);
    const Node& n = tree.nodes_[static_cast<std::size_t>(id)];
    for (int c = n.n_children - 1; c >= 0; --c) {
      auto child_path = p;
      child_path.push_back(c);
      stack.push_back({n.first_child + c, std::move(child_path)});
    }
  }
  tree.reindex();
  return tree;
}

void PartitionTree::split_node(int id) {
  auto children = split(nodes_[static_cast<std::size_t>(id)].set);
  const int first = static_cast<int>(nodes_.size());
  const int depth = nodes_[static_cast<std::size_t>(id)].depth + 1;
  for (auto& c : children) {
    Node n{c};
    n.parent = id;
    n.depth = depth;
    nodes_.push_back(n);
  }
  Node& parent = nodes_[static_cast<std::size_t>(id)];
  parent.first_child = first;
  parent.n_children = static_cast<int>(children.size());
}

void PartitionTree::reindex() {
  leaf_nodes_.clear();
  leaf_rho_.clear();
  // iterative DFS; post-visit fills leaf_end
  std::vector<std::pair<int, bool>> stack;
  for (int root = root_count() - 1; root >= 0; --root) stack.push_back({root, false});
  while (!stack.empty()) {
    auto [id, done] = stack.back();
    stack.pop_back();
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (done) {
      n.leaf_end = static_cast<int>(leaf_nodes_.size());
      continue;
    }
    n.leaf_begin = static_cast<int>(leaf_nodes_.size());
    if (n.n_children == 0) {
      leaf_nodes_.push_back(id);
      leaf_rho_.push_back(rho_measure(n.set));
      n.leaf_end = n.leaf_begin + 1;
      continue;
    }
    stack.push_back({id, true});
    for (int c = n.n_children - 1; c >= 0; --c) stack.push_back({n.first_child + c, false});
  }
}

int PartitionTree::leaf_index_of(int node_id) const {
  const Node& n = node(node_id);
  return n.n_children == 0 ? n.leaf_begin : -1;
}

PartitionTree PartitionTree::refined(const std::vector<int>& leaf_node_ids) const {
  PartitionTree out = *this;
  for (int id : leaf_node_ids) {
    if (!out.is_leaf(id)) throw InvalidArgument("refine target is not a leaf: node " + std::to_string(id));
    out.split_node(id);
  }
  out.reindex();
  return out;
}

std::vector<int> PartitionTree::path_of(int id) const {
  std::vector<int> path;
  int cur = id;
  while (node(cur).parent >= 0) {
    const int parent = node(cur).parent;
    path.push_back(cur - node(parent).first_child);
    cur = parent;
  }
  path.push_back(cur);
  std::reverse(path.begin(), path.end());
  return path;
}

int PartitionTree::node_at(std::span<const int> path) const {
  if (path.empty() || path[0] < 0 || path[0] >= root_count()) return -1;
  int id = path[0];
  for (std::size_t k = 1; k < path.size(); ++k) {
    const Node& n = node(id);
    if (n.n_children == 0 || path[k] >= n.n_children) return -1;
    id = n.first_child + path[k];
  }
  return id;
}

int PartitionTree::leaf_along(std::span<const int> path) const {
  if (path.empty() || path[0] < 0 || path[0] >= root_count()) return -1;
  int id = path[0];
  for (std::size_t k = 1; k < path.size() && node(id).n_children > 0; ++k) id = node(id).first_child + path[k];
  if (node(id).n_children > 0) return -1;
  return node(id).leaf_begin;
}

int PartitionTree::find_node(const CZSet& R) const {
  for (int root = 0; root < root_count(); ++root) {
    int id = root;
    if (!node(id).set.contains(R)) continue;
    while (true) {
      const Node& n = node(id);
      if (n.set == R) return id;
      int next = -1;
      for (int c = 0; c < n.n_children; ++c) {
        if (node(n.first_child + c).set.contains(R)) {
          next = n.first_child + c;
          break;
        }
      }
      if (next < 0) return -1;
      id = next;
    }
  }
  return -1;
}

int PartitionTree::smallest_node_covering(int leaf_begin, int leaf_end) const {
  if (leaf_begin >= leaf_end) return -1;
  int id = leaf_nodes_.at(static_cast<std::size_t>(leaf_begin));
  while (id >= 0 && node(id).leaf_end < leaf_end) id = node(id).parent;
  return id;
}

int PartitionTree::locate(const GroupPoint& p) const {
  if (p.dim != dim()) return -1;
  const double u = std::log(p.a);
  for (int root = 0; root < root_count(); ++root) {
    const bool top = nodes_[static_cast<std::size_t>(root)].set.u_hi() >= domain_.u_hi();
    if (!contains_half_open(node(root).set, p, u, top)) continue;
    int id = root;
    while (node(id).n_children > 0) {
      const Node& n = node(id);
      int next = -1;
      for (int c = 0; c < n.n_children; ++c) {
        const CZSet& s = node(n.first_child + c).set;
        if (contains_half_open(s, p, u, top && s.u_hi() >= n.set.u_hi())) {
          next = n.first_child + c;
          break;
        }
      }
      if (next < 0) return -1;
      id = next;
    }
    return node(id).leaf_begin;
  }
  return -1;
}

PartitionFunction::PartitionFunction(std::shared_ptr<const PartitionTree> tree, std::vector<double> values)
    : tree_(std::move(tree)), values_(std::move(values)) {
  if (!tree_) throw InvalidArgument("function needs a tree");
  if (values_.size() != tree_->leaf_count())
    throw InvalidArgument("expected " + std::to_string(tree_->leaf_count()) + " leaf values, got " +
                          std::to_string(values_.size()));
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("leaf values must be finite");
}

PartitionFunction PartitionFunction::zero(std::shared_ptr<const PartitionTree> tree) {
  const auto n = tree->leaf_count();
  return PartitionFunction(std::move(tree), std::vector<double>(n, 0.0));
}

PartitionFunction PartitionFunction::constant(std::shared_ptr<const PartitionTree> tree, double c) {
  const auto n = tree->leaf_count();
  return PartitionFunction(std::move(tree), std::vector<double>(n, c));
}

PartitionFunction PartitionFunction::indicator(std::shared_ptr<const PartitionTree> tree, int node_id) {
  std::vector<double> v(tree->leaf_count(), 0.0);
  const auto& n = tree->node(node_id);
  for (int i = n.leaf_begin; i < n.leaf_end; ++i) v[static_cast<std::size_t>(i)] = 1.0;
  return PartitionFunction(std::move(tree), std::move(v));
}

double PartitionFunction::evaluate(const GroupPoint& p) const {
  const int leaf = tree_->locate(p);
  return leaf < 0 ? 0.0 : values_[static_cast<std::size_t>(leaf)];
}

void PartitionFunction::require_same_tree(const PartitionFunction& g) const {
  if (tree_ != g.tree_) throw InvalidArgument("functions live on different trees; use common_refinement");
}

PartitionFunction& PartitionFunction::operator+=(const PartitionFunction& g) {
  require_same_tree(g);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += g.values_[i];
  return *this;
}

PartitionFunction& PartitionFunction::operator-=(const PartitionFunction& g) {
  require_same_tree(g);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= g.values_[i];
  return *this;
}

PartitionFunction& PartitionFunction::operator*=(double c) {
  for (double& v : values_) v *= c;
  return *this;
}

PartitionFunction operator+(PartitionFunction f, const PartitionFunction& g) { return f += g; }
PartitionFunction operator-(PartitionFunction f, const PartitionFunction& g) { return f -= g; }
PartitionFunction operator*(double c, PartitionFunction f) { return f *= c; }
PartitionFunction operator*(PartitionFunction f, double c) { return f *= c; }

PartitionFunction multiply(const PartitionFunction& f, const PartitionFunction& g) {
  if (f.tree_ptr() != g.tree_ptr()) throw InvalidArgument("functions live on different trees");
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.value(i) * g.value(i);
  return PartitionFunction(f.tree_ptr(), std::move(v));
}

double integrate_rho(const PartitionFunction& f) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += f.value(i) * f.tree().leaf_measure(i);
  return s;
}

double integrate_on(const PartitionFunction& f, const CZSet& R) {
  double s = 0.0;
  f.tree().for_each_overlap(R, [&](int leaf, double m) { s += f.value(static_cast<std::size_t>(leaf)) * m; });
  return s;
}

double lp_norm(const PartitionFunction& f, double p) {
  if (!(p >= 1.0)) throw InvalidArgument("lp_norm needs p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
  }
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double v = std::abs(f.value(i));
    if (v > 0.0) s += std::pow(v, p) * f.tree().leaf_measure(i);
  }
  return std::pow(s, 1.0 / p);
}

double average_on(const PartitionFunction& f, const CZSet& R) {
  if (!f.tree().domain().contains(R)) throw RegionNotResolved("set leaves the computation domain");
  return integrate_on(f, R) / rho_measure(R);
}

PartitionFunction restrict_to(const PartitionFunction& f, int node_id) {
  std::vector<double> v(f.size(), 0.0);
  const auto& n = f.tree().node(node_id);
  for (int i = n.leaf_begin; i < n.leaf_end; ++i) v[static_cast<std::size_t>(i)] = f.value(static_cast<std::size_t>(i));
  return PartitionFunction(f.tree_ptr(), std::move(v));
}

int support_node(const PartitionFunction& f) {
  int first = -1, last = -1;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.value(i) != 0.0) {
      if (first < 0) first = static_cast<int>(i);
      last = static_cast<int>(i);
    }
  }
  if (first < 0) return -1;
  return f.tree().smallest_node_covering(first, last + 1);
}

double cell_average(const CZSet& R, const Sampler& sampler, int samples_per_axis) {
  if (samples_per_axis < 1) throw InvalidArgument("samples_per_axis must be positive");
  const int d = R.dim();
  int n = samples_per_axis;
  // cap the grid at 2^16 points
  while (n > 1 && std::pow(static_cast<double>(n), d + 1) > 65536.0) n /= 2;
  std::size_t total = 1;
  for (int i = 0; i <= d; ++i) total *= static_cast<std::size_t>(n);
  double s = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    Vec x{};
    for (int i = 0; i < d; ++i, c /= static_cast<std::size_t>(n))
      x[i] = R.cube.lo(i) + R.cube.side() * (static_cast<double>(c % static_cast<std::size_t>(n)) + 0.5) / n;
    const double u = R.u_lo() + 2.0 * R.r() * (static_cast<double>(c % static_cast<std::size_t>(n)) + 0.5) / n;
    s += sampler(GroupPoint(d, x, std::exp(u)));
  }
  return s / static_cast<double>(total);
}

PartitionFunction project(std::shared_ptr<const PartitionTree> tree, const Sampler& sampler, int samples_per_axis) {
  std::vector<double> v(tree->leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cell_average(tree->leaf_set(i), sampler, samples_per_axis);
  return PartitionFunction(std::move(tree), std::move(v));
}

namespace {

/// Old leaf index for each leaf of a tree obtained from `coarse` by appending nodes.
std::vector<int> ancestor_leaves(const PartitionTree& coarse, const PartitionTree& fine) {
  std::vector<int> out(fine.leaf_count());
  const int old_count = static_cast<int>(coarse.node_count());
  for (std::size_t i = 0; i < out.size(); ++i) {
    int id = fine.leaves()[i];
    while (id >= old_count) id = fine.node(id).parent;
    out[i] = coarse.leaf_index_of(id);
    if (out[i] < 0) throw InvalidArgument("tree is not a refinement of the function's tree");
  }
  return out;
}

}  // namespace

PartitionFunction refine(const PartitionFunction& f, int leaf_node_id, const Sampler& sampler, int samples_per_axis) {
  auto fine = std::make_shared<const PartitionTree>(f.tree().refined({leaf_node_id}));
  const auto map = ancestor_leaves(f.tree(), *fine);
  const int old_count = static_cast<int>(f.tree().node_count());
  std::vector<double> v(fine->leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const int id = fine->leaves()[i];
    v[i] = id >= old_count ? cell_average(fine->node(id).set, sampler, samples_per_axis)
                           : f.value(static_cast<std::size_t>(map[i]));
  }
  return PartitionFunction(std::move(fine), std::move(v));
}

PartitionFunction transfer(const PartitionFunction& f, std::shared_ptr<const PartitionTree> finer) {
  if (!(finer->domain() == f.tree().domain())) throw InvalidArgument("transfer between different domains");
  std::vector<double> v(finer->leaf_count());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto path = finer->path_of(finer->leaves()[i]);
    const int leaf = f.tree().leaf_along(path);
    if (leaf < 0) throw InvalidArgument("target tree does not refine the function's tree");
    v[i] = f.value(static_cast<std::size_t>(leaf));
  }
  return PartitionFunction(std::move(finer), std::move(v));
}

std::pair<PartitionFunction, PartitionFunction> common_refinement(const PartitionFunction& f,
                                                                  const PartitionFunction& g) {
  if (f.tree_ptr() == g.tree_ptr()) return {f, g};
  const auto& A = f.tree();
  const auto& B = g.tree();
  if (!(A.domain() == B.domain())) throw InvalidArgument("functions on different domains");
  auto splits_in = [](const PartitionTree& T, std::span<const int> path) {
    const int id = T.node_at(path);
    return id >= 0 && !T.is_leaf(id);
  };
  auto merged = std::make_shared<const PartitionTree>(PartitionTree::build(
      A.domain(),
      [&](const CZSet&, std::span<const int> path) { return splits_in(A, path) || splits_in(B, path); },
      std::numeric_limits<int>::max()));
  return {transfer(f, merged), transfer(g, merged)};
}

std::vector<double> node_sums(const PartitionTree& tree, std::span<const double> per_leaf) {
  if (per_leaf.size() != tree.leaf_count()) throw InvalidArgument("node_sums: size mismatch");
  std::vector<double> out(tree.node_count(), 0.0);
  for (std::size_t i = 0; i < per_leaf.size(); ++i) out[static_cast<std::size_t>(tree.leaves()[i])] = per_leaf[i];
  // children always have larger ids than their parent
  for (std::size_t id = out.size(); id-- > 0;) {
    const auto& n = tree.nodes()[id];
    if (n.n_children == 0) continue;
    double s = 0.0;
    for (int c = 0; c < n.n_children; ++c) s += out[static_cast<std::size_t>(n.first_child + c)];
    out[id] = s;
  }
  return out;
}

}  // namespace hardy
