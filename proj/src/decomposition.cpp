#include "hardy/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "hardy/errors.hpp"

namespace hardy {

namespace {

double power_abs(double v, double e) {
  const double a = std::abs(v);
  if (e == 1.0) return a;
  if (e == 2.0) return a * a;
  return a == 0.0 ? 0.0 : std::pow(a, e);
}

/// Sum of |values|^e * rho over every node below start, written into sums (indexed by node id).
double fill_power_sums(const PartitionTree& tree, int id, int base, const std::vector<double>& values, double e,
                       std::vector<double>& sums) {
  const auto& n = tree.node(id);
  double s = 0.0;
  if (n.n_children == 0) {
    s = power_abs(values[static_cast<std::size_t>(n.leaf_begin - base)], e) *
        tree.leaf_measure(static_cast<std::size_t>(n.leaf_begin));
  } else {
    for (int c = 0; c < n.n_children; ++c) s += fill_power_sums(tree, n.first_child + c, base, values, e, sums);
  }
  sums[static_cast<std::size_t>(id)] = s;
  return s;
}

void collect_stops(const PartitionTree& tree, int id, const std::vector<double>& sums, double level,
                   std::vector<int>& out) {
  const auto& n = tree.node(id);
  for (int c = 0; c < n.n_children; ++c) {
    const int child = n.first_child + c;
    const double avg = sums[static_cast<std::size_t>(child)] / rho_measure(tree.node(child).set);
    if (avg > level) {
      out.push_back(child);
    } else if (!tree.is_leaf(child)) {
      collect_stops(tree, child, sums, level, out);
    }
  }
}

double range_measure(const PartitionTree& tree, int begin, int end) {
  double s = 0.0;
  for (int i = begin; i < end; ++i) s += tree.leaf_measure(static_cast<std::size_t>(i));
  return s;
}

/// Mean of values (indexed from base) over the leaf range of node.
double node_mean(const PartitionTree& tree, int node, int base, const std::vector<double>& values) {
  const auto& n = tree.node(node);
  const double first = values[static_cast<std::size_t>(n.leaf_begin - base)];
  bool constant = true;
  double s = 0.0;
  for (int i = n.leaf_begin; i < n.leaf_end; ++i) {
    const double v = values[static_cast<std::size_t>(i - base)];
    constant = constant && v == first;
    s += v * tree.leaf_measure(static_cast<std::size_t>(i));
  }
  if (constant) return first;
  return s / range_measure(tree, n.leaf_begin, n.leaf_end);
}

void check_exponent(double e) {
  if (!(e >= 1.0) || std::isinf(e)) throw InvalidArgument("exponent must be finite and >= 1");
}

std::vector<double> local_values(const PartitionFunction& f, int node) {
  const auto& n = f.tree().node(node);
  return {f.values().begin() + n.leaf_begin, f.values().begin() + n.leaf_end};
}

}  // namespace

double LocalPiece::sup() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

PartitionFunction expand(const LocalPiece& piece, std::shared_ptr<const PartitionTree> tree) {
  std::vector<double> v(tree->leaf_count(), 0.0);
  const auto& n = tree->node(piece.node);
  if (static_cast<int>(piece.values.size()) != n.leaf_end - n.leaf_begin)
    throw InvalidArgument("piece does not match its node's leaf range");
  std::copy(piece.values.begin(), piece.values.end(), v.begin() + n.leaf_begin);
  return PartitionFunction(std::move(tree), std::move(v));
}

bool AtomCertificate::valid() const { return sup_norm_residual <= 1e-10 && mean_residual <= 1e-10; }

AtomCertificate validate_atom(const PartitionFunction& a, double p, const CZSet& R) {
  if (!(p > 1.0)) throw InvalidArgument("atom exponent must lie in (1, inf]");
  const auto& tree = a.tree();
  double l1 = 0.0, integral = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.value(i) == 0.0) continue;
    const auto& leaf = tree.leaf_set(i);
    if (overlap_measure(leaf, R) < tree.leaf_measure(i) * (1.0 - 1e-12))
      throw SupportViolation("atom is nonzero on leaf " + std::to_string(i) + " outside its set");
    l1 += std::abs(a.value(i)) * tree.leaf_measure(i);
    integral += a.value(i) * tree.leaf_measure(i);
  }
  AtomCertificate cert;
  cert.p = p;
  cert.R = R;
  const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
  cert.sup_norm_residual = lp_norm(a, p) / std::pow(rho_measure(R), inv_p - 1.0) - 1.0;
  cert.mean_residual = l1 > 0.0 ? std::abs(integral) / l1 : 0.0;
  return cert;
}

std::vector<int> stopping_sets(const PartitionTree& tree, int start, const std::vector<double>& values,
                               double threshold, double exponent) {
  const auto& n = tree.node(start);
  if (static_cast<int>(values.size()) != n.leaf_end - n.leaf_begin)
    throw InvalidArgument("values do not match the start node's leaf range");
  std::vector<double> sums(tree.node_count(), 0.0);
  fill_power_sums(tree, start, n.leaf_begin, values, exponent, sums);
  std::vector<int> out;
  collect_stops(tree, start, sums, std::pow(threshold, exponent), out);
  return out;
}

namespace {

CZDecomposition decompose_from(const PartitionFunction& f, const std::vector<int>& starts, double alpha,
                               double exponent) {
  check_exponent(exponent);
  if (!(alpha > 0.0)) throw InvalidArgument("alpha must be positive");
  const auto& tree = f.tree();
  CZDecomposition out{alpha, exponent, f, {}, 0.0, 0.0};
  std::vector<double> g = f.values();
  const double level = std::pow(alpha, exponent);
  for (int start : starts) {
    const auto& sn = tree.node(start);
    const auto vals = local_values(f, start);
    double s = 0.0;
    for (int i = sn.leaf_begin; i < sn.leaf_end; ++i)
      s += power_abs(vals[static_cast<std::size_t>(i - sn.leaf_begin)], exponent) *
           tree.leaf_measure(static_cast<std::size_t>(i));
    if (s / rho_measure(sn.set) > level * (1.0 + 1e-12)) {
      throw RootAverageTooLarge("average of |f|^p on starting set " + std::to_string(start) + " is " +
                                std::to_string(s / rho_measure(sn.set)) + " > alpha^p = " + std::to_string(level));
    }
    for (int node : stopping_sets(tree, start, vals, alpha, exponent)) {
      const auto& nn = tree.node(node);
      BadPart part;
      part.node = node;
      part.set = nn.set;
      part.mean = node_mean(tree, node, sn.leaf_begin, vals);
      part.b.node = node;
      double ps = 0.0;
      for (int i = nn.leaf_begin; i < nn.leaf_end; ++i) {
        const double v = f.value(static_cast<std::size_t>(i));
        ps += power_abs(v, exponent) * tree.leaf_measure(static_cast<std::size_t>(i));
        part.b.values.push_back(v - part.mean);
        g[static_cast<std::size_t>(i)] = part.mean;
      }
      part.power_average = ps / rho_measure(nn.set);
      out.total_bad_measure += rho_measure(nn.set);
      out.bad_parts.push_back(std::move(part));
    }
    for (int i = sn.leaf_begin; i < sn.leaf_end; ++i)
      out.max_good = std::max(out.max_good, std::abs(g[static_cast<std::size_t>(i)]));
  }
  out.good = PartitionFunction(f.tree_ptr(), std::move(g));
  return out;
}

}  // namespace

double min_feasible_alpha(const PartitionFunction& f, double exponent) {
  const auto& tree = f.tree();
  double worst = 0.0;
  for (int r = 0; r < tree.root_count(); ++r) {
    const auto& n = tree.node(r);
    double s = 0.0;
    for (int i = n.leaf_begin; i < n.leaf_end; ++i)
      s += std::pow(std::abs(f.value(static_cast<std::size_t>(i))), exponent) * tree.leaf_measure(static_cast<std::size_t>(i));
    worst = std::max(worst, s / rho_measure(n.set));
  }
  return std::pow(worst, 1.0 / exponent);
}

CZDecomposition cz_decompose(const PartitionFunction& f, double alpha, double exponent) {
  std::vector<int> roots(static_cast<std::size_t>(f.tree().root_count()));
  for (int i = 0; i < f.tree().root_count(); ++i) roots[static_cast<std::size_t>(i)] = i;
  return decompose_from(f, roots, alpha, exponent);
}

CZDecomposition cz_decompose_within(const PartitionFunction& f, int node, double alpha, double exponent) {
  return decompose_from(f, {node}, alpha, exponent);
}

double alpha_threshold(int d, double p) {
  return std::max(1.0, std::pow(2.0, -d / p) * std::pow(2.0, 1.0 / (p - 1.0)));
}

double ratio_q(int d, double p, double alpha) {
  return 2.0 * std::pow(2.0, d * (1.0 - p) / p) * std::pow(alpha, 1.0 - p);
}

double optimal_alpha(int d, double p) {
  if (!(p > 1.0) || std::isinf(p)) throw InvalidArgument("optimal_alpha needs 1 < p < inf");
  const double c = 2.0 * std::pow(2.0, d * (1.0 - p) / p);
  const double a = std::pow(c * p, 1.0 / (p - 1.0));
  return std::max(a, alpha_threshold(d, p) * (1.0 + 1e-9));
}

double certified_cp(int d, double p, double alpha) {
  return std::pow(2.0, d * (1.0 + 1.0 / p)) * alpha / (1.0 - ratio_q(d, p, alpha));
}

bool StageCheck::ok(double rel_tol) const {
  const auto le = [&](double v, double bound) { return v <= bound * (1.0 + rel_tol) + 1e-300; };
  return max_mean_residual <= rel_tol && le(max_piece_average, piece_average_bound) && le(sum_lp, sum_lp_bound) &&
         max_pointwise_excess <= pointwise_bound * (1.0 + rel_tol) + rel_tol * pointwise_bound &&
         le(sum_rho, sum_rho_bound) && le(residual_l1, residual_bound) && max_atom_sup <= 1.0 + rel_tol;
}

bool AtomicExpansion::all_checks_pass() const {
  if (coefficient_sum > coefficient_bound * (1.0 + 1e-10)) return false;
  return std::all_of(checks.begin(), checks.end(), [](const StageCheck& c) { return c.ok(); });
}

PartitionFunction AtomicExpansion::reconstruct(std::shared_ptr<const PartitionTree> tree) const {
  std::vector<double> v(tree->leaf_count(), 0.0);
  auto add = [&](const LocalPiece& piece, double scale) {
    const int base = tree->node(piece.node).leaf_begin;
    for (std::size_t i = 0; i < piece.values.size(); ++i) v[static_cast<std::size_t>(base) + i] += scale * piece.values[i];
  };
  for (const auto& stage : terms)
    for (const auto& atom : stage.atoms) add(atom.atom, stage.coefficient * atom.weight);
  for (const auto& h : residuals) add(h, 1.0);
  return PartitionFunction(std::move(tree), std::move(v));
}

namespace {

StageCheck measure_stage(const PartitionTree& tree, int n, const std::vector<LocalPiece>& pieces,
                         const std::vector<double>& b, int b_base, double b_lp_p, double b_l1, double p, double alpha,
                         double q, double rho_R) {
  const int d = tree.dim();
  StageCheck c;
  c.n = n;
  c.pieces = static_cast<int>(pieces.size());
  const double M = std::pow(2.0, d * n / p) * std::pow(2.0, n) * std::pow(alpha, n);
  c.piece_average_bound = M;
  c.pointwise_bound = M;
  c.sum_lp_bound = std::pow(2.0, p * n) * b_lp_p;
  c.sum_rho_bound = n == 0 ? rho_R : std::pow(2.0, d * (1.0 - n)) * std::pow(alpha, -n * p) * b_lp_p;
  c.residual_bound = std::pow(2.0, d) * std::pow(q, n) * rho_R;
  for (const auto& h : pieces) {
    const auto& nn = tree.node(h.node);
    double integral = 0.0, lp = 0.0, l1 = 0.0;
    for (int i = nn.leaf_begin; i < nn.leaf_end; ++i) {
      const double v = h.values[static_cast<std::size_t>(i - nn.leaf_begin)];
      const double m = tree.leaf_measure(static_cast<std::size_t>(i));
      integral += v * m;
      l1 += std::abs(v) * m;
      lp += power_abs(v, p) * m;
      c.max_pointwise_excess =
          std::max(c.max_pointwise_excess, std::abs(v) - std::abs(b[static_cast<std::size_t>(i - b_base)]));
    }
    const double rho = rho_measure(nn.set);
    c.max_mean_residual = std::max(c.max_mean_residual, std::abs(integral) / b_l1);
    c.max_piece_average = std::max(c.max_piece_average, std::pow(lp / rho, 1.0 / p));
    c.sum_lp += lp;
    c.sum_rho += rho;
    c.residual_l1 += l1;
  }
  return c;
}

}  // namespace

AtomicExpansion reexpand_atom(const PartitionFunction& a, double p, const CZSet& R, double alpha, int n_max) {
  if (!(p > 1.0) || std::isinf(p)) throw InvalidArgument("reexpand_atom needs 1 < p < inf");
  if (n_max < 0) throw InvalidArgument("n_max must be nonnegative");
  const auto& tree = a.tree();
  const int d = tree.dim();
  if (!(alpha > alpha_threshold(d, p))) {
    throw AlphaTooSmall("alpha = " + std::to_string(alpha) + " must exceed " + std::to_string(alpha_threshold(d, p)));
  }
  const int root = tree.find_node(R);
  if (root < 0) throw RegionNotResolved("atom support set is not a node of the partition tree");
  const auto cert = validate_atom(a, p, R);
  if (!cert.valid()) {
    throw AtomInvalid("not a (1," + std::to_string(p) + ")-atom: size residual " +
                      std::to_string(cert.sup_norm_residual) + ", mean residual " + std::to_string(cert.mean_residual));
  }

  AtomicExpansion out;
  out.p = p;
  out.alpha = alpha;
  out.q = ratio_q(d, p, alpha);
  out.root_node = root;
  out.R = R;
  const double rho_R = rho_measure(R);
  out.coefficient_bound = certified_cp(d, p, alpha) * rho_R;

  const auto& rn = tree.node(root);
  std::vector<double> b = local_values(a, root);
  for (double& v : b) v *= rho_R;
  double b_lp_p = 0.0, b_l1 = 0.0;
  for (int i = rn.leaf_begin; i < rn.leaf_end; ++i) {
    const double v = b[static_cast<std::size_t>(i - rn.leaf_begin)];
    b_lp_p += power_abs(v, p) * tree.leaf_measure(static_cast<std::size_t>(i));
    b_l1 += std::abs(v) * tree.leaf_measure(static_cast<std::size_t>(i));
  }
  if (b_l1 == 0.0) return out;

  std::vector<LocalPiece> pieces{LocalPiece{root, b}};
  out.checks.push_back(measure_stage(tree, 0, pieces, b, rn.leaf_begin, b_lp_p, b_l1, p, alpha, out.q, rho_R));

  for (int n = 0; n < n_max && !pieces.empty(); ++n) {
    const double beta = std::pow(2.0, d * n / p) * std::pow(2.0, n) * std::pow(alpha, n + 1);
    ExpansionStage stage;
    stage.index = n;
    stage.coefficient = std::pow(2.0, d / p) * beta;
    std::vector<LocalPiece> next;
    double max_atom_sup = 0.0;
    for (const auto& h : pieces) {
      const auto& hn = tree.node(h.node);
      std::vector<double> g = h.values;
      for (int s : stopping_sets(tree, h.node, h.values, beta, p)) {
        const auto& sn = tree.node(s);
        const double mean = node_mean(tree, s, hn.leaf_begin, h.values);
        LocalPiece piece{s, {}};
        bool nonzero = false;
        for (int i = sn.leaf_begin; i < sn.leaf_end; ++i) {
          const auto k = static_cast<std::size_t>(i - hn.leaf_begin);
          // on a single leaf h - h_R vanishes identically
          const double v = sn.n_children == 0 ? 0.0 : h.values[k] - mean;
          piece.values.push_back(v);
          nonzero = nonzero || v != 0.0;
          g[k] = mean;
        }
        if (nonzero) next.push_back(std::move(piece));
      }
      const double rho = rho_measure(hn.set);
      ExpansionAtom atom{h.node, hn.set, rho, LocalPiece{h.node, std::move(g)}};
      if (atom.atom.sup() == 0.0) continue;
      for (double& v : atom.atom.values) v /= stage.coefficient * rho;
      max_atom_sup = std::max(max_atom_sup, atom.atom.sup() * rho);
      out.coefficient_sum += stage.coefficient * rho;
      stage.atoms.push_back(std::move(atom));
    }
    out.terms.push_back(std::move(stage));
    pieces = std::move(next);
    out.depth = n + 1;
    auto check = measure_stage(tree, n + 1, pieces, b, rn.leaf_begin, b_lp_p, b_l1, p, alpha, out.q, rho_R);
    check.max_atom_sup = max_atom_sup;
    out.checks.push_back(check);
  }
  out.residuals = std::move(pieces);
  out.residual_l1 = out.checks.back().residual_l1;
  return out;
}

H1Certificate h1_decompose(const PartitionFunction& f, double p) {
  if (!(p > 1.0) || std::isinf(p)) throw InvalidArgument("h1_decompose needs 1 < p < inf");
  H1Certificate out;
  const double l1 = lp_norm(f, 1.0);
  if (l1 == 0.0) return out;
  if (std::abs(integrate_rho(f)) > 1e-10 * l1)
    throw NonzeroMean("integral " + std::to_string(integrate_rho(f)) + " is not zero relative to ||f||_1 = " +
                      std::to_string(l1));
  const auto& tree = f.tree();
  const int R0 = support_node(f);
  if (R0 < 0) throw SupportViolation("support of f is not contained in a single root set");
  out.support_node = R0;
  const auto& rn = tree.node(R0);
  const int base = rn.leaf_begin;
  const std::vector<double> v = local_values(f, R0);
  double lp = 0.0, vmax = 0.0;
  for (int i = rn.leaf_begin; i < rn.leaf_end; ++i) {
    const double x = v[static_cast<std::size_t>(i - base)];
    lp += power_abs(x, p) * tree.leaf_measure(static_cast<std::size_t>(i));
    vmax = std::max(vmax, std::abs(x));
  }
  out.alpha0 = std::pow(lp / rho_measure(rn.set), 1.0 / p);

  // g at level alpha and its stopping sets
  auto level = [&](double alpha) {
    std::vector<double> g = v;
    auto stops = stopping_sets(tree, R0, v, alpha, p);
    for (int s : stops) {
      const auto& sn = tree.node(s);
      const double mean = node_mean(tree, s, base, v);
      for (int i = sn.leaf_begin; i < sn.leaf_end; ++i) g[static_cast<std::size_t>(i - base)] = mean;
    }
    return std::make_pair(std::move(g), std::move(stops));
  };
  auto emit = [&](int node, std::vector<double> values) {
    LocalPiece piece{node, std::move(values)};
    const double sup = piece.sup();
    if (sup == 0.0) return;
    const double coef = sup * rho_measure(tree.node(node).set);
    for (double& x : piece.values) x /= coef;
    out.bound += coef;
    out.terms.push_back(H1Term{node, coef, std::move(piece)});
  };

  double alpha = out.alpha0;
  auto [g, stops] = level(alpha);
  emit(R0, g);
  while (!stops.empty()) {
    alpha *= 2.0;
    ++out.levels;
    auto [g_next, stops_next] = level(alpha);
    for (int s : stops) {
      const auto& sn = tree.node(s);
      std::vector<double> diff;
      for (int i = sn.leaf_begin; i < sn.leaf_end; ++i) {
        const auto k = static_cast<std::size_t>(i - base);
        diff.push_back(g_next[k] - g[k]);
      }
      emit(s, std::move(diff));
    }
    g = std::move(g_next);
    stops = std::move(stops_next);
    if (alpha > 2.0 * vmax) break;
  }
  return out;
}

double h1_upper_bound(const PartitionFunction& f, double p) { return h1_decompose(f, p).bound; }

double h1_scheme_constant(int d, double p) {
  return std::pow(2.0, d / p) * (1.0 + 3.0 / (1.0 - std::pow(2.0, 1.0 - p)));
}

}  // namespace hardy
