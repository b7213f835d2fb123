#include "hardy/singular.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hardy/decomposition.hpp"
#include "hardy/errors.hpp"
#include "hardy/parallel.hpp"

namespace hardy {

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw NonFiniteKernelValue("kernel returned a non-finite value");
  return v;
}

std::vector<GroupPoint> centroids(const PartitionTree& tree) {
  std::vector<GroupPoint> c;
  c.reserve(tree.leaf_count());
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) c.push_back(tree.leaf_set(i).center());
  return c;
}

/// Kernel as seen by the Hörmander quantities.
double hk(const KernelSpec& K, const GroupPoint& x, const GroupPoint& y) {
  return checked(K.adjoint ? K.evaluate(y, x) : K.evaluate(x, y));
}

std::vector<std::size_t> outside_dilated(const CZSet& R, const std::vector<GroupPoint>& c) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (!dilated_contains(R, c[i])) out.push_back(i);
  return out;
}

const char* kTruncation =
    "(R*)^c integrals run over the leaves of the computation domain Q0 x [e^-N, e^N] whose centroid lies "
    "outside R*; mass beyond the domain is not included";

}  // namespace

KernelSpec transpose(const KernelSpec& K) {
  KernelSpec t = K;
  t.name = K.name + "^T";
  t.evaluate = [f = K.evaluate](const GroupPoint& x, const GroupPoint& y) { return f(y, x); };
  return t;
}

KernelSpec zero_kernel() {
  return {"zero", [](const GroupPoint&, const GroupPoint&) { return 0.0; }};
}

KernelSpec constant_kernel(double c) {
  return {"constant", [c](const GroupPoint&, const GroupPoint&) { return c; }};
}

KernelSpec radial_bump_kernel(double amplitude, double support) {
  if (!(support > 0.0)) throw InvalidArgument("radial bump: support must be positive");
  return {"radial-bump", [amplitude, support](const GroupPoint& x, const GroupPoint& y) {
            const double s = metric_distance(x, y) / support;
            if (s >= 1.0) return 0.0;
            const double w = 1.0 - s * s;
            return amplitude * w * w * std::pow(y.a, -y.dim);
          }};
}

KernelSpec exp_decay_kernel(double amplitude, double decay) {
  if (!(decay > 0.0)) throw InvalidArgument("exp-decay: rate must be positive");
  return {"exp-decay", [amplitude, decay](const GroupPoint& x, const GroupPoint& y) {
            return amplitude * std::exp(-decay * metric_distance(x, y)) * std::pow(y.a, -y.dim);
          }};
}

KernelSpec jump_kernel(const KernelParams& p) {
  if (!(p.psi_width > 0.0)) throw InvalidArgument("jump: width must be positive");
  return {"jump", [p](const GroupPoint& x, const GroupPoint& y) {
            const double s = y.x[0] > p.jump_at ? 1.0 : (y.x[0] < p.jump_at ? -1.0 : 0.0);
            const double dx = (x.x[0] - p.psi_center) / p.psi_width;
            const double du = std::log(x.a);
            return s * p.amplitude * std::exp(-dx * dx - du * du);
          }};
}

const std::vector<std::string>& kernel_names() {
  static const std::vector<std::string> names{"zero", "constant", "radial-bump", "exp-decay", "jump"};
  return names;
}

KernelSpec make_kernel(const std::string& name, const KernelParams& p) {
  if (name == "zero") return zero_kernel();
  if (name == "constant") return constant_kernel(p.amplitude);
  if (name == "radial-bump") return radial_bump_kernel(p.amplitude, p.support);
  if (name == "exp-decay") return exp_decay_kernel(p.amplitude, p.decay);
  if (name == "jump") return jump_kernel(p);
  throw ConfigInvalid("unknown kernel: " + name);
}

std::shared_ptr<const PartitionTree> quadrature_tree(const ComputationDomain& domain, int levels) {
  return std::make_shared<const PartitionTree>(
      PartitionTree::build(domain, [](const CZSet&, std::span<const int>) { return true; }, levels));
}

PartitionFunction apply_kernel(const KernelSpec& K, const PartitionFunction& f) {
  const auto& tree = f.tree();
  const auto c = centroids(tree);
  const std::size_t n = c.size();
  std::vector<double> out(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (K.singular_diagonal && i == j) continue;
      const double fj = f.value(j);
      if (fj == 0.0) continue;
      s += checked(K.evaluate(c[i], c[j])) * fj * tree.leaf_measure(j);
    }
    out[i] = s;
  });
  return PartitionFunction(f.tree_ptr(), std::move(out));
}

OperatorNorm operator_norm_l2(const KernelSpec& K, const PartitionTree& tree, int iterations) {
  const auto c = centroids(tree);
  const std::size_t n = c.size();
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) sq[i] = std::sqrt(tree.leaf_measure(i));
  std::vector<double> M(n * n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (K.singular_diagonal && i == j) continue;
      M[i * n + j] = sq[i] * checked(K.evaluate(c[i], c[j])) * sq[j];
    }
  });
  OperatorNorm out;
  out.iterations = iterations;
  double row = 0.0;
  std::vector<double> col(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double r = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      r += std::abs(M[i * n + j]);
      col[j] += std::abs(M[i * n + j]);
    }
    row = std::max(row, r);
  }
  out.schur_bound = std::sqrt(row * *std::max_element(col.begin(), col.end()));
  if (out.schur_bound == 0.0) return out;

  // power iteration on M^T M from a fixed start
  std::vector<double> v(n), w(n), z(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.5 * std::sin(static_cast<double>(i) + 1.0);
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double t : x) s += t * t;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& t : x) t /= s;
    return s;
  };
  normalize(v);
  for (int it = 0; it < iterations; ++it) {
    parallel_for(n, [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += M[i * n + j] * v[j];
      w[i] = s;
    });
    out.power_estimate = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    parallel_for(n, [&](std::size_t j) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += M[i * n + j] * w[i];
      z[j] = s;
    });
    if (normalize(z) == 0.0) break;
    v.swap(z);
  }
  return out;
}

std::vector<GroupPoint> sample_points(const CZSet& R, int per_axis) {
  const int d = R.cube.dim;
  const int nd = d + 1;
  std::vector<GroupPoint> out;
  for (int mask = 0; mask < (1 << nd); ++mask) {
    Vec x{};
    for (int k = 0; k < d; ++k) x[static_cast<std::size_t>(k)] = (mask >> k) & 1 ? R.cube.hi(k) : R.cube.lo(k);
    out.emplace_back(d, x, std::exp((mask >> d) & 1 ? R.u_hi() : R.u_lo()));
  }
  int total = 1;
  for (int k = 0; k < nd; ++k) total *= per_axis;
  for (int idx = 0; idx < total; ++idx) {
    int rest = idx;
    Vec x{};
    double u = 0.0;
    for (int k = 0; k < nd; ++k) {
      const double t = (rest % per_axis + 0.5) / per_axis;
      rest /= per_axis;
      if (k < d)
        x[static_cast<std::size_t>(k)] = R.cube.lo(k) + t * (R.cube.hi(k) - R.cube.lo(k));
      else
        u = R.u_lo() + t * (R.u_hi() - R.u_lo());
    }
    out.emplace_back(d, x, std::exp(u));
  }
  return out;
}

HormanderReport hormander_sup(const KernelSpec& K, const PartitionTree& tree, const std::vector<CZSet>& family,
                              int per_axis) {
  const auto c = centroids(tree);
  std::vector<double> vals(family.size(), 0.0);
  parallel_for(family.size(), [&](std::size_t f) {
    const CZSet& R = family[f];
    const auto ys = sample_points(R, per_axis);
    const auto out = outside_dilated(R, c);
    // kernel rows per sample, then all pairs
    std::vector<std::vector<double>> rows(ys.size(), std::vector<double>(out.size()));
    for (std::size_t s = 0; s < ys.size(); ++s)
      for (std::size_t k = 0; k < out.size(); ++k) rows[s][k] = hk(K, c[out[k]], ys[s]);
    double best = 0.0;
    for (std::size_t s = 0; s < ys.size(); ++s)
      for (std::size_t t = s + 1; t < ys.size(); ++t) {
        double sum = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k) sum += std::abs(rows[s][k] - rows[t][k]) * tree.leaf_measure(out[k]);
        best = std::max(best, sum);
      }
    vals[f] = best;
  });
  HormanderReport rep;
  rep.truncation_note = kTruncation;
  for (std::size_t f = 0; f < family.size(); ++f) {
    rep.per_set.emplace_back(family[f], vals[f]);
    rep.overall_sup = std::max(rep.overall_sup, vals[f]);
  }
  return rep;
}

double hormander_center(const KernelSpec& K, const PartitionTree& tree, const CZSet& R, int per_axis) {
  const auto c = centroids(tree);
  auto ys = sample_points(R, per_axis);
  for (const auto& p : c)
    if (R.contains(p)) ys.push_back(p);
  const auto out = outside_dilated(R, c);
  const GroupPoint xr = R.center();
  std::vector<double> ref(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) ref[k] = hk(K, c[out[k]], xr);
  std::vector<double> vals(ys.size());
  parallel_for(ys.size(), [&](std::size_t s) {
    double sum = 0.0;
    for (std::size_t k = 0; k < out.size(); ++k)
      sum += std::abs(hk(K, c[out[k]], ys[s]) - ref[k]) * tree.leaf_measure(out[k]);
    vals[s] = sum;
  });
  return vals.empty() ? 0.0 : *std::max_element(vals.begin(), vals.end());
}

AtomImageReport atom_image_l1(const KernelSpec& K, const PartitionFunction& a, const CZSet& R, double op_norm_l2,
                              double hormander_bound, double kappa0) {
  try {
    if (!validate_atom(a, 2.0, R).valid()) throw AtomInvalid("atom_image_l1: not a (1,2)-atom on R");
  } catch (const SupportViolation& e) {
    throw AtomInvalid(std::string("atom_image_l1: ") + e.what());
  }
  const auto& tree = a.tree();
  const auto c = centroids(tree);
  const auto Ta = apply_kernel(K, a);
  const GroupPoint xr = R.center();
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < a.size(); ++j)
    if (a.value(j) != 0.0) support.push_back(j);

  AtomImageReport rep;
  rep.atom_l1 = lp_norm(a, 1.0);
  std::vector<double> ident(tree.leaf_count(), 0.0), magnitude(tree.leaf_count(), 0.0);
  std::vector<char> inside(tree.leaf_count(), 0);
  parallel_for(tree.leaf_count(), [&](std::size_t i) {
    inside[i] = dilated_contains(R, c[i]) ? 1 : 0;
    if (inside[i]) return;
    double s = 0.0, m = 0.0;
    const double k0 = checked(K.evaluate(c[i], xr));
    for (std::size_t j : support) {
      const double kij = checked(K.evaluate(c[i], c[j]));
      s += (kij - k0) * a.value(j) * tree.leaf_measure(j);
      m += std::abs(kij * a.value(j)) * tree.leaf_measure(j);
    }
    ident[i] = s;
    magnitude[i] = m;
  });
  for (std::size_t i = 0; i < tree.leaf_count(); ++i) {
    const double m = std::abs(Ta.value(i)) * tree.leaf_measure(i);
    if (inside[i]) {
      rep.on_dilated_l1 += m;
      rep.dilated_measure += tree.leaf_measure(i);
    } else {
      rep.off_dilated_l1 += m;
      rep.off_identity_l1 += std::abs(ident[i]) * tree.leaf_measure(i);
      rep.off_magnitude += magnitude[i] * tree.leaf_measure(i);
    }
  }
  rep.total_l1 = rep.on_dilated_l1 + rep.off_dilated_l1;
  const double scale = std::max({rep.off_dilated_l1, rep.off_identity_l1, rep.off_magnitude});
  rep.identity_rel_error = scale > 0.0 ? std::abs(rep.off_dilated_l1 - rep.off_identity_l1) / scale : 0.0;
  rep.on_bound = std::sqrt(kappa0) * op_norm_l2;
  rep.off_bound = hormander_bound * rep.atom_l1;
  return rep;
}

}  // namespace hardy
