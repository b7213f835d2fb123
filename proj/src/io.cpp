#include "hardy/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>

#include "hardy/errors.hpp"

namespace hardy {

Json number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

double number_from(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw InvalidArgument("expected a number");
}

Json to_json(const GroupPoint& p) {
  Json x = Json::array();
  for (int i = 0; i < p.dim; ++i) x.push_back(p.x[static_cast<std::size_t>(i)]);
  return Json{{"x", x}, {"a", p.a}};
}

Json to_json(const CZSet& R) {
  Json corner = Json::array();
  for (int i = 0; i < R.dim(); ++i) corner.push_back(R.cube.corner[static_cast<std::size_t>(i)]);
  return Json{{"dim", R.dim()},   {"scale", R.cube.scale}, {"corner", corner},
              {"u_lo", R.u_lo()}, {"u_hi", R.u_hi()},      {"rho", rho_measure(R)}};
}

CZSet czset_from_json(const Json& j) {
  DyadicCube q;
  q.dim = j.at("dim").get<int>();
  q.scale = j.at("scale").get<int>();
  const auto& c = j.at("corner");
  if (q.dim < 1 || q.dim > kMaxDim || c.size() != static_cast<std::size_t>(q.dim))
    throw InvalidArgument("set: bad dimension");
  for (int i = 0; i < q.dim; ++i) q.corner[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)].get<std::int64_t>();
  return CZSet::from_bounds(q, j.at("u_lo").get<double>(), j.at("u_hi").get<double>());
}

Json to_json(const ComputationDomain& D) {
  Json corner = Json::array();
  for (int i = 0; i < D.dim(); ++i) corner.push_back(D.q0().corner[static_cast<std::size_t>(i)]);
  return Json{{"dim", D.dim()}, {"q0_scale", D.q0().scale}, {"q0_corner", corner}, {"n_layers", D.n_layers()}};
}

ComputationDomain domain_from_json(const Json& j) {
  const int d = j.at("dim").get<int>();
  std::array<std::int64_t, kMaxDim> corner{};
  if (j.contains("q0_corner")) {
    const auto& c = j.at("q0_corner");
    if (c.size() != static_cast<std::size_t>(d)) throw ConfigInvalid("domain: q0_corner must have dim entries");
    for (int i = 0; i < d; ++i) corner[static_cast<std::size_t>(i)] = c[static_cast<std::size_t>(i)].get<std::int64_t>();
  }
  return ComputationDomain(d, j.at("q0_scale").get<int>(), j.at("n_layers").get<int>(), corner);
}

Json to_json(const OscillationReport& r, bool with_sets) {
  Json per = Json::array();
  for (const auto& [R, o] : r.per_set) {
    if (with_sets)
      per.push_back(Json{{"set", to_json(R)}, {"oscillation", o}});
    else
      per.push_back(o);
  }
  return Json{{"q", r.q}, {"bmo_norm_lower", r.bmo_norm_lower}, {"family_size", r.family_size}, {"per_set", per}};
}

Json to_json(const JNFit& fit) {
  Json j{{"t_grid", fit.t_grid},
         {"tails", fit.tails},
         {"measure", fit.measure},
         {"norm", fit.norm},
         {"fitted_eta", number(fit.fitted_eta)},
         {"fitted_A", number(fit.fitted_A)},
         {"envelope_A", number(fit.envelope_A)},
         {"fit_points", fit.fit_points}};
  j["exp_integral_fitted"] = fit.exp_integral_fitted ? number(*fit.exp_integral_fitted) : Json(nullptr);
  j["exp_integral_floor"] = fit.exp_integral_floor ? number(*fit.exp_integral_floor) : Json(nullptr);
  return j;
}

Json to_json(const HormanderReport& r) {
  Json per = Json::array();
  for (const auto& [R, v] : r.per_set) per.push_back(Json{{"set", to_json(R)}, {"value", v}});
  return Json{{"overall_sup", r.overall_sup}, {"truncation_note", r.truncation_note}, {"per_set", per}};
}

Json to_json(const AtomImageReport& r) {
  return Json{{"total_l1", r.total_l1},
              {"on_dilated_l1", r.on_dilated_l1},
              {"off_dilated_l1", r.off_dilated_l1},
              {"off_identity_l1", r.off_identity_l1},
              {"off_magnitude", r.off_magnitude},
              {"identity_rel_error", r.identity_rel_error},
              {"atom_l1", r.atom_l1},
              {"dilated_measure", r.dilated_measure},
              {"on_bound", r.on_bound},
              {"off_bound", r.off_bound},
              {"bound", r.bound()}};
}

Json to_json(const StageCheck& c) {
  return Json{{"n", c.n},
              {"pieces", c.pieces},
              {"max_mean_residual", c.max_mean_residual},
              {"max_piece_average", c.max_piece_average},
              {"piece_average_bound", c.piece_average_bound},
              {"sum_lp", c.sum_lp},
              {"sum_lp_bound", c.sum_lp_bound},
              {"max_pointwise_excess", c.max_pointwise_excess},
              {"pointwise_bound", c.pointwise_bound},
              {"sum_rho", c.sum_rho},
              {"sum_rho_bound", c.sum_rho_bound},
              {"residual_l1", c.residual_l1},
              {"residual_bound", c.residual_bound},
              {"max_atom_sup", c.max_atom_sup},
              {"ok", c.ok()}};
}

Json to_json(const AtomicExpansion& ex) {
  Json checks = Json::array();
  for (const auto& c : ex.checks) checks.push_back(to_json(c));
  Json stages = Json::array();
  for (const auto& s : ex.terms) stages.push_back(Json{{"index", s.index}, {"coefficient", s.coefficient}, {"atoms", s.atoms.size()}});
  return Json{{"p", ex.p},
              {"alpha", ex.alpha},
              {"q", ex.q},
              {"R", to_json(ex.R)},
              {"depth", ex.depth},
              {"stages", stages},
              {"residual_pieces", ex.residuals.size()},
              {"residual_l1", ex.residual_l1},
              {"coefficient_sum", ex.coefficient_sum},
              {"coefficient_bound", ex.coefficient_bound},
              {"checks", checks}};
}

Json to_json(const LambdaDecomposition& dec) {
  return Json{{"lambda", dec.lambda},
              {"p", dec.p},
              {"p1", number(dec.p1)},
              {"bad_sets", dec.bad_sets.size()},
              {"total_bad_measure", dec.total_bad_measure},
              {"bound_a", dec.bound_a},
              {"bound_b", dec.bound_b},
              {"bound_c", dec.bound_c},
              {"good_norm_p1", dec.good_norm_p1},
              {"max_mean_ratio", dec.max_mean_ratio}};
}

Json to_json(const KFunctionalReport& r) {
  Json best = Json::array();
  for (double b : r.best_lambda) best.push_back(number(b));
  std::size_t feasible = 0;
  for (const auto& l : r.lambdas) feasible += l.feasible ? 1 : 0;
  return Json{{"p", r.p},
              {"p1", number(r.p1)},
              {"theta", r.theta},
              {"f_norm_p", r.f_norm_p},
              {"f_norm_p1", r.f_norm_p1},
              {"h1_of_f", r.h1_of_f},
              {"t_grid", r.t_grid},
              {"k_upper", r.k_upper},
              {"best_lambda", best},
              {"lambda_grid_size", r.lambdas.size()},
              {"lambda_feasible", feasible},
              {"c_fit", r.c_fit},
              {"mid_slope", r.mid_slope}};
}

namespace {

Json splits_of(const PartitionTree& tree, int id) {
  Json out = Json::array();
  const auto& n = tree.node(id);
  for (int c = 0; c < n.n_children; ++c) out.push_back(splits_of(tree, n.first_child + c));
  return out;
}

int depth_of(const Json& j) {
  int d = 0;
  for (const auto& c : j) d = std::max(d, 1 + depth_of(c));
  return d;
}

}  // namespace

Json to_json(const PartitionFunction& f) {
  const auto& tree = f.tree();
  Json roots = Json::array();
  for (int r = 0; r < tree.root_count(); ++r) roots.push_back(splits_of(tree, r));
  return Json{{"schema", kFunctionSchema}, {"domain", to_json(tree.domain())}, {"splits", roots}, {"values", f.values()}};
}

PartitionFunction partition_function_from_json(const Json& j) {
  if (j.value("schema", std::string()) != kFunctionSchema) throw InvalidArgument("function: unknown schema");
  const auto domain = domain_from_json(j.at("domain"));
  const auto& roots = j.at("splits");
  if (roots.size() != domain.roots().size()) throw InvalidArgument("function: root count mismatch");
  int depth = 0;
  for (const auto& r : roots) depth = std::max(depth, depth_of(r));
  auto tree = std::make_shared<const PartitionTree>(PartitionTree::build(
      domain,
      [&](const CZSet&, std::span<const int> path) {
        const Json* node = &roots.at(static_cast<std::size_t>(path[0]));
        for (std::size_t k = 1; k < path.size(); ++k) node = &node->at(static_cast<std::size_t>(path[k]));
        return !node->empty();
      },
      depth));
  auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != tree->leaf_count()) throw InvalidArgument("function: value count does not match the tree");
  return PartitionFunction(std::move(tree), std::move(values));
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<double>& row) {
  if (row.size() != columns_.size()) throw InvalidArgument("csv: row width differs from header");
  rows_.push_back(row);
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 6; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

std::string CsvTable::str() const {
  std::string out = std::string("# schema: ") + kCsvSchema + "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i];
  out += "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + format_double(row[i]);
    out += "\n";
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InvalidArgument("cannot write " + path.string());
  os << content;
}

}  // namespace hardy
