#pragma once

#include <vector>

#include "hardy/functions.hpp"

namespace hardy {

/// theta with 1/p = 1 - theta + theta/p1; p1 may be infinity.
double theta_of(double p, double p1);

/// lambda^{1-p} |f|_p^{p(1-1/p1)} + t lambda^{1-p/p1}.
double g_objective(double t, double lambda, double p, double p1, double f_norm_p);

/// Stationary point of g_objective in lambda.
double lambda_star(double t, double p, double p1, double f_norm_p);

/// Constants for |g| <= C_a lambda, |g|_{p1}^{p1} <= C_b lambda^{p1-p} |f|_p^p and
/// H^1(b) <= C_c lambda^{1-p} |f|_p^p, from the decomposition's own certificates.
struct LambdaConstants {
  double a = 0.0;  // 2^{d/p}
  double b = 0.0;  // 2^{d p1/p} + 1
  double c = 0.0;  // 2^{1+d/p} certified_cp(d, p, optimal_alpha)
};

LambdaConstants lambda_constants(int d, double p, double p1);

struct LambdaDecomposition {
  double lambda = 0.0;
  double p = 2.0;
  double p1 = 0.0;
  PartitionFunction good;
  PartitionFunction bad;
  std::vector<CZSet> bad_sets;
  std::vector<int> bad_nodes;
  double total_bad_measure = 0.0;
  double bound_a = 0.0;  // max |g|
  double bound_b = 0.0;  // |g|_{p1}^{p1}; max |g| when p1 is infinite
  double bound_c = 0.0;  // certified H^1 bound of b
  double good_norm_p1 = 0.0;
  /// max over bad sets of |f_R| / lambda
  double max_mean_ratio = 0.0;
};

/// f = g + b from the stopping-time decomposition of |f|^p at level lambda^p.
LambdaDecomposition lambda_decompose(const PartitionFunction& f, double lambda, double p, double p1);

struct LambdaRecord {
  double lambda = 0.0;
  bool feasible = false;  // false when a root average of |f|^p exceeds lambda^p
  double bound_c = 0.0;
  double good_norm_p1 = 0.0;
};

struct KFunctionalReport {
  double p = 2.0;
  double p1 = 0.0;
  double theta = 0.0;
  double f_norm_p = 0.0;
  std::vector<double> t_grid;
  std::vector<double> k_upper;
  /// lambda of the minimizing decomposition; 0 for g = f, infinity for b = f
  std::vector<double> best_lambda;
  std::vector<LambdaRecord> lambdas;
  double f_norm_p1 = 0.0;
  double h1_of_f = -1.0;  // negative when f has no single-node H^1 certificate
  double c_fit = 0.0;     // max_t k_upper / (t^theta |f|_p)
  double mid_slope = 0.0; // LS slope of log k_upper on log t over the middle half of the grid
};

/// Upper bounds for K(t, f; H^1, L^{p1}) from lambda-decompositions on a shared log grid, with
/// lambda_grid_size points per window [lambda*(t)/100, 100 lambda*(t)].
KFunctionalReport k_functional_upper(const PartitionFunction& f, const std::vector<double>& t_grid, double p, double p1,
                                     int lambda_grid_size = 64);

/// True when values are nondecreasing and concave as a function of t (relative slack).
bool is_concave_nondecreasing(const std::vector<double>& t, const std::vector<double>& k, double slack = 1e-12);

}  // namespace hardy
