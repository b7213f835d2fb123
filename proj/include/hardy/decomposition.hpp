#pragma once

#include <vector>

#include "hardy/functions.hpp"

namespace hardy {

/// Values of a function supported in one tree node, indexed over the node's leaf range.
struct LocalPiece {
  int node = -1;
  std::vector<double> values;

  double sup() const;
};

PartitionFunction expand(const LocalPiece& piece, std::shared_ptr<const PartitionTree> tree);

struct AtomCertificate {
  double p = 2.0;
  CZSet R;
  /// ||a||_p / rho(R)^{1/p - 1} - 1; positive means the size bound fails.
  double sup_norm_residual = 0.0;
  /// |int a| / ||a||_1, zero for a = 0.
  double mean_residual = 0.0;

  bool valid() const;
};

/// Checks the (1, p)-atom conditions for a on R; p may be infinity.
AtomCertificate validate_atom(const PartitionFunction& a, double p, const CZSet& R);

struct BadPart {
  int node = -1;
  CZSet set;
  /// f_R
  double mean = 0.0;
  /// average of |f|^exponent over R
  double power_average = 0.0;
  /// b_i = (f - f_R) on R
  LocalPiece b;
};

struct CZDecomposition {
  double alpha = 1.0;
  double exponent = 1.0;
  PartitionFunction good;
  std::vector<BadPart> bad_parts;
  double total_bad_measure = 0.0;
  double max_good = 0.0;
};

/// max over roots of (avg |f|^exponent)^{1/exponent}; cz_decompose needs alpha above it.
double min_feasible_alpha(const PartitionFunction& f, double exponent);

/// Stopping-time decomposition at level alpha, started at every root of the domain.
CZDecomposition cz_decompose(const PartitionFunction& f, double alpha, double exponent);

/// Same, started at a single tree node (f is only examined on that node).
CZDecomposition cz_decompose_within(const PartitionFunction& f, int node, double alpha, double exponent);

/// Maximal nodes below `start` whose average of |v|^exponent exceeds threshold^exponent.
/// `values` are indexed over the leaf range of `start`.
std::vector<int> stopping_sets(const PartitionTree& tree, int start, const std::vector<double>& values,
                               double threshold, double exponent);

struct ExpansionAtom {
  int node = -1;
  CZSet set;
  /// rho(R_j)
  double weight = 0.0;
  /// a (1, inf)-atom on set
  LocalPiece atom;
};

struct ExpansionStage {
  int index = 0;
  double coefficient = 0.0;
  std::vector<ExpansionAtom> atoms;
};

/// Measured quantities of the pieces h_{j_n} after n stages, next to their bounds.
struct StageCheck {
  int n = 0;
  int pieces = 0;
  double max_mean_residual = 0.0;      // max |int h| / ||b||_1
  double max_piece_average = 0.0;      // max (avg_R |h|^p)^{1/p}
  double piece_average_bound = 0.0;    // 2^{dn/p} 2^n alpha^n
  double sum_lp = 0.0;                 // sum ||h||_p^p
  double sum_lp_bound = 0.0;           // 2^{pn} ||b||_p^p
  double max_pointwise_excess = 0.0;   // max (|h| - |b|)
  double pointwise_bound = 0.0;        // 2^{dn/p} 2^n alpha^n
  double sum_rho = 0.0;                // sum rho(R_{j_n})
  double sum_rho_bound = 0.0;          // 2^{d(1-n)} alpha^{-np} ||b||_p^p, n >= 1
  double residual_l1 = 0.0;            // ||H_n||_1
  double residual_bound = 0.0;         // 2^d q^n rho(R)
  double max_atom_sup = 0.0;           // max ||a_j||_inf rho(R_j) over atoms emitted at stage n - 1

  bool ok(double rel_tol = 1e-10) const;
};

struct AtomicExpansion {
  double p = 2.0;
  double alpha = 2.0;
  double q = 0.0;
  int root_node = -1;
  CZSet R;
  int depth = 0;
  std::vector<ExpansionStage> terms;
  /// pieces h_{j_n} left after `depth` stages
  std::vector<LocalPiece> residuals;
  std::vector<StageCheck> checks;
  double coefficient_sum = 0.0;
  /// 2^{d(1+1/p)} alpha rho(R) / (1 - q)
  double coefficient_bound = 0.0;
  double residual_l1 = 0.0;

  bool all_checks_pass() const;
  /// b = rho(R) a rebuilt from terms and residuals.
  PartitionFunction reconstruct(std::shared_ptr<const PartitionTree> tree) const;
};

double alpha_threshold(int d, double p);
/// alpha minimizing 2^{d(1+1/p)} alpha / (1 - q(alpha)).
double optimal_alpha(int d, double p);
double ratio_q(int d, double p, double alpha);
/// Certified H^{1,inf} norm bound per unit atom: 2^{d(1+1/p)} alpha / (1 - q).
double certified_cp(int d, double p, double alpha);

/// Re-expands a (1, p)-atom on a tree node R into (1, inf)-atoms.
AtomicExpansion reexpand_atom(const PartitionFunction& a, double p, const CZSet& R, double alpha, int n_max = 12);

struct H1Term {
  int node = -1;
  double coefficient = 0.0;
  /// a (1, inf)-atom on the node
  LocalPiece atom;
};

struct H1Certificate {
  double bound = 0.0;
  int support_node = -1;
  double alpha0 = 0.0;
  int levels = 0;
  std::vector<H1Term> terms;
};

/// Explicit decomposition of a mean-zero f into (1, inf)-atoms; bound = sum of |coefficients|.
H1Certificate h1_decompose(const PartitionFunction& f, double p);
/// For every (1, p)-atom the bound is at most 2^{d/p} (1 + 3 / (1 - 2^{1-p})).
double h1_scheme_constant(int d, double p);
double h1_upper_bound(const PartitionFunction& f, double p);

}  // namespace hardy
