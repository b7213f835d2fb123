#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

namespace hardy {

inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;

/// A point (x, a) of S = R^d x| R^+.
struct GroupPoint {
  int dim = 1;
  Vec x{};
  double a = 1.0;

  GroupPoint() = default;
  GroupPoint(int d, const Vec& xs, double height);

  static GroupPoint identity(int d);
};

bool operator==(const GroupPoint& p, const GroupPoint& q);

GroupPoint group_mul(const GroupPoint& p, const GroupPoint& q);
GroupPoint group_inv(const GroupPoint& p);

/// Hyperbolic distance of the upper half-space model.
double metric_distance(const GroupPoint& p, const GroupPoint& q);

/// Half-open dyadic cube prod_i [k_i 2^j, (k_i + 1) 2^j).
struct DyadicCube {
  int dim = 1;
  int scale = 0;
  std::array<std::int64_t, kMaxDim> corner{};

  double side() const;
  double lo(int i) const;
  double hi(int i) const;
  double volume() const;
  bool contains(const Vec& x) const;
  bool contains(const DyadicCube& other) const;
  /// The 2^d children in mask order (bit i set means upper half along axis i).
  std::vector<DyadicCube> children() const;
};

bool operator==(const DyadicCube& a, const DyadicCube& b);

bool is_admissible(const DyadicCube& cube, double a, double r);

/// R = Q x [a e^{-r}, a e^{r}], stored through the u = ln a bounds so that halving the interval is exact.
struct CZSet {
  DyadicCube cube;
  double lo_u = -1.0;
  double hi_u = 1.0;

  CZSet() = default;
  CZSet(const DyadicCube& q, double log_center, double half_log_length);
  static CZSet from_bounds(const DyadicCube& q, double u_lo, double u_hi);

  int dim() const { return cube.dim; }
  double log_a() const { return 0.5 * (lo_u + hi_u); }
  double r() const { return 0.5 * (hi_u - lo_u); }
  double u_lo() const { return lo_u; }
  double u_hi() const { return hi_u; }
  double a_center() const;
  double a_lo() const;
  double a_hi() const;
  bool admissible() const;
  /// Closed box membership in (x, a).
  bool contains(const GroupPoint& p) const;
  /// Box inclusion in (x, u), up to a relative slack.
  bool contains(const CZSet& other) const;
  GroupPoint center() const;
};

bool operator==(const CZSet& a, const CZSet& b);

struct Ball {
  GroupPoint center;
  double radius = 1.0;
};

double rho_measure(const CZSet& R);
double lambda_measure(const CZSet& R);

/// (x, u)-volume of the intersection of two sets; equals the rho-measure of R ∩ S.
double overlap_measure(const CZSet& R, const CZSet& S);

/// Children of R: interval halving if admissible, else cube halving.
std::vector<CZSet> split(const CZSet& R);

/// The radius r_R of the dilated set R*.
double dilation_radius(const CZSet& R);

/// Smallest kappa0 for which R ⊆ B(x_R, kappa0 r_R) holds on every admissible set in dimension d.
double default_kappa0(int d);

/// x_R and r_R; throws ContainmentViolation when a sampled boundary point leaves B(x_R, kappa0 r_R).
Ball enclosing_ball(const CZSet& R, double kappa0);

/// Exact hyperbolic distance from p to the closed box R.
double distance_to_set(const GroupPoint& p, const CZSet& R);

/// p ∈ R*, i.e. d(p, R) < r_R.
bool dilated_contains(const CZSet& R, const GroupPoint& p);

/// Box in (x, u) coordinates containing R*.
struct UBox {
  int dim = 1;
  Vec lo{};
  Vec hi{};
  double u_lo = 0.0;
  double u_hi = 0.0;
  double volume() const;
};

UBox dilated_bounding_box(const CZSet& R);

/// Monte Carlo rho(R*).
double dilated_measure_mc(const CZSet& R, std::size_t n_samples, std::uint64_t seed);

/// Monte Carlo rho(B(e, radius)).
double ball_growth(int d, double radius, std::size_t n_samples, std::uint64_t seed);

/// Monte Carlo rho(R) from uniform samples in (x, a).
double rho_measure_mc(const CZSet& R, std::size_t n_samples, std::uint64_t seed);

/// Uniformly random admissible set with r drawn uniformly in [r_min, r_max].
CZSet random_admissible_set(int d, double r_min, double r_max, std::mt19937_64& rng);

}  // namespace hardy
