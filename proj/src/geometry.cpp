#include "hardy/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "hardy/errors.hpp"

namespace hardy {

namespace {

void check_dim(int d) {
  if (d < 1 || d > kMaxDim) throw InvalidArgument("dimension must be in [1, 3], got " + std::to_string(d));
}

void check_same_dim(const GroupPoint& p, const GroupPoint& q) {
  if (p.dim != q.dim) throw InvalidArgument("points of different dimension");
}

const double kE2 = std::exp(2.0);
const double kE8 = std::exp(8.0);

}  // namespace

GroupPoint::GroupPoint(int d, const Vec& xs, double height) : dim(d), x(xs), a(height) {
  check_dim(d);
  if (!(height > 0.0) || !std::isfinite(height)) throw InvalidArgument("group point needs a > 0");
  for (int i = d; i < kMaxDim; ++i) x[i] = 0.0;
}

GroupPoint GroupPoint::identity(int d) { return GroupPoint(d, Vec{}, 1.0); }

bool operator==(const GroupPoint& p, const GroupPoint& q) {
  return p.dim == q.dim && p.x == q.x && p.a == q.a;
}

GroupPoint group_mul(const GroupPoint& p, const GroupPoint& q) {
  check_same_dim(p, q);
  Vec x{};
  for (int i = 0; i < p.dim; ++i) x[i] = p.x[i] + p.a * q.x[i];
  return GroupPoint(p.dim, x, p.a * q.a);
}

GroupPoint group_inv(const GroupPoint& p) {
  Vec x{};
  for (int i = 0; i < p.dim; ++i) x[i] = -p.x[i] / p.a;
  return GroupPoint(p.dim, x, 1.0 / p.a);
}

double metric_distance(const GroupPoint& p, const GroupPoint& q) {
  check_same_dim(p, q);
  double s = 0.0;
  for (int i = 0; i < p.dim; ++i) s += (p.x[i] - q.x[i]) * (p.x[i] - q.x[i]);
  s += (p.a - q.a) * (p.a - q.a);
  // cosh d - 1 = s / (2 a a'), written through asinh to keep precision near the diagonal
  return 2.0 * std::asinh(std::sqrt(s) / (2.0 * std::sqrt(p.a * q.a)));
}

double DyadicCube::side() const { return std::ldexp(1.0, scale); }
double DyadicCube::lo(int i) const { return std::ldexp(static_cast<double>(corner[i]), scale); }
double DyadicCube::hi(int i) const { return std::ldexp(static_cast<double>(corner[i] + 1), scale); }
double DyadicCube::volume() const { return std::ldexp(1.0, scale * dim); }

bool DyadicCube::contains(const Vec& x) const {
  for (int i = 0; i < dim; ++i)
    if (x[i] < lo(i) || x[i] >= hi(i)) return false;
  return true;
}

bool DyadicCube::contains(const DyadicCube& other) const {
  if (other.dim != dim || other.scale > scale) return false;
  const int shift = scale - other.scale;
  for (int i = 0; i < dim; ++i) {
    // floor division by 2^shift
    if ((other.corner[i] >> shift) != corner[i]) return false;
  }
  return true;
}

std::vector<DyadicCube> DyadicCube::children() const {
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << dim);
  for (int mask = 0; mask < (1 << dim); ++mask) {
    DyadicCube c{dim, scale - 1, {}};
    for (int i = 0; i < dim; ++i) c.corner[i] = 2 * corner[i] + ((mask >> i) & 1);
    out.push_back(c);
  }
  return out;
}

bool operator==(const DyadicCube& a, const DyadicCube& b) {
  return a.dim == b.dim && a.scale == b.scale && a.corner == b.corner;
}

bool is_admissible(const DyadicCube& cube, double a, double r) {
  if (!(a > 0.0) || !(r > 0.0)) return false;
  const double L = cube.side();
  if (r < 1.0) return kE2 * a * r <= L && L < kE8 * a * r;
  return a * std::exp(2.0 * r) <= L && L < a * std::exp(8.0 * r);
}

CZSet::CZSet(const DyadicCube& q, double log_center, double half_log_length)
    : cube(q), lo_u(log_center - half_log_length), hi_u(log_center + half_log_length) {
  check_dim(q.dim);
  if (!(half_log_length > 0.0) || !std::isfinite(half_log_length) || !std::isfinite(log_center))
    throw InvalidArgument("CZ set needs finite log_a and r > 0");
}

CZSet CZSet::from_bounds(const DyadicCube& q, double u_lo, double u_hi) {
  check_dim(q.dim);
  if (!(u_hi > u_lo) || !std::isfinite(u_lo) || !std::isfinite(u_hi))
    throw InvalidArgument("CZ set needs finite u_lo < u_hi");
  CZSet R;
  R.cube = q;
  R.lo_u = u_lo;
  R.hi_u = u_hi;
  return R;
}

double CZSet::a_center() const { return std::exp(log_a()); }
double CZSet::a_lo() const { return std::exp(lo_u); }
double CZSet::a_hi() const { return std::exp(hi_u); }
bool CZSet::admissible() const { return is_admissible(cube, a_center(), r()); }

bool CZSet::contains(const GroupPoint& p) const {
  if (p.dim != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (p.x[i] < cube.lo(i) || p.x[i] > cube.hi(i)) return false;
  return p.a >= std::exp(u_lo()) && p.a <= std::exp(u_hi());
}

bool CZSet::contains(const CZSet& other) const {
  if (other.dim() != dim()) return false;
  for (int i = 0; i < dim(); ++i)
    if (other.cube.lo(i) < cube.lo(i) || other.cube.hi(i) > cube.hi(i)) return false;
  const double slack = 1e-12 * (1.0 + std::abs(log_a()) + r());
  return other.u_lo() >= u_lo() - slack && other.u_hi() <= u_hi() + slack;
}

GroupPoint CZSet::center() const {
  Vec x{};
  for (int i = 0; i < dim(); ++i) x[i] = 0.5 * (cube.lo(i) + cube.hi(i));
  return GroupPoint(dim(), x, a_center());
}

bool operator==(const CZSet& a, const CZSet& b) {
  return a.cube == b.cube && a.lo_u == b.lo_u && a.hi_u == b.hi_u;
}

double rho_measure(const CZSet& R) { return R.cube.volume() * (R.hi_u - R.lo_u); }

double lambda_measure(const CZSet& R) {
  const double d = R.dim();
  // a_lo^{-d} - a_hi^{-d} = e^{-d log_a} 2 sinh(d r)
  return R.cube.volume() * std::exp(-d * R.log_a()) * 2.0 * std::sinh(d * R.r()) / d;
}

double overlap_measure(const CZSet& R, const CZSet& S) {
  if (R.dim() != S.dim()) throw InvalidArgument("sets of different dimension");
  double m = 1.0;
  for (int i = 0; i < R.dim(); ++i) {
    const double w = std::min(R.cube.hi(i), S.cube.hi(i)) - std::max(R.cube.lo(i), S.cube.lo(i));
    if (w <= 0.0) return 0.0;
    m *= w;
  }
  const double h = std::min(R.u_hi(), S.u_hi()) - std::max(R.u_lo(), S.u_lo());
  if (h <= 0.0) return 0.0;
  return m * h;
}

std::vector<CZSet> split(const CZSet& R) {
  const double mid = R.log_a();
  const CZSet lower = CZSet::from_bounds(R.cube, R.lo_u, mid);
  const CZSet upper = CZSet::from_bounds(R.cube, mid, R.hi_u);
  if (lower.admissible() && upper.admissible()) return {lower, upper};

  std::vector<CZSet> out;
  for (const auto& c : R.cube.children()) {
    const CZSet child = CZSet::from_bounds(c, R.lo_u, R.hi_u);
    if (!child.admissible()) {
      throw NoAdmissibleSplit("no admissible split for set with scale " + std::to_string(R.cube.scale) +
                              ", log_a " + std::to_string(R.log_a()) + ", r " + std::to_string(R.r()));
    }
    out.push_back(child);
  }
  return out;
}

double dilation_radius(const CZSet& R) { return R.r(); }

double default_kappa0(int d) {
  check_dim(d);
  return std::ceil(std::sqrt(d * std::exp(16.0) / 4.0 + 1.0)) + 1.0;
}

Ball enclosing_ball(const CZSet& R, double kappa0) {
  if (!(kappa0 > 0.0)) throw InvalidArgument("kappa0 must be positive");
  Ball ball{R.center(), dilation_radius(R)};
  const double limit = kappa0 * ball.radius * (1.0 + 1e-12);
  const int d = R.dim();
  // corners and edge midpoints: each coordinate at lo, mid or hi
  int total = 1;
  for (int i = 0; i <= d; ++i) total *= 3;
  for (int code = 0; code < total; ++code) {
    int c = code;
    Vec x{};
    for (int i = 0; i < d; ++i, c /= 3) {
      const int k = c % 3;
      x[i] = k == 0 ? R.cube.lo(i) : k == 1 ? 0.5 * (R.cube.lo(i) + R.cube.hi(i)) : R.cube.hi(i);
    }
    const int k = c % 3;
    const double a = k == 0 ? R.a_lo() : k == 1 ? R.a_center() : R.a_hi();
    const GroupPoint p(d, x, a);
    const double dist = metric_distance(ball.center, p);
    if (dist > limit) {
      throw ContainmentViolation("point at distance " + std::to_string(dist) + " exceeds kappa0 r_R = " +
                                 std::to_string(kappa0 * ball.radius));
    }
  }
  return ball;
}

double distance_to_set(const GroupPoint& p, const CZSet& R) {
  if (p.dim != R.dim()) throw InvalidArgument("point and set of different dimension");
  double D2 = 0.0;
  Vec x{};
  for (int i = 0; i < p.dim; ++i) {
    x[i] = std::clamp(p.x[i], R.cube.lo(i), R.cube.hi(i));
    D2 += (p.x[i] - x[i]) * (p.x[i] - x[i]);
  }
  const double a0 = std::clamp(std::sqrt(D2 + p.a * p.a), R.a_lo(), R.a_hi());
  return metric_distance(p, GroupPoint(p.dim, x, a0));
}

bool dilated_contains(const CZSet& R, const GroupPoint& p) {
  return distance_to_set(p, R) < dilation_radius(R);
}

double UBox::volume() const {
  double v = u_hi - u_lo;
  for (int i = 0; i < dim; ++i) v *= hi[i] - lo[i];
  return v;
}

UBox dilated_bounding_box(const CZSet& R) {
  const double rr = dilation_radius(R);
  // a point within distance rr of height a' moves horizontally by at most a' sinh(rr)
  const double reach = R.a_hi() * std::sinh(rr);
  UBox box;
  box.dim = R.dim();
  for (int i = 0; i < R.dim(); ++i) {
    box.lo[i] = R.cube.lo(i) - reach;
    box.hi[i] = R.cube.hi(i) + reach;
  }
  box.u_lo = R.u_lo() - rr;
  box.u_hi = R.u_hi() + rr;
  return box;
}

double dilated_measure_mc(const CZSet& R, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw InvalidArgument("n_samples must be positive");
  const UBox box = dilated_bounding_box(R);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Vec x{};
    for (int i = 0; i < box.dim; ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * unit(rng);
    const double u = box.u_lo + (box.u_hi - box.u_lo) * unit(rng);
    if (dilated_contains(R, GroupPoint(box.dim, x, std::exp(u)))) ++hits;
  }
  return box.volume() * static_cast<double>(hits) / static_cast<double>(n_samples);
}

double ball_growth(int d, double radius, std::size_t n_samples, std::uint64_t seed) {
  check_dim(d);
  if (n_samples == 0) throw InvalidArgument("n_samples must be positive");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be positive");
  // B(e, r) sits inside [-sinh r, sinh r]^d x [-r, r] in (x, u)
  const double w = std::sinh(radius);
  const double volume = std::pow(2.0 * w, d) * 2.0 * radius;
  const GroupPoint e = GroupPoint::identity(d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::size_t hits = 0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    Vec x{};
    for (int i = 0; i < d; ++i) x[i] = w * unit(rng);
    const double u = radius * unit(rng);
    if (metric_distance(e, GroupPoint(d, x, std::exp(u))) <= radius) ++hits;
  }
  return volume * static_cast<double>(hits) / static_cast<double>(n_samples);
}

double rho_measure_mc(const CZSet& R, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw InvalidArgument("n_samples must be positive");
  // stratified in a, one jittered sample per stratum; the x-integral is the cube volume
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double lo = R.a_lo();
  const double h = (R.a_hi() - lo) / static_cast<double>(n_samples);
  double sum = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) sum += 1.0 / (lo + h * (static_cast<double>(k) + unit(rng)));
  return R.cube.volume() * h * sum;
}

CZSet random_admissible_set(int d, double r_min, double r_max, std::mt19937_64& rng) {
  check_dim(d);
  if (!(r_min > 0.0) || r_max < r_min) throw InvalidArgument("need 0 < r_min <= r_max");
  std::uniform_real_distribution<double> ur(r_min, r_max);
  std::uniform_real_distribution<double> ulog(-3.0, 3.0);
  std::uniform_int_distribution<std::int64_t> ucorner(-8, 7);
  const double r = ur(rng);
  const double log_a = ulog(rng);
  const double a = std::exp(log_a);
  const double lower = r < 1.0 ? kE2 * a * r : a * std::exp(2.0 * r);
  const double upper = r < 1.0 ? kE8 * a * r : a * std::exp(8.0 * r);
  int j_min = static_cast<int>(std::ceil(std::log2(lower)));
  int j_max = static_cast<int>(std::ceil(std::log2(upper))) - 1;
  while (std::ldexp(1.0, j_min) < lower) ++j_min;
  while (std::ldexp(1.0, j_max) >= upper) --j_max;
  std::uniform_int_distribution<int> uj(j_min, j_max);
  DyadicCube cube{d, uj(rng), {}};
  for (int i = 0; i < d; ++i) cube.corner[i] = ucorner(rng);
  CZSet R(cube, log_a, r);
  if (!R.admissible()) throw InvalidArgument("internal: generated set is not admissible");
  return R;
}

}  // namespace hardy
