#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mhq/error.hpp"
#include "mhq/spd_matrix.hpp"

namespace mhq {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle into [-pi, pi). Values already in range are returned unchanged.
inline double wrap_angle(double x) {
  if (x >= -kPi && x < kPi) return x;
  double y = std::fmod(x + kPi, kTwoPi);
  if (y < 0.0) y += kTwoPi;
  y -= kPi;
  if (y >= kPi || y < -kPi) y = -kPi;
  return y;
}

// A Riemannian manifold in ambient coordinates. Tangent vectors are stored in the same
// coordinates as points; the base point is carried alongside by the caller.
template <class M>
concept RiemannianManifold =
    std::copy_constructible<M> &&
    requires(const M& m, const typename M::Point& p, const typename M::Tangent& v, std::span<double> out,
             std::span<const double> in) {
      { m.dist(p, p) } -> std::convertible_to<double>;
      { m.exp(p, v) } -> std::same_as<typename M::Point>;
      { m.log(p, p) } -> std::same_as<typename M::Tangent>;
      { m.inner(p, v, v) } -> std::convertible_to<double>;
      { m.zero_tangent(p) } -> std::same_as<typename M::Tangent>;
      { m.tangent_basis(p) } -> std::same_as<std::vector<typename M::Tangent>>;
      { m.transport(p, p, v) } -> std::same_as<typename M::Tangent>;
      { m.default_point() } -> std::same_as<typename M::Point>;
      { m.dimension() } -> std::convertible_to<std::size_t>;
      { m.component_count() } -> std::convertible_to<std::size_t>;
      { m.from_components(in) } -> std::same_as<typename M::Point>;
      { m.name() } -> std::convertible_to<std::string>;
      m.to_components(p, out);
      m.validate_point(p);
      m.validate_tangent(p, v);
    };

namespace detail {

inline void require_components(std::span<const double> c, std::size_t n) {
  if (c.size() != n) {
    throw ValidationError("expected " + std::to_string(n) + " components, got " + std::to_string(c.size()));
  }
}

template <class V>
bool all_equal(const V& a, const V& b) {
  if constexpr (std::is_arithmetic_v<V>) {
    return a == b;
  } else {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
  }
}

}  // namespace detail

/// Bitwise equality of two points (or tangents) of the same manifold.
template <class V>
bool same_point(const V& a, const V& b) {
  return detail::all_equal(a, b);
}

// ---------------------------------------------------------------------------

/// Flat R^n, the closed-form oracle case for the solver.
class Euclidean {
 public:
  using Point = Eigen::VectorXd;
  using Tangent = Eigen::VectorXd;
  static constexpr std::string_view tag = "euclidean";

  explicit Euclidean(int n = 1) : n_(n) {
    if (n < 1) throw ValidationError("Euclidean dimension must be positive");
  }

  int size() const { return n_; }
  std::string name() const { return "euclidean(" + std::to_string(n_) + ")"; }
  std::size_t dimension() const { return static_cast<std::size_t>(n_); }
  std::size_t component_count() const { return static_cast<std::size_t>(n_); }

  double dist(const Point& p, const Point& q) const { return (q - p).norm(); }
  Point exp(const Point& p, const Tangent& v) const { return p + v; }
  Tangent log(const Point& p, const Point& q) const { return q - p; }
  double inner(const Point&, const Tangent& v, const Tangent& w) const { return v.dot(w); }
  Tangent zero_tangent(const Point&) const { return Tangent::Zero(n_); }
  Tangent transport(const Point&, const Point&, const Tangent& v) const { return v; }
  Point default_point() const { return Point::Zero(n_); }

  std::vector<Tangent> tangent_basis(const Point&) const {
    std::vector<Tangent> basis;
    for (int k = 0; k < n_; ++k) basis.push_back(Tangent::Unit(n_, k));
    return basis;
  }

  void validate_point(const Point& p) const {
    if (p.size() != n_) throw ValidationError("euclidean point has wrong length");
    if (!p.allFinite()) throw ValidationError("euclidean point is not finite");
  }
  void validate_tangent(const Point& p, const Tangent& v) const {
    validate_point(p);
    if (v.size() != n_ || !v.allFinite()) throw ValidationError("euclidean tangent has wrong length or is not finite");
  }

  void to_components(const Point& p, std::span<double> out) const {
    for (int k = 0; k < n_; ++k) out[k] = p[k];
  }
  Point from_components(std::span<const double> c) const {
    detail::require_components(c, component_count());
    return Eigen::Map<const Eigen::VectorXd>(c.data(), n_);
  }

 private:
  int n_;
};

// ---------------------------------------------------------------------------

/// S^1 stored as an angle in [-pi, pi); distance is arc length.
class Circle {
 public:
  using Point = double;
  using Tangent = double;
  static constexpr std::string_view tag = "circle";

  std::string name() const { return "circle"; }
  std::size_t dimension() const { return 1; }
  std::size_t component_count() const { return 1; }

  double dist(Point p, Point q) const { return std::abs(wrap_angle(q - p)); }
  Point exp(Point p, Tangent v) const {
    if (v == 0.0) return p;
    return wrap_angle(p + v);
  }
  // The antipode maps to -pi; there is no error for the circle.
  Tangent log(Point p, Point q) const { return wrap_angle(q - p); }
  double inner(Point, Tangent v, Tangent w) const { return v * w; }
  Tangent zero_tangent(Point) const { return 0.0; }
  Tangent transport(Point, Point, Tangent v) const { return v; }
  Point default_point() const { return 0.0; }
  std::vector<Tangent> tangent_basis(Point) const { return {1.0}; }

  void validate_point(Point p) const {
    if (!std::isfinite(p) || p < -kPi || p >= kPi) {
      throw ValidationError("circle angle " + std::to_string(p) + " is outside [-pi, pi)");
    }
  }
  void validate_tangent(Point p, Tangent v) const {
    validate_point(p);
    if (!std::isfinite(v)) throw ValidationError("circle tangent is not finite");
  }

  void to_components(Point p, std::span<double> out) const { out[0] = p; }
  Point from_components(std::span<const double> c) const {
    detail::require_components(c, 1);
    return c[0];
  }
};

// ---------------------------------------------------------------------------

/// Unit sphere in R^3 with the metric induced by R^3.
class Sphere2 {
 public:
  using Point = Eigen::Vector3d;
  using Tangent = Eigen::Vector3d;
  static constexpr std::string_view tag = "sphere2";

  std::string name() const { return "sphere2"; }
  std::size_t dimension() const { return 2; }
  std::size_t component_count() const { return 3; }

  double dist(const Point& p, const Point& q) const { return std::atan2(p.cross(q).norm(), p.dot(q)); }

  Point exp(const Point& p, const Tangent& v) const {
    const double n = v.norm();
    if (n == 0.0) return p;
    const Point r = std::cos(n) * p + (std::sin(n) / n) * v;
    return r.normalized();
  }

  Tangent log(const Point& p, const Point& q) const {
    if (p == q) return Tangent::Zero();
    const double c = p.dot(q);
    if (c < -1.0 + 1e-9) throw CutLocusError("sphere2 log: points are antipodal");
    const Tangent w = q - c * p;
    const double n = w.norm();
    if (n == 0.0) return Tangent::Zero();
    return w * (std::atan2(n, c) / n);
  }

  double inner(const Point&, const Tangent& v, const Tangent& w) const { return v.dot(w); }
  Tangent zero_tangent(const Point&) const { return Tangent::Zero(); }
  Tangent transport(const Point&, const Point& to, const Tangent& v) const { return v - v.dot(to) * to; }
  Point default_point() const { return Point::UnitZ(); }

  std::vector<Tangent> tangent_basis(const Point& p) const {
    int k = 0;
    p.cwiseAbs().minCoeff(&k);
    const Tangent b1 = (Tangent::Unit(k) - p[k] * p).normalized();
    return {b1, p.cross(b1)};
  }

  void validate_point(const Point& p) const {
    if (!p.allFinite()) throw ValidationError("sphere2 point is not finite");
    if (std::abs(p.norm() - 1.0) > 1e-12) throw ValidationError("sphere2 point does not have unit norm");
  }
  void validate_tangent(const Point& p, const Tangent& v) const {
    validate_point(p);
    if (!v.allFinite()) throw ValidationError("sphere2 tangent is not finite");
    if (std::abs(v.dot(p)) > 1e-10 * std::max(1.0, v.norm())) {
      throw ValidationError("sphere2 tangent is not orthogonal to its base point");
    }
  }

  void to_components(const Point& p, std::span<double> out) const {
    for (int k = 0; k < 3; ++k) out[k] = p[k];
  }
  Point from_components(std::span<const double> c) const {
    detail::require_components(c, 3);
    return Point(c[0], c[1], c[2]);
  }
};

// ---------------------------------------------------------------------------

/// SO(3) as unit quaternions (s, v) modulo sign. Points use the representative with a
/// positive first component (first nonzero vector component when |s| < 1e-12).
///
/// exp/log are the S^3 maps with the sign correction, so ||log_p q||_2 equals
/// arccos|<p,q>| while the rotation distance is 2 arccos|<p,q>|. The metric is therefore
/// four times the ambient dot product, which keeps ||log_p q||_p = dist(p, q).
class Rotations3 {
 public:
  using Point = Eigen::Vector4d;
  using Tangent = Eigen::Vector4d;
  static constexpr std::string_view tag = "so3q";

  std::string name() const { return "so3q"; }
  std::size_t dimension() const { return 3; }
  std::size_t component_count() const { return 4; }

  static Point canonicalize(const Point& q) {
    Point r = q / q.norm();
    int lead = 0;
    if (std::abs(r[0]) < 1e-12) {
      lead = 1;
      while (lead < 3 && std::abs(r[lead]) <= 1e-12) ++lead;
    }
    if (r[lead] < 0.0) r = -r;
    return r;
  }

  static bool is_canonical(const Point& q) {
    if (std::abs(q[0]) >= 1e-12) return q[0] > 0.0;
    for (int k = 1; k < 4; ++k) {
      if (std::abs(q[k]) > 1e-12) return q[k] > 0.0;
    }
    return false;
  }

  double dist(const Point& p, const Point& q) const {
    if (p == q || p == -q) return 0.0;
    const double c = p.dot(q);
    return 2.0 * std::atan2((q - c * p).norm(), std::abs(c));
  }

  Point exp(const Point& q, const Tangent& v) const {
    const double n = v.norm();
    if (n == 0.0) return q;
    return canonicalize(std::cos(n) * q + (std::sin(n) / n) * v);
  }

  Tangent log(const Point& p, const Point& q) const {
    if (p == q) return Tangent::Zero();
    const double c = q.dot(p);
    if (std::abs(c) < 1e-9) throw CutLocusError("so3q log: rotations are a half turn apart");
    const Tangent w = q - c * p;
    const double n = w.norm();
    if (n == 0.0) return Tangent::Zero();
    const double sign = c > 0.0 ? 1.0 : -1.0;
    return w * (sign * std::atan2(n, std::abs(c)) / n);
  }

  double inner(const Point&, const Tangent& v, const Tangent& w) const { return 4.0 * v.dot(w); }
  Tangent zero_tangent(const Point&) const { return Tangent::Zero(); }

  Tangent transport(const Point& from, const Point& to, const Tangent& v) const {
    const double sign = from.dot(to) < 0.0 ? -1.0 : 1.0;
    return sign * (v - v.dot(to) * to);
  }

  Point default_point() const { return Point::UnitX(); }

  std::vector<Tangent> tangent_basis(const Point& q) const {
    // The axis most aligned with q is dropped; the remaining three span T_q.
    int skip = 0;
    q.cwiseAbs().maxCoeff(&skip);
    std::vector<Tangent> basis;
    for (int k = 0; k < 4; ++k) {
      if (k == skip) continue;
      Tangent b = Tangent::Unit(k) - q[k] * q;
      for (const auto& e : basis) b -= 4.0 * e.dot(b) * e;
      basis.push_back(0.5 * b.normalized());
    }
    return basis;
  }

  void validate_point(const Point& q) const {
    if (!q.allFinite()) throw ValidationError("so3q point is not finite");
    if (std::abs(q.norm() - 1.0) > 1e-12) throw ValidationError("so3q point does not have unit norm");
    if (!is_canonical(q)) throw ValidationError("so3q point is not the canonical (positive) representative");
  }
  void validate_tangent(const Point& q, const Tangent& v) const {
    validate_point(q);
    if (!v.allFinite()) throw ValidationError("so3q tangent is not finite");
    if (std::abs(v.dot(q)) > 1e-10 * std::max(1.0, v.norm())) {
      throw ValidationError("so3q tangent is not orthogonal to its base point");
    }
  }

  void to_components(const Point& p, std::span<double> out) const {
    for (int k = 0; k < 4; ++k) out[k] = p[k];
  }
  Point from_components(std::span<const double> c) const {
    detail::require_components(c, 4);
    return Point(c[0], c[1], c[2], c[3]);
  }
};

// ---------------------------------------------------------------------------

/// Symmetric positive definite r x r matrices with the affine-invariant metric
/// <a, b>_x = tr(a x^{-1} b x^{-1}).
class Spd {
 public:
  using Point = Eigen::MatrixXd;
  using Tangent = Eigen::MatrixXd;
  static constexpr std::string_view tag = "spd";

  explicit Spd(int r = 3) : r_(r) {
    if (r < 1) throw ValidationError("SPD matrix size must be positive");
  }

  int size() const { return r_; }
  std::string name() const { return "spd(" + std::to_string(r_) + ")"; }
  std::size_t dimension() const { return static_cast<std::size_t>(r_ * (r_ + 1) / 2); }
  std::size_t component_count() const { return static_cast<std::size_t>(r_ * r_); }

  double dist(const Point& p, const Point& q) const {
    if (p == q) return 0.0;
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(q, p, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw ValidationError("spd dist: generalized eigensolver failed");
    double sum = 0.0;
    for (int k = 0; k < r_; ++k) {
      const double l = std::log(solver.eigenvalues()[k]);
      sum += l * l;
    }
    return std::sqrt(sum);
  }

  Point exp(const Point& p, const Tangent& v) const {
    if ((v.array() == 0.0).all()) return p;
    const SpdRoots roots(p);
    const Eigen::MatrixXd w = symmetrize(roots.inv_sqrt * v * roots.inv_sqrt);
    const Eigen::MatrixXd e = SymmetricEigen(w).apply([](double l) { return std::exp(l); });
    return symmetrize(roots.sqrt * e * roots.sqrt);
  }

  Tangent log(const Point& p, const Point& q) const {
    if (p == q) return Tangent::Zero(r_, r_);
    const SpdRoots roots(p);
    const Eigen::MatrixXd m = symmetrize(roots.inv_sqrt * q * roots.inv_sqrt);
    const Eigen::MatrixXd l = SymmetricEigen(m).apply([](double x) { return std::log(x); });
    return symmetrize(roots.sqrt * l * roots.sqrt);
  }

  double inner(const Point& p, const Tangent& v, const Tangent& w) const {
    const Eigen::LLT<Eigen::MatrixXd> llt(p);
    const Eigen::MatrixXd a = llt.solve(v);
    const Eigen::MatrixXd b = llt.solve(w);
    return a.cwiseProduct(b.transpose()).sum();
  }

  Tangent zero_tangent(const Point&) const { return Tangent::Zero(r_, r_); }

  // Congruence by to^{1/2} from^{-1/2}: the identity in whitened coordinates.
  Tangent transport(const Point& from, const Point& to, const Tangent& v) const {
    const SpdRoots rf(from);
    const SpdRoots rt(to);
    const Eigen::MatrixXd a = rt.sqrt * rf.inv_sqrt;
    return symmetrize(a * v * a.transpose());
  }

  // transport(from, to) maps tangent_basis(from)[k] exactly onto tangent_basis(to)[k], so
  // the transport matrix in these bases is the identity.
  Eigen::MatrixXd transport_block(const Point&, const Point&) const {
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(dimension()), static_cast<Eigen::Index>(dimension()));
  }

  Point default_point() const { return Point::Identity(r_, r_); }

  std::vector<Tangent> tangent_basis(const Point& p) const {
    const SpdRoots roots(p);
    std::vector<Tangent> basis;
    for (int i = 0; i < r_; ++i) {
      for (int j = i; j < r_; ++j) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(r_, r_);
        if (i == j) {
          e(i, i) = 1.0;
        } else {
          e(i, j) = e(j, i) = 1.0 / std::sqrt(2.0);
        }
        basis.push_back(symmetrize(roots.sqrt * e * roots.sqrt));
      }
    }
    return basis;
  }

  void validate_point(const Point& p) const {
    if (p.rows() != r_ || p.cols() != r_) throw ValidationError("spd point has wrong size");
    if (!p.allFinite()) throw ValidationError("spd point is not finite");
    if (relative_asymmetry(p) > 1e-12) throw ValidationError("spd point is not symmetric");
    const SymmetricEigen eig(p);
    if (eig.values.minCoeff() <= 0.0) throw ValidationError("spd point is not positive definite");
  }
  void validate_tangent(const Point& p, const Tangent& v) const {
    validate_point(p);
    if (v.rows() != r_ || v.cols() != r_ || !v.allFinite()) throw ValidationError("spd tangent has wrong size");
    if (relative_asymmetry(v) > 1e-10) throw ValidationError("spd tangent is not symmetric");
  }

  void to_components(const Point& p, std::span<double> out) const {
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < r_; ++j) out[i * r_ + j] = p(i, j);
  }
  Point from_components(std::span<const double> c) const {
    detail::require_components(c, component_count());
    Point p(r_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < r_; ++j) p(i, j) = c[i * r_ + j];
    return p;
  }

 private:
  int r_;
};

static_assert(RiemannianManifold<Euclidean>);
static_assert(RiemannianManifold<Circle>);
static_assert(RiemannianManifold<Sphere2>);
static_assert(RiemannianManifold<Rotations3>);
static_assert(RiemannianManifold<Spd>);

/// Runtime choice of manifold, e.g. parsed from a file tag or a CLI flag.
using AnyManifold = std::variant<Euclidean, Circle, Sphere2, Rotations3, Spd>;

/// Parses "euclidean[:n]", "circle", "sphere2", "so3q", "spd[:r]".
inline AnyManifold parse_manifold(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  int arg = 0;
  if (colon != std::string_view::npos) {
    const std::string tail(text.substr(colon + 1));
    try {
      std::size_t used = 0;
      arg = std::stoi(tail, &used);
      if (used != tail.size()) throw ValidationError("");
    } catch (const std::exception&) {
      throw ValidationError("bad manifold dimension in '" + std::string(text) + "'");
    }
  }
  if (head == Euclidean::tag) return Euclidean(colon == std::string_view::npos ? 1 : arg);
  if (head == Spd::tag) return Spd(colon == std::string_view::npos ? 3 : arg);
  if (colon == std::string_view::npos) {
    if (head == Circle::tag) return Circle{};
    if (head == Sphere2::tag) return Sphere2{};
    if (head == Rotations3::tag) return Rotations3{};
  }
  throw ValidationError("unknown manifold '" + std::string(text) + "'");
}

template <RiemannianManifold M>
double norm(const M& m, const typename M::Point& p, const typename M::Tangent& v) {
  return std::sqrt(std::max(0.0, m.inner(p, v, v)));
}

}  // namespace mhq
