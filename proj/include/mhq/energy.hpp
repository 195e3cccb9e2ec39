#pragma once

#include <Eigen/Sparse>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mhq/grid.hpp"
#include "mhq/image.hpp"
#include "mhq/manifolds.hpp"
#include "mhq/penalties.hpp"

namespace mhq {

/// Anisotropic: one weight per forward edge. Isotropic: one weight per pixel.
enum class Mode { Anisotropic, Isotropic };

inline std::string_view to_string(Mode m) { return m == Mode::Anisotropic ? "aniso" : "iso"; }
inline Mode parse_mode(std::string_view s) {
  if (s == "aniso") return Mode::Anisotropic;
  if (s == "iso") return Mode::Isotropic;
  throw ValidationError("unknown mode '" + std::string(s) + "' (expected aniso or iso)");
}

struct WeightField {
  Mode mode = Mode::Anisotropic;
  std::vector<double> values;
};

/// One tangent vector per pixel, each based at the pixel of `base`.
template <RiemannianManifold M>
struct GradientField {
  std::vector<typename M::Point> base;
  std::vector<typename M::Tangent> vectors;
};

template <RiemannianManifold M>
double field_inner(const M& m, const GradientField<M>& a, const GradientField<M>& b) {
  if (a.base.size() != b.base.size() || a.vectors.size() != b.vectors.size()) {
    throw ValidationError("field_inner: fields have different sizes");
  }
  long double sum = 0.0L;
  for (std::size_t i = 0; i < a.vectors.size(); ++i) {
    if (!same_point(a.base[i], b.base[i])) {
      throw ValidationError("field_inner: tangent vectors at pixel " + std::to_string(i) + " have different bases");
    }
    sum += m.inner(a.base[i], a.vectors[i], b.vectors[i]);
  }
  return static_cast<double>(sum);
}

template <RiemannianManifold M>
double field_norm(const M& m, const GradientField<M>& a) {
  return std::sqrt(std::max(0.0, field_inner(m, a, a)));
}

namespace detail {

template <RiemannianManifold M>
using Points = std::span<const typename M::Point>;

template <RiemannianManifold M>
std::vector<double> edge_distances(const M& m, const GridGraph& g, Points<M> u) {
  std::vector<double> d(g.edges().size());
  for (std::size_t e = 0; e < d.size(); ++e) d[e] = m.dist(u[g.edges()[e].from], u[g.edges()[e].to]);
  return d;
}

/// sqrt(sum_{j in N+(i)} d^2(u_i, u_j)) per pixel.
inline std::vector<double> pixel_radii(const GridGraph& g, const std::vector<double>& edge_dist) {
  std::vector<double> r2(g.shape().size(), 0.0);
  for (std::size_t e = 0; e < edge_dist.size(); ++e) r2[g.edges()[e].from] += edge_dist[e] * edge_dist[e];
  for (auto& x : r2) x = std::sqrt(x);
  return r2;
}

/// Both modes reduce to a weight per forward edge: isotropic edges carry their source
/// pixel's weight.
inline std::vector<double> edge_weights(const GridGraph& g, const WeightField& v) {
  if (v.mode == Mode::Anisotropic) return v.values;
  std::vector<double> w(g.edges().size());
  for (std::size_t e = 0; e < w.size(); ++e) w[e] = v.values[g.edges()[e].from];
  return w;
}

inline void check_weights(const GridGraph& g, const WeightField& v) {
  const std::size_t expected = v.mode == Mode::Anisotropic ? g.edges().size() : g.shape().size();
  if (v.values.size() != expected) {
    throw ValidationError("weight field has " + std::to_string(v.values.size()) + " entries, expected " +
                          std::to_string(expected));
  }
  for (double x : v.values) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ValidationError("weights must be positive and finite");
  }
}

template <RiemannianManifold M>
long double data_term(const M& m, Points<M> u, Points<M> f, const Mask& known) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!known.known(i)) continue;
    const double d = m.dist(u[i], f[i]);
    sum += 0.5L * d * d;
  }
  return sum;
}

/// 1/2 sum_V d^2(u_i, f_i) + lambda sum_e w_e d_e^2: the part of the augmented energy
/// that depends on u.
template <RiemannianManifold M>
double augmented_quadratic(const M& m, const GridGraph& g, Points<M> u, Points<M> f, const Mask& known,
                           const std::vector<double>& edge_w, double lambda) {
  long double smooth = 0.0L;
  for (std::size_t e = 0; e < edge_w.size(); ++e) {
    const double d = m.dist(u[g.edges()[e].from], u[g.edges()[e].to]);
    smooth += static_cast<long double>(edge_w[e]) * d * d;
  }
  return static_cast<double>(data_term(m, u, f, known) + lambda * smooth);
}

template <RiemannianManifold M>
typename M::Tangent checked_log(const M& m, const GridShape& shape, Points<M> u, std::size_t i,
                                const typename M::Point& target, const char* what, std::size_t j) {
  try {
    return m.log(u[i], target);
  } catch (const CutLocusError& e) {
    throw CutLocusError(std::string(e.what()) + " (" + what + " at pixel (" + std::to_string(shape.row_of(i)) + "," +
                        std::to_string(shape.col_of(i)) + ") and pixel (" + std::to_string(shape.row_of(j)) + "," +
                        std::to_string(shape.col_of(j)) + "))");
  }
}

/// -1_V log_{u_i} f_i - 2 lambda sum_{e ~ i} w_e log_{u_i} u_j.
template <RiemannianManifold M>
std::vector<typename M::Tangent> gradient(const M& m, const GridGraph& g, Points<M> u, Points<M> f,
                                          const Mask& known, const std::vector<double>& edge_w, double lambda) {
  std::vector<typename M::Tangent> grad;
  grad.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    typename M::Tangent gi = m.zero_tangent(u[i]);
    if (known.known(i)) gi -= checked_log(m, g.shape(), u, i, f[i], "data term", i);
    for (const auto& inc : g.incident(i)) {
      gi -= (2.0 * lambda * edge_w[inc.edge]) * checked_log(m, g.shape(), u, i, u[inc.other], "edge", inc.other);
    }
    grad.push_back(std::move(gi));
  }
  return grad;
}

template <RiemannianManifold M>
void check_pair(const ManifoldImage<M>& u, const ManifoldImage<M>& f, double lambda) {
  require_same_layout(u, f, "energy");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
}

}  // namespace detail

/// Optimal weights v = s(d_u): per forward edge (anisotropic) or per pixel radius
/// (isotropic). Every entry lies in (0, s(0)].
template <RiemannianManifold M>
WeightField optimal_weights(const ManifoldImage<M>& u, const Penalty& p, Mode mode) {
  const GridGraph g(u.shape());
  const auto d = detail::edge_distances(u.manifold(), g, std::span(u.pixels()));
  WeightField v{mode, {}};
  const auto& args = mode == Mode::Anisotropic ? d : detail::pixel_radii(g, d);
  v.values.reserve(args.size());
  for (double t : args) v.values.push_back(p.weight(t));
  return v;
}

/// J(u) = 1/2 sum_V d^2(u_i, f_i) + lambda * regularizer, with the data term over f's mask.
template <RiemannianManifold M>
double eval_J(const ManifoldImage<M>& u, const ManifoldImage<M>& f, double lambda, const Penalty& p, Mode mode) {
  detail::check_pair(u, f, lambda);
  const auto& m = u.manifold();
  const GridGraph g(u.shape());
  const auto d = detail::edge_distances(m, g, std::span(u.pixels()));
  long double reg = 0.0L;
  if (mode == Mode::Anisotropic) {
    for (double t : d) reg += p.regularizer(t);
  } else {
    for (double t : detail::pixel_radii(g, d)) reg += p.regularizer(t);
  }
  return static_cast<double>(detail::data_term(m, std::span(u.pixels()), std::span(f.pixels()), f.mask()) +
                             lambda * reg);
}

/// Augmented energy: 1/2 sum_V d^2 + lambda sum (c(d, v) - psi(v)), c(t,s) = t^2 s.
template <RiemannianManifold M>
double eval_augmented(const ManifoldImage<M>& u, const ManifoldImage<M>& f, const WeightField& v, double lambda,
                      const Penalty& p, Mode mode) {
  detail::check_pair(u, f, lambda);
  if (v.mode != mode) throw ValidationError("weight field mode does not match the requested mode");
  const auto& m = u.manifold();
  const GridGraph g(u.shape());
  detail::check_weights(g, v);
  const auto d = detail::edge_distances(m, g, std::span(u.pixels()));
  long double reg = 0.0L;
  for (std::size_t e = 0; e < d.size(); ++e) {
    const double w = mode == Mode::Anisotropic ? v.values[e] : v.values[g.edges()[e].from];
    reg += static_cast<long double>(w) * d[e] * d[e];
  }
  for (double s : v.values) reg -= p.conjugate(s);
  return static_cast<double>(detail::data_term(m, std::span(u.pixels()), std::span(f.pixels()), f.mask()) +
                             lambda * reg);
}

/// Riemannian gradient of the augmented energy in u for fixed weights v.
template <RiemannianManifold M>
GradientField<M> grad_augmented(const ManifoldImage<M>& u, const ManifoldImage<M>& f, const WeightField& v,
                                double lambda, Mode mode) {
  detail::check_pair(u, f, lambda);
  if (v.mode != mode) throw ValidationError("weight field mode does not match the requested mode");
  const GridGraph g(u.shape());
  detail::check_weights(g, v);
  return {u.pixels(), detail::gradient(u.manifold(), g, std::span(u.pixels()), std::span(f.pixels()), f.mask(),
                                       detail::edge_weights(g, v), lambda)};
}

/// Gradient of J itself, assembled from rho'(d) log / ||log|| without going through the
/// weight map. For u_i != u_j it coincides with grad_augmented at v = s(d_u).
template <RiemannianManifold M>
GradientField<M> grad_direct(const ManifoldImage<M>& u, const ManifoldImage<M>& f, double lambda, const Penalty& p,
                             Mode mode) {
  detail::check_pair(u, f, lambda);
  const auto& m = u.manifold();
  const GridGraph g(u.shape());
  const auto& shape = u.shape();
  const auto pts = std::span(u.pixels());
  std::vector<double> radius;
  if (mode == Mode::Isotropic) radius = detail::pixel_radii(g, detail::edge_distances(m, g, pts));

  GradientField<M> out{u.pixels(), {}};
  out.vectors.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    typename M::Tangent gi = m.zero_tangent(u[i]);
    if (f.mask().known(i)) gi -= detail::checked_log(m, shape, pts, i, f[i], "data term", i);
    if (mode == Mode::Anisotropic) {
      for (const auto& inc : g.incident(i)) {
        const auto l = detail::checked_log(m, shape, pts, i, u[inc.other], "edge", inc.other);
        const double n = norm(m, u[i], l);
        if (n > 0.0) gi -= (lambda * p.regularizer_prime(n) / n) * l;
      }
    } else {
      typename M::Tangent forward = m.zero_tangent(u[i]);
      for (std::size_t j : neighbors_plus(shape, i)) forward += detail::checked_log(m, shape, pts, i, u[j], "edge", j);
      if (radius[i] > 0.0) gi -= (lambda * p.regularizer_prime(radius[i]) / radius[i]) * forward;
      for (std::size_t j : neighbors_minus(shape, i)) {
        if (radius[j] > 0.0) {
          gi -= (lambda * p.regularizer_prime(radius[j]) / radius[j]) *
                detail::checked_log(m, shape, pts, i, u[j], "edge", j);
        }
      }
    }
    out.vectors.push_back(std::move(gi));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Approximate Newton operator.

/// Flat-case Hessian of the augmented energy for fixed weights:
///   (H eta)_i = (1_V(i) + 2 lambda sum_{e~i} w_e) eta_i - 2 lambda sum_{e~i} w_e T_{j->i} eta_j
/// with T the manifold's vector transport. Exact for Euclidean and circle data,
/// symmetric positive definite in general. Solved exactly in orthonormal tangent
/// coordinates with a sparse LDLT factorization.
template <RiemannianManifold M>
class ApproxHessian {
 public:
  using Point = typename M::Point;
  using Tangent = typename M::Tangent;

  ApproxHessian(const M& m, const GridGraph& g, std::span<const Point> u, const Mask& known,
                std::vector<double> edge_w, double lambda)
      : m_(m), g_(g), u_(u.begin(), u.end()), known_(known), w_(std::move(edge_w)), lambda_(lambda) {
    diag_.assign(u_.size(), 0.0);
    for (std::size_t i = 0; i < u_.size(); ++i) {
      double sum = 0.0;
      for (const auto& inc : g_.incident(i)) sum += w_[inc.edge];
      diag_[i] = (known_.known(i) ? 1.0 : 0.0) + 2.0 * lambda_ * sum;
    }
  }

  std::vector<Tangent> apply(std::span<const Tangent> eta) const {
    std::vector<Tangent> out;
    out.reserve(u_.size());
    for (std::size_t i = 0; i < u_.size(); ++i) {
      Tangent r = diag_[i] * eta[i];
      for (const auto& inc : g_.incident(i)) {
        r -= (2.0 * lambda_ * w_[inc.edge]) * m_.transport(u_[inc.other], u_[i], eta[inc.other]);
      }
      out.push_back(std::move(r));
    }
    return out;
  }

  std::vector<Tangent> solve(std::span<const Tangent> rhs) {
    factorize();
    const std::size_t k = m_.dimension();
    Eigen::VectorXd b(static_cast<Eigen::Index>(u_.size() * k));
    for (std::size_t i = 0; i < u_.size(); ++i) {
      for (std::size_t a = 0; a < k; ++a) b[static_cast<Eigen::Index>(i * k + a)] = m_.inner(u_[i], rhs[i], basis_[i][a]);
    }
    const Eigen::VectorXd x = ldlt_.solve(b);
    if (ldlt_.info() != Eigen::Success) throw SolverError("approximate Newton system could not be solved");
    std::vector<Tangent> out;
    out.reserve(u_.size());
    for (std::size_t i = 0; i < u_.size(); ++i) {
      Tangent t = m_.zero_tangent(u_[i]);
      for (std::size_t a = 0; a < k; ++a) t += x[static_cast<Eigen::Index>(i * k + a)] * basis_[i][a];
      out.push_back(std::move(t));
    }
    return out;
  }

 private:
  void factorize() {
    if (factorized_) return;
    const std::size_t k = m_.dimension();
    basis_.clear();
    for (const auto& p : u_) basis_.push_back(m_.tangent_basis(p));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(u_.size() * k + 2 * g_.edges().size() * k * k);
    for (std::size_t i = 0; i < u_.size(); ++i) {
      for (std::size_t a = 0; a < k; ++a) {
        const auto r = static_cast<int>(i * k + a);
        trip.emplace_back(r, r, diag_[i]);
      }
    }
    for (std::size_t e = 0; e < g_.edges().size(); ++e) {
      const std::size_t i = g_.edges()[e].from;
      const std::size_t j = g_.edges()[e].to;
      const double c = -2.0 * lambda_ * w_[e];
      const Eigen::MatrixXd block = transport_block(i, j);
      for (std::size_t b = 0; b < k; ++b) {
        for (std::size_t a = 0; a < k; ++a) {
          const double v = c * block(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
          if (v == 0.0) continue;
          trip.emplace_back(static_cast<int>(i * k + a), static_cast<int>(j * k + b), v);
          trip.emplace_back(static_cast<int>(j * k + b), static_cast<int>(i * k + a), v);
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(u_.size() * k);
    Eigen::SparseMatrix<double> h(n, n);
    h.setFromTriplets(trip.begin(), trip.end());
    ldlt_.compute(h);
    if (ldlt_.info() != Eigen::Success) throw SolverError("approximate Newton matrix is not positive definite");
    factorized_ = true;
  }

  /// <basis_i[a], T_{j->i} basis_j[b]>_{u_i}.
  Eigen::MatrixXd transport_block(std::size_t i, std::size_t j) const {
    if constexpr (requires { m_.transport_block(u_[j], u_[i]); }) {
      return m_.transport_block(u_[j], u_[i]);
    } else {
      const auto k = static_cast<Eigen::Index>(m_.dimension());
      Eigen::MatrixXd block(k, k);
      for (Eigen::Index b = 0; b < k; ++b) {
        const Tangent moved = m_.transport(u_[j], u_[i], basis_[j][static_cast<std::size_t>(b)]);
        for (Eigen::Index a = 0; a < k; ++a) block(a, b) = m_.inner(u_[i], basis_[i][static_cast<std::size_t>(a)], moved);
      }
      return block;
    }
  }

  M m_;
  const GridGraph& g_;
  std::vector<Point> u_;
  Mask known_;
  std::vector<double> w_;
  double lambda_;
  std::vector<double> diag_;
  std::vector<std::vector<Tangent>> basis_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  bool factorized_ = false;
};

/// Applies the approximate Newton operator at u to a tangent field based at u.
template <RiemannianManifold M>
GradientField<M> apply_approx_hessian(const ManifoldImage<M>& u, const Mask& known, const WeightField& v,
                                      double lambda, const GradientField<M>& eta) {
  const GridGraph g(u.shape());
  detail::check_weights(g, v);
  if (eta.vectors.size() != u.size()) throw ValidationError("apply_approx_hessian: field size mismatch");
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!same_point(eta.base[i], u[i])) {
      throw ValidationError("apply_approx_hessian: tangent at pixel " + std::to_string(i) + " is not based at u");
    }
  }
  const ApproxHessian<M> h(u.manifold(), g, std::span(u.pixels()), known, detail::edge_weights(g, v), lambda);
  return {u.pixels(), h.apply(std::span(eta.vectors))};
}

/// Solves H eta = rhs for the approximate Newton operator at u.
template <RiemannianManifold M>
GradientField<M> solve_approx_hessian(const ManifoldImage<M>& u, const Mask& known, const WeightField& v,
                                      double lambda, const GradientField<M>& rhs) {
  const GridGraph g(u.shape());
  detail::check_weights(g, v);
  if (rhs.vectors.size() != u.size()) throw ValidationError("solve_approx_hessian: field size mismatch");
  ApproxHessian<M> h(u.manifold(), g, std::span(u.pixels()), known, detail::edge_weights(g, v), lambda);
  return {u.pixels(), h.solve(std::span(rhs.vectors))};
}

}  // namespace mhq
