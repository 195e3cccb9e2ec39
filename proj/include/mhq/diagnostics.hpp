#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mhq/energy.hpp"
#include "mhq/mvi.hpp"
#include "mhq/synth.hpp"

namespace mhq {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;  // worst observed error
  double tolerance = 0.0;
};

/// exp/log round trip, |‖log‖ - dist| and the quaternion double cover on random (p, v)
/// with ‖v‖_p <= 1.
template <RiemannianManifold M>
CheckResult geometry_check(const M& m, int samples, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> len(0.0, 1.0);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    const auto p = random_point(m, rng);
    auto v = random_tangent(m, p, rng);
    const double n = norm(m, p, v);
    if (n > 0.0) v = (len(rng) / n) * v;
    const auto q = m.exp(p, v);
    const auto w = m.log(p, q);
    worst = std::max(worst, norm(m, p, typename M::Tangent(w - v)));
    worst = std::max(worst, std::abs(norm(m, p, w) - m.dist(p, q)));
    if constexpr (std::is_same_v<M, Rotations3>) worst = std::max(worst, m.dist(q, Eigen::Vector4d(-q)));
  }
  return {"geometry " + m.name(), worst <= 1e-9, worst, 1e-9};
}

inline std::vector<CheckResult> ctransform_checks() {
  std::vector<double> grid;
  for (int k = 0; k <= 50; ++k) grid.push_back(0.1 * k);
  std::vector<CheckResult> out;
  auto add = [&](const std::string& name, const Penalty& p, const Coupling& c) {
    const auto r = c_transform_check(p, c, grid);
    out.push_back({"c-transform " + name, r.passed, r.max_residual(), r.tolerance});
  };
  add("phi1 multiplicative", Penalty(PenaltyKind::SqrtEps, 0.5), Coupling::multiplicative());
  add("phi2 multiplicative", Penalty(PenaltyKind::Huber, 0.5), Coupling::multiplicative());
  add("phi3 multiplicative", Penalty(PenaltyKind::ExpNeg, 0.5), Coupling::multiplicative());
  add("phi2 additive a=2", Penalty(PenaltyKind::Huber, 0.5), Coupling::additive(2.0));
  return out;
}

/// Central differences of `energy` along every orthonormal tangent direction of every pixel.
template <RiemannianManifold M>
std::vector<typename M::Tangent> numeric_gradient(const ManifoldImage<M>& u,
                                                  const std::function<double(const ManifoldImage<M>&)>& energy,
                                                  double h = 1e-5) {
  const M& m = u.manifold();
  std::vector<typename M::Tangent> g;
  for (std::size_t i = 0; i < u.size(); ++i) {
    typename M::Tangent gi = m.zero_tangent(u[i]);
    for (const auto& b : m.tangent_basis(u[i])) {
      auto plus = u.pixels();
      auto minus = u.pixels();
      plus[i] = m.exp(u[i], h * b);
      minus[i] = m.exp(u[i], -h * b);
      const double d = (energy(u.with_pixels(plus)) - energy(u.with_pixels(minus))) / (2.0 * h);
      gi += d * b;
    }
    g.push_back(std::move(gi));
  }
  return g;
}

/// ‖a - b‖ / ‖b‖ over a tangent field.
template <RiemannianManifold M>
double relative_field_error(const M& m, const std::vector<typename M::Point>& base,
                            const std::vector<typename M::Tangent>& a, const std::vector<typename M::Tangent>& b) {
  long double num = 0.0L;
  long double den = 0.0L;
  for (std::size_t i = 0; i < base.size(); ++i) {
    const typename M::Tangent d = a[i] - b[i];
    num += m.inner(base[i], d, d);
    den += m.inner(base[i], b[i], b[i]);
  }
  return static_cast<double>(std::sqrt(num) / std::max(std::sqrt(den), 1e-12L));
}

/// A random image whose neighbouring pixels stay well inside the injectivity radius.
template <RiemannianManifold M>
ManifoldImage<M> random_smooth_image(const M& m, GridShape s, Rng& rng, double spread) {
  const auto center = random_point(m, rng);
  std::vector<typename M::Point> px;
  for (std::size_t i = 0; i < s.size(); ++i) px.push_back(m.exp(center, random_tangent(m, center, rng, spread)));
  return ManifoldImage<M>(m, s, std::move(px));
}

/// Worst relative error of grad_augmented and grad_direct against finite differences.
template <RiemannianManifold M>
CheckResult gradient_check(const M& m, Mode mode, int instances, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<int> side(2, 4);
  std::uniform_real_distribution<double> unit(0.05, 1.0);
  const Penalty p(PenaltyKind::SqrtEps, 0.5);
  double worst = 0.0;
  for (int k = 0; k < instances; ++k) {
    const GridShape s(static_cast<std::size_t>(side(rng)), static_cast<std::size_t>(side(rng)));
    const auto u = random_smooth_image(m, s, rng, 0.3);
    const auto f0 = random_smooth_image(m, s, rng, 0.3);
    const auto f = f0.with_mask(random_mask(s, 0.3, rng()));
    const double lambda = unit(rng);
    WeightField v{mode, {}};
    const std::size_t nv = mode == Mode::Anisotropic ? edge_count(s) : s.size();
    for (std::size_t e = 0; e < nv; ++e) v.values.push_back(unit(rng));

    const auto ga = grad_augmented(u, f, v, lambda, mode);
    const auto na = numeric_gradient<M>(u, [&](const ManifoldImage<M>& x) {
      return eval_augmented(x, f, v, lambda, p, mode);
    });
    worst = std::max(worst, relative_field_error(m, u.pixels(), ga.vectors, na));

    const auto gd = grad_direct(u, f, lambda, p, mode);
    const auto nd = numeric_gradient<M>(u, [&](const ManifoldImage<M>& x) { return eval_J(x, f, lambda, p, mode); });
    worst = std::max(worst, relative_field_error(m, u.pixels(), gd.vectors, nd));
  }
  return {"gradient " + m.name() + " " + std::string(to_string(mode)), worst <= 1e-5, worst, 1e-5};
}

template <RiemannianManifold M>
CheckResult mvi_roundtrip_check(const M& m, std::uint64_t seed) {
  Rng rng(seed);
  const GridShape s(3, 4);
  const auto img = random_smooth_image(m, s, rng, 1.0).with_mask(random_mask(s, 0.25, seed));
  const std::string a = to_mvi_string(img);
  const std::string b = std::visit([](const auto& x) { return to_mvi_string(x); }, parse_mvi(a));
  return {"mvi round trip " + m.name(), a == b, a == b ? 0.0 : 1.0, 0.0};
}

/// The suites behind `mhq selfcheck`.
inline std::vector<CheckResult> run_selfcheck(int gradient_instances = 10) {
  std::vector<CheckResult> out;
  auto per_manifold = [&](const auto& m, std::uint64_t seed) {
    out.push_back(geometry_check(m, 1000, seed));
    out.push_back(mvi_roundtrip_check(m, seed));
    for (Mode mode : {Mode::Anisotropic, Mode::Isotropic}) out.push_back(gradient_check(m, mode, gradient_instances, seed));
  };
  per_manifold(Euclidean(2), 1);
  per_manifold(Circle{}, 2);
  per_manifold(Sphere2{}, 3);
  per_manifold(Rotations3{}, 4);
  per_manifold(Spd(3), 5);
  for (auto& c : ctransform_checks()) out.push_back(std::move(c));
  return out;
}

}  // namespace mhq
