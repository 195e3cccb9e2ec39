#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhq/energy.hpp"

namespace mhq {

enum class InnerMethod { GradientDescent, ApproxNewton };

inline std::string_view to_string(InnerMethod m) { return m == InnerMethod::GradientDescent ? "gd" : "newton"; }
inline InnerMethod parse_inner_method(std::string_view s) {
  if (s == "gd") return InnerMethod::GradientDescent;
  if (s == "newton") return InnerMethod::ApproxNewton;
  throw ValidationError("unknown inner method '" + std::string(s) + "' (expected gd or newton)");
}

struct ArmijoParams {
  double initial_step = 1.0;
  double shrink = 0.5;
  double slope = 1e-4;
  int max_backtracks = 60;
};

struct SolverConfig {
  double lambda = 1.0;
  Mode mode = Mode::Anisotropic;
  Penalty penalty{PenaltyKind::SqrtEps, 0.1};
  InnerMethod inner_method = InnerMethod::ApproxNewton;
  int inner_steps = 5;
  ArmijoParams armijo;
  double outer_tol = 1e-8;
  int outer_max_iters = 500;

  void validate() const {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be positive and finite");
    if (inner_steps < 1) throw ValidationError("inner steps must be positive");
    if (!(outer_tol >= 0.0)) throw ValidationError("tolerance must be nonnegative");
    if (outer_max_iters < 1) throw ValidationError("max iterations must be positive");
    if (!(armijo.initial_step > 0.0) || !(armijo.shrink > 0.0 && armijo.shrink < 1.0) ||
        !(armijo.slope > 0.0 && armijo.slope < 1.0) || armijo.max_backtracks < 1) {
      throw ValidationError("invalid Armijo parameters");
    }
  }
};

enum class Termination { Tolerance, MaxIters };
inline std::string_view to_string(Termination t) { return t == Termination::Tolerance ? "tolerance" : "max-iters"; }

/// Slack used when checking monotonicity of energies that are sums of many terms.
inline double descent_slack(double e) { return 1e-12 * std::max(1.0, std::abs(e)); }

struct IterationRecord {
  int k = 0;
  double energy_before = 0.0;  // augmented(u^k, v^k); NaN at k = 0 where v^0 does not exist
  double energy_reweighted = 0.0;  // augmented(u^k, v^{k+1}) == J(u^k)
  double energy_after = 0.0;  // augmented(u^{k+1}, v^{k+1})
  double weight_min = 0.0;
  double weight_max = 0.0;
  double displacement = 0.0;
  int newton_fallbacks = 0;

  bool chain_holds() const {
    const bool first = std::isnan(energy_before) ||
                       energy_before + descent_slack(energy_before) >= energy_reweighted;
    return first && energy_reweighted + descent_slack(energy_reweighted) >= energy_after;
  }
};

template <RiemannianManifold M>
struct RestorationResult {
  ManifoldImage<M> restored;
  std::vector<std::pair<int, double>> energy_trace;  // (k, J(u^k))
  std::vector<IterationRecord> iterations;
  int outer_iters = 0;
  Termination termination = Termination::MaxIters;
  double wall_time = 0.0;

  bool descent_chain_holds() const {
    return std::all_of(iterations.begin(), iterations.end(), [](const auto& r) { return r.chain_holds(); });
  }
  bool energy_monotone() const {
    for (std::size_t k = 1; k < energy_trace.size(); ++k) {
      if (energy_trace[k].second > energy_trace[k - 1].second + descent_slack(energy_trace[k - 1].second)) return false;
    }
    return true;
  }
};

/// Known pixels keep their value; every unknown pixel copies the known pixel nearest in
/// Chebyshev distance, ties going to the smallest row-major index.
inline std::vector<std::size_t> nearest_known_source(const Mask& mask) {
  const GridShape& s = mask.shape();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(s.size(), kNone);
  std::vector<std::size_t> frontier;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (mask.known(i)) {
      label[i] = i;
      frontier.push_back(i);
    }
  }
  // Layered BFS over the 8-neighbourhood. A pixel's nearest sources are exactly the union
  // of the nearest sources of its neighbours in the previous layer, so the minimum label
  // propagates correctly.
  std::vector<std::uint8_t> in_next(s.size(), 0);
  while (!frontier.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t q : frontier) {
      const auto r = static_cast<long>(s.row_of(q));
      const auto c = static_cast<long>(s.col_of(q));
      for (long dr = -1; dr <= 1; ++dr) {
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr;
          const long cc = c + dc;
          if (rr < 0 || cc < 0 || rr >= static_cast<long>(s.rows) || cc >= static_cast<long>(s.cols)) continue;
          const std::size_t p = s.index(static_cast<std::size_t>(rr), static_cast<std::size_t>(cc));
          if (label[p] == kNone) {
            label[p] = label[q];
            in_next[p] = 1;
            next.push_back(p);
          } else if (in_next[p]) {
            label[p] = std::min(label[p], label[q]);
          }
        }
      }
    }
    for (std::size_t p : next) in_next[p] = 0;
    frontier = std::move(next);
  }
  return label;
}

template <RiemannianManifold M>
ManifoldImage<M> nearest_neighbor_fill(const ManifoldImage<M>& f) {
  const auto src = nearest_known_source(f.mask());
  std::vector<typename M::Point> px;
  px.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) px.push_back(f[src[i]]);
  return f.with_pixels(std::move(px));
}

template <RiemannianManifold M>
WeightField v_update(const ManifoldImage<M>& u, const SolverConfig& cfg) {
  return optimal_weights(u, cfg.penalty, cfg.mode);
}

namespace detail {

struct InnerStats {
  int steps = 0;
  int fallbacks = 0;
  double final_grad_norm = 0.0;
};

template <RiemannianManifold M>
std::vector<typename M::Point> retract(const M& m, std::span<const typename M::Point> u,
                                       const std::vector<typename M::Tangent>& eta, double t) {
  std::vector<typename M::Point> out;
  out.reserve(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out.push_back(m.exp(u[i], t * eta[i]));
  return out;
}

template <RiemannianManifold M>
double tangent_inner(const M& m, std::span<const typename M::Point> u, const std::vector<typename M::Tangent>& a,
                     const std::vector<typename M::Tangent>& b) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < u.size(); ++i) s += m.inner(u[i], a[i], b[i]);
  return static_cast<double>(s);
}

/// R inner steps on the u-part of the augmented energy for fixed edge weights.
template <RiemannianManifold M>
std::vector<typename M::Point> inner_loop(const M& m, const GridGraph& g, std::vector<typename M::Point> u,
                                          std::span<const typename M::Point> f, const Mask& known,
                                          const std::vector<double>& edge_w, const SolverConfig& cfg,
                                          InnerStats& stats) {
  const double lambda = cfg.lambda;
  for (int r = 0; r < cfg.inner_steps; ++r) {
    const std::span<const typename M::Point> us(u);
    const auto grad = gradient(m, g, us, f, known, edge_w, lambda);
    const double gnorm2 = tangent_inner(m, us, grad, grad);
    stats.final_grad_norm = std::sqrt(std::max(0.0, gnorm2));
    if (gnorm2 == 0.0 || stats.final_grad_norm < cfg.outer_tol / 10.0) break;

    std::vector<typename M::Tangent> eta;
    double slope = 0.0;
    if (cfg.inner_method == InnerMethod::ApproxNewton) {
      ApproxHessian<M> h(m, g, us, known, edge_w, lambda);
      eta = h.solve(grad);
      for (auto& e : eta) e = -1.0 * e;
      slope = tangent_inner(m, us, grad, eta);
      if (!(slope < 0.0)) {
        ++stats.fallbacks;
        eta.clear();
      }
    }
    if (eta.empty()) {
      eta.reserve(grad.size());
      for (const auto& gi : grad) eta.push_back(-1.0 * gi);
      slope = -gnorm2;
    }

    const double e0 = augmented_quadratic(m, g, us, f, known, edge_w, lambda);
    double t = cfg.armijo.initial_step;
    bool accepted = false;
    double last = 0.0;
    for (int b = 0; b <= cfg.armijo.max_backtracks; ++b) {
      auto cand = retract(m, us, eta, t);
      last = augmented_quadratic(m, g, std::span<const typename M::Point>(cand), f, known, edge_w, lambda);
      if (last <= e0 + cfg.armijo.slope * t * slope) {
        u = std::move(cand);
        accepted = true;
        break;
      }
      t *= cfg.armijo.shrink;
    }
    ++stats.steps;
    if (!accepted && -slope <= 1e-13 * std::max(1.0, std::abs(e0))) {
      // The predicted decrease is below the resolution of the energy. Energy values can no
      // longer rank the trial points, so take the full step when it does not raise the
      // energy beyond rounding and shrinks the gradient; otherwise u is stationary.
      auto cand = retract(m, us, eta, cfg.armijo.initial_step);
      const std::span<const typename M::Point> cs(cand);
      const double e1 = augmented_quadratic(m, g, cs, f, known, edge_w, lambda);
      const auto g1 = gradient(m, g, cs, f, known, edge_w, lambda);
      if (e1 <= e0 + 1e-13 * std::max(1.0, std::abs(e0)) && tangent_inner(m, cs, g1, g1) < 0.25 * gnorm2) {
        u = std::move(cand);
        continue;
      }
      break;
    }
    if (!accepted) {
      std::ostringstream msg;
      msg.precision(6);
      msg << "line search exhausted after " << cfg.armijo.max_backtracks << " backtracks (energy " << e0
          << ", directional derivative " << slope << ", gradient norm " << stats.final_grad_norm
          << ", last trial energy " << last << ")";
      throw SolverError(msg.str());
    }
  }
  return u;
}

template <RiemannianManifold M>
double max_displacement(const M& m, const std::vector<typename M::Point>& a, const std::vector<typename M::Point>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, m.dist(a[i], b[i]));
  return d;
}

}  // namespace detail

/// R inner descent steps on the augmented energy with v fixed.
template <RiemannianManifold M>
ManifoldImage<M> u_update(const ManifoldImage<M>& u, const ManifoldImage<M>& f, const WeightField& v,
                          const SolverConfig& cfg) {
  cfg.validate();
  require_same_layout(u, f, "u_update");
  if (v.mode != cfg.mode) throw ValidationError("weight field mode does not match the solver mode");
  const GridGraph g(u.shape());
  detail::check_weights(g, v);
  detail::InnerStats stats;
  auto px = detail::inner_loop(u.manifold(), g, u.pixels(), std::span(f.pixels()), f.mask(),
                               detail::edge_weights(g, v), cfg, stats);
  return u.with_pixels(std::move(px));
}

/// Alternating minimization of the augmented energy. `init` overrides the default start
/// (data on the mask, nearest-neighbour fill elsewhere).
template <RiemannianManifold M>
RestorationResult<M> run(const ManifoldImage<M>& f, const SolverConfig& cfg,
                         const std::optional<ManifoldImage<M>>& init = std::nullopt) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const M& m = f.manifold();
  const GridGraph g(f.shape());
  ManifoldImage<M> u = init ? *init : nearest_neighbor_fill(f);
  if (init) {
    require_same_layout(*init, f, "initialization");
    u = u.with_mask(f.mask());
  }
  const std::span<const typename M::Point> fs(f.pixels());

  RestorationResult<M> res{u, {}, {}, 0, Termination::MaxIters, 0.0};
  double j_u = eval_J(u, f, cfg.lambda, cfg.penalty, cfg.mode);
  res.energy_trace.emplace_back(0, j_u);
  std::optional<WeightField> v_prev;

  for (int k = 0; k < cfg.outer_max_iters; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.energy_before = v_prev ? eval_augmented(u, f, *v_prev, cfg.lambda, cfg.penalty, cfg.mode)
                               : std::numeric_limits<double>::quiet_NaN();
    WeightField v = v_update(u, cfg);
    const auto [wmin, wmax] = std::minmax_element(v.values.begin(), v.values.end());
    rec.weight_min = *wmin;
    rec.weight_max = *wmax;
    rec.energy_reweighted = eval_augmented(u, f, v, cfg.lambda, cfg.penalty, cfg.mode);

    detail::InnerStats stats;
    auto next = detail::inner_loop(m, g, u.pixels(), fs, f.mask(), detail::edge_weights(g, v), cfg, stats);
    rec.newton_fallbacks = stats.fallbacks;
    rec.displacement = detail::max_displacement(m, u.pixels(), next);
    u = u.with_pixels(std::move(next));
    rec.energy_after = eval_augmented(u, f, v, cfg.lambda, cfg.penalty, cfg.mode);
    res.iterations.push_back(rec);

    j_u = eval_J(u, f, cfg.lambda, cfg.penalty, cfg.mode);
    res.energy_trace.emplace_back(k + 1, j_u);
    res.outer_iters = k + 1;
    v_prev = std::move(v);
    if (rec.displacement < cfg.outer_tol || rec.displacement == 0.0) {
      res.termination = Termination::Tolerance;
      break;
    }
  }
  res.restored = std::move(u);
  res.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

}  // namespace mhq
