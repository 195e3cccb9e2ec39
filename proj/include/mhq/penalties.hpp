#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "mhq/error.hpp"

namespace mhq {

enum class PenaltyKind { SqrtEps, Huber, ExpNeg };

inline std::string_view to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::SqrtEps: return "phi1";
    case PenaltyKind::Huber: return "phi2";
    case PenaltyKind::ExpNeg: return "phi3";
  }
  return "?";
}

inline PenaltyKind parse_penalty_kind(std::string_view s) {
  if (s == "phi1") return PenaltyKind::SqrtEps;
  if (s == "phi2") return PenaltyKind::Huber;
  if (s == "phi3") return PenaltyKind::ExpNeg;
  throw ValidationError("unknown penalty '" + std::string(s) + "' (expected phi1, phi2 or phi3)");
}

/// Edge-preserving penalty with parameter eps:
///   phi1(t) = sqrt(t^2 + eps^2)
///   phi2(t) = t^2/2 for |t| < eps, eps|t| - eps^2/2 otherwise (Huber)
///   phi3(t) = 1 - exp(-eps^2 t^2)
///
/// weight(t) is the tabulated half-quadratic weight (1/sqrt(t^2+eps^2), 1 | eps/|t|,
/// eps^2 exp(-eps^2 t^2)). The regularizer that the solver actually minimizes is rho,
/// the potential with rho'(t) / (2t) == weight(t); it is 2*phi for phi1 and phi2 and
/// phi for phi3.
class Penalty {
 public:
  Penalty(PenaltyKind kind, double eps) : kind_(kind), eps_(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("penalty eps must be positive and finite");
  }

  PenaltyKind kind() const { return kind_; }
  double eps() const { return eps_; }

  double phi(double t) const {
    t = std::abs(t);
    switch (kind_) {
      case PenaltyKind::SqrtEps: return std::hypot(t, eps_);
      case PenaltyKind::Huber: return t < eps_ ? 0.5 * t * t : eps_ * t - 0.5 * eps_ * eps_;
      case PenaltyKind::ExpNeg: return -std::expm1(-eps_ * eps_ * t * t);
    }
    return 0.0;
  }

  double phi_prime(double t) const {
    const double a = std::abs(t);
    const double sign = t < 0.0 ? -1.0 : 1.0;
    switch (kind_) {
      case PenaltyKind::SqrtEps: return t / std::hypot(t, eps_);
      case PenaltyKind::Huber: return a < eps_ ? t : sign * eps_;
      case PenaltyKind::ExpNeg: return 2.0 * eps_ * eps_ * t * std::exp(-eps_ * eps_ * t * t);
    }
    return 0.0;
  }

  /// lim_{t->0+} phi'(t)/t.
  double curvature_at_zero() const {
    switch (kind_) {
      case PenaltyKind::SqrtEps: return 1.0 / eps_;
      case PenaltyKind::Huber: return 1.0;
      case PenaltyKind::ExpNeg: return 2.0 * eps_ * eps_;
    }
    return 0.0;
  }

  /// Half-quadratic weight s(t), t >= 0. Positive, nonincreasing, maximal at t = 0.
  double weight(double t) const {
    if (!(t >= 0.0)) throw ValidationError("weight_s: argument must be nonnegative");
    switch (kind_) {
      case PenaltyKind::SqrtEps: return 1.0 / std::hypot(t, eps_);
      case PenaltyKind::Huber: return t < eps_ ? 1.0 : eps_ / t;
      case PenaltyKind::ExpNeg: return eps_ * eps_ * std::exp(-eps_ * eps_ * t * t);
    }
    return 0.0;
  }

  double max_weight() const { return weight(0.0); }

  /// rho / phi.
  double regularizer_scale() const { return kind_ == PenaltyKind::ExpNeg ? 1.0 : 2.0; }
  double regularizer(double t) const { return regularizer_scale() * phi(t); }
  double regularizer_prime(double t) const { return regularizer_scale() * phi_prime(t); }

  /// psi(s) = inf_t { t^2 s - rho(t) }, in closed form by inverting the weight map.
  /// -inf for s <= 0; -rho(0) for s >= weight(0).
  double conjugate(double s) const {
    if (!(s > 0.0)) return -std::numeric_limits<double>::infinity();
    if (s >= max_weight()) return -regularizer(0.0);
    const double e2 = eps_ * eps_;
    switch (kind_) {
      case PenaltyKind::SqrtEps: {
        const double t2 = 1.0 / (s * s) - e2;
        return t2 * s - 2.0 / s;
      }
      case PenaltyKind::Huber: return e2 - e2 / s;
      case PenaltyKind::ExpNeg: {
        const double t2 = std::log(e2 / s) / e2;
        return t2 * s - (1.0 - s / e2);
      }
    }
    return 0.0;
  }

 private:
  PenaltyKind kind_;
  double eps_;
};

// ---------------------------------------------------------------------------
// Numeric c-transform oracle.

/// c(t, s) = t^2 s, or (sqrt(a) t - s/sqrt(a))^2 / 2 with a > 0.
struct Coupling {
  enum class Kind { Multiplicative, Additive };
  Kind kind = Kind::Multiplicative;
  double a = 0.0;

  static Coupling multiplicative() { return {}; }
  static Coupling additive(double a) {
    if (!(a > 0.0)) throw ValidationError("additive coupling needs a > 0");
    return {Kind::Additive, a};
  }

  double operator()(double t, double s) const {
    if (kind == Kind::Multiplicative) return t * t * s;
    const double r = std::sqrt(a) * t - s / std::sqrt(a);
    return 0.5 * r * r;
  }
};

/// Minimum of f on [lo, hi]: dense grid scan, then golden-section refinement around the
/// best grid point. Intended for convex or unimodal 1-D functions.
inline double bracketed_minimum(const std::function<double(double)>& f, double lo, double hi, int grid = 4000) {
  double best_x = lo;
  double best_f = f(lo);
  const double h = (hi - lo) / grid;
  for (int k = 1; k <= grid; ++k) {
    const double x = lo + k * h;
    const double fx = f(x);
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  }
  double a = std::max(lo, best_x - h);
  double b = std::min(hi, best_x + h);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - g * (b - a);
  double x2 = a + g * (b - a);
  double f1 = f(x1);
  double f2 = f(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(a) + std::abs(b)); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - g * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + g * (b - a);
      f2 = f(x2);
    }
  }
  return std::min({best_f, f1, f2});
}

/// Optimal auxiliary variable for phi: phi'(t)/(2t) (t > 0), phi''(0+)/2 (t = 0), or
/// a t - phi'(t) for the additive coupling.
inline double dual_minimizer(const Penalty& p, const Coupling& c, double t) {
  if (c.kind == Coupling::Kind::Additive) return c.a * t - p.phi_prime(t);
  t = std::abs(t);
  return t > 0.0 ? p.phi_prime(t) / (2.0 * t) : p.curvature_at_zero() / 2.0;
}

/// psi(s) = inf_tau { c(tau, s) - phi(tau) } by bracketed search.
inline double c_transform_numeric(const Penalty& p, const Coupling& c, double s, double tau_max = 100.0,
                                  int grid = 4000) {
  auto h = [&](double tau) { return c(tau, s) - p.phi(tau); };
  // The multiplicative objective is even in tau.
  const double lo = c.kind == Coupling::Kind::Multiplicative ? 0.0 : -tau_max;
  return bracketed_minimum(h, lo, tau_max, grid);
}

struct CTransformEntry {
  double t = 0.0;
  double s = 0.0;
  double psi = 0.0;
  double duality_residual = 0.0;  // |phi(t) + psi(s(t)) - c(t, s(t))|
  double biconjugate_residual = 0.0;  // |phi(t) - inf_s {c(t,s) - psi(s)}|
};

struct CTransformReport {
  std::vector<CTransformEntry> entries;
  double tolerance = 1e-6;
  bool passed = false;
  double max_residual() const {
    double m = 0.0;
    for (const auto& e : entries) m = std::max({m, e.duality_residual, e.biconjugate_residual});
    return m;
  }
};

/// Certifies phi(t) + psi(s(t)) = c(t, s(t)) and phi = psi^c on a grid of t values.
inline CTransformReport c_transform_check(const Penalty& p, const Coupling& c, const std::vector<double>& t_grid) {
  if (c.kind == Coupling::Kind::Additive) {
    const double big = 1e6;
    if (!(p.phi(big) / (big * big) < c.a / 2.0)) {
      throw ValidationError("additive coupling: lim phi(t)/t^2 must be below a/2");
    }
  }
  double t_max = 0.0;
  for (double t : t_grid) {
    if (!std::isfinite(t) || t < 0.0) throw ValidationError("c_transform_check: t values must be finite and >= 0");
    t_max = std::max(t_max, t);
  }
  const double tau_max = std::max(100.0, 4.0 * t_max);
  // Bracket for the outer infimum over s.
  double s_lo = 0.0;
  double s_hi = 0.0;
  if (c.kind == Coupling::Kind::Multiplicative) {
    s_hi = 2.0 * p.curvature_at_zero() + 1.0;
  } else {
    s_hi = c.a * tau_max / 2.0 + 10.0;
    s_lo = -s_hi;
  }

  CTransformReport report;
  for (double t : t_grid) {
    CTransformEntry e;
    e.t = t;
    e.s = dual_minimizer(p, c, t);
    e.psi = c_transform_numeric(p, c, e.s, tau_max);
    e.duality_residual = std::abs(p.phi(t) + e.psi - c(t, e.s));
    auto outer = [&](double s) { return c(t, s) - c_transform_numeric(p, c, s, tau_max, 400); };
    const double phi_cc = bracketed_minimum(outer, s_lo, s_hi, 200);
    e.biconjugate_residual = std::abs(p.phi(t) - phi_cc);
    report.entries.push_back(e);
  }
  report.passed = report.max_residual() < report.tolerance;
  return report;
}

}  // namespace mhq
