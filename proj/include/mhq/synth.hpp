#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "mhq/image.hpp"
#include "mhq/manifolds.hpp"

namespace mhq {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Random points and tangents.

template <RiemannianManifold M>
typename M::Tangent random_tangent(const M& m, const typename M::Point& p, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> n(0.0, sigma);
  typename M::Tangent v = m.zero_tangent(p);
  for (const auto& b : m.tangent_basis(p)) v += n(rng) * b;
  return v;
}

/// A random point spread around the manifold's default point.
template <RiemannianManifold M>
typename M::Point random_point(const M& m, Rng& rng, double spread = 1.0) {
  if constexpr (std::is_same_v<M, Circle>) {
    std::uniform_real_distribution<double> u(-kPi, kPi);
    return u(rng);
  } else if constexpr (std::is_same_v<M, Sphere2>) {
    std::normal_distribution<double> n;
    Eigen::Vector3d x(n(rng), n(rng), n(rng));
    while (x.norm() < 1e-8) x = Eigen::Vector3d(n(rng), n(rng), n(rng));
    return x.normalized();
  } else if constexpr (std::is_same_v<M, Rotations3>) {
    std::normal_distribution<double> n;
    Eigen::Vector4d x(n(rng), n(rng), n(rng), n(rng));
    while (x.norm() < 1e-8) x = Eigen::Vector4d(n(rng), n(rng), n(rng), n(rng));
    return Rotations3::canonicalize(x);
  } else {
    const auto p0 = m.default_point();
    return m.exp(p0, random_tangent(m, p0, rng, spread));
  }
}

// ---------------------------------------------------------------------------
// Generators.

/// Samples x = 0, 0.01, ..., of 8 pi x^2, wrapped into [-pi, pi); a 1 x N signal.
inline ManifoldImage<Circle> spiral_signal(std::size_t n) {
  if (n < 2) throw ValidationError("spiral_signal needs N >= 2");
  std::vector<double> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 0.01 * static_cast<double>(i);
    px[i] = wrap_angle(8.0 * kPi * x * x);
  }
  return ManifoldImage<Circle>(Circle{}, GridShape(1, n), std::move(px));
}

/// Coordinate of grid index k in [-1/2, 1/2] with n samples per axis.
inline double grid_coordinate(std::size_t k, std::size_t n) {
  return -0.5 + static_cast<double>(k) / static_cast<double>(n - 1);
}

/// atan2(second coordinate, first coordinate) on the n x n grid over [-1/2, 1/2]^2, where
/// the first coordinate follows the row index and the second the column index. The center
/// gets 0.
inline ManifoldImage<Circle> atan2_image(std::size_t n) {
  if (n < 2) throw ValidationError("atan2_image needs n >= 2");
  const GridShape s(n, n);
  std::vector<double> px(s.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double a = grid_coordinate(r, n);
      const double b = grid_coordinate(c, n);
      px[s.index(r, c)] = (a == 0.0 && b == 0.0) ? 0.0 : wrap_angle(std::atan2(b, a));
    }
  }
  return ManifoldImage<Circle>(Circle{}, s, std::move(px));
}

/// First column (0-based) of the right-hand region of spd_jump_image.
inline std::size_t spd_jump_column(std::size_t n) { return (2 * n + 2) / 3; }

/// Two smooth SPD(3) regions with a vertical jump. With x = column and y = row (0-based),
/// the left region is R(t) diag(1 + x/n, 1, 1) R(t)^T, t = (pi/6) y/n, R a rotation about
/// the z axis; the right region uses R(t + pi/2) and twice the matrix.
inline ManifoldImage<Spd> spd_jump_image(std::size_t n) {
  if (n < 3) throw ValidationError("spd_jump_image needs n >= 3");
  const GridShape s(n, n);
  const std::size_t jump = spd_jump_column(n);
  const double nn = static_cast<double>(n);
  std::vector<Eigen::MatrixXd> px(s.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const bool right = c >= jump;
      const double theta = (kPi / 6.0) * static_cast<double>(r) / nn + (right ? kPi / 2.0 : 0.0);
      const Eigen::Matrix3d rot = Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
      const Eigen::Vector3d diag(1.0 + static_cast<double>(c) / nn, 1.0, 1.0);
      Eigen::Matrix3d a = rot * diag.asDiagonal() * rot.transpose();
      if (right) a *= 2.0;
      px[s.index(r, c)] = symmetrize(Eigen::MatrixXd(a));
    }
  }
  return ManifoldImage<Spd>(Spd(3), s, std::move(px));
}

/// Smooth S^2 field with a jump in azimuth along the vertical center line.
inline ManifoldImage<Sphere2> sphere_field(std::size_t n) {
  if (n < 2) throw ValidationError("sphere_field needs n >= 2");
  const GridShape s(n, n);
  std::vector<Eigen::Vector3d> px(s.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double x = static_cast<double>(c) / static_cast<double>(n - 1);
      const double y = static_cast<double>(r) / static_cast<double>(n - 1);
      const double incl = kPi / 4.0 + (kPi / 2.0) * x;
      const double azim = kPi * y + (x > 0.5 ? kPi / 2.0 : 0.0);
      px[s.index(r, c)] = Eigen::Vector3d(std::sin(incl) * std::cos(azim), std::sin(incl) * std::sin(azim),
                                          std::cos(incl));
    }
  }
  return ManifoldImage<Sphere2>(Sphere2{}, s, std::move(px));
}

/// Piecewise constant orientations on Voronoi cells of `grains` random seeds.
inline ManifoldImage<Rotations3> grain_image(std::size_t n, std::size_t grains, std::uint64_t seed) {
  if (n < 2 || grains < 1) throw ValidationError("grain_image needs n >= 2 and at least one grain");
  Rng rng(seed);
  std::uniform_real_distribution<double> pos(0.0, static_cast<double>(n));
  std::vector<Eigen::Vector2d> centers;
  std::vector<Eigen::Vector4d> orient;
  const Rotations3 m;
  for (std::size_t g = 0; g < grains; ++g) {
    centers.emplace_back(pos(rng), pos(rng));
    orient.push_back(random_point(m, rng));
  }
  const GridShape s(n, n);
  std::vector<Eigen::Vector4d> px(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Eigen::Vector2d p(static_cast<double>(s.row_of(i)) + 0.5, static_cast<double>(s.col_of(i)) + 0.5);
    std::size_t best = 0;
    for (std::size_t g = 1; g < grains; ++g) {
      if ((centers[g] - p).squaredNorm() < (centers[best] - p).squaredNorm()) best = g;
    }
    px[i] = orient[best];
  }
  return ManifoldImage<Rotations3>(m, s, std::move(px));
}

/// Synthetic RGB test picture in [0.05, 0.95]^3: colour ramps, a disc and a bar.
inline ManifoldImage<Euclidean> rgb_test_image(std::size_t n) {
  if (n < 2) throw ValidationError("rgb_test_image needs n >= 2");
  const GridShape s(n, n);
  std::vector<Eigen::VectorXd> px(s.size());
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double x = static_cast<double>(c) / static_cast<double>(n - 1);
      const double y = static_cast<double>(r) / static_cast<double>(n - 1);
      Eigen::Vector3d rgb(0.2 + 0.6 * x, 0.3 + 0.4 * y, 0.7 - 0.4 * x * y);
      if ((x - 0.35) * (x - 0.35) + (y - 0.4) * (y - 0.4) < 0.04) rgb = Eigen::Vector3d(0.9, 0.25, 0.15);
      if (x > 0.65 && x < 0.8 && y > 0.2 && y < 0.85) rgb = Eigen::Vector3d(0.15, 0.5, 0.9);
      px[s.index(r, c)] = rgb;
    }
  }
  return ManifoldImage<Euclidean>(Euclidean(3), s, std::move(px));
}

// ---------------------------------------------------------------------------
// Noise.

enum class NoiseKind { WrappedGaussian, TangentGaussian, AmbientRgbGaussian };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::TangentGaussian;
  double sigma = 0.1;
  std::uint64_t seed = 0;
};

/// Wrapped: angle + N(0, sigma^2), wrapped (circle only). Tangent: exp_u(eta) with
/// N(0, sigma^2) coefficients in an orthonormal tangent basis. Ambient RGB: N(0, sigma^2)
/// on each channel of a Euclidean(3) image.
template <RiemannianManifold M>
ManifoldImage<M> add_noise(const ManifoldImage<M>& img, const NoiseSpec& spec) {
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) throw ValidationError("noise sigma must be positive");
  Rng rng(spec.seed);
  const M& m = img.manifold();
  std::vector<typename M::Point> px;
  px.reserve(img.size());
  switch (spec.kind) {
    case NoiseKind::WrappedGaussian:
      if constexpr (std::is_same_v<M, Circle>) {
        std::normal_distribution<double> n(0.0, spec.sigma);
        for (double a : img.pixels()) px.push_back(wrap_angle(a + n(rng)));
        break;
      } else {
        throw ValidationError("wrapped Gaussian noise needs a circle image, got " + m.name());
      }
    case NoiseKind::TangentGaussian:
      for (const auto& p : img.pixels()) px.push_back(m.exp(p, random_tangent(m, p, rng, spec.sigma)));
      break;
    case NoiseKind::AmbientRgbGaussian:
      if constexpr (std::is_same_v<M, Euclidean>) {
        if (m.size() != 3) throw ValidationError("RGB noise needs a euclidean(3) image");
        std::normal_distribution<double> n(0.0, spec.sigma);
        for (const auto& p : img.pixels()) {
          Eigen::VectorXd q = p;
          for (int k = 0; k < 3; ++k) q[k] += n(rng);
          px.push_back(std::move(q));
        }
        break;
      } else {
        throw ValidationError("RGB noise needs a euclidean(3) image, got " + m.name());
      }
  }
  return img.with_pixels(std::move(px));
}

// ---------------------------------------------------------------------------
// Masks.

/// Removes exactly floor(fraction * N) pixels chosen uniformly without replacement.
inline Mask random_mask(const GridShape& s, double fraction_lost, std::uint64_t seed) {
  if (!(fraction_lost >= 0.0 && fraction_lost < 1.0)) throw ValidationError("fraction lost must lie in [0, 1)");
  const auto lost = static_cast<std::size_t>(std::floor(fraction_lost * static_cast<double>(s.size())));
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> bits(s.size(), 1);
  for (std::size_t k = 0; k < lost; ++k) bits[order[k]] = 0;
  return Mask(s, std::move(bits));
}

/// Removes the rectangle of h x w pixels with top-left corner (row, col).
inline Mask block_mask(const GridShape& s, std::size_t row, std::size_t col, std::size_t h, std::size_t w) {
  if (row + h > s.rows || col + w > s.cols) throw ValidationError("block does not fit inside the grid");
  std::vector<std::uint8_t> bits(s.size(), 1);
  for (std::size_t r = row; r < row + h; ++r) {
    for (std::size_t c = col; c < col + w; ++c) bits[s.index(r, c)] = 0;
  }
  return Mask(s, std::move(bits));
}

inline Mask centered_block_mask(const GridShape& s, std::size_t h, std::size_t w) {
  if (h > s.rows || w > s.cols) throw ValidationError("block does not fit inside the grid");
  return block_mask(s, (s.rows - h) / 2, (s.cols - w) / 2, h, w);
}

/// Removes every pixel within `radius` of the center, in [-1/2, 1/2]^2 domain units.
inline Mask disc_mask(const GridShape& s, double radius) {
  if (s.rows < 2 || s.cols < 2) throw ValidationError("disc mask needs at least 2 x 2 pixels");
  std::vector<std::uint8_t> bits(s.size(), 1);
  for (std::size_t r = 0; r < s.rows; ++r) {
    for (std::size_t c = 0; c < s.cols; ++c) {
      const double a = grid_coordinate(r, s.rows);
      const double b = grid_coordinate(c, s.cols);
      if (a * a + b * b <= radius * radius) bits[s.index(r, c)] = 0;
    }
  }
  return Mask(s, std::move(bits));
}

// ---------------------------------------------------------------------------
// Chromaticity and brightness.

struct CbImage {
  ManifoldImage<Sphere2> chromaticity;
  ManifoldImage<Euclidean> brightness;
  std::vector<std::size_t> zero_pixels;  // pixels whose chromaticity was undefined
};

inline CbImage cb_decompose(const ManifoldImage<Euclidean>& rgb) {
  if (rgb.manifold().size() != 3) throw ValidationError("cb_decompose needs a euclidean(3) image");
  std::vector<Eigen::Vector3d> chroma;
  std::vector<Eigen::VectorXd> bright;
  std::vector<std::size_t> zeros;
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    const Eigen::Vector3d v = rgb[i];
    const double b = v.norm();
    if (b == 0.0) {
      chroma.push_back(Eigen::Vector3d::Ones() / std::sqrt(3.0));
      zeros.push_back(i);
    } else {
      chroma.push_back(v / b);
    }
    bright.push_back(Eigen::VectorXd::Constant(1, b));
  }
  return {ManifoldImage<Sphere2>(Sphere2{}, rgb.shape(), std::move(chroma), rgb.mask()),
          ManifoldImage<Euclidean>(Euclidean(1), rgb.shape(), std::move(bright), rgb.mask()), std::move(zeros)};
}

inline ManifoldImage<Euclidean> cb_recompose(const CbImage& cb) {
  if (!(cb.chromaticity.shape() == cb.brightness.shape())) throw ValidationError("cb_recompose: shapes differ");
  std::vector<Eigen::VectorXd> px;
  px.reserve(cb.chromaticity.size());
  for (std::size_t i = 0; i < cb.chromaticity.size(); ++i) {
    px.push_back(cb.brightness[i][0] * cb.chromaticity[i]);
  }
  return ManifoldImage<Euclidean>(Euclidean(3), cb.chromaticity.shape(), std::move(px), cb.chromaticity.mask());
}

// ---------------------------------------------------------------------------
// Metrics.

/// Mean geodesic distance over all pixels.
template <RiemannianManifold M>
double err_metric(const ManifoldImage<M>& u, const ManifoldImage<M>& ref) {
  require_same_layout(u, ref, "err");
  long double sum = 0.0L;
  for (std::size_t i = 0; i < u.size(); ++i) sum += u.manifold().dist(u[i], ref[i]);
  return static_cast<double>(sum / static_cast<long double>(u.size()));
}

/// Mean geodesic distance over the pixels a mask marks as unknown.
template <RiemannianManifold M>
double err_on_lost(const ManifoldImage<M>& u, const ManifoldImage<M>& ref, const Mask& mask) {
  require_same_layout(u, ref, "err");
  long double sum = 0.0L;
  std::size_t n = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (mask.known(i)) continue;
    sum += u.manifold().dist(u[i], ref[i]);
    ++n;
  }
  return n == 0 ? 0.0 : static_cast<double>(sum / static_cast<long double>(n));
}

/// 10 log10(1 / MSE) over all channels and pixels of RGB images with peak value 1;
/// +infinity for identical images.
inline double psnr(const ManifoldImage<Euclidean>& u, const ManifoldImage<Euclidean>& ref) {
  require_same_layout(u, ref, "psnr");
  long double se = 0.0L;
  std::size_t count = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const Eigen::VectorXd d = u[i] - ref[i];
    se += d.squaredNorm();
    count += static_cast<std::size_t>(d.size());
  }
  if (se == 0.0L) return std::numeric_limits<double>::infinity();
  const double mse = static_cast<double>(se / static_cast<long double>(count));
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace mhq
