#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "mhq/image.hpp"

namespace mhq {

using Rgb8 = std::array<std::uint8_t, 3>;

namespace detail {

inline std::uint8_t to_byte(double x) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(x, 0.0, 1.0) * 255.0));
}

/// h in [0, 1), s, l in [0, 1].
inline Rgb8 hsl(double h, double s, double l) {
  auto channel = [&](double n) {
    const double k = std::fmod(n + h * 12.0, 12.0);
    const double a = s * std::min(l, 1.0 - l);
    return l - a * std::max(-1.0, std::min({k - 3.0, 9.0 - k, 1.0}));
  };
  return {to_byte(channel(0.0)), to_byte(channel(8.0)), to_byte(channel(4.0))};
}

/// Full saturation and value.
inline Rgb8 hue(double h) { return hsl(h, 1.0, 0.5); }

inline double unit_turn(double angle) {
  double h = std::fmod(angle, kTwoPi) / kTwoPi;
  if (h < 0.0) h += 1.0;
  return h >= 1.0 ? 0.0 : h;
}

/// Hue by azimuth, lightness from 1 at the north pole to 0 at the south pole.
inline Rgb8 sphere_color(const Eigen::Vector3d& x) {
  const double incl = std::acos(std::clamp(x.z(), -1.0, 1.0));
  return hsl(unit_turn(std::atan2(x.y(), x.x())), 1.0, 1.0 - incl / kPi);
}

}  // namespace detail

/// Colours per pixel; unknown pixels are white.
///   circle: hue wheel. sphere2: hue by azimuth, lightness by inclination. so3q: the
///   rotated axis q^-1 (0,0,1) coloured as sphere2. spd: hue by d(x, I) normalized over
///   the image. euclidean(1): gray; euclidean(3): RGB, both clamped to [0, 1].
template <RiemannianManifold M>
std::vector<Rgb8> render(const ManifoldImage<M>& img) {
  std::vector<Rgb8> out(img.size(), Rgb8{255, 255, 255});
  [[maybe_unused]] double spd_max = 0.0;
  [[maybe_unused]] std::vector<double> spd_d;
  if constexpr (std::is_same_v<M, Spd>) {
    spd_d.assign(img.size(), 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) {
      if (!img.mask().known(i)) continue;
      spd_d[i] = img.manifold().dist(img.manifold().default_point(), img[i]);
      spd_max = std::max(spd_max, spd_d[i]);
    }
  }
  if constexpr (std::is_same_v<M, Euclidean>) {
    if (img.manifold().size() != 1 && img.manifold().size() != 3) {
      throw ValidationError("view: euclidean images need 1 (gray) or 3 (RGB) components");
    }
  }
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (!img.mask().known(i)) continue;
    const auto& p = img[i];
    if constexpr (std::is_same_v<M, Circle>) {
      out[i] = detail::hue(detail::unit_turn(p));
    } else if constexpr (std::is_same_v<M, Sphere2>) {
      out[i] = detail::sphere_color(p);
    } else if constexpr (std::is_same_v<M, Rotations3>) {
      const Eigen::Quaterniond q(p[0], p[1], p[2], p[3]);
      out[i] = detail::sphere_color(q.conjugate() * Eigen::Vector3d::UnitZ());
    } else if constexpr (std::is_same_v<M, Spd>) {
      out[i] = detail::hue(spd_max > 0.0 ? (2.0 / 3.0) * spd_d[i] / spd_max : 0.0);
    } else {
      if (p.size() == 1) {
        const auto g = detail::to_byte(p[0]);
        out[i] = {g, g, g};
      } else {
        out[i] = {detail::to_byte(p[0]), detail::to_byte(p[1]), detail::to_byte(p[2])};
      }
    }
  }
  return out;
}

inline void write_ppm(std::ostream& os, const GridShape& s, const std::vector<Rgb8>& px) {
  os << "P6\n" << s.cols << ' ' << s.rows << "\n255\n";
  for (const auto& c : px) os.write(reinterpret_cast<const char*>(c.data()), 3);
}

template <RiemannianManifold M>
void export_view(const ManifoldImage<M>& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  write_ppm(f, img.shape(), render(img));
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

}  // namespace mhq
