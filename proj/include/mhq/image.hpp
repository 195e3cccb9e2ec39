#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "mhq/grid.hpp"
#include "mhq/manifolds.hpp"

namespace mhq {

/// A grid of manifold points plus the set of pixels whose data is known.
/// Every pixel (known or not) holds a valid point.
template <RiemannianManifold M>
class ManifoldImage {
 public:
  using Manifold = M;
  using Point = typename M::Point;

  ManifoldImage(M manifold, GridShape shape, std::vector<Point> pixels, Mask mask)
      : manifold_(std::move(manifold)), shape_(shape), pixels_(std::move(pixels)), mask_(std::move(mask)) {
    if (pixels_.size() != shape_.size()) throw ValidationError("pixel count does not match the grid");
    if (!(mask_.shape() == shape_)) throw ValidationError("mask shape does not match the image");
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      try {
        manifold_.validate_point(pixels_[i]);
      } catch (const ValidationError& e) {
        throw ValidationError("pixel " + std::to_string(i) + " (row " + std::to_string(shape_.row_of(i)) +
                              ", col " + std::to_string(shape_.col_of(i)) + "): " + e.what());
      }
    }
  }

  ManifoldImage(M manifold, GridShape shape, std::vector<Point> pixels)
      : ManifoldImage(std::move(manifold), shape, std::move(pixels), Mask::all_known(shape)) {}

  static ManifoldImage constant(M manifold, GridShape shape, const Point& value) {
    return ManifoldImage(std::move(manifold), shape, std::vector<Point>(shape.size(), value));
  }

  const M& manifold() const { return manifold_; }
  const GridShape& shape() const { return shape_; }
  const Mask& mask() const { return mask_; }
  const std::vector<Point>& pixels() const { return pixels_; }
  const Point& operator[](std::size_t i) const { return pixels_[i]; }
  std::size_t size() const { return pixels_.size(); }

  ManifoldImage with_pixels(std::vector<Point> pixels) const { return ManifoldImage(manifold_, shape_, std::move(pixels), mask_); }
  ManifoldImage with_mask(Mask mask) const { return ManifoldImage(manifold_, shape_, pixels_, std::move(mask)); }

 private:
  M manifold_;
  GridShape shape_;
  std::vector<Point> pixels_;
  Mask mask_;
};

using AnyImage = std::variant<ManifoldImage<Euclidean>, ManifoldImage<Circle>, ManifoldImage<Sphere2>,
                              ManifoldImage<Rotations3>, ManifoldImage<Spd>>;

template <RiemannianManifold M>
void require_same_layout(const ManifoldImage<M>& a, const ManifoldImage<M>& b, const char* what) {
  if (!(a.shape() == b.shape())) {
    throw ValidationError(std::string(what) + ": image shapes differ (" + a.shape().describe() + " vs " +
                          b.shape().describe() + ")");
  }
  if (a.manifold().name() != b.manifold().name()) {
    throw ValidationError(std::string(what) + ": manifolds differ (" + a.manifold().name() + " vs " +
                          b.manifold().name() + ")");
  }
}

}  // namespace mhq
