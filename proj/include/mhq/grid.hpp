#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mhq/error.hpp"

namespace mhq {

/// Rectangular pixel grid; pixels are enumerated row-major everywhere.
struct GridShape {
  std::size_t rows = 0;
  std::size_t cols = 0;

  GridShape() = default;
  GridShape(std::size_t r, std::size_t c) : rows(r), cols(c) {
    if (r == 0 || c == 0) throw ValidationError("grid must have at least one row and one column");
  }

  std::size_t size() const { return rows * cols; }
  std::size_t index(std::size_t row, std::size_t col) const { return row * cols + col; }
  std::size_t row_of(std::size_t i) const { return i / cols; }
  std::size_t col_of(std::size_t i) const { return i % cols; }
  bool operator==(const GridShape&) const = default;

  void check_index(std::size_t i) const {
    if (i >= size()) {
      throw ValidationError("pixel index " + std::to_string(i) + " outside " + std::to_string(rows) + "x" +
                            std::to_string(cols) + " grid");
    }
  }

  std::string describe() const { return std::to_string(rows) + "x" + std::to_string(cols); }
};

/// At most two neighbours; a tiny fixed-capacity list.
class NeighborList {
 public:
  void push(std::size_t i) { items_[count_++] = i; }
  std::size_t size() const { return count_; }
  bool empty() const { return count_ == 0; }
  std::size_t operator[](std::size_t k) const { return items_[k]; }
  const std::size_t* begin() const { return items_.data(); }
  const std::size_t* end() const { return items_.data() + count_; }

 private:
  std::array<std::size_t, 2> items_{};
  std::size_t count_ = 0;
};

/// {(r+1, c), (r, c+1)} clipped to the grid. Mirror boundary conditions reflect a missing
/// neighbour onto the pixel itself, which contributes d(u_i, u_i) = 0, so omission is exact.
inline NeighborList neighbors_plus(const GridShape& shape, std::size_t i) {
  shape.check_index(i);
  NeighborList out;
  const std::size_t r = shape.row_of(i);
  const std::size_t c = shape.col_of(i);
  if (r + 1 < shape.rows) out.push(shape.index(r + 1, c));
  if (c + 1 < shape.cols) out.push(shape.index(r, c + 1));
  return out;
}

/// {(r-1, c), (r, c-1)} clipped to the grid.
inline NeighborList neighbors_minus(const GridShape& shape, std::size_t i) {
  shape.check_index(i);
  NeighborList out;
  const std::size_t r = shape.row_of(i);
  const std::size_t c = shape.col_of(i);
  if (r > 0) out.push(shape.index(r - 1, c));
  if (c > 0) out.push(shape.index(r, c - 1));
  return out;
}

inline std::size_t edge_count(const GridShape& s) { return s.rows * (s.cols - 1) + s.cols * (s.rows - 1); }

/// Forward edge: `to` is in neighbors_plus(`from`).
struct Edge {
  std::size_t from = 0;
  std::size_t to = 0;
};

/// Forward edges in canonical order (pixel row-major, then neighbors_plus order) plus a
/// per-pixel incidence list over the full 4-neighbourhood.
class GridGraph {
 public:
  struct Incidence {
    std::size_t edge;
    std::size_t other;
  };

  explicit GridGraph(const GridShape& shape) : shape_(shape) {
    std::vector<std::size_t> degree(shape.size(), 0);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      for (std::size_t j : neighbors_plus(shape, i)) {
        edges_.push_back({i, j});
        ++degree[i];
        ++degree[j];
      }
    }
    offsets_.assign(shape.size() + 1, 0);
    for (std::size_t i = 0; i < shape.size(); ++i) offsets_[i + 1] = offsets_[i] + degree[i];
    incidence_.resize(offsets_.back());
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      incidence_[fill[edges_[e].from]++] = {e, edges_[e].to};
      incidence_[fill[edges_[e].to]++] = {e, edges_[e].from};
    }
  }

  const GridShape& shape() const { return shape_; }
  const std::vector<Edge>& edges() const { return edges_; }

  struct Range {
    const Incidence* b;
    const Incidence* e;
    const Incidence* begin() const { return b; }
    const Incidence* end() const { return e; }
    std::size_t size() const { return static_cast<std::size_t>(e - b); }
  };
  Range incident(std::size_t i) const {
    return {incidence_.data() + offsets_[i], incidence_.data() + offsets_[i + 1]};
  }

 private:
  GridShape shape_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<Incidence> incidence_;
};

/// The set of pixels with known data. Never empty.
class Mask {
 public:
  Mask() = default;
  Mask(GridShape shape, std::vector<std::uint8_t> known) : shape_(shape), known_(std::move(known)) {
    if (known_.size() != shape_.size()) throw ValidationError("mask size does not match the grid");
    for (auto& k : known_) k = k ? 1 : 0;
    if (known_count() == 0) throw ValidationError("mask must contain at least one known pixel");
  }

  static Mask all_known(GridShape shape) { return Mask(shape, std::vector<std::uint8_t>(shape.size(), 1)); }

  const GridShape& shape() const { return shape_; }
  bool known(std::size_t i) const { return known_[i] != 0; }
  const std::vector<std::uint8_t>& bits() const { return known_; }
  std::size_t known_count() const {
    std::size_t n = 0;
    for (auto k : known_) n += k;
    return n;
  }
  bool all() const { return known_count() == known_.size(); }
  bool operator==(const Mask&) const = default;

 private:
  GridShape shape_;
  std::vector<std::uint8_t> known_;
};

}  // namespace mhq
