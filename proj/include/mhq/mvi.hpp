#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mhq/image.hpp"

// MVI1 text container:
//   MVI1
//   <tag>                 euclidean | circle | sphere2 | so3q | spd
//   <rows> <cols> <comps> [<r> for spd]
//   <mask>                rows*cols characters '0'/'1', row-major, 1 = known
//   one line per pixel, row-major, components as %.17g separated by single spaces

namespace mhq {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

template <RiemannianManifold M>
std::string manifold_tag(const M&) {
  return std::string(M::tag);
}

template <RiemannianManifold M>
void write_mvi(std::ostream& out, const ManifoldImage<M>& img) {
  const M& m = img.manifold();
  const std::size_t comps = m.component_count();
  out << "MVI1\n" << manifold_tag(m) << '\n';
  out << img.shape().rows << ' ' << img.shape().cols << ' ' << comps;
  if constexpr (std::is_same_v<M, Spd>) out << ' ' << m.size();
  out << '\n';
  for (auto k : img.mask().bits()) out << (k ? '1' : '0');
  out << '\n';
  std::vector<double> c(comps);
  for (const auto& p : img.pixels()) {
    m.to_components(p, c);
    for (std::size_t k = 0; k < comps; ++k) {
      if (k) out << ' ';
      out << format_double(c[k]);
    }
    out << '\n';
  }
}

template <RiemannianManifold M>
std::string to_mvi_string(const ManifoldImage<M>& img) {
  std::ostringstream os;
  write_mvi(os, img);
  return os.str();
}

template <RiemannianManifold M>
void save_mvi(const ManifoldImage<M>& img, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  write_mvi(f, img);
  if (!f) throw ValidationError("failed writing '" + path + "'");
}

namespace detail {

class MviReader {
 public:
  explicit MviReader(std::string_view text) : text_(text) {}

  std::size_t offset() const { return pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    throw ValidationError("MVI parse error at byte offset " + std::to_string(at) + ": " + what);
  }

  std::string_view line() {
    line_start_ = pos_;
    if (pos_ >= text_.size()) fail("unexpected end of file", pos_);
    const std::size_t nl = text_.find('\n', pos_);
    if (nl == std::string_view::npos) fail("missing newline", pos_);
    std::string_view l = text_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    return l;
  }

  std::size_t line_start() const { return line_start_; }
  bool at_end() const { return pos_ >= text_.size(); }

  /// Splits a line on single spaces and parses each field as a number.
  template <class T>
  std::vector<T> numbers(std::string_view l) {
    std::vector<T> out;
    std::size_t i = 0;
    while (i <= l.size()) {
      const std::size_t sp = std::min(l.find(' ', i), l.size());
      const std::string_view tok = l.substr(i, sp - i);
      T v{};
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size()) {
        fail("bad number '" + std::string(tok) + "'", line_start_ + i);
      }
      out.push_back(v);
      i = sp + 1;
    }
    return out;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_start_ = 0;
};

template <RiemannianManifold M>
ManifoldImage<M> read_pixels(MviReader& rd, M m, GridShape shape, Mask mask) {
  const std::size_t comps = m.component_count();
  std::vector<typename M::Point> px;
  px.reserve(shape.size());
  for (std::size_t i = 0; i < shape.size(); ++i) {
    const std::string_view l = rd.line();
    const auto c = rd.numbers<double>(l);
    if (c.size() != comps) {
      rd.fail("pixel " + std::to_string(i) + " has " + std::to_string(c.size()) + " components, expected " +
                  std::to_string(comps),
              rd.line_start());
    }
    auto p = m.from_components(c);
    try {
      m.validate_point(p);
    } catch (const ValidationError& e) {
      if (mask.known(i)) {
        throw ValidationError("MVI pixel " + std::to_string(i) + " (row " + std::to_string(shape.row_of(i)) +
                              ", col " + std::to_string(shape.col_of(i)) + ", byte offset " +
                              std::to_string(rd.line_start()) + "): " + e.what());
      }
      p = m.default_point();  // unknown pixels carry no data
    }
    px.push_back(std::move(p));
  }
  if (!rd.at_end()) rd.fail("trailing data after the last pixel", rd.offset());
  return ManifoldImage<M>(std::move(m), shape, std::move(px), std::move(mask));
}

}  // namespace detail

inline AnyImage parse_mvi(std::string_view text) {
  detail::MviReader rd(text);
  if (rd.line() != "MVI1") rd.fail("bad magic (expected MVI1)", 0);
  const std::string tag(rd.line());
  const std::size_t tag_at = rd.line_start();
  const auto dims = rd.numbers<long long>(rd.line());
  const std::size_t dims_at = rd.line_start();
  const bool spd = tag == Spd::tag;
  if (dims.size() != (spd ? 4u : 3u)) rd.fail("dimension line must have " + std::string(spd ? "4" : "3") + " fields", dims_at);
  for (auto d : dims) {
    if (d <= 0) rd.fail("dimensions must be positive", dims_at);
  }
  const GridShape shape(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]));
  const auto comps = static_cast<std::size_t>(dims[2]);

  const std::string_view mask_line = rd.line();
  if (mask_line.size() != shape.size()) {
    rd.fail("mask has " + std::to_string(mask_line.size()) + " entries, expected " + std::to_string(shape.size()),
            rd.line_start());
  }
  std::vector<std::uint8_t> bits(shape.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (mask_line[i] != '0' && mask_line[i] != '1') rd.fail("mask entries must be 0 or 1", rd.line_start() + i);
    bits[i] = mask_line[i] == '1';
  }
  Mask mask = [&] {
    try {
      return Mask(shape, bits);
    } catch (const ValidationError& e) {
      rd.fail(e.what(), rd.line_start());
    }
  }();

  auto expect = [&](std::size_t want) {
    if (comps != want) {
      rd.fail(tag + " pixels have " + std::to_string(want) + " components, header says " + std::to_string(comps),
              dims_at);
    }
  };
  if (tag == Euclidean::tag) return detail::read_pixels(rd, Euclidean(static_cast<int>(comps)), shape, mask);
  if (tag == Circle::tag) {
    expect(1);
    return detail::read_pixels(rd, Circle{}, shape, mask);
  }
  if (tag == Sphere2::tag) {
    expect(3);
    return detail::read_pixels(rd, Sphere2{}, shape, mask);
  }
  if (tag == Rotations3::tag) {
    expect(4);
    return detail::read_pixels(rd, Rotations3{}, shape, mask);
  }
  if (spd) {
    const auto r = static_cast<std::size_t>(dims[3]);
    expect(r * r);
    return detail::read_pixels(rd, Spd(static_cast<int>(r)), shape, mask);
  }
  rd.fail("unknown manifold tag '" + tag + "'", tag_at);
}

inline AnyImage load_mvi(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  try {
    return parse_mvi(ss.str());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

template <RiemannianManifold M>
ManifoldImage<M> load_mvi_as(const std::string& path) {
  AnyImage img = load_mvi(path);
  if (auto* p = std::get_if<ManifoldImage<M>>(&img)) return std::move(*p);
  throw ValidationError(path + ": image is on a different manifold");
}

}  // namespace mhq
