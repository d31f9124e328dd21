#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"

namespace fpb {

/// Binary image, one byte per pixel (0 or 1), row-major.
class RasterMask {
 public:
  RasterMask() = default;
  RasterMask(int width, int height) : width_(width), height_(height), bits_(checked_size(width, height), 0) {}

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return bits_.empty(); }

  bool at(int x, int y) const noexcept { return bits_[index(x, y)] != 0; }
  bool get(int x, int y) const noexcept
  {
    return x >= 0 && y >= 0 && x < width_ && y < height_ && bits_[index(x, y)] != 0;
  }
  void set(int x, int y, bool v = true) noexcept { bits_[index(x, y)] = v ? 1 : 0; }

  std::uint8_t* row(int y) noexcept { return bits_.data() + static_cast<std::size_t>(y) * width_; }
  const std::uint8_t* row(int y) const noexcept { return bits_.data() + static_cast<std::size_t>(y) * width_; }
  std::vector<std::uint8_t>& bits() noexcept { return bits_; }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  long count() const noexcept
  {
    long n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  bool same_shape(const RasterMask& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

  friend bool operator==(const RasterMask&, const RasterMask&) = default;

 private:
  static std::size_t checked_size(int w, int h)
  {
    if (w <= 0 || h <= 0) fail(ErrorCode::ShapeMismatch, "mask dimensions must be positive");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
  std::size_t index(int x, int y) const noexcept { return static_cast<std::size_t>(y) * width_ + x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Scanline fill. Pixel (i, j) is covered iff its center (i+0.5, j+0.5) is
/// inside the polygon under the even-odd rule, with left edges inclusive and
/// right edges exclusive. Calls emit(j, x_begin, x_end) for each covered run.
template <typename Emit>
void for_each_span(const Polygon& poly, int canvas_w, int canvas_h, Emit&& emit)
{
  const auto n = poly.size();
  if (n < 3 || canvas_w <= 0 || canvas_h <= 0) return;
  const BBox bb = bounding_box(poly);
  const int j0 = std::max(0, static_cast<int>(std::ceil(bb.y0 - 0.5)));
  const int j1 = std::min(canvas_h - 1, static_cast<int>(std::floor(bb.y1 - 0.5)));
  std::vector<double> xs;
  xs.reserve(n);
  for (int j = j0; j <= j1; ++j) {
    const double y = j + 0.5;
    xs.clear();
    for (std::size_t k = 0; k < n; ++k) {
      Point2 a = poly[k];
      Point2 b = poly[(k + 1) % n];
      if ((a.y <= y) == (b.y <= y)) continue;
      // Canonical endpoint order so a shared edge yields the same crossing in
      // every polygon that uses it.
      if (b.y < a.y || (b.y == a.y && b.x < a.x)) std::swap(a, b);
      xs.push_back(a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const double i0 = std::ceil(xs[k] - 0.5);
      const double i1 = std::ceil(xs[k + 1] - 0.5);
      const int b0 = static_cast<int>(std::clamp(i0, 0.0, static_cast<double>(canvas_w)));
      const int b1 = static_cast<int>(std::clamp(i1, 0.0, static_cast<double>(canvas_w)));
      if (b0 < b1) emit(j, b0, b1);
    }
  }
}

inline RasterMask rasterize(const Polygon& poly, int canvas_w, int canvas_h)
{
  RasterMask m(canvas_w, canvas_h);
  for_each_span(poly, canvas_w, canvas_h, [&](int j, int x0, int x1) {
    std::fill(m.row(j) + x0, m.row(j) + x1, std::uint8_t{1});
  });
  return m;
}

inline void require_same_shape(const RasterMask& a, const RasterMask& b)
{
  if (!a.same_shape(b)) fail(ErrorCode::ShapeMismatch, "mask dimensions differ");
}

inline long intersection_count(const RasterMask& a, const RasterMask& b)
{
  require_same_shape(a, b);
  long n = 0;
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) n += x[i] & y[i];
  return n;
}

/// |a ∩ b| / |a ∪ b|; two empty masks count as a perfect match.
inline double mask_iou(const RasterMask& a, const RasterMask& b)
{
  require_same_shape(a, b);
  long inter = 0, uni = 0;
  const auto& x = a.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < x.size(); ++i) {
    inter += x[i] & y[i];
    uni += x[i] | y[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline RasterMask mask_union(const RasterMask& a, const RasterMask& b)
{
  require_same_shape(a, b);
  RasterMask out = a;
  auto& o = out.bits();
  const auto& y = b.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] |= y[i];
  return out;
}

inline void merge_into(RasterMask& dst, const RasterMask& src)
{
  require_same_shape(dst, src);
  auto& o = dst.bits();
  const auto& y = src.bits();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] |= y[i];
}

/// Square (Chebyshev) dilation by `radius` pixels.
inline RasterMask dilate(const RasterMask& m, int radius)
{
  if (radius <= 0) return m;
  const int w = m.width(), h = m.height();
  RasterMask tmp(w, h), out(w, h);
  for (int y = 0; y < h; ++y) {
    const auto* src = m.row(y);
    auto* dst = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      if (!src[x]) continue;
      const int a = std::max(0, x - radius), b = std::min(w - 1, x + radius);
      std::fill(dst + a, dst + b + 1, std::uint8_t{1});
    }
  }
  for (int y = 0; y < h; ++y) {
    const auto* src = tmp.row(y);
    for (int x = 0; x < w; ++x) {
      if (!src[x]) continue;
      const int a = std::max(0, y - radius), b = std::min(h - 1, y + radius);
      for (int yy = a; yy <= b; ++yy) out.row(yy)[x] = 1;
    }
  }
  return out;
}

struct ComponentStats {
  int label = 0;
  long area = 0;
  Point2 centroid;  // mean of pixel centers
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounds
  int seed_index = 0;  // first pixel in scan order
};

/// 4-connected labelling. labels[i] is 0 for background, else 1-based label.
/// Stats are sorted by area descending, ties by scan order of the first pixel.
struct Labelling {
  std::vector<int> labels;
  std::vector<ComponentStats> components;
};

inline Labelling label_components(const RasterMask& mask)
{
  const int w = mask.width(), h = mask.height();
  Labelling out;
  out.labels.assign(static_cast<std::size_t>(w) * h, 0);
  const auto& bits = mask.bits();
  std::vector<int> stack;
  int next = 0;
  for (int start = 0; start < w * h; ++start) {
    if (!bits[start] || out.labels[start]) continue;
    ++next;
    ComponentStats st;
    st.label = next;
    st.seed_index = start;
    st.x0 = st.x1 = start % w;
    st.y0 = st.y1 = start / w;
    double sx = 0, sy = 0;
    out.labels[start] = next;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int x = p % w, y = p / w;
      ++st.area;
      sx += x + 0.5;
      sy += y + 0.5;
      st.x0 = std::min(st.x0, x);
      st.x1 = std::max(st.x1, x);
      st.y0 = std::min(st.y0, y);
      st.y1 = std::max(st.y1, y);
      auto visit = [&](int q) {
        if (bits[q] && !out.labels[q]) {
          out.labels[q] = next;
          stack.push_back(q);
        }
      };
      if (x > 0) visit(p - 1);
      if (x + 1 < w) visit(p + 1);
      if (y > 0) visit(p - w);
      if (y + 1 < h) visit(p + w);
    }
    st.centroid = {sx / static_cast<double>(st.area), sy / static_cast<double>(st.area)};
    out.components.push_back(st);
  }
  std::stable_sort(out.components.begin(), out.components.end(),
                   [](const ComponentStats& a, const ComponentStats& b) { return a.area > b.area; });
  return out;
}

struct Component {
  RasterMask mask;
  long area = 0;
  Point2 centroid;
};

inline RasterMask component_mask(const Labelling& lab, int label, int w, int h)
{
  RasterMask m(w, h);
  auto& bits = m.bits();
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = lab.labels[i] == label ? 1 : 0;
  return m;
}

inline std::vector<Component> connected_components(const RasterMask& mask)
{
  const Labelling lab = label_components(mask);
  std::vector<Component> out;
  out.reserve(lab.components.size());
  for (const auto& st : lab.components) {
    out.push_back({component_mask(lab, st.label, mask.width(), mask.height()), st.area, st.centroid});
  }
  return out;
}

/// Largest 4-connected component, or an empty mask of the same size.
inline RasterMask largest_component(const RasterMask& mask)
{
  const Labelling lab = label_components(mask);
  if (lab.components.empty()) return RasterMask(mask.width(), mask.height());
  return component_mask(lab, lab.components.front().label, mask.width(), mask.height());
}

}  // namespace fpb
