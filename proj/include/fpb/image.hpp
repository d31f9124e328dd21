#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"
#include "fpb/raster.hpp"

namespace fpb {

/// 8-bit RGB raster, row-major, three bytes per pixel.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, ColorRGB fill = {255, 255, 255}) : width_(width), height_(height)
  {
    if (width <= 0 || height <= 0) fail(ErrorCode::ShapeMismatch, "frame dimensions must be positive");
    rgb_.resize(static_cast<std::size_t>(width) * height * 3);
    this->fill(fill);
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::vector<std::uint8_t>& data() noexcept { return rgb_; }
  const std::vector<std::uint8_t>& data() const noexcept { return rgb_; }

  ColorRGB at(int x, int y) const noexcept
  {
    const auto* p = px(x, y);
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, ColorRGB c) noexcept
  {
    auto* p = px(x, y);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  void fill(ColorRGB c) noexcept
  {
    for (std::size_t i = 0; i < rgb_.size(); i += 3) {
      rgb_[i] = c.r;
      rgb_[i + 1] = c.g;
      rgb_[i + 2] = c.b;
    }
  }

  /// Fills the pixel rectangle [x0, x1) x [y0, y1), clipped to the frame.
  void fill_rect(int x0, int y0, int x1, int y1, ColorRGB c) noexcept
  {
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    x1 = std::min(x1, width_);
    y1 = std::min(y1, height_);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) set(x, y, c);
    }
  }

  void fill_polygon(const Polygon& poly, ColorRGB c)
  {
    for_each_span(poly, width_, height_, [&](int y, int x0, int x1) {
      for (int x = x0; x < x1; ++x) set(x, y, c);
    });
  }

  /// Composites `c` at opacity alpha over the existing pixels (hard edges).
  void blend_polygon(const Polygon& poly, ColorRGB c, double alpha)
  {
    if (alpha <= 0.0) return;
    if (alpha >= 1.0) return fill_polygon(poly, c);
    auto mix = [alpha](std::uint8_t over, std::uint8_t under) {
      return static_cast<std::uint8_t>(std::lround(alpha * over + (1.0 - alpha) * under));
    };
    for_each_span(poly, width_, height_, [&](int y, int x0, int x1) {
      for (int x = x0; x < x1; ++x) {
        const ColorRGB u = at(x, y);
        set(x, y, {mix(c.r, u.r), mix(c.g, u.g), mix(c.b, u.b)});
      }
    });
  }

  void fill_mask(const RasterMask& m, ColorRGB c, int offset_x = 0, int offset_y = 0)
  {
    for (int y = 0; y < m.height(); ++y) {
      const auto* row = m.row(y);
      for (int x = 0; x < m.width(); ++x) {
        const int fx = x + offset_x, fy = y + offset_y;
        if (row[x] && fx >= 0 && fy >= 0 && fx < width_ && fy < height_) set(fx, fy, c);
      }
    }
  }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::uint8_t* px(int x, int y) noexcept { return rgb_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3; }
  const std::uint8_t* px(int x, int y) const noexcept
  {
    return rgb_.data() + (static_cast<std::size_t>(y) * width_ + x) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> rgb_;
};

/// The video v_0..v_T as an ordered list of equally sized frames.
using FrameSequence = std::vector<Frame>;

inline void validate_sequence(const FrameSequence& seq)
{
  if (seq.empty()) fail(ErrorCode::EmptySequence, "frame sequence is empty");
  for (const auto& f : seq) {
    if (f.width() != seq.front().width() || f.height() != seq.front().height()) {
      fail(ErrorCode::ShapeMismatch, "frames have mixed dimensions");
    }
  }
}

/// Per-pixel temporal median over all frames (lower median for even counts).
inline Frame median_background(const FrameSequence& seq)
{
  validate_sequence(seq);
  Frame out(seq.front().width(), seq.front().height());
  std::vector<std::uint8_t> vals(seq.size());
  auto& dst = out.data();
  const std::size_t mid = (seq.size() - 1) / 2;
  for (std::size_t i = 0; i < dst.size(); ++i) {
    for (std::size_t k = 0; k < seq.size(); ++k) vals[k] = seq[k].data()[i];
    std::nth_element(vals.begin(), vals.begin() + static_cast<std::ptrdiff_t>(mid), vals.end());
    dst[i] = vals[mid];
  }
  return out;
}

}  // namespace fpb
