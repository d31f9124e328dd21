#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string_view>
#include <vector>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"

namespace fpb {

enum class IconShape { Star, Circle, Triangle, Diamond, Heart, Cross, Hexagon, Ring };
enum class IconSplit { Seen, Unseen };

constexpr std::string_view to_string(IconShape s) noexcept
{
  constexpr std::array<std::string_view, 8> names{"star", "circle", "triangle", "diamond",
                                                  "heart", "cross", "hexagon", "ring"};
  return names[static_cast<int>(s)];
}

constexpr std::string_view to_string(IconSplit s) noexcept { return s == IconSplit::Seen ? "seen" : "unseen"; }

struct IconSpec {
  int icon_id = 0;
  IconShape base_shape = IconShape::Star;
  ColorRGB fill;
  ColorRGB accent;
  IconSplit split = IconSplit::Seen;
};

constexpr int kSeenIconCount = 40;
constexpr int kUnseenIconCount = 10;
constexpr int kIconCount = kSeenIconCount + kUnseenIconCount;

namespace detail {

struct IconPaint {
  ColorRGB fill;
  ColorRGB accent;
};

// Fills 0-4 are used by the seen set, 5-6 only by the unseen set. Every
// colour differs from both white and the goal red by at least 80 in some channel.
constexpr std::array<IconPaint, 7> kIconPaints{{
    {{40, 90, 220}, {250, 220, 40}},   // blue
    {{30, 150, 60}, {250, 220, 40}},   // green
    {{140, 60, 180}, {250, 220, 40}},  // purple
    {{245, 140, 20}, {30, 30, 80}},    // orange
    {{0, 140, 150}, {250, 220, 40}},   // teal
    {{130, 80, 30}, {250, 220, 40}},   // brown
    {{235, 90, 170}, {30, 30, 80}},    // pink
}};

}  // namespace detail

/// Icons 0-39 are the seen set (8 shapes x 5 fills, id = shape * 5 + fill);
/// 40-49 are the unseen set (first 5 shapes x 2 extra fills).
inline IconSpec icon_spec(int icon_id)
{
  if (icon_id < 0 || icon_id >= kIconCount) fail(ErrorCode::InvalidManifest, "icon_id out of range");
  IconSpec s;
  s.icon_id = icon_id;
  int shape = 0, paint = 0;
  if (icon_id < kSeenIconCount) {
    shape = icon_id / 5;
    paint = icon_id % 5;
    s.split = IconSplit::Seen;
  } else {
    shape = (icon_id - kSeenIconCount) / 2;
    paint = 5 + (icon_id - kSeenIconCount) % 2;
    s.split = IconSplit::Unseen;
  }
  s.base_shape = static_cast<IconShape>(shape);
  s.fill = detail::kIconPaints[paint].fill;
  s.accent = detail::kIconPaints[paint].accent;
  return s;
}

inline std::vector<int> icon_pool(IconSplit split)
{
  std::vector<int> out;
  const int lo = split == IconSplit::Seen ? 0 : kSeenIconCount;
  const int hi = split == IconSplit::Seen ? kSeenIconCount : kIconCount;
  for (int i = lo; i < hi; ++i) out.push_back(i);
  return out;
}

struct SpriteLayer {
  Polygon poly;
  ColorRGB color;
};

namespace detail {

inline Polygon regular_polygon(int n, double radius, double phase_deg)
{
  Polygon p;
  for (int i = 0; i < n; ++i) {
    const double a = deg_to_rad(phase_deg + 360.0 * i / n);
    p.vertices.push_back({radius * std::cos(a), radius * std::sin(a)});
  }
  return p;
}

inline Polygon base_outline(IconShape s)
{
  switch (s) {
    case IconShape::Star: {
      Polygon p;
      for (int i = 0; i < 10; ++i) {
        const double r = i % 2 == 0 ? 0.5 : 0.21;
        const double a = deg_to_rad(-90.0 + 36.0 * i);
        p.vertices.push_back({r * std::cos(a), r * std::sin(a)});
      }
      return p;
    }
    case IconShape::Circle: return regular_polygon(32, 0.5, 0.0);
    case IconShape::Triangle: return regular_polygon(3, 0.5, -90.0);
    case IconShape::Diamond: return Polygon{{{0, -0.5}, {0.36, 0}, {0, 0.5}, {-0.36, 0}}};
    case IconShape::Heart: {
      Polygon p;
      for (int i = 0; i < 48; ++i) {
        const double t = 2.0 * std::numbers::pi * i / 48;
        const double x = 16 * std::pow(std::sin(t), 3);
        const double y = -(13 * std::cos(t) - 5 * std::cos(2 * t) - 2 * std::cos(3 * t) - std::cos(4 * t));
        p.vertices.push_back({x / 34.0, y / 34.0});
      }
      return p;
    }
    case IconShape::Cross: {
      constexpr double a = 0.17, b = 0.5;
      return Polygon{{{-a, -b}, {a, -b}, {a, -a}, {b, -a}, {b, a}, {a, a}, {a, b}, {-a, b}, {-a, a}, {-b, a}, {-b, -a}, {-a, -a}}};
    }
    case IconShape::Hexagon: return regular_polygon(6, 0.5, 0.0);
    case IconShape::Ring: return regular_polygon(32, 0.5, 0.0);
  }
  return regular_polygon(32, 0.5, 0.0);
}

inline Polygon recentre(const Polygon& p)
{
  const Point2 c = centroid(p);
  return transform_polygon(p, 0.0, {}, Point2{0, 0} - c);
}

}  // namespace detail

/// Sprite in unit coordinates: the outline spans at most [-0.5, 0.5] on each
/// axis and its area centroid sits at the origin. Layers paint in order.
inline std::vector<SpriteLayer> icon_sprite(const IconSpec& icon)
{
  const Polygon outline = detail::recentre(normalize_winding(detail::base_outline(icon.base_shape)));
  std::vector<SpriteLayer> layers{{outline, icon.fill}};
  if (icon.base_shape == IconShape::Ring) {
    layers.push_back({detail::regular_polygon(32, 0.32, 0.0), icon.accent});
    layers.push_back({detail::regular_polygon(32, 0.18, 0.0), icon.fill});
  } else {
    layers.push_back({scale_polygon(outline, 0.4, {0, 0}), icon.accent});
  }
  return layers;
}

}  // namespace fpb
