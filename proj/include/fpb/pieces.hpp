#pragma once

#include <array>
#include <string_view>

#include "fpb/error.hpp"
#include "fpb/geom.hpp"

namespace fpb {

enum class PieceKind { BigTriangle, MediumTriangle, SmallTriangle, Square, Parallelogram };

constexpr int kPieceCount = 7;

constexpr std::string_view to_string(PieceKind k) noexcept
{
  switch (k) {
    case PieceKind::BigTriangle: return "big_tri";
    case PieceKind::MediumTriangle: return "medium_tri";
    case PieceKind::SmallTriangle: return "small_tri";
    case PieceKind::Square: return "square";
    case PieceKind::Parallelogram: return "parallelogram";
  }
  return "unknown";
}

inline PieceKind piece_kind_from_string(std::string_view s)
{
  if (s == "big_tri") return PieceKind::BigTriangle;
  if (s == "medium_tri") return PieceKind::MediumTriangle;
  if (s == "small_tri") return PieceKind::SmallTriangle;
  if (s == "square") return PieceKind::Square;
  if (s == "parallelogram") return PieceKind::Parallelogram;
  fail(ErrorCode::ParseError, "unknown piece kind '" + std::string(s) + "'");
}

/// Piece ids 0..6 in inventory order.
constexpr std::array<PieceKind, kPieceCount> kPieceKinds{
    PieceKind::BigTriangle,   PieceKind::BigTriangle, PieceKind::MediumTriangle, PieceKind::SmallTriangle,
    PieceKind::SmallTriangle, PieceKind::Square,      PieceKind::Parallelogram,
};

constexpr ShapeClass shape_of(PieceKind k) noexcept
{
  switch (k) {
    case PieceKind::Square: return ShapeClass::Square;
    case PieceKind::Parallelogram: return ShapeClass::Parallelogram;
    default: return ShapeClass::Triangle;
  }
}

/// Fraction of the full square occupied by each piece kind.
constexpr double area_fraction(PieceKind k) noexcept
{
  switch (k) {
    case PieceKind::BigTriangle: return 0.25;
    case PieceKind::SmallTriangle: return 0.0625;
    default: return 0.125;
  }
}

/// The seven pieces of the unit-square dissection, in piece-id order and in
/// positive winding. These polygons are the canonical orientation (rotation 0).
inline const std::array<Polygon, kPieceCount>& canonical_pieces()
{
  static const std::array<Polygon, kPieceCount> pieces = [] {
    std::array<Polygon, kPieceCount> p{
        Polygon{{{0, 0}, {1, 0}, {0.5, 0.5}}},
        Polygon{{{0, 0}, {0.5, 0.5}, {0, 1}}},
        Polygon{{{1, 0.5}, {1, 1}, {0.5, 1}}},
        Polygon{{{0.5, 0.5}, {0.75, 0.25}, {0.75, 0.75}}},
        Polygon{{{0, 1}, {0.25, 0.75}, {0.5, 1}}},
        Polygon{{{0.5, 0.5}, {0.75, 0.75}, {0.5, 1}, {0.25, 0.75}}},
        Polygon{{{0.75, 0.25}, {1, 0}, {1, 0.5}, {0.75, 0.75}}},
    };
    for (auto& poly : p) poly = normalize_winding(poly);
    return p;
  }();
  return pieces;
}

/// Canonical polygon for a kind (first piece id of that kind).
inline const Polygon& canonical_polygon(PieceKind k)
{
  for (int i = 0; i < kPieceCount; ++i) {
    if (kPieceKinds[i] == k) return canonical_pieces()[i];
  }
  return canonical_pieces()[0];
}

}  // namespace fpb
