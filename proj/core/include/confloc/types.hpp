#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace confloc {

/// Source coordinate handled by an independent scalar regression.
enum class Axis : std::size_t { X = 0, Y = 1 };

inline constexpr std::array<Axis, 2> kAxes{Axis::X, Axis::Y};

constexpr std::size_t index(Axis axis) noexcept {
  return static_cast<std::size_t>(axis);
}

constexpr std::string_view to_string(Axis axis) noexcept {
  return axis == Axis::X ? "x" : "y";
}

/// Horizontal source position in meters.
struct Position2 {
  double x = 0.0;
  double y = 0.0;

  double operator[](Axis axis) const noexcept {
    return axis == Axis::X ? x : y;
  }
  double& operator[](Axis axis) noexcept { return axis == Axis::X ? x : y; }

  friend bool operator==(const Position2&, const Position2&) = default;
};

/// Axis-aligned rectangle of admissible source positions, meters.
struct Roi {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(const Position2& p) const noexcept {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
  }
  double lower(Axis axis) const noexcept {
    return axis == Axis::X ? x_min : y_min;
  }
  double upper(Axis axis) const noexcept {
    return axis == Axis::X ? x_max : y_max;
  }
  double extent(Axis axis) const noexcept { return upper(axis) - lower(axis); }
};

}  // namespace confloc
