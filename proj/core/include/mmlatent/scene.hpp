#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mmlatent/image.hpp"

namespace mmlatent {

enum class ShapeKind { circle, square, triangle };
enum class ColorKind { red, green, blue, yellow };

constexpr int kNumShapes = 3;
constexpr int kNumColors = 4;

const char* shape_name(ShapeKind s);
const char* shape_plural(ShapeKind s);
const char* color_name(ColorKind c);

struct Cell {
    bool occupied = false;
    ShapeKind shape = ShapeKind::circle;
    ColorKind color = ColorKind::red;
};

/// A g x g grid of optionally occupied cells; every question about a scene
/// is exactly answerable from this spec.
struct SceneSpec {
    int grid = 4;
    std::vector<Cell> cells;  // grid*grid, row major

    static SceneSpec empty(int grid = 4);

    Cell& at(int r, int c) { return cells[static_cast<std::size_t>(r * grid + c)]; }
    const Cell& at(int r, int c) const { return cells[static_cast<std::size_t>(r * grid + c)]; }

    int count_of(ColorKind color, ShapeKind shape) const;
    int color_count(ColorKind color) const;
    bool has(ColorKind color, ShapeKind shape) const;
    int occupied_count() const;
};

/// Deterministic 32x32x3 rasterization, 8-pixel cells on a white background.
/// Distinct (shape, color) pairs produce distinct pixels.
Image render_scene(const SceneSpec& spec);

}  // namespace mmlatent
