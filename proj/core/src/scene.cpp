#include "mmlatent/scene.hpp"

#include "mmlatent/errors.hpp"

namespace mmlatent {

const char* shape_name(ShapeKind s) {
    switch (s) {
        case ShapeKind::circle: return "circle";
        case ShapeKind::square: return "square";
        case ShapeKind::triangle: return "triangle";
    }
    throw ContractError("bad shape");
}

const char* shape_plural(ShapeKind s) {
    switch (s) {
        case ShapeKind::circle: return "circles";
        case ShapeKind::square: return "squares";
        case ShapeKind::triangle: return "triangles";
    }
    throw ContractError("bad shape");
}

const char* color_name(ColorKind c) {
    switch (c) {
        case ColorKind::red: return "red";
        case ColorKind::green: return "green";
        case ColorKind::blue: return "blue";
        case ColorKind::yellow: return "yellow";
    }
    throw ContractError("bad color");
}

SceneSpec SceneSpec::empty(int grid) {
    SceneSpec s;
    s.grid = grid;
    s.cells.assign(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid), Cell{});
    return s;
}

int SceneSpec::count_of(ColorKind color, ShapeKind shape) const {
    int n = 0;
    for (const auto& c : cells)
        if (c.occupied && c.color == color && c.shape == shape) ++n;
    return n;
}

int SceneSpec::color_count(ColorKind color) const {
    int n = 0;
    for (const auto& c : cells)
        if (c.occupied && c.color == color) ++n;
    return n;
}

bool SceneSpec::has(ColorKind color, ShapeKind shape) const {
    return count_of(color, shape) > 0;
}

int SceneSpec::occupied_count() const {
    int n = 0;
    for (const auto& c : cells) n += c.occupied ? 1 : 0;
    return n;
}

namespace {

constexpr int kCellPx = 8;

struct Rgb {
    unsigned char r, g, b;
};

Rgb color_rgb(ColorKind c) {
    switch (c) {
        case ColorKind::red: return {220, 30, 30};
        case ColorKind::green: return {30, 200, 30};
        case ColorKind::blue: return {30, 30, 220};
        case ColorKind::yellow: return {230, 220, 30};
    }
    throw ContractError("bad color");
}

bool inside_shape(ShapeKind s, int y, int x) {
    switch (s) {
        case ShapeKind::square:
            return y >= 1 && y <= 6 && x >= 1 && x <= 6;
        case ShapeKind::circle: {
            const double dy = y - 3.5, dx = x - 3.5;
            return dy * dy + dx * dx <= 10.5;
        }
        case ShapeKind::triangle: {
            if (y < 1 || y > 6) return false;
            const double half = 0.55 * (y - 1) + 0.6;
            return x + 0.0 >= 3.5 - half && x + 0.0 <= 3.5 + half;
        }
    }
    return false;
}

}  // namespace

Image render_scene(const SceneSpec& spec) {
    const int size = spec.grid * kCellPx;
    std::vector<double> px(static_cast<std::size_t>(size) * static_cast<std::size_t>(size) * 3,
                           1.0);
    for (int r = 0; r < spec.grid; ++r) {
        for (int c = 0; c < spec.grid; ++c) {
            const Cell& cell = spec.at(r, c);
            if (!cell.occupied) continue;
            const Rgb rgb = color_rgb(cell.color);
            for (int y = 0; y < kCellPx; ++y) {
                for (int x = 0; x < kCellPx; ++x) {
                    if (!inside_shape(cell.shape, y, x)) continue;
                    const std::size_t base =
                        (static_cast<std::size_t>(r * kCellPx + y) * static_cast<std::size_t>(size) +
                         static_cast<std::size_t>(c * kCellPx + x)) *
                        3;
                    px[base + 0] = rgb.r / 255.0;
                    px[base + 1] = rgb.g / 255.0;
                    px[base + 2] = rgb.b / 255.0;
                }
            }
        }
    }
    return Image{tensor_from({size, size, 3}, std::move(px), false)};
}

}  // namespace mmlatent
