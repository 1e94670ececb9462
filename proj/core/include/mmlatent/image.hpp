#pragma once

#include <string>

#include "mmlatent/tensor.hpp"

namespace mmlatent {

/// An image is a constant [H x W x C] tensor with values in [0, 1].
struct Image {
    TensorPtr pixels;

    int height() const { return static_cast<int>(pixels->shape[0]); }
    int width() const { return static_cast<int>(pixels->shape[1]); }
    int channels() const { return static_cast<int>(pixels->shape[2]); }

    double at(int y, int x, int c) const {
        return pixels->data[static_cast<std::size_t>((y * width() + x) * channels() + c)];
    }
};

Image make_image(int h, int w, int c, double fill = 0.0);
/// All-ones white image (the blank-image policy input).
Image white_image(int h, int w, int c);

/// Binary PPM (P6), 8-bit, value v stored as round(v*255) and read back as
/// byte/255.
void save_ppm(const Image& img, const std::string& path);
Image load_ppm(const std::string& path);

}  // namespace mmlatent
