#include "mmlatent/image.hpp"

#include <cmath>
#include <fstream>

#include "mmlatent/errors.hpp"

namespace mmlatent {

Image make_image(int h, int w, int c, double fill) {
    return Image{tensor_full({h, w, c}, fill, false)};
}

Image white_image(int h, int w, int c) { return make_image(h, w, c, 1.0); }

void save_ppm(const Image& img, const std::string& path) {
    if (img.channels() != 3) throw ContractError("save_ppm: 3-channel image required");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("save_ppm: cannot write " + path);
    f << "P6\n" << img.width() << ' ' << img.height() << "\n255\n";
    std::string bytes;
    bytes.reserve(img.pixels->data.size());
    for (double v : img.pixels->data) {
        const double clamped = std::min(1.0, std::max(0.0, v));
        bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(clamped * 255.0))));
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("save_ppm: short write to " + path);
}

Image load_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("load_ppm: cannot read " + path);
    std::string magic;
    int w = 0, h = 0, maxval = 0;
    f >> magic >> w >> h >> maxval;
    if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255)
        throw DataError("load_ppm: " + path + " is not an 8-bit P6 file");
    f.get();  // single whitespace after the header
    std::string bytes(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3, '\0');
    f.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (f.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw DataError("load_ppm: " + path + " is truncated");
    std::vector<double> px(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i)
        px[i] = static_cast<double>(static_cast<unsigned char>(bytes[i])) / 255.0;
    return Image{tensor_from({h, w, 3}, std::move(px), false)};
}

}  // namespace mmlatent
