#pragma once

#include "mmlatent/tensor.hpp"

namespace mmlatent {

/// Spatial image latent, [c_z x h x w], scale factor already applied.
struct LatentGrid {
    TensorPtr z;

    std::int64_t channels() const { return z->shape[0]; }
    std::int64_t grid_h() const { return z->shape[1]; }
    std::int64_t grid_w() const { return z->shape[2]; }
};

/// Row-major flattening of a LatentGrid: row i*w+j holds the channel vector
/// of cell (i, j). Bijective with its grid.
struct LatentSequence {
    TensorPtr rows;  // [(h*w) x c_z]
};

LatentSequence grid_to_sequence(const LatentGrid& g);
LatentGrid sequence_to_grid(const LatentSequence& s, std::int64_t h, std::int64_t w);

}  // namespace mmlatent
