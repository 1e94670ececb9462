#include "mmlatent/latent.hpp"

#include "mmlatent/errors.hpp"
#include "mmlatent/ops.hpp"

namespace mmlatent {

LatentSequence grid_to_sequence(const LatentGrid& g) {
    if (!g.z || g.z->rank() != 3)
        throw ContractError("grid_to_sequence: [c x h x w] grid required");
    const std::int64_t c = g.z->shape[0], h = g.z->shape[1], w = g.z->shape[2];
    return LatentSequence{transpose(reshape(g.z, {c, h * w}))};
}

LatentGrid sequence_to_grid(const LatentSequence& s, std::int64_t h, std::int64_t w) {
    if (!s.rows || s.rows->rank() != 2)
        throw ContractError("sequence_to_grid: [(h*w) x c] sequence required");
    if (s.rows->shape[0] != h * w)
        throw ShapeError("sequence_to_grid: " + s.rows->shape_str() + " does not flatten " +
                         std::to_string(h) + "x" + std::to_string(w));
    const std::int64_t c = s.rows->shape[1];
    return LatentGrid{reshape(transpose(s.rows), {c, h, w})};
}

}  // namespace mmlatent
