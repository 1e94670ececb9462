#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mmlatent/tensor.hpp"

namespace mmlatent {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    std::int64_t worst_index = -1;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
};

/// Central-difference verification of reverse-mode gradients.
///
/// `f` must rebuild its graph from the current parameter values on every call
/// and return the scalar loss. Requires f64 mode (f32 has no headroom for the
/// difference quotient) and a deterministic f — two forward passes must agree
/// bitwise, otherwise ContractError.
///
/// Error metric per coordinate: |analytic - central| / max(1, |analytic|).
GradCheckReport grad_check(const std::function<TensorPtr()>& f,
                           const std::vector<std::pair<std::string, TensorPtr>>& params,
                           double eps = 1e-5);

double grad_check_max_err(const std::function<TensorPtr()>& f,
                          const std::vector<TensorPtr>& params, double eps = 1e-5);

}  // namespace mmlatent
