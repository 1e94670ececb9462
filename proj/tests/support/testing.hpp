#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mmlatent/ops.hpp"
#include "mmlatent/prng.hpp"
#include "mmlatent/tensor.hpp"

namespace mmlatent::testing {

/// Independent central-difference derivative of a scalar-valued rebuild
/// function w.r.t. one coordinate of `param`. Used as the oracle for
/// backward(); deliberately bypasses grad_check so the two verification
/// paths stay independent.
inline double fd_grad(const std::function<double()>& f, const TensorPtr& param, std::int64_t i,
                      double eps = 1e-5) {
    const double saved = param->data[static_cast<std::size_t>(i)];
    param->data[static_cast<std::size_t>(i)] = saved + eps;
    const double plus = f();
    param->data[static_cast<std::size_t>(i)] = saved - eps;
    const double minus = f();
    param->data[static_cast<std::size_t>(i)] = saved;
    return (plus - minus) / (2.0 * eps);
}

inline bool all_close(const std::vector<double>& a, const std::vector<double>& b,
                      double tol = 1e-9) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::abs(a[i] - b[i]) > tol) return false;
    return true;
}

inline TensorPtr random_tensor(Prng& rng, std::vector<std::int64_t> shape, bool requires_grad,
                               double span = 1.0) {
    return tensor_uniform(rng, std::move(shape), -span, span, requires_grad);
}

}  // namespace mmlatent::testing
