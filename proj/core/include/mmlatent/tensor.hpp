#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "mmlatent/dtype.hpp"
#include "mmlatent/prng.hpp"

namespace mmlatent {

struct Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

/// Dense row-major n-d float tensor participating in a dynamically taped
/// reverse-mode differentiation graph. Nodes own their parents via shared
/// pointers, so a loss tensor keeps its whole graph alive; dropping the loss
/// frees the tape while leaf parameters persist.
///
/// `grad` starts empty and is only materialised when a backward pass reaches
/// the tensor; an empty grad therefore means "not touched by any loss yet".
/// Gradients accumulate (sum) across uses and across backward calls until
/// `zero_grad`.
struct Tensor : std::enable_shared_from_this<Tensor> {
    std::vector<std::int64_t> shape;
    std::vector<double> data;  // values always representable at `dtype` precision
    Dtype dtype = Dtype::f32;
    bool requires_grad = false;
    std::vector<double> grad;

    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backward_fn;

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
    bool is_scalar() const { return numel() == 1; }

    /// Extent along axis (supports negative axes).
    std::int64_t extent(std::int64_t axis) const;

    double item() const;

    void ensure_grad();
    void zero_grad() { grad.clear(); }

    /// grad value at flat index; 0 when grad is unmaterialised.
    double grad_at(std::int64_t i) const {
        return grad.empty() ? 0.0 : grad[static_cast<std::size_t>(i)];
    }

    std::string shape_str() const;
};

std::string shape_to_string(const std::vector<std::int64_t>& shape);
std::int64_t shape_numel(const std::vector<std::int64_t>& shape);

/// Leaf constructors. Values are quantized to the active dtype.
TensorPtr tensor_zeros(std::vector<std::int64_t> shape, bool requires_grad = false);
TensorPtr tensor_full(std::vector<std::int64_t> shape, double value, bool requires_grad = false);
TensorPtr tensor_from(std::vector<std::int64_t> shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr tensor_scalar(double value, bool requires_grad = false);
TensorPtr tensor_randn(Prng& rng, std::vector<std::int64_t> shape, double stddev,
                       bool requires_grad = false);
TensorPtr tensor_uniform(Prng& rng, std::vector<std::int64_t> shape, double lo, double hi,
                         bool requires_grad = false);

/// Reverse-mode sweep from a scalar loss. Seeds d(loss)/d(loss) = 1 and
/// accumulates into every reachable requires_grad tensor. Throws
/// ContractError if `loss` is not scalar.
void backward(const TensorPtr& loss);

void zero_grads(const std::vector<TensorPtr>& params);

/// Autograd tape switch. While disabled, ops compute values but record no
/// parents/backward closures (used by inference paths).
bool grad_enabled();

class NoGradGuard {
  public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

  private:
    bool saved_;
};

}  // namespace mmlatent
