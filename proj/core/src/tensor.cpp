#include "mmlatent/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {
// thread_local so parallel experiment runs can toggle independently
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : saved_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = saved_; }

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

std::int64_t shape_numel(const std::vector<std::int64_t>& shape) {
    std::int64_t n = 1;
    for (std::int64_t e : shape) n *= e;
    return n;
}

std::int64_t Tensor::extent(std::int64_t axis) const {
    const std::int64_t r = rank();
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        throw ContractError("axis " + std::to_string(axis) + " out of range for rank " +
                            std::to_string(r));
    return shape[static_cast<std::size_t>(axis)];
}

double Tensor::item() const {
    if (!is_scalar())
        throw ContractError("item() requires a scalar tensor, got shape " + shape_str());
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.empty()) grad.assign(data.size(), 0.0);
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

namespace {

TensorPtr make_leaf(std::vector<std::int64_t> shape, bool requires_grad) {
    for (std::int64_t e : shape) {
        if (e <= 0)
            throw ShapeError("tensor extents must be positive, got " + shape_to_string(shape));
    }
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->dtype = default_dtype();
    t->requires_grad = requires_grad;
    t->data.assign(static_cast<std::size_t>(shape_numel(t->shape)), 0.0);
    return t;
}

}  // namespace

TensorPtr tensor_zeros(std::vector<std::int64_t> shape, bool requires_grad) {
    return make_leaf(std::move(shape), requires_grad);
}

TensorPtr tensor_full(std::vector<std::int64_t> shape, double value, bool requires_grad) {
    auto t = make_leaf(std::move(shape), requires_grad);
    const double v = quantize(value, t->dtype);
    std::fill(t->data.begin(), t->data.end(), v);
    return t;
}

TensorPtr tensor_from(std::vector<std::int64_t> shape, std::vector<double> values,
                      bool requires_grad) {
    auto t = make_leaf(std::move(shape), requires_grad);
    if (static_cast<std::int64_t>(values.size()) != t->numel())
        throw ShapeError("tensor_from: " + std::to_string(values.size()) +
                         " values for shape " + t->shape_str());
    for (auto& v : values) v = quantize(v, t->dtype);
    t->data = std::move(values);
    return t;
}

TensorPtr tensor_scalar(double value, bool requires_grad) {
    return tensor_full({1}, value, requires_grad);
}

TensorPtr tensor_randn(Prng& rng, std::vector<std::int64_t> shape, double stddev,
                       bool requires_grad) {
    auto t = make_leaf(std::move(shape), requires_grad);
    for (auto& v : t->data) v = quantize(stddev * rng.normal(), t->dtype);
    return t;
}

TensorPtr tensor_uniform(Prng& rng, std::vector<std::int64_t> shape, double lo, double hi,
                         bool requires_grad) {
    auto t = make_leaf(std::move(shape), requires_grad);
    for (auto& v : t->data) v = quantize(rng.uniform(lo, hi), t->dtype);
    return t;
}

void backward(const TensorPtr& loss) {
    if (!loss) throw ContractError("backward: null loss");
    if (!loss->is_scalar())
        throw ContractError("backward requires a scalar loss, got shape " + loss->shape_str());

    // Iterative post-order DFS over the requires_grad subgraph.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> visited;
    struct Frame {
        Tensor* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    if (loss->requires_grad) stack.push_back({loss.get(), 0});
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent == 0) {
            if (visited.count(f.node)) {
                stack.pop_back();
                continue;
            }
            visited.insert(f.node);
        }
        if (f.next_parent < f.node->parents.size()) {
            Tensor* p = f.node->parents[f.next_parent++].get();
            if (p->requires_grad && !visited.count(p)) stack.push_back({p, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    loss->ensure_grad();
    loss->grad[0] += 1.0;

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn) {
            node->ensure_grad();
            node->backward_fn(*node);
        }
    }
}

void zero_grads(const std::vector<TensorPtr>& params) {
    for (const auto& p : params)
        if (p) p->zero_grad();
}

}  // namespace mmlatent
