#include "mmlatent/ops.hpp"

#include <algorithm>
#include <cmath>

#include "mmlatent/errors.hpp"

namespace mmlatent {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

TensorPtr new_node(std::vector<std::int64_t> shape, Dtype dt) {
    auto t = std::make_shared<Tensor>();
    t->shape = std::move(shape);
    t->dtype = dt;
    t->data.assign(static_cast<std::size_t>(shape_numel(t->shape)), 0.0);
    return t;
}

void bind_grad(const TensorPtr& r, std::vector<TensorPtr> parents, std::function<void(Tensor&)> fn) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || p->requires_grad;
    if (!grad_enabled() || !needs) return;
    r->requires_grad = true;
    r->parents = std::move(parents);
    r->backward_fn = std::move(fn);
}

Dtype check_dtypes(const char* op, const TensorPtr& a, const TensorPtr& b) {
    if (a->dtype != b->dtype)
        throw ContractError(std::string(op) + ": mixed dtypes " + dtype_name(a->dtype) + " vs " +
                            dtype_name(b->dtype));
    return a->dtype;
}

void require_same_shape(const char* op, const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape)
        throw ShapeError(std::string(op) + ": shape mismatch " + a->shape_str() + " vs " +
                         b->shape_str());
}

void quantize_all(Tensor& t) {
    if (t.dtype == Dtype::f32)
        for (auto& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

// C(+)= A[m x k] * B[k x n]
void mm_nn(const double* A, const double* B, double* C, std::int64_t m, std::int64_t k,
           std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        double* c = C + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = a[p];
            const double* b = B + p * n;
            for (std::int64_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

// C(+)= A[m x n] * B^T, B: [k x n]  ->  C: [m x k]
void mm_nt(const double* A, const double* B, double* C, std::int64_t m, std::int64_t n,
           std::int64_t k) {
    for (std::int64_t i = 0; i < m; ++i) {
        const double* a = A + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double* b = B + p * n;
            double s = 0.0;
            for (std::int64_t j = 0; j < n; ++j) s += a[j] * b[j];
            C[i * k + p] += s;
        }
    }
}

// C(+)= A^T * B, A: [m x k], B: [m x n]  ->  C: [k x n]
void mm_tn(const double* A, const double* B, double* C, std::int64_t m, std::int64_t k,
           std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const double* a = A + i * k;
        const double* b = B + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const double av = a[p];
            if (av == 0.0) continue;
            double* c = C + p * n;
            for (std::int64_t j = 0; j < n; ++j) c[j] += av * b[j];
        }
    }
}

using UnaryFn = double (*)(double);
using UnaryGradFn = double (*)(double x, double y);  // dy/dx from input and output

TensorPtr unary_op(const char* /*name*/, const TensorPtr& x, UnaryFn f, UnaryGradFn df) {
    auto r = new_node(x->shape, x->dtype);
    const std::size_t n = x->data.size();
    for (std::size_t i = 0; i < n; ++i) r->data[i] = quantize(f(x->data[i]), x->dtype);
    bind_grad(r, {x}, [x, f, df](Tensor& self) {
        x->ensure_grad();
        const std::size_t n = x->data.size();
        for (std::size_t i = 0; i < n; ++i)
            x->grad[i] += df(x->data[i], self.data[i]) * self.grad[i];
        (void)f;
    });
    return r;
}

double sigmoid_fwd(double v) {
    if (v >= 0.0) {
        const double e = std::exp(-v);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

// Generic permutation op: out[i] = in[perm[i]]. Backward scatter-adds.
TensorPtr permute_op(const TensorPtr& x, std::vector<std::int64_t> out_shape,
                     std::vector<std::int64_t> perm) {
    auto r = new_node(std::move(out_shape), x->dtype);
    const std::size_t n = r->data.size();
    for (std::size_t i = 0; i < n; ++i) r->data[i] = x->data[static_cast<std::size_t>(perm[i])];
    bind_grad(r, {x}, [x, perm = std::move(perm)](Tensor& self) {
        x->ensure_grad();
        const std::size_t n = self.data.size();
        for (std::size_t i = 0; i < n; ++i)
            x->grad[static_cast<std::size_t>(perm[i])] += self.grad[i];
    });
    return r;
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("add", a, b);
    const Dtype dt = check_dtypes("add", a, b);
    auto r = new_node(a->shape, dt);
    const std::size_t n = a->data.size();
    for (std::size_t i = 0; i < n; ++i) r->data[i] = quantize(a->data[i] + b->data[i], dt);
    bind_grad(r, {a, b}, [a, b](Tensor& self) {
        const std::size_t n = self.data.size();
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) a->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) b->grad[i] += self.grad[i];
        }
    });
    return r;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("sub", a, b);
    const Dtype dt = check_dtypes("sub", a, b);
    auto r = new_node(a->shape, dt);
    const std::size_t n = a->data.size();
    for (std::size_t i = 0; i < n; ++i) r->data[i] = quantize(a->data[i] - b->data[i], dt);
    bind_grad(r, {a, b}, [a, b](Tensor& self) {
        const std::size_t n = self.data.size();
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) a->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) b->grad[i] -= self.grad[i];
        }
    });
    return r;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("mul", a, b);
    const Dtype dt = check_dtypes("mul", a, b);
    auto r = new_node(a->shape, dt);
    const std::size_t n = a->data.size();
    for (std::size_t i = 0; i < n; ++i) r->data[i] = quantize(a->data[i] * b->data[i], dt);
    bind_grad(r, {a, b}, [a, b](Tensor& self) {
        const std::size_t n = self.data.size();
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) a->grad[i] += b->data[i] * self.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) b->grad[i] += a->data[i] * self.grad[i];
        }
    });
    return r;
}

TensorPtr scale(const TensorPtr& x, double c) { return affine(x, c, 0.0); }

TensorPtr affine(const TensorPtr& x, double a, double b) {
    auto r = new_node(x->shape, x->dtype);
    const std::size_t n = x->data.size();
    for (std::size_t i = 0; i < n; ++i) r->data[i] = quantize(a * x->data[i] + b, x->dtype);
    bind_grad(r, {x}, [x, a](Tensor& self) {
        x->ensure_grad();
        const std::size_t n = self.data.size();
        for (std::size_t i = 0; i < n; ++i) x->grad[i] += a * self.grad[i];
    });
    return r;
}

TensorPtr sigmoid(const TensorPtr& x) {
    return unary_op(
        "sigmoid", x, [](double v) { return sigmoid_fwd(v); },
        [](double, double y) { return y * (1.0 - y); });
}

TensorPtr tanh_op(const TensorPtr& x) {
    return unary_op(
        "tanh", x, [](double v) { return std::tanh(v); },
        [](double, double y) { return 1.0 - y * y; });
}

TensorPtr gelu(const TensorPtr& x) {
    return unary_op(
        "gelu", x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * kInvSqrt2)); },
        [](double v, double) {
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            return cdf + v * pdf;
        });
}

TensorPtr exp_op(const TensorPtr& x) {
    return unary_op(
        "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

TensorPtr clamp01(const TensorPtr& x) {
    return unary_op(
        "clamp01", x, [](double v) { return std::min(1.0, std::max(0.0, v)); },
        [](double v, double) { return (v >= 0.0 && v <= 1.0) ? 1.0 : 0.0; });
}

TensorPtr matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != 2 || b->rank() != 2)
        throw ShapeError("matmul: rank-2 tensors required, got " + a->shape_str() + " and " +
                         b->shape_str());
    const std::int64_t m = a->shape[0], k = a->shape[1];
    const std::int64_t k2 = b->shape[0], n = b->shape[1];
    if (k != k2)
        throw ShapeError("matmul: inner extents disagree, " + a->shape_str() + " x " +
                         b->shape_str());
    const Dtype dt = check_dtypes("matmul", a, b);
    auto r = new_node({m, n}, dt);
    mm_nn(a->data.data(), b->data.data(), r->data.data(), m, k, n);
    quantize_all(*r);
    bind_grad(r, {a, b}, [a, b, m, k, n](Tensor& self) {
        if (a->requires_grad) {
            a->ensure_grad();
            mm_nt(self.grad.data(), b->data.data(), a->grad.data(), m, n, k);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            mm_tn(a->data.data(), self.grad.data(), b->grad.data(), m, k, n);
        }
    });
    return r;
}

TensorPtr add_rowvec(const TensorPtr& x, const TensorPtr& b) {
    if (x->rank() != 2)
        throw ShapeError("add_rowvec: rank-2 input required, got " + x->shape_str());
    const std::int64_t n = x->shape[0], d = x->shape[1];
    if (b->numel() != d)
        throw ShapeError("add_rowvec: vector numel " + b->shape_str() + " vs columns of " +
                         x->shape_str());
    const Dtype dt = check_dtypes("add_rowvec", x, b);
    auto r = new_node(x->shape, dt);
    for (std::int64_t i = 0; i < n; ++i)
        for (std::int64_t j = 0; j < d; ++j)
            r->data[static_cast<std::size_t>(i * d + j)] = quantize(
                x->data[static_cast<std::size_t>(i * d + j)] + b->data[static_cast<std::size_t>(j)],
                dt);
    bind_grad(r, {x, b}, [x, b, n, d](Tensor& self) {
        if (x->requires_grad) {
            x->ensure_grad();
            const std::size_t total = self.data.size();
            for (std::size_t i = 0; i < total; ++i) x->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::int64_t i = 0; i < n; ++i)
                for (std::int64_t j = 0; j < d; ++j)
                    b->grad[static_cast<std::size_t>(j)] +=
                        self.grad[static_cast<std::size_t>(i * d + j)];
        }
    });
    return r;
}

TensorPtr transpose(const TensorPtr& x) {
    if (x->rank() != 2) throw ShapeError("transpose: rank-2 input required, got " + x->shape_str());
    const std::int64_t m = x->shape[0], n = x->shape[1];
    std::vector<std::int64_t> perm(static_cast<std::size_t>(m * n));
    for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < m; ++i) perm[static_cast<std::size_t>(j * m + i)] = i * n + j;
    return permute_op(x, {n, m}, std::move(perm));
}

TensorPtr reshape(const TensorPtr& x, std::vector<std::int64_t> new_shape) {
    if (shape_numel(new_shape) != x->numel())
        throw ShapeError("reshape: numel mismatch, " + x->shape_str() + " -> " +
                         shape_to_string(new_shape));
    auto r = new_node(std::move(new_shape), x->dtype);
    r->data = x->data;
    bind_grad(r, {x}, [x](Tensor& self) {
        x->ensure_grad();
        const std::size_t n = self.data.size();
        for (std::size_t i = 0; i < n; ++i) x->grad[i] += self.grad[i];
    });
    return r;
}

TensorPtr slice_cols(const TensorPtr& x, std::int64_t start, std::int64_t len) {
    if (x->rank() != 2) throw ShapeError("slice_cols: rank-2 input required, got " + x->shape_str());
    const std::int64_t m = x->shape[0], n = x->shape[1];
    if (start < 0 || len <= 0 || start + len > n)
        throw ShapeError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + len) + ") out of " + x->shape_str());
    std::vector<std::int64_t> perm(static_cast<std::size_t>(m * len));
    for (std::int64_t i = 0; i < m; ++i)
        for (std::int64_t j = 0; j < len; ++j)
            perm[static_cast<std::size_t>(i * len + j)] = i * n + start + j;
    return permute_op(x, {m, len}, std::move(perm));
}

TensorPtr gather_rows(const TensorPtr& x, const std::vector<std::int64_t>& rows) {
    if (x->rank() != 2) throw ShapeError("gather_rows: rank-2 input required, got " + x->shape_str());
    const std::int64_t m = x->shape[0], n = x->shape[1];
    if (rows.empty()) throw ContractError("gather_rows: empty index list");
    std::vector<std::int64_t> perm;
    perm.reserve(rows.size() * static_cast<std::size_t>(n));
    for (std::int64_t r : rows) {
        if (r < 0 || r >= m)
            throw ContractError("gather_rows: row " + std::to_string(r) + " outside " +
                                x->shape_str());
        for (std::int64_t j = 0; j < n; ++j) perm.push_back(r * n + j);
    }
    return permute_op(x, {static_cast<std::int64_t>(rows.size()), n}, std::move(perm));
}

TensorPtr concat_cols(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ContractError("concat_cols: no inputs");
    const std::int64_t m = parts.front()->shape.empty() ? 0 : parts.front()->shape[0];
    std::int64_t total = 0;
    for (const auto& p : parts) {
        if (p->rank() != 2 || p->shape[0] != m)
            throw ShapeError("concat_cols: incompatible part shape " + p->shape_str());
        check_dtypes("concat_cols", parts.front(), p);
        total += p->shape[1];
    }
    auto r = new_node({m, total}, parts.front()->dtype);
    std::int64_t col = 0;
    for (const auto& p : parts) {
        const std::int64_t w = p->shape[1];
        for (std::int64_t i = 0; i < m; ++i)
            std::copy_n(p->data.begin() + i * w, w, r->data.begin() + i * total + col);
        col += w;
    }
    std::vector<TensorPtr> parents = parts;
    bind_grad(r, parents, [parts, m, total](Tensor& self) {
        std::int64_t col = 0;
        for (const auto& p : parts) {
            const std::int64_t w = p->shape[1];
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::int64_t i = 0; i < m; ++i)
                    for (std::int64_t j = 0; j < w; ++j)
                        p->grad[static_cast<std::size_t>(i * w + j)] +=
                            self.grad[static_cast<std::size_t>(i * total + col + j)];
            }
            col += w;
        }
    });
    return r;
}

TensorPtr concat_rows(const std::vector<TensorPtr>& parts) {
    if (parts.empty()) throw ContractError("concat_rows: no inputs");
    std::vector<std::int64_t> tail(parts.front()->shape.begin() + 1, parts.front()->shape.end());
    std::int64_t rows = 0;
    for (const auto& p : parts) {
        if (p->rank() < 1 ||
            std::vector<std::int64_t>(p->shape.begin() + 1, p->shape.end()) != tail)
            throw ShapeError("concat_rows: incompatible part shape " + p->shape_str());
        check_dtypes("concat_rows", parts.front(), p);
        rows += p->shape[0];
    }
    std::vector<std::int64_t> out_shape = {rows};
    out_shape.insert(out_shape.end(), tail.begin(), tail.end());
    auto r = new_node(std::move(out_shape), parts.front()->dtype);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p->data.begin(), p->data.end(), r->data.begin() + static_cast<std::ptrdiff_t>(off));
        off += p->data.size();
    }
    std::vector<TensorPtr> parents = parts;
    bind_grad(r, parents, [parts](Tensor& self) {
        std::size_t off = 0;
        for (const auto& p : parts) {
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t i = 0; i < p->data.size(); ++i) p->grad[i] += self.grad[off + i];
            }
            off += p->data.size();
        }
    });
    return r;
}

TensorPtr space_to_depth(const TensorPtr& x, std::int64_t block) {
    if (x->rank() != 3)
        throw ShapeError("space_to_depth: [H,W,C] input required, got " + x->shape_str());
    const std::int64_t H = x->shape[0], W = x->shape[1], C = x->shape[2];
    if (block <= 0 || H % block != 0 || W % block != 0)
        throw ShapeError("space_to_depth: block " + std::to_string(block) +
                         " does not divide " + x->shape_str());
    const std::int64_t h = H / block, w = W / block, c_out = C * block * block;
    std::vector<std::int64_t> perm(static_cast<std::size_t>(h * w * c_out));
    std::size_t idx = 0;
    for (std::int64_t i = 0; i < h; ++i)
        for (std::int64_t j = 0; j < w; ++j)
            for (std::int64_t dy = 0; dy < block; ++dy)
                for (std::int64_t dx = 0; dx < block; ++dx)
                    for (std::int64_t c = 0; c < C; ++c)
                        perm[idx++] = ((i * block + dy) * W + (j * block + dx)) * C + c;
    return permute_op(x, {h, w, c_out}, std::move(perm));
}

TensorPtr depth_to_space(const TensorPtr& x, std::int64_t block) {
    if (x->rank() != 3)
        throw ShapeError("depth_to_space: [h,w,C*b*b] input required, got " + x->shape_str());
    const std::int64_t h = x->shape[0], w = x->shape[1], c_in = x->shape[2];
    if (block <= 0 || c_in % (block * block) != 0)
        throw ShapeError("depth_to_space: block " + std::to_string(block) +
                         " incompatible with " + x->shape_str());
    const std::int64_t C = c_in / (block * block);
    const std::int64_t H = h * block, W = w * block;
    std::vector<std::int64_t> perm(static_cast<std::size_t>(H * W * C));
    std::size_t idx = 0;
    for (std::int64_t y = 0; y < H; ++y)
        for (std::int64_t xj = 0; xj < W; ++xj)
            for (std::int64_t c = 0; c < C; ++c) {
                const std::int64_t i = y / block, dy = y % block;
                const std::int64_t j = xj / block, dx = xj % block;
                perm[idx++] = (i * w + j) * c_in + (dy * block + dx) * C + c;
            }
    return permute_op(x, {H, W, C}, std::move(perm));
}

TensorPtr softmax(const TensorPtr& x, std::int64_t axis) {
    const std::int64_t r = x->rank();
    if (r == 0) throw ShapeError("softmax: rank >= 1 required");
    if (axis < 0) axis += r;
    if (axis < 0 || axis >= r)
        throw ContractError("softmax: axis out of range for shape " + x->shape_str());
    for (double v : x->data)
        if (!std::isfinite(v)) throw NumericError("softmax: non-finite input");

    const std::int64_t n = x->shape[static_cast<std::size_t>(axis)];
    std::int64_t outer = 1, inner = 1;
    for (std::int64_t i = 0; i < axis; ++i) outer *= x->shape[static_cast<std::size_t>(i)];
    for (std::int64_t i = axis + 1; i < r; ++i) inner *= x->shape[static_cast<std::size_t>(i)];

    auto out = new_node(x->shape, x->dtype);
    for (std::int64_t o = 0; o < outer; ++o) {
        for (std::int64_t in = 0; in < inner; ++in) {
            const std::int64_t base = o * n * inner + in;
            double mx = x->data[static_cast<std::size_t>(base)];
            for (std::int64_t j = 1; j < n; ++j)
                mx = std::max(mx, x->data[static_cast<std::size_t>(base + j * inner)]);
            double sum = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                const double e = std::exp(x->data[static_cast<std::size_t>(base + j * inner)] - mx);
                out->data[static_cast<std::size_t>(base + j * inner)] = e;
                sum += e;
            }
            const double inv = 1.0 / sum;
            for (std::int64_t j = 0; j < n; ++j) {
                auto& v = out->data[static_cast<std::size_t>(base + j * inner)];
                v = quantize(v * inv, x->dtype);
            }
        }
    }
    bind_grad(out, {x}, [x, outer, n, inner](Tensor& self) {
        x->ensure_grad();
        for (std::int64_t o = 0; o < outer; ++o) {
            for (std::int64_t in = 0; in < inner; ++in) {
                const std::int64_t base = o * n * inner + in;
                double dot = 0.0;
                for (std::int64_t j = 0; j < n; ++j) {
                    const auto k = static_cast<std::size_t>(base + j * inner);
                    dot += self.grad[k] * self.data[k];
                }
                for (std::int64_t j = 0; j < n; ++j) {
                    const auto k = static_cast<std::size_t>(base + j * inner);
                    x->grad[k] += self.data[k] * (self.grad[k] - dot);
                }
            }
        }
    });
    return out;
}

TensorPtr layer_norm(const TensorPtr& x, const TensorPtr& gamma, const TensorPtr& beta,
                     double eps) {
    if (x->rank() < 1) throw ShapeError("layer_norm: rank >= 1 required");
    const std::int64_t d = x->shape.back();
    if (gamma->numel() != d || beta->numel() != d)
        throw ShapeError("layer_norm: gain/shift numel must equal last extent " +
                         std::to_string(d));
    check_dtypes("layer_norm", x, gamma);
    check_dtypes("layer_norm", x, beta);
    const std::int64_t rows = x->numel() / d;
    auto out = new_node(x->shape, x->dtype);
    // Normalized rows are cached for backward.
    auto xhat = std::make_shared<std::vector<double>>(x->data.size());
    auto inv_sigma = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows));
    for (std::int64_t i = 0; i < rows; ++i) {
        const double* row = x->data.data() + i * d;
        double mu = 0.0;
        for (std::int64_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::int64_t j = 0; j < d; ++j) {
            const double c = row[j] - mu;
            var += c * c;
        }
        var /= static_cast<double>(d);
        const double inv = 1.0 / std::sqrt(var + eps);
        (*inv_sigma)[static_cast<std::size_t>(i)] = inv;
        for (std::int64_t j = 0; j < d; ++j) {
            const double xh = (row[j] - mu) * inv;
            (*xhat)[static_cast<std::size_t>(i * d + j)] = xh;
            out->data[static_cast<std::size_t>(i * d + j)] =
                quantize(gamma->data[static_cast<std::size_t>(j)] * xh +
                             beta->data[static_cast<std::size_t>(j)],
                         x->dtype);
        }
    }
    bind_grad(out, {x, gamma, beta}, [x, gamma, beta, xhat, inv_sigma, rows, d](Tensor& self) {
        if (gamma->requires_grad) gamma->ensure_grad();
        if (beta->requires_grad) beta->ensure_grad();
        if (x->requires_grad) x->ensure_grad();
        std::vector<double> g(static_cast<std::size_t>(d));
        for (std::int64_t i = 0; i < rows; ++i) {
            double mean_g = 0.0, mean_gx = 0.0;
            for (std::int64_t j = 0; j < d; ++j) {
                const auto k = static_cast<std::size_t>(i * d + j);
                const double dy = self.grad[k];
                const double xh = (*xhat)[k];
                if (gamma->requires_grad) gamma->grad[static_cast<std::size_t>(j)] += dy * xh;
                if (beta->requires_grad) beta->grad[static_cast<std::size_t>(j)] += dy;
                const double gj = dy * gamma->data[static_cast<std::size_t>(j)];
                g[static_cast<std::size_t>(j)] = gj;
                mean_g += gj;
                mean_gx += gj * xh;
            }
            if (!x->requires_grad) continue;
            mean_g /= static_cast<double>(d);
            mean_gx /= static_cast<double>(d);
            const double inv = (*inv_sigma)[static_cast<std::size_t>(i)];
            for (std::int64_t j = 0; j < d; ++j) {
                const auto k = static_cast<std::size_t>(i * d + j);
                x->grad[k] += inv * (g[static_cast<std::size_t>(j)] - mean_g - (*xhat)[k] * mean_gx);
            }
        }
    });
    return out;
}

TensorPtr embedding(const TensorPtr& table, const std::vector<int>& ids) {
    if (table->rank() != 2)
        throw ShapeError("embedding: [V x d] table required, got " + table->shape_str());
    const std::int64_t V = table->shape[0], d = table->shape[1];
    if (ids.empty()) throw ContractError("embedding: empty id sequence");
    for (int id : ids)
        if (id < 0 || id >= V)
            throw ContractError("embedding: id " + std::to_string(id) + " outside vocab of " +
                                std::to_string(V));
    auto r = new_node({static_cast<std::int64_t>(ids.size()), d}, table->dtype);
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table->data.begin() + static_cast<std::ptrdiff_t>(ids[i]) * d, d,
                    r->data.begin() + static_cast<std::ptrdiff_t>(i) * d);
    bind_grad(r, {table}, [table, ids, d](Tensor& self) {
        table->ensure_grad();
        for (std::size_t i = 0; i < ids.size(); ++i)
            for (std::int64_t j = 0; j < d; ++j)
                table->grad[static_cast<std::size_t>(ids[i] * d + j)] +=
                    self.grad[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)];
    });
    return r;
}

TensorPtr mean_all(const TensorPtr& x) {
    auto r = new_node({1}, x->dtype);
    double s = 0.0;
    for (double v : x->data) s += v;
    const double n = static_cast<double>(x->numel());
    r->data[0] = quantize(s / n, x->dtype);
    bind_grad(r, {x}, [x, n](Tensor& self) {
        x->ensure_grad();
        const double g = self.grad[0] / n;
        for (auto& gv : x->grad) gv += g;
    });
    return r;
}

TensorPtr sum_all(const TensorPtr& x) {
    auto r = new_node({1}, x->dtype);
    double s = 0.0;
    for (double v : x->data) s += v;
    r->data[0] = quantize(s, x->dtype);
    bind_grad(r, {x}, [x](Tensor& self) {
        x->ensure_grad();
        const double g = self.grad[0];
        for (auto& gv : x->grad) gv += g;
    });
    return r;
}

TensorPtr mse(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape("mse", a, b);
    const Dtype dt = check_dtypes("mse", a, b);
    auto r = new_node({1}, dt);
    const double n = static_cast<double>(a->numel());
    double s = 0.0;
    for (std::size_t i = 0; i < a->data.size(); ++i) {
        const double delta = a->data[i] - b->data[i];
        s += delta * delta;
    }
    r->data[0] = quantize(s / n, dt);
    bind_grad(r, {a, b}, [a, b, n](Tensor& self) {
        const double g = 2.0 * self.grad[0] / n;
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < a->data.size(); ++i)
                a->grad[i] += g * (a->data[i] - b->data[i]);
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < b->data.size(); ++i)
                b->grad[i] -= g * (a->data[i] - b->data[i]);
        }
    });
    return r;
}

TensorPtr cross_entropy_with_softmax(const TensorPtr& logits, const std::vector<int>& targets) {
    if (logits->rank() != 2)
        throw ShapeError("cross_entropy_with_softmax: [n x V] logits required, got " +
                         logits->shape_str());
    const std::int64_t n = logits->shape[0], V = logits->shape[1];
    if (static_cast<std::int64_t>(targets.size()) != n)
        throw ContractError("cross_entropy_with_softmax: " + std::to_string(targets.size()) +
                            " targets for " + std::to_string(n) + " rows");
    for (int t : targets)
        if (t < 0 || t >= V)
            throw ContractError("cross_entropy_with_softmax: target " + std::to_string(t) +
                                " outside vocab of " + std::to_string(V));
    auto probs = std::make_shared<std::vector<double>>(logits->data.size());
    auto r = new_node({1}, logits->dtype);
    double loss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double* row = logits->data.data() + i * V;
        double mx = row[0];
        for (std::int64_t j = 1; j < V; ++j) mx = std::max(mx, row[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < V; ++j) {
            const double e = std::exp(row[j] - mx);
            (*probs)[static_cast<std::size_t>(i * V + j)] = e;
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (std::int64_t j = 0; j < V; ++j)
            (*probs)[static_cast<std::size_t>(i * V + j)] *= inv;
        loss += std::log(sum) + mx - row[targets[static_cast<std::size_t>(i)]];
    }
    r->data[0] = quantize(loss, logits->dtype);
    bind_grad(r, {logits}, [logits, probs, targets, n, V](Tensor& self) {
        logits->ensure_grad();
        const double g = self.grad[0];
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < V; ++j) {
                const auto k = static_cast<std::size_t>(i * V + j);
                const double onehot =
                    (j == targets[static_cast<std::size_t>(i)]) ? 1.0 : 0.0;
                logits->grad[k] += g * ((*probs)[k] - onehot);
            }
        }
    });
    return r;
}

}  // namespace mmlatent
