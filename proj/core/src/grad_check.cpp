#include "mmlatent/grad_check.hpp"

#include <cmath>

#include "mmlatent/errors.hpp"

namespace mmlatent {

GradCheckReport grad_check(const std::function<TensorPtr()>& f,
                           const std::vector<std::pair<std::string, TensorPtr>>& params,
                           double eps) {
    if (default_dtype() != Dtype::f64)
        throw ContractError("grad_check requires f64 mode");
    if (eps <= 0.0) throw ContractError("grad_check: eps must be positive");

    const TensorPtr first = f();
    const double v1 = first->item();
    const double v2 = f()->item();
    if (v1 != v2)
        throw ContractError("grad_check: f is not deterministic (" + std::to_string(v1) +
                            " vs " + std::to_string(v2) + ")");

    std::vector<TensorPtr> raw;
    raw.reserve(params.size());
    for (const auto& [name, p] : params) raw.push_back(p);
    zero_grads(raw);
    backward(first);

    GradCheckReport report;
    for (const auto& [name, p] : params) {
        for (std::int64_t i = 0; i < p->numel(); ++i) {
            const double saved = p->data[static_cast<std::size_t>(i)];
            p->data[static_cast<std::size_t>(i)] = saved + eps;
            const double plus = f()->item();
            p->data[static_cast<std::size_t>(i)] = saved - eps;
            const double minus = f()->item();
            p->data[static_cast<std::size_t>(i)] = saved;

            const double numeric = (plus - minus) / (2.0 * eps);
            const double analytic = p->grad_at(i);
            const double rel =
                std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = name;
                report.worst_index = i;
                report.worst_analytic = analytic;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

double grad_check_max_err(const std::function<TensorPtr()>& f,
                          const std::vector<TensorPtr>& params, double eps) {
    std::vector<std::pair<std::string, TensorPtr>> named;
    named.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i)
        named.emplace_back("param" + std::to_string(i), params[i]);
    return grad_check(f, named, eps).max_rel_err;
}

}  // namespace mmlatent
