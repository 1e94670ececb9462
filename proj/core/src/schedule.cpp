#include "mmlatent/schedule.hpp"

#include <fstream>
#include <sstream>

#include "mmlatent/errors.hpp"

namespace mmlatent {

NoiseSchedule::NoiseSchedule(int T, std::vector<double> beta) : T_(T), beta_(std::move(beta)) {
    if (T_ < 1) throw ContractError("NoiseSchedule: T must be >= 1");
    if (static_cast<int>(beta_.size()) != T_)
        throw ContractError("NoiseSchedule: beta table length disagrees with T");
    alpha_.resize(beta_.size());
    alpha_bar_.resize(beta_.size());
    double bar = 1.0;
    for (int t = 0; t < T_; ++t) {
        const double b = beta_[static_cast<std::size_t>(t)];
        if (!(b >= 0.0 && b < 1.0))
            throw ContractError("NoiseSchedule: beta out of [0,1) at step " + std::to_string(t + 1));
        alpha_[static_cast<std::size_t>(t)] = 1.0 - b;
        bar *= alpha_[static_cast<std::size_t>(t)];
        alpha_bar_[static_cast<std::size_t>(t)] = bar;
    }
}

void NoiseSchedule::check_range(int t) const {
    if (t < 1 || t > T_)
        throw ContractError("schedule: step " + std::to_string(t) + " outside [1, " +
                            std::to_string(T_) + "]");
}

double NoiseSchedule::beta_at(int t) const {
    check_range(t);
    ++lookups_;
    return beta_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_at(int t) const {
    check_range(t);
    ++lookups_;
    return alpha_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar_at(int t) const {
    check_range(t);
    ++lookups_;
    return alpha_bar_[static_cast<std::size_t>(t - 1)];
}

std::string NoiseSchedule::dump_table() const {
    std::ostringstream os;
    os.precision(12);
    for (int t = 1; t <= T_; ++t)
        os << t << ' ' << beta_[static_cast<std::size_t>(t - 1)] << ' '
           << alpha_bar_[static_cast<std::size_t>(t - 1)] << '\n';
    return os.str();
}

void NoiseSchedule::dump_table_to(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw IoError("cannot write schedule table to " + path);
    f << dump_table();
}

NoiseSchedule build_schedule(int T, double beta_start, double beta_end, ScheduleKind kind) {
    if (T < 1) throw ContractError("build_schedule: T must be >= 1");
    if (!(beta_start >= 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw ContractError("build_schedule: need 0 <= beta_start <= beta_end < 1");
    if (kind != ScheduleKind::linear) throw ContractError("build_schedule: unknown kind");
    std::vector<double> beta(static_cast<std::size_t>(T));
    for (int t = 0; t < T; ++t)
        beta[static_cast<std::size_t>(t)] =
            T == 1 ? beta_start
                   : beta_start + (beta_end - beta_start) * static_cast<double>(t) /
                                      static_cast<double>(T - 1);
    return NoiseSchedule(T, std::move(beta));
}

}  // namespace mmlatent
