#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mmlatent {

enum class ScheduleKind { linear };

/// Variance schedule tables: beta[t], alpha[t] = 1 - beta[t], and the exact
/// running product alpha_bar[t] = alpha_bar[t-1] * alpha[t], all 1-indexed
/// via the accessors. Accessors count lookups so path contracts ("inference
/// touches no schedule") can be asserted.
class NoiseSchedule {
  public:
    NoiseSchedule(int T, std::vector<double> beta);

    int steps() const { return T_; }

    double beta_at(int t) const;
    double alpha_at(int t) const;
    double alpha_bar_at(int t) const;

    std::uint64_t lookup_count() const { return lookups_; }
    void reset_lookup_count() { lookups_ = 0; }

    /// Text table, one "t beta alpha_bar" row per step.
    std::string dump_table() const;
    void dump_table_to(const std::string& path) const;

  private:
    void check_range(int t) const;

    int T_;
    std::vector<double> beta_, alpha_, alpha_bar_;
    mutable std::uint64_t lookups_ = 0;
};

/// Linear interpolation of beta over t = 1..T. Requires T >= 1 and
/// 0 <= beta_start <= beta_end < 1.
NoiseSchedule build_schedule(int T, double beta_start, double beta_end,
                             ScheduleKind kind = ScheduleKind::linear);

}  // namespace mmlatent
