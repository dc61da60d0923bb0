#pragma once

// Budget-control strategies: how one unit of extra drift per unit time is
// split across surviving participants.
//
// The threshold strategy follows the sqrt(N)-rescue construction: nobody
// receives aid until their capital reaches a target level (N/m by default);
// the first m participants to do so are flagged (ties broken by lowest
// index) and receive constant rate 1/m forever after, even though the flag
// outlives them if they later default.  Flag memory is owned by the
// replication, not the strategy object, so strategies stay immutable and
// shareable across threads.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mfc/particle_state.hpp"

namespace mfc {

class ControlStrategy {
public:
    enum class Kind { Zero, Uniform, Threshold, Custom };
    using CustomRule = std::function<std::vector<double>(const ParticleSystemState&)>;

    ControlStrategy() = default; // Zero

    static ControlStrategy zero() { return ControlStrategy(); }

    static ControlStrategy uniform() {
        ControlStrategy s;
        s.kind_ = Kind::Uniform;
        return s;
    }

    /** Threshold strategy with m slots.  target_level 0 means "resolve to
     *  N/m at run time"; rate 0 means 1/m. */
    static ControlStrategy threshold(int m, double target_level = 0.0, double rate = 0.0) {
        if (m < 1) throw std::invalid_argument("ControlStrategy: threshold needs m >= 1");
        if (target_level < 0.0)
            throw std::invalid_argument("ControlStrategy: target level must be positive (or 0 for N/m)");
        if (rate < 0.0 || rate > 1.0)
            throw std::invalid_argument("ControlStrategy: rate must lie in (0, 1] (or 0 for 1/m)");
        if (rate > 0.0 && m * rate > 1.0 + 1e-12)
            throw std::invalid_argument("ControlStrategy: m * rate must not exceed the unit budget");
        ControlStrategy s;
        s.kind_ = Kind::Threshold;
        s.m_ = m;
        s.target_ = target_level;
        s.rate_ = rate;
        return s;
    }

    static ControlStrategy custom(CustomRule rule) {
        if (!rule) throw std::invalid_argument("ControlStrategy: custom rule must be callable");
        ControlStrategy s;
        s.kind_ = Kind::Custom;
        s.rule_ = std::move(rule);
        return s;
    }

    Kind kind() const { return kind_; }
    int m() const { return m_; }
    double rate_or_default() const { return rate_ > 0.0 ? rate_ : 1.0 / m_; }
    double target_or_default(int n) const {
        return target_ > 0.0 ? target_ : static_cast<double>(n) / m_;
    }
    const CustomRule& rule() const { return rule_; }

private:
    Kind kind_ = Kind::Zero;
    int m_ = 1;
    double target_ = 0.0;
    double rate_ = 0.0;
    CustomRule rule_;
};

/** Per-replication flag memory for the threshold strategy. */
struct StrategyState {
    std::vector<std::uint8_t> flagged;
    int flagged_count = 0;

    void reset(int n) {
        flagged.assign(n, 0);
        flagged_count = 0;
    }
};

namespace detail {

inline void validate_allocation(const std::vector<double>& alloc,
                                const ParticleSystemState& state) {
    if (static_cast<int>(alloc.size()) != state.n())
        throw std::invalid_argument("strategy: allocation size must match N");
    double total = 0.0;
    for (int i = 0; i < state.n(); ++i) {
        double a = alloc[i];
        if (!(a >= 0.0 && a <= 1.0))
            throw std::invalid_argument("strategy: allocations must lie in [0, 1]");
        if (a > 0.0 && !state.alive[i])
            throw std::invalid_argument("strategy: dead participants must receive 0");
        total += a;
    }
    if (total > 1.0 + 1e-12)
        throw std::invalid_argument("strategy: allocations exceed the unit budget");
}

} // namespace detail

/** Evaluates the strategy at the current state, updating threshold flags
 *  first (first-m-to-reach, ties by lowest index).  The returned
 *  allocation is always feasible; custom rules are validated and rejected
 *  if infeasible. */
inline std::vector<double> evaluate_strategy(const ControlStrategy& strategy,
                                             const ParticleSystemState& state,
                                             StrategyState& memory) {
    const int n = state.n();
    switch (strategy.kind()) {
    case ControlStrategy::Kind::Zero:
        return std::vector<double>(n, 0.0);
    case ControlStrategy::Kind::Uniform: {
        std::vector<double> alloc(n, 0.0);
        int na = state.n_alive();
        if (na == 0) return alloc;
        double each = std::min(1.0 / na, 1.0);
        for (int i = 0; i < n; ++i)
            if (state.alive[i]) alloc[i] = each;
        return alloc;
    }
    case ControlStrategy::Kind::Threshold: {
        if (static_cast<int>(memory.flagged.size()) != n) memory.reset(n);
        const int m = strategy.m();
        const double target = strategy.target_or_default(n);
        const double rate = strategy.rate_or_default();
        for (int i = 0; i < n && memory.flagged_count < m; ++i) {
            if (!memory.flagged[i] && state.alive[i] && state.levels[i] >= target) {
                memory.flagged[i] = 1;
                ++memory.flagged_count;
            }
        }
        std::vector<double> alloc(n, 0.0);
        for (int i = 0; i < n; ++i)
            if (memory.flagged[i] && state.alive[i]) alloc[i] = rate;
        return alloc;
    }
    case ControlStrategy::Kind::Custom: {
        std::vector<double> alloc = strategy.rule()(state);
        detail::validate_allocation(alloc, state);
        return alloc;
    }
    }
    throw std::logic_error("strategy: unreachable");
}

} // namespace mfc
