#pragma once

// Loss trajectories and metrics between them.
//
// A LossCurve is a nondecreasing, right-continuous step function on a
// uniform grid, with values in [0, 1]: the defaulted fraction of the
// system over time.  Empirical (particle) and limit (solver) trajectories
// share this one type.  The `terminal` field carries the estimated value
// at infinite horizon for reporting; the step function itself is constant
// at values.back() beyond the grid.
//
// levy_distance computes the Levy metric
//   d(l, l') = inf{ eps > 0 : l(t+eps)+eps >= l'(t) >= l(t-eps)-eps  for all t >= 0 }
// by bisection on eps; feasibility is checked at the jump points of both
// curves, their +-eps translates, and interval midpoints, which is
// exhaustive for step functions.  weighted_levy_distance integrates
// exp(-t) * min(d(stopped curves at t), 1) by trapezoid over the merged
// grid with an exp(-T) tail term.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mfc/time_grid.hpp"

namespace mfc {

class LossCurve {
public:
    LossCurve() = default;

    LossCurve(TimeGrid grid, std::vector<double> values, double terminal)
        : grid_(grid), values_(std::move(values)), terminal_(terminal) {
        if (values_.size() != grid_.size())
            throw std::invalid_argument("LossCurve: values must cover every grid point");
        double prev = 0.0;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            double v = values_[k];
            if (!(v >= 0.0 && v <= 1.0))
                throw std::invalid_argument("LossCurve: values must lie in [0, 1]");
            if (k > 0 && v < prev)
                throw std::invalid_argument("LossCurve: values must be nondecreasing");
            prev = v;
        }
        if (!(terminal_ >= values_.back() && terminal_ <= 1.0))
            throw std::invalid_argument("LossCurve: terminal must lie in [last value, 1]");
    }

    /** Curve identically zero on the grid. */
    static LossCurve zero(TimeGrid grid) {
        return LossCurve(grid, std::vector<double>(grid.size(), 0.0), 0.0);
    }

    const TimeGrid& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double terminal() const { return terminal_; }

    /** Right-continuous evaluation; 0 before time zero, flat after the grid. */
    double value_at(double t) const {
        if (t < 0.0) return 0.0;
        return values_[grid_.index_at(t)];
    }

    /** Curve stopped at time s: constant at value_at(s) from s onward. */
    LossCurve stopped_at(double s) const {
        std::size_t ks = grid_.index_at(s);
        std::vector<double> v(values_.begin(), values_.end());
        double vs = values_[ks];
        for (std::size_t k = ks + 1; k < v.size(); ++k) v[k] = vs;
        return LossCurve(grid_, std::move(v), vs);
    }

    /** Times where the step function jumps (plus t = 0). */
    std::vector<double> jump_times() const {
        std::vector<double> out{0.0};
        for (std::size_t k = 1; k < values_.size(); ++k)
            if (values_[k] != values_[k - 1]) out.push_back(grid_.t(k));
        return out;
    }

private:
    TimeGrid grid_{1.0, 0.01};
    std::vector<double> values_ = std::vector<double>(101, 0.0);
    double terminal_ = 0.0;
};

namespace detail {

// One-sided sandwich check: l'(t) <= l(t+eps)+eps and l'(t) >= l(t-eps)-eps
// at every candidate time.
inline bool levy_sandwich_holds(const LossCurve& l, const LossCurve& lp, double eps,
                                const std::vector<double>& candidates) {
    for (double t : candidates) {
        double v = lp.value_at(t);
        if (v > l.value_at(t + eps) + eps + 1e-15) return false;
        double lower = (t - eps < 0.0) ? 0.0 : l.value_at(t - eps);
        if (v < lower - eps - 1e-15) return false;
    }
    return true;
}

inline std::vector<double> levy_candidates(const LossCurve& a, const LossCurve& b, double eps) {
    std::vector<double> pts;
    auto push_shifted = [&pts, eps](const std::vector<double>& js) {
        for (double j : js) {
            pts.push_back(j);
            pts.push_back(j + eps);
            if (j - eps >= 0.0) pts.push_back(j - eps);
        }
    };
    push_shifted(a.jump_times());
    push_shifted(b.jump_times());
    double far = std::max(a.grid().t(a.grid().count()), b.grid().t(b.grid().count())) + eps + 1.0;
    pts.push_back(far);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::size_t n = pts.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        pts.push_back(0.5 * (pts[i] + pts[i + 1]));
    return pts;
}

} // namespace detail

/** Levy metric between two loss curves, bisected to absolute tolerance 1e-6. */
inline double levy_distance(const LossCurve& a, const LossCurve& b) {
    auto feasible = [&a, &b](double eps) {
        auto cand = detail::levy_candidates(a, b, eps);
        return detail::levy_sandwich_holds(a, b, eps, cand) &&
               detail::levy_sandwich_holds(b, a, eps, cand);
    };
    if (feasible(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 60 && hi - lo > 1e-7; ++it) {
        double mid = 0.5 * (lo + hi);
        (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
}

/** Exponentially weighted distance integrating the Levy metric between
 *  stopped curves: quadrature of exp(-t) * min(d_t, 1) plus an exp(-T)
 *  tail, clamped to [0, 1].  Intended as a diagnostic; cost grows with
 *  the number of jumps. */
inline double weighted_levy_distance(const LossCurve& a, const LossCurve& b) {
    std::vector<double> times;
    for (std::size_t k = 0; k < a.grid().size(); ++k) times.push_back(a.grid().t(k));
    for (std::size_t k = 0; k < b.grid().size(); ++k) times.push_back(b.grid().t(k));
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    auto d_at = [&a, &b](double t) {
        return std::min(levy_distance(a.stopped_at(t), b.stopped_at(t)), 1.0);
    };
    double total = 0.0;
    double prev_t = times.front();
    double prev_f = std::exp(-prev_t) * d_at(prev_t);
    for (std::size_t j = 1; j < times.size(); ++j) {
        double t = times[j];
        double f = std::exp(-t) * d_at(t);
        total += 0.5 * (t - prev_t) * (prev_f + f);
        prev_t = t;
        prev_f = f;
    }
    total += std::exp(-prev_t) * d_at(prev_t);
    return std::clamp(total, 0.0, 1.0);
}

} // namespace mfc
