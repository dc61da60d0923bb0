#pragma once

// Uniform time grid on [0, horizon] with step dt.  Grid points are
// t_k = k * dt for k = 0..count, where count = ceil(horizon / dt), so the
// last point is the first multiple of dt at or beyond the horizon.

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace mfc {

struct TimeGrid {
    double horizon = 1.0;
    double dt = 0.01;

    TimeGrid() = default;
    TimeGrid(double horizon_, double dt_) : horizon(horizon_), dt(dt_) {
        if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be positive");
        if (!(horizon >= dt)) throw std::invalid_argument("TimeGrid: horizon must be >= dt");
    }

    /** Number of steps; the grid holds count + 1 points including t = 0. */
    std::size_t count() const {
        return static_cast<std::size_t>(std::ceil(horizon / dt - 1e-9));
    }

    std::size_t size() const { return count() + 1; }

    double t(std::size_t k) const { return static_cast<double>(k) * dt; }

    /** Index of the last grid point at or before time s (clamped). */
    std::size_t index_at(double s) const {
        if (s <= 0.0) return 0;
        auto k = static_cast<std::size_t>(std::floor(s / dt + 1e-9));
        return k > count() ? count() : k;
    }

    bool operator==(const TimeGrid& o) const {
        return horizon == o.horizon && dt == o.dt;
    }
};

} // namespace mfc
