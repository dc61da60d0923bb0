#pragma once

// State of the N-participant system at one instant.
//
// Defaulted participants are frozen at the level that killed them (they are
// never diffused again; this cannot affect the loss process or survivor
// counts).  The loss fraction is kept exact by tracking the default count
// as an integer.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace mfc {

struct ParticleSystemState {
    double time = 0.0;
    std::vector<double> levels;
    std::vector<std::uint8_t> alive;
    std::vector<double> default_times; // NaN while not defaulted
    int n_defaulted = 0;

    ParticleSystemState() = default;

    explicit ParticleSystemState(int n)
        : levels(n, 0.0), alive(n, 1),
          default_times(n, std::numeric_limits<double>::quiet_NaN()) {}

    int n() const { return static_cast<int>(levels.size()); }
    int n_alive() const { return n() - n_defaulted; }
    double loss_fraction() const {
        return n() == 0 ? 0.0 : static_cast<double>(n_defaulted) / n();
    }
    bool has_defaulted(int i) const { return !std::isnan(default_times[i]); }
};

} // namespace mfc
