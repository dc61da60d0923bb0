#pragma once

// Initial capital distributions with strictly positive support, plus an
// optional deterministic upward shift (used when coupling a finite system
// to its limit).  Sampling is inverse-CDF based so one uniform draw yields
// one sample, keeping stream usage fixed.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "mfc/rng.hpp"

namespace mfc {

class InitialDistribution {
public:
    enum class Kind { Dirac, Uniform, Tabulated };

    /** Point mass at z0 > 0. */
    static InitialDistribution dirac(double z0, double shift = 0.0) {
        if (!(z0 > 0.0))
            throw std::invalid_argument("InitialDistribution: Dirac mass must be > 0");
        InitialDistribution d(shift);
        d.kind_ = Kind::Dirac;
        d.a_ = z0;
        return d;
    }

    /** Uniform on [a, b] with 0 < a < b. */
    static InitialDistribution uniform(double a, double b, double shift = 0.0) {
        if (!(a > 0.0 && b > a))
            throw std::invalid_argument("InitialDistribution: Uniform needs 0 < a < b");
        InitialDistribution d(shift);
        d.kind_ = Kind::Uniform;
        d.a_ = a;
        d.b_ = b;
        return d;
    }

    /** Quantile table (u, Q(u)) with u covering [0, 1], Q nondecreasing
     *  and strictly positive; sampled by linear interpolation. */
    static InitialDistribution tabulated(std::vector<std::pair<double, double>> quantiles,
                                         double shift = 0.0) {
        if (quantiles.size() < 2)
            throw std::invalid_argument("InitialDistribution: table needs at least two rows");
        if (quantiles.front().first != 0.0 || quantiles.back().first != 1.0)
            throw std::invalid_argument("InitialDistribution: table must span u in [0, 1]");
        for (std::size_t i = 0; i < quantiles.size(); ++i) {
            if (i > 0) {
                if (!(quantiles[i].first > quantiles[i - 1].first))
                    throw std::invalid_argument("InitialDistribution: u column must be strictly increasing");
                if (quantiles[i].second < quantiles[i - 1].second)
                    throw std::invalid_argument("InitialDistribution: quantile column must be nondecreasing");
            }
            if (!(quantiles[i].second > 0.0))
                throw std::invalid_argument("InitialDistribution: support must be strictly positive");
        }
        InitialDistribution d(shift);
        d.kind_ = Kind::Tabulated;
        d.table_ = std::move(quantiles);
        return d;
    }

    Kind kind() const { return kind_; }
    double shift() const { return shift_; }
    double dirac_mass() const { return a_; }
    double uniform_lo() const { return a_; }
    double uniform_hi() const { return b_; }
    const std::vector<std::pair<double, double>>& table() const { return table_; }

    /** Copy of this distribution with a different shift. */
    InitialDistribution with_shift(double shift) const {
        InitialDistribution d = *this;
        if (shift < 0.0)
            throw std::invalid_argument("InitialDistribution: shift must be >= 0");
        d.shift_ = shift;
        return d;
    }

    /** Quantile function including the shift. */
    double quantile(double u) const {
        if (!(u >= 0.0 && u <= 1.0))
            throw std::domain_error("InitialDistribution: quantile needs u in [0, 1]");
        switch (kind_) {
        case Kind::Dirac:
            return a_ + shift_;
        case Kind::Uniform:
            return a_ + u * (b_ - a_) + shift_;
        case Kind::Tabulated: {
            auto it = std::upper_bound(table_.begin(), table_.end(), u,
                                       [](double v, const auto& row) { return v < row.first; });
            if (it == table_.begin()) return table_.front().second + shift_;
            if (it == table_.end()) return table_.back().second + shift_;
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            double w = (u - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second) + shift_;
        }
        }
        throw std::logic_error("InitialDistribution: unreachable");
    }

    /** One sample; consumes exactly one uniform from the stream. */
    double sample_one(Rng& rng) const {
        return quantile(rng.uniform());
    }

    /** E[exp(-c Z)] including the shift, exact per kind (for Tabulated the
     *  piecewise-linear quantile makes the integral exact per segment). */
    double exp_neg_moment(double c) const {
        if (c == 0.0) return 1.0;
        switch (kind_) {
        case Kind::Dirac:
            return std::exp(-c * (a_ + shift_));
        case Kind::Uniform: {
            double lo = a_ + shift_, hi = b_ + shift_;
            return (std::exp(-c * lo) - std::exp(-c * hi)) / (c * (hi - lo));
        }
        case Kind::Tabulated: {
            double total = 0.0;
            for (std::size_t i = 1; i < table_.size(); ++i) {
                double du = table_[i].first - table_[i - 1].first;
                double q0 = table_[i - 1].second + shift_;
                double q1 = table_[i].second + shift_;
                if (q1 == q0) {
                    total += du * std::exp(-c * q0);
                } else {
                    total += du * (std::exp(-c * q0) - std::exp(-c * q1)) / (c * (q1 - q0));
                }
            }
            return total;
        }
        }
        throw std::logic_error("InitialDistribution: unreachable");
    }

private:
    explicit InitialDistribution(double shift) : shift_(shift) {
        if (shift < 0.0)
            throw std::invalid_argument("InitialDistribution: shift must be >= 0");
    }
    Kind kind_ = Kind::Dirac;
    double a_ = 1.0;
    double b_ = 1.0;
    double shift_ = 0.0;
    std::vector<std::pair<double, double>> table_;
};

} // namespace mfc
