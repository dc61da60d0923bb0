#pragma once

// Contagion loss functions G: [0, 1] -> [0, inf).
//
// G maps the defaulted fraction of the system to the capital subtracted
// from every surviving participant.  All kinds are nondecreasing with
// G(0) = 0.  Linear and Tabulated are Lipschitz on [0, 1]; the logarithmic
// kind blows up near full default and is only defined up to 1 - margin.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfc {

class LossFunction {
public:
    enum class Kind { Linear, Log, Tabulated };

    /** G(x) = alpha * x. */
    static LossFunction linear(double alpha) {
        if (alpha < 0.0) throw std::invalid_argument("LossFunction: alpha must be >= 0");
        LossFunction g;
        g.kind_ = Kind::Linear;
        g.alpha_ = alpha;
        return g;
    }

    /** G(x) = -alpha * log(1 - x), defined on [0, 1 - margin]. */
    static LossFunction log_loss(double alpha, double margin = 1e-6) {
        if (alpha < 0.0) throw std::invalid_argument("LossFunction: alpha must be >= 0");
        if (!(margin > 0.0 && margin < 1.0))
            throw std::invalid_argument("LossFunction: log margin must lie in (0, 1)");
        LossFunction g;
        g.kind_ = Kind::Log;
        g.alpha_ = alpha;
        g.margin_ = margin;
        return g;
    }

    /** Piecewise-linear G through sorted knots (x, G(x)); must start at
     *  (0, 0), end at x = 1, and be nondecreasing in both coordinates. */
    static LossFunction tabulated(std::vector<std::pair<double, double>> knots) {
        if (knots.size() < 2)
            throw std::invalid_argument("LossFunction: tabulated needs at least two knots");
        if (knots.front().first != 0.0 || knots.front().second != 0.0)
            throw std::invalid_argument("LossFunction: tabulated knots must start at (0, 0)");
        if (knots.back().first != 1.0)
            throw std::invalid_argument("LossFunction: tabulated knots must end at x = 1");
        for (std::size_t i = 1; i < knots.size(); ++i) {
            if (!(knots[i].first > knots[i - 1].first))
                throw std::invalid_argument("LossFunction: knot abscissae must be strictly increasing");
            if (knots[i].second < knots[i - 1].second)
                throw std::invalid_argument("LossFunction: knot values must be nondecreasing");
        }
        LossFunction g;
        g.kind_ = Kind::Tabulated;
        g.knots_ = std::move(knots);
        return g;
    }

    Kind kind() const { return kind_; }
    double alpha() const { return alpha_; }
    double margin() const { return margin_; }
    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    /** Evaluate G at a loss fraction x in [0, 1] ([0, 1 - margin] for Log). */
    double operator()(double x) const {
        if (!(x >= 0.0 && x <= 1.0))
            throw std::domain_error("LossFunction: loss fraction must lie in [0, 1]");
        switch (kind_) {
        case Kind::Linear:
            return alpha_ * x;
        case Kind::Log:
            if (x > 1.0 - margin_)
                throw std::domain_error("LossFunction: log loss undefined beyond 1 - margin");
            return -alpha_ * std::log1p(-x);
        case Kind::Tabulated: {
            auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                       [](double v, const auto& k) { return v < k.first; });
            if (it == knots_.begin()) return knots_.front().second;
            if (it == knots_.end()) return knots_.back().second;
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            double w = (x - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
        }
        throw std::logic_error("LossFunction: unreachable");
    }

    /** Modulus of continuity bound: |G(z) - G(z')| <= modulus(|z - z'|)
     *  over the admissible domain.  Exact for Linear, max-slope bound for
     *  Tabulated, end-slope bound for Log restricted to [0, 1 - margin]. */
    double modulus(double delta) const {
        if (delta < 0.0) throw std::domain_error("LossFunction: modulus needs delta >= 0");
        if (delta == 0.0) return 0.0;
        return lipschitz_bound() * delta;
    }

    /** Largest slope over the admissible domain (the Lipschitz constant). */
    double lipschitz_bound() const {
        switch (kind_) {
        case Kind::Linear:
            return alpha_;
        case Kind::Log:
            return alpha_ / margin_;
        case Kind::Tabulated: {
            double m = 0.0;
            for (std::size_t i = 1; i < knots_.size(); ++i) {
                double s = (knots_[i].second - knots_[i - 1].second) /
                           (knots_[i].first - knots_[i - 1].first);
                m = std::max(m, s);
            }
            return m;
        }
        }
        throw std::logic_error("LossFunction: unreachable");
    }

    /** Total contagion cap: G at the right end of the admissible domain. */
    double cap() const {
        switch (kind_) {
        case Kind::Linear:    return alpha_;
        case Kind::Log:       return -alpha_ * std::log(margin_);
        case Kind::Tabulated: return knots_.back().second;
        }
        throw std::logic_error("LossFunction: unreachable");
    }

    /** True for kinds that are globally Lipschitz on [0, 1]. */
    bool lipschitz_on_unit() const { return kind_ != Kind::Log; }

private:
    LossFunction() = default;
    Kind kind_ = Kind::Linear;
    double alpha_ = 0.0;
    double margin_ = 1e-6;
    std::vector<std::pair<double, double>> knots_;
};

} // namespace mfc
