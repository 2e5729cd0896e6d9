#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "gnclab/errors.hpp"

namespace gnclab {

// Finite set of allowed parameter values. Levels are kept sorted ascending;
// the set must contain exactly one zero.
class QuantGrid {
public:
    explicit QuantGrid(std::vector<double> levels) : levels_(std::move(levels)) {
        require(levels_.size() >= 2, "QuantGrid: need at least two levels");
        std::sort(levels_.begin(), levels_.end());
        for (std::size_t i = 1; i < levels_.size(); ++i)
            require(levels_[i - 1] != levels_[i], "QuantGrid: duplicate level");
        zero_ = -1;
        for (std::size_t i = 0; i < levels_.size(); ++i)
            if (levels_[i] == 0.0) zero_ = static_cast<int>(i);
        require(zero_ >= 0, "QuantGrid: grid must contain 0");
    }

    // Default integer grid of cardinality q: {-q/2, ..., q/2 - 1} for even q,
    // {-(q-1)/2, ..., (q-1)/2} for odd q.
    static QuantGrid symmetric(int q) {
        require(q >= 2, "QuantGrid: cardinality must be at least 2");
        std::vector<double> lv(static_cast<std::size_t>(q));
        const int lo = (q % 2 == 0) ? -q / 2 : -(q - 1) / 2;
        for (int i = 0; i < q; ++i) lv[static_cast<std::size_t>(i)] = lo + i;
        return QuantGrid(std::move(lv));
    }

    int size() const { return static_cast<int>(levels_.size()); }
    double value(int level) const { return levels_[static_cast<std::size_t>(level)]; }
    int zero_level() const { return zero_; }
    const std::vector<double>& levels() const { return levels_; }

private:
    std::vector<double> levels_;
    int zero_ = -1;
};

}  // namespace gnclab
