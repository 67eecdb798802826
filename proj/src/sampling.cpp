#include "tstar/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "tstar/errors.hpp"

namespace tstar {

std::int64_t GridLayout::filled_count() const {
    return std::count_if(cells.begin(), cells.end(),
                         [](const auto& c) { return c.has_value(); });
}

std::vector<FrameIndex> GridLayout::filled_frames() const {
    std::vector<FrameIndex> out;
    out.reserve(cells.size());
    for (const auto& c : cells)
        if (c) out.push_back(*c);
    return out;
}

namespace {

// Fenwick tree over weights; supports prefix sums, point update and
// the classic binary descent that finds the first index whose running
// prefix sum exceeds a threshold.
class FenwickSampler {
public:
    explicit FenwickSampler(const std::vector<double>& weights)
        : n_(weights.size()), tree_(weights.size() + 1, 0.0) {
        for (std::size_t i = 1; i <= n_; ++i) {
            tree_[i] += weights[i - 1];
            const std::size_t parent = i + (i & (~i + 1));
            if (parent <= n_) tree_[parent] += tree_[i];
        }
        mask_ = 1;
        while ((mask_ << 1) <= n_) mask_ <<= 1;
    }

    double total() const {
        double t = 0.0;
        for (std::size_t i = n_; i > 0; i -= i & (~i + 1)) t += tree_[i];
        return t;
    }

    void zero(std::size_t idx) {
        const double w = value(idx);
        for (std::size_t i = idx + 1; i <= n_; i += i & (~i + 1)) tree_[i] -= w;
    }

    double value(std::size_t idx) const {
        double w = tree_[idx + 1];
        std::size_t i = idx + 1;
        const std::size_t lower = i - (i & (~i + 1));
        for (--i; i > lower; i -= i & (~i + 1)) w -= tree_[i];
        return w;
    }

    // First index with prefix_sum(index) > u.
    std::size_t descend(double u) const {
        std::size_t pos = 0;
        double rem = u;
        for (std::size_t step = mask_; step > 0; step >>= 1) {
            const std::size_t next = pos + step;
            if (next <= n_ && tree_[next] <= rem) {
                rem -= tree_[next];
                pos = next;
            }
        }
        return pos; // 0-based index of the crossing element
    }

private:
    std::size_t n_;
    std::vector<double> tree_;
    std::size_t mask_ = 1;
};

} // namespace

std::vector<FrameIndex> weighted_sample_without_replacement(
    const std::vector<double>& weights, std::int64_t n, Rng& rng) {
    for (double w : weights)
        if (w < 0.0 || !std::isfinite(w)) throw StateError("negative or non-finite weight");

    std::vector<FrameIndex> out;
    if (n <= 0 || weights.empty()) return out;
    out.reserve(static_cast<std::size_t>(n));

    FenwickSampler tree(weights);
    for (std::int64_t draw = 0; draw < n; ++draw) {
        const double total = tree.total();
        if (!(total > 0.0)) break; // positive support exhausted
        std::size_t idx = tree.descend(rng.next_double() * total);
        if (idx >= weights.size()) idx = weights.size() - 1; // fp guard at the top end
        // A rounding tie can land on an already-zeroed slot; step to the
        // nearest positive weight so the no-repeat contract holds.
        while (idx < weights.size() && tree.value(idx) <= 0.0) ++idx;
        if (idx >= weights.size()) break;
        out.push_back(static_cast<FrameIndex>(idx));
        tree.zero(idx);
    }
    return out;
}

GridLayout build_grid(std::vector<FrameIndex> sampled, std::int64_t side) {
    if (side < 1) throw GridError("grid side < 1");
    const auto capacity = static_cast<std::size_t>(side * side);
    if (sampled.size() > capacity) throw GridError("more samples than grid cells");
    std::sort(sampled.begin(), sampled.end());
    if (std::adjacent_find(sampled.begin(), sampled.end()) != sampled.end())
        throw GridError("duplicate frame index in grid");

    GridLayout grid;
    grid.side = side;
    grid.cells.assign(capacity, std::nullopt);
    for (std::size_t i = 0; i < sampled.size(); ++i) grid.cells[i] = sampled[i];
    return grid;
}

} // namespace tstar
