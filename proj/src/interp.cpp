#include "tstar/interp.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>

namespace tstar {

MonotoneCubic::MonotoneCubic(std::vector<double> xs, std::vector<double> ys)
    : xs_(std::move(xs)), ys_(std::move(ys)) {
    if (xs_.empty() || xs_.size() != ys_.size())
        throw std::invalid_argument("interpolator needs matching non-empty abscissae");
    for (std::size_t i = 1; i < xs_.size(); ++i)
        if (!(xs_[i - 1] < xs_[i]))
            throw std::invalid_argument("abscissae must be strictly increasing");

    const std::size_t n = xs_.size();
    if (n < 4) {
        linear_ = true;
        return;
    }

    tangents_.assign(n, 0.0);
    std::vector<double> h(n - 1), d(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = xs_[i + 1] - xs_[i];
        d[i] = (ys_[i + 1] - ys_[i]) / h[i];
    }
    tangents_[0] = d[0];
    tangents_[n - 1] = d[n - 2];
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (d[k - 1] * d[k] <= 0.0) {
            tangents_[k] = 0.0;
        } else {
            const double w1 = 2.0 * h[k] + h[k - 1];
            const double w2 = h[k] + 2.0 * h[k - 1];
            tangents_[k] = (w1 + w2) / (w1 / d[k - 1] + w2 / d[k]);
        }
    }
}

double MonotoneCubic::eval_segment(std::size_t seg, double x) const {
    const double h = xs_[seg + 1] - xs_[seg];
    const double t = (x - xs_[seg]) / h;
    if (linear_) return ys_[seg] + t * (ys_[seg + 1] - ys_[seg]);
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    const double h10 = t3 - 2.0 * t2 + t;
    const double h01 = -2.0 * t3 + 3.0 * t2;
    const double h11 = t3 - t2;
    return h00 * ys_[seg] + h10 * h * tangents_[seg] +
           h01 * ys_[seg + 1] + h11 * h * tangents_[seg + 1];
}

double MonotoneCubic::operator()(double x) const {
    if (xs_.size() == 1 || x <= xs_.front()) return ys_.front();
    if (x >= xs_.back()) return ys_.back();
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    const auto seg = static_cast<std::size_t>(it - xs_.begin()) - 1;
    return eval_segment(seg, x);
}

std::vector<double> MonotoneCubic::sample_integers(std::int64_t n) const {
    std::vector<double> out(static_cast<std::size_t>(n));
    std::size_t seg = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i);
        if (xs_.size() == 1 || x <= xs_.front()) {
            out[i] = ys_.front();
        } else if (x >= xs_.back()) {
            out[i] = ys_.back();
        } else {
            while (seg + 2 < xs_.size() && xs_[seg + 1] <= x) ++seg;
            out[i] = eval_segment(seg, x);
        }
    }
    return out;
}

} // namespace tstar
