#pragma once

#include <cstdint>
#include <vector>

namespace tstar {

// Shape-preserving piecewise-cubic Hermite interpolant.
//
// Interior tangents follow the Fritsch-Carlson weighted harmonic mean
//   m_k = (w1 + w2) / (w1/d_{k-1} + w2/d_k),   w1 = 2h_k + h_{k-1},
//                                              w2 = h_k + 2h_{k-1},
// forced to zero where the secants change sign; endpoint tangents equal the
// boundary secants. The result never overshoots its control points, so a
// non-negative input stays non-negative.
//
// Fewer than 4 points degrade gracefully: 2-3 -> piecewise linear,
// 1 -> constant. Evaluation clamps outside [x_front, x_back].
class MonotoneCubic {
public:
    // xs strictly increasing, xs.size() == ys.size() >= 1.
    MonotoneCubic(std::vector<double> xs, std::vector<double> ys);

    double operator()(double x) const;

    // Values at x = 0, 1, ..., n-1 in one left-to-right sweep.
    std::vector<double> sample_integers(std::int64_t n) const;

private:
    double eval_segment(std::size_t seg, double x) const;

    std::vector<double> xs_, ys_, tangents_;
    bool linear_ = false;
};

} // namespace tstar
