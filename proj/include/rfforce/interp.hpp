#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "rfforce/errors.hpp"

namespace rfforce {

enum class interpolation { monotone_cubic, linear };

// Piecewise-cubic Hermite interpolant with Fritsch-Carlson slope limiting.
// Strictly increasing knots in x are required; when y is monotone the
// interpolant is monotone too and never overshoots the data.
class monotone_interpolant {
public:
    monotone_interpolant() = default;

    monotone_interpolant(std::span<const double> x, std::span<const double> y,
                         interpolation kind = interpolation::monotone_cubic)
        : x_(x.begin(), x.end()), y_(y.begin(), y.end()), kind_(kind) {
        if (x_.size() != y_.size()) throw input_error("interpolant: x and y differ in length");
        if (x_.size() < 2) throw input_error("interpolant: need at least two knots");
        for (std::size_t i = 1; i < x_.size(); ++i) {
            if (!(x_[i] > x_[i - 1])) throw input_error("interpolant: knots must be strictly increasing");
        }
        compute_slopes();
    }

    double operator()(double xq) const {
        if (xq < x_.front() || xq > x_.back()) {
            throw range_error("interpolant: query outside [" + std::to_string(x_.front()) + ", " +
                              std::to_string(x_.back()) + "]");
        }
        auto it = std::upper_bound(x_.begin(), x_.end(), xq);
        std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        if (k >= x_.size() - 1) return y_.back();
        if (xq == x_[k]) return y_[k];

        const double h = x_[k + 1] - x_[k];
        const double t = (xq - x_[k]) / h;
        if (kind_ == interpolation::linear) return y_[k] + t * (y_[k + 1] - y_[k]);

        const double t2 = t * t;
        const double t3 = t2 * t;
        const double h00 = 2 * t3 - 3 * t2 + 1;
        const double h10 = t3 - 2 * t2 + t;
        const double h01 = -2 * t3 + 3 * t2;
        const double h11 = t3 - t2;
        return h00 * y_[k] + h10 * h * m_[k] + h01 * y_[k + 1] + h11 * h * m_[k + 1];
    }

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }
    const std::vector<double>& slopes() const { return m_; }

private:
    void compute_slopes() {
        const std::size_t n = x_.size();
        std::vector<double> secant(n - 1);
        for (std::size_t i = 0; i + 1 < n; ++i) secant[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);

        m_.assign(n, 0.0);
        m_.front() = secant.front();
        m_.back() = secant.back();
        for (std::size_t i = 1; i + 1 < n; ++i) {
            m_[i] = secant[i - 1] * secant[i] <= 0.0 ? 0.0 : 0.5 * (secant[i - 1] + secant[i]);
        }
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (secant[i] == 0.0) {
                m_[i] = m_[i + 1] = 0.0;
                continue;
            }
            const double a = m_[i] / secant[i];
            const double b = m_[i + 1] / secant[i];
            const double s = a * a + b * b;
            if (s > 9.0) {
                const double tau = 3.0 / std::sqrt(s);
                m_[i] = tau * a * secant[i];
                m_[i + 1] = tau * b * secant[i];
            }
        }
    }

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> m_;
    interpolation kind_ = interpolation::monotone_cubic;
};

}  // namespace rfforce
