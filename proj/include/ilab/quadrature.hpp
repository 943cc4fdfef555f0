#pragma once

#include <cstddef>
#include <vector>

#include "ilab/physics_core.hpp"

namespace ilab {

/// Gauss-Legendre nodes and weights on [-1, 1], ascending nodes.
struct GaussLegendreRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t order() const noexcept { return nodes.size(); }
};

/// Newton iteration on P_n from the Chebyshev guesses; nodes accurate to ~1 ulp.
GaussLegendreRule gauss_legendre(std::size_t order);

/// Neumaier-compensated running sum.
template <class T>
class CompensatedSum {
public:
    void add(T v) {
        if constexpr (std::is_same_v<T, cplx>) {
            re_.add(v.real());
            im_.add(v.imag());
        } else {
            const T t = sum_ + v;
            if (std::abs(sum_) >= std::abs(v))
                comp_ += (sum_ - t) + v;
            else
                comp_ += (v - t) + sum_;
            sum_ = t;
        }
    }

    T value() const {
        if constexpr (std::is_same_v<T, cplx>)
            return {re_.value(), im_.value()};
        else
            return sum_ + comp_;
    }

private:
    struct Empty {};
    T sum_{};
    T comp_{};
    std::conditional_t<std::is_same_v<T, cplx>, CompensatedSum<double>, Empty> re_{};
    std::conditional_t<std::is_same_v<T, cplx>, CompensatedSum<double>, Empty> im_{};
};

/// Composite Gauss-Legendre over [a, b] split into `panels` equal pieces.
template <class F>
auto integrate_panels(F&& f, double a, double b, std::size_t panels, const GaussLegendreRule& rule) {
    using T = std::decay_t<decltype(f(a))>;
    CompensatedSum<T> acc;
    const double width = (b - a) / static_cast<double>(panels);
    const double half = 0.5 * width;
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * width;
        for (std::size_t i = 0; i < rule.order(); ++i)
            acc.add(rule.weights[i] * half * f(mid + half * rule.nodes[i]));
    }
    return acc.value();
}

}  // namespace ilab
