#include "ilab/fraunhofer.hpp"

#include <cmath>
#include <numbers>

namespace ilab::fraunhofer {

namespace {

void require_positive(double k, double a) {
    if (!(k > 0.0)) throw DomainError("wavenumber must be positive");
    if (!(a > 0.0)) throw DomainError("slit scale must be positive");
}

}  // namespace

double reduce_phase(double alpha) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(alpha, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

FraunhoferSpec FraunhoferSpec::validated() const {
    require_positive(k, a);
    FraunhoferSpec out = *this;
    out.alpha = reduce_phase(alpha);
    return out;
}

double sinc_amplitude(double k, double theta, double a) {
    require_positive(k, a);
    const double x = k * a * theta;
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

double phase_weight(double alpha) {
    return 0.5 * (1.0 + std::cos(2.0 * alpha));
}

double phase_intensity(double k, double theta, double alpha, double a) {
    const double s = sinc_amplitude(k, theta, a);
    return s * s * phase_weight(alpha);
}

IntensityTable phase_scan_surface(const FraunhoferSpec& spec, std::span<const double> alpha_grid) {
    const FraunhoferSpec s = spec.validated();
    if (s.theta.empty()) throw DomainError("theta grid is empty");
    if (alpha_grid.empty()) throw DomainError("alpha grid is empty");
    IntensityTable table;
    table.theta = s.theta;
    table.alpha.assign(alpha_grid.begin(), alpha_grid.end());
    table.values.resize(table.theta.size() * table.alpha.size());
    for (std::size_t i = 0; i < table.theta.size(); ++i) {
        const double amp = sinc_amplitude(s.k, table.theta[i], s.a);
        const double base = amp * amp;
        for (std::size_t j = 0; j < table.alpha.size(); ++j)
            table.values[i * table.alpha.size() + j] = base * phase_weight(table.alpha[j]);
    }
    return table;
}

}  // namespace ilab::fraunhofer
