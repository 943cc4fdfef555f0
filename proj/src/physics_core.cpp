#include "ilab/physics_core.hpp"

#include <cmath>
#include <numbers>

#include "ilab/quadrature.hpp"

namespace ilab {

UnitSystem::UnitSystem(double length_unit_m) : length_m_(length_unit_m) {
    if (!(length_unit_m > 0.0) || !std::isfinite(length_unit_m))
        throw DomainError("length unit must be positive and finite");
}

double UnitSystem::unit(Dimension dim) const {
    const double hbar = codata::hbar;
    const double m = codata::electron_mass;
    const double l = length_m_;
    switch (dim) {
        case Dimension::Length: return l;
        case Dimension::Time: return m * l * l / hbar;
        case Dimension::Mass: return m;
        case Dimension::Energy: return hbar * hbar / (m * l * l);
        case Dimension::Action: return hbar;
        case Dimension::Wavenumber: return 1.0 / l;
        case Dimension::AngularFrequency: return hbar / (m * l * l);
        case Dimension::Velocity: return hbar / (m * l);
    }
    throw DomainError("unknown dimension");
}

double wavenumber_from_kinetic(double kinetic_energy, double mass, double hbar) {
    if (!(kinetic_energy >= 0.0)) throw DomainError("kinetic energy must be non-negative");
    if (!(mass > 0.0)) throw DomainError("mass must be positive");
    if (!(hbar > 0.0)) throw DomainError("hbar must be positive");
    return std::sqrt(2.0 * mass * kinetic_energy) / hbar;
}

PhysicalParams PhysicalParams::from_kinetic(double kinetic_energy, double mass, double hbar) {
    if (!(kinetic_energy > 0.0)) throw DomainError("beam kinetic energy must be positive (k > 0)");
    PhysicalParams p;
    p.hbar_ = hbar;
    p.mass_ = mass;
    p.kinetic_ = kinetic_energy;
    p.k_ = wavenumber_from_kinetic(kinetic_energy, mass, hbar);
    p.lambda_ = 2.0 * std::numbers::pi / p.k_;
    return p;
}

PhysicalParams PhysicalParams::with_total_from_omega(double omega) const {
    if (!(omega >= 0.0)) throw DomainError("omega must be non-negative");
    PhysicalParams p = *this;
    p.omega_ = omega;
    p.total_ = hbar_ * omega;
    p.u_ = std::sqrt(*p.total_ / mass_);
    return p;
}

PhysicalParams PhysicalParams::with_total_from_speed(double u) const {
    if (!(u >= 0.0)) throw DomainError("intrinsic speed must be non-negative");
    PhysicalParams p = *this;
    p.u_ = u;
    p.total_ = mass_ * u * u;
    p.omega_ = *p.total_ / hbar_;
    return p;
}

namespace {

std::optional<double> scale(std::optional<double> v, double factor) {
    if (!v) return std::nullopt;
    return *v * factor;
}

}  // namespace

PhysicalParams PhysicalParams::to_nondim(const UnitSystem& units) const {
    PhysicalParams p = *this;
    p.hbar_ = units.to_nondim(hbar_, Dimension::Action);
    p.mass_ = units.to_nondim(mass_, Dimension::Mass);
    p.kinetic_ = units.to_nondim(kinetic_, Dimension::Energy);
    p.k_ = units.to_nondim(k_, Dimension::Wavenumber);
    p.lambda_ = units.to_nondim(lambda_, Dimension::Length);
    p.total_ = scale(total_, 1.0 / units.unit(Dimension::Energy));
    p.omega_ = scale(omega_, 1.0 / units.unit(Dimension::AngularFrequency));
    p.u_ = scale(u_, 1.0 / units.unit(Dimension::Velocity));
    return p;
}

PhysicalParams PhysicalParams::to_si(const UnitSystem& units) const {
    PhysicalParams p = *this;
    p.hbar_ = units.to_si(hbar_, Dimension::Action);
    p.mass_ = units.to_si(mass_, Dimension::Mass);
    p.kinetic_ = units.to_si(kinetic_, Dimension::Energy);
    p.k_ = units.to_si(k_, Dimension::Wavenumber);
    p.lambda_ = units.to_si(lambda_, Dimension::Length);
    p.total_ = scale(total_, units.unit(Dimension::Energy));
    p.omega_ = scale(omega_, units.unit(Dimension::AngularFrequency));
    p.u_ = scale(u_, units.unit(Dimension::Velocity));
    return p;
}

Grid1D::Grid1D(double origin, double spacing, std::size_t count)
    : origin_(origin), spacing_(spacing), count_(count) {
    if (!(spacing > 0.0) || !std::isfinite(spacing)) throw DomainError("grid spacing must be positive");
    if (!std::isfinite(origin)) throw DomainError("grid origin must be finite");
    if (count < 3) throw DomainError("grid needs at least 3 nodes");
}

Grid1D Grid1D::spanning(double lo, double hi, std::size_t count) {
    if (count < 3) throw DomainError("grid needs at least 3 nodes");
    if (!(hi > lo)) throw DomainError("grid upper bound must exceed lower bound");
    return Grid1D(lo, (hi - lo) / static_cast<double>(count - 1), count);
}

std::vector<double> Grid1D::nodes() const {
    std::vector<double> out(count_);
    for (std::size_t i = 0; i < count_; ++i) out[i] = node(i);
    return out;
}

GaussLegendreRule gauss_legendre(std::size_t order) {
    if (order < 1) throw DomainError("Gauss-Legendre order must be at least 1");
    GaussLegendreRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const std::size_t n = order;
    if (n == 1) {
        rule.nodes[0] = 0.0;
        rule.weights[0] = 2.0;
        return rule;
    }
    const std::size_t half = (n + 1) / 2;
    for (std::size_t i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        // recompute derivative at the converged node
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
            const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
            p0 = p1;
            p1 = p2;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.nodes[n - 1 - i] = x;
        rule.weights[i] = w;
        rule.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
    return rule;
}

}  // namespace ilab
