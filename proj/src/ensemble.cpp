#include "ilab/ensemble.hpp"

#include <cmath>
#include <numbers>

#include "ilab/quadrature.hpp"

namespace ilab::ensemble {

namespace {

constexpr double pi = std::numbers::pi;

// (2 pi)^{-3/2}
const double fourier_norm = std::pow(2.0 * pi, -1.5);

void validate(const EnsembleSpec& spec) {
    if (!(spec.ensemble_weight > 0.0)) throw DomainError("ensemble weight m_e must be positive");
    if (!(spec.mass > 0.0)) throw DomainError("mass must be positive");
    if (!(spec.hbar > 0.0)) throw DomainError("hbar must be positive");
    if (!std::isfinite(spec.total_energy)) throw DomainError("total energy must be finite");
    if (const auto* s = std::get_if<SampledPotential>(&spec.potential); s && !s->value)
        throw DomainError("sampled potential has no callable");
}

double sphere_volume(double k1) { return 4.0 * pi / 3.0 * k1 * k1 * k1; }

}  // namespace

double EnsembleSpec::potential_at(const Vec3& r) const {
    if (const auto* c = std::get_if<ConstantPotential>(&potential)) return c->value;
    return std::get<SampledPotential>(potential).value(r);
}

double k_cutoff(const EnsembleSpec& spec, const Vec3& r) {
    validate(spec);
    const double available = spec.total_energy - spec.potential_at(r);
    if (!(available > 0.0)) return 0.0;
    return std::sqrt(spec.mass / (spec.hbar * spec.hbar) * available);
}

double mode_amplitude(const EnsembleSpec& spec) {
    validate(spec);
    if (spec.mode == Chi0Mode::MassNormalized) return std::sqrt(spec.ensemble_weight);
    if (!spec.has_constant_potential())
        throw UnsupportedCaseError("unit-probability amplitude needs a constant potential");
    const double k1 = k_cutoff(spec);
    if (!(k1 > 0.0)) throw NormalizationError("empty k-sphere: the zero function cannot be normalized");
    return 1.0 / std::sqrt(sphere_volume(k1));
}

double sphere_transform_kernel(double x) {
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return 1.0 / 3.0 - x2 / 30.0 + x2 * x2 / 840.0;
    }
    return (std::sin(x) - x * std::cos(x)) / (x * x * x);
}

cplx ensemble_wavefunction(const EnsembleSpec& spec, const Vec3& r) {
    const double k1 = k_cutoff(spec, r);
    if (k1 == 0.0) return 0.0;
    const double chi0 = mode_amplitude(spec);
    return chi0 * fourier_norm * 4.0 * pi * k1 * k1 * k1 * sphere_transform_kernel(k1 * norm(r));
}

cplx ensemble_wavefunction_radial(const EnsembleSpec& spec, const Vec3& r, const std::function<double(double)>& chi,
                                  std::size_t panels) {
    const double k1 = k_cutoff(spec, r);
    if (k1 == 0.0) return 0.0;
    const double rr = norm(r);
    static const GaussLegendreRule rule = gauss_legendre(16);
    const double radial = integrate_panels(
        [&](double k) {
            const double x = k * rr;
            const double sinc = std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
            return chi(k) * k * k * sinc;
        },
        0.0, k1, panels, rule);
    return fourier_norm * 4.0 * pi * radial;
}

double norm_constant_potential(const EnsembleSpec& spec) {
    validate(spec);
    if (!spec.has_constant_potential())
        throw UnsupportedCaseError("closed-form norm exists only for a constant potential");
    const double k1 = k_cutoff(spec);
    if (k1 == 0.0) return 0.0;
    const double chi0 = mode_amplitude(spec);
    return chi0 * chi0 * sphere_volume(k1);
}

EnsembleSpec renormalize(const EnsembleSpec& spec) {
    validate(spec);
    if (!spec.has_constant_potential())
        throw UnsupportedCaseError("renormalization needs a constant potential");
    if (!(k_cutoff(spec) > 0.0)) throw NormalizationError("empty k-sphere: the zero function cannot be normalized");
    EnsembleSpec out = spec;
    out.mode = Chi0Mode::UnitProbability;
    return out;
}

}  // namespace ilab::ensemble
