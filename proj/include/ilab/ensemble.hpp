#pragma once

// k-sphere ensemble wavefunction: a superposition of plane waves with |k| below the
// local cutoff k1(r) = sqrt(m (E_T - V(r)) / hbar^2), with amplitude chi0 fixed either by
// the per-mode mass convention chi0^2 = m_e or by unit total probability.

#include <functional>
#include <variant>

#include "ilab/physics_core.hpp"

namespace ilab::ensemble {

struct ConstantPotential {
    double value = 0.0;
};

/// Position-dependent potential V(r). Only pointwise evaluation is supported.
struct SampledPotential {
    std::function<double(const Vec3&)> value;
};

using Potential = std::variant<ConstantPotential, SampledPotential>;

enum class Chi0Mode {
    MassNormalized,   ///< chi0^2 = m_e
    UnitProbability,  ///< chi0 rescaled so that the total norm is 1
};

struct EnsembleSpec {
    double total_energy = 1.0;
    Potential potential = ConstantPotential{};
    Chi0Mode mode = Chi0Mode::MassNormalized;
    double ensemble_weight = 1.0;  ///< m_e, nondimensional
    double mass = 1.0;             ///< m in the cutoff
    double hbar = 1.0;

    bool has_constant_potential() const noexcept { return std::holds_alternative<ConstantPotential>(potential); }
    double potential_at(const Vec3& r) const;
};

/// Cutoff wavenumber at r; 0 in classically forbidden regions (V(r) >= E_T).
double k_cutoff(const EnsembleSpec& spec, const Vec3& r = {});

/// chi0: sqrt(m_e) when mass-normalized, (4 pi k1^3 / 3)^{-1/2} for unit probability.
/// Unit probability needs a constant potential (UnsupportedCaseError) with k1 > 0 (NormalizationError).
double mode_amplitude(const EnsembleSpec& spec);

/// Closed form for constant chi0:
/// psi(r) = chi0 (2 pi)^{-3/2} 4 pi k1^3 (sin x - x cos x) / x^3, x = k1 |r|,
/// switching to the Taylor series for x < 1e-3.
cplx ensemble_wavefunction(const EnsembleSpec& spec, const Vec3& r);

/// (sin x - x cos x) / x^3 with the small-x series.
double sphere_transform_kernel(double x);

/// Isotropic amplitude hook chi(|k|): radial Gauss-Legendre quadrature of
/// (2 pi)^{-3/2} 4 pi int_0^{k1} chi(k) k^2 sin(k r)/(k r) dk.
cplx ensemble_wavefunction_radial(const EnsembleSpec& spec, const Vec3& r, const std::function<double(double)>& chi,
                                  std::size_t panels = 64);

/// Total norm chi0^2 (4 pi / 3) k1^3; equals (4 pi m_e / 3) k1^3 when mass-normalized.
/// Throws UnsupportedCaseError for a non-constant potential.
double norm_constant_potential(const EnsembleSpec& spec);

/// Copy of `spec` in unit-probability mode. Idempotent.
EnsembleSpec renormalize(const EnsembleSpec& spec);

}  // namespace ilab::ensemble
