#pragma once

// Scalar boundary-integral diffraction in the Kirchhoff closure.
//
// The aperture lies in the plane z = 0 with normal +z; the source sits at z < 0
// and observation points at z > 0. On the openings the field equals the incident
// wave, on the opaque screen it is zero, so the boundary integral reduces to a
// sum of rectangle integrals evaluated by tensor Gauss-Legendre panels.

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "ilab/physics_core.hpp"

namespace ilab::kirchhoff {

/// Axis-aligned rectangular opening in the z = 0 plane.
struct Rect {
    double cx = 0.0;
    double cy = 0.0;
    double half_x = 0.5;
    double half_y = 0.5;
};

struct Aperture {
    std::vector<Rect> openings;

    /// Positive half-widths, at least one opening, no two openings overlapping.
    void validate() const;
    double max_opening_width() const;
    double max_extent() const;  ///< largest distance of any opening corner from the origin

    static Aperture single_slit(double half_x, double half_y);
    /// Two identical openings centred at x = +-separation/2.
    static Aperture double_slit(double separation, double half_x, double half_y);
};

struct SourceSpec {
    /// Source point (-R in the boundary integral). nullopt selects a plane wave travelling along +z.
    std::optional<Vec3> position;
    double phase_alpha = 0.0;
    Vec3 velocity{0.0, 0.0, 1.0};  ///< particle velocity c_p

    void validate() const;
};

struct QuadratureSpec {
    std::size_t order = 8;           ///< Gauss-Legendre nodes per panel axis
    std::size_t max_refinement = 8;  ///< panel doublings allowed after the initial level
    double rel_tol = 1e-6;

    void validate() const;
};

/// e^{ik d} ((r - r').n)/d^2 (1 + i/(k d)), d = |r - r'|. The i/(2 lambda) prefactor is left to the caller.
cplx greens_kernel(const Vec3& r, const Vec3& r_prime, double k, const Vec3& normal = {0.0, 0.0, 1.0});

/// Incident field at an aperture point: e^{i alpha} e^{ik|r' - s|}/|r' - s| for a point source s,
/// e^{i alpha} e^{ik z'} for the plane wave.
cplx incident_field(const SourceSpec& source, double k, const Vec3& r_prime);

struct AmplitudeEstimate {
    cplx value;
    cplx previous;           ///< estimate one refinement level coarser
    double modulus_integral; ///< integral of |integrand|, the scale the tolerance is measured against
    std::size_t panels;      ///< panels per axis on the widest opening at the accepted level
};

/// Gamma(k, r) with successive panel doubling until
/// |Gamma_n - Gamma_{n-1}| <= rel_tol * integral|integrand|. Throws ConvergenceError otherwise.
AmplitudeEstimate boundary_amplitude_detailed(const Aperture& aperture, const SourceSpec& incident, double k,
                                              const Vec3& r, const QuadratureSpec& quad = {});

cplx boundary_amplitude(const Aperture& aperture, const SourceSpec& incident, double k, const Vec3& r,
                        const QuadratureSpec& quad = {});

/// delta-collapsed wavelet e^{ik|R - c_p t|}; unit modulus.
cplx localized_wavelet(const SourceSpec& source, double t, double k, const Vec3& R_vec);

struct FarFieldProfile {
    double distance = 0.0;
    std::vector<double> x;          ///< screen coordinate
    std::vector<double> theta;      ///< atan(x / distance)
    std::vector<double> intensity;  ///< |Gamma|^2 normalised to peak 1
    std::vector<std::string> warnings;
};

/// |Gamma|^2 along the screen line (x, 0, distance). Attaches a regime warning when
/// distance <= 100 x the widest opening.
FarFieldProfile far_field_profile(const Aperture& aperture, const SourceSpec& incident, double k,
                                  const Grid1D& screen_line, double distance, const QuadratureSpec& quad = {},
                                  unsigned threads = 1);

}  // namespace ilab::kirchhoff
