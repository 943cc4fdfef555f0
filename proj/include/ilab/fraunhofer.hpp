#pragma once

// Far-field single-slit profile and the phase-resolved intensity dI = sinc^2 * cos^2(alpha).

#include <span>
#include <vector>

#include "ilab/physics_core.hpp"

namespace ilab::fraunhofer {

struct FraunhoferSpec {
    double k = 1.0;      ///< wavenumber
    double a = 1.0;      ///< slit scale multiplying k*theta; a = 1 gives sin(k theta)/(k theta)
    double alpha = 0.0;  ///< initial phase, reduced to [0, 2pi) by validated()
    std::vector<double> theta;  ///< azimuthal angles, radians

    /// Checks k > 0, a > 0 and returns a copy with alpha reduced to [0, 2pi).
    FraunhoferSpec validated() const;
};

/// Reduces an angle to [0, 2pi).
double reduce_phase(double alpha);

/// sin(k a theta)/(k a theta), with a series branch for |k a theta| < 1e-4.
double sinc_amplitude(double k, double theta, double a = 1.0);

/// cos^2(alpha) evaluated as (1 + cos 2 alpha)/2 so that alpha = pi/2 gives exactly 0.
double phase_weight(double alpha);

/// sinc^2(k a theta) * cos^2(alpha).
double phase_intensity(double k, double theta, double alpha, double a = 1.0);

/// Row-major table T[i][j] = phase_intensity(k, theta_i, alpha_j, a).
struct IntensityTable {
    std::vector<double> theta;
    std::vector<double> alpha;
    std::vector<double> values;  ///< theta.size() rows by alpha.size() columns

    double at(std::size_t i, std::size_t j) const { return values[i * alpha.size() + j]; }
};

IntensityTable phase_scan_surface(const FraunhoferSpec& spec, std::span<const double> alpha_grid);

}  // namespace ilab::fraunhofer
