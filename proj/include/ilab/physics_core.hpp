#pragma once

// Shared physical constants, the nondimensional unit layer, uniform grids and
// second-order finite-difference operators.
//
// All simulation code works in units with hbar = m_e = 1 and a chosen length
// unit. UnitSystem converts to and from SI.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <type_traits>
#include <vector>

#include "ilab/errors.hpp"

namespace ilab {

using cplx = std::complex<double>;

// CODATA 2018 exact/recommended values, SI.
namespace codata {
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double electron_mass = 9.1093837015e-31; // kg
inline constexpr double elementary_charge = 1.602176634e-19; // C (J per eV)
}  // namespace codata

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend constexpr Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
    friend constexpr bool operator==(Vec3, Vec3) = default;
};

inline constexpr double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

enum class Dimension {
    Length,
    Time,
    Mass,
    Energy,
    Action,
    Wavenumber,
    AngularFrequency,
    Velocity,
};

/// Nondimensionalization with hbar = m_e = 1 and a free length unit.
///
/// Derived units: time m l^2/hbar, energy hbar^2/(m l^2), velocity hbar/(m l).
class UnitSystem {
public:
    explicit UnitSystem(double length_unit_m = 1e-9);

    double length_unit() const noexcept { return length_m_; }

    /// SI value of one nondimensional unit of `dim`.
    double unit(Dimension dim) const;

    double to_nondim(double si_value, Dimension dim) const { return si_value / unit(dim); }
    double to_si(double value, Dimension dim) const { return value * unit(dim); }

private:
    double length_m_;
};

/// sqrt(2 m E)/hbar. Throws DomainError for E < 0 or m <= 0.
double wavenumber_from_kinetic(double kinetic_energy, double mass, double hbar = 1.0);

/// Constants and energies of one beam. Immutable once built.
///
/// The total energy E_T = hbar*omega = m*u^2 includes the intrinsic components;
/// it is set either from omega or from u and the other is derived.
class PhysicalParams {
public:
    /// Beam of kinetic energy E_kin > 0; k and lambda follow from the free dispersion.
    static PhysicalParams from_kinetic(double kinetic_energy, double mass = 1.0, double hbar = 1.0);

    PhysicalParams with_total_from_omega(double omega) const;
    PhysicalParams with_total_from_speed(double u) const;

    double hbar() const noexcept { return hbar_; }
    double mass() const noexcept { return mass_; }
    double kinetic_energy() const noexcept { return kinetic_; }
    double wavenumber() const noexcept { return k_; }
    double wavelength() const noexcept { return lambda_; }
    std::optional<double> total_energy() const noexcept { return total_; }
    std::optional<double> omega() const noexcept { return omega_; }
    std::optional<double> intrinsic_speed() const noexcept { return u_; }

    PhysicalParams to_nondim(const UnitSystem& units) const;
    PhysicalParams to_si(const UnitSystem& units) const;

private:
    PhysicalParams() = default;

    double hbar_ = 1.0;
    double mass_ = 1.0;
    double kinetic_ = 0.0;
    double k_ = 0.0;
    double lambda_ = 0.0;
    std::optional<double> total_;
    std::optional<double> omega_;
    std::optional<double> u_;
};

/// Uniform 1-D grid. Node i sits at origin + i*spacing, evaluated directly.
class Grid1D {
public:
    Grid1D(double origin, double spacing, std::size_t count);

    /// count nodes from lo to hi inclusive.
    static Grid1D spanning(double lo, double hi, std::size_t count);

    double origin() const noexcept { return origin_; }
    double spacing() const noexcept { return spacing_; }
    std::size_t size() const noexcept { return count_; }
    double node(std::size_t i) const noexcept { return origin_ + static_cast<double>(i) * spacing_; }
    double back() const noexcept { return node(count_ - 1); }
    std::vector<double> nodes() const;

private:
    double origin_;
    double spacing_;
    std::size_t count_;
};

/// Tensor product of two uniform axes. Storage is row-major: index = row*cols + col,
/// with `cols` running along the first axis.
class Grid2D {
public:
    Grid2D(Grid1D cols, Grid1D rows) : cols_(cols), rows_(rows) {}

    const Grid1D& cols() const noexcept { return cols_; }
    const Grid1D& rows() const noexcept { return rows_; }
    std::size_t size() const noexcept { return cols_.size() * rows_.size(); }
    std::size_t index(std::size_t row, std::size_t col) const noexcept { return row * cols_.size() + col; }

private:
    Grid1D cols_;
    Grid1D rows_;
};

template <class T>
struct Field1D {
    Grid1D grid;
    std::vector<T> values;

    Field1D(Grid1D g, std::vector<T> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw DomainError("field size does not match grid node count");
    }
    const T& operator[](std::size_t i) const { return values[i]; }
};

template <class T>
struct Field2D {
    Grid2D grid;
    std::vector<T> values;

    Field2D(Grid2D g, std::vector<T> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size()) throw DomainError("field size does not match grid node count");
    }
    const T& at(std::size_t row, std::size_t col) const { return values[grid.index(row, col)]; }
};

using RealField1D = Field1D<double>;
using ComplexField1D = Field1D<cplx>;
using RealField2D = Field2D<double>;
using ComplexField2D = Field2D<cplx>;

namespace detail {

inline void require_stencil(std::size_t n) {
    if (n < 3) throw DomainError("finite differences need at least 3 nodes per axis");
}

// First derivative of a strided sequence: central inside, one-sided 2nd order at the ends.
template <class T>
void diff1(const T* f, std::size_t n, std::size_t stride, double h, T* out) {
    const double inv2h = 1.0 / (2.0 * h);
    out[0] = (-3.0 * f[0] + 4.0 * f[stride] - f[2 * stride]) * inv2h;
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i * stride] = (f[(i + 1) * stride] - f[(i - 1) * stride]) * inv2h;
    const std::size_t l = (n - 1) * stride;
    out[l] = (3.0 * f[l] - 4.0 * f[l - stride] + f[l - 2 * stride]) * inv2h;
}

// Second derivative; the 4-point one-sided boundary stencil keeps 2nd order at the ends.
// With exactly 3 nodes the boundary falls back to the 3-point stencil (still exact for quadratics).
template <class T>
void diff2(const T* f, std::size_t n, std::size_t stride, double h, T* out) {
    const double invh2 = 1.0 / (h * h);
    for (std::size_t i = 1; i + 1 < n; ++i)
        out[i * stride] = (f[(i + 1) * stride] - 2.0 * f[i * stride] + f[(i - 1) * stride]) * invh2;
    const std::size_t l = (n - 1) * stride;
    if (n == 3) {
        out[0] = out[stride];
        out[l] = out[stride];
        return;
    }
    out[0] = (2.0 * f[0] - 5.0 * f[stride] + 4.0 * f[2 * stride] - f[3 * stride]) * invh2;
    out[l] = (2.0 * f[l] - 5.0 * f[l - stride] + 4.0 * f[l - 2 * stride] - f[l - 3 * stride]) * invh2;
}

}  // namespace detail

template <class T>
Field1D<T> gradient(const Field1D<T>& field) {
    const std::size_t n = field.grid.size();
    detail::require_stencil(n);
    std::vector<T> out(n);
    detail::diff1(field.values.data(), n, 1, field.grid.spacing(), out.data());
    return {field.grid, std::move(out)};
}

template <class T>
Field1D<T> laplacian(const Field1D<T>& field) {
    const std::size_t n = field.grid.size();
    detail::require_stencil(n);
    std::vector<T> out(n);
    detail::diff2(field.values.data(), n, 1, field.grid.spacing(), out.data());
    return {field.grid, std::move(out)};
}

enum class Axis { Cols, Rows };

/// Partial derivative along one axis of a 2-D field.
template <class T>
Field2D<T> gradient(const Field2D<T>& field, Axis axis) {
    const auto& g = field.grid;
    detail::require_stencil(g.cols().size());
    detail::require_stencil(g.rows().size());
    std::vector<T> out(g.size());
    if (axis == Axis::Cols) {
        for (std::size_t r = 0; r < g.rows().size(); ++r)
            detail::diff1(field.values.data() + g.index(r, 0), g.cols().size(), 1, g.cols().spacing(),
                          out.data() + g.index(r, 0));
    } else {
        const std::size_t stride = g.cols().size();
        for (std::size_t c = 0; c < g.cols().size(); ++c)
            detail::diff1(field.values.data() + c, g.rows().size(), stride, g.rows().spacing(), out.data() + c);
    }
    return {g, std::move(out)};
}

template <class T>
Field2D<T> laplacian(const Field2D<T>& field) {
    const auto& g = field.grid;
    detail::require_stencil(g.cols().size());
    detail::require_stencil(g.rows().size());
    std::vector<T> dxx(g.size());
    std::vector<T> dyy(g.size());
    for (std::size_t r = 0; r < g.rows().size(); ++r)
        detail::diff2(field.values.data() + g.index(r, 0), g.cols().size(), 1, g.cols().spacing(),
                      dxx.data() + g.index(r, 0));
    const std::size_t stride = g.cols().size();
    for (std::size_t c = 0; c < g.cols().size(); ++c)
        detail::diff2(field.values.data() + c, g.rows().size(), stride, g.rows().spacing(), dyy.data() + c);
    for (std::size_t i = 0; i < dxx.size(); ++i) dxx[i] += dyy[i];
    return {g, std::move(dxx)};
}

/// Samples f at every node of `grid`.
template <class F>
auto sample(const Grid1D& grid, F&& f) {
    using T = std::decay_t<decltype(f(0.0))>;
    std::vector<T> v(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = f(grid.node(i));
    return Field1D<T>(grid, std::move(v));
}

}  // namespace ilab
