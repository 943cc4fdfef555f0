#include "ilab/kirchhoff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ilab/parallel.hpp"
#include "ilab/quadrature.hpp"

namespace ilab::kirchhoff {

namespace {

constexpr cplx I{0.0, 1.0};

bool overlap(const Rect& a, const Rect& b) {
    return std::abs(a.cx - b.cx) < a.half_x + b.half_x && std::abs(a.cy - b.cy) < a.half_y + b.half_y;
}

struct RectSum {
    cplx value;
    double modulus;
};

// Largest |d phase / d x'| (and y') of the integrand over the opening corners.
std::pair<double, double> phase_slopes(const Rect& o, const SourceSpec& src, double k, const Vec3& r) {
    double sx = 0.0;
    double sy = 0.0;
    for (double fx : {-1.0, 0.0, 1.0}) {
        for (double fy : {-1.0, 0.0, 1.0}) {
            const Vec3 p{o.cx + fx * o.half_x, o.cy + fy * o.half_y, 0.0};
            const Vec3 d = r - p;
            const double dn = norm(d);
            double gx = std::abs(d.x) / dn;
            double gy = std::abs(d.y) / dn;
            if (src.position) {
                const Vec3 e = p - *src.position;
                const double en = norm(e);
                gx += std::abs(e.x) / en;
                gy += std::abs(e.y) / en;
            }
            sx = std::max(sx, k * gx);
            sy = std::max(sy, k * gy);
        }
    }
    return {sx, sy};
}

RectSum integrate_rect(const Rect& o, const SourceSpec& src, double k, const Vec3& r, std::size_t nx,
                       std::size_t ny, const GaussLegendreRule& rule) {
    CompensatedSum<cplx> acc;
    CompensatedSum<double> mod;
    const double wx = 2.0 * o.half_x / static_cast<double>(nx);
    const double wy = 2.0 * o.half_y / static_cast<double>(ny);
    const double jac = 0.25 * wx * wy;
    const double x0 = o.cx - o.half_x;
    const double y0 = o.cy - o.half_y;
    for (std::size_t px = 0; px < nx; ++px) {
        const double mx = x0 + (static_cast<double>(px) + 0.5) * wx;
        for (std::size_t py = 0; py < ny; ++py) {
            const double my = y0 + (static_cast<double>(py) + 0.5) * wy;
            for (std::size_t i = 0; i < rule.order(); ++i) {
                const double xp = mx + 0.5 * wx * rule.nodes[i];
                for (std::size_t j = 0; j < rule.order(); ++j) {
                    const Vec3 rp{xp, my + 0.5 * wy * rule.nodes[j], 0.0};
                    const cplx f = incident_field(src, k, rp) * greens_kernel(r, rp, k);
                    const double w = rule.weights[i] * rule.weights[j] * jac;
                    acc.add(w * f);
                    mod.add(w * std::abs(f));
                }
            }
        }
    }
    return {acc.value(), mod.value()};
}

}  // namespace

void Aperture::validate() const {
    if (openings.empty()) throw DomainError("aperture has no openings");
    for (const auto& o : openings)
        if (!(o.half_x > 0.0) || !(o.half_y > 0.0)) throw DomainError("opening half-widths must be positive");
    for (std::size_t i = 0; i < openings.size(); ++i)
        for (std::size_t j = i + 1; j < openings.size(); ++j)
            if (overlap(openings[i], openings[j])) throw DomainError("aperture openings overlap");
}

double Aperture::max_opening_width() const {
    double w = 0.0;
    for (const auto& o : openings) w = std::max({w, 2.0 * o.half_x, 2.0 * o.half_y});
    return w;
}

double Aperture::max_extent() const {
    double e = 0.0;
    for (const auto& o : openings)
        e = std::max(e, std::hypot(std::abs(o.cx) + o.half_x, std::abs(o.cy) + o.half_y));
    return e;
}

Aperture Aperture::single_slit(double half_x, double half_y) {
    return Aperture{{Rect{0.0, 0.0, half_x, half_y}}};
}

Aperture Aperture::double_slit(double separation, double half_x, double half_y) {
    return Aperture{{Rect{-0.5 * separation, 0.0, half_x, half_y}, Rect{0.5 * separation, 0.0, half_x, half_y}}};
}

void SourceSpec::validate() const {
    if (position && !(position->z < 0.0)) throw DomainError("source must lie strictly on the z < 0 side of the aperture");
}

void QuadratureSpec::validate() const {
    if (order < 2) throw DomainError("quadrature order must be at least 2");
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw DomainError("rel_tol must lie in (0, 1)");
}

cplx greens_kernel(const Vec3& r, const Vec3& r_prime, double k, const Vec3& normal) {
    const Vec3 d = r - r_prime;
    const double dist = norm(d);
    if (!(dist > 0.0)) throw DomainError("greens_kernel: coincident points");
    if (k == 0.0) throw DomainError("greens_kernel: wavenumber must be non-zero");
    const double kd = k * dist;
    return std::exp(I * kd) * (dot(d, normal) / (dist * dist)) * (1.0 + I / kd);
}

cplx incident_field(const SourceSpec& source, double k, const Vec3& r_prime) {
    const cplx phase = std::exp(I * source.phase_alpha);
    if (!source.position) return phase * std::exp(I * (k * r_prime.z));
    const double d = norm(r_prime - *source.position);
    return phase * std::exp(I * (k * d)) / d;
}

AmplitudeEstimate boundary_amplitude_detailed(const Aperture& aperture, const SourceSpec& incident, double k,
                                              const Vec3& r, const QuadratureSpec& quad) {
    aperture.validate();
    incident.validate();
    quad.validate();
    if (!(k > 0.0)) throw DomainError("wavenumber must be positive");
    if (!(r.z > 0.0)) throw DomainError("observation point must lie on the z > 0 side");

    const GaussLegendreRule rule = gauss_legendre(quad.order);
    const double lambda = 2.0 * std::numbers::pi / k;
    const cplx prefactor = I / (2.0 * lambda);

    struct Level {
        std::size_t nx, ny;
    };
    std::vector<Level> base;
    base.reserve(aperture.openings.size());
    for (const auto& o : aperture.openings) {
        const auto [sx, sy] = phase_slopes(o, incident, k, r);
        const auto panels = [](double spread) {
            return static_cast<std::size_t>(std::max(1.0, std::ceil(spread / std::numbers::pi)));
        };
        base.push_back({panels(sx * 2.0 * o.half_x), panels(sy * 2.0 * o.half_y)});
    }

    cplx previous{};
    for (std::size_t level = 0; level <= quad.max_refinement; ++level) {
        const std::size_t mult = std::size_t{1} << level;
        cplx total{};
        double modulus = 0.0;
        std::size_t widest = 0;
        for (std::size_t i = 0; i < aperture.openings.size(); ++i) {
            const auto s = integrate_rect(aperture.openings[i], incident, k, r, base[i].nx * mult,
                                          base[i].ny * mult, rule);
            total += s.value;
            modulus += s.modulus;
            widest = std::max({widest, base[i].nx * mult, base[i].ny * mult});
        }
        total *= prefactor;
        modulus *= std::abs(prefactor);
        if (level > 0 && std::abs(total - previous) <= quad.rel_tol * modulus)
            return {total, previous, modulus, widest};
        if (level == quad.max_refinement)
            throw ConvergenceError("boundary_amplitude: refinement budget exhausted before rel_tol", total,
                                   previous);
        previous = total;
    }
    throw ConvergenceError("boundary_amplitude: no refinement performed", previous, previous);
}

cplx boundary_amplitude(const Aperture& aperture, const SourceSpec& incident, double k, const Vec3& r,
                        const QuadratureSpec& quad) {
    return boundary_amplitude_detailed(aperture, incident, k, r, quad).value;
}

cplx localized_wavelet(const SourceSpec& source, double t, double k, const Vec3& R_vec) {
    return std::exp(I * (k * norm(R_vec - t * source.velocity)));
}

FarFieldProfile far_field_profile(const Aperture& aperture, const SourceSpec& incident, double k,
                                  const Grid1D& screen_line, double distance, const QuadratureSpec& quad,
                                  unsigned threads) {
    aperture.validate();
    if (!(distance > 0.0)) throw DomainError("screen distance must be positive");
    FarFieldProfile out;
    out.distance = distance;
    if (!(distance > 100.0 * aperture.max_opening_width()))
        out.warnings.push_back("regime: screen distance is not > 100 x widest opening; Fraunhofer limit not reached");
    const std::size_t n = screen_line.size();
    out.x = screen_line.nodes();
    out.theta.resize(n);
    std::vector<cplx> gamma(n);
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        out.theta[i] = std::atan2(out.x[i], distance);
        gamma[i] = boundary_amplitude(aperture, incident, k, Vec3{out.x[i], 0.0, distance}, quad);
    });
    out.intensity.resize(n);
    double peak = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out.intensity[i] = std::norm(gamma[i]);
        peak = std::max(peak, out.intensity[i]);
    }
    if (peak > 0.0)
        for (auto& v : out.intensity) v /= peak;
    return out;
}

}  // namespace ilab::kirchhoff
