#include "ilab/qtm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "ilab/parallel.hpp"
#include "ilab/quadrature.hpp"

namespace ilab::qtm {

namespace {

constexpr double pi = std::numbers::pi;
constexpr cplx I{0.0, 1.0};
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Shared pieces of a free Gaussian at time t: prefactor (2 pi s^2)^{-1/4}, 1/(4 sigma0 s),
// and the time derivatives of both.
struct GaussianClock {
    cplx pref;
    cplx inv;       // 1 / (4 sigma0 s)
    cplx dlogpref;  // d/dt log pref = -s'/(2s)
    cplx dinv;      // d/dt inv = -s'/(4 sigma0 s^2)

    GaussianClock(double sigma0, double t, double hbar, double mass) {
        const cplx s = sigma0 * (1.0 + I * (hbar * t / (2.0 * mass * sigma0 * sigma0)));
        const cplx ds = I * (hbar / (2.0 * mass * sigma0));
        pref = std::pow(2.0 * pi, -0.25) / std::sqrt(s);
        inv = 1.0 / (4.0 * sigma0 * s);
        dlogpref = -0.5 * ds / s;
        dinv = -ds / (4.0 * sigma0 * s * s);
    }

    WaveSample at(double xi) const {
        const cplx g = pref * std::exp(-(xi * xi) * inv);
        const cplx lin = -2.0 * xi * inv;
        return {g, lin * g, (lin * lin - 2.0 * inv) * g, (dlogpref - (xi * xi) * dinv) * g};
    }
};

WaveSample add(const WaveSample& a, const WaveSample& b, double scale) {
    return {scale * (a.psi + b.psi), scale * (a.dx + b.dx), scale * (a.dxx + b.dxx), scale * (a.dt + b.dt)};
}

void require_not_node(const WaveState& state, cplx psi, double x, double t) {
    if (!(std::abs(psi) > state.node_threshold()))
        throw NodeError("node: |psi| below threshold", x, t);
}

// R_xx / R from rho = |psi|^2 and its derivatives.
double laplacian_ratio(const WaveSample& w) {
    const double rho = std::norm(w.psi);
    const double rho_x = 2.0 * std::real(std::conj(w.psi) * w.dx);
    const double rho_xx = 2.0 * std::real(std::conj(w.psi) * w.dxx) + 2.0 * std::norm(w.dx);
    return rho_xx / (2.0 * rho) - rho_x * rho_x / (4.0 * rho * rho);
}

// Phase of psi(x_i) relative to psi(x_ref), for stencils small enough not to wrap.
double relative_phase(cplx psi, cplx ref) { return std::arg(psi / ref); }

}  // namespace

double WaveState::initial_cdf(double) const {
    throw UnsupportedCaseError("state has no initial distribution");
}

double WaveState::initial_ccdf(double) const {
    throw UnsupportedCaseError("state has no initial distribution");
}

std::pair<double, double> WaveState::initial_support() const {
    throw UnsupportedCaseError("state has no initial distribution");
}

std::vector<std::string> TwoSlitSetup::validate() const {
    if (!(half_separation > 0.0)) throw DomainError("slit half-separation Y must be positive");
    if (!(sigma0 > 0.0)) throw DomainError("slit width sigma0 must be positive");
    if (!(v_long > 0.0)) throw DomainError("longitudinal speed must be positive");
    if (!(screen_distance > 0.0)) throw DomainError("screen distance must be positive");
    if (!(hbar > 0.0) || !(mass > 0.0)) throw DomainError("hbar and mass must be positive");
    std::vector<std::string> warnings;
    if (!(half_separation / sigma0 > 1.0))
        warnings.push_back("regime: Y/sigma0 <= 1, slits are not resolved");
    return warnings;
}

GaussianPacket::GaussianPacket(double sigma0, double center, double hbar, double mass)
    : sigma0_(sigma0), center_(center), hbar_(hbar), mass_(mass) {
    if (!(sigma0 > 0.0)) throw DomainError("sigma0 must be positive");
    if (!(hbar > 0.0) || !(mass > 0.0)) throw DomainError("hbar and mass must be positive");
    threshold_ = node_fraction * std::pow(2.0 * pi * sigma0 * sigma0, -0.25);
}

WaveSample GaussianPacket::sample(double x, double t) const {
    return GaussianClock(sigma0_, t, hbar_, mass_).at(x - center_);
}

double GaussianPacket::width(double t) const noexcept {
    const double r = hbar_ * t / (2.0 * mass_ * sigma0_ * sigma0_);
    return sigma0_ * std::sqrt(1.0 + r * r);
}

double GaussianPacket::initial_cdf(double x) const { return std_normal_cdf((x - center_) / sigma0_); }
double GaussianPacket::initial_ccdf(double x) const { return std_normal_cdf((center_ - x) / sigma0_); }

std::pair<double, double> GaussianPacket::initial_support() const {
    return {center_ - 40.0 * sigma0_, center_ + 40.0 * sigma0_};
}

TwoSlitState::TwoSlitState(const TwoSlitSetup& setup) : setup_(setup) {
    warnings_ = setup_.validate();
    const double Y = setup_.half_separation;
    const double s0 = setup_.sigma0;
    overlap_ = std::exp(-Y * Y / (2.0 * s0 * s0));
    norm_ = 1.0 / std::sqrt(2.0 * (1.0 + overlap_));
    // psi(., 0) is real and positive; scan for its maximum.
    max_amp_ = 0.0;
    const std::size_t n = 4001;
    const double lo = -Y - 3.0 * s0;
    const double hi = Y + 3.0 * s0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        max_amp_ = std::max(max_amp_, std::abs(sample(x, 0.0).psi));
    }
    threshold_ = node_fraction * max_amp_;
}

WaveSample TwoSlitState::sample(double x, double t) const {
    const GaussianClock clock(setup_.sigma0, t, setup_.hbar, setup_.mass);
    const double Y = setup_.half_separation;
    return add(clock.at(x - Y), clock.at(x + Y), norm_);
}

double TwoSlitState::initial_cdf(double x) const {
    const double Y = setup_.half_separation;
    const double s0 = setup_.sigma0;
    return norm_ * norm_ *
           (std_normal_cdf((x - Y) / s0) + std_normal_cdf((x + Y) / s0) + 2.0 * overlap_ * std_normal_cdf(x / s0));
}

double TwoSlitState::initial_ccdf(double x) const {
    const double Y = setup_.half_separation;
    const double s0 = setup_.sigma0;
    return norm_ * norm_ *
           (std_normal_cdf((Y - x) / s0) + std_normal_cdf((-Y - x) / s0) + 2.0 * overlap_ * std_normal_cdf(-x / s0));
}

std::pair<double, double> TwoSlitState::initial_support() const {
    const double w = setup_.half_separation + 40.0 * setup_.sigma0;
    return {-w, w};
}

WaveSample PlaneWaveProbe::sample(double x, double t) const {
    const double omega = hbar_ * k_ * k_ / (2.0 * mass_);
    const cplx psi = std::exp(I * (k_ * x - omega * t));
    return {psi, I * k_ * psi, -k_ * k_ * psi, -I * omega * psi};
}

WaveSample evaluate(const WaveState& state, double x, double t) {
    if (!(t >= 0.0)) throw DomainError("wavefunction is defined for t >= 0 only");
    return state.sample(x, t);
}

Polar polar_decompose(const WaveState& state, double x, double t, std::optional<double> reference_S) {
    const cplx psi = evaluate(state, x, t).psi;
    require_not_node(state, psi, x, t);
    const double hbar = state.hbar();
    double S = hbar * std::arg(psi);
    if (reference_S) {
        const double period = 2.0 * pi * hbar;
        S += period * std::round((*reference_S - S) / period);
    }
    return {std::abs(psi), S};
}

double velocity(const WaveState& state, double x, double t) {
    const WaveSample w = evaluate(state, x, t);
    require_not_node(state, w.psi, x, t);
    return state.hbar() / state.mass() * std::imag(w.dx / w.psi);
}

double quantum_potential(const WaveState& state, double x, double t) {
    const WaveSample w = evaluate(state, x, t);
    require_not_node(state, w.psi, x, t);
    const double hbar = state.hbar();
    return -hbar * hbar / (2.0 * state.mass()) * laplacian_ratio(w);
}

double quantum_potential_fd(const WaveState& state, double x, double t, double h) {
    if (!(h > 0.0)) throw DomainError("stencil spacing must be positive");
    const Grid1D grid(x - 2.0 * h, h, 5);
    const auto R = sample(grid, [&](double xi) {
        const cplx psi = evaluate(state, xi, t).psi;
        require_not_node(state, psi, xi, t);
        return std::abs(psi);
    });
    const auto lap = laplacian(R);
    const double hbar = state.hbar();
    return -hbar * hbar / (2.0 * state.mass()) * lap[2] / R[2];
}

double hamilton_jacobi_residual(const WaveState& state, double x, double t) {
    const WaveSample w = evaluate(state, x, t);
    require_not_node(state, w.psi, x, t);
    const double hbar = state.hbar();
    const double m = state.mass();
    const double S_t = hbar * std::imag(w.dt / w.psi);
    const double S_x = hbar * std::imag(w.dx / w.psi);
    const double Q = -hbar * hbar / (2.0 * m) * laplacian_ratio(w);
    return S_t + S_x * S_x / (2.0 * m) + Q;
}

double hamilton_jacobi_residual_fd(const WaveState& state, double x, double t, double h) {
    if (!(h > 0.0)) throw DomainError("stencil spacing must be positive");
    if (!(t >= 0.0)) throw DomainError("wavefunction is defined for t >= 0 only");
    const double hbar = state.hbar();
    const double m = state.mass();
    const cplx centre = evaluate(state, x, t).psi;
    require_not_node(state, centre, x, t);

    // Spatial stencil: S relative to the centre node, R directly.
    const Grid1D xs(x - 2.0 * h, h, 5);
    std::vector<double> S(5);
    std::vector<double> R(5);
    for (std::size_t i = 0; i < 5; ++i) {
        const cplx psi = evaluate(state, xs.node(i), t).psi;
        require_not_node(state, psi, xs.node(i), t);
        S[i] = hbar * relative_phase(psi, centre);
        R[i] = std::abs(psi);
    }
    const double S_x = gradient(RealField1D(xs, S))[2];
    const RealField1D Rf(xs, R);
    const double Q = -hbar * hbar / (2.0 * m) * laplacian(Rf)[2] / R[2];

    // Temporal stencil: centred when possible, one-sided from t otherwise.
    const bool centred = t >= 2.0 * h;
    const Grid1D ts(centred ? t - 2.0 * h : t, h, 5);
    const std::size_t at = centred ? 2 : 0;
    std::vector<double> St(5);
    for (std::size_t i = 0; i < 5; ++i) {
        const cplx psi = evaluate(state, x, ts.node(i)).psi;
        require_not_node(state, psi, x, ts.node(i));
        St[i] = hbar * relative_phase(psi, centre);
    }
    const double S_t = gradient(RealField1D(ts, St))[at];
    return S_t + S_x * S_x / (2.0 * m) + Q;
}

MaskedField1D continuity_residual(const WaveState& state, const Grid1D& x_grid, double t) {
    const double hbar = state.hbar();
    const double m = state.mass();
    std::vector<double> values(x_grid.size());
    std::vector<std::uint8_t> mask(x_grid.size(), 0);
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
        const WaveSample w = evaluate(state, x_grid.node(i), t);
        if (!(std::abs(w.psi) > state.node_threshold())) {
            values[i] = nan;
            mask[i] = 1;
            continue;
        }
        const double rho_t = 2.0 * std::real(std::conj(w.psi) * w.dt);
        const double flux_x = hbar / m * std::imag(std::conj(w.psi) * w.dxx);
        values[i] = rho_t + flux_x;
    }
    return {RealField1D(x_grid, std::move(values)), std::move(mask)};
}

std::size_t QuantumPotentialField::masked_count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

QuantumPotentialField quantum_potential_surface(const WaveState& state, const Grid1D& x_grid, const Grid1D& t_grid,
                                                QMethod method, unsigned threads) {
    const Grid2D grid(x_grid, t_grid);
    std::vector<double> values(grid.size());
    std::vector<std::uint8_t> mask(grid.size(), 0);
    const double h = x_grid.spacing() * 1e-2;
    parallel_for(t_grid.size(), resolve_threads(threads), [&](std::size_t row) {
        const double t = t_grid.node(row);
        for (std::size_t col = 0; col < x_grid.size(); ++col) {
            const std::size_t idx = grid.index(row, col);
            const double x = x_grid.node(col);
            try {
                values[idx] = method == QMethod::Analytic ? quantum_potential(state, x, t)
                                                          : quantum_potential_fd(state, x, t, h);
            } catch (const NodeError&) {
                values[idx] = nan;
                mask[idx] = 1;
            }
        }
    });
    return {RealField2D(grid, std::move(values)), std::move(mask)};
}

// ---------------------------------------------------------------- Dormand-Prince 5(4)

namespace {

namespace dp {
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
// Continuous extension (Hairer & Wanner, dopri5).
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;
}  // namespace dp

struct DenseStep {
    double t0, h;
    std::array<double, 5> r;

    double at(double t) const {
        const double s = (t - t0) / h;
        const double s1 = 1.0 - s;
        return r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
    }
};

}  // namespace

Trajectory integrate_trajectory(const WaveState& state, double x0, double t_start, double t_end,
                                const IntegratorOptions& options) {
    if (!(t_start >= 0.0)) throw DomainError("trajectory must start at t >= 0");
    if (!(t_end > t_start)) throw DomainError("t_end must exceed t_start");
    if (options.output_samples < 2) throw DomainError("at least two output samples are required");
    if (!(options.rel_tol > 0.0) || !(options.abs_tol > 0.0)) throw DomainError("tolerances must be positive");

    const double span = t_end - t_start;
    const double atol = options.abs_tol * state.length_scale();
    const double rtol = options.rel_tol;
    const std::size_t n_out = options.output_samples;
    auto out_time = [&](std::size_t j) {
        return j + 1 == n_out ? t_end : t_start + span * static_cast<double>(j) / static_cast<double>(n_out - 1);
    };
    auto f = [&](double t, double x) { return velocity(state, x, t); };

    Trajectory traj;
    traj.samples.reserve(n_out);
    std::size_t next_out = 0;

    try {
        double t = t_start;
        double x = x0;
        double k1 = f(t, x);
        traj.samples.push_back({t, x, k1});
        next_out = 1;
        double h = 1e-3 * span;
        const double h_min = 1e-15 * span;
        while (t < t_end) {
            if (t + h > t_end) h = t_end - t;
            const double k2 = f(t + dp::c2 * h, x + h * (dp::a21 * k1));
            const double k3 = f(t + dp::c3 * h, x + h * (dp::a31 * k1 + dp::a32 * k2));
            const double k4 = f(t + dp::c4 * h, x + h * (dp::a41 * k1 + dp::a42 * k2 + dp::a43 * k3));
            const double k5 =
                f(t + dp::c5 * h, x + h * (dp::a51 * k1 + dp::a52 * k2 + dp::a53 * k3 + dp::a54 * k4));
            const double k6 = f(t + h, x + h * (dp::a61 * k1 + dp::a62 * k2 + dp::a63 * k3 + dp::a64 * k4 +
                                                dp::a65 * k5));
            const double x_new =
                x + h * (dp::a71 * k1 + dp::a73 * k3 + dp::a74 * k4 + dp::a75 * k5 + dp::a76 * k6);
            const double t_new = (t + h >= t_end) ? t_end : t + h;
            const double k7 = f(t_new, x_new);
            const double err_abs =
                std::abs(h * (dp::e1 * k1 + dp::e3 * k3 + dp::e4 * k4 + dp::e5 * k5 + dp::e6 * k6 + dp::e7 * k7));
            const double scale = atol + rtol * std::max(std::abs(x), std::abs(x_new));
            const double err = err_abs / scale;

            if (err <= 1.0) {
                const double diff = x_new - x;
                const double bspl = h * k1 - diff;
                const DenseStep dense{t, h,
                                      {x, diff, bspl, diff - h * k7 - bspl,
                                       h * (dp::d1 * k1 + dp::d3 * k3 + dp::d4 * k4 + dp::d5 * k5 + dp::d6 * k6 +
                                            dp::d7 * k7)}};
                while (next_out < n_out && out_time(next_out) <= t_new) {
                    const double to = out_time(next_out);
                    const double xo = next_out + 1 == n_out ? x_new : dense.at(to);
                    traj.samples.push_back({to, xo, f(to, xo)});
                    ++next_out;
                }
                t = t_new;
                x = x_new;
                k1 = k7;
            }
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= err <= 1.0 ? factor : std::min(1.0, factor);
            if (t < t_end && h < h_min) throw StepUnderflowError("integrate_trajectory: step size underflow");
        }
    } catch (const NodeError&) {
        traj.status = TrajectoryStatus::NodeAborted;
    }
    return traj;
}

// ---------------------------------------------------------------- seeding

double inverse_initial_cdf(const WaveState& state, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("probability must lie in (0, 1)");
    auto [lo, hi] = state.initial_support();
    // Solve on whichever tail keeps full relative precision.
    const bool lower = u <= 0.5;
    const double target = lower ? u : 1.0 - u;
    for (int iter = 0; iter < 200; ++iter) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const bool left_of_root = lower ? state.initial_cdf(mid) < target : state.initial_ccdf(mid) > target;
        (left_of_root ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

std::vector<double> quantile_positions(const WaveState& state, std::size_t n) {
    if (n < 1) throw DomainError("need at least one position");
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i)
        out[i] = inverse_initial_cdf(state, (static_cast<double>(i) + 0.5) / static_cast<double>(n));
    return out;
}

UniformStream::UniformStream(std::uint64_t seed) : engine_(seed) {}

double UniformStream::next() {
    // 53 random bits, offset by half an ulp so 0 and 1 are never produced.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

std::vector<double> random_positions(const WaveState& state, std::size_t n, std::uint64_t seed) {
    UniformStream stream(seed);
    std::vector<double> out(n);
    for (auto& x : out) x = inverse_initial_cdf(state, stream.next());
    return out;
}

TrajectoryEnsemble trajectory_fan(const WaveState& state, std::size_t n, const Seeding& seeding, double t_end,
                                  const IntegratorOptions& options, unsigned threads) {
    if (n < 1) throw DomainError("trajectory fan needs N >= 1");
    const std::vector<double> starts = std::holds_alternative<QuantileSeeding>(seeding)
                                           ? quantile_positions(state, n)
                                           : random_positions(state, n, std::get<RandomSeeding>(seeding).seed);
    TrajectoryEnsemble ens;
    ens.seeding = seeding;
    ens.trajectories.resize(n);
    std::vector<std::string> errors(n);
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        try {
            ens.trajectories[i] = integrate_trajectory(state, starts[i], 0.0, t_end, options);
        } catch (const std::exception& e) {
            errors[i] = e.what();
            ens.trajectories[i].samples = {{0.0, starts[i], nan}};
            ens.trajectories[i].status = TrajectoryStatus::NodeAborted;
        }
    });
    for (std::size_t i = 0; i < n; ++i) {
        const auto& tr = ens.trajectories[i];
        if (!errors[i].empty())
            ens.failures.push_back({i, errors[i]});
        else if (tr.status == TrajectoryStatus::NodeAborted)
            ens.failures.push_back({i, "node-aborted"});
        else
            ens.screen_hits.push_back(tr.final_x());
    }
    return ens;
}

double max_acceleration(const Trajectory& trajectory, double t_lo, double t_hi) {
    const auto& s = trajectory.samples;
    if (s.size() < 3) throw DomainError("need at least 3 samples for an acceleration estimate");
    const double dt = (s.back().t - s.front().t) / static_cast<double>(s.size() - 1);
    std::vector<double> v(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) v[i] = s[i].v;
    const auto a = gradient(RealField1D(Grid1D(s.front().t, dt, s.size()), std::move(v)));
    double best = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i].t > t_lo && s[i].t < t_hi) best = std::max(best, std::abs(a[i]));
    return best;
}

std::size_t order_violations(const Trajectory& a, const Trajectory& b) {
    const std::size_t n = std::min(a.samples.size(), b.samples.size());
    if (n == 0) return 0;
    const double s0 = a.samples[0].x - b.samples[0].x;
    std::size_t bad = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a.samples[i].x - b.samples[i].x;
        if (!(d * s0 > 0.0)) ++bad;
    }
    return bad;
}

// ---------------------------------------------------------------- accumulation

AccumulationResult accumulate_hits(const WaveState& state, std::size_t n, std::uint64_t seed,
                                   const std::vector<std::size_t>& checkpoints, double t_end, const Binning& binning,
                                   const IntegratorOptions& options, unsigned threads) {
    if (!std::is_sorted(checkpoints.begin(), checkpoints.end()))
        throw DomainError("checkpoints must be sorted ascending");
    if (!checkpoints.empty() && checkpoints.back() > n) throw DomainError("checkpoint exceeds electron count");
    if (!(binning.hi > binning.lo) || binning.bins < 1) throw DomainError("invalid binning");

    AccumulationResult res;
    res.binning = binning;
    res.initial = random_positions(state, n, seed);
    res.hits.assign(n, nan);
    IntegratorOptions opt = options;
    opt.output_samples = 2;
    parallel_for(n, resolve_threads(threads), [&](std::size_t i) {
        try {
            const Trajectory tr = integrate_trajectory(state, res.initial[i], 0.0, t_end, opt);
            if (tr.status == TrajectoryStatus::Completed) res.hits[i] = tr.final_x();
        } catch (const std::exception&) {
            // counted below as failed
        }
    });
    for (double h : res.hits)
        if (std::isnan(h)) ++res.failed;

    HitHistogram running{0, 0, std::vector<std::uint64_t>(binning.bins, 0), 0, 0};
    std::size_t consumed = 0;
    for (std::size_t c : checkpoints) {
        for (; consumed < c; ++consumed) {
            const double h = res.hits[consumed];
            if (std::isnan(h)) continue;
            ++running.recorded;
            if (h < binning.lo) {
                ++running.below;
            } else if (h >= binning.hi) {
                ++running.above;
            } else {
                auto b = static_cast<std::size_t>((h - binning.lo) / binning.width());
                ++running.counts[std::min(b, binning.bins - 1)];
            }
        }
        running.electrons = c;
        res.histograms.push_back(running);
    }
    return res;
}

BinProbabilities density_bin_probabilities(const WaveState& state, double t, const Binning& binning,
                                           double tail_extent) {
    static const GaussLegendreRule rule = gauss_legendre(10);
    auto density = [&](double x) { return std::norm(evaluate(state, x, t).psi); };
    BinProbabilities p;
    p.inside.resize(binning.bins);
    for (std::size_t i = 0; i < binning.bins; ++i)
        p.inside[i] = integrate_panels(density, binning.edge(i), binning.edge(i + 1), 4, rule);
    p.below = integrate_panels(density, binning.lo - tail_extent, binning.lo, 400, rule);
    p.above = integrate_panels(density, binning.hi, binning.hi + tail_extent, 400, rule);
    return p;
}

double total_variation(const HitHistogram& histogram, const BinProbabilities& reference) {
    if (histogram.counts.size() != reference.inside.size()) throw DomainError("binning mismatch");
    if (histogram.recorded == 0) throw DomainError("empty histogram");
    const double n = static_cast<double>(histogram.recorded);
    CompensatedSum<double> acc;
    for (std::size_t i = 0; i < histogram.counts.size(); ++i)
        acc.add(std::abs(static_cast<double>(histogram.counts[i]) / n - reference.inside[i]));
    acc.add(std::abs(static_cast<double>(histogram.below) / n - reference.below));
    acc.add(std::abs(static_cast<double>(histogram.above) / n - reference.above));
    return 0.5 * acc.value();
}

Binning default_screen_binning(const TwoSlitSetup& setup, std::size_t bins) {
    const GaussianPacket g(setup.sigma0, 0.0, setup.hbar, setup.mass);
    const double half = setup.half_separation + 8.0 * g.width(setup.screen_time());
    return {-half, half, bins};
}

}  // namespace ilab::qtm
