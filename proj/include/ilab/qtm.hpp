#pragma once

// Quantum theory of motion for the two-Gaussian-slit problem.
//
// The post-slit state is the free evolution of two Gaussians centred at x = +-Y.
// Longitudinal motion is parametric (t = y / v_long), so everything here is 1-D in x.
// States are immutable; nothing in this header can modify a state.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ilab/physics_core.hpp"

namespace ilab::qtm {

/// psi and the partial derivatives needed by the guidance law, Q and the residuals.
struct WaveSample {
    cplx psi;
    cplx dx;
    cplx dxx;
    cplx dt;
};

/// Analytic 1-D wave state.
class WaveState {
public:
    virtual ~WaveState() = default;

    virtual WaveSample sample(double x, double t) const = 0;
    virtual double hbar() const noexcept = 0;
    virtual double mass() const noexcept = 0;
    /// |psi| at or below this is treated as a node.
    virtual double node_threshold() const noexcept = 0;
    /// Natural length of the state (absolute tolerance scale for the integrator).
    virtual double length_scale() const noexcept = 0;

    /// CDF / complementary CDF of |psi(., 0)|^2. Default: UnsupportedCaseError.
    virtual double initial_cdf(double x) const;
    virtual double initial_ccdf(double x) const;
    /// Interval that contains all initial probability to double precision.
    virtual std::pair<double, double> initial_support() const;

    cplx psi(double x, double t) const { return sample(x, t).psi; }
};

struct TwoSlitSetup {
    double half_separation = 5.0;  ///< Y, slits at +-Y
    double sigma0 = 1.0;           ///< Gaussian slit width
    double v_long = 1.0;           ///< longitudinal speed, t = y / v_long
    double screen_distance = 40.0; ///< L
    double hbar = 1.0;
    double mass = 1.0;

    double screen_time() const noexcept { return screen_distance / v_long; }
    /// Throws DomainError on invalid parameters; returns regime warnings (e.g. Y/sigma0 <= 1).
    std::vector<std::string> validate() const;
};

/// Free Gaussian packet (2 pi s_t^2)^{-1/4} exp(-(x - c)^2 / (4 sigma0 s_t)),
/// s_t = sigma0 (1 + i hbar t / (2 m sigma0^2)).
class GaussianPacket final : public WaveState {
public:
    GaussianPacket(double sigma0, double center = 0.0, double hbar = 1.0, double mass = 1.0);

    WaveSample sample(double x, double t) const override;
    double hbar() const noexcept override { return hbar_; }
    double mass() const noexcept override { return mass_; }
    double node_threshold() const noexcept override { return threshold_; }
    double length_scale() const noexcept override { return sigma0_; }
    double initial_cdf(double x) const override;
    double initial_ccdf(double x) const override;
    std::pair<double, double> initial_support() const override;

    double sigma0() const noexcept { return sigma0_; }
    double center() const noexcept { return center_; }
    /// sigma_t = sigma0 sqrt(1 + (hbar t / (2 m sigma0^2))^2)
    double width(double t) const noexcept;

private:
    double sigma0_;
    double center_;
    double hbar_;
    double mass_;
    double threshold_;
};

/// N [G(x - Y, t) + G(x + Y, t)] with N fixing unit norm at t = 0.
class TwoSlitState final : public WaveState {
public:
    explicit TwoSlitState(const TwoSlitSetup& setup);

    WaveSample sample(double x, double t) const override;
    double hbar() const noexcept override { return setup_.hbar; }
    double mass() const noexcept override { return setup_.mass; }
    double node_threshold() const noexcept override { return threshold_; }
    double length_scale() const noexcept override { return setup_.sigma0; }
    double initial_cdf(double x) const override;
    double initial_ccdf(double x) const override;
    std::pair<double, double> initial_support() const override;

    const TwoSlitSetup& setup() const noexcept { return setup_; }
    double normalization() const noexcept { return norm_; }
    double max_amplitude() const noexcept { return max_amp_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

private:
    TwoSlitSetup setup_;
    double norm_;
    double overlap_;  ///< exp(-Y^2 / (2 sigma0^2))
    double max_amp_;
    double threshold_;
    std::vector<std::string> warnings_;
};

/// e^{i(kx - hbar k^2 t / 2m)}; Q = 0 and straight-line guidance. Test probe.
class PlaneWaveProbe final : public WaveState {
public:
    explicit PlaneWaveProbe(double k, double hbar = 1.0, double mass = 1.0) : k_(k), hbar_(hbar), mass_(mass) {}

    WaveSample sample(double x, double t) const override;
    double hbar() const noexcept override { return hbar_; }
    double mass() const noexcept override { return mass_; }
    double node_threshold() const noexcept override { return 1e-12; }
    double length_scale() const noexcept override { return 1.0; }

private:
    double k_;
    double hbar_;
    double mass_;
};

/// Relative node threshold: |psi| <= eps_node * max|psi(., 0)|.
inline constexpr double node_fraction = 1e-12;

/// Checked evaluation; t < 0 is a DomainError.
WaveSample evaluate(const WaveState& state, double x, double t);

struct Polar {
    double R;
    double S;
};

/// R = |psi|, S = hbar arg psi. With `reference_S` the branch closest to it is returned,
/// which keeps S continuous along an evaluation path. NodeError if |psi| <= threshold.
Polar polar_decompose(const WaveState& state, double x, double t, std::optional<double> reference_S = std::nullopt);

/// (hbar/m) Im(psi_x / psi).
double velocity(const WaveState& state, double x, double t);

/// Q = -hbar^2/(2m) R_xx / R from analytic derivatives of rho = |psi|^2.
double quantum_potential(const WaveState& state, double x, double t);

/// Q from the finite-difference Laplacian of R on a 5-node stencil of spacing h.
double quantum_potential_fd(const WaveState& state, double x, double t, double h);

/// dS/dt + (dS/dx)^2 / 2m + Q with V = 0.
double hamilton_jacobi_residual(const WaveState& state, double x, double t);

/// Same residual with S and R differentiated numerically on stencils of spacing h.
double hamilton_jacobi_residual_fd(const WaveState& state, double x, double t, double h);

struct MaskedField1D {
    RealField1D field;
    std::vector<std::uint8_t> mask;  ///< 1 where |psi| is below the node threshold
};

/// d(R^2)/dt + d(R^2 v)/dx on the grid from analytic derivatives; masked at nodes (value NaN).
MaskedField1D continuity_residual(const WaveState& state, const Grid1D& x_grid, double t);

enum class QMethod { Analytic, FiniteDifference };

/// Q over (x = columns, t = rows); masked cells hold NaN.
struct QuantumPotentialField {
    RealField2D field;
    std::vector<std::uint8_t> mask;
    std::size_t masked_count() const;
};

QuantumPotentialField quantum_potential_surface(const WaveState& state, const Grid1D& x_grid, const Grid1D& t_grid,
                                                QMethod method = QMethod::Analytic, unsigned threads = 1);

// ---------------------------------------------------------------- trajectories

struct TrajectorySample {
    double t;
    double x;
    double v;
};

enum class TrajectoryStatus { Completed, NodeAborted };

struct Trajectory {
    std::vector<TrajectorySample> samples;
    TrajectoryStatus status = TrajectoryStatus::Completed;

    double final_x() const { return samples.back().x; }
};

struct IntegratorOptions {
    double rel_tol = 1e-9;
    /// Absolute tolerance in units of the state's length scale.
    double abs_tol = 1e-9;
    /// Uniformly spaced output samples including both ends; >= 2.
    std::size_t output_samples = 400;
};

/// Adaptive Dormand-Prince 5(4) on dx/dt = v(x, t) with dense output.
/// Node encounters end the path with status NodeAborted (samples up to the last good one).
/// Throws StepUnderflowError if the step falls below 1e-15 of the span.
Trajectory integrate_trajectory(const WaveState& state, double x0, double t_start, double t_end,
                                const IntegratorOptions& options = {});

/// Quantiles q_i = (i + 1/2)/N of |psi(., 0)|^2.
std::vector<double> quantile_positions(const WaveState& state, std::size_t n);

/// Inverse-CDF position for probability u in (0, 1).
double inverse_initial_cdf(const WaveState& state, double u);

/// Deterministic uniform (0, 1) stream: mt19937_64 with 53-bit mantissa extraction.
class UniformStream {
public:
    explicit UniformStream(std::uint64_t seed);
    double next();

private:
    std::mt19937_64 engine_;
};

/// Draws n initial positions from |psi(., 0)|^2 by inverse CDF.
std::vector<double> random_positions(const WaveState& state, std::size_t n, std::uint64_t seed);

struct QuantileSeeding {};
struct RandomSeeding {
    std::uint64_t seed = 0;
};
using Seeding = std::variant<QuantileSeeding, RandomSeeding>;

struct TrajectoryFailure {
    std::size_t index;
    std::string message;
};

struct TrajectoryEnsemble {
    std::vector<Trajectory> trajectories;  ///< ordered by seed index
    Seeding seeding;
    std::vector<double> screen_hits;       ///< final x of completed trajectories, in index order
    std::vector<TrajectoryFailure> failures;
};

TrajectoryEnsemble trajectory_fan(const WaveState& state, std::size_t n, const Seeding& seeding, double t_end,
                                  const IntegratorOptions& options = {}, unsigned threads = 1);

/// Largest |dv/dt| over samples with t_lo < t < t_hi, dv/dt from second-order differences.
double max_acceleration(const Trajectory& trajectory, double t_lo, double t_hi);

/// Number of samples at which the pair is not in its initial strict order (0 = no crossing).
std::size_t order_violations(const Trajectory& a, const Trajectory& b);

// ---------------------------------------------------------------- accumulation

struct Binning {
    double lo;
    double hi;
    std::size_t bins;

    double width() const { return (hi - lo) / static_cast<double>(bins); }
    double edge(std::size_t i) const { return lo + static_cast<double>(i) * width(); }
};

struct HitHistogram {
    std::size_t electrons;      ///< checkpoint count (draws considered)
    std::size_t recorded;       ///< completed trajectories among them
    std::vector<std::uint64_t> counts;
    std::uint64_t below = 0;
    std::uint64_t above = 0;
};

struct AccumulationResult {
    Binning binning;
    std::vector<double> initial;  ///< drawn initial positions, draw order
    std::vector<double> hits;     ///< final positions, NaN where the trajectory failed
    std::vector<HitHistogram> histograms;
    std::size_t failed = 0;
};

inline const std::vector<std::size_t> default_checkpoints{100, 3000, 20000, 70000};

/// Draws n seeded positions, integrates each to t_end and histograms the first c hits for
/// every checkpoint c. Final positions only are kept per trajectory.
AccumulationResult accumulate_hits(const WaveState& state, std::size_t n, std::uint64_t seed,
                                   const std::vector<std::size_t>& checkpoints, double t_end, const Binning& binning,
                                   const IntegratorOptions& options = {}, unsigned threads = 1);

/// Probability of each bin (plus the two outer tails) under |psi(., t)|^2, by Gauss-Legendre.
struct BinProbabilities {
    std::vector<double> inside;
    double below;
    double above;
};
BinProbabilities density_bin_probabilities(const WaveState& state, double t, const Binning& binning,
                                           double tail_extent);

/// 1/2 sum |p_hat - p| over bins and both tails.
double total_variation(const HitHistogram& histogram, const BinProbabilities& reference);

/// Common binning covering +-(Y + 8 sigma_T) at the screen time.
Binning default_screen_binning(const TwoSlitSetup& setup, std::size_t bins = 200);

}  // namespace ilab::qtm
