#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ilab/errors.hpp"
#include "ilab/qtm.hpp"
#include "ilab/quadrature.hpp"

using namespace ilab;
using namespace ilab::qtm;
constexpr double pi = std::numbers::pi;

namespace {

// psi = x - t: real, so v = 0, with a node sweeping through x0 at t = x0.
class SweptNode final : public WaveState {
public:
    WaveSample sample(double x, double t) const override { return {x - t, 1.0, 0.0, -1.0}; }
    double hbar() const noexcept override { return 1.0; }
    double mass() const noexcept override { return 1.0; }
    double node_threshold() const noexcept override { return 0.25; }
    double length_scale() const noexcept override { return 1.0; }
};

double sigma_t(double sigma0, double t) {
    const double tau = t / (2 * sigma0 * sigma0);
    return sigma0 * std::sqrt(1 + tau * tau);
}

}  // namespace

TEST_CASE("two-slit wavefunction") {
    const TwoSlitSetup setup;
    const TwoSlitState st(setup);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> xd(-30, 30), td(0, 40);
    for (int i = 0; i < 200; ++i) {
        const double x = xd(rng), t = td(rng);
        CHECK(st.psi(x, t) == st.psi(-x, t));
    }
    // unit norm at t = 0
    const auto rule = gauss_legendre(20);
    const double n = integrate_panels([&](double x) { return std::norm(st.psi(x, 0.0)); }, -30.0, 30.0, 120, rule);
    CHECK(std::abs(n - 1.0) < 1e-10);
    CHECK(st.normalization() == doctest::Approx(1 / std::sqrt(2 * (1 + std::exp(-12.5)))).epsilon(1e-15));
    CHECK_THROWS_AS(evaluate(st, 0.0, -1.0), DomainError);

    // widely separated slits: peak density of one normalised Gaussian, halved
    TwoSlitSetup far = setup;
    far.half_separation = 40.0;
    const TwoSlitState fs(far);
    CHECK(std::norm(fs.psi(40.0, 0.0)) == doctest::Approx(0.5 / std::sqrt(2 * pi)).epsilon(1e-14));

    TwoSlitSetup bad = setup;
    bad.sigma0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), DomainError);
    TwoSlitSetup close = setup;
    close.half_separation = 0.8;
    CHECK(close.validate().size() == 1);
    CHECK(TwoSlitState(close).warnings().size() == 1);
}

TEST_CASE("analytic derivatives agree with central differences") {
    const TwoSlitState st(TwoSlitSetup{});
    const double h = 1e-4;
    for (auto [x, t] : {std::pair{1.3, 0.0}, {-4.2, 3.0}, {7.0, 15.0}, {0.2, 39.0}}) {
        const auto s = st.sample(x, t);
        const cplx dx = (st.psi(x + h, t) - st.psi(x - h, t)) / (2 * h);
        const cplx dxx = (st.psi(x + h, t) - 2.0 * s.psi + st.psi(x - h, t)) / (h * h);
        const cplx dt = (st.psi(x, t + h) - st.psi(x, std::max(0.0, t - h))) / (t > 0 ? 2 * h : h);
        CHECK(std::abs(s.dx - dx) < 1e-6 * std::max(1.0, std::abs(s.dx)));
        CHECK(std::abs(s.dxx - dxx) < 1e-4 * std::max(1.0, std::abs(s.dxx)));
        CHECK(std::abs(s.dt - dt) < 1e-4 * std::max(1.0, std::abs(s.dt)));
        // free Schroedinger equation i psi_t = -psi_xx / 2
        CHECK(std::abs(cplx(0, 1) * s.dt + 0.5 * s.dxx) < 1e-12 * std::max(1.0, std::abs(s.dxx)));
    }
}

TEST_CASE("polar decomposition") {
    const PlaneWaveProbe pw(1.7);
    const auto p = polar_decompose(pw, 0.9, 0.0);
    CHECK(p.R == doctest::Approx(1.0));
    CHECK(p.S == doctest::Approx(1.7 * 0.9));
    // branch follows the reference
    const auto far = polar_decompose(pw, 10.0, 0.0, 1.7 * 9.9);
    CHECK(far.S == doctest::Approx(17.0).epsilon(1e-13));

    const TwoSlitState st(TwoSlitSetup{});
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> xd(-15, 15), td(0, 40);
    for (int i = 0; i < 100; ++i) {
        const double x = xd(rng), t = td(rng);
        const auto q = polar_decompose(st, x, t);
        const cplx psi = st.psi(x, t);
        CHECK(std::abs(q.R * std::exp(cplx(0, q.S / st.hbar())) - psi) <= 1e-12 * std::abs(psi));
    }
    CHECK(velocity(st, 0.0, 0.0) == 0.0);
    CHECK_THROWS_AS(polar_decompose(SweptNode{}, 1.0, 1.0), NodeError);
    CHECK_THROWS_AS(velocity(SweptNode{}, 1.0, 1.1), NodeError);
}

TEST_CASE("velocity field") {
    const TwoSlitState st(TwoSlitSetup{});
    for (double t : {0.0, 1.0, 10.0, 40.0}) CHECK(velocity(st, 0.0, t) == 0.0);
    for (auto [x, t] : {std::pair{1.0, 2.0}, {6.0, 7.0}, {13.0, 30.0}}) CHECK(velocity(st, -x, t) == -velocity(st, x, t));

    const double s0 = 1.4;
    const GaussianPacket g(s0);
    for (auto [x, t] : {std::pair{0.5, 0.3}, {-2.0, 4.0}, {3.0, 20.0}}) {
        const double st_ = sigma_t(s0, t);
        const double dst = s0 * (t / (4 * std::pow(s0, 4))) / std::sqrt(1 + std::pow(t / (2 * s0 * s0), 2));
        CHECK(velocity(g, x, t) == doctest::Approx(x * dst / st_).epsilon(1e-12));
        CHECK(g.width(t) == doctest::Approx(st_));
    }
    // equals dS/dx / m where S is smooth
    const double h = 1e-5;
    for (auto [x, t] : {std::pair{2.0, 5.0}, {-7.5, 12.0}}) {
        const double sp = polar_decompose(st, x + h, t).S;
        const double sm = polar_decompose(st, x - h, t, sp).S;
        CHECK(velocity(st, x, t) == doctest::Approx((sp - sm) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("quantum potential") {
    CHECK(quantum_potential(PlaneWaveProbe(2.0), 0.3, 1.0) == 0.0);
    const double s0 = 0.8;
    const GaussianPacket g(s0);
    for (double x : {-2.0, -0.3, 0.0, 0.7, 2.5}) {
        const double exact = 1 / (4 * s0 * s0) * (1 - x * x / (2 * s0 * s0));
        CHECK(quantum_potential(g, x, 0.0) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(quantum_potential_fd(g, x, 0.0, 1e-3) == doctest::Approx(exact).epsilon(1e-5));
    }
    const TwoSlitState st(TwoSlitSetup{});
    for (auto [x, t] : {std::pair{1.0, 2.0}, {6.0, 7.0}, {13.0, 30.0}})
        CHECK(quantum_potential(st, -x, t) == quantum_potential(st, x, t));
}

TEST_CASE("Hamilton-Jacobi and continuity residuals") {
    const PlaneWaveProbe pw(1.3);
    CHECK(std::abs(hamilton_jacobi_residual(pw, 0.4, 2.0)) < 1e-15);
    const TwoSlitState st(TwoSlitSetup{});
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> xd(-20, 20), td(0, 40);
    int n = 0;
    while (n < 200) {
        const double x = xd(rng), t = td(rng);
        if (std::abs(st.psi(x, t)) <= 1e-6 * st.max_amplitude()) continue;
        ++n;
        CHECK(std::abs(hamilton_jacobi_residual(st, x, t)) < 1e-8);
        CHECK(std::abs(hamilton_jacobi_residual_fd(st, x, t, 1e-3)) < 1e-4);
    }
    const auto grid = Grid1D::spanning(-8.0, 8.0, 129);
    const auto pwres = continuity_residual(pw, grid, 1.0);
    for (double v : pwres.field.values) CHECK(std::abs(v) < 1e-14);
    const auto gres = continuity_residual(GaussianPacket(1.0), grid, 2.5);
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) CHECK(std::abs(gres.field[i]) < 1e-6);
    const auto sres = continuity_residual(st, Grid1D::spanning(-20.0, 20.0, 321), 17.0);
    for (std::size_t i = 0; i < 321; ++i) {
        CHECK(sres.mask[i] == sres.mask[320 - i]);
        if (!sres.mask[i]) CHECK(std::abs(sres.field[i] - sres.field[320 - i]) <= 1e-14);
        if (!sres.mask[i]) CHECK(std::abs(sres.field[i]) < 1e-6);
    }
}

TEST_CASE("quantum potential surface") {
    const TwoSlitSetup setup;
    const TwoSlitState st(setup);
    const auto xs = Grid1D::spanning(-20.0, 20.0, 161);
    const auto ts = Grid1D::spanning(0.0, 40.0, 41);
    const auto a = quantum_potential_surface(st, xs, ts, QMethod::Analytic, 1);
    const auto b = quantum_potential_surface(st, xs, ts, QMethod::Analytic, 3);
    CHECK(a.field.values.size() == xs.size() * ts.size());
    for (std::size_t i = 0; i < a.field.values.size(); ++i)
        CHECK((a.field.values[i] == b.field.values[i] || (std::isnan(a.field.values[i]) && std::isnan(b.field.values[i]))));
    for (std::size_t r = 0; r < ts.size(); ++r)
        for (std::size_t c = 0; c < xs.size(); ++c) {
            CHECK(a.mask[a.field.grid.index(r, c)] == a.mask[a.field.grid.index(r, xs.size() - 1 - c)]);
            if (!a.mask[a.field.grid.index(r, c)]) CHECK(a.field.at(r, c) == a.field.at(r, xs.size() - 1 - c));
        }
    // t = 0 row: Q peaks at the slits
    std::size_t best = 0;
    for (std::size_t c = 0; c < xs.size() / 2; ++c)
        if (!a.mask[c] && (a.mask[best] || a.field.at(0, c) > a.field.at(0, best))) best = c;
    CHECK(std::abs(xs.node(best) + setup.half_separation) <= xs.spacing());
    // finite-difference surface tracks the analytic one on smooth cells
    const auto fd = quantum_potential_surface(st, xs, ts, QMethod::FiniteDifference, 1);
    for (std::size_t c = 40; c < 121; ++c)
        CHECK(fd.field.at(0, c) == doctest::Approx(a.field.at(0, c)).epsilon(1e-4).scale(1.0));
}

TEST_CASE("trajectory integration") {
    const double s0 = 1.0, T = 40.0;
    const GaussianPacket g(s0);
    const auto axis = integrate_trajectory(g, 0.0, 0.0, T);
    for (const auto& s : axis.samples) CHECK(s.x == 0.0);
    for (double x0 : {-2.5, 0.3, 1.7}) {
        const auto tr = integrate_trajectory(g, x0, 0.0, T);
        CHECK(tr.status == TrajectoryStatus::Completed);
        CHECK(tr.final_x() == doctest::Approx(x0 * sigma_t(s0, T) / s0).epsilon(1e-6));
        CHECK(tr.samples.size() == 400);
        CHECK(tr.samples.back().t == T);
        for (std::size_t i = 1; i < tr.samples.size(); ++i) CHECK(tr.samples[i].t > tr.samples[i - 1].t);
        for (const auto& s : tr.samples) CHECK(s.v == doctest::Approx(velocity(g, s.x, s.t)).epsilon(1e-6));
    }
    // straight lines for the plane wave probe
    const PlaneWaveProbe pw(0.8);
    const auto line = integrate_trajectory(pw, 1.0, 0.0, 10.0);
    for (const auto& s : line.samples) CHECK(s.x == doctest::Approx(1.0 + 0.8 * s.t).epsilon(1e-10));
    // mirror equivariance on the two-slit state
    const TwoSlitState st(TwoSlitSetup{});
    const auto p = integrate_trajectory(st, 4.4, 0.0, T), m = integrate_trajectory(st, -4.4, 0.0, T);
    for (std::size_t i = 0; i < p.samples.size(); ++i)
        CHECK(std::abs(p.samples[i].x + m.samples[i].x) < 1e-9 * std::max(1.0, std::abs(p.samples[i].x)));
    // node encounter
    const auto hit = integrate_trajectory(SweptNode{}, 2.0, 0.0, 4.0);
    CHECK(hit.status == TrajectoryStatus::NodeAborted);
    REQUIRE(!hit.samples.empty());
    CHECK(hit.samples.back().t < 1.75 + 1e-12);
    CHECK(hit.samples.back().x == 2.0);
    IntegratorOptions bad;
    bad.output_samples = 1;
    CHECK_THROWS_AS(integrate_trajectory(g, 0.0, 0.0, 1.0, bad), DomainError);
}

TEST_CASE("seeding") {
    const TwoSlitState st(TwoSlitSetup{});
    const auto q = quantile_positions(st, 61);
    REQUIRE(q.size() == 61);
    CHECK(std::abs(q[30]) < 1e-9);
    for (std::size_t i = 0; i < q.size(); ++i) {
        CHECK(st.initial_cdf(q[i]) == doctest::Approx((i + 0.5) / 61).epsilon(1e-10));
        CHECK(std::abs(q[i] + q[60 - i]) < 1e-10);
    }
    for (double u : {1e-12, 0.3, 1 - 1e-12}) CHECK(st.initial_cdf(inverse_initial_cdf(st, u)) == doctest::Approx(u).epsilon(1e-9));
    CHECK_THROWS_AS(inverse_initial_cdf(st, 0.0), DomainError);
    CHECK_THROWS_AS(quantile_positions(PlaneWaveProbe(1.0), 3), UnsupportedCaseError);

    UniformStream a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const double x = a.next();
        CHECK(x == b.next());
        CHECK(x > 0.0);
        CHECK(x < 1.0);
        (void)c.next();
    }
    CHECK(random_positions(st, 50, 7) == random_positions(st, 50, 7));
    CHECK(random_positions(st, 50, 7) != random_positions(st, 50, 8));
    // the mean of |psi|^2 samples is 0 and the variance Y^2 + sigma0^2
    const auto xs = random_positions(st, 20000, 3);
    double m = 0, v = 0;
    for (double x : xs) m += x, v += x * x;
    m /= xs.size();
    v /= xs.size();
    CHECK(std::abs(m) < 0.1);
    CHECK(v == doctest::Approx(25.0 + 1.0).epsilon(0.02));
}

TEST_CASE("trajectory fan") {
    const TwoSlitSetup setup;
    const TwoSlitState st(setup);
    const double T = setup.screen_time();
    const auto fan = trajectory_fan(st, 21, QuantileSeeding{}, T, {}, 1);
    const auto again = trajectory_fan(st, 21, QuantileSeeding{}, T, {}, 3);
    REQUIRE(fan.trajectories.size() == 21);
    CHECK(fan.failures.empty());
    CHECK(fan.screen_hits.size() == 21);
    CHECK(std::abs(fan.trajectories[10].final_x()) < 1e-6);
    for (std::size_t i = 0; i < 21; ++i) CHECK(fan.screen_hits[i] == again.screen_hits[i]);
    for (std::size_t i = 0; i + 1 < 21; ++i) {
        CHECK(order_violations(fan.trajectories[i], fan.trajectories[i + 1]) == 0);
        CHECK(fan.screen_hits[i] < fan.screen_hits[i + 1]);
    }
    const auto rnd = trajectory_fan(st, 5, RandomSeeding{9}, T, {}, 1);
    const auto pos = random_positions(st, 5, 9);
    for (std::size_t i = 0; i < 5; ++i) CHECK(rnd.trajectories[i].samples.front().x == pos[i]);
    CHECK_THROWS_AS(trajectory_fan(st, 0, QuantileSeeding{}, T), DomainError);
}

TEST_CASE("trajectory diagnostics") {
    Trajectory a, b;
    for (int i = 0; i < 11; ++i) {
        const double t = i * 0.1;
        a.samples.push_back({t, t * t, 2 * t});
        b.samples.push_back({t, 0.5 - t, -1});
    }
    CHECK(max_acceleration(a, 0.0, 1.0) == doctest::Approx(2.0));
    CHECK(max_acceleration(b, 0.0, 1.0) == doctest::Approx(0.0));
    // a and b cross between t = 0.3 and 0.4; samples 0.4 .. 1.0 are out of order
    CHECK(order_violations(a, b) == 7);
    CHECK(order_violations(b, a) == 7);
    // coincident paths are never strictly ordered
    CHECK(order_violations(a, a) == 11);
}

TEST_CASE("hit accumulation") {
    const TwoSlitSetup setup;
    const TwoSlitState st(setup);
    const double T = setup.screen_time();
    const auto bins = default_screen_binning(setup, 50);
    CHECK(bins.hi == -bins.lo);
    CHECK(bins.hi == doctest::Approx(5.0 + 8 * sigma_t(1.0, T)));
    const std::vector<std::size_t> cps{10, 200, 400};
    const auto r1 = accumulate_hits(st, 400, 17, cps, T, bins, {}, 1);
    const auto r2 = accumulate_hits(st, 400, 17, cps, T, bins, {}, 2);
    REQUIRE(r1.histograms.size() == 3);
    for (std::size_t h = 0; h < 3; ++h) {
        CHECK(r1.histograms[h].counts == r2.histograms[h].counts);
        CHECK(r1.histograms[h].electrons == cps[h]);
        std::uint64_t sum = r1.histograms[h].below + r1.histograms[h].above;
        for (auto c : r1.histograms[h].counts) sum += c;
        CHECK(sum == r1.histograms[h].recorded);
    }
    CHECK(r1.initial == random_positions(st, 400, 17));
    CHECK(r1.failed == 0);
    const auto ref = density_bin_probabilities(st, T, bins, bins.hi - bins.lo);
    double total = ref.below + ref.above;
    for (double p : ref.inside) total += p;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(total_variation(r1.histograms[2], ref) < 0.15);
    CHECK_THROWS_AS(accumulate_hits(st, 100, 1, {50, 20}, T, bins), DomainError);
    CHECK_THROWS_AS(accumulate_hits(st, 100, 1, {50, 200}, T, bins), DomainError);
}

TEST_CASE("default checkpoints are the accumulation counts") {
    CHECK(default_checkpoints == std::vector<std::size_t>{100, 3000, 20000, 70000});
}
