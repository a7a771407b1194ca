#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"
#include "revswitch/particles.hpp"
#include "revswitch/stability.hpp"

using namespace revswitch;
using namespace revswitch::kernels;
using namespace revswitch::particles;

namespace {

// Exponential repulsion (eta = 0.3) with cosine attraction -(1/pi + mu) cos.
KernelSpec fig7(double mu) {
    return KernelSpec(0.0, {PeriodizedExponential{0.3, 1.0}, CosineSeries{{0.0, -(1.0 / pi + mu)}}});
}

ParticleState jittered(int n, double amp, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    auto s = crystal(n);
    for (auto& x : s.positions) x += amp * (two_pi / n) * u(rng);
    return s;
}

// Amplitude of the displacement mode x_j -> x_j + a sin(x_j^0).
double sine_mode(const ParticleState& s, int n) {
    double a = 0.0;
    for (int j = 0; j < n; ++j) {
        const double x0 = two_pi * j / n;
        a += (s.positions[j] - x0) * std::sin(x0);
    }
    return 2.0 * a / n;
}

} // namespace

TEST_CASE("energy examples") {
    const MatrixKernelSpec cosk(KernelSpec::cosine({0.0, -1.0}));
    ParticleState two{{0.0, pi}, {}, 0.0};
    CHECK(energy(two, cosk) == doctest::Approx(2.0).epsilon(1e-15));

    // Three narrowly spaced particles under concave repulsion.
    const MatrixKernelSpec rep(KernelSpec(0.0, {PeriodizedExponential{0.3, 1.0}}));
    const ParticleState even{{0.0, 0.1, 0.2}, {}, 0.0};
    for (double shift : {-0.05, -0.02, 0.02, 0.05}) {
        ParticleState moved = even;
        moved.positions[1] += shift;
        CHECK(energy(even, rep) < energy(moved, rep));
    }
}

TEST_CASE("energy equals the brute-force double loop") {
    const auto k = fig7(0.2);
    const MatrixKernelSpec mk(k);
    const auto s = jittered(10, 3.0, 11);
    double brute = 0.0;
    for (int j = 0; j < 10; ++j)
        for (int m = 0; m < 10; ++m)
            if (j != m) brute += evaluate(k, s.positions[j] - s.positions[m]);
    CHECK(std::abs(energy(s, mk) - brute) <= 1e-12 * std::max(1.0, std::abs(brute)));
}

TEST_CASE("forces") {
    const MatrixKernelSpec mk(fig7(0.1));
    SUBCASE("crystal is stationary") {
        for (int n : {5, 25, 64}) {
            const auto f = force(crystal(n, 0.3), mk);
            CHECK(numerics::sup_norm(f) <= 1e-12);
        }
    }
    SUBCASE("repulsion pushes a close pair apart") {
        const MatrixKernelSpec rep(KernelSpec(0.0, {PeriodizedExponential{0.3, 1.0}}));
        const auto f = force(ParticleState{{1.0, 1.05}, {}, 0.0}, rep);
        CHECK(f[0] < 0.0);
        CHECK(f[1] > 0.0);
    }
    SUBCASE("force is minus the energy gradient") {
        const auto s = jittered(12, 0.8, 5);
        const auto f = force(s, mk);
        const double h = 1e-6;
        for (std::size_t j = 0; j < s.positions.size(); ++j) {
            auto p = s, m = s;
            p.positions[j] += h;
            m.positions[j] -= h;
            const double g = (energy(p, mk) - energy(m, mk)) / (2 * h);
            CHECK(std::abs(f[j] + g) <= 1e-6 * std::max(1.0, std::abs(g)));
        }
    }
    SUBCASE("coincident particles under a kinked kernel") {
        CHECK_THROWS_AS(force(ParticleState{{1.0, 1.0, 2.0}, {}, 0.0}, mk), SingularityError);
    }
    SUBCASE("Dirac interactions are rejected") {
        const MatrixKernelSpec d(KernelSpec::cosine({0.0, -1.0}, 1.0));
        CHECK_THROWS_AS(force(crystal(4), d), UnsupportedError);
    }
}

TEST_CASE("force Jacobian is the derivative of the force") {
    const MatrixKernelSpec mk(fig7(0.1));
    const auto s = jittered(9, 0.5, 3);
    const Eigen::MatrixXd J = force_jacobian(s, mk);
    const double h = 1e-6;
    for (int m = 0; m < 9; ++m) {
        auto p = s, q = s;
        p.positions[m] += h;
        q.positions[m] -= h;
        const auto fp = force(p, mk), fq = force(q, mk);
        for (int j = 0; j < 9; ++j) CHECK(std::abs(J(j, m) - (fp[j] - fq[j]) / (2 * h)) < 1e-5);
    }
}

TEST_CASE("simulate keeps the crystal stationary") {
    // Below the instability; above it rounding errors are amplified.
    const MatrixKernelSpec mk(fig7(-0.2));
    const auto s0 = crystal(25, 0.1);
    // Displacements stay at the level of the local error tolerance.
    const auto tr = simulate(s0, mk, 10.0, 1e-12);
    double drift = 0.0;
    for (const auto& p : tr.points) drift = std::max(drift, numerics::sup_distance(p.state.positions, s0.positions));
    CHECK(drift <= 1e-10);
    CHECK(tr.points.back().time == doctest::Approx(10.0));
}

TEST_CASE("linear growth and decay of the first crystal mode") {
    const int n = 25;
    // Particle threshold for this N: the m = 1 crystal mode becomes neutral.
    auto rate = [&](double mu) {
        return 2.0 * stability::crystal_dispersion(fig7(mu), two_pi / n, two_pi / n, stability::SumMode::DirectSum).value;
    };
    const double mu_n = numerics::find_root(rate, -0.3, 0.3, 1e-14);
    for (double dmu : {0.05, -0.05}) {
        const double mu = mu_n + dmu;
        const double expected = rate(mu);
        auto s0 = crystal(n);
        for (int j = 0; j < n; ++j) s0.positions[j] += 1e-6 * std::sin(s0.positions[j]);
        SimulateOptions opts;
        opts.record_interval = 0.5;
        const auto tr = simulate(s0, MatrixKernelSpec(fig7(mu)), 4.0, 1e-13, opts);
        std::vector<double> t, la;
        for (const auto& p : tr.points) {
            t.push_back(p.time);
            la.push_back(std::log(std::abs(sine_mode(p.state, n))));
        }
        const double fitted = numerics::fit_line(t, la).slope;
        CHECK(std::abs(fitted - expected) <= 0.1 * std::abs(expected));
        CHECK((fitted > 0) == (dmu > 0));
    }
}

TEST_CASE("property: random scalar runs decrease energy and preserve order") {
    const double tol = 1e-9;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto tr = simulate(jittered(25, 0.6, seed), MatrixKernelSpec(fig7(0.15)), 5.0, tol);
        CHECK(tr.order_violations == 0);
        for (std::size_t i = 1; i < tr.points.size(); ++i) {
            const auto& a = tr.points[i - 1];
            const auto& b = tr.points[i];
            CHECK(b.time > a.time);
            CHECK(b.energy <= a.energy + 10 * tol * (b.time - a.time) + 1e-12 * std::abs(a.energy));
        }
    }
}

TEST_CASE("property: translation and permutation equivariance") {
    const MatrixKernelSpec mk(fig7(0.15));
    const auto s0 = jittered(10, 0.6, 9);
    SimulateOptions opts;
    opts.record_interval = 1.0;
    const auto base = simulate(s0, mk, 3.0, 1e-10, opts);

    auto shifted = s0;
    for (auto& x : shifted.positions) x += 0.7;
    const auto ts = simulate(shifted, mk, 3.0, 1e-10, opts);
    REQUIRE(ts.points.size() == base.points.size());
    for (std::size_t i = 0; i < ts.points.size(); ++i)
        for (std::size_t j = 0; j < 10; ++j)
            CHECK(std::abs(ts.points[i].state.positions[j] - 0.7 - base.points[i].state.positions[j]) < 1e-9);

    std::vector<int> perm{3, 1, 4, 0, 5, 9, 2, 6, 8, 7};
    auto permuted = s0;
    for (std::size_t j = 0; j < 10; ++j) permuted.positions[j] = s0.positions[perm[j]];
    const auto tp = simulate(permuted, mk, 3.0, 1e-10, opts);
    const auto& a = base.points.back().state.positions;
    const auto& b = tp.points.back().state.positions;
    for (std::size_t j = 0; j < 10; ++j) CHECK(std::abs(b[j] - a[perm[j]]) < 1e-8);
}

TEST_CASE("equilibrium continuation from the crystal") {
    const int n = 25;
    const auto br = continue_equilibria(fig7, n, -0.3, 0.3);
    REQUIRE_FALSE(br.truncated);
    // continuum threshold for this family: M(1) = 1/1.09 - 1 - pi mu = 0
    const double mu_cont = (1.0 / 1.09 - 1.0) / pi;
    CHECK(br.bifurcation_mu < 0.0);
    CHECK(std::abs(br.bifurcation_mu - mu_cont) < 0.01);

    bool seen_cluster = false;
    double prev = 0.0;
    int increasing = 0, total = 0;
    for (const auto& p : br.points) {
        if (p.crystal) {
            CHECK(p.mu <= br.bifurcation_mu + 1e-12);
            CHECK(p.density_proxy == doctest::Approx(n / two_pi).epsilon(1e-9));
            CHECK_FALSE(seen_cluster);
        } else {
            if (seen_cluster && p.mu > 0.0) {
                ++total;
                if (p.density_proxy > prev) ++increasing;
            }
            seen_cluster = true;
            prev = p.density_proxy;
        }
    }
    CHECK(seen_cluster);
    CHECK(total > 0);
    CHECK(increasing == total);
    CHECK(br.points.back().mu > 0.0);
}
