#include <doctest.h>

#include <cmath>
#include <random>

#include "revswitch/error.hpp"
#include "revswitch/kernels.hpp"
#include "revswitch/numerics.hpp"

using namespace revswitch;
using namespace revswitch::kernels;

namespace {

// Periodic trapezoid rule, exact for trigonometric polynomials of degree < n.
template <class F>
double circle_integral(F f, int n = 4096) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += f(-pi + two_pi * j / n);
    return s * two_pi / n;
}

} // namespace

TEST_CASE("multiplier of the critical Dirac-cosine kernel vanishes at l = 1") {
    const auto k = KernelSpec::cosine({0.0, -1.0 / pi}, 1.0);
    CHECK(std::abs(multiplier(k, 1)) < 1e-15);
}

TEST_CASE("Bessel multiplier at l = 1") {
    for (double eta : {0.25, 0.5, 1.0})
        for (double beta : {0.5, 1.0}) {
            const KernelSpec k(0.0, {BesselSmoothed{eta, beta, 1.0}});
            CHECK(multiplier(k, 1) == doctest::Approx(std::pow(1.0 + eta * eta, -beta)).epsilon(1e-14));
        }
}

TEST_CASE("multiplier matches quadrature with the Dirac part handled symbolically") {
    const double mu = 0.01;
    const auto k = KernelSpec::cosine({0.0, -(1.0 / pi + mu)}, 1.0);
    const double quad = 1.0 + circle_integral([&](double x) { return evaluate(k, x, Part::SmoothOnly) * std::cos(x); });
    CHECK(quad == doctest::Approx(-0.01 * pi).epsilon(1e-12));
    CHECK(multiplier(k, 1) == doctest::Approx(quad).epsilon(1e-12));
    CHECK(multiplier(k, 1) == doctest::Approx(-0.0314159265).epsilon(1e-9));
}

TEST_CASE("multiplier beyond lmax is out of range") {
    const auto k = KernelSpec::cosine({0.0, 1.0}, 0.0, 8);
    CHECK_THROWS_AS(multiplier(k, 9), OutOfRange);
    CHECK_NOTHROW(multiplier(k, 8));
}

TEST_CASE("evaluate a single cosine and reject bare Dirac evaluation") {
    CHECK(evaluate(KernelSpec::cosine({0.0, 1.0}), 0.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(evaluate(KernelSpec::dirac(1.0), 0.3), UnsupportedError);
    CHECK(evaluate(KernelSpec::dirac(1.0), 0.3, Part::SmoothOnly) == 0.0);
}

TEST_CASE("Green's function matches its closed form and inverts (1 - eta^2 d_xx) on cos") {
    for (double eta : {0.25, 0.5, 1.0}) {
        for (double x : {0.0, 0.7, 2.0, -2.9, 3.1}) {
            const double ax = std::abs(x);
            const double closed =
                (std::exp((two_pi - ax) / eta) + std::exp(ax / eta)) / (2.0 * (std::exp(two_pi / eta) - 1.0) * eta);
            CHECK(green_function(eta, x) == doctest::Approx(closed).epsilon(1e-13));
            // G(x - y) is smooth for y in (x - 2 pi, x).
            const auto gl = numerics::gauss_legendre(120, x - two_pi, x);
            double q = 0.0;
            for (std::size_t i = 0; i < gl.nodes.size(); ++i)
                q += gl.weights[i] * green_function(eta, x - gl.nodes[i]) * std::cos(gl.nodes[i]);
            CHECK(std::abs(q - std::cos(x) / (1.0 + eta * eta)) < 1e-8);
        }
    }
}

TEST_CASE("periodized Gaussian at 0 equals the lattice sum") {
    const KernelSpec k(0.0, {PeriodizedGaussian{1.0, 1.0}});
    double direct = 0.0;
    for (int j = -5; j <= 5; ++j) direct += std::exp(-std::pow(two_pi * j, 2));
    CHECK(std::abs(evaluate(k, 0.0) - direct) < 1e-12);
}

TEST_CASE("periodize samples the line Fourier transform") {
    SUBCASE("Gaussian decay ratio") {
        const auto k = periodize(LineGaussian{-1.0, 1.0}, 16);
        CHECK(multiplier(k, 2) / multiplier(k, 1) == doctest::Approx(std::exp(-0.75)).epsilon(1e-12));
    }
    SUBCASE("exponential is Lorentzian") {
        const double eta = 0.3;
        const auto k = periodize(LineExponential{eta, 1.0}, 16);
        for (int l = 1; l <= 10; ++l)
            CHECK(multiplier(k, l) / multiplier(k, 0) == doctest::Approx(1.0 / (1.0 + eta * eta * l * l)).epsilon(1e-12));
    }
    SUBCASE("Dirac round trip") {
        const auto k = periodize(LineDirac{2.5}, 16);
        CHECK(k.dirac_weight() == 2.5);
        CHECK_FALSE(k.has_smooth_part());
        for (int l = 0; l <= 16; ++l) CHECK(multiplier(k, l) == 2.5);
    }
    CHECK_THROWS_AS(periodize(LineDirac{1.0}, 0), InvalidArgument);
}

TEST_CASE("property: multiplier and evaluation are dual for random cosine series") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> c(9);
        for (auto& v : c) v = coef(rng);
        const double d = std::abs(coef(rng));
        const auto k = KernelSpec::cosine(c, d, 8);
        for (int l = 0; l <= 8; ++l) {
            const double q = circle_integral([&](double x) { return evaluate(k, x, Part::SmoothOnly) * std::cos(l * x); }, 256);
            CHECK(std::abs(q - (multiplier(k, l) - d)) < 1e-10);
        }
    }
}

TEST_CASE("property: kernels are even") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> xs(-10.0, 10.0);
    const std::vector<KernelSpec> ks{
        KernelSpec::cosine({0.3, -0.2, 0.15, 0.1}),
        KernelSpec(0.0, {BesselSmoothed{0.5, 1.0, 1.0}}),
        KernelSpec(0.0, {BesselSmoothed{0.5, 0.5, 1.0}}),
        KernelSpec(0.0, {PeriodizedGaussian{-1.0, 1.0}}),
        KernelSpec(0.0, {PeriodizedExponential{0.3, 1.0}}),
    };
    for (const auto& k : ks)
        for (int i = 0; i < 50; ++i) {
            const double x = xs(rng);
            CHECK(evaluate(k, x) == evaluate(k, -x));
        }
}

TEST_CASE("property: Bessel tail M(l) l^(2 beta) increases monotonically to eta^(-2 beta)") {
    for (double beta : {0.5, 1.0}) {
        const double eta = 0.5;
        const KernelSpec k(0.0, {BesselSmoothed{eta, beta, 1.0}}, 256);
        double prev = 0.0;
        for (int l = 1; l <= 256; l *= 2) {
            const double t = multiplier(k, l) * std::pow(l, 2.0 * beta);
            CHECK(t > prev);
            CHECK(t < std::pow(eta, -2.0 * beta));
            prev = t;
        }
        CHECK(prev == doctest::Approx(std::pow(eta, -2.0 * beta)).epsilon(1e-4));
    }
}

TEST_CASE("matrix kernels must be symmetric") {
    const auto a = KernelSpec::cosine({0.0, 1.0});
    const auto b = KernelSpec::cosine({0.0, 2.0});
    CHECK_THROWS_AS(MatrixKernelSpec(2, {a, a, b, a}), InvalidArgument);
    CHECK_NOTHROW(MatrixKernelSpec(2, {a, b, b, a}));
}
