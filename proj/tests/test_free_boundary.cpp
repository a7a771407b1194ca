#include <doctest.h>

#include <cmath>
#include <random>

#include "revswitch/error.hpp"
#include "revswitch/free_boundary.hpp"
#include "revswitch/numerics.hpp"
#include "revswitch/rank_one.hpp"

using namespace revswitch;
using namespace revswitch::free_boundary;
using kernels::KernelFamily;
using kernels::KernelSpec;

namespace {

KernelFamily cosine_family() { return {KernelSpec::cosine({0.0, -1.0 / pi}, 1.0), KernelSpec::cosine({0.0, -1.0})}; }

KernelFamily harmonics_family() {
    return {KernelSpec::cosine({0.0, -1.0 / pi, 0.15, 0.1}, 1.0), KernelSpec::cosine({0.0, -1.0})};
}

KernelFamily bessel_family(double eta) {
    return {KernelSpec(0.0, {kernels::BesselSmoothed{eta, 1.0, 1.0}}), KernelSpec::cosine({0.0, -1.0})};
}

double vh1_oracle(double z) { return -1.0 + 0.5 * std::cos(z) + z * std::sin(z); }

rank_one::GapLawFit gap_fit(const FreeBoundaryBranch& br) {
    std::vector<double> mu, L;
    for (const auto& p : br.points) {
        mu.push_back(p.mu - br.mu_star);
        L.push_back(p.L);
    }
    return rank_one::fit_gap_law(mu, L);
}

} // namespace

TEST_CASE("projection algebra") {
    auto grid = std::make_shared<const numerics::ChebyshevGrid>(128, 0.0, pi);
    Projections P(grid);
    const auto& z = grid->nodes();
    std::vector<double> one(z.size(), 1.0), c(z.size()), v(z.size());
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    const double a = nd(rng), b = nd(rng), d = nd(rng);
    for (std::size_t i = 0; i < z.size(); ++i) {
        c[i] = std::cos(z[i]);
        v[i] = a + b * std::cos(z[i]) + d * std::cos(3 * z[i]) + std::exp(std::cos(z[i]));
    }
    CHECK(P.p0(one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(P.p1(one)) <= 1e-14);
    CHECK(P.p1(c) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(P.p0(c)) <= 1e-14);

    const auto h = P.ph(v);
    CHECK(std::abs(P.p0(h)) <= 1e-13);
    CHECK(std::abs(P.p1(h)) <= 1e-13);
    const auto hh = P.ph(h);
    double idem = 0.0, sum = 0.0;
    const double p0 = P.p0(v), p1 = P.p1(v);
    for (std::size_t i = 0; i < z.size(); ++i) {
        idem = std::max(idem, std::abs(hh[i] - h[i]));
        sum = std::max(sum, std::abs(p0 + p1 * c[i] + h[i] - v[i]));
    }
    CHECK(idem <= 1e-13);
    CHECK(sum <= 1e-13);
    // P0 P1 = 0: the P1 image has no mean
    std::vector<double> p1v(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) p1v[i] = p1 * c[i];
    CHECK(std::abs(P.p0(p1v)) <= 1e-13);
}

TEST_CASE("rescaled kernel") {
    const numerics::ChebyshevGrid g(96, 0.0, pi);
    const auto& z = g.nodes();
    const auto& w = g.weights();
    const auto cosk = KernelSpec::cosine({0.0, 1.0});

    SUBCASE("identity rescaling at L = pi") {
        const auto K = rescaled_kernel(cosk, pi, g);
        double e = 0.0;
        for (int i = 0; i < g.size(); ++i)
            for (int j = 0; j < g.size(); ++j)
                e = std::max(e, std::abs(K(i, j) - w[j] * (std::cos(z[i] - z[j]) + std::cos(z[i] + z[j]))));
        CHECK(e <= 1e-15);
    }
    SUBCASE("convolution of 1 with a cosine kernel") {
        for (double L : {0.4, 1.7, 2.9, pi}) {
            const Eigen::VectorXd r = rescaled_kernel(cosk, L, g) * Eigen::VectorXd::Ones(g.size());
            double e = 0.0;
            // int_{-pi}^{pi} (L/pi) cos(L(z - xi)/pi) dxi = 2 cos(L z/pi) sin L
            for (int i = 0; i < g.size(); ++i) e = std::max(e, std::abs(r(i) - 2.0 * std::cos(L * z[i] / pi) * std::sin(L)));
            CHECK(e <= 1e-10);
        }
    }
    SUBCASE("Green's function against its cosine series") {
        const double eta = 0.5;
        const KernelSpec green(0.0, {kernels::BesselSmoothed{eta, 1.0, 1.0}});
        // same multipliers 1/(1 + eta^2 l^2), written as an explicit cosine series
        std::vector<double> coeffs(200);
        coeffs[0] = 1.0 / two_pi;
        for (std::size_t l = 1; l < coeffs.size(); ++l) coeffs[l] = 1.0 / (pi * (1.0 + eta * eta * l * l));
        const auto series = KernelSpec::cosine(coeffs, 0.0, 200);
        // The kink of G at z = xi caps the grid quadrature at second order:
        // check the error level and its decay under grid doubling.
        auto conv_error = [&](int intervals) {
            const numerics::ChebyshevGrid fine(intervals, 0.0, pi);
            Eigen::VectorXd v(fine.size());
            for (int i = 0; i < fine.size(); ++i) v(i) = std::exp(std::cos(fine.nodes()[i]));
            const Eigen::VectorXd a = rescaled_kernel(green, pi, fine) * v;
            double e = 0.0;
            for (int i = 0; i < fine.size(); i += intervals / 32) {
                const double x = fine.nodes()[i];
                const auto gl = numerics::gauss_legendre(400, x - two_pi, x);
                double s = 0.0;
                for (std::size_t q = 0; q < gl.nodes.size(); ++q)
                    s += gl.weights[q] * kernels::evaluate(series, x - gl.nodes[q]) * std::exp(std::cos(gl.nodes[q]));
                e = std::max(e, std::abs(a(i) - s));
            }
            return e;
        };
        const double e512 = conv_error(512), e1024 = conv_error(1024);
        MESSAGE("Green's function convolution error " << e512 << " -> " << e1024);
        CHECK(e1024 <= 2e-5);
        CHECK(e512 / e1024 >= 3.5);
    }
    CHECK_THROWS_AS(rescaled_kernel(cosk, 0.0, g), DomainError);
    CHECK_THROWS_AS(rescaled_kernel(cosk, 3.5, g), DomainError);
}

TEST_CASE("residual at the base point and mass balance") {
    const auto fam = cosine_family();
    const auto s = base_state(fam, 256);
    CHECK(s.rho == doctest::Approx(1.0));
    CHECK(s.mu == doctest::Approx(0.0));
    CHECK(s.L == pi);
    CHECK(assemble_residual(s, fam).sup() <= 1e-12);

    ExtendedState t = s;
    t.A0 = 1.25;
    t.L = pi / 1.25;
    for (std::size_t i = 0; i < t.v.size(); ++i) t.v[i] = 1.25 + 1.25 * std::cos(t.grid->nodes()[i]);
    CHECK(std::abs(assemble_residual(t, fam).F_m) <= 1e-13);
}

TEST_CASE("L-column of the linearization") {
    const auto fam = cosine_family();
    const auto s = base_state(fam, 512);
    const Eigen::MatrixXd J = assemble_jacobian(s, fam);
    const int n = s.grid->size();
    std::vector<double> col(n);
    for (int i = 0; i < n; ++i) col[i] = J(i, n + 2);
    const auto ph = Projections(s.grid).ph(col);
    double e = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = s.grid->nodes()[i];
        e = std::max(e, std::abs(ph[i] - (std::cos(z) + 2.0 * z * std::sin(z) - 2.0) / two_pi));
    }
    CHECK(e <= 1e-8);
    CHECK(ph.back() == doctest::Approx(-3.0 / two_pi).epsilon(1e-10));
}

TEST_CASE("Dirac plus cosine branch agrees with the rank-one solver") {
    const auto br = newton_continue(cosine_family(), Parameter::A0, numerics::lin_space(1.01, 1.1, 10));
    REQUIRE_FALSE(br.truncated);
    REQUIRE(br.points.size() == 10);
    for (const auto& p : br.points) {
        CHECK(p.residual <= 1e-10);
        CHECK(p.L * p.A0 == doctest::Approx(pi).epsilon(1e-12));
        const auto b = rank_one::solve_bubble(p.mu);
        double d = 0.0;
        for (int i = 0; i <= 400; ++i) {
            const double x = -pi + two_pi * i / 400;
            d = std::max(d, std::abs(p.density(x) - rank_one::profile(b, x)));
        }
        CHECK(d <= 1e-8);
        CHECK(weak_residual(p, cosine_family().at(p.mu)) <= 1e-7);
    }
}

TEST_CASE("expansion coefficients of the vertical branch") {
    const auto br = newton_continue(cosine_family(), Parameter::A0, numerics::lin_space(1.01, 1.1, 10));
    const auto e = extract_expansion(br);
    CHECK(e.A1_1 == doctest::Approx(-0.5).epsilon(0.01));
    CHECK(e.L_1 == doctest::Approx(-pi).epsilon(0.01));
    CHECK(e.mu_3 == doctest::Approx(2.0 * pi / 3.0).epsilon(0.02));
    CHECK(std::abs(e.mu_1) <= 1e-3);
    CHECK(std::abs(e.mu_2) <= 1e-3);
    // second order: the fit sits 1.3% below (3 + 4 pi^2)/12
    CHECK(e.A1_2 == doctest::Approx((3.0 + 4.0 * pi * pi) / 12.0).epsilon(0.02));
    double err = 0.0;
    for (std::size_t i = 0; i < e.z.size(); ++i) err = std::max(err, std::abs(e.v_h1[i] - vh1_oracle(e.z[i])));
    CHECK(err <= 1e-3);

    FreeBoundaryBranch small = br;
    small.points.resize(5);
    CHECK_THROWS_AS(extract_expansion(small), InvalidArgument);
}

TEST_CASE("grid convergence") {
    const auto values = numerics::lin_space(1.02, 1.08, 4);
    const auto a = newton_continue(harmonics_family(), Parameter::A0, values, {256, 1e-11, 30});
    const auto b = newton_continue(harmonics_family(), Parameter::A0, values, {512, 1e-11, 30});
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) CHECK(std::abs(a.points[i].mu - b.points[i].mu) <= 1e-8);
}

TEST_CASE("universality under added stable harmonics") {
    const auto values = numerics::lin_space(1.01, 1.1, 10);
    const auto ref = extract_expansion(newton_continue(cosine_family(), Parameter::A0, values));
    const auto br = newton_continue(harmonics_family(), Parameter::A0, values);
    REQUIRE_FALSE(br.truncated);
    const auto e = extract_expansion(br);
    CHECK(e.A1_1 == doctest::Approx(ref.A1_1).epsilon(0.02));
    CHECK(e.mu_3 == doctest::Approx(ref.mu_3).epsilon(0.02));
    const auto fit = gap_fit(br);
    CHECK(std::abs(fit.p - 1.0 / 3.0) <= 0.02);
    CHECK(fit.c == doctest::Approx(rank_one::gap_constant()).epsilon(0.05));
    for (const auto& p : br.points) CHECK(weak_residual(p, harmonics_family().at(p.mu)) <= 1e-7);
}

TEST_CASE("smoothed repulsion branches are admissible weak equilibria") {
    const auto fam = bessel_family(0.5);
    const auto br = newton_continue(fam, Parameter::A0, numerics::lin_space(1.02, 1.1, 5));
    REQUIRE_FALSE(br.truncated);
    // ell = 1 instability: 1/(1 + eta^2) = pi mu*
    CHECK(br.mu_star == doctest::Approx(1.0 / (pi * 1.25)).epsilon(1e-12));
    for (const auto& p : br.points) {
        const auto k = fam.at(p.mu);
        CHECK(p.mu > br.mu_star);
        CHECK(weak_residual(p, k) <= 1e-7);
        // the potential may not dip below its support level inside the vacuum
        auto potential = [&](double x) {
            const auto gl = numerics::gauss_legendre(200, -p.L, p.L);
            double s = 0.0;
            for (std::size_t q = 0; q < gl.nodes.size(); ++q) s += gl.weights[q] * kernels::evaluate(k, x - gl.nodes[q]) * p.density(gl.nodes[q]);
            return s;
        };
        const double level = potential(p.L);
        for (int i = 1; i <= 10; ++i) CHECK(potential(p.L + (pi - p.L) * i / 10.0) >= level - 1e-10);
    }
}

TEST_CASE("smoothed repulsion gap exponent" * doctest::may_fail()) {
    // Expected mu^(1/3) as for Dirac repulsion. The computed branch follows
    // pi - L ~ mu^(1/5) for every eta tried; see the README.
    const auto br = newton_continue(bessel_family(0.5), Parameter::A0, numerics::lin_space(1.005, 1.1, 20));
    const auto fit = gap_fit(br);
    MESSAGE("fitted exponent p = " << fit.p);
    CHECK(std::abs(fit.p - 1.0 / 3.0) <= 0.03);
}

TEST_CASE("smoothed repulsion gap exponent, measured") {
    for (double eta : {0.3, 0.5, 1.0}) {
        const auto a = newton_continue(bessel_family(eta), Parameter::A0, numerics::lin_space(1.01, 1.1, 10), {256, 1e-10, 30});
        const auto b = newton_continue(bessel_family(eta), Parameter::A0, numerics::lin_space(1.01, 1.1, 10), {512, 1e-10, 30});
        const double pa = gap_fit(a).p, pb = gap_fit(b).p;
        CHECK(std::abs(pa - pb) <= 1e-6);
        CHECK(pb == doctest::Approx(0.2).epsilon(0.05));
    }
}

TEST_CASE("continuation errors") {
    const auto fam = cosine_family();
    CHECK_THROWS_AS(newton_continue(fam, Parameter::A0, {0.9, 1.1}), InvalidArgument);
    CHECK_THROWS_AS(newton_continue(fam, Parameter::A0, {1.1, 1.05}), InvalidArgument);
    CHECK_THROWS_AS(newton_continue(fam, Parameter::Mu, {-0.1}), InvalidArgument);
    CHECK_THROWS_AS(base_state(fam, 4), InvalidArgument);
    const KernelFamily no_repulsion{KernelSpec::cosine({0.0, -1.0 / pi}), KernelSpec::cosine({0.0, -1.0})};
    CHECK_THROWS_AS(newton_continue(no_repulsion, Parameter::A0, {1.05}), UnsupportedError);
}
