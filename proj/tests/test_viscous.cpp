#include <doctest.h>

#include <cmath>

#include "revswitch/error.hpp"
#include "revswitch/lambert.hpp"
#include "revswitch/numerics.hpp"
#include "revswitch/viscous.hpp"

using namespace revswitch;
using namespace revswitch::viscous;

namespace {

// steady profile moved from x_j = -pi + 2 pi j/n onto x_j = 2 pi j/n
std::vector<double> to_periodic_grid(const ViscousProfile& p) {
    const std::size_t n = p.u.size();
    std::vector<double> u(n);
    for (std::size_t j = 0; j < n; ++j) u[j] = p.u[(j + n / 2) % n];
    return u;
}

} // namespace

TEST_CASE("Lambert W0") {
    CHECK(lambert_w0(0.0) == 0.0);
    CHECK(lambert_w0(std::exp(1.0)) == doctest::Approx(1.0).epsilon(1e-15));
    // fixed point w = exp(-w)
    double w = 0.5;
    for (int i = 0; i < 200; ++i) w = std::exp(-w);
    CHECK(lambert_w0(1.0) == doctest::Approx(w).epsilon(1e-14));
    CHECK(lambert_w0(1.0) == doctest::Approx(0.5671432904).epsilon(1e-10));
    CHECK(lambert_w0(-1.0 / std::exp(1.0)) == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK_THROWS_AS(lambert_w0(-0.37), DomainError);
    const double wl = lambert_w0_exp(2000.0);
    CHECK(std::abs(wl + std::log(wl) - 2000.0) <= 1e-12 * 2000.0);
    CHECK(lambert_w0_exp(std::log(5.0)) == doctest::Approx(lambert_w0(5.0)).epsilon(1e-15));
}

TEST_CASE("property: Lambert inverse") {
    const double e_inv = 1.0 / std::exp(1.0);
    double worst = 0.0;
    for (double t : numerics::log_space(1e-6, 1e6 + e_inv, 3000)) {
        const double x = t - e_inv;
        const double w = lambert_w0(x);
        worst = std::max(worst, std::abs(w * std::exp(w) - x) / std::max(1.0, std::abs(x)));
    }
    CHECK(worst <= 1e-13);
}

TEST_CASE("slant coefficient mu1") {
    CHECK(mu1(0.5) == doctest::Approx(0.34116).epsilon(1e-5));
    CHECK(mu1(0.5) == doctest::Approx(2.0 * (1.0 - std::sqrt(0.75)) / (pi * 0.25)).epsilon(1e-14));
    CHECK(mu1(0.0, Endpoints::Allow) == doctest::Approx(1.0 / pi).epsilon(1e-15));
    CHECK(mu1(1.0, Endpoints::Allow) == doctest::Approx(2.0 / pi).epsilon(1e-15));
    CHECK(std::abs(mu1(1e-6) - 1.0 / pi) <= 1e-12);
    CHECK(std::abs(mu1(1.0 - 1e-14) - 2.0 / pi) <= 1e-6);
    CHECK_THROWS_AS(mu1(1.0), DomainError);
    CHECK_THROWS_AS(mu1(-0.2), DomainError);
    CHECK_THROWS_AS(mu1(0.0), DomainError);
    CHECK_THROWS_AS(mu1(1.2, Endpoints::Allow), DomainError);
}

TEST_CASE("adjoint pairings") {
    const auto p = adjoint_pairings(0.5);
    CHECK(p.pair_mu == doctest::Approx(-pi * pi / 2.0).epsilon(1e-14));
    CHECK(p.pair_mu == doctest::Approx(-4.9348).epsilon(1e-5));
    CHECK(std::abs(p.pair_mu - p.pair_mu_quadrature) <= 1e-8);
    CHECK(std::abs(p.pair_eps - p.pair_eps_quadrature) <= 1e-8);
    for (double rho : numerics::lin_space(0.01, 0.99, 50)) {
        const auto q = adjoint_pairings(rho);
        CHECK(std::abs(-q.pair_eps / q.pair_mu - mu1(rho)) <= 1e-12);
    }
    const auto s = adjoint_pairings(1e-4);
    for (double x : {0.0, 1.0, 2.5}) CHECK(std::abs(s.e0_star(x) + std::cos(x)) <= 1e-4);
    CHECK(s.pair_eps / (pi * 1e-4) == doctest::Approx(1.0).epsilon(1e-4));
    CHECK_THROWS_AS(adjoint_pairings(1.0), DomainError);
}

TEST_CASE("closed-form profile") {
    SUBCASE("normalization") {
        for (double rho : {0.3, 0.8, 1.3}) {
            const auto p = closed_form_profile(rho, 0.05);
            CHECK(p.mass() == doctest::Approx(two_pi).epsilon(1e-12));
            CHECK(p.cosine_moment() == doctest::Approx(rho * pi).epsilon(1e-12));
            CHECK(p.A == doctest::Approx(rho * pi).epsilon(1e-12));
            for (double u : p.u) CHECK(u > 0.0);
        }
    }
    SUBCASE("vanishing viscosity limit below the vacuum threshold") {
        double prev = 1.0;
        for (double eps : {1e-2, 1e-3, 1e-4}) {
            const auto q = closed_form_profile(0.6, eps);
            double d = 0.0;
            for (std::size_t j = 0; j < q.u.size(); ++j) d = std::max(d, std::abs(q.u[j] - 1.0 - 0.6 * std::cos(q.x[j])));
            CHECK(d < 0.2 * prev);
            prev = d;
        }
        CHECK(prev <= 2e-5);
    }
    SUBCASE("exponentially small density in the vacuum") {
        // u(pi) ~ exp(-c/eps): -eps log u(pi) settles to a positive constant
        const double rho = 1.325576;
        std::vector<double> c;
        for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
            const auto q = closed_form_profile(rho, eps, 2048);
            c.push_back(-eps * std::log(q.u[0]));
        }
        for (double v : c) CHECK(v > 0.5);
        CHECK(std::abs(c[3] - c[2]) < std::abs(c[2] - c[1]));
        CHECK(std::abs(c[2] - c[1]) < std::abs(c[1] - c[0]));
    }
    SUBCASE("amplitude 2.5 at eps = 0.1") {
        const double rho = numerics::find_root([](double r) { return closed_form_profile(r, 0.1).max() - 2.5; }, 1.0, 1.9, 1e-12);
        CHECK(rho == doctest::Approx(1.325576).epsilon(1e-5));
        const auto cf = closed_form_profile(rho, 0.1);
        CollocationOptions o;
        o.n = 1024;
        const auto col = steady_collocation(cosine_model(), 0.1, rho, o);
        CHECK(numerics::sup_distance(cf.u, col.u) <= 0.5);
        CHECK(numerics::sup_distance(cf.u, col.u) <= 1e-10);
    }
}

TEST_CASE("collocation against the closed form from an independent start") {
    for (double rho : {0.3, 0.7, 1.35}) {
        // start from the profile at a different rho
        const auto guess = closed_form_profile(rho * 0.8, 0.05, 512);
        CollocationOptions o;
        o.n = 512;
        const auto col = steady_collocation(cosine_model(), 0.05, rho, o, &guess);
        const auto cf = closed_form_profile(rho, 0.05, 512);
        CHECK(col.iterations > 1);
        CHECK(numerics::sup_distance(cf.u, col.u) <= 1e-6);
        CHECK(col.mu == doctest::Approx(cf.mu).epsilon(1e-8));
        CHECK(col.mass() == doctest::Approx(two_pi).epsilon(1e-11));
        // evenness
        const std::size_t n = col.u.size();
        double odd = 0.0;
        for (std::size_t j = 1; j < n; ++j) odd = std::max(odd, std::abs(col.u[j] - col.u[n - j]));
        CHECK(odd <= 1e-12);
    }
}

TEST_CASE("slant of the bifurcation") {
    const auto fam = cosine_model();
    for (double rho : {0.25, 0.5, 0.75}) {
        const auto p = steady_collocation(fam, 1e-3, rho);
        CHECK(p.mu / 1e-3 == doctest::Approx(mu1(rho)).epsilon(0.03));
    }
    // small rho: shift eps/pi
    const auto s = steady_collocation(fam, 1e-3, 0.02);
    CHECK(s.mu / 1e-3 == doctest::Approx(1.0 / pi).epsilon(1e-3));

    const auto br = viscous_branch(fam, 0.1, numerics::lin_space(0.05, 0.9, 18));
    REQUIRE(br.size() == 18);
    for (std::size_t i = 0; i < br.size(); ++i) {
        // O(eps) band around eps mu1(rho) in mu/eps units
        CHECK(std::abs(br[i].mu_over_eps - br[i].mu1_prediction) <= 0.1 * 0.5);
        if (i > 0) CHECK(br[i].mu > br[i - 1].mu);
    }
}

TEST_CASE("time stepping") {
    const int n = 256;
    const auto fam = cosine_model();
    SUBCASE("uniform state is stationary") {
        for (double mu : {-0.1, 0.05, 0.3}) {
            const auto tr = time_step(std::vector<double>(n, 1.0), fam.at(mu), 0.01, 0.05, 5.0);
            CHECK(numerics::sup_distance(tr.profiles.back(), std::vector<double>(n, 1.0)) <= 1e-13);
        }
    }
    SUBCASE("mass over 1e4 steps and evenness") {
        std::vector<double> u0(n);
        for (int j = 0; j < n; ++j) {
            const double x = two_pi * j / n;
            u0[j] = 1.0 + 0.4 * std::cos(x) + 0.1 * std::cos(2 * x);
        }
        const auto tr = time_step(u0, fam.at(0.02), 0.01, 0.01, 100.0);
        CHECK(tr.steps == 10000);
        CHECK(std::abs(tr.mass.back() - two_pi) <= 1e-9);
        const auto& u = tr.profiles.back();
        double odd = 0.0;
        for (int j = 1; j < n; ++j) odd = std::max(odd, std::abs(u[j] - u[n - j]));
        CHECK(odd <= 1e-12);
    }
    SUBCASE("relaxation to the collocated steady state") {
        CollocationOptions o;
        o.n = n;
        const auto p = steady_collocation(fam, 1e-3, 0.5, o);
        const auto us = to_periodic_grid(p);
        std::vector<double> u0(n);
        for (int j = 0; j < n; ++j) {
            const double x = two_pi * j / n;
            u0[j] = us[j] + 0.05 * std::cos(2 * x) + 0.02 * std::cos(3 * x);
        }
        const auto tr = time_step(u0, fam.at(p.mu), 1e-3, 0.1, 40000.0);
        CHECK(numerics::sup_distance(tr.profiles.back(), us) <= 1e-4);
        CHECK(std::abs(tr.mass.back() - two_pi) <= 1e-9);
    }
    SUBCASE("step rejection") {
        std::vector<double> u0(n);
        for (int j = 0; j < n; ++j) u0[j] = 1.0 + 0.9 * std::cos(two_pi * j / n);
        try {
            time_step(u0, fam.at(0.5), 1e-3, 1.0, 10.0);
            FAIL("expected StepRejected");
        } catch (const StepRejected& e) {
            CHECK(e.suggested_dt > 0.0);
            CHECK(e.suggested_dt < 1.0);
            // the suggestion holds for the state it was computed from
            CHECK_NOTHROW(time_step(u0, fam.at(0.5), 1e-3, e.suggested_dt, e.suggested_dt));
        }
    }
}
