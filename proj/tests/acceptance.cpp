// One line per primary criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "revswitch/free_boundary.hpp"
#include "revswitch/multispecies.hpp"
#include "revswitch/numerics.hpp"
#include "revswitch/particles.hpp"
#include "revswitch/rank_one.hpp"
#include "revswitch/stability.hpp"
#include "revswitch/viscous.hpp"

using namespace revswitch;
using kernels::KernelFamily;
using kernels::KernelSpec;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void criterion(const std::string& name, double time_limit, const std::function<void(Outcome&)>& body) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        body(o);
    } catch (const std::exception& e) {
        o.pass = false;
        o.detail << " [exception: " << e.what() << "]";
    }
    const double t = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (time_limit > 0.0) o.require(t < time_limit, "runtime");
    if (!o.pass) ++failures;
    std::printf("%s  %s:%s (%.2f s", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.str().c_str(), t);
    if (time_limit > 0.0) std::printf(", limit %.0f s", time_limit);
    std::printf(")\n");
    std::fflush(stdout);
}

KernelFamily cosine_family() { return {KernelSpec::cosine({0.0, -1.0 / pi}, 1.0), KernelSpec::cosine({0.0, -1.0})}; }

KernelFamily harmonics_family() {
    return {KernelSpec::cosine({0.0, -1.0 / pi, 0.15, 0.1}, 1.0), KernelSpec::cosine({0.0, -1.0})};
}

rank_one::GapLawFit branch_fit(const free_boundary::FreeBoundaryBranch& br) {
    std::vector<double> mu, L;
    for (const auto& p : br.points) {
        mu.push_back(p.mu - br.mu_star);
        L.push_back(p.L);
    }
    return rank_one::fit_gap_law(mu, L);
}

void check_gap_fit(Outcome& o, const rank_one::GapLawFit& f) {
    const double c_ref = std::cbrt(1.5 * pi * pi);
    o.detail << " p=" << f.p << " c=" << f.c;
    o.require(f.p >= 0.313 && f.p <= 0.353, "p in [0.313, 0.353]");
    o.require(std::abs(f.c / c_ref - 1.0) <= 0.05, "c within 5% of 2.4554");
}

void check_expansion(Outcome& o, const free_boundary::Expansion& e) {
    double vh = 0.0;
    for (std::size_t i = 0; i < e.z.size(); ++i)
        vh = std::max(vh, std::abs(e.v_h1[i] - (-1.0 + 0.5 * std::cos(e.z[i]) + e.z[i] * std::sin(e.z[i]))));
    o.detail << " A1_1=" << e.A1_1 << " mu_3=" << e.mu_3 << " mu_1=" << e.mu_1 << " mu_2=" << e.mu_2 << " v_h1 err=" << vh;
    o.require(std::abs(e.A1_1 / -0.5 - 1.0) <= 0.01, "A1_1");
    o.require(std::abs(e.mu_3 / (2.0 * pi / 3.0) - 1.0) <= 0.02, "mu_3");
    o.require(std::abs(e.mu_1) <= 1e-3 && std::abs(e.mu_2) <= 1e-3, "mu_1, mu_2");
    o.require(vh <= 1e-3, "v_h1");
}

std::vector<double> a0_values() { return numerics::lin_space(1.01, 1.1, 10); }

} // namespace

int main() {
    criterion("gap law of the rank-one branch", 1.0, [](Outcome& o) {
        const auto mu = numerics::log_space(1e-5, 1e-3, 20);
        const auto br = rank_one::sweep_branch(mu);
        o.require(!br.truncated && br.points.size() == 20, "complete sweep");
        std::vector<double> L;
        for (const auto& p : br.points) L.push_back(p.L);
        check_gap_fit(o, rank_one::fit_gap_law(mu, L));
    });

    criterion("free-boundary expansion, Dirac + cosine, n = 512", 30.0, [](Outcome& o) {
        const auto br = free_boundary::newton_continue(cosine_family(), free_boundary::Parameter::A0, a0_values(), {512, 1e-10, 30});
        o.require(!br.truncated, "branch complete");
        check_expansion(o, free_boundary::extract_expansion(br));
    });

    criterion("universality with added harmonics", 60.0, [](Outcome& o) {
        const auto br = free_boundary::newton_continue(harmonics_family(), free_boundary::Parameter::A0, a0_values(), {512, 1e-10, 30});
        o.require(!br.truncated, "branch complete");
        check_gap_fit(o, branch_fit(br));
        const auto e = free_boundary::extract_expansion(br);
        o.detail << " A1_1=" << e.A1_1 << " mu_3=" << e.mu_3;
        o.require(std::abs(e.A1_1 / -0.5 - 1.0) <= 0.01, "A1_1");
        o.require(std::abs(e.mu_3 / (2.0 * pi / 3.0) - 1.0) <= 0.02, "mu_3");
    });

    criterion("L-derivative column at the base point", 0.0, [](Outcome& o) {
        const auto fam = cosine_family();
        const auto s = free_boundary::base_state(fam, 512);
        const Eigen::MatrixXd J = free_boundary::assemble_jacobian(s, fam);
        const int n = s.grid->size();
        std::vector<double> col(n);
        for (int i = 0; i < n; ++i) col[i] = J(i, n + 2);
        const auto ph = free_boundary::Projections(s.grid).ph(col);
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double z = s.grid->nodes()[i];
            e = std::max(e, std::abs(ph[i] - (std::cos(z) + 2.0 * z * std::sin(z) - 2.0) / two_pi));
        }
        const double g_pi = ph.back();
        o.detail << " max err=" << e << " g(pi)=" << g_pi;
        o.require(e <= 1e-8, "max error");
        o.require(std::abs(g_pi + 3.0 / two_pi) <= 1e-8, "g(pi) = -3/(2 pi)");
    });

    criterion("viscous slant at eps = 1e-3", 60.0, [](Outcome& o) {
        const auto fam = viscous::cosine_model();
        for (double rho : {0.25, 0.5, 0.75}) {
            const auto p = viscous::steady_collocation(fam, 1e-3, rho);
            const double rel = std::abs(p.mu / 1e-3 - viscous::mu1(rho)) / viscous::mu1(rho);
            o.detail << " rel(" << rho << ")=" << rel;
            o.require(rel <= 0.03, "slant");
        }
        const double lo = viscous::mu1(0.0, viscous::Endpoints::Allow), hi = viscous::mu1(1.0, viscous::Endpoints::Allow);
        o.require(std::abs(lo - 1.0 / pi) <= 1e-12 && std::abs(hi - 2.0 / pi) <= 1e-12, "endpoint values");
        o.require(std::abs(viscous::mu1(1e-6) - 1.0 / pi) <= 1e-12, "small-rho limit");
    });

    criterion("Lambert-W profiles against collocation", 0.0, [](Outcome& o) {
        double worst = 0.0;
        for (double rho : {0.3, 0.7, 1.35}) {
            const auto guess = viscous::closed_form_profile(0.8 * rho, 0.05, 512);
            const auto col = viscous::steady_collocation(viscous::cosine_model(), 0.05, rho, {512, 1e-11, 60}, &guess);
            worst = std::max(worst, numerics::sup_distance(viscous::closed_form_profile(rho, 0.05, 512).u, col.u));
        }
        o.detail << " sup distance=" << worst;
        o.require(worst <= 1e-6, "sup distance");
        // vacuum of the amplitude-2.5 profile: beyond the midpoint between
        // the vanishing-viscosity free boundary and pi
        const double rho = 1.325576;
        const auto sharp = viscous::closed_form_profile(rho, 0.0125, 2048);
        double L0 = pi;
        for (std::size_t j = sharp.u.size() / 2; j < sharp.u.size(); ++j)
            if (sharp.u[j] < 1e-3) {
                L0 = sharp.x[j];
                break;
            }
        const double edge = 0.5 * (L0 + pi);
        std::vector<double> inv_eps, log_max;
        double max_at_01 = 0.0;
        for (double eps : {0.1, 0.05, 0.025, 0.0125}) {
            const auto q = viscous::closed_form_profile(rho, eps, 2048);
            double m = 0.0;
            for (std::size_t j = 0; j < q.u.size(); ++j)
                if (std::abs(q.x[j]) >= edge) m = std::max(m, q.u[j]);
            if (eps == 0.1) max_at_01 = m;
            inv_eps.push_back(1.0 / eps);
            log_max.push_back(std::log(m));
        }
        const double c = -numerics::fit_line(inv_eps, log_max).slope;
        o.detail << " vacuum |x|>=" << edge << " fitted c=" << c << " max u(eps=0.1)=" << max_at_01
                 << " exp(-c/eps)=" << std::exp(-c / 0.1);
        o.require(c > 0.0, "c > 0");
        o.require(max_at_01 <= std::exp(-c / 0.1), "vacuum values below exp(-c/eps)");
    });

    criterion("dispersion consistency", 0.0, [](Outcome& o) {
        double e1 = 0.0;
        for (double mu : numerics::lin_space(-0.5, 0.5, 21)) {
            const auto k = KernelSpec::cosine({0.0, -(1.0 / pi + mu)}, 1.0);
            e1 = std::max(e1, std::abs(stability::dispersion_scalar(k, 1) - pi * mu));
        }
        o.detail << " lambda(1)-pi mu=" << e1;
        o.require(e1 <= 1e-12, "lambda(1) = pi mu");
        double e2 = 0.0;
        for (double eta : {0.25, 0.5, 1.0})
            for (double beta : {0.5, 1.0}) {
                const KernelFamily f{KernelSpec(0.0, {kernels::BesselSmoothed{eta, beta, 1.0}}), KernelSpec::cosine({0.0, -1.0})};
                const auto r = stability::critical_parameter([&](double mu) { return f.at(mu); }, -1.0, 1.0);
                e2 = std::max(e2, std::abs(r.mu_star - 1.0 / (pi * std::pow(1.0 + eta * eta, beta))));
            }
        o.detail << " mu* err=" << e2;
        o.require(e2 <= 1e-10, "mu* grid");
        const KernelSpec k(0.0, {kernels::PeriodizedExponential{0.3, 1.0}, kernels::PeriodizedGaussian{-0.5, 1.0}});
        double e3 = 0.0;
        for (double sigma : {0.1, 0.7, 1.5, 3.0, 5.5}) {
            const auto d = stability::crystal_dispersion(k, two_pi / 25, sigma, stability::SumMode::DirectSum);
            const auto p = stability::crystal_dispersion(k, two_pi / 25, sigma, stability::SumMode::PoissonSum);
            e3 = std::max(e3, std::abs(d.value - p.value));
        }
        o.detail << " direct-Poisson=" << e3;
        o.require(e3 <= 1e-6, "direct vs Poisson sums");
    });

    criterion("particle layer", 0.0, [](Outcome& o) {
        auto fig7 = [](double mu) {
            return kernels::MatrixKernelSpec(
                KernelSpec(0.0, {kernels::PeriodizedExponential{0.3, 1.0}, kernels::CosineSeries{{0.0, -(1.0 / pi + mu)}}}));
        };
        // stationarity: force residual and trajectory drift (below the instability)
        const auto c0 = particles::crystal(25, 0.1);
        const double fres = numerics::sup_norm(particles::force(c0, fig7(-0.2)));
        const auto tr0 = particles::simulate(c0, fig7(-0.2), 10.0, 1e-13);
        double drift = 0.0;
        for (const auto& p : tr0.points) drift = std::max(drift, numerics::sup_distance(p.state.positions, c0.positions));
        o.detail << " crystal force=" << fres << " drift=" << drift;
        o.require(fres <= 1e-12 && drift <= 1e-12, "crystal stationarity");

        const double tol = 1e-9;
        int monotone = 0, ordered = 0;
        double fd = 0.0;
        for (std::uint64_t run = 0; run < 10; ++run) {
            std::mt19937_64 rng(1000 + run);
            std::uniform_real_distribution<double> u(-0.5, 0.5);
            auto s = particles::crystal(25);
            for (auto& x : s.positions) x += 0.6 * (two_pi / 25) * u(rng);
            const auto mk = fig7(0.15);
            const auto tr = particles::simulate(s, mk, 5.0, tol);
            bool mono = true;
            for (std::size_t i = 1; i < tr.points.size(); ++i)
                mono = mono && tr.points[i].energy <= tr.points[i - 1].energy + 10 * tol * (tr.points[i].time - tr.points[i - 1].time);
            monotone += mono;
            ordered += tr.order_violations == 0;
            const auto f = particles::force(s, mk);
            const double h = 1e-6;
            for (std::size_t j = 0; j < s.positions.size(); ++j) {
                auto p = s, m = s;
                p.positions[j] += h;
                m.positions[j] -= h;
                const double g = (particles::energy(p, mk) - particles::energy(m, mk)) / (2 * h);
                fd = std::max(fd, std::abs(f[j] + g) / std::max(1.0, std::abs(g)));
            }
        }
        o.detail << " energy-monotone runs=" << monotone << "/10 ordered runs=" << ordered << "/10 force FD rel=" << fd;
        o.require(monotone == 10, "energy monotonicity");
        o.require(ordered == 10, "order preservation");
        o.require(fd <= 1e-6, "force = -grad energy");
    });

    criterion("two-species bifurcation points", 300.0, [](Outcome& o) {
        const double r = std::sqrt((0.8 + 0.3 * pi) * (1.0 + 0.3 * pi));
        for (double a12 : {1.0, 0.8}) {
            const auto c = multispecies::sorting_coefficients(a12);
            const auto ex = multispecies::extrapolate_bifurcations(c.a, c.b, -1.5, 1.5, 0.03, 0.015);
            o.require(ex.size() == 2, "two bifurcations");
            if (ex.size() != 2) continue;
            const double seg = (a12 - r) / pi, jc = (a12 + r) / pi;
            o.detail << " a12=" << a12 << ": S " << ex[0].kappa_zero << " JC " << ex[1].kappa_zero;
            o.require(std::abs(ex[0].kappa_zero - seg) <= 1e-3 && std::abs(ex[1].kappa_zero - jc) <= 1e-3, "det roots");
            if (a12 == 0.8)
                o.require(std::abs(ex[0].kappa_zero + 0.3310) <= 1e-3 && std::abs(ex[1].kappa_zero - 0.8403) <= 1e-3,
                          "reference 0.8403 / -0.3310");
            const auto branches = multispecies::continue_kappa(c.a, c.b, -1.5, 1.5, 0.03);
            for (const auto& b : branches) {
                const bool same_sign = b.origin.e0(0) * b.origin.e0(1) > 0.0;
                o.require(b.label == (same_sign ? "JC" : "S"), "label matches e0 signs");
            }
        }
    });

    criterion("weak-solution residual of vacuum profiles", 0.0, [](Outcome& o) {
        double worst = 0.0;
        int count = 0;
        const auto mu = numerics::log_space(1e-5, 1e-1, 20);
        for (const auto& s : rank_one::sweep_branch(mu).points) {
            const auto k = KernelSpec::cosine({0.0, -(1.0 / pi + s.mu)}, 1.0);
            worst = std::max(worst, free_boundary::weak_residual(
                                        k, [&](double x) { return rank_one::profile(s, x); },
                                        [&](double x) { return rank_one::profile_derivative(s, x); }, s.L, 2048));
            ++count;
        }
        const KernelFamily bessel{KernelSpec(0.0, {kernels::BesselSmoothed{0.5, 1.0, 1.0}}), KernelSpec::cosine({0.0, -1.0})};
        for (const auto& fam : std::vector<KernelFamily>{cosine_family(), harmonics_family(), bessel}) {
            const auto br = free_boundary::newton_continue(fam, free_boundary::Parameter::A0, a0_values());
            for (const auto& p : br.points) {
                worst = std::max(worst, free_boundary::weak_residual(p, fam.at(p.mu), 2048));
                ++count;
            }
        }
        o.detail << " profiles=" << count << " max |V'*u| on support=" << worst;
        o.require(worst <= 1e-7, "weak residual");
    });

    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
