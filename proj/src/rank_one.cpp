#include "revswitch/rank_one.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::rank_one {

namespace {

constexpr double newton_tol = 1e-12;

// Cosine moment of (A0 + A1 cos)_+ over [-L, L].
double cosine_moment(double A0, double A1, double L) {
    return 2.0 * A0 * std::sin(L) + A1 * (L + std::sin(L) * std::cos(L));
}

BubbleGuess default_guess(double mu) {
    double L = asymptotic_L(mu);
    const double large = 1.15 * std::cbrt(1.0 / mu);
    if (!(L > 0.5) || large < L) L = std::min(large, pi - 0.3);
    return guess_from_L(L);
}

BubbleSolution newton(double mu, BubbleGuess g) {
    Eigen::Vector3d x(g.A0, g.A1, g.L);
    std::vector<double> history;
    for (int it = 0; it < 60; ++it) {
        const Residuals r = residuals(x(0), x(1), x(2), mu);
        history.push_back(r.sup());
        if (!std::isfinite(history.back())) break;
        if (history.back() <= newton_tol) {
            BubbleSolution s{x(0), x(1), x(2), x(0), mu, it};
            if (std::abs(s.A0) >= std::abs(s.A1))
                throw DomainError("solve_bubble: |A0/A1| >= 1, no vacuum (linear branch regime)");
            if (s.A1 <= 0.0) throw DomainError("solve_bubble: A1 <= 0, profile not positive on the support");
            return s;
        }
        const Eigen::Vector3d F(r.r_cos, r.r_mass, r.r_bc);
        Eigen::Vector3d dx = residual_jacobian(x(0), x(1), x(2), mu).fullPivLu().solve(F);
        if (!dx.allFinite()) break;
        // Damp steps that would push L out of (0, pi].
        double lambda = 1.0;
        while (lambda > 1e-3 && !(x(2) - lambda * dx(2) > 0.0 && x(2) - lambda * dx(2) <= pi)) lambda *= 0.5;
        if (lambda <= 1e-3) {
            std::ostringstream os;
            os << "solve_bubble: support half-width left (0, pi] at mu = " << mu << " (no vacuum)";
            throw DomainError(os.str());
        }
        x -= lambda * dx;
    }
    std::ostringstream os;
    os << "solve_bubble: Newton did not converge at mu = " << mu;
    throw ConvergenceError(os.str(), history);
}

} // namespace

double Residuals::sup() const { return std::max({std::abs(r_cos), std::abs(r_mass), std::abs(r_bc)}); }

Residuals residuals(double A0, double A1, double L, double mu) {
    const double k = 1.0 / pi + mu;
    return {A1 - k * cosine_moment(A0, A1, L), (A0 * L + A1 * std::sin(L)) / pi - 1.0, A0 + A1 * std::cos(L)};
}

Eigen::Matrix3d residual_jacobian(double A0, double A1, double L, double mu) {
    const double k = 1.0 / pi + mu;
    const double s = std::sin(L), c = std::cos(L);
    Eigen::Matrix3d j;
    j << -2.0 * k * s, 1.0 - k * (L + s * c), -k * (2.0 * A0 * c + A1 * (1.0 + std::cos(2.0 * L))),
        L / pi, s / pi, (A0 + A1 * c) / pi,
        1.0, c, -A1 * s;
    return j;
}

BubbleGuess guess_from_L(double L) {
    const double A1 = pi / (std::sin(L) - L * std::cos(L));
    return {-A1 * std::cos(L), A1, L};
}

double gap_constant() { return std::cbrt(1.5 * pi * pi); }

double asymptotic_L(double mu) {
    if (mu < 0.0) throw DomainError("asymptotic_L: mu must be non-negative");
    return pi - gap_constant() * std::cbrt(mu);
}

ExpansionCoefficients expansion_coefficients() {
    const double r2 = std::sqrt(2.0);
    return {-4.0 * r2 / (6.0 * pi), 4.0 * r2 / (pi * pi)};
}

BubbleSolution solve_bubble(double mu, std::optional<BubbleGuess> guess) {
    if (!(mu > 0.0)) throw DomainError("solve_bubble: mu must be positive");
    if (guess) {
        if (!(guess->L > 0.0 && guess->L < pi)) throw DomainError("solve_bubble: guess L outside (0, pi)");
        return newton(mu, *guess);
    }
    try {
        return newton(mu, default_guess(mu));
    } catch (const Error&) {
        // Walk in from small mu where the gap law is accurate.
        BubbleSolution s = newton(1e-4, default_guess(1e-4));
        const int steps = std::max(4, static_cast<int>(8 * std::log10(mu / 1e-4)));
        for (double m : numerics::log_space(1e-4, mu, steps)) s = newton(m, BubbleGuess{s.A0, s.A1, s.L});
        return s;
    }
}

BubbleBranch sweep_branch(const std::vector<double>& mu_values) {
    BubbleBranch branch;
    for (std::size_t i = 0; i < mu_values.size(); ++i) {
        const double mu = mu_values[i];
        if (!(mu > 0.0) || (i > 0 && !(mu > mu_values[i - 1])))
            throw InvalidArgument("sweep_branch: mu values must be positive and increasing");
        const auto& pts = branch.points;
        std::optional<BubbleGuess> guess;
        if (pts.size() >= 2) {
            // Secant in log mu.
            const auto& p1 = pts[pts.size() - 1];
            const auto& p0 = pts[pts.size() - 2];
            const double t = std::log(mu / p1.mu) / std::log(p1.mu / p0.mu);
            BubbleGuess g{p1.A0 + t * (p1.A0 - p0.A0), p1.A1 + t * (p1.A1 - p0.A1), p1.L + t * (p1.L - p0.L)};
            if (g.L > 0.0 && g.L < pi) guess = g;
        }
        try {
            try {
                branch.points.push_back(guess ? solve_bubble(mu, guess) : solve_bubble(mu));
            } catch (const Error&) {
                if (!guess) throw;
                branch.points.push_back(solve_bubble(mu));
            }
        } catch (const Error& e) {
            branch.truncated = true;
            branch.diagnostic = e.what();
            break;
        }
    }
    return branch;
}

GapLawFit fit_gap_law(const std::vector<double>& mu, const std::vector<double>& L) {
    if (mu.size() != L.size() || mu.size() < 2) throw InvalidArgument("fit_gap_law: need matching samples");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        lx.push_back(std::log(mu[i]));
        ly.push_back(std::log(pi - L[i]));
    }
    const auto f = numerics::fit_line(lx, ly);
    return {f.slope, std::exp(f.intercept)};
}

double profile(const BubbleSolution& s, double x) {
    const double y = std::remainder(x, two_pi);
    return std::abs(y) < s.L ? std::max(0.0, s.A0 + s.A1 * std::cos(y)) : 0.0;
}

double profile_derivative(const BubbleSolution& s, double x) {
    const double y = std::remainder(x, two_pi);
    return std::abs(y) < s.L ? -s.A1 * std::sin(y) : 0.0;
}

TwoSpeciesReduction reduce_two_species(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
    if (a(0, 1) != 0.0 || a(1, 0) != 0.0)
        throw UnsupportedError("reduce_two_species: repulsion must be block diagonal (a12 = a21 = 0)");
    if (!(a(0, 0) > 0.0)) throw InvalidArgument("reduce_two_species: a11 must be positive");
    const double hh = a(1, 1) - pi * b(1, 1);
    if (std::abs(hh) < 1e-12 * std::max(1.0, std::abs(a(1, 1))))
        throw ResonanceError("reduce_two_species: a22 - pi b22 is singular", 1);
    TwoSpeciesReduction r;
    r.a = a;
    r.b = b;
    r.b_eff = (b(0, 0) + pi * b(0, 1) * b(1, 0) / hh) / a(0, 0);
    r.mu_eff = r.b_eff - 1.0 / pi;
    r.u2_coupling = b(1, 0) / hh;
    return r;
}

TwoSpeciesProfiles solve_two_species(const TwoSpeciesReduction& r, std::optional<BubbleGuess> guess) {
    TwoSpeciesProfiles p;
    p.species1 = solve_bubble(r.mu_eff, guess);
    const auto& s = p.species1;
    p.u2_amplitude = r.u2_coupling * cosine_moment(s.A0, s.A1, s.L);
    if (std::abs(p.u2_amplitude) >= 1.0)
        throw DomainError("solve_two_species: second species develops vacuum; rank-one reduction breaks down");
    return p;
}

} // namespace revswitch::rank_one
