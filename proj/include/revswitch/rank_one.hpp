#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace revswitch::rank_one {

// Even equilibria u = (A0 + A1 cos x)_+ supported on [-L, L] for the kernel
// V = delta - (1/pi + mu) cos.

struct BubbleSolution {
    double A0 = 1.0;
    double A1 = 1.0;
    double L = 0.0;
    double rho = 1.0;
    double mu = 0.0;
    int iterations = 0;
};

struct Residuals {
    double r_cos = 0.0;
    double r_mass = 0.0;
    double r_bc = 0.0;
    double sup() const;
};

Residuals residuals(double A0, double A1, double L, double mu);

/// d(r_cos, r_mass, r_bc)/d(A0, A1, L).
Eigen::Matrix3d residual_jacobian(double A0, double A1, double L, double mu);

struct BubbleGuess {
    double A0 = 1.0;
    double A1 = 1.0;
    double L = 0.0;
};

/// Guess with the given support: (A0, A1) from the mass and boundary equations.
BubbleGuess guess_from_L(double L);

/// Newton solve to sup-norm residual 1e-12. Without a guess the asymptotic
/// gap law (small mu) or the large-mu scaling L ~ mu^(-1/3) seeds it.
BubbleSolution solve_bubble(double mu, std::optional<BubbleGuess> guess = std::nullopt);

/// pi - (3 pi^2 / 2)^(1/3) mu^(1/3).
double asymptotic_L(double mu);

/// (3 pi^2 / 2)^(1/3).
double gap_constant();

struct ExpansionCoefficients {
    double a3 = 0.0;
    double mu_coeff = 0.0;
};

/// Leading coefficients of a3(z1) and mu(z1) in the square-root scaling
/// near the onset of vacuum.
ExpansionCoefficients expansion_coefficients();

struct BubbleBranch {
    std::vector<BubbleSolution> points;
    bool truncated = false;
    std::string diagnostic;
};

/// Natural-parameter sweep over sorted positive mu values with warm starts.
BubbleBranch sweep_branch(const std::vector<double>& mu_values);

struct GapLawFit {
    double p = 0.0;
    double c = 0.0;
};

/// Least-squares fit of log(pi - L) = log c + p log mu.
GapLawFit fit_gap_law(const std::vector<double>& mu, const std::vector<double>& L);

double profile(const BubbleSolution& s, double x);
double profile_derivative(const BubbleSolution& s, double x);

/// Scalar problem for the vacuum species of a Dirac+cosine system with
/// block-diagonal repulsion a (a12 = a21 = 0) and attraction b.
struct TwoSpeciesReduction {
    Eigen::Matrix2d a, b;
    /// Effective attraction coefficient: species 1 solves the scalar problem
    /// with 1/pi + mu_eff = b_eff.
    double b_eff = 0.0;
    double mu_eff = 0.0;
    /// u2 = 1 + u2_coupling * C1 * cos x, C1 = integral of cos * u1.
    double u2_coupling = 0.0;
};

TwoSpeciesReduction reduce_two_species(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b);

/// Both species profiles on the circle for a reduced solution.
struct TwoSpeciesProfiles {
    BubbleSolution species1;
    double u2_amplitude = 0.0; ///< u2 = 1 + u2_amplitude cos x
};

TwoSpeciesProfiles solve_two_species(const TwoSpeciesReduction& r, std::optional<BubbleGuess> guess = std::nullopt);

} // namespace revswitch::rank_one
