#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "revswitch/kernels.hpp"

namespace revswitch::viscous {

// Steady states of u_t = eps u_xx + (u (V * u)_x)_x, normalized by
// int u = 2 pi and int cos(x) u = rho pi. In log variables the steady
// equation integrates to eps log u + V * u = m.

struct ViscousProfile {
    /// Uniform nodes x_j = -pi + 2 pi j / n, j = 0..n-1.
    std::vector<double> x;
    std::vector<double> u;
    double A = 0.0; ///< int cos(x) u
    double m = 0.0;
    double mu = 0.0;
    double eps = 0.0;
    double rho = 0.0;
    int iterations = 0;
    double residual = 0.0;

    double mass() const;
    double cosine_moment() const;
    double max() const;
};

/// Cosine model V = delta - (1/pi + mu) cos.
kernels::KernelFamily cosine_model();

/// u = eps W0(exp(v/eps)/eps), v = (1/pi + mu) A cos x + m, for the cosine
/// model. (A, m, mu) from Newton on mass and moment, started from the
/// eps = 0 profile. rho in (0, 2); rho >= 1 gives bubbles with
/// exponentially small density in the vacuum.
ViscousProfile closed_form_profile(double rho, double eps, int n = 1024);

enum class Endpoints { Reject, Allow };

/// 2 (1 - sqrt(1 - rho^2)) / (pi rho^2), evaluated as 2 / (pi (1 + sqrt(1 - rho^2))).
/// Endpoints::Allow admits rho = 0 and rho = 1 (limits 1/pi and 2/pi).
double mu1(double rho, Endpoints endpoints = Endpoints::Reject);

struct AdjointPairings {
    double pair_mu = 0.0;
    double pair_eps = 0.0;
    double pair_mu_quadrature = 0.0;
    double pair_eps_quadrature = 0.0;
    std::function<double(double)> e0_star;
};

/// Pairings of e0*(x) = -log(1 + rho cos x) / rho with the parameter
/// derivatives of the steady equation along the linear branch.
/// Throws AccuracyError if quadrature and closed form differ by > 1e-8.
AdjointPairings adjoint_pairings(double rho);

struct CollocationOptions {
    int n = 512;
    double tol = 1e-11;
    int max_iterations = 60;
};

/// Newton collocation in w = log u on the even half of a uniform grid.
/// Unknowns: w at x_0..x_{n/2}, m and mu. Kinked kernels converge at O(h^2).
/// An optional guess (same n) replaces the cosine-model closed form.
ViscousProfile steady_collocation(const kernels::KernelFamily& family, double eps, double rho,
                                  const CollocationOptions& options = {},
                                  const ViscousProfile* guess = nullptr);

struct BranchPoint {
    double rho = 0.0;
    double mu = 0.0;
    double mu_over_eps = 0.0;    ///< (mu - mu_star) / eps
    double mu1_prediction = 0.0; ///< NaN for rho >= 1
};

/// Steady collocation over increasing rho with warm starts; mu_star is the
/// inviscid instability of the family at wavenumber 1.
std::vector<BranchPoint> viscous_branch(const kernels::KernelFamily& family, double eps,
                                        const std::vector<double>& rho,
                                        const CollocationOptions& options = {});

struct TimeStepOptions {
    int record_every = 0;     ///< 0: record only the final state
    double cfl_safety = 0.9;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> profiles; ///< on x_j = 2 pi j / n
    std::vector<double> mass;
    double cfl_dt = 0.0; ///< smallest transport bound met along the run
    int steps = 0;
};

/// Pseudo-spectral semi-implicit Euler: eps d_xx plus a stabilizing
/// C d_xx (C = Dirac weight times max u) implicit, transport explicit.
/// u0 on x_j = 2 pi j / n with mean 1. Throws StepRejected when dt exceeds
/// cfl_safety * h / max|(V * u)_x|.
Trajectory time_step(const std::vector<double>& u0, const kernels::KernelSpec& k, double eps, double dt,
                     double T, const TimeStepOptions& options = {});

} // namespace revswitch::viscous
