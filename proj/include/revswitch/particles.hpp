#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revswitch/kernels.hpp"

namespace revswitch::particles {

/// Positions on the circle of circumference 2*pi (kept unwrapped during
/// integration) with species labels 1..P.
struct ParticleState {
    std::vector<double> positions;
    std::vector<int> species;
    double time = 0.0;
};

/// Equally spaced single-species configuration x_j = offset + 2*pi*j/n.
ParticleState crystal(int n, double offset = 0.0);

/// sum over ordered pairs j != m of V_{s_j s_m}(x_j - x_m).
double energy(const ParticleState& s, const kernels::MatrixKernelSpec& k);

/// -grad energy = -2 sum_{m != j} V'(x_j - x_m).
std::vector<double> force(const ParticleState& s, const kernels::MatrixKernelSpec& k);

/// d force_j / d x_m.
Eigen::MatrixXd force_jacobian(const ParticleState& s, const kernels::MatrixKernelSpec& k);

/// Jacobian of the force at the n-particle crystal; its eigenvalues are
/// 2 * lambda(2 pi m / n) for the crystal dispersion lambda.
Eigen::MatrixXd linearize_crystal(int n, const kernels::KernelSpec& k);

struct TrajectoryPoint {
    double time = 0.0;
    ParticleState state;
    double energy = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    int accepted_steps = 0;
    int rejected_steps = 0;
    /// Accepted steps at which the cyclic order of a single species changed.
    int order_violations = 0;
};

struct SimulateOptions {
    double initial_step = 1e-3;
    double min_step = 1e-12;
    /// Record every accepted step when <= 0, otherwise at this spacing in time.
    double record_interval = 0.0;
};

/// Adaptive Dormand-Prince integration of x' = force(x) with absolute and
/// relative local error tolerance tol.
Trajectory simulate(const ParticleState& s0, const kernels::MatrixKernelSpec& k, double t_end, double tol,
                    const SimulateOptions& options = {});

struct EquilibriumPoint {
    double mu = 0.0;
    std::vector<double> positions;
    double density_proxy = 0.0;
    bool crystal = false;
};

struct EquilibriumBranch {
    std::vector<EquilibriumPoint> points;
    double bifurcation_mu = 0.0;
    std::vector<double> secondary_bifurcations;
    bool truncated = false;
    std::string diagnostic;
};

struct ContinuationOptions {
    int scan_points = 41;
    double step = 0.02;
    double max_step = 0.2;
    int max_points = 400;
    double seed_amplitude = 1e-2;
};

/// Even equilibria (x_0 = 0, x_{n-j} = 2 pi - x_j) of the scalar particle
/// flow, followed from the crystal through its first instability and then
/// along the bifurcating branch by pseudo-arclength continuation.
EquilibriumBranch continue_equilibria(const kernels::ScalarFamily& family, int n, double mu_min, double mu_max,
                                      const ContinuationOptions& options = {});

/// max_j 1/(x_{j+1} - x_j) over cyclically sorted positions.
double density_proxy(std::vector<double> positions);

} // namespace revswitch::particles
