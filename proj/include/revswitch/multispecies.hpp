#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revswitch/kernels.hpp"
#include "revswitch/stability.hpp"

namespace revswitch::multispecies {

// P species on the circle with kernels V_pq = a_pq delta - b_pq cos:
//   u_p,t = eps u_p,xx + (u_p Phi_p,x)_x,  Phi_p = sum_q a_pq u_q - b_pq c_q,
//   c_q(x) = integral cos(x - y) u_q(y) dy.

struct SystemState {
    std::vector<double> x;       ///< quadrature nodes on one period
    std::vector<double> weights; ///< quadrature weights, summing to 2 pi
    std::vector<std::vector<double>> u;
    /// Exact derivatives; when empty the flux uses spectral differentiation
    /// (uniform grid required).
    std::vector<std::vector<double>> du;
    double parameter = 0.0;
    double eps = 0.0;

    /// Uniform grid x_j = 2 pi j / n with every species at the mixed state 1.
    static SystemState uniform(int species, int n);
};

/// Flux J_p = eps u_p' + u_p Phi_p' at the nodes; steady states have J = 0.
std::vector<std::vector<double>> system_flux(const SystemState& s, const Eigen::MatrixXd& a,
                                             const Eigen::MatrixXd& b, double eps);

/// Divergence J_p' of the flux on a uniform grid (spectral), the right-hand
/// side of the evolution equation.
std::vector<std::vector<double>> system_residual(const SystemState& s, const Eigen::MatrixXd& a,
                                                 const Eigen::MatrixXd& b, double eps);

/// b(kappa) = b0 + kappa * b1.
struct AffineMatrix {
    Eigen::MatrixXd b0, b1;
    Eigen::MatrixXd at(double kappa) const { return b0 + kappa * b1; }
};

struct SortingCoefficients {
    Eigen::Matrix2d a;
    AffineMatrix b;
};

/// a = [[0.8, a12], [a12, 1]], b = [[-0.3, kappa], [kappa, -0.3]].
SortingCoefficients sorting_coefficients(double a12 = 1.0);

struct Bifurcation {
    double kappa = 0.0;
    Eigen::VectorXd e0; ///< critical direction, largest component +1
    stability::TwoSpeciesType type = stability::TwoSpeciesType::Stable;
};

/// Sign changes of the smallest eigenvalue of a - pi b(kappa) + eps I over
/// [kappa_lo, kappa_hi] (scan of `scan` points, then root polish).
std::vector<Bifurcation> detect_bifurcations(const Eigen::MatrixXd& a, const AffineMatrix& b, double kappa_lo,
                                             double kappa_hi, double eps, int scan = 201);

struct ExtrapolatedBifurcation {
    double eps_coarse = 0.0, eps_fine = 0.0;
    double kappa_coarse = 0.0, kappa_fine = 0.0;
    double kappa_zero = 0.0; ///< Richardson limit 2 kappa_fine - kappa_coarse
    stability::TwoSpeciesType type = stability::TwoSpeciesType::Stable;
};

/// Detection at both eps values, paired by order, and linear extrapolation to eps = 0.
std::vector<ExtrapolatedBifurcation> extrapolate_bifurcations(const Eigen::MatrixXd& a, const AffineMatrix& b,
                                                              double kappa_lo, double kappa_hi,
                                                              double eps_coarse = 0.03, double eps_fine = 0.015);

struct BranchPoint {
    double kappa = 0.0;
    std::vector<double> amplitude; ///< sup |u_p - 1|
    std::vector<double> minimum;   ///< min u_p
    SystemState state;             ///< profiles on the uniform grid
};

struct SystemBranch {
    Bifurcation origin;
    std::string label; ///< "JC" or "S"
    std::vector<BranchPoint> points;
    bool truncated = false;
    std::string diagnostic;
    /// Index of the first point where a species other than the leading one
    /// drops below vacuum_floor (-1 if none).
    int second_vacuum_index = -1;
};

struct ContinuationOptions {
    int n = 256;
    double seed_amplitude = 1e-2;
    double step = 0.05;
    double max_step = 0.25;
    int max_points = 200;
    double max_amplitude = 3.0;
    double vacuum_floor = 1e-3;
    double min_density = 1e-10; ///< stop once a species falls below this
    double tol = 1e-10;
};

/// Pseudo-arclength continuation of each bifurcating branch in
/// [kappa_lo, kappa_hi] from the mixed state. Unknowns are log densities on
/// the even half grid, one integration constant per species, and kappa.
/// Segregation branches are gauged so species 1 peaks at x = 0. When
/// a + eps I is indefinite the branches carry only their origin and a
/// diagnostic.
std::vector<SystemBranch> continue_kappa(const Eigen::MatrixXd& a, const AffineMatrix& b, double kappa_lo,
                                         double kappa_hi, double eps, const ContinuationOptions& options = {});

/// Newton solve at fixed parameters from a positive guess on the uniform grid.
SystemState solve_steady(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps, const SystemState& guess,
                         double tol = 1e-10);

/// Solve with kappa free and the cosine moment of species `species` fixed
/// (integral cos(x) u = moment); the result carries kappa in `parameter`.
SystemState solve_at_moment(const Eigen::MatrixXd& a, const AffineMatrix& b, double eps, int species, double moment,
                            const SystemState& guess, double kappa_guess, double tol = 1e-10);

/// Effective scalar problem for species `lead` when the remaining species
/// stay positive: per wavenumber, M_eff = M_11 - M_1h M_hh^{-1} M_h1 and
/// u_h = -M_hh^{-1} M_h1 u_1 (mean-free parts).
struct ReducedProblem {
    int lead = 0;
    std::vector<double> multiplier;          ///< l = 0..lmax
    std::vector<Eigen::VectorXd> back;       ///< -M_hh^{-1} M_h1 per l
    /// Cosine coefficients of the other species (each with mean 1) from the
    /// cosine coefficients c_l of u_lead (l = 0..lmax).
    std::vector<std::vector<double>> reconstruct(const std::vector<double>& lead_coefficients) const;
};

/// Throws ResonanceError naming l when M_hh(l) is singular for some l >= 1.
ReducedProblem reduce_nonvacuum_block(const kernels::MatrixKernelSpec& k, int lead = 0);

} // namespace revswitch::multispecies
