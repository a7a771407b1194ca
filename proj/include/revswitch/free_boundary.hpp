#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "revswitch/kernels.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::free_boundary {

// Even equilibria with support [-L, L], rescaled to z in [-pi, pi] by
// x = L z / pi, v(z) = u(L z / pi). Unknowns live on a Chebyshev-Lobatto grid
// over [0, pi] (evenness supplies the other half).

/// P0 v = (1/2pi) int v, P1 v = ((1/pi) int v cos) cos, Ph = 1 - P0 - P1,
/// for even grid functions on [0, pi].
class Projections {
public:
    explicit Projections(std::shared_ptr<const numerics::ChebyshevGrid> grid);

    double p0(std::span<const double> v) const;
    /// Coefficient of cos z in P1 v.
    double p1(std::span<const double> v) const;
    std::vector<double> ph(std::span<const double> v) const;

private:
    std::shared_ptr<const numerics::ChebyshevGrid> grid_;
};

struct ExtendedState {
    std::shared_ptr<const numerics::ChebyshevGrid> grid;
    std::vector<double> v;
    double rho = 1.0;
    double mu = 0.0;
    double L = pi;
    double A1 = 1.0;
    double A0 = 1.0;
    double residual = 0.0;
    int iterations = 0;

    /// Rescaled profile v(z), z in [-pi, pi].
    double value(double z) const;
    /// Physical density u(x) on the circle (zero in the vacuum).
    double density(double x) const;
    double density_derivative(double x) const;
    /// Ph v on the grid.
    std::vector<double> v_h() const;
};

/// Base point of the vertical branch: v = 1 + cos z, L = pi, rho from the
/// uniform balance, mu at the ell = 1 instability of the affine family.
ExtendedState base_state(const kernels::KernelFamily& family, int grid_n);

/// K_ij = w_j [W^L(z_i - xi_j) + W^L(z_i + xi_j)] with W^L(s) = (L/pi) W(L s/pi)
/// for the smooth part W of k. The Dirac part is the caller's identity term.
Eigen::MatrixXd rescaled_kernel(const kernels::KernelSpec& k, double L, const numerics::ChebyshevGrid& grid);

struct Residual {
    std::vector<double> F_v;
    double F_bc = 0.0;
    double F_m = 0.0;
    double sup() const;
};

Residual assemble_residual(const ExtendedState& s, const kernels::KernelFamily& family);

/// Jacobian of (F_v, F_bc, F_m) with respect to (v_0..v_n, rho, mu, L).
Eigen::MatrixXd assemble_jacobian(const ExtendedState& s, const kernels::KernelFamily& family);

enum class Parameter { A0, Mu };

struct ContinuationOptions {
    int grid_n = 512;
    double tol = 1e-10;
    int max_iterations = 30;
};

struct FreeBoundaryBranch {
    std::vector<ExtendedState> points;
    double mu_star = 0.0;
    bool truncated = false;
    std::string diagnostic;
};

/// Newton continuation of the bubble branch in A0 (values >= 1, increasing)
/// or in mu (values beyond the ell = 1 instability, moving away from it).
FreeBoundaryBranch newton_continue(const kernels::KernelFamily& family, Parameter parameter,
                                   const std::vector<double>& values, const ContinuationOptions& options = {});

struct Expansion {
    double A1_1 = 0.0, A1_2 = 0.0;
    double L_1 = 0.0, L_2 = 0.0;
    double rho_1 = 0.0;
    double mu_1 = 0.0, mu_2 = 0.0, mu_3 = 0.0;
    std::vector<double> z;
    std::vector<double> v_h1;
};

/// Polynomial fits in nu = A0 - 1 of the branch components.
Expansion extract_expansion(const FreeBoundaryBranch& branch);

/// max over the support of |(V' * u)(x)| on an n-point circle grid, with the
/// convolution done by Gauss-Legendre quadrature split at x.
double weak_residual(const kernels::KernelSpec& k, const std::function<double(double)>& u,
                     const std::function<double(double)>& du, double L, int n = 2048);

double weak_residual(const ExtendedState& s, const kernels::KernelSpec& k, int n = 2048);

} // namespace revswitch::free_boundary
