#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "revswitch/kernels.hpp"

namespace revswitch::stability {

/// Growth rate -l^2 M(l) of Fourier mode l about the uniform state u = 1.
double dispersion_scalar(const kernels::KernelSpec& k, int l);

/// Eigenvalues (ascending) of -l^2 M(l) - eps l^2 for a matrix kernel.
Eigen::VectorXd dispersion_system(const kernels::MatrixKernelSpec& k, int l, double eps = 0.0);

enum class SumMode { DirectSum, PoissonSum };

struct CrystalDispersion {
    double value = 0.0;
    double tail_bound = 0.0;
    int terms = 0;
};

/// Linear growth rate lambda(sigma) = sum_{k != 0} V''(spacing k)(exp(-i sigma k) - 1)
/// of the crystal x_j = spacing * j. Kernels made of periodized line potentials
/// are summed over the infinite line lattice; other kernels are treated as
/// 2*pi-periodic and need spacing = 2*pi/M. The Dirac part never contributes.
/// The particle flow of the ordered-pair energy runs at twice this rate.
CrystalDispersion crystal_dispersion(const kernels::KernelSpec& k, double spacing, double sigma,
                                     SumMode mode, double tol = 1e-13);

struct StabilityReport {
    int l_star = 0;
    double mu_star = 0.0;
    Eigen::VectorXd e0;
    std::map<int, std::vector<double>> growth_rates;
};

/// Locate the parameter where the multiplier matrix first becomes singular.
/// Wavenumbers 1..lmax are scanned; exactly one may change determinant sign.
StabilityReport critical_parameter(const kernels::MatrixFamily& family, double lo, double hi);
StabilityReport critical_parameter(const kernels::ScalarFamily& family, double lo, double hi);

/// Kernel vector of a (near-)singular symmetric matrix, scaled so that the
/// largest-magnitude component is +1. Ties in magnitude are rejected.
Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& m, bool reject_ties = true);

enum class TwoSpeciesType { JointClustering, Segregation, Stable };

struct TwoSpeciesClassification {
    TwoSpeciesType type = TwoSpeciesType::Stable;
    Eigen::Vector2d e0 = Eigen::Vector2d::Zero();
};

/// Instability type of the Dirac+cosine system with repulsion a and
/// attraction b at wavenumber 1 (matrix a - pi b).
TwoSpeciesClassification classify_two_species(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b);

const char* to_string(TwoSpeciesType t);

/// d/dmu of the critical multiplier at mu_star (P = 1), or of the Schur
/// block ratio L11^{-1} L1h Lhh^{-1} Lh1 (P >= 2), by Richardson-extrapolated
/// central differences. The raw rate is returned; no reparameterization.
double crossing_rate(const kernels::MatrixFamily& family, double mu_star);
double crossing_rate(const kernels::ScalarFamily& family, double mu_star);

} // namespace revswitch::stability
