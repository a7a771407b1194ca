#pragma once

#include <functional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace revswitch::kernels {

// Interaction potentials on the circle of circumference 2*pi. A kernel is a
// Dirac weight plus a sum of even smooth terms. The Fourier multiplier is
//
//     M(l) = integral_{-pi}^{pi} V(x) cos(l x) dx,
//
// so convolution acts on cos(l x) as multiplication by M(l); a Dirac weight d
// contributes d to every M(l).

/// V(x) = sum_l coeffs[l] cos(l x).
struct CosineSeries {
    std::vector<double> coeffs;
};

/// Multiplier amplitude * (1 + eta^2 l^2)^(-beta): the kernel of
/// (1 - eta^2 d_xx)^(-beta). For beta = 1 it is evaluated through the exact
/// periodic Green's function, otherwise through its truncated cosine series.
struct BesselSmoothed {
    double eta = 1.0;
    double beta = 1.0;
    double amplitude = 1.0;
};

/// 2*pi-periodization of the line potential amplitude * exp(-(x/width)^2).
struct PeriodizedGaussian {
    double amplitude = 1.0;
    double width = 1.0;
};

/// 2*pi-periodization of amplitude/(2 eta) * exp(-|x|/eta).
struct PeriodizedExponential {
    double eta = 1.0;
    double amplitude = 1.0;
};

using Term = std::variant<CosineSeries, BesselSmoothed, PeriodizedGaussian, PeriodizedExponential>;

inline constexpr int default_lmax = 64;

class KernelSpec {
public:
    KernelSpec() = default;
    KernelSpec(double dirac_weight, std::vector<Term> terms, int lmax = default_lmax);

    static KernelSpec dirac(double weight, int lmax = default_lmax);
    static KernelSpec cosine(std::vector<double> coeffs, double dirac_weight = 0.0,
                             int lmax = default_lmax);

    double dirac_weight() const { return dirac_; }
    const std::vector<Term>& terms() const { return terms_; }
    int lmax() const { return lmax_; }
    bool has_smooth_part() const { return !terms_.empty(); }

    /// True when every smooth term is a periodization of a line potential.
    bool has_line_form() const;

    KernelSpec scaled(double factor) const;
    KernelSpec with_lmax(int lmax) const;
    KernelSpec operator+(const KernelSpec& other) const;

private:
    double dirac_ = 0.0;
    std::vector<Term> terms_;
    int lmax_ = default_lmax;
};

double multiplier(const KernelSpec& k, int l);

enum class Part { Full, SmoothOnly };

/// Pointwise value of the smooth part, x taken mod 2*pi. A kernel with a
/// Dirac weight requires Part::SmoothOnly.
double evaluate(const KernelSpec& k, double x, Part part = Part::Full);

/// Derivatives of the smooth part. Kinks (periodized exponential, beta = 1
/// Green's function) return the symmetric average at x = 0 mod 2*pi.
double derivative(const KernelSpec& k, double x);
double second_derivative(const KernelSpec& k, double x);

/// Exact periodic Green's function of (1 - eta^2 d_xx) on the circle.
double green_function(double eta, double x);
double green_function_derivative(double eta, double x);

// Line (non-periodized) forms of periodized families, for lattice sums on R.
double line_value(const KernelSpec& k, double x);
double line_second_derivative(const KernelSpec& k, double x);
/// hat V(xi) = (1/2pi) integral_R V(x) exp(-i xi x) dx, Dirac part included.
double line_fourier(const KernelSpec& k, double xi);

struct LineDirac {
    double weight = 1.0;
};
struct LineGaussian {
    double amplitude = 1.0;
    double width = 1.0;
};
struct LineExponential {
    double eta = 1.0;
    double amplitude = 1.0;
};
using LineFamily = std::variant<LineDirac, LineGaussian, LineExponential>;

/// Periodize a line potential into an explicit cosine series: the series
/// coefficients are samples of the line Fourier transform (Poisson summation).
KernelSpec periodize(const LineFamily& family, int lmax);

/// Affine parameter dependence V_mu = base + mu * slope.
struct KernelFamily {
    KernelSpec base;
    KernelSpec slope;
    KernelSpec at(double mu) const { return base + slope.scaled(mu); }
};

/// P x P matrix of interaction kernels, V_pq = V_qp.
class MatrixKernelSpec {
public:
    MatrixKernelSpec() = default;
    MatrixKernelSpec(int size, std::vector<KernelSpec> blocks_row_major);
    explicit MatrixKernelSpec(KernelSpec scalar);

    /// Blocks a_pq * delta - b_pq * cos(x).
    static MatrixKernelSpec dirac_cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                         int lmax = default_lmax);

    int size() const { return size_; }
    const KernelSpec& block(int p, int q) const { return blocks_[p * size_ + q]; }
    Eigen::MatrixXd multiplier_matrix(int l) const;
    int lmax() const;

private:
    int size_ = 0;
    std::vector<KernelSpec> blocks_;
};

using ScalarFamily = std::function<KernelSpec(double)>;
using MatrixFamily = std::function<MatrixKernelSpec(double)>;

} // namespace revswitch::kernels
