#pragma once

#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace revswitch {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

namespace numerics {

/// Chebyshev-Lobatto grid on [a, b] with Clenshaw-Curtis weights and
/// barycentric interpolation. Nodes are ascending and include both ends.
class ChebyshevGrid {
public:
    ChebyshevGrid(int intervals, double a, double b);

    int size() const { return static_cast<int>(nodes_.size()); }
    double lower() const { return a_; }
    double upper() const { return b_; }
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

    double integrate(std::span<const double> values) const;
    double interpolate(std::span<const double> values, double x) const;
    double derivative(std::span<const double> values, double x) const;

private:
    double a_, b_;
    std::vector<double> nodes_, weights_, bary_;
};

/// Uniform grid x_j = 2*pi*j/n on the circle, trapezoid weights 2*pi/n.
/// n must be even so that x = pi is a node (index n/2).
class PeriodicGrid {
public:
    explicit PeriodicGrid(int n);

    int size() const { return n_; }
    int half() const { return n_ / 2; }
    double spacing() const { return h_; }
    double node(int j) const { return h_ * j; }
    std::vector<double> nodes() const;

    /// Multiplicity of half-grid node k when an even function is folded
    /// onto indices 0..n/2.
    double fold_multiplicity(int k) const { return (k == 0 || k == half()) ? 1.0 : 2.0; }

    std::vector<double> unfold_even(std::span<const double> half_values) const;

private:
    int n_;
    double h_;
};

struct GaussLegendre {
    std::vector<double> nodes, weights;
};
GaussLegendre gauss_legendre(int points, double a, double b);

/// Least-squares fit y ~ sum_k c_k x^{powers[k]}.
std::vector<double> fit_powers(std::span<const double> x, std::span<const double> y,
                               std::span<const int> powers);

/// Line fit y = intercept + slope*x.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Bracketed root of a continuous function (TOMS 748). Throws BracketError
/// when f(lo) and f(hi) have the same sign.
double find_root(const std::function<double(double)>& f, double lo, double hi,
                 double abs_tol = 1e-14);

/// d/dx of samples on x_j = 2 pi j / n via FFT; the Nyquist mode is dropped.
std::vector<double> spectral_derivative(std::span<const double> v);

double sup_norm(std::span<const double> v);
double sup_distance(std::span<const double> a, std::span<const double> b);

std::vector<double> log_space(double lo, double hi, int points);
std::vector<double> lin_space(double lo, double hi, int points);

} // namespace numerics
} // namespace revswitch
