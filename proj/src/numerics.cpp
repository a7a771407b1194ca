#include "revswitch/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <boost/math/tools/roots.hpp>
#include <fftw3.h>

#include "revswitch/error.hpp"

namespace revswitch::numerics {

ChebyshevGrid::ChebyshevGrid(int intervals, double a, double b) : a_(a), b_(b) {
    if (intervals < 2) throw InvalidArgument("ChebyshevGrid: need at least 2 intervals");
    if (!(b > a)) throw InvalidArgument("ChebyshevGrid: empty interval");
    const int n = intervals;
    nodes_.resize(n + 1);
    weights_.assign(n + 1, 0.0);
    bary_.resize(n + 1);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int k = 0; k <= n; ++k) {
        nodes_[k] = mid - half * std::cos(pi * k / n);
        bary_[k] = ((k % 2) ? -1.0 : 1.0) * ((k == 0 || k == n) ? 0.5 : 1.0);
    }
    nodes_.front() = a;
    nodes_.back() = b;

    // Clenshaw-Curtis weights (Trefethen, Spectral Methods in MATLAB, clencurt).
    std::vector<double> w(n + 1, 0.0);
    if (n % 2 == 0) {
        w[0] = w[n] = 1.0 / (n * n - 1.0);
        for (int k = 1; k < n; ++k) {
            const double theta = pi * k / n;
            double v = 1.0;
            for (int j = 1; j < n / 2; ++j) v -= 2.0 * std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
            v -= std::cos(n * theta) / (n * n - 1.0);
            w[k] = 2.0 * v / n;
        }
    } else {
        w[0] = w[n] = 1.0 / (static_cast<double>(n) * n);
        for (int k = 1; k < n; ++k) {
            const double theta = pi * k / n;
            double v = 1.0;
            for (int j = 1; j <= (n - 1) / 2; ++j) v -= 2.0 * std::cos(2.0 * j * theta) / (4.0 * j * j - 1.0);
            w[k] = 2.0 * v / n;
        }
    }
    for (int k = 0; k <= n; ++k) weights_[k] = half * w[k];
}

double ChebyshevGrid::integrate(std::span<const double> values) const {
    double s = 0.0;
    for (std::size_t k = 0; k < weights_.size(); ++k) s += weights_[k] * values[k];
    return s;
}

double ChebyshevGrid::interpolate(std::span<const double> values, double x) const {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < nodes_.size(); ++j) {
        const double d = x - nodes_[j];
        if (d == 0.0) return values[j];
        const double t = bary_[j] / d;
        num += t * values[j];
        den += t;
    }
    return num / den;
}

double ChebyshevGrid::derivative(std::span<const double> values, double x) const {
    const auto n = nodes_.size();
    for (std::size_t k = 0; k < n; ++k) {
        if (x == nodes_[k]) {
            double s = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == k) continue;
                s += (bary_[j] / bary_[k]) * (values[j] - values[k]) / (nodes_[k] - nodes_[j]);
            }
            return s;
        }
    }
    const double p = interpolate(values, x);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double d = x - nodes_[j];
        num += bary_[j] * (p - values[j]) / (d * d);
        den += bary_[j] / d;
    }
    return num / den;
}

PeriodicGrid::PeriodicGrid(int n) : n_(n), h_(two_pi / n) {
    if (n < 4 || n % 2 != 0) throw InvalidArgument("PeriodicGrid: n must be even and >= 4");
}

std::vector<double> PeriodicGrid::nodes() const {
    std::vector<double> x(n_);
    for (int j = 0; j < n_; ++j) x[j] = node(j);
    return x;
}

std::vector<double> PeriodicGrid::unfold_even(std::span<const double> half_values) const {
    std::vector<double> full(n_);
    for (int j = 0; j < n_; ++j) full[j] = half_values[j <= half() ? j : n_ - j];
    return full;
}

GaussLegendre gauss_legendre(int points, double a, double b) {
    if (points < 1) throw InvalidArgument("gauss_legendre: need at least one point");
    GaussLegendre q;
    q.nodes.resize(points);
    q.weights.resize(points);
    const int m = (points + 1) / 2;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (points + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 1; j <= points; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
            }
            dp = points * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        q.nodes[i] = mid - half * z;
        q.nodes[points - 1 - i] = mid + half * z;
        const double w = 2.0 * half / ((1.0 - z * z) * dp * dp);
        q.weights[i] = q.weights[points - 1 - i] = w;
    }
    return q;
}

std::vector<double> fit_powers(std::span<const double> x, std::span<const double> y,
                               std::span<const int> powers) {
    const auto m = static_cast<Eigen::Index>(x.size());
    const auto k = static_cast<Eigen::Index>(powers.size());
    if (m < k || y.size() != x.size()) throw InvalidArgument("fit_powers: insufficient data points");
    double scale = 0.0;
    for (double xi : x) scale = std::max(scale, std::abs(xi));
    if (scale == 0.0) scale = 1.0;
    Eigen::MatrixXd a(m, k);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) a(i, j) = std::pow(x[i] / scale, powers[j]);
        rhs(i) = y[i];
    }
    const Eigen::VectorXd c = a.colPivHouseholderQr().solve(rhs);
    std::vector<double> out(k);
    for (Eigen::Index j = 0; j < k; ++j) out[j] = c(j) / std::pow(scale, powers[j]);
    return out;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const int powers[] = {0, 1};
    const auto c = fit_powers(x, y, powers);
    return {c[1], c[0]};
}

double find_root(const std::function<double(double)>& f, double lo, double hi, double abs_tol) {
    const double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw BracketError("find_root: no sign change over the bracket");
    std::uintmax_t max_iter = 200;
    auto tol = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
    const auto r = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
    return 0.5 * (r.first + r.second);
}

std::vector<double> spectral_derivative(std::span<const double> v) {
    const int n = static_cast<int>(v.size());
    if (n < 2 || n % 2 != 0) throw InvalidArgument("spectral_derivative: need an even number of samples");
    std::vector<double> real(v.begin(), v.end());
    fftw_complex* spec = fftw_alloc_complex(n / 2 + 1);
    fftw_plan fwd = fftw_plan_dft_r2c_1d(n, real.data(), spec, FFTW_ESTIMATE);
    fftw_plan bwd = fftw_plan_dft_c2r_1d(n, spec, real.data(), FFTW_ESTIMATE);
    fftw_execute(fwd);
    for (int l = 0; l <= n / 2; ++l) {
        const double re = spec[l][0], im = spec[l][1];
        const double f = l == n / 2 ? 0.0 : static_cast<double>(l) / n;
        spec[l][0] = -f * im;
        spec[l][1] = f * re;
    }
    fftw_execute(bwd);
    fftw_destroy_plan(fwd);
    fftw_destroy_plan(bwd);
    fftw_free(spec);
    return real;
}

double sup_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

std::vector<double> log_space(double lo, double hi, int points) {
    std::vector<double> v(points);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < points; ++i)
        v[i] = std::exp(points == 1 ? a : a + (b - a) * i / (points - 1));
    if (points > 1) { v.front() = lo; v.back() = hi; }
    return v;
}

std::vector<double> lin_space(double lo, double hi, int points) {
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) v[i] = points == 1 ? lo : lo + (hi - lo) * i / (points - 1);
    return v;
}

} // namespace revswitch::numerics
