#include "revswitch/lambert.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "revswitch/error.hpp"

namespace revswitch {

namespace {

constexpr double inv_e = 0.36787944117144233;

double initial_guess(double x) {
    if (x < -0.25) {
        // Branch-point series in p = sqrt(2 (e x + 1)).
        const double p = std::sqrt(std::max(0.0, 2.0 * (std::exp(1.0) * x + 1.0)));
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
    }
    if (x < 3.0) return std::log1p(x) * (1.0 - std::log1p(std::log1p(x)) / (2.0 + std::log1p(x)));
    const double l1 = std::log(x), l2 = std::log(l1);
    return l1 - l2 + l2 / l1;
}

} // namespace

double lambert_w0(double x) {
    if (std::isnan(x) || x < -inv_e) {
        std::ostringstream os;
        os << "lambert_w0: argument " << x << " below -1/e";
        throw DomainError(os.str());
    }
    if (x == 0.0) return 0.0;
    if (std::isinf(x)) return x;
    if (x == -inv_e) return -1.0;
    double w = initial_guess(x);
    for (int it = 0; it < 50; ++it) {
        // Halley on f(w) = w e^w - x, written with e^{-w} to avoid overflow.
        const double ew = std::exp(-w);
        const double f = w - x * ew;
        const double fp = 1.0 + x * ew;
        const double fpp = -x * ew;
        const double step = f / (fp - 0.5 * f * fpp / fp);
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(w))) break;
    }
    return w;
}

double lambert_w0_exp(double t) {
    if (t < 600.0) return lambert_w0(std::exp(t));
    // Newton on w + log w = t.
    double w = t - std::log(t);
    for (int it = 0; it < 50; ++it) {
        const double step = (w + std::log(w) - t) * w / (w + 1.0);
        w -= step;
        if (std::abs(step) <= 4.0 * std::numeric_limits<double>::epsilon() * w) break;
    }
    return w;
}

} // namespace revswitch
