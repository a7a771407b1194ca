#include "revswitch/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::kernels {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void validate(const Term& t) {
    std::visit(overloaded{
                   [](const CosineSeries&) {},
                   [](const BesselSmoothed& b) {
                       if (!(b.eta > 0.0)) throw InvalidArgument("BesselSmoothed: eta must be positive");
                       if (b.beta < 0.0 || b.beta > 1.0)
                           throw InvalidArgument("BesselSmoothed: beta must lie in [0, 1]");
                   },
                   [](const PeriodizedGaussian& g) {
                       if (!(g.width > 0.0)) throw InvalidArgument("PeriodizedGaussian: width must be positive");
                   },
                   [](const PeriodizedExponential& e) {
                       if (!(e.eta > 0.0)) throw InvalidArgument("PeriodizedExponential: eta must be positive");
                   },
               },
               t);
}

double term_multiplier(const Term& t, int l) {
    return std::visit(overloaded{
                          [l](const CosineSeries& c) {
                              if (static_cast<std::size_t>(l) >= c.coeffs.size()) return 0.0;
                              return (l == 0 ? two_pi : pi) * c.coeffs[l];
                          },
                          [l](const BesselSmoothed& b) {
                              return b.amplitude * std::pow(1.0 + b.eta * b.eta * l * l, -b.beta);
                          },
                          [l](const PeriodizedGaussian& g) {
                              return g.amplitude * g.width * std::sqrt(pi) *
                                     std::exp(-0.25 * g.width * g.width * l * l);
                          },
                          [l](const PeriodizedExponential& e) {
                              return e.amplitude / (1.0 + e.eta * e.eta * l * l);
                          },
                      },
                      t);
}

// x reduced to [-pi, pi).
double wrap(double x) {
    double y = std::fmod(x + pi, two_pi);
    if (y < 0) y += two_pi;
    return y - pi;
}

int gaussian_images(double width) {
    // exp(-(2 pi j - pi)^2 / w^2) < 1e-18 beyond this j.
    return static_cast<int>(std::ceil((width * std::sqrt(41.5) + pi) / two_pi)) + 1;
}

// Order 0, 1 or 2 derivative of the periodized Gaussian.
double periodized_gaussian(const PeriodizedGaussian& g, double x, int order) {
    const double y0 = wrap(x);
    const int images = gaussian_images(g.width);
    const double w2 = g.width * g.width;
    double s = 0.0;
    for (int j = -images; j <= images; ++j) {
        const double y = y0 + two_pi * j;
        const double e = std::exp(-y * y / w2);
        if (order == 0) s += e;
        else if (order == 1) s += -2.0 * y / w2 * e;
        else s += (4.0 * y * y / (w2 * w2) - 2.0 / w2) * e;
    }
    return g.amplitude * s;
}

// Truncated cosine series from multipliers: V(x) = (1/2pi)[M0 + 2 sum M_l cos(l x)].
double series_from_multiplier(const BesselSmoothed& b, int lmax, double x, int order) {
    double s = order == 0 ? term_multiplier(b, 0) : 0.0;
    for (int l = 1; l <= lmax; ++l) {
        const double m = term_multiplier(b, l);
        if (order == 0) s += 2.0 * m * std::cos(l * x);
        else if (order == 1) s += -2.0 * l * m * std::sin(l * x);
        else s += -2.0 * l * l * m * std::cos(l * x);
    }
    return s / two_pi;
}

double term_value(const Term& t, int lmax, double x, int order) {
    return std::visit(overloaded{
                          [&](const CosineSeries& c) {
                              double s = 0.0;
                              for (std::size_t l = 0; l < c.coeffs.size(); ++l) {
                                  const double ld = static_cast<double>(l);
                                  if (order == 0) s += c.coeffs[l] * std::cos(ld * x);
                                  else if (order == 1) s -= ld * c.coeffs[l] * std::sin(ld * x);
                                  else s -= ld * ld * c.coeffs[l] * std::cos(ld * x);
                              }
                              return s;
                          },
                          [&](const BesselSmoothed& b) {
                              if (b.beta == 1.0) {
                                  if (order == 0) return b.amplitude * green_function(b.eta, x);
                                  if (order == 1) return b.amplitude * green_function_derivative(b.eta, x);
                                  return b.amplitude * green_function(b.eta, x) / (b.eta * b.eta);
                              }
                              return series_from_multiplier(b, lmax, x, order);
                          },
                          [&](const PeriodizedGaussian& g) { return periodized_gaussian(g, x, order); },
                          [&](const PeriodizedExponential& e) {
                              if (order == 0) return e.amplitude * green_function(e.eta, x);
                              if (order == 1) return e.amplitude * green_function_derivative(e.eta, x);
                              return e.amplitude * green_function(e.eta, x) / (e.eta * e.eta);
                          },
                      },
                      t);
}

void append_term(std::vector<Term>& terms, const Term& t) {
    if (const auto* c = std::get_if<CosineSeries>(&t)) {
        for (auto& existing : terms) {
            if (auto* e = std::get_if<CosineSeries>(&existing)) {
                if (e->coeffs.size() < c->coeffs.size()) e->coeffs.resize(c->coeffs.size(), 0.0);
                for (std::size_t l = 0; l < c->coeffs.size(); ++l) e->coeffs[l] += c->coeffs[l];
                return;
            }
        }
    }
    terms.push_back(t);
}

} // namespace

KernelSpec::KernelSpec(double dirac_weight, std::vector<Term> terms, int lmax)
    : dirac_(dirac_weight), lmax_(lmax) {
    if (lmax < 0) throw InvalidArgument("KernelSpec: lmax must be non-negative");
    if (!std::isfinite(dirac_weight)) throw InvalidArgument("KernelSpec: non-finite Dirac weight");
    for (const auto& t : terms) {
        validate(t);
        append_term(terms_, t);
    }
    for (int l = 0; l <= lmax_; ++l)
        if (!std::isfinite(multiplier(*this, l))) throw InvalidArgument("KernelSpec: non-finite multiplier");
}

KernelSpec KernelSpec::dirac(double weight, int lmax) { return KernelSpec(weight, {}, lmax); }

KernelSpec KernelSpec::cosine(std::vector<double> coeffs, double dirac_weight, int lmax) {
    return KernelSpec(dirac_weight, {CosineSeries{std::move(coeffs)}}, lmax);
}

bool KernelSpec::has_line_form() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) {
        if (std::holds_alternative<PeriodizedGaussian>(t) || std::holds_alternative<PeriodizedExponential>(t))
            return true;
        const auto* b = std::get_if<BesselSmoothed>(&t);
        return b != nullptr && b->beta == 1.0;
    });
}

KernelSpec KernelSpec::scaled(double factor) const {
    std::vector<Term> out;
    for (const auto& t : terms_) {
        out.push_back(std::visit(overloaded{
                                     [&](CosineSeries c) -> Term {
                                         for (auto& v : c.coeffs) v *= factor;
                                         return c;
                                     },
                                     [&](BesselSmoothed b) -> Term {
                                         b.amplitude *= factor;
                                         return b;
                                     },
                                     [&](PeriodizedGaussian g) -> Term {
                                         g.amplitude *= factor;
                                         return g;
                                     },
                                     [&](PeriodizedExponential e) -> Term {
                                         e.amplitude *= factor;
                                         return e;
                                     },
                                 },
                                 t));
    }
    return KernelSpec(dirac_ * factor, std::move(out), lmax_);
}

KernelSpec KernelSpec::with_lmax(int lmax) const { return KernelSpec(dirac_, terms_, lmax); }

KernelSpec KernelSpec::operator+(const KernelSpec& other) const {
    std::vector<Term> terms = terms_;
    for (const auto& t : other.terms_) append_term(terms, t);
    return KernelSpec(dirac_ + other.dirac_, std::move(terms), std::max(lmax_, other.lmax_));
}

double multiplier(const KernelSpec& k, int l) {
    if (l < 0 || l > k.lmax()) {
        std::ostringstream os;
        os << "multiplier: wavenumber " << l << " outside [0, " << k.lmax() << "]";
        throw OutOfRange(os.str());
    }
    double m = k.dirac_weight();
    for (const auto& t : k.terms()) m += term_multiplier(t, l);
    return m;
}

double evaluate(const KernelSpec& k, double x, Part part) {
    if (k.dirac_weight() != 0.0 && part == Part::Full)
        throw UnsupportedError("evaluate: kernel has a Dirac part; request Part::SmoothOnly");
    // Fold to |x| in [0, pi] first so evenness holds bit for bit.
    const double y = std::abs(std::remainder(x, two_pi));
    double s = 0.0;
    for (const auto& t : k.terms()) s += term_value(t, k.lmax(), y, 0);
    return s;
}

double derivative(const KernelSpec& k, double x) {
    double s = 0.0;
    for (const auto& t : k.terms()) s += term_value(t, k.lmax(), x, 1);
    return s;
}

double second_derivative(const KernelSpec& k, double x) {
    double s = 0.0;
    for (const auto& t : k.terms()) s += term_value(t, k.lmax(), x, 2);
    return s;
}

double green_function(double eta, double x) {
    double y = std::fmod(x, two_pi);
    if (y < 0) y += two_pi;
    const double denom = -2.0 * eta * std::expm1(-two_pi / eta);
    return (std::exp(-y / eta) + std::exp((y - two_pi) / eta)) / denom;
}

double green_function_derivative(double eta, double x) {
    double y = std::fmod(x, two_pi);
    if (y < 0) y += two_pi;
    if (y == 0.0) return 0.0;
    const double denom = -2.0 * eta * eta * std::expm1(-two_pi / eta);
    return (-std::exp(-y / eta) + std::exp((y - two_pi) / eta)) / denom;
}

namespace {

double line_term(const Term& t, double x, int order) {
    return std::visit(overloaded{
                          [](const CosineSeries&) -> double {
                              throw UnsupportedError("cosine series has no line form");
                          },
                          [&](const BesselSmoothed& b) -> double {
                              if (b.beta != 1.0) throw UnsupportedError("BesselSmoothed with beta != 1 has no line form");
                              const double e = b.amplitude / (2.0 * b.eta) * std::exp(-std::abs(x) / b.eta);
                              return order == 0 ? e : e / (b.eta * b.eta);
                          },
                          [&](const PeriodizedGaussian& g) -> double {
                              const double w2 = g.width * g.width;
                              const double e = g.amplitude * std::exp(-x * x / w2);
                              return order == 0 ? e : e * (4.0 * x * x / (w2 * w2) - 2.0 / w2);
                          },
                          [&](const PeriodizedExponential& p) -> double {
                              const double e = p.amplitude / (2.0 * p.eta) * std::exp(-std::abs(x) / p.eta);
                              return order == 0 ? e : e / (p.eta * p.eta);
                          },
                      },
                      t);
}

} // namespace

double line_value(const KernelSpec& k, double x) {
    double s = 0.0;
    for (const auto& t : k.terms()) s += line_term(t, x, 0);
    return s;
}

double line_second_derivative(const KernelSpec& k, double x) {
    double s = 0.0;
    for (const auto& t : k.terms()) s += line_term(t, x, 2);
    return s;
}

double line_fourier(const KernelSpec& k, double xi) {
    double s = k.dirac_weight();
    for (const auto& t : k.terms()) {
        s += std::visit(overloaded{
                            [](const CosineSeries&) -> double {
                                throw UnsupportedError("cosine series has no line form");
                            },
                            [&](const BesselSmoothed& b) -> double {
                                if (b.beta != 1.0) throw UnsupportedError("BesselSmoothed with beta != 1 has no line form");
                                return b.amplitude / (1.0 + b.eta * b.eta * xi * xi);
                            },
                            [&](const PeriodizedGaussian& g) {
                                return g.amplitude * g.width * std::sqrt(pi) *
                                       std::exp(-0.25 * g.width * g.width * xi * xi);
                            },
                            [&](const PeriodizedExponential& p) {
                                return p.amplitude / (1.0 + p.eta * p.eta * xi * xi);
                            },
                        },
                        t);
    }
    return s / two_pi;
}

KernelSpec periodize(const LineFamily& family, int lmax) {
    if (lmax < 1) throw InvalidArgument("periodize: lmax must be at least 1");
    return std::visit(overloaded{
                          [&](const LineDirac& d) { return KernelSpec::dirac(d.weight, lmax); },
                          [&](const LineGaussian& g) {
                              const KernelSpec exact(0.0, {PeriodizedGaussian{g.amplitude, g.width}}, lmax);
                              std::vector<double> c(lmax + 1);
                              for (int l = 0; l <= lmax; ++l) c[l] = multiplier(exact, l) / (l == 0 ? two_pi : pi);
                              return KernelSpec::cosine(std::move(c), 0.0, lmax);
                          },
                          [&](const LineExponential& e) {
                              if (!(e.eta > 0.0)) throw InvalidArgument("periodize: eta must be positive");
                              std::vector<double> c(lmax + 1);
                              for (int l = 0; l <= lmax; ++l)
                                  c[l] = e.amplitude / (1.0 + e.eta * e.eta * l * l) / (l == 0 ? two_pi : pi);
                              return KernelSpec::cosine(std::move(c), 0.0, lmax);
                          },
                      },
                      family);
}

MatrixKernelSpec::MatrixKernelSpec(int size, std::vector<KernelSpec> blocks) : size_(size), blocks_(std::move(blocks)) {
    if (size < 1 || blocks_.size() != static_cast<std::size_t>(size * size))
        throw InvalidArgument("MatrixKernelSpec: need size*size blocks");
    const int lm = lmax();
    for (int p = 0; p < size; ++p)
        for (int q = p + 1; q < size; ++q)
            for (int l = 0; l <= lm; ++l) {
                const double a = multiplier(block(p, q), l), b = multiplier(block(q, p), l);
                if (std::abs(a - b) > 1e-13 * std::max(1.0, std::abs(a)))
                    throw InvalidArgument("MatrixKernelSpec: interaction matrix must be symmetric");
            }
}

MatrixKernelSpec::MatrixKernelSpec(KernelSpec scalar) : size_(1), blocks_{std::move(scalar)} {}

MatrixKernelSpec MatrixKernelSpec::dirac_cosine(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int lmax) {
    if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() != a.cols())
        throw InvalidArgument("dirac_cosine: a and b must be square of equal size");
    const int p = static_cast<int>(a.rows());
    std::vector<KernelSpec> blocks;
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) blocks.push_back(KernelSpec::cosine({0.0, -b(i, j)}, a(i, j), lmax));
    return MatrixKernelSpec(p, std::move(blocks));
}

Eigen::MatrixXd MatrixKernelSpec::multiplier_matrix(int l) const {
    Eigen::MatrixXd m(size_, size_);
    for (int p = 0; p < size_; ++p)
        for (int q = 0; q < size_; ++q) m(p, q) = multiplier(block(p, q), l);
    return m;
}

int MatrixKernelSpec::lmax() const {
    int lm = blocks_.empty() ? 0 : blocks_.front().lmax();
    for (const auto& b : blocks_) lm = std::min(lm, b.lmax());
    return lm;
}

} // namespace revswitch::kernels
