#include "revswitch/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::stability {

using kernels::KernelSpec;
using kernels::MatrixKernelSpec;

double dispersion_scalar(const KernelSpec& k, int l) {
    if (l < 0) throw OutOfRange("dispersion_scalar: negative wavenumber");
    if (l == 0) return 0.0;
    return -static_cast<double>(l) * l * kernels::multiplier(k, l);
}

Eigen::VectorXd dispersion_system(const MatrixKernelSpec& k, int l, double eps) {
    const double l2 = static_cast<double>(l) * l;
    Eigen::MatrixXd m = -l2 * k.multiplier_matrix(l);
    m.diagonal().array() -= eps * l2;
    if (l == 0) m.setZero();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

namespace {

// V''(x) with the Dirac part removed; envelope bounds |V''(x)| for x > 0.
double line_second_derivative_envelope(const KernelSpec& k, double x) {
    double s = 0.0;
    for (const auto& t : k.terms()) {
        if (const auto* g = std::get_if<kernels::PeriodizedGaussian>(&t)) {
            const double w2 = g->width * g->width;
            s += std::abs(g->amplitude) * std::exp(-x * x / w2) * (4.0 * x * x / (w2 * w2) + 2.0 / w2);
        } else if (const auto* e = std::get_if<kernels::PeriodizedExponential>(&t)) {
            s += std::abs(e->amplitude) / (2.0 * e->eta * e->eta * e->eta) * std::exp(-x / e->eta);
        } else if (const auto* b = std::get_if<kernels::BesselSmoothed>(&t)) {
            s += std::abs(b->amplitude) / (2.0 * b->eta * b->eta * b->eta) * std::exp(-x / b->eta);
        }
    }
    return s;
}

// Regularized transform of V'': the xi-independent singular part (from the
// kink of exponential terms) cancels in the Poisson differences and is dropped.
double regularized_second_derivative_transform(const KernelSpec& k, double xi) {
    double s = 0.0;
    for (const auto& t : k.terms()) {
        if (const auto* g = std::get_if<kernels::PeriodizedGaussian>(&t)) {
            s += -xi * xi * g->amplitude * g->width * std::sqrt(pi) * std::exp(-0.25 * g->width * g->width * xi * xi);
        } else {
            double amp = 0.0, eta = 1.0;
            if (const auto* e = std::get_if<kernels::PeriodizedExponential>(&t)) {
                amp = e->amplitude;
                eta = e->eta;
            } else if (const auto* b = std::get_if<kernels::BesselSmoothed>(&t)) {
                amp = b->amplitude;
                eta = b->eta;
            }
            // -xi^2 A/(1+eta^2 xi^2) = -A/eta^2 + (A/eta^2)/(1+eta^2 xi^2)
            s += amp / (eta * eta) / (1.0 + eta * eta * xi * xi);
        }
    }
    return s / two_pi;
}

CrystalDispersion line_direct(const KernelSpec& k, double rho, double sigma, double tol) {
    CrystalDispersion out;
    double sum = 0.0;
    constexpr int max_terms = 10'000'000;
    for (int j = 1; j <= max_terms; ++j) {
        const double x = rho * j;
        sum += 2.0 * kernels::line_second_derivative(k, x) * (std::cos(sigma * j) - 1.0);
        // Remaining terms are bounded by 4 * env(x) * geometric factor once env is decaying.
        const double e1 = line_second_derivative_envelope(k, x + rho);
        const double e2 = line_second_derivative_envelope(k, x + 2.0 * rho);
        if (e1 > 0.0 && e2 < e1) {
            const double r = e2 / e1;
            const double bound = 4.0 * e1 / (1.0 - r);
            if (bound <= tol) {
                out.value = sum;
                out.tail_bound = bound;
                out.terms = j;
                return out;
            }
        } else if (e1 == 0.0) {
            out.value = sum;
            out.terms = j;
            return out;
        }
    }
    throw AccuracyError("crystal_dispersion: direct lattice sum did not reach the tail tolerance");
}

CrystalDispersion line_poisson(const KernelSpec& k, double rho, double sigma, double tol) {
    auto pair = [&](int j) {
        const double a = regularized_second_derivative_transform(k, (two_pi * j + sigma) / rho) -
                         regularized_second_derivative_transform(k, two_pi * j / rho);
        return a;
    };
    CrystalDispersion out;
    double sum = pair(0);
    double last = 0.0;
    constexpr int max_terms = 50'000'000;
    for (int j = 1; j <= max_terms; ++j) {
        const double t = pair(j) + pair(-j);
        sum += t;
        // Symmetric pairs decay like j^-4, so the tail is about |t| j / 3.
        const double bound = (two_pi / rho) * std::abs(t) * j / 3.0;
        if (j > 8 && bound <= tol && std::abs(t) <= std::abs(last) + 1e-300) {
            out.value = (two_pi / rho) * sum;
            out.tail_bound = bound;
            out.terms = 2 * j + 1;
            return out;
        }
        last = t;
    }
    throw AccuracyError("crystal_dispersion: Poisson sum did not reach the tail tolerance");
}

int periodic_count(double rho) {
    const double m = two_pi / rho;
    const double mr = std::round(m);
    if (mr < 2 || std::abs(m - mr) > 1e-9 * mr)
        throw InvalidArgument("crystal_dispersion: periodic kernel needs spacing 2*pi/M for integer M >= 2");
    return static_cast<int>(mr);
}

CrystalDispersion periodic_direct(const KernelSpec& k, double rho, double sigma) {
    const int m = periodic_count(rho);
    CrystalDispersion out;
    for (int j = 1; j < m; ++j) out.value += kernels::second_derivative(k, rho * j) * (std::cos(sigma * j) - 1.0);
    out.terms = m - 1;
    return out;
}

CrystalDispersion periodic_spectral(const KernelSpec& k, double rho, double sigma) {
    const int m = periodic_count(rho);
    CrystalDispersion out;
    // V''(x) = (1/2pi) sum_{l in Z} -l^2 M_s(l) cos(l x), M_s without the Dirac weight.
    for (int l = 1; l <= k.lmax(); ++l) {
        const double w = -static_cast<double>(l) * l * (kernels::multiplier(k, l) - k.dirac_weight());
        double s = 0.0;
        for (int j = 0; j < m; ++j) s += std::cos(l * rho * j) * (std::cos(sigma * j) - 1.0);
        out.value += 2.0 * w * s / two_pi;
    }
    out.terms = k.lmax();
    return out;
}

double det(const Eigen::MatrixXd& m) { return m.size() == 1 ? m(0, 0) : m.determinant(); }

} // namespace

CrystalDispersion crystal_dispersion(const KernelSpec& k, double spacing, double sigma, SumMode mode, double tol) {
    if (!(spacing > 0.0)) throw InvalidArgument("crystal_dispersion: spacing must be positive");
    if (sigma < 0.0 || sigma >= two_pi) throw InvalidArgument("crystal_dispersion: sigma must lie in [0, 2 pi)");
    if (sigma == 0.0) return {};
    if (k.has_line_form())
        return mode == SumMode::DirectSum ? line_direct(k, spacing, sigma, tol) : line_poisson(k, spacing, sigma, tol);
    return mode == SumMode::DirectSum ? periodic_direct(k, spacing, sigma) : periodic_spectral(k, spacing, sigma);
}

Eigen::VectorXd kernel_vector(const Eigen::MatrixXd& m, bool reject_ties) {
    Eigen::VectorXd v;
    if (m.rows() == 1) {
        v = Eigen::VectorXd::Ones(1);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
        Eigen::Index imin = 0;
        es.eigenvalues().cwiseAbs().minCoeff(&imin);
        v = es.eigenvectors().col(imin);
    }
    Eigen::Index imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    v /= v(imax);
    if (reject_ties) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            if (i != imax && std::abs(std::abs(v(i)) - 1.0) < 1e-9) {
                std::ostringstream os;
                os << "kernel vector has components " << imax << " and " << i
                   << " of equal magnitude; vacuum species is not determined";
                throw HypothesisViolation(os.str());
            }
        }
    }
    return v;
}

StabilityReport critical_parameter(const kernels::MatrixFamily& family, double lo, double hi) {
    if (!(hi > lo)) throw InvalidArgument("critical_parameter: empty bracket");
    const MatrixKernelSpec klo = family(lo), khi = family(hi);
    const int lmax = std::min(klo.lmax(), khi.lmax());
    std::vector<int> crossing;
    for (int l = 1; l <= lmax; ++l) {
        const double dlo = det(klo.multiplier_matrix(l)), dhi = det(khi.multiplier_matrix(l));
        if (dlo == 0.0 || dhi == 0.0 || (dlo > 0) != (dhi > 0)) crossing.push_back(l);
    }
    if (crossing.empty()) throw BracketError("critical_parameter: no determinant sign change at any wavenumber");
    if (crossing.size() > 1) {
        std::ostringstream os;
        os << "critical_parameter: multiplier also changes sign at wavenumber " << crossing[1];
        throw HypothesisViolation(os.str());
    }
    StabilityReport r;
    r.l_star = crossing.front();
    const double scale = std::max(1.0, std::abs(det(klo.multiplier_matrix(r.l_star))));
    r.mu_star = numerics::find_root(
        [&](double mu) { return det(family(mu).multiplier_matrix(r.l_star)) / scale; }, lo, hi, 1e-15);

    const MatrixKernelSpec kstar = family(r.mu_star);
    double norm = 0.0;
    for (int l = 0; l <= lmax; ++l) norm = std::max(norm, kstar.multiplier_matrix(l).cwiseAbs().maxCoeff());
    for (int l = 1; l <= lmax; ++l) {
        if (l == r.l_star) continue;
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kstar.multiplier_matrix(l), Eigen::EigenvaluesOnly);
        if (es.eigenvalues().cwiseAbs().minCoeff() <= 1e-10 * std::max(norm, 1.0)) {
            std::ostringstream os;
            os << "critical_parameter: multiplier matrix singular at wavenumber " << l;
            throw HypothesisViolation(os.str());
        }
    }
    const Eigen::MatrixXd mstar = kstar.multiplier_matrix(r.l_star);
    if (mstar.rows() > 1) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mstar, Eigen::EigenvaluesOnly);
        Eigen::VectorXd ev = es.eigenvalues().cwiseAbs();
        std::sort(ev.data(), ev.data() + ev.size());
        if (ev(1) <= 1e-8 * std::max(norm, 1.0))
            throw HypothesisViolation("critical_parameter: kernel at the critical wavenumber is not one-dimensional");
    }
    r.e0 = kernel_vector(mstar);
    for (int l = 0; l <= lmax; ++l) {
        const Eigen::VectorXd g = dispersion_system(kstar, l);
        r.growth_rates[l] = std::vector<double>(g.data(), g.data() + g.size());
    }
    return r;
}

StabilityReport critical_parameter(const kernels::ScalarFamily& family, double lo, double hi) {
    return critical_parameter([&](double mu) { return MatrixKernelSpec(family(mu)); }, lo, hi);
}

const char* to_string(TwoSpeciesType t) {
    switch (t) {
    case TwoSpeciesType::JointClustering: return "JC";
    case TwoSpeciesType::Segregation: return "S";
    case TwoSpeciesType::Stable: return "stable";
    }
    return "?";
}

TwoSpeciesClassification classify_two_species(const Eigen::Matrix2d& a, const Eigen::Matrix2d& b) {
    if ((a.array() <= 0.0).any()) throw InvalidArgument("classify_two_species: repulsion coefficients must be positive");
    if (!(a(0, 0) * a(1, 1) > a(0, 1) * a(1, 0)))
        throw InvalidArgument("classify_two_species: repulsion matrix violates strict ellipticity");
    const Eigen::Matrix2d m = a - pi * b;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(0.5 * (m + m.transpose()));
    TwoSpeciesClassification out;
    if (es.eigenvalues()(0) > 0.0) {
        out.type = TwoSpeciesType::Stable;
        out.e0 = kernel_vector(m, false);
        return out;
    }
    out.e0 = kernel_vector(m);
    const double prod = out.e0(0) * out.e0(1);
    if (prod > 0.0) out.type = TwoSpeciesType::JointClustering;
    else if (prod < 0.0) out.type = TwoSpeciesType::Segregation;
    else out.type = (a(0, 1) - pi * b(0, 1) < 0.0) ? TwoSpeciesType::JointClustering : TwoSpeciesType::Segregation;
    return out;
}

namespace {

double richardson_derivative(const std::function<double(double)>& f, double x) {
    constexpr double h = 1e-6;
    const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
    const double d2 = (f(x + 0.5 * h) - f(x - 0.5 * h)) / h;
    return (4.0 * d2 - d1) / 3.0;
}

int critical_wavenumber(const MatrixKernelSpec& k) {
    int best = 1;
    double smallest = std::numeric_limits<double>::infinity();
    for (int l = 1; l <= k.lmax(); ++l) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k.multiplier_matrix(l), Eigen::EigenvaluesOnly);
        const double s = es.eigenvalues().cwiseAbs().minCoeff();
        if (s < smallest) {
            smallest = s;
            best = l;
        }
    }
    return best;
}

} // namespace

double crossing_rate(const kernels::MatrixFamily& family, double mu_star) {
    const MatrixKernelSpec kstar = family(mu_star);
    const int l = critical_wavenumber(kstar);
    const int p = kstar.size();
    if (p == 1) return richardson_derivative([&](double mu) { return family(mu).multiplier_matrix(l)(0, 0); }, mu_star);

    const Eigen::VectorXd e0 = kernel_vector(kstar.multiplier_matrix(l));
    Eigen::Index lead = 0;
    e0.cwiseAbs().maxCoeff(&lead);
    std::vector<int> rest;
    for (int i = 0; i < p; ++i)
        if (i != lead) rest.push_back(i);

    auto schur_ratio = [&](double mu, bool check) {
        const Eigen::MatrixXd m = family(mu).multiplier_matrix(l);
        const double l11 = m(lead, lead);
        Eigen::MatrixXd lhh(p - 1, p - 1);
        Eigen::VectorXd l1h(p - 1), lh1(p - 1);
        for (int i = 0; i < p - 1; ++i) {
            l1h(i) = m(lead, rest[i]);
            lh1(i) = m(rest[i], lead);
            for (int j = 0; j < p - 1; ++j) lhh(i, j) = m(rest[i], rest[j]);
        }
        if (check) {
            const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
            if (std::abs(l11) <= 1e-12 * scale)
                throw HypothesisViolation("crossing_rate: leading diagonal block is singular at the critical parameter");
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lhh, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().cwiseAbs().minCoeff() <= 1e-12 * scale)
                throw HypothesisViolation("crossing_rate: complementary block is singular at the critical parameter");
        }
        return l1h.dot(lhh.fullPivLu().solve(lh1)) / l11;
    };
    schur_ratio(mu_star, true);
    return richardson_derivative([&](double mu) { return schur_ratio(mu, false); }, mu_star);
}

double crossing_rate(const kernels::ScalarFamily& family, double mu_star) {
    return crossing_rate([&](double mu) { return MatrixKernelSpec(family(mu)); }, mu_star);
}

} // namespace revswitch::stability
