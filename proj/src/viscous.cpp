#include "revswitch/viscous.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <fftw3.h>

#include "revswitch/error.hpp"
#include "revswitch/lambert.hpp"
#include "revswitch/numerics.hpp"
#include "revswitch/rank_one.hpp"

namespace revswitch::viscous {

namespace {

std::vector<double> centered_nodes(int n) {
    std::vector<double> x(n);
    for (int j = 0; j < n; ++j) x[j] = -pi + two_pi * j / n;
    return x;
}

void check_grid(int n, int min_n, const char* who) {
    if (n < min_n || n % 2 != 0) {
        std::ostringstream os;
        os << who << ": grid size must be even and >= " << min_n;
        throw InvalidArgument(os.str());
    }
}

// Inviscid profile with cosine moment rho pi: 1 + rho cos for rho < 1, a
// rank-one bubble otherwise. Returns (B, m) of v = B cos + m.
std::pair<double, double> inviscid_coefficients(double rho) {
    auto moment = [](double L) {
        const auto g = rank_one::guess_from_L(L);
        return (2.0 * g.A0 * std::sin(L) + g.A1 * (L + std::sin(L) * std::cos(L))) / pi;
    };
    const double top = pi - 1e-6;
    if (rho <= moment(top)) return {std::min(rho, 1.0), 1.0};
    const double L = numerics::find_root([&](double L) { return moment(L) - rho; }, 1e-3, top, 1e-13);
    const auto g = rank_one::guess_from_L(L);
    return {g.A1, g.A0};
}

// Adds the first-order shift from eps log(1 + rho cos) on the linear branch.
std::pair<double, double> corrected_coefficients(double rho, double eps) {
    auto [B, m] = inviscid_coefficients(rho);
    if (rho < 1.0) {
        const double s = std::sqrt(1.0 - rho * rho);
        B += eps * 2.0 * (1.0 - s) / rho;
        m += eps * std::log(0.5 * (1.0 + s));
    }
    return {B, m};
}

double mu_star_of(const kernels::KernelFamily& family) {
    const double slope = kernels::multiplier(family.slope, 1);
    if (slope == 0.0) throw InvalidArgument("viscous: family slope has no wavenumber-1 component");
    return -kernels::multiplier(family.base, 1) / slope;
}

} // namespace

double ViscousProfile::mass() const {
    double s = 0.0;
    for (double v : u) s += v;
    return s * two_pi / static_cast<double>(u.size());
}

double ViscousProfile::cosine_moment() const {
    double s = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) s += std::cos(x[j]) * u[j];
    return s * two_pi / static_cast<double>(u.size());
}

double ViscousProfile::max() const { return numerics::sup_norm(u); }

kernels::KernelFamily cosine_model() {
    return {kernels::KernelSpec::cosine({0.0, -1.0 / pi}, 1.0), kernels::KernelSpec::cosine({0.0, -1.0})};
}

ViscousProfile closed_form_profile(double rho, double eps, int n) {
    if (!(rho > 0.0 && rho < 2.0)) throw DomainError("closed_form_profile: rho must lie in (0, 2)");
    if (!(eps > 0.0)) throw DomainError("closed_form_profile: eps must be positive");
    check_grid(n, 16, "closed_form_profile");
    const double h = two_pi / n;
    ViscousProfile p;
    p.x = centered_nodes(n);
    p.u.assign(n, 0.0);
    p.eps = eps;
    p.rho = rho;

    auto [B, m] = corrected_coefficients(rho, eps);
    const double log_eps = std::log(eps);
    std::vector<double> du(n);
    auto evaluate = [&](double B, double m, Eigen::Vector2d& F) {
        F.setZero();
        for (int j = 0; j < n; ++j) {
            const double u = eps * lambert_w0_exp((B * std::cos(p.x[j]) + m) / eps - log_eps);
            p.u[j] = u;
            du[j] = u / (eps + u);
            F(0) += h * u;
            F(1) += h * std::cos(p.x[j]) * u;
        }
        F(0) -= two_pi;
        F(1) -= rho * pi;
    };

    Eigen::Vector2d F;
    evaluate(B, m, F);
    std::vector<double> history{F.lpNorm<Eigen::Infinity>()};
    int it = 0;
    for (; it < 100 && history.back() > 1e-13; ++it) {
        Eigen::Matrix2d J = Eigen::Matrix2d::Zero();
        for (int j = 0; j < n; ++j) {
            const double c = std::cos(p.x[j]);
            J(0, 0) += h * c * du[j];
            J(0, 1) += h * du[j];
            J(1, 0) += h * c * c * du[j];
            J(1, 1) += h * c * du[j];
        }
        const Eigen::Vector2d step = J.fullPivLu().solve(F);
        double lambda = 1.0;
        Eigen::Vector2d Ft;
        for (; lambda > 1e-6; lambda *= 0.5) {
            evaluate(B - lambda * step(0), m - lambda * step(1), Ft);
            if (Ft.allFinite() && Ft.lpNorm<Eigen::Infinity>() < history.back()) break;
        }
        if (lambda <= 1e-6) break;
        B -= lambda * step(0);
        m -= lambda * step(1);
        F = Ft;
        history.push_back(F.lpNorm<Eigen::Infinity>());
    }
    if (history.back() > 1e-11) {
        evaluate(B, m, F);
        std::ostringstream os;
        os << "closed_form_profile: self-consistency failed at rho = " << rho << ", eps = " << eps
           << " (last B = " << B << ", m = " << m << ")";
        throw ConvergenceError(os.str(), history);
    }
    evaluate(B, m, F);
    p.A = p.cosine_moment();
    p.m = m;
    p.mu = B / p.A - 1.0 / pi;
    p.iterations = it;
    p.residual = history.back();
    return p;
}

double mu1(double rho, Endpoints endpoints) {
    const bool closed = endpoints == Endpoints::Allow;
    if (std::isnan(rho) || rho < 0.0 || rho > 1.0 || (!closed && (rho == 0.0 || rho == 1.0)))
        throw DomainError("mu1: rho outside (0, 1)");
    return 2.0 / (pi * (1.0 + std::sqrt((1.0 - rho) * (1.0 + rho))));
}

AdjointPairings adjoint_pairings(double rho) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("adjoint_pairings: rho outside (0, 1)");
    const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
    AdjointPairings r;
    r.pair_mu = -pi * pi * rho;
    r.pair_eps = two_pi * rho / (1.0 + s); // = (2 pi / rho)(1 - s)
    r.e0_star = [rho](double x) { return -std::log1p(rho * std::cos(x)) / rho; };

    // Trapezoid error decays like t^n with t = rho / (1 + s).
    const double t = rho / (1.0 + s);
    const double need = std::ceil(1.5 * std::log(1e-15) / std::log(t));
    const int n = static_cast<int>(std::clamp(need, 256.0, 1048576.0));
    const double h = two_pi / n;
    double pm = 0.0, pe = 0.0;
    for (int j = 0; j < n; ++j) {
        const double x = h * j;
        const double e = r.e0_star(x);
        pe += e * (-rho * std::cos(x));
        pm += e * (pi * rho * std::cos(x) + rho * rho * pi * std::cos(2.0 * x));
    }
    r.pair_mu_quadrature = h * pm;
    r.pair_eps_quadrature = h * pe;
    if (std::abs(r.pair_mu_quadrature - r.pair_mu) > 1e-8 || std::abs(r.pair_eps_quadrature - r.pair_eps) > 1e-8) {
        std::ostringstream os;
        os << "adjoint_pairings: quadrature disagrees with closed form at rho = " << rho;
        throw AccuracyError(os.str());
    }
    return r;
}

ViscousProfile steady_collocation(const kernels::KernelFamily& family, double eps, double rho,
                                  const CollocationOptions& options, const ViscousProfile* guess) {
    if (!(eps > 0.0)) throw DomainError("steady_collocation: eps must be positive");
    if (!(rho > 0.0 && rho < 2.0)) throw DomainError("steady_collocation: rho must lie in (0, 2)");
    const int n = options.n;
    check_grid(n, 16, "steady_collocation");
    const numerics::PeriodicGrid grid(n);
    const int H = grid.half();
    const double h = grid.spacing();
    const int N = H + 3; // w_0..w_H, m, mu

    // Folded smooth kernels: K_ik = (h mult_k / 2) [W(x_i - x_k) + W(x_i + x_k)].
    auto fold = [&](const kernels::KernelSpec& k) {
        Eigen::MatrixXd K = Eigen::MatrixXd::Zero(H + 1, H + 1);
        if (!k.has_smooth_part()) return K;
        std::vector<double> table(n);
        for (int j = 0; j < n; ++j) table[j] = kernels::evaluate(k, grid.node(j), kernels::Part::SmoothOnly);
        for (int i = 0; i <= H; ++i)
            for (int q = 0; q <= H; ++q)
                K(i, q) = 0.5 * h * grid.fold_multiplicity(q) * (table[(i - q + n) % n] + table[(i + q) % n]);
        return K;
    };
    const Eigen::MatrixXd Kb = fold(family.base), Ks = fold(family.slope);
    const double db = family.base.dirac_weight(), ds = family.slope.dirac_weight();
    Eigen::VectorXd c(H + 1), cc(H + 1);
    for (int q = 0; q <= H; ++q) {
        c(q) = h * grid.fold_multiplicity(q);
        cc(q) = c(q) * std::cos(grid.node(q));
    }

    // Initial state.
    Eigen::VectorXd z(N);
    {
        ViscousProfile start;
        if (guess) {
            if (static_cast<int>(guess->u.size()) != n) throw InvalidArgument("steady_collocation: guess grid mismatch");
            start = *guess;
        } else {
            // Lambert profile of the corrected inviscid coefficients, not
            // self-consistent; mu mapped to the family through the
            // wavenumber-1 multiplier.
            const auto [B, m] = corrected_coefficients(rho, eps);
            start.u.resize(n);
            const auto x = centered_nodes(n);
            for (int j = 0; j < n; ++j)
                start.u[j] = eps * lambert_w0_exp((B * std::cos(x[j]) + m) / eps - std::log(eps));
            const double target = -pi * (B / (rho * pi) - 1.0 / pi);
            start.mu = (target - kernels::multiplier(family.base, 1)) / kernels::multiplier(family.slope, 1);
        }
        for (int q = 0; q <= H; ++q) z(q) = std::log(std::max(start.u[(H + q) % n], 1e-300));
        z(H + 2) = start.mu;
        // m as the mean of eps w + V * u over the half grid.
        const Eigen::VectorXd e = z.head(H + 1).array().exp();
        const Eigen::VectorXd phi =
            eps * z.head(H + 1) + ((db + start.mu * ds) * e.array()).matrix() + (Kb + start.mu * Ks) * e;
        z(H + 1) = phi.mean();
    }

    auto residual = [&](const Eigen::VectorXd& z) {
        const double mu = z(H + 2);
        const Eigen::VectorXd e = z.head(H + 1).array().exp();
        Eigen::VectorXd F(N);
        F.head(H + 1) = eps * z.head(H + 1) + ((db + mu * ds) * e.array()).matrix() + (Kb + mu * Ks) * e;
        F.head(H + 1).array() -= z(H + 1);
        F(H + 1) = c.dot(e) - two_pi;
        F(H + 2) = cc.dot(e) - rho * pi;
        return F;
    };
    auto jacobian = [&](const Eigen::VectorXd& z) {
        const double mu = z(H + 2);
        const Eigen::VectorXd e = z.head(H + 1).array().exp();
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(N, N);
        J.topLeftCorner(H + 1, H + 1) = (Kb + mu * Ks) * e.asDiagonal();
        for (int i = 0; i <= H; ++i) J(i, i) += eps + (db + mu * ds) * e(i);
        J.block(0, H + 1, H + 1, 1).setConstant(-1.0);
        J.block(0, H + 2, H + 1, 1) = ds * e + Ks * e;
        J.block(H + 1, 0, 1, H + 1) = (c.array() * e.array()).matrix().transpose();
        J.block(H + 2, 0, 1, H + 1) = (cc.array() * e.array()).matrix().transpose();
        return J;
    };

    Eigen::VectorXd F = residual(z);
    std::vector<double> history{F.lpNorm<Eigen::Infinity>()};
    int it = 0;
    for (; it < options.max_iterations && history.back() > options.tol; ++it) {
        const Eigen::VectorXd step = jacobian(z).partialPivLu().solve(F);
        if (!step.allFinite()) break;
        double lambda = 1.0;
        Eigen::VectorXd zt, Ft;
        for (; lambda > 1e-8; lambda *= 0.5) {
            zt = z - lambda * step;
            Ft = residual(zt);
            if (Ft.allFinite() && Ft.lpNorm<Eigen::Infinity>() < (1.0 - 1e-4 * lambda) * history.back()) break;
        }
        if (lambda <= 1e-8) break;
        z = zt;
        F = Ft;
        history.push_back(F.lpNorm<Eigen::Infinity>());
    }
    if (!(history.back() <= options.tol)) {
        std::ostringstream os;
        os << "steady_collocation: Newton stalled at residual " << history.back() << " (rho = " << rho
           << ", eps = " << eps << ", mu = " << z(H + 2) << ")";
        throw ConvergenceError(os.str(), history);
    }

    ViscousProfile p;
    p.x = centered_nodes(n);
    p.u.assign(n, 0.0);
    for (int q = 0; q <= H; ++q) {
        const double u = std::exp(z(q));
        p.u[(H + q) % n] = u;
        p.u[(H - q + n) % n] = u;
    }
    p.m = z(H + 1);
    p.mu = z(H + 2);
    p.eps = eps;
    p.rho = rho;
    p.A = p.cosine_moment();
    p.iterations = it;
    p.residual = history.back();
    return p;
}

std::vector<BranchPoint> viscous_branch(const kernels::KernelFamily& family, double eps,
                                        const std::vector<double>& rho, const CollocationOptions& options) {
    const double mu_star = mu_star_of(family);
    std::vector<BranchPoint> out;
    std::optional<ViscousProfile> last;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (i > 0 && !(rho[i] > rho[i - 1])) throw InvalidArgument("viscous_branch: rho values must increase");
        ViscousProfile p;
        try {
            p = steady_collocation(family, eps, rho[i], options, last ? &*last : nullptr);
        } catch (const ConvergenceError&) {
            if (!last) throw;
            p = steady_collocation(family, eps, rho[i], options);
        }
        BranchPoint b;
        b.rho = rho[i];
        b.mu = p.mu;
        b.mu_over_eps = (p.mu - mu_star) / eps;
        b.mu1_prediction = rho[i] < 1.0 ? mu1(rho[i]) : std::numeric_limits<double>::quiet_NaN();
        out.push_back(b);
        last = std::move(p);
    }
    return out;
}

namespace {

// Owns FFTW buffers and plans for one grid size.
class Spectral {
public:
    explicit Spectral(int n) : n_(n) {
        real_ = fftw_alloc_real(n);
        spec_ = fftw_alloc_complex(n / 2 + 1);
        forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    }
    ~Spectral() {
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(real_);
        fftw_free(spec_);
    }
    Spectral(const Spectral&) = delete;
    Spectral& operator=(const Spectral&) = delete;

    using Coefficients = std::vector<std::complex<double>>;

    Coefficients forward(const std::vector<double>& v) {
        std::copy(v.begin(), v.end(), real_);
        fftw_execute(forward_);
        Coefficients c(n_ / 2 + 1);
        for (int l = 0; l <= n_ / 2; ++l) c[l] = std::complex<double>(spec_[l][0], spec_[l][1]) / double(n_);
        return c;
    }
    std::vector<double> backward(const Coefficients& c) {
        for (int l = 0; l <= n_ / 2; ++l) {
            spec_[l][0] = c[l].real();
            spec_[l][1] = c[l].imag();
        }
        // Nyquist mode of a derivative is not representable; drop its imaginary part.
        spec_[n_ / 2][1] = 0.0;
        fftw_execute(backward_);
        return std::vector<double>(real_, real_ + n_);
    }

private:
    int n_;
    double* real_;
    fftw_complex* spec_;
    fftw_plan forward_, backward_;
};

} // namespace

Trajectory time_step(const std::vector<double>& u0, const kernels::KernelSpec& k, double eps, double dt, double T,
                     const TimeStepOptions& options) {
    const int n = static_cast<int>(u0.size());
    check_grid(n, 16, "time_step");
    if (!(eps >= 0.0)) throw DomainError("time_step: eps must be non-negative");
    if (!(dt > 0.0) || !(T >= 0.0)) throw InvalidArgument("time_step: dt must be positive and T non-negative");
    double mean = 0.0;
    for (double v : u0) {
        if (!(v >= 0.0)) throw DomainError("time_step: initial density must be non-negative");
        mean += v / n;
    }
    if (std::abs(mean - 1.0) > 1e-10) throw DomainError("time_step: initial density must have mean 1");

    const int H = n / 2;
    const double h = two_pi / n;
    const kernels::KernelSpec kk = k.with_lmax(H);
    std::vector<double> M(H + 1);
    for (int l = 0; l <= H; ++l) M[l] = kernels::multiplier(kk, l);
    const double d = std::max(0.0, k.dirac_weight());

    Spectral fft(n);
    Trajectory tr;
    tr.cfl_dt = std::numeric_limits<double>::infinity();
    std::vector<double> u = u0;
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.profiles.push_back(u);
        double s = 0.0;
        for (double v : u) s += v;
        tr.mass.push_back(h * s);
    };
    record(0.0);

    const int steps = static_cast<int>(std::ceil(T / dt - 1e-9));
    const std::complex<double> I(0.0, 1.0);
    for (int step = 0; step < steps; ++step) {
        auto uh = fft.forward(u);
        // Velocity (V * u)_x.
        Spectral::Coefficients gh(H + 1);
        for (int l = 0; l <= H; ++l) gh[l] = I * double(l) * M[l] * uh[l];
        const std::vector<double> g = fft.backward(gh);
        const double vmax = numerics::sup_norm(g);
        const double bound = vmax > 0.0 ? h / vmax : std::numeric_limits<double>::infinity();
        tr.cfl_dt = std::min(tr.cfl_dt, bound);
        if (dt > options.cfl_safety * bound) {
            std::ostringstream os;
            os << "time_step: dt = " << dt << " violates the transport bound at t = " << step * dt;
            throw StepRejected(os.str(), options.cfl_safety * bound);
        }
        std::vector<double> flux(n);
        double umax = 0.0;
        for (int j = 0; j < n; ++j) {
            flux[j] = u[j] * g[j];
            umax = std::max(umax, u[j]);
        }
        const auto fh = fft.forward(flux);
        const double C = d * umax;
        for (int l = 0; l <= H; ++l) {
            const double l2 = double(l) * l;
            uh[l] = (uh[l] * (1.0 + dt * C * l2) + dt * I * double(l) * fh[l]) / (1.0 + dt * (eps + C) * l2);
        }
        u = fft.backward(uh);
        ++tr.steps;
        const bool last = step + 1 == steps;
        if (last || (options.record_every > 0 && (step + 1) % options.record_every == 0)) record((step + 1) * dt);
        for (double v : u)
            if (!std::isfinite(v)) throw IntegrationError("time_step: non-finite density", (step + 1) * dt, u);
    }
    return tr;
}

} // namespace revswitch::viscous
