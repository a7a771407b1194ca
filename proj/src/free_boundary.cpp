#include "revswitch/free_boundary.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "revswitch/error.hpp"
#include "revswitch/rank_one.hpp"

namespace revswitch::free_boundary {

using kernels::KernelFamily;
using kernels::KernelSpec;
using numerics::ChebyshevGrid;

namespace {

KernelSpec smooth_part(const KernelSpec& k) { return KernelSpec(0.0, k.terms(), k.lmax()); }

bool is_kinked(const kernels::Term& t) {
    if (std::holds_alternative<kernels::PeriodizedExponential>(t)) return true;
    if (const auto* b = std::get_if<kernels::BesselSmoothed>(&t)) return b->beta == 1.0;
    return false;
}

// Second-kind form d(mu) v + W(mu)^L * v = rho of the equilibrium equation.
// For a pure (1 - eta^2 d_xx)^(-1) repulsion with cosine attraction the
// equation is preconditioned by (1 - eta^2 d_xx) and the boundary condition
// becomes C^1 matching of G * u against the decaying vacuum solution.
struct Formulation {
    double d_base = 0.0, d_slope = 0.0;
    KernelSpec w_base, w_slope;
    bool matching = false;
    double eta = 0.0;
    KernelSpec att_base, att_slope;
    double mu_star = 0.0;
    double slope_multiplier = 0.0;

    double d(double mu) const { return d_base + mu * d_slope; }
};

KernelSpec precondition(const KernelSpec& cosines, double eta) {
    std::vector<double> c;
    for (const auto& t : cosines.terms()) {
        const auto& cs = std::get<kernels::CosineSeries>(t);
        c.resize(std::max(c.size(), cs.coeffs.size()), 0.0);
        for (std::size_t l = 0; l < cs.coeffs.size(); ++l) c[l] += cs.coeffs[l] * (1.0 + eta * eta * l * l);
    }
    return KernelSpec::cosine(c, 0.0, cosines.lmax());
}

bool only_cosines(const KernelSpec& k) {
    return std::all_of(k.terms().begin(), k.terms().end(),
                       [](const kernels::Term& t) { return std::holds_alternative<kernels::CosineSeries>(t); });
}

Formulation formulate(const KernelFamily& f) {
    Formulation F;
    const double mb = kernels::multiplier(f.base, 1), ms = kernels::multiplier(f.slope, 1);
    if (ms == 0.0) throw InvalidArgument("free_boundary: family slope does not move the ell = 1 multiplier");
    F.mu_star = -mb / ms;
    F.slope_multiplier = ms;

    if (f.base.dirac_weight() + F.mu_star * f.slope.dirac_weight() > 0.0) {
        for (const auto* k : {&f.base, &f.slope})
            for (const auto& t : k->terms())
                if (is_kinked(t))
                    throw UnsupportedError("free_boundary: kinked smooth terms next to a Dirac part are not supported");
        F.d_base = f.base.dirac_weight();
        F.d_slope = f.slope.dirac_weight();
        F.w_base = smooth_part(f.base);
        F.w_slope = smooth_part(f.slope);
        return F;
    }

    // Pure smoothed repulsion.
    std::optional<kernels::Term> rep;
    std::vector<kernels::Term> att;
    for (const auto& t : f.base.terms()) {
        if (is_kinked(t)) {
            if (rep) throw UnsupportedError("free_boundary: more than one smoothed repulsion term");
            rep = t;
        } else if (std::holds_alternative<kernels::CosineSeries>(t)) {
            att.push_back(t);
        } else {
            throw UnsupportedError("free_boundary: without a Dirac part only cosine attraction is supported");
        }
    }
    if (!rep) throw UnsupportedError("free_boundary: kernel has neither a Dirac part nor a beta = 1 repulsion");
    if (f.slope.dirac_weight() != 0.0 || !only_cosines(f.slope))
        throw UnsupportedError("free_boundary: the mu-slope must be a cosine series");
    double amplitude = 0.0;
    if (const auto* e = std::get_if<kernels::PeriodizedExponential>(&*rep)) {
        F.eta = e->eta;
        amplitude = e->amplitude;
    } else {
        const auto& b = std::get<kernels::BesselSmoothed>(*rep);
        F.eta = b.eta;
        amplitude = b.amplitude;
    }
    if (!(amplitude > 0.0)) throw UnsupportedError("free_boundary: repulsion amplitude must be positive");
    F.matching = true;
    F.att_base = KernelSpec(0.0, att, f.base.lmax());
    F.att_slope = smooth_part(f.slope);
    F.d_base = amplitude;
    F.w_base = precondition(F.att_base, F.eta);
    F.w_slope = precondition(F.att_slope, F.eta);
    return F;
}

double rescaled(const KernelSpec& k, double L, double s) { return L / pi * kernels::evaluate(k, L * s / pi); }

double rescaled_dL(const KernelSpec& k, double L, double s) {
    const double x = L * s / pi;
    return kernels::evaluate(k, x) / pi + L * s / (pi * pi) * kernels::derivative(k, x);
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& k, double L, const ChebyshevGrid& g, bool dL) {
    const int n = g.size();
    const auto& z = g.nodes();
    const auto& w = g.weights();
    Eigen::MatrixXd m(n, n);
    if (k.terms().empty()) return Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double a = z[i] - z[j], b = z[i] + z[j];
            m(i, j) = w[j] * (dL ? rescaled_dL(k, L, a) + rescaled_dL(k, L, b) : rescaled(k, L, a) + rescaled(k, L, b));
        }
    return m;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Matching row: -(att' * u)(L) - tau (rho - (att * u)(L)), tau = tanh((L - pi)/eta)/eta.
struct MatchingRow {
    Eigen::VectorXd dv;
    double value = 0.0;
    double d_rho = 0.0;
};

MatchingRow matching_row(const Formulation& F, const ChebyshevGrid& g, const std::vector<double>& v, double rho,
                         double mu, double L) {
    const KernelSpec att = F.att_base + F.att_slope.scaled(mu);
    const int n = g.size();
    const auto& z = g.nodes();
    const auto& w = g.weights();
    const double tau = std::tanh((L - pi) / F.eta) / F.eta;
    MatchingRow r;
    r.dv.resize(n);
    for (int j = 0; j < n; ++j) {
        const double a0 = w[j] * (rescaled(att, L, pi - z[j]) + rescaled(att, L, pi + z[j]));
        const double a1 = w[j] * L / pi *
                          (kernels::derivative(att, L * (pi - z[j]) / pi) + kernels::derivative(att, L * (pi + z[j]) / pi));
        r.dv(j) = -a1 + tau * a0;
    }
    r.value = r.dv.dot(as_vector(v)) - tau * rho;
    r.d_rho = -tau;
    return r;
}

struct Problem {
    KernelFamily family;
    Formulation F;
    std::shared_ptr<const ChebyshevGrid> grid;
};

Residual residual_of(const Problem& P, const std::vector<double>& v, double rho, double mu, double L) {
    const auto& g = *P.grid;
    const KernelSpec W = P.F.w_base + P.F.w_slope.scaled(mu);
    const Eigen::VectorXd Kv = kernel_matrix(W, L, g, false) * as_vector(v);
    Residual r;
    r.F_v.resize(v.size());
    const double d = P.F.d(mu);
    for (std::size_t i = 0; i < v.size(); ++i) r.F_v[i] = d * v[i] + Kv(static_cast<Eigen::Index>(i)) - rho;
    r.F_bc = P.F.matching ? matching_row(P.F, g, v, rho, mu, L).value : v.back();
    r.F_m = L / (pi * pi) * g.integrate(v) - 1.0;
    return r;
}

Eigen::MatrixXd jacobian_of(const Problem& P, const std::vector<double>& v, double rho, double mu, double L) {
    const auto& g = *P.grid;
    const int n = g.size();
    const auto vv = as_vector(v);
    const Eigen::MatrixXd Kb = kernel_matrix(P.F.w_base, L, g, false);
    const Eigen::MatrixXd Ks = kernel_matrix(P.F.w_slope, L, g, false);
    const Eigen::MatrixXd dK = kernel_matrix(P.F.w_base + P.F.w_slope.scaled(mu), L, g, true);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n + 2, n + 3);
    J.topLeftCorner(n, n) = Kb + mu * Ks;
    J.topLeftCorner(n, n).diagonal().array() += P.F.d(mu);
    J.block(0, n, n, 1).setConstant(-1.0);
    J.block(0, n + 1, n, 1) = Ks * vv + P.F.d_slope * vv;
    J.block(0, n + 2, n, 1) = dK * vv;
    if (P.F.matching) {
        const MatchingRow row = matching_row(P.F, g, v, rho, mu, L);
        J.block(n, 0, 1, n) = row.dv.transpose();
        J(n, n) = row.d_rho;
        const double hm = 1e-6 * std::max(1.0, std::abs(mu)), hl = 1e-6;
        J(n, n + 1) = (matching_row(P.F, g, v, rho, mu + hm, L).value - matching_row(P.F, g, v, rho, mu - hm, L).value) /
                      (2 * hm);
        J(n, n + 2) = (matching_row(P.F, g, v, rho, mu, L + hl).value - matching_row(P.F, g, v, rho, mu, L - hl).value) /
                      (2 * hl);
    } else {
        J(n, n - 1) = 1.0;
    }
    const auto& w = g.weights();
    for (int j = 0; j < n; ++j) J(n + 1, j) = L / (pi * pi) * w[j];
    J(n + 1, n + 2) = g.integrate(v) / (pi * pi);
    return J;
}

void finish(ExtendedState& s) {
    const Projections proj(s.grid);
    s.A0 = proj.p0(s.v);
    s.A1 = proj.p1(s.v);
}

Problem make_problem(const KernelFamily& family, int grid_n) {
    if (grid_n < 8) throw InvalidArgument("free_boundary: grid too small");
    return {family, formulate(family), std::make_shared<const ChebyshevGrid>(grid_n, 0.0, pi)};
}

// Constant rho that best balances the v-equation.
double balance_rho(const Problem& P, const std::vector<double>& v, double mu, double L) {
    const Residual r = residual_of(P, v, 0.0, mu, L);
    double s = 0.0;
    for (double x : r.F_v) s += x;
    return s / static_cast<double>(r.F_v.size());
}

ExtendedState rank_one_guess(const Problem& P, double L, double mu) {
    ExtendedState s;
    s.grid = P.grid;
    const auto g = rank_one::guess_from_L(L);
    for (double z : P.grid->nodes()) s.v.push_back(g.A0 + g.A1 * std::cos(L * z / pi));
    s.L = L;
    s.mu = mu;
    s.rho = balance_rho(P, s.v, mu, L);
    finish(s);
    return s;
}

struct Target {
    Parameter parameter;
    double value;
};

bool newton_solve(const Problem& P, ExtendedState& s, Target target, const ContinuationOptions& o, std::string& why) {
    const int n = P.grid->size();
    const auto& w = P.grid->weights();
    auto full_residual = [&](const ExtendedState& st) {
        const Residual r = residual_of(P, st.v, st.rho, st.mu, st.L);
        Eigen::VectorXd F(n + 3);
        for (int i = 0; i < n; ++i) F(i) = r.F_v[i];
        F(n) = r.F_bc;
        F(n + 1) = r.F_m;
        F(n + 2) = target.parameter == Parameter::A0 ? P.grid->integrate(st.v) / pi - target.value : st.mu - target.value;
        return F;
    };
    Eigen::VectorXd F = full_residual(s);
    double norm = F.lpNorm<Eigen::Infinity>();
    for (int it = 0; it < o.max_iterations; ++it) {
        if (norm <= o.tol) {
            s.residual = norm;
            s.iterations = it;
            finish(s);
            return true;
        }
        Eigen::MatrixXd J(n + 3, n + 3);
        J.topRows(n + 2) = jacobian_of(P, s.v, s.rho, s.mu, s.L);
        J.row(n + 2).setZero();
        if (target.parameter == Parameter::A0)
            for (int j = 0; j < n; ++j) J(n + 2, j) = w[j] / pi;
        else
            J(n + 2, n + 1) = 1.0;
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(J);
        const Eigen::VectorXd dx = lu.solve(F);
        if (!dx.allFinite()) {
            why = "singular Newton matrix";
            return false;
        }
        double lambda = 1.0;
        for (;;) {
            ExtendedState trial = s;
            for (int j = 0; j < n; ++j) trial.v[j] -= lambda * dx(j);
            trial.rho -= lambda * dx(n);
            trial.mu -= lambda * dx(n + 1);
            trial.L -= lambda * dx(n + 2);
            if (trial.L > 0.0 && trial.L <= pi + 1e-12) {
                const Eigen::VectorXd Ft = full_residual(trial);
                const double nt = Ft.lpNorm<Eigen::Infinity>();
                if (nt < norm || lambda < 1.0 / 64) {
                    s = std::move(trial);
                    F = Ft;
                    norm = nt;
                    break;
                }
            }
            lambda *= 0.5;
            if (lambda < 1.0 / 1024) {
                why = "line search failed";
                return false;
            }
        }
    }
    std::ostringstream os;
    os << "no convergence, residual " << norm;
    why = os.str();
    return false;
}

// Walk out along the branch in A0 until mu passes the target, then
// interpolate between the bracketing states.
ExtendedState seed_for_mu(const Problem& P, double target, double scale, const ContinuationOptions& o) {
    const double want = (target - P.F.mu_star) * scale;
    std::optional<ExtendedState> prev;
    for (double nu = 1e-3; nu < 1.0; nu *= 1.2) {
        const double L = pi / (1.0 + nu);
        ExtendedState s;
        if (prev) {
            s = *prev;
            s.L = L;
        } else {
            const auto g = rank_one::guess_from_L(L);
            const double mu_r = g.A1 / (2.0 * g.A0 * std::sin(L) + g.A1 * (L + std::sin(L) * std::cos(L))) - 1.0 / pi;
            s = rank_one_guess(P, L, P.F.mu_star + mu_r / scale);
        }
        std::string why;
        if (!newton_solve(P, s, {Parameter::A0, 1.0 + nu}, o, why)) break;
        const double have = (s.mu - P.F.mu_star) * scale;
        if (have >= want) {
            if (!prev) return s;
            const double h0 = std::cbrt((prev->mu - P.F.mu_star) * scale), h1 = std::cbrt(have);
            const double t = (std::cbrt(want) - h0) / (h1 - h0);
            ExtendedState g = *prev;
            for (std::size_t j = 0; j < g.v.size(); ++j) g.v[j] += t * (s.v[j] - prev->v[j]);
            g.rho += t * (s.rho - prev->rho);
            g.L += t * (s.L - prev->L);
            g.mu = target;
            return g;
        }
        prev = s;
    }
    // Fall back to the rank-one bubble at the equivalent parameter.
    const auto b = rank_one::solve_bubble(want);
    return rank_one_guess(P, b.L, target);
}

} // namespace

Projections::Projections(std::shared_ptr<const ChebyshevGrid> grid) : grid_(std::move(grid)) {}

double Projections::p0(std::span<const double> v) const { return grid_->integrate(v) / pi; }

double Projections::p1(std::span<const double> v) const {
    std::vector<double> vc(v.begin(), v.end());
    for (std::size_t i = 0; i < vc.size(); ++i) vc[i] *= std::cos(grid_->nodes()[i]);
    return 2.0 * grid_->integrate(vc) / pi;
}

std::vector<double> Projections::ph(std::span<const double> v) const {
    const double a0 = p0(v), a1 = p1(v);
    std::vector<double> out(v.begin(), v.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] -= a0 + a1 * std::cos(grid_->nodes()[i]);
    return out;
}

double ExtendedState::value(double z) const { return grid->interpolate(v, std::abs(z)); }

double ExtendedState::density(double x) const {
    const double y = std::remainder(x, two_pi);
    if (std::abs(y) >= L) return 0.0;
    return value(pi * y / L);
}

double ExtendedState::density_derivative(double x) const {
    const double y = std::remainder(x, two_pi);
    if (std::abs(y) >= L || y == 0.0) return 0.0;
    const double d = grid->derivative(v, pi * std::abs(y) / L) * pi / L;
    return y > 0 ? d : -d;
}

std::vector<double> ExtendedState::v_h() const { return Projections(grid).ph(v); }

double Residual::sup() const {
    double s = std::max(std::abs(F_bc), std::abs(F_m));
    for (double x : F_v) s = std::max(s, std::abs(x));
    return s;
}

Eigen::MatrixXd rescaled_kernel(const KernelSpec& k, double L, const ChebyshevGrid& grid) {
    if (!(L > 0.0 && L <= pi)) throw DomainError("rescaled_kernel: L outside (0, pi]");
    return kernel_matrix(smooth_part(k), L, grid, false);
}

ExtendedState base_state(const KernelFamily& family, int grid_n) {
    const Problem P = make_problem(family, grid_n);
    ExtendedState s;
    s.grid = P.grid;
    for (double z : P.grid->nodes()) s.v.push_back(1.0 + std::cos(z));
    s.mu = P.F.mu_star;
    s.L = pi;
    s.rho = balance_rho(P, s.v, s.mu, s.L);
    finish(s);
    s.residual = residual_of(P, s.v, s.rho, s.mu, s.L).sup();
    return s;
}

Residual assemble_residual(const ExtendedState& s, const KernelFamily& family) {
    const Problem P{family, formulate(family), s.grid};
    return residual_of(P, s.v, s.rho, s.mu, s.L);
}

Eigen::MatrixXd assemble_jacobian(const ExtendedState& s, const KernelFamily& family) {
    const Problem P{family, formulate(family), s.grid};
    return jacobian_of(P, s.v, s.rho, s.mu, s.L);
}

FreeBoundaryBranch newton_continue(const KernelFamily& family, Parameter parameter, const std::vector<double>& values,
                                   const ContinuationOptions& options) {
    const Problem P = make_problem(family, options.grid_n);
    FreeBoundaryBranch branch;
    branch.mu_star = P.F.mu_star;
    // Rank-one parameter scale: the ell = 1 multiplier moves by -pi per unit mu there.
    const double scale = -P.F.slope_multiplier / pi;

    // Branch coordinate in which the solution is smooth: nu = A0 - 1 or the
    // cube root of the distance to the instability.
    auto coordinate = [&](double value) {
        return parameter == Parameter::A0 ? value - 1.0 : std::cbrt(value - P.F.mu_star);
    };

    for (std::size_t i = 0; i < values.size(); ++i) {
        const double value = values[i];
        if (parameter == Parameter::A0 && !(value > 1.0))
            throw InvalidArgument("newton_continue: A0 values must exceed 1");
        if (parameter == Parameter::Mu && !((value - P.F.mu_star) * scale > 0.0))
            throw InvalidArgument("newton_continue: mu values must lie on the vacuum side of the instability");
        if (i > 0 && !(std::abs(coordinate(value)) > std::abs(coordinate(values[i - 1]))))
            throw InvalidArgument("newton_continue: values must move away from the base point");

        const auto& pts = branch.points;
        ExtendedState guess;
        if (pts.size() >= 2) {
            const auto& p1 = pts[pts.size() - 1];
            const auto& p0 = pts[pts.size() - 2];
            const double c1 = coordinate(parameter == Parameter::A0 ? p1.A0 : p1.mu);
            const double c0 = coordinate(parameter == Parameter::A0 ? p0.A0 : p0.mu);
            const double t = (coordinate(value) - c1) / (c1 - c0);
            guess = p1;
            for (std::size_t j = 0; j < guess.v.size(); ++j) guess.v[j] += t * (p1.v[j] - p0.v[j]);
            guess.rho += t * (p1.rho - p0.rho);
            guess.mu += t * (p1.mu - p0.mu);
            guess.L += t * (p1.L - p0.L);
            if (!(guess.L > 0.0 && guess.L < pi)) guess = p1;
        } else if (pts.size() == 1) {
            guess = pts.back();
        } else if (parameter == Parameter::A0) {
            const double L = pi / value;
            const auto g = rank_one::guess_from_L(L);
            const double mu_r = g.A1 / (2.0 * g.A0 * std::sin(L) + g.A1 * (L + std::sin(L) * std::cos(L))) - 1.0 / pi;
            guess = rank_one_guess(P, L, P.F.mu_star + mu_r / scale);
        } else {
            guess = seed_for_mu(P, value, scale, options);
        }

        std::string why;
        bool ok = newton_solve(P, guess, {parameter, value}, options, why);
        if (!ok && parameter == Parameter::Mu && !pts.empty()) {
            guess = seed_for_mu(P, value, scale, options);
            ok = newton_solve(P, guess, {parameter, value}, options, why);
        }
        if (!ok) {
            branch.truncated = true;
            std::ostringstream os;
            os << "newton_continue: " << why << " at parameter " << value;
            branch.diagnostic = os.str();
            break;
        }
        const int n = P.grid->size();
        const double vmin = *std::min_element(guess.v.begin(), guess.v.begin() + (n - 1));
        if (vmin < -1e-9) {
            branch.truncated = true;
            std::ostringstream os;
            os << "newton_continue: profile negative inside the support at parameter " << value;
            branch.diagnostic = os.str();
            break;
        }
        branch.points.push_back(std::move(guess));
    }
    return branch;
}

Expansion extract_expansion(const FreeBoundaryBranch& branch) {
    std::vector<const ExtendedState*> pts;
    for (const auto& p : branch.points)
        if (p.A0 > 1.0) pts.push_back(&p);
    if (pts.size() < 8) throw InvalidArgument("extract_expansion: need at least 8 branch points with A0 > 1");
    const auto& grid = pts.front()->grid;
    for (const auto* p : pts)
        if (p->grid != grid && p->grid->size() != grid->size())
            throw InvalidArgument("extract_expansion: branch points use different grids");

    std::vector<double> nu, a1, l, rho, mu;
    for (const auto* p : pts) {
        nu.push_back(p->A0 - 1.0);
        a1.push_back(p->A1 - 1.0);
        l.push_back(p->L - pi);
        mu.push_back(p->mu - branch.mu_star);
    }
    // rho at the base point, extrapolated to nu = 0.
    const double rho0 = [&] {
        const std::vector<int> pw{0, 1, 2, 3, 4};
        std::vector<double> r;
        for (const auto* p : pts) r.push_back(p->rho);
        return numerics::fit_powers(nu, r, pw)[0];
    }();
    for (const auto* p : pts) rho.push_back(p->rho - rho0);

    const std::vector<int> p4{1, 2, 3, 4}, p5{1, 2, 3, 4, 5};
    Expansion e;
    const auto fa = numerics::fit_powers(nu, a1, p4);
    const auto fl = numerics::fit_powers(nu, l, p4);
    const auto fr = numerics::fit_powers(nu, rho, p4);
    const auto fm = numerics::fit_powers(nu, mu, p5);
    e.A1_1 = fa[0];
    e.A1_2 = fa[1];
    e.L_1 = fl[0];
    e.L_2 = fl[1];
    e.rho_1 = fr[0];
    e.mu_1 = fm[0];
    e.mu_2 = fm[1];
    e.mu_3 = fm[2];
    e.z = grid->nodes();
    std::vector<std::vector<double>> vh;
    for (const auto* p : pts) vh.push_back(p->v_h());
    for (std::size_t i = 0; i < e.z.size(); ++i) {
        std::vector<double> y;
        for (const auto& h : vh) y.push_back(h[i]);
        e.v_h1.push_back(numerics::fit_powers(nu, y, p4)[0]);
    }
    return e;
}

double weak_residual(const KernelSpec& k, const std::function<double(double)>& u,
                     const std::function<double(double)>& du, double L, int n) {
    const KernelSpec w = smooth_part(k);
    const double d = k.dirac_weight();
    const auto q = numerics::gauss_legendre(64, -1.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = -pi + two_pi * i / n;
        if (!(std::abs(x) < L) || !(u(x) > 0.0)) continue;
        double conv = 0.0;
        for (const auto& [a, b] : {std::pair{-L, x}, std::pair{x, L}}) {
            if (b <= a) continue;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (std::size_t j = 0; j < q.nodes.size(); ++j) {
                const double y = mid + half * q.nodes[j];
                conv += half * q.weights[j] * kernels::derivative(w, x - y) * u(y);
            }
        }
        worst = std::max(worst, std::abs(d * du(x) + conv));
    }
    return worst;
}

double weak_residual(const ExtendedState& s, const KernelSpec& k, int n) {
    return weak_residual(
        k, [&](double x) { return s.density(x); }, [&](double x) { return s.density_derivative(x); }, s.L, n);
}

} // namespace revswitch::free_boundary
