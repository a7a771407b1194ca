#include "revswitch/particles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/numeric/odeint.hpp>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::particles {

using kernels::KernelSpec;
using kernels::MatrixKernelSpec;

namespace {

bool has_kink(const KernelSpec& k) {
    for (const auto& t : k.terms()) {
        if (std::holds_alternative<kernels::PeriodizedExponential>(t)) return true;
        if (const auto* b = std::get_if<kernels::BesselSmoothed>(&t); b && b->beta == 1.0) return true;
    }
    return false;
}

void check_kernel(const MatrixKernelSpec& k, const ParticleState& s) {
    if (k.size() < 1) throw InvalidArgument("particles: empty kernel");
    for (int p = 0; p < k.size(); ++p)
        for (int q = 0; q < k.size(); ++q)
            if (k.block(p, q).dirac_weight() != 0.0)
                throw UnsupportedError("particles: Dirac interaction cannot be simulated at particle level");
    if (s.positions.size() < 2) throw InvalidArgument("particles: need at least two particles");
    if (!s.species.empty() && s.species.size() != s.positions.size())
        throw InvalidArgument("particles: species labels do not match positions");
    for (int sp : s.species)
        if (sp < 1 || sp > k.size()) throw InvalidArgument("particles: species label outside [1, P]");
}

int species_index(const ParticleState& s, std::size_t j) { return s.species.empty() ? 0 : s.species[j] - 1; }

double circle_distance(double d) {
    double y = std::fmod(std::abs(d), two_pi);
    return std::min(y, two_pi - y);
}

void check_coincidence(const ParticleState& s, const MatrixKernelSpec& k) {
    const std::size_t n = s.positions.size();
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = j + 1; m < n; ++m) {
            if (circle_distance(s.positions[j] - s.positions[m]) > 1e-14) continue;
            if (has_kink(k.block(species_index(s, j), species_index(s, m)))) {
                std::ostringstream os;
                os << "force: particles " << j << " and " << m << " coincide under a non-smooth kernel";
                throw SingularityError(os.str());
            }
        }
}

void force_into(const ParticleState& s, const MatrixKernelSpec& k, std::vector<double>& f) {
    const std::size_t n = s.positions.size();
    f.assign(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = j + 1; m < n; ++m) {
            const double d = kernels::derivative(k.block(species_index(s, j), species_index(s, m)),
                                                 s.positions[j] - s.positions[m]);
            f[j] -= 2.0 * d;
            f[m] += 2.0 * d;
        }
}

// Cyclic order of each species, by initial position reduced to [0, 2 pi).
struct OrderTracker {
    std::vector<std::vector<std::size_t>> order;
    std::vector<double> shift;

    explicit OrderTracker(const ParticleState& s, int species_count) : order(species_count) {
        const std::size_t n = s.positions.size();
        shift.resize(n);
        std::vector<double> reduced(n);
        for (std::size_t j = 0; j < n; ++j) {
            shift[j] = two_pi * std::floor(s.positions[j] / two_pi);
            reduced[j] = s.positions[j] - shift[j];
            order[species_index(s, j)].push_back(j);
        }
        for (auto& o : order)
            std::stable_sort(o.begin(), o.end(), [&](std::size_t a, std::size_t b) { return reduced[a] < reduced[b]; });
    }

    bool preserved(const std::vector<double>& x) const {
        for (const auto& o : order) {
            if (o.size() < 2) continue;
            for (std::size_t i = 0; i < o.size(); ++i) {
                const std::size_t a = o[i], b = o[(i + 1) % o.size()];
                double gap = (x[b] - shift[b]) - (x[a] - shift[a]);
                if (i + 1 == o.size()) gap += two_pi;
                if (!(gap > 0.0)) return false;
            }
        }
        return true;
    }
};

} // namespace

ParticleState crystal(int n, double offset) {
    if (n < 2) throw InvalidArgument("crystal: need at least two particles");
    ParticleState s;
    s.positions.resize(n);
    s.species.assign(n, 1);
    for (int j = 0; j < n; ++j) s.positions[j] = offset + two_pi * j / n;
    return s;
}

double energy(const ParticleState& s, const MatrixKernelSpec& k) {
    check_kernel(k, s);
    const std::size_t n = s.positions.size();
    double e = 0.0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t m = j + 1; m < n; ++m)
            e += kernels::evaluate(k.block(species_index(s, j), species_index(s, m)), s.positions[j] - s.positions[m]);
    return 2.0 * e;
}

std::vector<double> force(const ParticleState& s, const MatrixKernelSpec& k) {
    check_kernel(k, s);
    check_coincidence(s, k);
    std::vector<double> f;
    force_into(s, k, f);
    return f;
}

Eigen::MatrixXd force_jacobian(const ParticleState& s, const MatrixKernelSpec& k) {
    check_kernel(k, s);
    check_coincidence(s, k);
    const int n = static_cast<int>(s.positions.size());
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        for (int m = j + 1; m < n; ++m) {
            const double d2 = kernels::second_derivative(k.block(species_index(s, j), species_index(s, m)),
                                                         s.positions[j] - s.positions[m]);
            jac(j, m) += 2.0 * d2;
            jac(m, j) += 2.0 * d2;
            jac(j, j) -= 2.0 * d2;
            jac(m, m) -= 2.0 * d2;
        }
    return jac;
}

Eigen::MatrixXd linearize_crystal(int n, const KernelSpec& k) {
    return force_jacobian(crystal(n), MatrixKernelSpec(k));
}

Trajectory simulate(const ParticleState& s0, const MatrixKernelSpec& k, double t_end, double tol,
                    const SimulateOptions& options) {
    namespace odeint = boost::numeric::odeint;
    if (!(tol > 0.0)) throw InvalidArgument("simulate: tol must be positive");
    if (!(t_end >= s0.time)) throw InvalidArgument("simulate: t_end precedes the initial time");
    check_kernel(k, s0);
    check_coincidence(s0, k);

    using State = std::vector<double>;
    ParticleState work = s0;
    if (work.species.empty()) work.species.assign(work.positions.size(), 1);
    auto rhs = [&](const State& x, State& dxdt, double) {
        work.positions = x;
        force_into(work, k, dxdt);
    };

    auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(tol, tol);
    const OrderTracker tracker(work, k.size());

    Trajectory traj;
    State x = s0.positions;
    double t = s0.time;
    double dt = std::min(options.initial_step, std::max(t_end - t, options.min_step));
    auto record = [&]() {
        ParticleState st = work;
        st.positions = x;
        st.time = t;
        traj.points.push_back({t, st, energy(st, k)});
    };
    record();
    const bool every_step = options.record_interval <= 0.0;
    double next_record = every_step ? t_end : std::min(t + options.record_interval, t_end);

    while (t < t_end) {
        // Steps are clipped so that records fall on the requested times.
        const double target = every_step ? t_end : next_record;
        const double full = dt;
        const bool clipped = t + dt >= target;
        if (clipped) dt = target - t;
        const auto result = stepper.try_step(rhs, x, t, dt);
        if (result == odeint::fail) {
            ++traj.rejected_steps;
            if (dt < options.min_step) {
                std::ostringstream os;
                os << "simulate: step size underflow at t = " << t;
                throw IntegrationError(os.str(), t, x);
            }
            continue;
        }
        if (clipped) {
            t = target;
            dt = std::max(dt, full);
        }
        ++traj.accepted_steps;
        for (double v : x)
            if (!std::isfinite(v)) throw IntegrationError("simulate: non-finite state", t, x);
        if (!tracker.preserved(x)) ++traj.order_violations;
        if (every_step || t >= next_record) {
            record();
            if (!every_step) next_record = std::min(next_record + options.record_interval, t_end);
        }
    }
    return traj;
}

double density_proxy(std::vector<double> positions) {
    if (positions.size() < 2) throw InvalidArgument("density_proxy: need at least two particles");
    for (auto& x : positions) {
        x = std::fmod(x, two_pi);
        if (x < 0) x += two_pi;
    }
    std::sort(positions.begin(), positions.end());
    double best = 0.0;
    for (std::size_t j = 0; j < positions.size(); ++j) {
        double gap = (j + 1 < positions.size() ? positions[j + 1] : positions[0] + two_pi) - positions[j];
        best = std::max(best, 1.0 / gap);
    }
    return best;
}

namespace {

// Even configurations: x_0 = 0, x_{n-j} = 2 pi - x_j; the unknowns are
// x_1..x_q with q = (n-1)/2 (x_{n/2} = pi is fixed when n is even).
struct EvenReduction {
    int n, q;

    explicit EvenReduction(int n_) : n(n_), q((n_ - 1) / 2) {}

    std::vector<double> full(const Eigen::VectorXd& y) const {
        std::vector<double> x(n, 0.0);
        for (int j = 1; j <= q; ++j) {
            x[j] = y(j - 1);
            x[n - j] = two_pi - y(j - 1);
        }
        if (n % 2 == 0) x[n / 2] = pi;
        return x;
    }

    Eigen::VectorXd crystal() const {
        Eigen::VectorXd y(q);
        for (int j = 1; j <= q; ++j) y(j - 1) = two_pi * j / n;
        return y;
    }

    Eigen::VectorXd residual(const KernelSpec& k, const Eigen::VectorXd& y) const {
        ParticleState s;
        s.positions = full(y);
        const auto f = force(s, MatrixKernelSpec(k));
        Eigen::VectorXd r(q);
        for (int j = 1; j <= q; ++j) r(j - 1) = f[j];
        return r;
    }

    Eigen::MatrixXd jacobian(const KernelSpec& k, const Eigen::VectorXd& y) const {
        ParticleState s;
        s.positions = full(y);
        const Eigen::MatrixXd jf = force_jacobian(s, MatrixKernelSpec(k));
        Eigen::MatrixXd jr(q, q);
        for (int j = 1; j <= q; ++j)
            for (int i = 1; i <= q; ++i) jr(j - 1, i - 1) = jf(j, i) - jf(j, n - i);
        return jr;
    }
};

double max_real_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().real().maxCoeff();
}

double min_gap(const std::vector<double>& x) {
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    double g = s.front() + two_pi - s.back();
    for (std::size_t j = 0; j + 1 < s.size(); ++j) g = std::min(g, s[j + 1] - s[j]);
    return g;
}

} // namespace

EquilibriumBranch continue_equilibria(const kernels::ScalarFamily& family, int n, double mu_min, double mu_max,
                                      const ContinuationOptions& options) {
    if (n < 3) throw InvalidArgument("continue_equilibria: need N >= 3");
    if (!(mu_max > mu_min)) throw InvalidArgument("continue_equilibria: empty parameter range");
    const EvenReduction red(n);
    const int q = red.q;
    const Eigen::VectorXd yc = red.crystal();
    EquilibriumBranch branch;

    auto crystal_point = [&](double mu) {
        EquilibriumPoint p;
        p.mu = mu;
        p.positions = red.full(yc);
        p.density_proxy = density_proxy(p.positions);
        p.crystal = true;
        return p;
    };
    auto growth = [&](double mu) { return max_real_eigenvalue(red.jacobian(family(mu), yc)); };

    // Crystal branch up to its first instability.
    const auto grid = numerics::lin_space(mu_min, mu_max, std::max(options.scan_points, 2));
    double prev = growth(grid[0]);
    int crossing = -1;
    if (prev > 0.0) {
        branch.truncated = true;
        branch.diagnostic = "crystal already unstable at the lower end of the range";
        branch.bifurcation_mu = mu_min;
        return branch;
    }
    branch.points.push_back(crystal_point(grid[0]));
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double g = growth(grid[i]);
        if (g > 0.0) {
            crossing = static_cast<int>(i);
            break;
        }
        branch.points.push_back(crystal_point(grid[i]));
        prev = g;
    }
    if (crossing < 0) {
        branch.diagnostic = "crystal stable throughout the range";
        branch.bifurcation_mu = mu_max;
        return branch;
    }
    const double mu_b = numerics::find_root(growth, grid[crossing - 1], grid[crossing], 1e-13);
    branch.bifurcation_mu = mu_b;
    branch.points.push_back(crystal_point(mu_b));

    // Critical direction.
    Eigen::EigenSolver<Eigen::MatrixXd> es(red.jacobian(family(mu_b), yc));
    Eigen::Index imax = 0;
    es.eigenvalues().real().maxCoeff(&imax);
    Eigen::VectorXd phi = es.eigenvectors().col(imax).real();
    phi.normalize();
    if (phi(0) < 0) phi = -phi;

    const double h_mu = 1e-6;
    auto g_mu = [&](const Eigen::VectorXd& y, double mu) {
        return Eigen::VectorXd((red.residual(family(mu + h_mu), y) - red.residual(family(mu - h_mu), y)) / (2 * h_mu));
    };

    // Newton on [G(y, mu); c(y, mu)] with a linear constraint row.
    auto corrector = [&](Eigen::VectorXd& X, const Eigen::VectorXd& row, double rhs, int& iters) {
        for (iters = 0; iters < 20; ++iters) {
            const Eigen::VectorXd y = X.head(q);
            const double mu = X(q);
            const KernelSpec k = family(mu);
            Eigen::VectorXd F(q + 1);
            F.head(q) = red.residual(k, y);
            F(q) = row.dot(X) - rhs;
            if (F.lpNorm<Eigen::Infinity>() < 1e-11) return true;
            Eigen::MatrixXd J(q + 1, q + 1);
            J.topLeftCorner(q, q) = red.jacobian(k, y);
            J.topRightCorner(q, 1) = g_mu(y, mu);
            J.row(q) = row.transpose();
            const Eigen::VectorXd dx = J.fullPivLu().solve(F);
            if (!dx.allFinite()) return false;
            X -= dx;
            if (min_gap(red.full(X.head(q))) < 1e-8) return false;
        }
        return false;
    };

    Eigen::VectorXd X(q + 1);
    X.head(q) = yc + options.seed_amplitude * phi;
    X(q) = mu_b;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(q + 1);
    row.head(q) = phi;
    int iters = 0;
    if (!corrector(X, row, phi.dot(yc) + options.seed_amplitude, iters)) {
        branch.truncated = true;
        branch.diagnostic = "branch switching at the crystal instability failed";
        return branch;
    }

    auto tangent = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& previous) {
        const KernelSpec k = family(at(q));
        Eigen::MatrixXd A(q + 1, q + 1);
        A.topLeftCorner(q, q) = red.jacobian(k, at.head(q));
        A.topRightCorner(q, 1) = g_mu(at.head(q), at(q));
        A.row(q) = previous.transpose();
        Eigen::VectorXd e = Eigen::VectorXd::Zero(q + 1);
        e(q) = 1.0;
        Eigen::VectorXd t = A.fullPivLu().solve(e);
        t.normalize();
        return std::pair{t, A.determinant()};
    };

    // Initial tangent: away from the crystal along phi.
    Eigen::VectorXd t0 = Eigen::VectorXd::Zero(q + 1);
    t0.head(q) = phi;
    auto [t, det_prev] = tangent(X, t0);

    auto push = [&](const Eigen::VectorXd& state) {
        EquilibriumPoint p;
        p.mu = state(q);
        p.positions = red.full(state.head(q));
        p.density_proxy = density_proxy(p.positions);
        branch.points.push_back(p);
    };
    push(X);

    double ds = options.step;
    while (static_cast<int>(branch.points.size()) < options.max_points) {
        Eigen::VectorXd Xn = X + ds * t;
        if (!corrector(Xn, t, t.dot(X + ds * t), iters)) {
            ds *= 0.5;
            if (ds < 1e-7) {
                branch.truncated = true;
                branch.diagnostic = "pseudo-arclength corrector failed; branch truncated";
                break;
            }
            continue;
        }
        if (Xn(q) < mu_min || Xn(q) > mu_max) break;
        auto [tn, det_n] = tangent(Xn, t);
        if (det_n * det_prev < 0.0) branch.secondary_bifurcations.push_back(0.5 * (X(q) + Xn(q)));
        det_prev = det_n;
        X = Xn;
        t = tn;
        push(X);
        if (iters <= 3) ds = std::min(ds * 1.5, options.max_step);
    }
    return branch;
}

} // namespace revswitch::particles
