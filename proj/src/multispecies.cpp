#include "revswitch/multispecies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "revswitch/error.hpp"
#include "revswitch/numerics.hpp"

namespace revswitch::multispecies {

namespace {

void check_coefficients(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, std::size_t species) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() ||
        static_cast<std::size_t>(a.rows()) != species)
        throw InvalidArgument("multispecies: coefficient matrices must be P x P for P species");
}

// Steady equations in log variables on the even half grid:
//   eps w_p + sum_q a_pq e^{w_q} - sum_q b_pq(kappa) C_q cos x - m_p = 0,
//   sum_k c_k e^{w_p,k} = 2 pi,
// with C_q = sum_k c_k cos x_k e^{w_q,k}. Layout z = [w_1.., w_P.., m, kappa].
class LogSystem {
public:
    LogSystem(Eigen::MatrixXd a, AffineMatrix b, double eps, int n)
        : a_(std::move(a)), b_(std::move(b)), eps_(eps), grid_(n), P_(static_cast<int>(a_.rows())),
          H_(grid_.half()) {
        c_.resize(H_ + 1);
        cos_.resize(H_ + 1);
        for (int k = 0; k <= H_; ++k) {
            c_(k) = grid_.spacing() * grid_.fold_multiplicity(k);
            cos_(k) = std::cos(grid_.node(k));
        }
    }

    int species() const { return P_; }
    int half() const { return H_; }
    int unknowns() const { return P_ * (H_ + 1) + P_ + 1; }
    int kappa_index() const { return unknowns() - 1; }
    int m_index(int p) const { return P_ * (H_ + 1) + p; }
    int w_index(int p, int k) const { return p * (H_ + 1) + k; }
    const numerics::PeriodicGrid& grid() const { return grid_; }
    const Eigen::VectorXd& weights() const { return c_; }
    const Eigen::VectorXd& cosines() const { return cos_; }

    Eigen::MatrixXd densities(const Eigen::VectorXd& z) const {
        Eigen::MatrixXd e(H_ + 1, P_);
        for (int p = 0; p < P_; ++p) e.col(p) = z.segment(p * (H_ + 1), H_ + 1).array().exp();
        return e;
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& z) const {
        const Eigen::MatrixXd e = densities(z);
        const Eigen::MatrixXd b = b_.at(z(kappa_index()));
        const Eigen::VectorXd C = e.transpose() * (c_.array() * cos_.array()).matrix();
        Eigen::VectorXd F(unknowns() - 1);
        for (int p = 0; p < P_; ++p) {
            const double bc = b.row(p).dot(C);
            for (int i = 0; i <= H_; ++i) {
                F(w_index(p, i)) = eps_ * z(w_index(p, i)) + a_.row(p).dot(e.row(i)) - bc * cos_(i) - z(m_index(p));
            }
            F(m_index(p)) = c_.dot(e.col(p)) - two_pi;
        }
        return F;
    }

    /// (N - 1) x N Jacobian.
    Eigen::MatrixXd jacobian(const Eigen::VectorXd& z) const {
        const Eigen::MatrixXd e = densities(z);
        const Eigen::MatrixXd b = b_.at(z(kappa_index()));
        const Eigen::VectorXd cc = (c_.array() * cos_.array()).matrix();
        const Eigen::VectorXd C = e.transpose() * cc;
        Eigen::MatrixXd J = Eigen::MatrixXd::Zero(unknowns() - 1, unknowns());
        for (int p = 0; p < P_; ++p) {
            for (int q = 0; q < P_; ++q) {
                auto block = J.block(w_index(p, 0), w_index(q, 0), H_ + 1, H_ + 1);
                block.noalias() -= b(p, q) * cos_ * (cc.array() * e.col(q).array()).matrix().transpose();
                for (int i = 0; i <= H_; ++i) block(i, i) += a_(p, q) * e(i, q) + (p == q ? eps_ : 0.0);
            }
            J.block(w_index(p, 0), m_index(p), H_ + 1, 1).setConstant(-1.0);
            J.block(w_index(p, 0), kappa_index(), H_ + 1, 1) = -b_.b1.row(p).dot(C) * cos_;
            J.block(m_index(p), w_index(p, 0), 1, H_ + 1) = (c_.array() * e.col(p).array()).matrix().transpose();
        }
        return J;
    }

    /// Mixed state at kappa.
    Eigen::VectorXd mixed(double kappa) const {
        Eigen::VectorXd z = Eigen::VectorXd::Zero(unknowns());
        for (int p = 0; p < P_; ++p) z(m_index(p)) = a_.row(p).sum();
        z(kappa_index()) = kappa;
        return z;
    }

    SystemState state(const Eigen::VectorXd& z) const {
        SystemState s = SystemState::uniform(P_, grid_.size());
        const Eigen::MatrixXd e = densities(z);
        for (int p = 0; p < P_; ++p) s.u[p] = grid_.unfold_even(std::span<const double>(e.col(p).data(), H_ + 1));
        s.parameter = z(kappa_index());
        s.eps = eps_;
        return s;
    }

    /// Inner-product weights: quadrature mean for log densities, 1 otherwise.
    Eigen::VectorXd metric() const {
        Eigen::VectorXd d = Eigen::VectorXd::Ones(unknowns());
        for (int p = 0; p < P_; ++p) d.segment(p * (H_ + 1), H_ + 1) = c_ / two_pi;
        return d;
    }

private:
    Eigen::MatrixXd a_;
    AffineMatrix b_;
    double eps_;
    numerics::PeriodicGrid grid_;
    int P_, H_;
    Eigen::VectorXd c_, cos_;
};

struct NewtonResult {
    bool converged = false;
    int iterations = 0;
    std::vector<double> history;
};

// Damped Newton on the square system [G(z); extra(z)] = 0.
template <class Extra, class ExtraRow>
NewtonResult bordered_newton(const LogSystem& sys, Eigen::VectorXd& z, Extra extra, ExtraRow extra_row, double tol,
                             int max_iterations = 30) {
    const int N = sys.unknowns();
    auto full = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd F(N);
        F.head(N - 1) = sys.residual(y);
        F(N - 1) = extra(y);
        return F;
    };
    NewtonResult r;
    Eigen::VectorXd F = full(z);
    r.history.push_back(F.lpNorm<Eigen::Infinity>());
    for (; r.iterations < max_iterations; ++r.iterations) {
        if (r.history.back() <= tol) {
            r.converged = true;
            return r;
        }
        Eigen::MatrixXd J(N, N);
        J.topRows(N - 1) = sys.jacobian(z);
        J.row(N - 1) = extra_row(z);
        const Eigen::VectorXd step = J.partialPivLu().solve(F);
        if (!step.allFinite()) return r;
        double lambda = 1.0;
        Eigen::VectorXd zt, Ft;
        for (; lambda > 1e-6; lambda *= 0.5) {
            zt = z - lambda * step;
            Ft = full(zt);
            if (Ft.allFinite() && Ft.lpNorm<Eigen::Infinity>() < r.history.back()) break;
        }
        if (lambda <= 1e-6) return r;
        z = zt;
        F = Ft;
        r.history.push_back(F.lpNorm<Eigen::Infinity>());
    }
    r.converged = r.history.back() <= tol;
    return r;
}

double smallest_eigenvalue(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

Eigen::MatrixXd critical_matrix(const Eigen::MatrixXd& a, const AffineMatrix& b, double kappa, double eps) {
    Eigen::MatrixXd m = a - pi * b.at(kappa);
    m.diagonal().array() += eps;
    return m;
}

BranchPoint make_point(const LogSystem& sys, const Eigen::VectorXd& z) {
    BranchPoint pt;
    pt.kappa = z(sys.kappa_index());
    pt.state = sys.state(z);
    for (const auto& u : pt.state.u) {
        double amp = 0.0, lo = std::numeric_limits<double>::infinity();
        for (double v : u) {
            amp = std::max(amp, std::abs(v - 1.0));
            lo = std::min(lo, v);
        }
        pt.amplitude.push_back(amp);
        pt.minimum.push_back(lo);
    }
    return pt;
}

} // namespace

SystemState SystemState::uniform(int species, int n) {
    if (species < 1 || n < 4 || n % 2 != 0) throw InvalidArgument("SystemState::uniform: bad sizes");
    SystemState s;
    s.x.resize(n);
    for (int j = 0; j < n; ++j) s.x[j] = two_pi * j / n;
    s.weights.assign(n, two_pi / n);
    s.u.assign(species, std::vector<double>(n, 1.0));
    return s;
}

std::vector<std::vector<double>> system_flux(const SystemState& s, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                             double eps) {
    const std::size_t P = s.u.size();
    check_coefficients(a, b, P);
    const std::size_t n = s.x.size();
    if (s.weights.size() != n) throw InvalidArgument("system_flux: weights do not match nodes");
    for (const auto& u : s.u)
        if (u.size() != n) throw InvalidArgument("system_flux: profile size does not match nodes");

    std::vector<std::vector<double>> du = s.du;
    if (du.empty()) {
        for (const auto& u : s.u) du.push_back(numerics::spectral_derivative(u));
    } else if (du.size() != P) {
        throw InvalidArgument("system_flux: derivative count does not match species");
    }

    // c_q'(x) = -C_q sin x + S_q cos x.
    std::vector<double> C(P, 0.0), S(P, 0.0);
    for (std::size_t q = 0; q < P; ++q)
        for (std::size_t j = 0; j < n; ++j) {
            C[q] += s.weights[j] * std::cos(s.x[j]) * s.u[q][j];
            S[q] += s.weights[j] * std::sin(s.x[j]) * s.u[q][j];
        }
    std::vector<std::vector<double>> J(P, std::vector<double>(n));
    for (std::size_t p = 0; p < P; ++p)
        for (std::size_t j = 0; j < n; ++j) {
            double dphi = 0.0;
            for (std::size_t q = 0; q < P; ++q)
                dphi += a(p, q) * du[q][j] - b(p, q) * (-C[q] * std::sin(s.x[j]) + S[q] * std::cos(s.x[j]));
            J[p][j] = eps * du[p][j] + s.u[p][j] * dphi;
        }
    return J;
}

std::vector<std::vector<double>> system_residual(const SystemState& s, const Eigen::MatrixXd& a,
                                                 const Eigen::MatrixXd& b, double eps) {
    auto J = system_flux(s, a, b, eps);
    for (auto& j : J) j = numerics::spectral_derivative(j);
    return J;
}

SortingCoefficients sorting_coefficients(double a12) {
    SortingCoefficients c;
    c.a << 0.8, a12, a12, 1.0;
    c.b.b0 = Eigen::Matrix2d{{-0.3, 0.0}, {0.0, -0.3}};
    c.b.b1 = Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}};
    return c;
}

std::vector<Bifurcation> detect_bifurcations(const Eigen::MatrixXd& a, const AffineMatrix& b, double kappa_lo,
                                             double kappa_hi, double eps, int scan) {
    if (!(kappa_hi > kappa_lo) || scan < 2) throw InvalidArgument("detect_bifurcations: empty kappa range");
    check_coefficients(a, b.b0, static_cast<std::size_t>(a.rows()));
    auto f = [&](double k) { return smallest_eigenvalue(critical_matrix(a, b, k, eps)); };
    std::vector<Bifurcation> out;
    const auto grid = numerics::lin_space(kappa_lo, kappa_hi, scan);
    double prev = f(grid[0]);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double cur = f(grid[i]);
        if ((prev > 0.0) != (cur > 0.0)) {
            Bifurcation bf;
            bf.kappa = numerics::find_root(f, grid[i - 1], grid[i], 1e-14);
            const Eigen::MatrixXd m = critical_matrix(a, b, bf.kappa, eps);
            bf.e0 = stability::kernel_vector(m, false);
            if (bf.e0.size() == 2) {
                const double prod = bf.e0(0) * bf.e0(1);
                bf.type = prod > 0.0 ? stability::TwoSpeciesType::JointClustering
                                     : stability::TwoSpeciesType::Segregation;
            }
            out.push_back(bf);
        }
        prev = cur;
    }
    return out;
}

std::vector<ExtrapolatedBifurcation> extrapolate_bifurcations(const Eigen::MatrixXd& a, const AffineMatrix& b,
                                                              double kappa_lo, double kappa_hi, double eps_coarse,
                                                              double eps_fine) {
    const auto coarse = detect_bifurcations(a, b, kappa_lo, kappa_hi, eps_coarse);
    const auto fine = detect_bifurcations(a, b, kappa_lo, kappa_hi, eps_fine);
    if (coarse.size() != fine.size())
        throw AccuracyError("extrapolate_bifurcations: bifurcation count changes between eps values");
    std::vector<ExtrapolatedBifurcation> out;
    for (std::size_t i = 0; i < coarse.size(); ++i) {
        ExtrapolatedBifurcation e;
        e.eps_coarse = eps_coarse;
        e.eps_fine = eps_fine;
        e.kappa_coarse = coarse[i].kappa;
        e.kappa_fine = fine[i].kappa;
        // Linear in eps: kappa(0) = (eps_c kappa_f - eps_f kappa_c) / (eps_c - eps_f).
        e.kappa_zero = (eps_coarse * e.kappa_fine - eps_fine * e.kappa_coarse) / (eps_coarse - eps_fine);
        e.type = fine[i].type;
        out.push_back(e);
    }
    return out;
}

std::vector<SystemBranch> continue_kappa(const Eigen::MatrixXd& a, const AffineMatrix& b, double kappa_lo,
                                         double kappa_hi, double eps, const ContinuationOptions& options) {
    if (!(eps > 0.0)) throw DomainError("continue_kappa: eps must be positive");
    // Without a + eps I > 0 every wavenumber >= 2 is unstable and the
    // steady problem is ill-posed; branches are then reported, not followed.
    std::string ill_posed;
    {
        Eigen::MatrixXd shortwave = a;
        shortwave.diagonal().array() += eps;
        const double lo = smallest_eigenvalue(shortwave);
        if (!(lo > 0.0)) {
            std::ostringstream os;
            os << "continue_kappa: a + eps I is not positive definite (smallest eigenvalue " << lo
               << "); short waves are unstable, branch not followed";
            ill_posed = os.str();
        }
    }
    const auto bifurcations = detect_bifurcations(a, b, kappa_lo, kappa_hi, eps);
    if (bifurcations.empty()) throw BracketError("continue_kappa: no bifurcation of the mixed state in the kappa range");
    const LogSystem sys(a, b, eps, options.n);
    const int P = sys.species(), H = sys.half(), N = sys.unknowns();
    const Eigen::VectorXd D = sys.metric();

    std::vector<SystemBranch> branches;
    for (Bifurcation bf : bifurcations) {
        SystemBranch br;
        // Gauge: species 1 peaks at x = 0.
        if (bf.e0(0) < 0.0) bf.e0 = -bf.e0;
        br.origin = bf;
        br.label = stability::to_string(bf.type);
        if (!ill_posed.empty()) {
            br.truncated = true;
            br.diagnostic = ill_posed;
            branches.push_back(std::move(br));
            continue;
        }
        Eigen::Index lead = 0;
        bf.e0.cwiseAbs().maxCoeff(&lead);

        // Amplitude functional: projection of w onto e0 cos x.
        Eigen::RowVectorXd proj = Eigen::RowVectorXd::Zero(N);
        for (int p = 0; p < P; ++p)
            for (int k = 0; k <= H; ++k)
                proj(sys.w_index(p, k)) = bf.e0(p) * sys.weights()(k) * sys.cosines()(k) / (pi * bf.e0.squaredNorm());

        const Eigen::VectorXd z0 = sys.mixed(bf.kappa);
        Eigen::VectorXd z = z0;
        const double s = options.seed_amplitude;
        for (int p = 0; p < P; ++p)
            for (int k = 0; k <= H; ++k) z(sys.w_index(p, k)) = s * bf.e0(p) * sys.cosines()(k);
        const auto first = bordered_newton(
            sys, z, [&](const Eigen::VectorXd& y) { return proj.dot(y) - s; },
            [&](const Eigen::VectorXd&) { return proj; }, options.tol);
        if (!first.converged) {
            std::ostringstream os;
            os << "continue_kappa: branch switch failed at kappa = " << bf.kappa << "; critical eigenvalue "
               << smallest_eigenvalue(critical_matrix(a, b, bf.kappa, eps)) << ", e0 = (" << bf.e0.transpose()
               << ")";
            br.truncated = true;
            br.diagnostic = os.str();
            branches.push_back(std::move(br));
            continue;
        }
        br.points.push_back(make_point(sys, z));

        Eigen::VectorXd t = z - z0;
        t /= std::sqrt(t.dot(D.asDiagonal() * t));
        double ds = options.step;
        while (static_cast<int>(br.points.size()) < options.max_points) {
            const Eigen::VectorXd zp = z + ds * t;
            Eigen::VectorXd zn = zp;
            const Eigen::RowVectorXd tr = (D.asDiagonal() * t).transpose();
            const auto res = bordered_newton(
                sys, zn, [&](const Eigen::VectorXd& y) { return tr.dot(y - zp); },
                [&](const Eigen::VectorXd&) { return tr; }, options.tol, 12);
            if (!res.converged) {
                ds *= 0.5;
                if (ds < 1e-6) {
                    br.truncated = true;
                    br.diagnostic = "continue_kappa: step size underflow";
                    break;
                }
                continue;
            }
            // New tangent from the bordered Jacobian, oriented along the old one.
            Eigen::MatrixXd Jb(N, N);
            Jb.topRows(N - 1) = sys.jacobian(zn);
            Jb.row(N - 1) = tr;
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(N);
            rhs(N - 1) = 1.0;
            Eigen::VectorXd tn = Jb.partialPivLu().solve(rhs);
            tn /= std::sqrt(tn.dot(D.asDiagonal() * tn));
            if (tn.dot(D.asDiagonal() * t) < 0.0) tn = -tn;
            z = zn;
            t = tn;
            br.points.push_back(make_point(sys, z));
            const auto& pt = br.points.back();
            if (br.second_vacuum_index < 0)
                for (int p = 0; p < P; ++p)
                    if (p != lead && pt.minimum[p] < options.vacuum_floor)
                        br.second_vacuum_index = static_cast<int>(br.points.size()) - 1;
            if (pt.kappa < kappa_lo || pt.kappa > kappa_hi) break;
            if (*std::max_element(pt.amplitude.begin(), pt.amplitude.end()) > options.max_amplitude) break;
            if (*std::min_element(pt.minimum.begin(), pt.minimum.end()) < options.min_density) break;
            if (res.iterations <= 4) ds = std::min(options.max_step, 1.3 * ds);
        }
        branches.push_back(std::move(br));
    }
    return branches;
}

namespace {

Eigen::VectorXd log_guess(const LogSystem& sys, const SystemState& guess, double kappa) {
    const int H = sys.half();
    if (static_cast<int>(guess.u.size()) != sys.species() || static_cast<int>(guess.x.size()) != sys.grid().size())
        throw InvalidArgument("multispecies: guess does not match the system");
    Eigen::VectorXd z = sys.mixed(kappa);
    for (int p = 0; p < sys.species(); ++p)
        for (int k = 0; k <= H; ++k) {
            const double u = guess.u[p][k];
            if (!(u > 0.0)) throw DomainError("multispecies: guess must be positive");
            z(sys.w_index(p, k)) = std::log(u);
        }
    // m_p from the mean of the remaining terms.
    const Eigen::VectorXd F = sys.residual(z);
    for (int p = 0; p < sys.species(); ++p) z(sys.m_index(p)) += F.segment(sys.w_index(p, 0), H + 1).mean();
    return z;
}

} // namespace

SystemState solve_steady(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps, const SystemState& guess,
                         double tol) {
    if (!(eps > 0.0)) throw DomainError("solve_steady: eps must be positive");
    check_coefficients(a, b, guess.u.size());
    const int n = static_cast<int>(guess.x.size());
    const LogSystem sys(a, AffineMatrix{b, Eigen::MatrixXd::Zero(b.rows(), b.cols())}, eps, n);
    Eigen::VectorXd z = log_guess(sys, guess, 0.0);
    const auto r = bordered_newton(
        sys, z, [&](const Eigen::VectorXd& y) { return y(sys.kappa_index()); },
        [&](const Eigen::VectorXd&) {
            Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(sys.unknowns());
            row(sys.kappa_index()) = 1.0;
            return row;
        },
        tol, 60);
    if (!r.converged) throw ConvergenceError("solve_steady: Newton did not converge", r.history);
    SystemState s = sys.state(z);
    s.parameter = 0.0;
    return s;
}

SystemState solve_at_moment(const Eigen::MatrixXd& a, const AffineMatrix& b, double eps, int species, double moment,
                            const SystemState& guess, double kappa_guess, double tol) {
    if (!(eps > 0.0)) throw DomainError("solve_at_moment: eps must be positive");
    check_coefficients(a, b.b0, guess.u.size());
    if (species < 0 || species >= static_cast<int>(guess.u.size()))
        throw InvalidArgument("solve_at_moment: species index out of range");
    const LogSystem sys(a, b, eps, static_cast<int>(guess.x.size()));
    Eigen::VectorXd z = log_guess(sys, guess, kappa_guess);
    const int H = sys.half();
    Eigen::VectorXd cc = (sys.weights().array() * sys.cosines().array()).matrix();
    const auto r = bordered_newton(
        sys, z,
        [&](const Eigen::VectorXd& y) {
            return cc.dot(y.segment(sys.w_index(species, 0), H + 1).array().exp().matrix()) - moment;
        },
        [&](const Eigen::VectorXd& y) {
            Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(sys.unknowns());
            row.segment(sys.w_index(species, 0), H + 1) =
                (cc.array() * y.segment(sys.w_index(species, 0), H + 1).array().exp()).matrix().transpose();
            return row;
        },
        tol, 60);
    if (!r.converged) throw ConvergenceError("solve_at_moment: Newton did not converge", r.history);
    return sys.state(z);
}

std::vector<std::vector<double>> ReducedProblem::reconstruct(const std::vector<double>& lead_coefficients) const {
    if (lead_coefficients.size() > multiplier.size())
        throw InvalidArgument("reconstruct: more coefficients than reduced wavenumbers");
    const int others = back.empty() ? 0 : static_cast<int>(back[1 % back.size()].size());
    std::vector<std::vector<double>> out(others, std::vector<double>(lead_coefficients.size(), 0.0));
    for (int h = 0; h < others; ++h) {
        out[h][0] = 1.0;
        for (std::size_t l = 1; l < lead_coefficients.size(); ++l) out[h][l] = back[l](h) * lead_coefficients[l];
    }
    return out;
}

ReducedProblem reduce_nonvacuum_block(const kernels::MatrixKernelSpec& k, int lead) {
    const int P = k.size();
    if (lead < 0 || lead >= P) throw InvalidArgument("reduce_nonvacuum_block: lead species out of range");
    std::vector<int> rest;
    for (int i = 0; i < P; ++i)
        if (i != lead) rest.push_back(i);
    const int R = static_cast<int>(rest.size());
    ReducedProblem r;
    r.lead = lead;
    const int lmax = k.lmax();
    for (int l = 0; l <= lmax; ++l) {
        const Eigen::MatrixXd m = k.multiplier_matrix(l);
        if (R == 0) {
            r.multiplier.push_back(m(lead, lead));
            r.back.emplace_back();
            continue;
        }
        Eigen::MatrixXd hh(R, R);
        Eigen::VectorXd h1(R), oneh(R);
        for (int i = 0; i < R; ++i) {
            h1(i) = m(rest[i], lead);
            oneh(i) = m(lead, rest[i]);
            for (int j = 0; j < R; ++j) hh(i, j) = m(rest[i], rest[j]);
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(hh);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) {
            if (l == 0) {
                r.multiplier.push_back(m(lead, lead));
                r.back.push_back(Eigen::VectorXd::Zero(R));
                continue;
            }
            std::ostringstream os;
            os << "reduce_nonvacuum_block: non-vacuum block multiplier singular at wavenumber " << l;
            throw ResonanceError(os.str(), l);
        }
        const Eigen::VectorXd x = lu.solve(h1);
        r.multiplier.push_back(m(lead, lead) - oneh.dot(x));
        r.back.push_back(-x);
    }
    return r;
}

} // namespace revswitch::multispecies
