#include "revswitch/commands.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <iostream>
#include <random>
#include <thread>

#include "revswitch/error.hpp"
#include "revswitch/free_boundary.hpp"
#include "revswitch/multispecies.hpp"
#include "revswitch/numerics.hpp"
#include "revswitch/output.hpp"
#include "revswitch/particles.hpp"
#include "revswitch/rank_one.hpp"
#include "revswitch/stability.hpp"
#include "revswitch/viscous.hpp"

namespace revswitch::commands {

namespace fs = std::filesystem;
using nlohmann::json;
using output::CsvTable;

namespace {

struct Context {
    const config::Document& doc;
    config::Node root;
    fs::path out;
    int threads;
    bool verbose;
    std::string command;

    json meta(json stats) const {
        return json{{"command", command}, {"version", version}, {"config", doc.root()}, {"stats", std::move(stats)}};
    }
    void log(const std::string& msg) const {
        if (verbose) std::cerr << "[" << command << "] " << msg << "\n";
    }
};

void check_range(const config::Node& node, const std::string& lo_key, double lo, double hi) {
    if (!(lo < hi)) node.fail(lo_key, "empty range");
}

std::string point_name(const std::string& prefix, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%04zu.json", prefix.c_str(), i);
    return buf;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

kernels::KernelFamily family_or_default(const config::Node& root, const std::string& fallback) {
    if (auto f = root.optional_child("family")) return config::parse_family(*f);
    json j{{"name", fallback}};
    const auto doc = config::Document::parse(j.dump(), "<default family>");
    return config::parse_family(config::Node(doc, doc.root(), ""));
}

// ---------------------------------------------------------------- stability

void run_stability(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "family", "system", "mu_min", "mu_max"});
    const double lo = r.number("mu_min", -1.0), hi = r.number("mu_max", 1.0);
    check_range(r, "mu_min", lo, hi);

    stability::StabilityReport rep;
    json extra;
    if (auto sys = r.optional_child("system")) {
        sys->only({"a", "b0", "b1", "lmax"});
        const Eigen::MatrixXd a = sys->matrix("a", 2, 2);
        const multispecies::AffineMatrix b{sys->matrix("b0", 2, 2), sys->matrix("b1", 2, 2)};
        const int lmax = sys->integer("lmax", kernels::default_lmax, 1);
        rep = stability::critical_parameter(
            [a, b, lmax](double mu) { return kernels::MatrixKernelSpec::dirac_cosine(a, b.at(mu), lmax); }, lo, hi);
        // At the crossing itself the classifier sees a singular matrix; read
        // the type off the critical direction instead.
        extra["type"] = stability::to_string(rep.e0(0) * rep.e0(1) > 0.0 ? stability::TwoSpeciesType::JointClustering
                                                                          : stability::TwoSpeciesType::Segregation);
    } else {
        const auto fam = family_or_default(r, "cosine");
        rep = stability::critical_parameter([fam](double mu) { return fam.at(mu); }, lo, hi);
    }
    json rates = json::object();
    for (const auto& [l, g] : rep.growth_rates) rates[std::to_string(l)] = g;
    json report{{"mu_star", rep.mu_star}, {"l_star", rep.l_star}, {"e0", vector_json(rep.e0)}, {"growth_rates", rates}};
    for (auto& [k, v] : extra.items()) report[k] = v;
    output::write_json(c.out / "stability.json", report);
    c.log("mu_star = " + output::format_number(rep.mu_star));
}

// ---------------------------------------------------------------- particles

kernels::KernelSpec particle_kernel(const config::Node& r) {
    if (r.has("kernel")) {
        if (r.has("family")) r.fail("family", "give either kernel or family, not both");
        return config::parse_kernel(r.child("kernel"));
    }
    return family_or_default(r, "exponential").at(r.number("mu", 0.1));
}

void run_particles_simulate(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "kernel", "family", "mu", "n", "t_end", "tol", "record_interval",
            "perturbation", "seed", "runs"});
    const auto k = kernels::MatrixKernelSpec(particle_kernel(r));
    const int n = r.integer("n", 25, 2);
    const double t_end = r.positive("t_end", 20.0);
    const double tol = r.positive("tol", 1e-9);
    const double record = r.number("record_interval", 0.5);
    const double amp = r.number("perturbation", 0.2);
    const int seed = r.integer("seed", 1, 0);
    const int runs = r.integer("runs", 1, 1);

    particles::SimulateOptions opts;
    opts.record_interval = record;

    std::vector<particles::Trajectory> results(runs);
    std::vector<std::exception_ptr> errors(runs);
    auto work = [&](int run) {
        try {
            std::mt19937_64 rng(static_cast<std::uint64_t>(seed) * 1000003ULL + static_cast<std::uint64_t>(run));
            std::uniform_real_distribution<double> jitter(-0.5, 0.5);
            auto s = particles::crystal(n);
            for (auto& x : s.positions) x += amp * (two_pi / n) * jitter(rng);
            results[run] = particles::simulate(s, k, t_end, tol, opts);
        } catch (...) {
            errors[run] = std::current_exception();
        }
    };
    const int workers = std::max(1, std::min(c.threads, runs));
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (int run = w; run < runs; run += workers) work(run);
        });
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<std::string> cols{"time"};
    for (int j = 1; j <= n; ++j) cols.push_back("x_" + std::to_string(j));
    cols.push_back("energy");
    for (int run = 0; run < runs; ++run) {
        const auto& tr = results[run];
        CsvTable t(cols);
        bool monotone = true;
        for (std::size_t i = 0; i < tr.points.size(); ++i) {
            const auto& p = tr.points[i];
            std::vector<double> row{p.time};
            row.insert(row.end(), p.state.positions.begin(), p.state.positions.end());
            row.push_back(p.energy);
            t.add_row(row);
            if (i > 0 && p.energy > tr.points[i - 1].energy + 1e-10 * (1.0 + std::abs(p.energy))) monotone = false;
        }
        const std::string name = runs == 1 ? "trajectory.csv" : "trajectory_" + std::to_string(run) + ".csv";
        output::write_csv(c.out, name, t,
                          c.meta({{"run", run},
                                  {"accepted_steps", tr.accepted_steps},
                                  {"rejected_steps", tr.rejected_steps},
                                  {"order_violations", tr.order_violations},
                                  {"energy_monotone", monotone}}));
    }
    c.log(std::to_string(runs) + " run(s) written");
}

void run_particles_continue(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "family", "n", "mu_min", "mu_max", "step", "max_step", "max_points",
            "seed_amplitude"});
    const auto fam = family_or_default(r, "exponential");
    const int n = r.integer("n", 8, 3);
    const double lo = r.number("mu_min", -0.3), hi = r.number("mu_max", 0.5);
    check_range(r, "mu_min", lo, hi);
    particles::ContinuationOptions opts;
    opts.step = r.positive("step", opts.step);
    opts.max_step = r.positive("max_step", opts.max_step);
    opts.max_points = r.integer("max_points", opts.max_points, 2);
    opts.seed_amplitude = r.positive("seed_amplitude", opts.seed_amplitude);

    const auto br = particles::continue_equilibria([fam](double mu) { return fam.at(mu); }, n, lo, hi, opts);
    fs::create_directories(c.out / "positions");
    CsvTable t({"mu", "density_proxy", "crystal", "positions_file"});
    for (std::size_t i = 0; i < br.points.size(); ++i) {
        const auto& p = br.points[i];
        const std::string file = "positions/" + point_name("point", i);
        output::write_json(c.out / file, json{{"mu", p.mu}, {"x", p.positions}});
        t.add_row({p.mu, p.density_proxy, p.crystal ? 1.0 : 0.0}, {file});
    }
    output::write_csv(c.out, "branch.csv", t,
                      c.meta({{"bifurcation_mu", br.bifurcation_mu},
                              {"secondary_bifurcations", br.secondary_bifurcations},
                              {"truncated", br.truncated},
                              {"diagnostic", br.diagnostic}}));
    c.log("bifurcation at mu = " + output::format_number(br.bifurcation_mu));
}

// ---------------------------------------------------------------- bubbles

void run_bubble_sweep(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "mu_min", "mu_max", "points"});
    const double lo = r.positive("mu_min", 1e-5), hi = r.positive("mu_max", 1e-3);
    check_range(r, "mu_min", lo, hi);
    const int points = r.integer("points", 20, 2);

    const auto br = rank_one::sweep_branch(numerics::log_space(lo, hi, points));
    CsvTable t({"mu", "A0", "A1", "L", "asymptotic_L"});
    std::vector<double> mu, L;
    for (const auto& p : br.points) {
        t.add_row({p.mu, p.A0, p.A1, p.L, rank_one::asymptotic_L(p.mu)});
        mu.push_back(p.mu);
        L.push_back(p.L);
    }
    json stats{{"truncated", br.truncated}, {"diagnostic", br.diagnostic}, {"gap_constant", rank_one::gap_constant()}};
    if (mu.size() >= 2) {
        const auto fit = rank_one::fit_gap_law(mu, L);
        stats["fit"] = {{"p", fit.p}, {"c", fit.c}};
        c.log("gap law p = " + output::format_number(fit.p) + ", c = " + output::format_number(fit.c));
    }
    output::write_csv(c.out, "bubbles.csv", t, c.meta(stats));
}

void run_freeboundary_continue(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "family", "a0_max", "points", "grid_n", "tol", "profile_points"});
    const auto fam = family_or_default(r, "cosine");
    const double a0_max = r.number("a0_max", 1.1);
    if (!(a0_max > 1.0)) r.fail("a0_max", "must be > 1");
    const int points = r.integer("points", 10, 1);
    free_boundary::ContinuationOptions opts;
    opts.grid_n = r.integer("grid_n", opts.grid_n, 8);
    opts.tol = r.positive("tol", opts.tol);
    const int profile_points = r.integer("profile_points", 257, 3);

    std::vector<double> a0;
    for (int k = 1; k <= points; ++k) a0.push_back(1.0 + (a0_max - 1.0) * k / points);
    const auto br = free_boundary::newton_continue(fam, free_boundary::Parameter::A0, a0, opts);

    fs::create_directories(c.out / "profiles");
    const auto x = numerics::lin_space(-pi, pi, profile_points);
    CsvTable t({"A0", "mu", "L", "rho", "A1", "profile_file"});
    double weak = 0.0;
    for (std::size_t i = 0; i < br.points.size(); ++i) {
        const auto& p = br.points[i];
        std::vector<double> u(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) u[j] = p.density(x[j]);
        const std::string file = "profiles/" + point_name("point", i);
        output::write_json(c.out / file, json{{"x", x}, {"u", u}, {"A0", p.A0}, {"mu", p.mu}, {"L", p.L}});
        t.add_row({p.A0, p.mu, p.L, p.rho, p.A1}, {file});
        if (p.L < pi) weak = std::max(weak, free_boundary::weak_residual(p, fam.at(p.mu)));
    }
    json stats{{"mu_star", br.mu_star}, {"truncated", br.truncated}, {"diagnostic", br.diagnostic},
               {"max_weak_residual", weak}};
    try {
        const auto e = free_boundary::extract_expansion(br);
        stats["expansion"] = {{"A1_1", e.A1_1}, {"A1_2", e.A1_2}, {"L_1", e.L_1},   {"L_2", e.L_2},
                              {"rho_1", e.rho_1}, {"mu_1", e.mu_1}, {"mu_2", e.mu_2}, {"mu_3", e.mu_3}};
    } catch (const InvalidArgument& e) {
        stats["expansion"] = nullptr;
        c.log(e.what());
    }
    output::write_csv(c.out, "freeboundary.csv", t, c.meta(stats));
}

// ---------------------------------------------------------------- viscous

viscous::CollocationOptions collocation_options(const config::Node& r) {
    viscous::CollocationOptions o;
    o.n = r.integer("n", o.n, 16);
    if (o.n % 2) r.fail("n", "must be even");
    o.tol = r.positive("tol", o.tol);
    o.max_iterations = r.integer("max_iterations", o.max_iterations, 1);
    return o;
}

void run_viscous_branch(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "family", "eps", "rho_min", "rho_max", "points", "n", "tol",
            "max_iterations"});
    const auto fam = family_or_default(r, "cosine");
    const double eps = r.positive("eps", 0.01);
    const double lo = r.positive("rho_min", 0.05), hi = r.number("rho_max", 0.95);
    check_range(r, "rho_min", lo, hi);
    if (hi >= 2.0) r.fail("rho_max", "must be < 2");
    const int points = r.integer("points", 19, 1);

    const auto br = viscous::viscous_branch(fam, eps, numerics::lin_space(lo, hi, points), collocation_options(r));
    CsvTable t({"rho", "mu", "mu_over_eps", "mu1_prediction"});
    for (const auto& p : br) t.add_row({p.rho, p.mu, p.mu_over_eps, p.mu1_prediction});
    output::write_csv(c.out, "viscous_branch.csv", t, c.meta({{"eps", eps}, {"points", br.size()}}));
}

void run_viscous_profile(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "family", "eps", "rho", "n", "tol", "max_iterations"});
    const double eps = r.positive("eps", 0.1);
    const double rho = r.positive("rho", 0.5);
    if (rho >= 2.0) r.fail("rho", "must be < 2");
    const auto opts = collocation_options(r);

    // Overlay: the cosine-model closed form with the same cosine moment.
    const auto closed = viscous::closed_form_profile(rho, eps, opts.n);
    const auto fam = r.has("family") ? family_or_default(r, "cosine") : viscous::cosine_model();
    const auto prof = viscous::steady_collocation(fam, eps, rho, opts);
    double dist = 0.0;
    for (std::size_t j = 0; j < prof.u.size(); ++j) dist = std::max(dist, std::abs(prof.u[j] - closed.u[j]));
    output::write_json(c.out / "profile.json",
                       json{{"x", prof.x},
                            {"u", prof.u},
                            {"closed_form_u", closed.u},
                            {"eps", eps},
                            {"rho", rho},
                            {"mu", prof.mu},
                            {"m", prof.m},
                            {"A", prof.A},
                            {"iterations", prof.iterations},
                            {"residual", prof.residual},
                            {"closed_form", {{"A", closed.A}, {"m", closed.m}, {"mu", closed.mu}}},
                            {"overlay_fit", "cosine_moment"},
                            {"sup_distance", dist}});
    c.log("sup distance to closed form " + output::format_number(dist));
}

// ---------------------------------------------------------------- systems

void run_system_continue(const Context& c) {
    const auto& r = c.root;
    r.only({"command", "threads", "output", "a", "b0", "b1", "kappa_min", "kappa_max", "eps", "eps_fine", "n",
            "step", "max_step", "max_points", "max_amplitude", "seed_amplitude", "mark_every", "reconciliation_a12"});
    auto sc = multispecies::sorting_coefficients(1.0);
    Eigen::MatrixXd a = r.has("a") ? r.matrix("a", 2, 2) : Eigen::MatrixXd(sc.a);
    multispecies::AffineMatrix b{r.has("b0") ? r.matrix("b0", 2, 2) : sc.b.b0,
                                 r.has("b1") ? r.matrix("b1", 2, 2) : sc.b.b1};
    const double lo = r.number("kappa_min", -1.0), hi = r.number("kappa_max", 1.5);
    check_range(r, "kappa_min", lo, hi);
    const double eps = r.positive("eps", 0.03);
    const double eps_fine = r.positive("eps_fine", eps / 2);
    if (!(eps_fine < eps)) r.fail("eps_fine", "must be smaller than eps");
    multispecies::ContinuationOptions opts;
    opts.n = r.integer("n", opts.n, 16);
    opts.step = r.positive("step", opts.step);
    opts.max_step = r.positive("max_step", opts.max_step);
    opts.max_points = r.integer("max_points", opts.max_points, 2);
    opts.max_amplitude = r.positive("max_amplitude", opts.max_amplitude);
    opts.seed_amplitude = r.positive("seed_amplitude", opts.seed_amplitude);
    const int mark_every = r.integer("mark_every", 10, 1);
    const double a12_rec = r.number("reconciliation_a12", 0.8);

    const auto branches = multispecies::continue_kappa(a, b, lo, hi, eps, opts);
    fs::create_directories(c.out / "profiles");
    CsvTable t({"kappa", "amp1", "amp2", "min1", "min2", "branch_label", "profile_file"});
    json info = json::array();
    for (std::size_t bi = 0; bi < branches.size(); ++bi) {
        const auto& br = branches[bi];
        for (std::size_t i = 0; i < br.points.size(); ++i) {
            const auto& p = br.points[i];
            const bool mark = i % mark_every == 0 || i + 1 == br.points.size() ||
                              static_cast<int>(i) == br.second_vacuum_index;
            std::string file;
            if (mark) {
                file = "profiles/" + point_name(br.label + "_" + std::to_string(bi), i);
                output::write_json(c.out / file, json{{"x", p.state.x},
                                                      {"u1", p.state.u[0]},
                                                      {"u2", p.state.u[1]},
                                                      {"kappa", p.kappa},
                                                      {"branch_label", br.label}});
            }
            t.add_row({p.kappa, p.amplitude[0], p.amplitude[1], p.minimum[0], p.minimum[1]}, {br.label, file});
        }
        info.push_back({{"label", br.label},
                        {"origin_kappa", br.origin.kappa},
                        {"e0", vector_json(br.origin.e0)},
                        {"points", br.points.size()},
                        {"truncated", br.truncated},
                        {"diagnostic", br.diagnostic},
                        {"second_vacuum_index", br.second_vacuum_index}});
        if (br.truncated) c.log(br.label + ": " + br.diagnostic);
    }

    auto roots = [&](const Eigen::MatrixXd& am) {
        json out = json::array();
        for (const auto& e : multispecies::extrapolate_bifurcations(am, b, lo, hi, eps, eps_fine))
            out.push_back({{"type", stability::to_string(e.type)},
                           {"kappa_coarse", e.kappa_coarse},
                           {"kappa_fine", e.kappa_fine},
                           {"kappa_zero", e.kappa_zero}});
        return out;
    };
    Eigen::MatrixXd a_rec = a;
    a_rec(0, 1) = a_rec(1, 0) = a12_rec;
    json det_roots = json::array();
    for (const auto& d : multispecies::detect_bifurcations(a, b, lo, hi, 0.0))
        det_roots.push_back({{"type", stability::to_string(d.type)}, {"kappa", d.kappa}});

    output::write_csv(c.out, "system_branches.csv", t,
                      c.meta({{"eps", eps},
                              {"branches", info},
                              {"det_roots", det_roots},
                              {"extrapolated", roots(a)},
                              {"reconciliation", {{"a12", a12_rec}, {"extrapolated", roots(a_rec)}}}}));
}

} // namespace

void run(const config::Document& doc, const RunOptions& options) {
    const config::Node root(doc, doc.root(), "");
    const std::string command = root.string("command", "");
    fs::path out = options.out;
    if (out.empty()) out = root.string("output", "out");
    int threads = options.threads > 0 ? options.threads : root.integer("threads", 1, 1);
    fs::create_directories(out);
    const Context c{doc, root, out, threads, options.verbose, command};

    if (command == "stability") run_stability(c);
    else if (command == "particles-simulate") run_particles_simulate(c);
    else if (command == "particles-continue") run_particles_continue(c);
    else if (command == "bubble-sweep") run_bubble_sweep(c);
    else if (command == "freeboundary-continue") run_freeboundary_continue(c);
    else if (command == "viscous-branch") run_viscous_branch(c);
    else if (command == "viscous-profile") run_viscous_profile(c);
    else if (command == "system-continue") run_system_continue(c);
    else
        root.fail("command", "unknown command '" + command +
                                 "' (stability, particles-simulate, particles-continue, bubble-sweep, "
                                 "freeboundary-continue, viscous-branch, viscous-profile, system-continue)");
}

json error_json(const std::exception& e) {
    json j{{"message", e.what()}};
    const auto* err = dynamic_cast<const Error*>(&e);
    j["error"] = err ? err->kind() : "internal";
    if (const auto* ce = dynamic_cast<const ConfigError*>(&e)) j["field"] = ce->field;
    if (const auto* ce = dynamic_cast<const ConvergenceError*>(&e)) j["residual_history"] = ce->residual_history;
    if (const auto* re = dynamic_cast<const ResonanceError*>(&e)) j["wavenumber"] = re->wavenumber;
    if (const auto* se = dynamic_cast<const StepRejected*>(&e)) j["suggested_dt"] = se->suggested_dt;
    if (const auto* ie = dynamic_cast<const IntegrationError*>(&e)) j["last_time"] = ie->last_time;
    return j;
}

int execute(const fs::path& config_path, const RunOptions& options) {
    fs::path out = options.out.empty() ? fs::path("out") : options.out;
    auto report = [&](const std::exception& e, int code) {
        json j = error_json(e);
        j["exit_code"] = code;
        std::cerr << j.dump() << "\n";
        try {
            fs::create_directories(out);
            output::write_json(out / "error.json", j);
        } catch (...) {
        }
        return code;
    };
    try {
        const auto doc = config::Document::load(config_path);
        if (options.out.empty() && doc.root().contains("output") && doc.root()["output"].is_string())
            out = doc.root()["output"].get<std::string>();
        run(doc, options);
        return 0;
    } catch (const ConfigError& e) {
        return report(e, 2);
    } catch (const std::exception& e) {
        return report(e, 1);
    }
}

} // namespace revswitch::commands
