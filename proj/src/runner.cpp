#include "dispersal/runner.hpp"

#include "dispersal/acceptance.hpp"
#include "dispersal/dynamics.hpp"
#include "dispersal/operators.hpp"
#include "dispersal/scenarios.hpp"
#include "dispersal/sharmonic.hpp"
#include "dispersal/spectral.hpp"
#include "dispersal/stability.hpp"
#include "dispersal/steady.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

namespace dispersal {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Everything an experiment produces, held in memory until it succeeds.
struct Outcome {
    json numbers = json::object();
    std::map<std::string, bool> flags;
    std::map<std::string, std::string> files;

    void flag(const std::string& name, bool value) { flags[name] = value; }
};

std::string field_csv(const Grid& grid, const std::vector<std::pair<std::string, const Field*>>& columns) {
    std::ostringstream os;
    os.precision(17);
    os << (grid.dim() == 1 ? "x" : "x,y");
    for (const auto& c : columns) os << ',' << c.first;
    os << '\n';
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point p = grid.node(k);
        os << p[0];
        if (grid.dim() == 2) os << ',' << p[1];
        for (const auto& c : columns) os << ',' << (*c.second)[static_cast<Eigen::Index>(k)];
        os << '\n';
    }
    return os.str();
}

template <class Writer>
std::string capture(Writer&& write) {
    std::ostringstream os;
    write(os);
    return os.str();
}

json inputs_of(const ExperimentConfig& c, std::uint64_t seed) {
    json j;
    j["experiment"] = c.experiment;
    j["s"] = c.s;
    if (c.s_prime) j["s_prime"] = *c.s_prime;
    j["grid"]["dim"] = c.dim;
    j["grid"]["n"] = c.n;
    for (const auto& b : c.bounds) j["grid"]["bounds"].push_back({b.lower, b.upper});
    if (c.sigma) j["sigma"] = c.sigma->describe();
    j["tolerances"] = {{"residual", c.residual_tol}, {"eigen", c.eigen_tol}};
    j["seed"] = seed;
    return j;
}

Field sigma_or_default(const ExperimentConfig& c, const Grid& grid, double lambda1) {
    return evaluate_resource(c.sigma.value_or(ResourceSpec{}), grid, lambda1);
}

Resource resource_function(const ResourceSpec& spec) {
    switch (spec.kind) {
        case ResourceSpec::Kind::constant: {
            const double v = *spec.value;
            return [v](const Point&) { return v; };
        }
        case ResourceSpec::Kind::bump:
            return [spec](const Point& p) {
                const double dx = p[0] - spec.center[0], dy = p[1] - spec.center[1];
                return std::sqrt(dx * dx + dy * dy) < spec.radius ? spec.tau : 0.0;
            };
        case ResourceSpec::Kind::expression: {
            const Expression e = *spec.expression;
            return [e](const Point& p) { return e(p); };
        }
    }
    return {};
}

void run_eigen(const ExperimentConfig& c, Outcome& out) {
    const Grid grid = c.grid();
    const OperatorMatrix op = assemble_operator(grid, c.s);
    EigenOptions eo;
    eo.residual_tol = c.eigen_tol;
    const EigenReport rep = principal_eigenpair(op, eo);
    out.numbers["lambda1"] = rep.eigenvalue;
    out.numbers["poincare_constant"] = 1.0 / rep.eigenvalue;
    out.numbers["residual"] = rep.residual;
    out.numbers["iterations"] = rep.iterations;
    out.flag("residual", rep.residual <= c.eigen_tol);
    out.flag("single_signed", rep.eigenfunction.minCoeff() >= -1e-10 * rep.eigenfunction.maxCoeff());
    out.files["eigenfunction.csv"] = field_csv(grid, {{"phi", &rep.eigenfunction}});
}

void run_steady(const ExperimentConfig& c, Outcome& out) {
    const Grid grid = c.grid();
    const OperatorMatrix op = assemble_operator(grid, c.s);
    const double lambda1 = principal_eigenpair(op).eigenvalue;
    const Field sigma = sigma_or_default(c, grid, lambda1);
    const ReverseConditionReport rc = reverse_condition(op, sigma);
    SteadyOptions so;
    so.residual_tol = c.residual_tol * std::max(1.0, sigma.maxCoeff());
    const SteadyState st = minimize_energy(op, sigma, std::nullopt, so);
    out.numbers["lambda1"] = lambda1;
    out.numbers["reverse_margin"] = rc.margin;
    out.numbers["residual"] = st.residual;
    out.numbers["energy"] = st.energy.value;
    out.numbers["sup_u"] = st.u.maxCoeff();
    out.numbers["nontrivial"] = st.nontrivial;
    out.flag("residual", st.residual <= so.residual_tol);
    out.flag("max_principle", max_principle_check(st, sigma));
    out.flag("nontrivial_iff_reverse_condition", st.nontrivial == rc.holds);
    out.files["steady.csv"] = capture([&](std::ostream& os) {
        write_steady_csv(os, grid, st, c.s, c.sigma ? c.sigma->describe() : "constant(2*lambda1)");
    });
}

void run_mismatch(const ExperimentConfig& c, Outcome& out) {
    const Grid grid = c.grid();
    const OperatorMatrix local = assemble_classical(grid);
    const OperatorMatrix nonlocal = assemble_fractional(grid, c.s);
    const double lambda1 = principal_eigenpair(local).eigenvalue;
    const Field sigma = sigma_or_default(c, grid, lambda1);
    const SteadyState st = minimize_energy(local, sigma);
    out.numbers["residual"] = st.residual;
    out.flag("residual", st.residual <= c.residual_tol * std::max(1.0, sigma.maxCoeff()));

    MismatchCertificate cert;
    if (c.ball_radius) {
        const Point center = c.ball_center.value_or(Point{0.0, 0.0});
        cert = instability_certificate(local, nonlocal, sigma, st.u, ball_nodes(grid, center, *c.ball_radius));
    } else {
        const double unit = unit_ball_poincare(grid.dim(), c.s, grid.dim() == 1 ? 256 : 24);
        const MismatchScan scan = mismatch_scan(local, nonlocal, sigma, st.u, candidate_balls(grid, 4), unit);
        cert = scan.best;
        out.numbers["candidates"] = scan.candidates;
        out.numbers["best_scaled_margin"] = scan.best_scaled_margin;
    }
    out.numbers["x0"] = {cert.center[0], cert.center[1]};
    out.numbers["r"] = cert.radius;
    out.numbers["gap"] = cert.gap;
    out.numbers["threshold"] = cert.threshold;
    out.numbers["satisfied"] = cert.satisfied;
    out.numbers["Q"] = cert.q_value;
    out.numbers["lambda"] = cert.lambda;
    out.flag("certificate_consistent", !cert.satisfied || (cert.q_value > 0.0 && cert.lambda > 0.0));
    out.files["certificate.json"] = capture([&](std::ostream& os) { write_certificate_json(os, cert); });
}

void run_rescaled(const ExperimentConfig& c, Outcome& out) {
    RescaledScenarioConfig rc;
    rc.s = c.s;
    rc.nodes = c.n;
    const RescaledScenarioReport rep = run_rescaled_construction(rc);
    const auto& cert = rep.certificate;
    out.numbers["lambda1"] = rep.lambda1;
    out.numbers["c0"] = rep.c0;
    out.numbers["x0"] = rep.center[0];
    out.numbers["r"] = rep.radius;
    out.numbers["unit_ball_constant"] = rep.unit_ball_constant;
    out.numbers["formula_threshold"] = rep.formula_threshold;
    out.numbers["Lambda"] = rep.big_lambda;
    out.numbers["lambda"] = rep.lambda;
    out.numbers["gap"] = cert.gap;
    out.numbers["threshold"] = cert.threshold;
    out.numbers["Q"] = cert.q_value;
    out.numbers["v_block"] = rep.v_block_eigenvalue;
    out.numbers["u_block"] = rep.u_block_eigenvalue;
    out.numbers["residual"] = rep.rescaled_residual;
    out.flag("mismatch", cert.satisfied);
    out.flag("Q_positive", cert.q_value > 0.0);
    out.flag("v_block_positive", rep.v_block_eigenvalue > 0.0);
    out.flag("u_block_negative", rep.u_block_eigenvalue < 0.0);
    out.files["certificate.json"] = capture([&](std::ostream& os) { write_certificate_json(os, cert); });
    out.files["rescaled_state.csv"] =
        field_csv(rep.rescaled_grid, {{"sigma", &rep.rescaled_sigma}, {"u", &rep.rescaled_state}, {"v_star", &cert.witness}});
}

void run_branching(const ExperimentConfig& c, Outcome& out) {
    BumpScenarioConfig bc;
    bc.s = c.s;
    bc.nodes = c.n;
    bc.levels = c.levels;
    bc.s_prime = c.s_prime;
    if (c.ball_radius) bc.radius = *c.ball_radius;
    if (c.ball_center) bc.center = *c.ball_center;
    const BumpScenarioReport rep = run_bump_construction(bc);
    const SweepReport& sw = rep.sweep;
    out.numbers["branching_threshold"] = sw.branching_threshold;
    out.numbers["tau_star"] = rep.tau_star;
    out.numbers["admissible_radius"] = sw.admissible_radius.value_or(0.0);
    out.numbers["radius_admissible"] = sw.radius_admissible.value_or(false);
    out.numbers["eps_window"] = sw.eps_window.value_or(0.0);
    if (sw.certified_tau) out.numbers["certified_tau"] = *sw.certified_tau;
    bool decreasing = true;
    bool l3 = true;
    bool l3_scaled = true;
    for (std::size_t k = 0; k < sw.points.size(); ++k) {
        const auto& p = sw.points[k];
        if (k > 0) decreasing = decreasing && p.sup_u < sw.points[k - 1].sup_u;
        const double cube = std::pow(p.l3_u, 3);
        l3 = l3 && cube <= p.excess * (1.0 + 1e-10);
        l3_scaled = l3_scaled && cube <= p.excess * p.l2_u * p.l2_u * (1.0 + 1e-10);
    }
    out.flag("certified", sw.certified_tau.has_value());
    out.flag("sup_decreasing", decreasing);
    out.flag("L3_cube_below_excess", l3);
    out.numbers["L3_cube_below_excess_times_L2_sq"] = l3_scaled;

    const Grid grid = Grid::line({-1.0, 1.0}, c.n);
    BranchingCurve curve = branching_threshold(assemble_classical(grid), ball_nodes(grid, bc.center, bc.radius));
    attach_lower_bound(curve, sw.s_prime, rep.tau_star);
    out.files["sweep.csv"] = capture([&](std::ostream& os) { write_sweep_csv(os, sw); });
    out.files["branching.csv"] = capture([&](std::ostream& os) { write_branching_csv(os, curve); });
}

void run_invasion(const ExperimentConfig& c, Outcome& out) {
    RescaledScenarioConfig rc;
    rc.s = c.s;
    rc.nodes = c.n;
    const RescaledScenarioReport rep = run_rescaled_construction(rc);
    CoupledStepper stepper(assemble_classical(rep.rescaled_grid), assemble_fractional(rep.rescaled_grid, c.s));
    constexpr double eps = 1e-6;
    const GrowthReport g = invasion_experiment(stepper, rep.rescaled_state, rep.certificate.witness, eps,
                                               rep.rescaled_sigma, c.horizon, rep.certificate.lambda);
    out.numbers["lambda"] = g.lambda;
    out.numbers["initial_rate"] = g.initial_rate;
    out.numbers["dt"] = g.dt;
    out.flag("certified", rep.certificate.satisfied);
    out.flag("growing_with_sign_of_lambda", g.initial_rate > 0.0 && g.lambda > 0.0);

    const Grid base = Grid::line({-1.0, 1.0}, c.n);
    const OperatorMatrix base_nonlocal = assemble_fractional(base, c.s);
    CoupledStepper control(assemble_classical(base), base_nonlocal);
    const EigenReport phi = principal_eigenpair(base_nonlocal);
    const Field zero = Field::Zero(static_cast<Eigen::Index>(base.size()));
    const GrowthReport gc = invasion_experiment(control, zero, phi.eigenfunction, eps, zero, c.horizon, -phi.eigenvalue);
    out.numbers["control_rate"] = gc.initial_rate;
    out.flag("control_decaying", gc.initial_rate < 0.0);

    const double dt = 0.5 * admissible_step(rep.rescaled_sigma, rep.rescaled_state, eps * rep.certificate.witness);
    const auto steps = static_cast<int>(std::ceil(c.horizon / dt));
    const Trajectory traj = simulate(stepper, rep.rescaled_state, eps * rep.certificate.witness, rep.rescaled_sigma,
                                     c.horizon, dt, std::max(1, steps / 100));
    out.numbers["final_L2_v"] = traj.diagnostics.back().l2_v;
    out.files["trajectory.csv"] = capture([&](std::ostream& os) { write_trajectory_csv(os, traj); });
}

void run_comparison(const ExperimentConfig& c, Outcome& out, std::uint64_t seed) {
    const Grid grid = c.grid();
    const OperatorMatrix op = assemble_fractional(grid, c.s);
    const Field sigma = sigma_or_default(c, grid, principal_eigenpair(op).eigenvalue);
    const double top = std::max(sigma.maxCoeff(), 1.0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> level(0.0, top);
    std::uniform_real_distribution<double> lift(0.0, 1.0);
    const Reaction f = [&sigma](double v, std::size_t i) { return v * (v - sigma[static_cast<Eigen::Index>(i)]); };
    std::ostringstream csv;
    csv << "pair,lipschitz,dt,ordered\n";
    int ordered = 0;
    for (int k = 0; k < c.pairs; ++k) {
        Field w0(static_cast<Eigen::Index>(grid.size()));
        Field v0(w0.size());
        for (Eigen::Index i = 0; i < w0.size(); ++i) {
            w0[i] = level(rng);
            v0[i] = w0[i] + lift(rng);
        }
        ComparisonOptions opt;
        opt.lipschitz = top + 2.0 * std::max(top, v0.maxCoeff());
        opt.T = c.horizon;
        opt.dt = 1.0 / (4.0 * (opt.lipschitz + 1.0));
        const bool ok = comparison_check(op, v0, w0, f, opt);
        ordered += ok ? 1 : 0;
        csv << k << ',' << opt.lipschitz << ',' << opt.dt << ',' << (ok ? 1 : 0) << '\n';
    }
    out.numbers["pairs"] = c.pairs;
    out.numbers["ordered"] = ordered;
    out.flag("ordering_preserved", ordered == c.pairs);
    out.files["comparison.csv"] = csv.str();
}

void run_sharmonic(const ExperimentConfig& c, Outcome& out) {
    ResourceSpec spec;
    spec.kind = ResourceSpec::Kind::expression;
    spec.expression = Expression::parse("1 + x^2/2", 2);
    if (c.sigma) spec = *c.sigma;
    const Resource sigma = resource_function(spec);
    FitOptions fo;
    fo.dim = c.dim;
    double previous = std::numeric_limits<double>::infinity();
    bool improving = true;
    bool harmonic = true;
    json fits = json::array();
    double last_misfit = 0.0, sup_target = 0.0;
    for (double R : c.fit_radii) {
        const SHarmonicFit fit = fit_s_harmonic(sigma, c.s, R, c.fit_resolution, fo);
        improving = improving && fit.misfit_sup < previous;
        previous = fit.misfit_sup;
        last_misfit = fit.misfit_sup;
        sup_target = fit.target.cwiseAbs().maxCoeff();
        harmonic = harmonic && fit.harmonicity_residual <= 1e-10;
        fits.push_back({{"s", fit.s}, {"R", R}, {"misfit", fit.misfit_sup}, {"misfit_L2", fit.misfit_l2},
                        {"rho", fit.rho}, {"ridge_retried", fit.ridge_retried},
                        {"harmonicity_residual", fit.harmonicity_residual}});
        std::ostringstream name;
        name << "fit_R" << R << ".csv";
        out.files[name.str()] = capture([&](std::ostream& os) { write_fit_csv(os, fit); });
    }
    out.numbers["fits"] = fits;
    out.flag("misfit_improves_with_R", improving);
    out.flag("s_harmonic", harmonic);
    out.flag("misfit_within_5_percent", last_misfit <= 0.05 * sup_target);
    out.files["fits.json"] = fits.dump(2) + "\n";
}

void run_impossibility(const ExperimentConfig& c, Outcome& out) {
    json rows = json::array();
    bool floor_respected = true;
    for (double M : c.contrasts) {
        const ImpossibilityReport rep = local_impossibility(M, c.fit_resolution);
        floor_respected = floor_respected && rep.harmonic_misfit >= rep.harnack_bound;
        if (M >= 100.0) out.flag("harmonic_misfit_at_least_1_M" + std::to_string(static_cast<int>(M)), rep.harmonic_misfit >= 1.0);
        rows.push_back({{"M", M},
                        {"harmonic_misfit", rep.harmonic_misfit},
                        {"harnack_quotient", rep.harnack_quotient},
                        {"harnack_floor", rep.harnack_bound},
                        {"fractional_s", rep.fractional_s},
                        {"fractional_R", rep.fractional_R},
                        {"fractional_misfit", rep.fractional_misfit},
                        {"fractional_relative", rep.fractional_relative}});
    }
    out.numbers["contrasts"] = rows;
    out.flag("harnack_floor_respected", floor_respected);
    out.files["impossibility.json"] = rows.dump(2) + "\n";
}

void run_acceptance_experiment(const ExperimentConfig& c, Outcome& out, std::uint64_t seed, std::ostream* log) {
    AcceptanceOptions ao;
    ao.fast = c.fast;
    ao.seed = seed;
    ao.log = log;
    const AcceptanceReport rep = run_acceptance(ao);
    json rows = json::array();
    std::ostringstream text;
    for (const auto& crit : rep.criteria) {
        print_criterion(text, crit);
        json numbers = json::object();
        for (const auto& [k, v] : crit.numbers) numbers[k] = v;
        rows.push_back({{"id", crit.id}, {"title", crit.title}, {"passed", crit.passed}, {"numbers", numbers}});
        out.flag("criterion_" + std::to_string(crit.id), crit.passed);
    }
    out.numbers["criteria"] = rows;
    out.files["acceptance.txt"] = text.str();
}

}  // namespace

void validate_for_experiment(const ExperimentConfig& c) {
    const std::string& e = c.experiment;
    const bool needs_fraction = e == "mismatch" || e == "rescaled" || e == "branching" || e == "invasion" ||
                                e == "comparison";
    if (needs_fraction && !(c.s < 1.0)) throw ConfigError(e + ": s must lie in (0,1)");
    const bool line_only = e == "rescaled" || e == "branching" || e == "invasion";
    if (line_only && c.dim != 1) throw ConfigError(e + ": this scenario is one-dimensional (grid.dim = 1)");
    if (line_only && c.sigma) throw ConfigError(e + ": the scenario fixes its own resource; remove 'sigma'");
    if (e == "branching" && c.s_prime && !(*c.s_prime > c.s)) throw ConfigError("branching: s_prime must exceed s");
    if (e == "sharmonic" || e == "impossibility") {
        if (c.fit_resolution < 8 || c.fit_resolution % 2 != 0) {
            throw ConfigError(e + ": resolution must be an even count >= 8");
        }
        for (double R : c.fit_radii) {
            const double collar = (R - 1.0) * c.fit_resolution / 2.0;
            if (e == "sharmonic" && (!(R > 1.0) || std::abs(collar - std::round(collar)) > 1e-9)) {
                throw ConfigError("sharmonic: each R must exceed 1 with (R-1)*resolution/2 an integer");
            }
        }
        if (e == "sharmonic" && c.sigma && c.sigma->kind == ResourceSpec::Kind::constant && !c.sigma->value) {
            throw ConfigError("sharmonic: a constant resource needs an explicit value");
        }
        if (e == "impossibility" && c.fit_resolution % 4 != 0) {
            throw ConfigError("impossibility: resolution must be a multiple of 4");
        }
    }
}

int run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    validate_for_experiment(config);
    const std::uint64_t seed = options.seed.value_or(config.seed);
    const fs::path dir = options.out ? *options.out : fs::path(config.output.value_or("out/" + config.experiment));
    const auto start = std::chrono::steady_clock::now();

    json summary;
    summary["experiment"] = config.experiment;
    summary["inputs"] = inputs_of(config, seed);
    Outcome out;
    int status = 0;
    try {
        const std::string& e = config.experiment;
        if (e == "eigen") run_eigen(config, out);
        else if (e == "steady") run_steady(config, out);
        else if (e == "mismatch") run_mismatch(config, out);
        else if (e == "rescaled") run_rescaled(config, out);
        else if (e == "branching") run_branching(config, out);
        else if (e == "invasion") run_invasion(config, out);
        else if (e == "comparison") run_comparison(config, out, seed);
        else if (e == "sharmonic") run_sharmonic(config, out);
        else if (e == "impossibility") run_impossibility(config, out);
        else if (e == "acceptance") run_acceptance_experiment(config, out, seed, options.log);
        bool all = true;
        for (const auto& [name, ok] : out.flags) all = all && ok;
        summary["numbers"] = out.numbers;
        summary["passed"] = out.flags;
        summary["all_passed"] = all;
        status = all ? 0 : 1;
    } catch (const std::exception& ex) {
        out.files.clear();
        summary["error"] = {{"type", "module_error"}, {"message", ex.what()}};
        summary["all_passed"] = false;
        status = 2;
    }
    summary["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    fs::create_directories(dir);
    for (const auto& [name, body] : out.files) std::ofstream(dir / name) << body;
    std::ofstream(dir / "summary.json") << summary.dump(2) << '\n';
    if (options.log) {
        if (summary.contains("error")) {
            *options.log << "error: " << summary["error"]["message"].get<std::string>() << '\n';
        }
        for (const auto& [name, ok] : out.flags) *options.log << (ok ? "PASS " : "FAIL ") << name << '\n';
        *options.log << "summary: " << (dir / "summary.json").string() << '\n';
    }
    return status;
}

}  // namespace dispersal
