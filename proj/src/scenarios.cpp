#include "dispersal/scenarios.hpp"

#include "dispersal/spectral.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dispersal {

RescaledProblem rescaled_family(const Grid& base_grid, const Field& base_sigma, double lambda) {
    require_field(base_grid, base_sigma, "sigma");
    if (!(lambda >= 1.0)) throw std::invalid_argument("rescaled_family: lambda must be >= 1");
    const double shrink = 1.0 / std::sqrt(lambda);
    std::vector<Interval> bounds;
    for (int a = 0; a < base_grid.dim(); ++a) {
        bounds.push_back({base_grid.bounds(a).lower * shrink, base_grid.bounds(a).upper * shrink});
    }
    return {Grid(base_grid.dim(), bounds, base_grid.nodes_per_axis()), lambda * base_sigma, lambda};
}

Field rescale_state(const Field& u, double lambda) { return lambda * u; }

double rescaled_instability_threshold(double c0, double r, double s, double unit_ball_constant) {
    if (!(c0 > 0.0)) throw std::invalid_argument("rescaled_instability_threshold: c0 must be positive");
    if (!(r > 0.0) || !(s > 0.0 && s < 1.0) || !(unit_ball_constant > 0.0)) {
        throw std::invalid_argument("rescaled_instability_threshold: invalid r, s or C#");
    }
    return std::pow(c0 * std::pow(r, 2.0 * s) * unit_ball_constant, -1.0 / (1.0 - s));
}

RescaledScenarioReport run_rescaled_construction(const RescaledScenarioConfig& cfg) {
    RescaledScenarioReport rep;
    rep.s = cfg.s;
    const Grid base = Grid::line({-1.0, 1.0}, cfg.nodes);
    const OperatorMatrix local = assemble_classical(base);
    rep.lambda1 = principal_eigenpair(local).eigenvalue;

    Field sigma(static_cast<Eigen::Index>(base.size()));
    for (std::size_t k = 0; k < base.size(); ++k) {
        const double x = base.node(k)[0];
        sigma[static_cast<Eigen::Index>(k)] = 2.0 * rep.lambda1 * (1.0 - x * x);
    }
    rep.base_state = minimize_energy(local, sigma);
    const Field leftover = sigma - rep.base_state.u;

    // gap ball: positive gap, largest c0 r^{2s}
    double best = 0.0;
    for (const auto& c : candidate_balls(base, cfg.radius_levels)) {
        double gap = std::numeric_limits<double>::infinity();
        for (auto i : ball_nodes(base, c.center, c.radius).indices) {
            gap = std::min(gap, leftover[static_cast<Eigen::Index>(i)]);
        }
        const double score = gap * std::pow(c.radius, 2.0 * cfg.s);
        if (gap > 0.0 && score > best) {
            best = score;
            rep.center = c.center;
            rep.radius = c.radius;
            rep.c0 = gap;
        }
    }
    if (!(rep.c0 > 0.0)) throw std::runtime_error("run_rescaled_construction: no ball with a positive gap");

    rep.unit_ball_constant = unit_ball_poincare(1, cfg.s, cfg.reference_nodes);
    rep.formula_threshold = rescaled_instability_threshold(rep.c0, rep.radius, cfg.s, rep.unit_ball_constant);
    rep.big_lambda = std::max(1.0, rep.formula_threshold);
    rep.lambda = cfg.lambda_factor * rep.big_lambda;

    const RescaledProblem scaled = rescaled_family(base, sigma, rep.lambda);
    rep.rescaled_grid = scaled.grid;
    rep.rescaled_sigma = scaled.sigma;
    const OperatorMatrix local_l = assemble_classical(scaled.grid);
    const OperatorMatrix nonlocal_l = assemble_fractional(scaled.grid, cfg.s);
    const SteadyState polished = newton_refine(local_l, scaled.sigma, rescale_state(rep.base_state.u, rep.lambda));
    rep.rescaled_state = polished.u;
    rep.rescaled_residual = polished.residual;
    rep.rescaled_newton_steps = polished.newton_iterations;

    const double shrink = 1.0 / std::sqrt(rep.lambda);
    const Point center{rep.center[0] * shrink, rep.center[1] * shrink};
    rep.certificate = instability_certificate(local_l, nonlocal_l, scaled.sigma, rep.rescaled_state,
                                              ball_nodes(scaled.grid, center, rep.radius * shrink));
    rep.certificate.scaled_threshold =
        1.0 / scaled_poincare(rep.unit_ball_constant, rep.radius * shrink, cfg.s);
    rep.v_block_eigenvalue = rep.certificate.lambda;
    rep.u_block_eigenvalue = local_block_eigenpair(local_l, scaled.sigma, rep.rescaled_state).eigenvalue;
    return rep;
}

Field bump_resource(const Grid& grid, double tau, const Point& center, double radius) {
    if (tau < 0.0) throw std::invalid_argument("bump_resource: tau must be nonnegative");
    const NodeSet ball = ball_nodes(grid, center, radius);
    return tau * ball.indicator(grid.size());
}

std::vector<double> geometric_taus(double threshold, int K) {
    std::vector<double> taus;
    for (int k = 0; k <= K; ++k) taus.push_back(threshold * (1.0 + std::pow(2.0, -k)));
    return taus;
}

SweepReport branching_sweep(const Grid& grid, double s, const Point& center, double radius,
                            const std::vector<double>& taus, const SweepOptions& opt) {
    if (taus.empty()) throw std::invalid_argument("branching_sweep: empty tau list");
    SweepReport rep;
    rep.s = s;
    rep.center = center;
    rep.radius = radius;
    rep.s_prime = opt.s_prime.value_or(0.5 * (s + 1.0));
    rep.unit_ball_constant = opt.unit_ball_constant > 0.0
                                 ? opt.unit_ball_constant
                                 : unit_ball_poincare(grid.dim(), s, opt.reference_nodes);

    const OperatorMatrix local = assemble_classical(grid);
    const OperatorMatrix nonlocal = assemble_fractional(grid, s);
    const NodeSet ball = ball_nodes(grid, center, radius);
    rep.branching_threshold = branching_threshold(local, ball).threshold;

    bool any_nontrivial = false;
    for (double tau : taus) {
        SweepPoint p;
        p.tau = tau;
        const Field sigma = tau * ball.indicator(grid.size());
        const SteadyState st = minimize_energy(local, sigma);
        p.nontrivial = st.nontrivial;
        p.residual = st.residual;
        any_nontrivial = any_nontrivial || st.nontrivial;
        p.sup_u = st.u.maxCoeff();
        p.l3_u = std::cbrt(grid.cell_volume() * st.u.array().cube().sum());
        p.l2_u = l2_norm(grid, st.u);
        p.excess = excess(local, tau, ball);
        const MismatchCertificate cert = instability_certificate(local, nonlocal, sigma, st.u, ball);
        p.gap = cert.gap;
        p.threshold = cert.threshold;
        p.certified = cert.satisfied && st.nontrivial && cert.lambda > 0.0;
        p.lambda = cert.lambda;
        p.q_value = cert.q_value;
        p.u_block = local_block_eigenpair(local, sigma, st.u).eigenvalue;
        rep.points.push_back(p);
    }
    if (!any_nontrivial) throw std::runtime_error("branching_sweep: no tau yields a nontrivial steady state");

    for (std::size_t i = 0; i < rep.points.size(); ++i) {
        const auto& p = rep.points[i];
        if (p.certified && (!rep.certified_tau || p.tau < *rep.certified_tau)) {
            rep.certified_tau = p.tau;
            rep.certified_index = i;
        }
    }

    if (opt.tau_star) {
        rep.tau_star = *opt.tau_star;
        const double gap_exp = rep.s_prime - s;
        rep.admissible_radius = std::pow(rep.unit_ball_constant * *opt.tau_star / 2.0, 1.0 / (2.0 * gap_exp));
        rep.radius_admissible = radius < *rep.admissible_radius;
        rep.eps_window = *opt.tau_star / (2.0 * std::pow(radius, 2.0 * gap_exp));
    }
    return rep;
}

BumpScenarioReport run_bump_construction(const BumpScenarioConfig& cfg) {
    BumpScenarioReport rep;
    const Grid grid = Grid::line({-1.0, 1.0}, cfg.nodes);
    const double s_prime = cfg.s_prime.value_or(0.5 * (cfg.s + 1.0));
    const OperatorMatrix local = assemble_classical(grid);
    const TauStarEstimate est = estimate_tau_star(local, cfg.center, cfg.tau_star_radii, s_prime);
    rep.tau_star = est.tau_star;
    rep.tau_star_scaled = est.scaled;

    const NodeSet ball = ball_nodes(grid, cfg.center, cfg.radius);
    const double threshold = branching_threshold(local, ball).threshold;
    SweepOptions opt;
    opt.s_prime = s_prime;
    opt.tau_star = est.tau_star;
    rep.sweep = branching_sweep(grid, cfg.s, cfg.center, cfg.radius, geometric_taus(threshold, cfg.levels), opt);
    return rep;
}

void write_sweep_csv(std::ostream& os, const SweepReport& report) {
    const auto old = os.precision(17);
    os << "# s=" << report.s << '\n';
    os << "# x0=" << report.center[0] << ',' << report.center[1] << '\n';
    os << "# r=" << report.radius << '\n';
    os << "# branching_threshold=" << report.branching_threshold << '\n';
    os << "tau,sup_u,L3_u,excess,gap,threshold,certified\n";
    for (const auto& p : report.points) {
        os << p.tau << ',' << p.sup_u << ',' << p.l3_u << ',' << p.excess << ',' << p.gap << ',' << p.threshold
           << ',' << (p.certified ? 1 : 0) << '\n';
    }
    os.precision(old);
}

}  // namespace dispersal
