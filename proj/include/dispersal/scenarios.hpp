#pragma once

#include "dispersal/mesh.hpp"
#include "dispersal/operators.hpp"
#include "dispersal/stability.hpp"
#include "dispersal/steady.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace dispersal {

// ---------------------------------------------------------------------------
// Rescaled family: Omega_l = Omega / sqrt(l), sigma_l(x) = l sigma(sqrt(l) x).

struct RescaledProblem {
    Grid grid;    ///< same node count, bounds divided by sqrt(lambda)
    Field sigma;  ///< lambda * sigma at the mapped nodes
    double lambda = 1.0;
};

RescaledProblem rescaled_family(const Grid& base_grid, const Field& base_sigma, double lambda);

/// u_l(x) = lambda u(sqrt(lambda) x), node for node.
Field rescale_state(const Field& u, double lambda);

/// (c0 r^{2s} C#(s,B_1))^{-1/(1-s)}. Throws when c0 <= 0.
double rescaled_instability_threshold(double c0, double r, double s, double unit_ball_constant);

struct RescaledScenarioConfig {
    double s = 0.5;
    int nodes = 256;              ///< nodes on the base domain (-1,1)
    int reference_nodes = 512;    ///< resolution of the unit-ball Poincare constant
    double lambda_factor = 2.0;   ///< lambda = factor * Lambda
    int radius_levels = 4;
};

struct RescaledScenarioReport {
    double s = 0.0;
    double lambda1 = 0.0;         ///< principal Dirichlet eigenvalue of the base domain
    SteadyState base_state;
    Point center{0.0, 0.0};
    double radius = 0.0;
    double c0 = 0.0;              ///< min over the ball of sigma - u_tilde on the base domain
    double unit_ball_constant = 0.0;
    double formula_threshold = 0.0;  ///< the displayed bound on lambda
    double big_lambda = 0.0;         ///< max(1, formula_threshold)
    double lambda = 0.0;             ///< rescaling factor actually used
    Grid rescaled_grid;
    Field rescaled_sigma;
    Field rescaled_state;
    double rescaled_residual = 0.0;
    int rescaled_newton_steps = 0;
    MismatchCertificate certificate;
    double u_block_eigenvalue = 0.0;
    double v_block_eigenvalue = 0.0;
};

/// Base scenario Omega = (-1,1), sigma = 2 lambda_1 (1 - x^2), local steady state,
/// gap ball chosen to maximize c0 r^{2s}, then the pair is rescaled at lambda = factor * Lambda.
RescaledScenarioReport run_rescaled_construction(const RescaledScenarioConfig& config);

// ---------------------------------------------------------------------------
// Bump resources sigma_tau = tau chi_{B_r(x0)}.

Field bump_resource(const Grid& grid, double tau, const Point& center, double radius);

/// tau_k = threshold (1 + 2^{-k}), k = 0..K, in descending order.
std::vector<double> geometric_taus(double threshold, int K);

struct SweepPoint {
    double tau = 0.0;
    double sup_u = 0.0;
    double l3_u = 0.0;         ///< ||u_tau||_{L^3}
    double l2_u = 0.0;
    double excess = 0.0;       ///< e(tau, x0, r)
    double gap = 0.0;
    double threshold = 0.0;    ///< 1 / C#(s, B_r) on the grid
    bool certified = false;
    double lambda = 0.0;       ///< v-block principal eigenvalue
    double q_value = 0.0;
    double u_block = 0.0;      ///< u-block principal eigenvalue
    double residual = 0.0;
    bool nontrivial = false;
};

struct SweepOptions {
    std::optional<double> s_prime;      ///< defaults to (s+1)/2
    std::optional<double> tau_star;     ///< measured proxy for tau*(s', Omega)
    double unit_ball_constant = 0.0;    ///< C#(s, B_1); computed when <= 0
    int reference_nodes = 512;
};

struct SweepReport {
    double s = 0.0;
    Point center{0.0, 0.0};
    double radius = 0.0;
    double branching_threshold = 0.0;
    std::vector<SweepPoint> points;         ///< in the order of the tau list
    std::optional<double> certified_tau;    ///< smallest tau with a satisfied certificate
    std::optional<std::size_t> certified_index;
    double s_prime = 0.0;
    std::optional<double> tau_star;
    std::optional<double> admissible_radius;  ///< (C# tau*/2)^{1/(2(s'-s))}
    std::optional<bool> radius_admissible;
    std::optional<double> eps_window;         ///< tau* / (2 r^{2(s'-s)})
    double unit_ball_constant = 0.0;
};

/// Solves the local steady state for each tau and certifies the mismatch
/// against order s on the bump ball. Throws if no tau gives a nontrivial state.
SweepReport branching_sweep(const Grid& grid, double s, const Point& center, double radius,
                            const std::vector<double>& taus, const SweepOptions& options = {});

struct BumpScenarioConfig {
    double s = 0.25;
    int nodes = 512;
    double radius = 0.2;
    Point center{0.0, 0.0};
    int levels = 6;  ///< K in tau_k = threshold (1 + 2^{-k})
    std::optional<double> s_prime;
    std::vector<double> tau_star_radii{0.5, 0.25, 0.125, 0.0625};
};

struct BumpScenarioReport {
    SweepReport sweep;
    double tau_star = 0.0;
    std::vector<double> tau_star_scaled;  ///< threshold(r) r^{2s'} over the radius sweep
};

BumpScenarioReport run_bump_construction(const BumpScenarioConfig& config);

/// "tau,sup_u,L3_u,excess,gap,threshold,certified"
void write_sweep_csv(std::ostream& os, const SweepReport& report);

}  // namespace dispersal
