#include "dispersal/stability.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dispersal {

namespace {

void require_same_grid(const OperatorMatrix& local, const OperatorMatrix& nonlocal) {
    if (!(local.grid == nonlocal.grid)) throw std::invalid_argument("operators live on different grids");
    if (!local.spec.classical()) throw std::invalid_argument("the local operator must be the classical Laplacian");
}

}  // namespace

QFormValue qform(const OperatorMatrix& local, const OperatorMatrix& nonlocal, const Field& sigma,
                 const Field& u_tilde, const Field& u, const Field& v) {
    require_same_grid(local, nonlocal);
    const Grid& g = local.grid;
    require_field(g, sigma, "sigma");
    require_field(g, u_tilde, "u_tilde");
    require_field(g, u, "u");
    require_field(g, v, "v");
    const double vol = g.cell_volume();
    QFormValue q;
    q.local_diffusion = -local.energy(u);
    q.nonlocal_diffusion = -nonlocal.energy(v);
    q.local_reaction = vol * (sigma - 2.0 * u_tilde).dot(u.cwiseProduct(u));
    q.cross = -vol * u_tilde.dot(u.cwiseProduct(v));
    q.nonlocal_reaction = vol * (sigma - u_tilde).dot(v.cwiseProduct(v));
    q.total = q.local_diffusion + q.nonlocal_diffusion + q.local_reaction + q.cross + q.nonlocal_reaction;
    return q;
}

MismatchCertificate instability_certificate(const OperatorMatrix& local, const OperatorMatrix& nonlocal,
                                            const Field& sigma, const Field& u_tilde, const NodeSet& ball) {
    require_same_grid(local, nonlocal);
    const Grid& g = nonlocal.grid;
    require_field(g, sigma, "sigma");
    require_field(g, u_tilde, "u_tilde");
    if (ball.empty()) throw std::invalid_argument("instability_certificate: empty ball");

    MismatchCertificate cert;
    cert.center = ball.center;
    cert.radius = ball.radius;
    cert.ball_nodes = ball.size();
    cert.s = nonlocal.spec.order;

    cert.gap = std::numeric_limits<double>::infinity();
    for (auto i : ball.indices) {
        const auto k = static_cast<Eigen::Index>(i);
        cert.gap = std::min(cert.gap, sigma[k] - u_tilde[k]);
    }

    const EigenReport in_ball =
        principal_eigenpair(restrict_matrix(nonlocal.matrix, ball.indices), g.cell_volume());
    cert.threshold = in_ball.eigenvalue;
    cert.satisfied = cert.gap > cert.threshold;

    cert.witness = Field::Zero(static_cast<Eigen::Index>(g.size()));
    for (std::size_t r = 0; r < ball.size(); ++r) {
        cert.witness[static_cast<Eigen::Index>(ball.indices[r])] =
            in_ball.eigenfunction[static_cast<Eigen::Index>(r)];
    }

    const Field zero = Field::Zero(cert.witness.size());
    cert.q_parts = qform(local, nonlocal, sigma, u_tilde, zero, cert.witness);
    cert.q_value = cert.q_parts.total;

    const EigenReport whole = top_eigenpair(nonlocal, sigma - u_tilde);
    cert.lambda = whole.eigenvalue;
    cert.lambda_residual = whole.residual;

    if (cert.satisfied && !(cert.q_value > 0.0)) {
        throw std::logic_error("instability_certificate: mismatch holds but Q(0, v*) <= 0");
    }
    return cert;
}

std::vector<BallCandidate> candidate_balls(const Grid& grid, int levels, int stride) {
    if (stride < 1) throw std::invalid_argument("candidate_balls: stride must be positive");
    double width = grid.bounds(0).width();
    if (grid.dim() == 2) width = std::min(width, grid.bounds(1).width());
    std::vector<BallCandidate> out;
    for (int k = 1; k <= levels; ++k) {
        const double r = width / std::pow(2.0, k);
        if (r < grid.spacing()) break;
        for (std::size_t i = 0; i < grid.size(); i += static_cast<std::size_t>(stride)) {
            const Point c = grid.node(i);
            if (grid.contains_ball(c, r)) out.push_back({c, r});
        }
    }
    return out;
}

MismatchScan mismatch_scan(const OperatorMatrix& local, const OperatorMatrix& nonlocal, const Field& sigma,
                           const Field& u_tilde, const std::vector<BallCandidate>& candidates,
                           double unit_ball_constant) {
    require_same_grid(local, nonlocal);
    const Grid& g = nonlocal.grid;
    const double s = nonlocal.spec.order;
    const Field leftover = sigma - u_tilde;

    MismatchScan scan;
    const BallCandidate* best = nullptr;
    double best_margin = -std::numeric_limits<double>::infinity();
    double best_scaled = 0.0;
    for (const auto& c : candidates) {
        if (!g.contains_ball(c.center, c.radius)) continue;
        ++scan.candidates;
        double gap = std::numeric_limits<double>::infinity();
        bool any = false;
        for (std::size_t k = 0; k < g.size(); ++k) {
            if (distance(g.node(k), c.center, g.dim()) < c.radius) {
                gap = std::min(gap, leftover[static_cast<Eigen::Index>(k)]);
                any = true;
            }
        }
        if (!any) continue;
        const double scaled = 1.0 / scaled_poincare(unit_ball_constant, c.radius, s);
        if (gap - scaled > best_margin) {
            best_margin = gap - scaled;
            best_scaled = scaled;
            best = &c;
        }
    }
    if (best == nullptr) throw std::invalid_argument("mismatch_scan: no candidate ball fits in the domain");

    scan.best = instability_certificate(local, nonlocal, sigma, u_tilde,
                                        ball_nodes(g, best->center, best->radius));
    scan.best.scaled_threshold = best_scaled;
    scan.best_scaled_margin = best_margin;
    return scan;
}

EigenReport local_block_eigenpair(const OperatorMatrix& local, const Field& sigma, const Field& u_tilde) {
    return top_eigenpair(local, sigma - 2.0 * u_tilde);
}

EigenReport linearization_at_pure_nonlocal(const OperatorMatrix& local, const Field& sigma,
                                           const Field& v_tilde) {
    return top_eigenpair(local, sigma - v_tilde);
}

void write_certificate_json(std::ostream& os, const MismatchCertificate& cert) {
    nlohmann::json j;
    j["x0"] = {cert.center[0], cert.center[1]};
    j["r"] = cert.radius;
    j["gap"] = cert.gap;
    j["threshold"] = cert.threshold;
    j["satisfied"] = cert.satisfied;
    j["Q"] = cert.q_value;
    j["lambda"] = cert.lambda;
    j["s"] = cert.s;
    os << j.dump(2) << '\n';
}

}  // namespace dispersal
