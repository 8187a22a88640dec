#pragma once

#include "dispersal/mesh.hpp"
#include "dispersal/operators.hpp"
#include "dispersal/spectral.hpp"

#include <iosfwd>
#include <vector>

namespace dispersal {

/// Quadratic form of the linearization at (u_tilde, 0), split into its parts.
struct QFormValue {
    double total = 0.0;
    double local_diffusion = 0.0;     ///< -[u]^2_{H^1}
    double nonlocal_diffusion = 0.0;  ///< -[v]^2_{H^s} (operator normalization)
    double local_reaction = 0.0;      ///< int (sigma - 2 u_tilde) u^2
    double cross = 0.0;               ///< -int u_tilde u v
    double nonlocal_reaction = 0.0;   ///< int (sigma - u_tilde) v^2
};

/// `local` is the s = 1 operator, `nonlocal` the order-s operator on the same grid.
QFormValue qform(const OperatorMatrix& local, const OperatorMatrix& nonlocal, const Field& sigma,
                 const Field& u_tilde, const Field& u, const Field& v);

struct MismatchCertificate {
    Point center{0.0, 0.0};
    double radius = 0.0;
    std::size_t ball_nodes = 0;
    double s = 0.0;
    double gap = 0.0;               ///< min over the ball of sigma - u_tilde
    double threshold = 0.0;         ///< 1 / C#(s, ball), direct restricted eigensolve
    double scaled_threshold = 0.0;  ///< 1 / (r^{2s} C#(s, B_1)), when known
    bool satisfied = false;         ///< gap > threshold
    Field witness;                  ///< v*, supported in the ball, unit L^2 norm
    double q_value = 0.0;           ///< Q(0, v*)
    QFormValue q_parts;
    double lambda = 0.0;            ///< principal eigenvalue of -(-Delta)^s + (sigma - u_tilde) on Omega
    double lambda_residual = 0.0;
};

/// v* from the ball's principal fractional eigenfunction, Q(0,v*), and the
/// principal eigenvalue of the v-block on all of Omega.
MismatchCertificate instability_certificate(const OperatorMatrix& local, const OperatorMatrix& nonlocal,
                                            const Field& sigma, const Field& u_tilde, const NodeSet& ball);

struct BallCandidate {
    Point center{0.0, 0.0};
    double radius = 0.0;
};

/// Centers at every `stride`-th node, radii width/2^k for k = 1..levels, kept
/// when the ball fits in the box.
std::vector<BallCandidate> candidate_balls(const Grid& grid, int levels, int stride = 1);

struct MismatchScan {
    MismatchCertificate best;  ///< re-verified with a direct restricted eigensolve
    std::size_t candidates = 0;
    double best_scaled_margin = 0.0;  ///< gap - scaled threshold of the chosen ball
};

/// Ranks balls by gap - 1/(r^{2s} C#(s,B_1)) and certifies the best one.
MismatchScan mismatch_scan(const OperatorMatrix& local, const OperatorMatrix& nonlocal, const Field& sigma,
                           const Field& u_tilde, const std::vector<BallCandidate>& candidates,
                           double unit_ball_constant);

/// Principal eigenvalue of diag(sigma - 2 u_tilde) - A_1: the u-block at (u_tilde, 0).
EigenReport local_block_eigenpair(const OperatorMatrix& local, const Field& sigma, const Field& u_tilde);

/// Principal eigenvalue of diag(sigma - v_tilde) - A_1: the u-block at (0, v_tilde).
EigenReport linearization_at_pure_nonlocal(const OperatorMatrix& local, const Field& sigma,
                                           const Field& v_tilde);

/// {"x0", "r", "gap", "threshold", "satisfied", "Q", "lambda", "s"}
void write_certificate_json(std::ostream& os, const MismatchCertificate& cert);

}  // namespace dispersal
