#pragma once

#include "dispersal/mesh.hpp"
#include "dispersal/operators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace dispersal {

/// Eigensolver failed to reach its residual target.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

struct EigenOptions {
    double residual_tol = 1e-10;
    int max_iterations = 2000;
    std::uint64_t restart_seed = 0x5eed;
};

/// Smallest eigenpair of a symmetric matrix. The eigenfunction is scaled to
/// unit L^2 norm under the h^n mass and signed to have a nonnegative sum.
struct EigenReport {
    double eigenvalue = 0.0;
    Field eigenfunction;
    /// ||B phi - lambda phi|| / (max(|lambda|, 1) ||phi||), evaluated in extended precision.
    double residual = 0.0;
    int iterations = 0;
};

/// Inverse iteration from the all-ones vector with a Gershgorin shift below the
/// spectrum, polished by Rayleigh-quotient iteration. For Z-matrices the result
/// is checked to be single-signed (Perron); otherwise one seeded random restart
/// is attempted before giving up.
EigenReport principal_eigenpair(const Eigen::MatrixXd& sym, double cell_volume,
                                const EigenOptions& options = {});
EigenReport principal_eigenpair(const OperatorMatrix& op, const EigenOptions& options = {});

/// Principal eigenvalue of diag(potential) - A, i.e. the top of the spectrum of
/// the linear operator -(-Delta)^s + potential. Eigenfunction is the principal one.
EigenReport top_eigenpair(const OperatorMatrix& op, const Field& potential,
                          const EigenOptions& options = {});

/// C#(s, region) = 1 / lambda_1 of A restricted to the region.
double poincare_constant(const OperatorMatrix& op, const std::optional<NodeSet>& region = std::nullopt);
double poincare_constant(const Grid& grid, double s, const std::optional<NodeSet>& region = std::nullopt);

/// C#(s, B_1) for the unit ball, at the given number of nodes across its diameter.
double unit_ball_poincare(int dim, double s, int nodes_across);

/// r^{2s} C#(s, B_1).
double scaled_poincare(double unit_ball_constant, double radius, double s);

struct ReverseConditionReport {
    bool holds = false;
    Field witness;              ///< eigenfunction of A - diag(sigma), unit L^2 norm
    double margin = 0.0;        ///< -nu, the value of int sigma u^2 - energy at the witness
    double nu = 0.0;            ///< smallest eigenvalue of A - diag(sigma)
    double lambda1 = 0.0;       ///< principal eigenvalue of A
    bool sufficient_check = false;  ///< lambda_1 int phi_1^2 < int sigma phi_1^2
};

ReverseConditionReport reverse_condition(const OperatorMatrix& op, const Field& sigma);

/// e(tau, x0, r) = sup over unit-L^2 u of tau int_B u^2 - energy(u).
double excess(const OperatorMatrix& op, double tau, const NodeSet& ball);

struct BranchingSample {
    double tau = 0.0;
    double excess = 0.0;
};

struct BranchingCurve {
    Point center{0.0, 0.0};
    double radius = 0.0;
    std::vector<BranchingSample> samples;  ///< sorted by tau
    double threshold = 0.0;                ///< estimate of the branching threshold
    double bracket_low = 0.0;
    double bracket_high = 0.0;
    double tolerance = 0.0;
    double excess_below = 0.0;  ///< e(threshold - tol)
    double excess_above = 0.0;  ///< e(threshold + tol)
    bool continuous = false;    ///< e(threshold + tol) <= 2 tol
    std::optional<double> s_prime;
    std::optional<double> lower_bound;  ///< r^{-2s'} tau*, when a tau* estimate is supplied
};

struct BranchingOptions {
    double tolerance = 0.0;  ///< <= 0 selects 1e-6 * lambda_1(Omega)
    double tau_cap = 1e8;
};

/// Bisection for sup{tau : e(tau) <= 0} on a bracket [0, tau_hi], tau_hi doubled
/// until e > 0.
BranchingCurve branching_threshold(const OperatorMatrix& op, const NodeSet& ball,
                                   const BranchingOptions& options = {});

/// Adds the r^{-2s'} tau* lower-bound value to a curve.
void attach_lower_bound(BranchingCurve& curve, double s_prime, double tau_star);

struct TauStarEstimate {
    double s_prime = 0.0;
    double tau_star = 0.0;            ///< min over the sweep of threshold * r^{2s'}
    std::vector<double> radii;
    std::vector<double> thresholds;
    std::vector<double> scaled;       ///< threshold * r^{2s'}
};

/// Empirical proxy for tau*(s', Omega): balls centered at x0 on a dyadic radius ladder.
TauStarEstimate estimate_tau_star(const OperatorMatrix& local_op, const Point& center,
                                  const std::vector<double>& radii, double s_prime);

/// CSV with '#' metadata lines then "tau,excess".
void write_branching_csv(std::ostream& os, const BranchingCurve& curve);

}  // namespace dispersal
