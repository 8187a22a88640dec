#pragma once

#include "dispersal/mesh.hpp"
#include "dispersal/operators.hpp"

#include <Eigen/Cholesky>

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <vector>

namespace dispersal {

struct SystemState {
    double t = 0.0;
    Field u;
    Field v;
};

struct TrajectoryDiagnostics {
    double t = 0.0;
    double l2_u = 0.0;
    double l2_v = 0.0;
    double min_u = 0.0;
    double max_u = 0.0;
    double min_v = 0.0;
    double max_v = 0.0;
    double energy_u = 0.0;
};

struct Trajectory {
    std::vector<SystemState> samples;
    std::vector<TrajectoryDiagnostics> diagnostics;  ///< one per sample
};

/// Time step rejected by the reaction-Lipschitz bound.
class StepSizeError : public std::invalid_argument {
public:
    StepSizeError(const std::string& what, double admissible)
        : std::invalid_argument(what), admissible_(admissible) {}
    double admissible() const { return admissible_; }

private:
    double admissible_;
};

/// 1 / (2 (||sigma|| + ||u|| + ||v||) + 1)
double admissible_step(const Field& sigma, const Field& u, const Field& v);

/// IMEX stepper for
///   u_t = Delta u + (sigma - (u+v)) u,  v_t = -(-Delta)^s v + (sigma - (u+v)) v.
/// Diffusion is implicit, reaction explicit. Factorizations of I + dt A are
/// cached for the last dt used.
class CoupledStepper {
public:
    CoupledStepper(OperatorMatrix local, OperatorMatrix nonlocal);

    SystemState step(const SystemState& state, const Field& sigma, double dt);

    const OperatorMatrix& local() const { return local_; }
    const OperatorMatrix& nonlocal() const { return nonlocal_; }

private:
    void factorize(double dt);

    OperatorMatrix local_;
    OperatorMatrix nonlocal_;
    double cached_dt_ = -1.0;
    Eigen::LLT<Eigen::MatrixXd> local_solver_;
    Eigen::LLT<Eigen::MatrixXd> nonlocal_solver_;
};

TrajectoryDiagnostics diagnose(const OperatorMatrix& local, const Field& sigma, const SystemState& state);

/// Runs ceil(T/dt) uniform steps of size T/ceil(T/dt), storing every
/// `sample_every`-th state plus the initial and final one.
Trajectory simulate(CoupledStepper& stepper, const Field& u0, const Field& v0, const Field& sigma, double T,
                    double dt, int sample_every = 1);

struct GrowthReport {
    double eps = 0.0;
    double initial_rate = 0.0;  ///< d/dt log ||v||^2 over the first 10 steps
    bool growing = false;
    double lambda = 0.0;        ///< certificate eigenvalue, for comparison with rate / 2
    double dt = 0.0;
};

/// Starts from (u_tilde, eps v*) and measures the early growth of ||v||^2.
GrowthReport invasion_experiment(CoupledStepper& stepper, const Field& u_tilde, const Field& v_star, double eps,
                                 const Field& sigma, double T, double lambda = 0.0);

/// Scalar reaction f(value, node index).
using Reaction = std::function<double(double, std::size_t)>;

struct ComparisonOptions {
    double lipschitz = 0.0;  ///< M, a Lipschitz bound of f on the range visited
    double T = 1.0;
    double dt = 0.0;         ///< must satisfy dt <= 1/(4(M+1))
};

/// Evolves v and w under v_t + (-Delta)^s v + f(v) = 0 (implicit diffusion,
/// explicit f) and returns whether v >= w - tol at every step, with
/// tol = 10 dt^2 (1+M) T.
bool comparison_check(const OperatorMatrix& op, const Field& v0, const Field& w0, const Reaction& f,
                      const ComparisonOptions& options);

/// "t,L2_u,L2_v,max_u,max_v,energy_u"
void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory);

/// One "x[,y],u,v" file per sample, named snapshot_<k>.csv.
void write_snapshots(const std::filesystem::path& dir, const Grid& grid, const Trajectory& trajectory);

}  // namespace dispersal
