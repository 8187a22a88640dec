#include "dispersal/dynamics.hpp"

#include "dispersal/steady.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dispersal {

namespace {

double sup_norm(const Field& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

Eigen::MatrixXd implicit_matrix(const OperatorMatrix& op, double dt) {
    Eigen::MatrixXd m = dt * op.matrix;
    m.diagonal().array() += 1.0;
    return m;
}

}  // namespace

double admissible_step(const Field& sigma, const Field& u, const Field& v) {
    return 1.0 / (2.0 * (sup_norm(sigma) + sup_norm(u) + sup_norm(v)) + 1.0);
}

CoupledStepper::CoupledStepper(OperatorMatrix local, OperatorMatrix nonlocal)
    : local_(std::move(local)), nonlocal_(std::move(nonlocal)) {
    if (!(local_.grid == nonlocal_.grid)) throw std::invalid_argument("CoupledStepper: grids differ");
    if (!local_.spec.classical()) throw std::invalid_argument("CoupledStepper: u must diffuse classically");
}

void CoupledStepper::factorize(double dt) {
    if (dt == cached_dt_) return;
    local_solver_.compute(implicit_matrix(local_, dt));
    nonlocal_solver_.compute(implicit_matrix(nonlocal_, dt));
    cached_dt_ = dt;
}

SystemState CoupledStepper::step(const SystemState& state, const Field& sigma, double dt) {
    const Grid& g = local_.grid;
    require_field(g, sigma, "sigma");
    require_field(g, state.u, "u");
    require_field(g, state.v, "v");
    const double bound = admissible_step(sigma, state.u, state.v);
    if (!(dt > 0.0) || dt > bound * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "time step " << dt << " exceeds the admissible bound " << bound;
        throw StepSizeError(os.str(), bound);
    }
    factorize(dt);
    const Field growth = sigma - state.u - state.v;
    SystemState next;
    next.t = state.t + dt;
    next.u = local_solver_.solve(state.u + dt * growth.cwiseProduct(state.u));
    next.v = nonlocal_solver_.solve(state.v + dt * growth.cwiseProduct(state.v));
    return next;
}

TrajectoryDiagnostics diagnose(const OperatorMatrix& local, const Field& sigma, const SystemState& st) {
    const Grid& g = local.grid;
    TrajectoryDiagnostics d;
    d.t = st.t;
    d.l2_u = l2_norm(g, st.u);
    d.l2_v = l2_norm(g, st.v);
    d.min_u = st.u.minCoeff();
    d.max_u = st.u.maxCoeff();
    d.min_v = st.v.minCoeff();
    d.max_v = st.v.maxCoeff();
    d.energy_u = energy(local, sigma, st.u).value;
    return d;
}

Trajectory simulate(CoupledStepper& stepper, const Field& u0, const Field& v0, const Field& sigma, double T,
                    double dt, int sample_every) {
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("simulate: T and dt must be positive");
    if (sample_every < 1) throw std::invalid_argument("simulate: sample_every must be >= 1");
    const auto steps = static_cast<long>(std::ceil(T / dt - 1e-12));
    const double h = T / static_cast<double>(steps);
    const double guard = 10.0 * (sup_norm(sigma) + 1.0);

    Trajectory traj;
    SystemState st{0.0, u0, v0};
    traj.samples.push_back(st);
    traj.diagnostics.push_back(diagnose(stepper.local(), sigma, st));
    for (long k = 1; k <= steps; ++k) {
        st = stepper.step(st, sigma, h);
        st.t = static_cast<double>(k) * h;
        if (!st.u.allFinite() || !st.v.allFinite() || sup_norm(st.u) > guard || sup_norm(st.v) > guard) {
            std::ostringstream os;
            os << "simulate: blow-up guard tripped at t=" << st.t;
            throw std::runtime_error(os.str());
        }
        if (k % sample_every == 0 || k == steps) {
            traj.samples.push_back(st);
            traj.diagnostics.push_back(diagnose(stepper.local(), sigma, st));
        }
    }
    return traj;
}

GrowthReport invasion_experiment(CoupledStepper& stepper, const Field& u_tilde, const Field& v_star, double eps,
                                 const Field& sigma, double T, double lambda) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw std::invalid_argument("invasion_experiment: eps must lie in (0, 1e-2]");
    constexpr int kSteps = 10;
    const Field zero = Field::Zero(u_tilde.size());
    const double dt = std::min(0.5 * admissible_step(sigma, u_tilde, zero), T / kSteps);

    GrowthReport rep;
    rep.eps = eps;
    rep.lambda = lambda;
    rep.dt = dt;
    const Grid& g = stepper.local().grid;
    SystemState st{0.0, u_tilde, eps * v_star};
    const double start = l2_norm(g, st.v);
    for (int k = 0; k < kSteps; ++k) st = stepper.step(st, sigma, dt);
    const double end = l2_norm(g, st.v);
    rep.initial_rate = 2.0 * std::log(end / start) / (kSteps * dt);
    rep.growing = rep.initial_rate > 0.0;
    return rep;
}

bool comparison_check(const OperatorMatrix& op, const Field& v0, const Field& w0, const Reaction& f,
                      const ComparisonOptions& opt) {
    const Grid& g = op.grid;
    require_field(g, v0, "v0");
    require_field(g, w0, "w0");
    if ((v0 - w0).minCoeff() < 0.0) throw std::invalid_argument("comparison_check: v0 >= w0 fails at t = 0");
    if (!(opt.lipschitz >= 0.0)) throw std::invalid_argument("comparison_check: Lipschitz bound must be >= 0");
    const double limit = 1.0 / (4.0 * (opt.lipschitz + 1.0));
    if (!(opt.dt > 0.0) || opt.dt > limit) {
        std::ostringstream os;
        os << "comparison_check: dt " << opt.dt << " exceeds 1/(4(M+1)) = " << limit;
        throw StepSizeError(os.str(), limit);
    }
    if (!(opt.T > 0.0)) throw std::invalid_argument("comparison_check: T must be positive");

    const Eigen::LLT<Eigen::MatrixXd> solver(implicit_matrix(op, opt.dt));
    const double tol = 10.0 * opt.dt * opt.dt * (1.0 + opt.lipschitz) * opt.T;
    auto explicit_part = [&](const Field& x) {
        Field out(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            out[i] = x[i] - opt.dt * f(x[i], static_cast<std::size_t>(i));
        }
        return out;
    };

    Field v = v0;
    Field w = w0;
    const auto steps = static_cast<long>(std::ceil(opt.T / opt.dt - 1e-12));
    for (long k = 0; k < steps; ++k) {
        v = solver.solve(explicit_part(v));
        w = solver.solve(explicit_part(w));
        if ((v - w).minCoeff() < -tol) return false;
    }
    return true;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& trajectory) {
    const auto old = os.precision(17);
    os << "t,L2_u,L2_v,max_u,max_v,energy_u\n";
    for (const auto& d : trajectory.diagnostics) {
        os << d.t << ',' << d.l2_u << ',' << d.l2_v << ',' << d.max_u << ',' << d.max_v << ',' << d.energy_u
           << '\n';
    }
    os.precision(old);
}

void write_snapshots(const std::filesystem::path& dir, const Grid& grid, const Trajectory& trajectory) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        std::ofstream out(dir / ("snapshot_" + std::to_string(k) + ".csv"));
        out.precision(17);
        out << "# t=" << trajectory.samples[k].t << '\n';
        out << (grid.dim() == 1 ? "x,u,v\n" : "x,y,u,v\n");
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const Point p = grid.node(i);
            out << p[0] << ',';
            if (grid.dim() == 2) out << p[1] << ',';
            out << trajectory.samples[k].u[static_cast<Eigen::Index>(i)] << ','
                << trajectory.samples[k].v[static_cast<Eigen::Index>(i)] << '\n';
        }
    }
}

}  // namespace dispersal
