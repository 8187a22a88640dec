#include "dispersal/steady.hpp"

#include "dispersal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace dispersal {

namespace {

using Eigen::MatrixXd;

double sup_norm(const Field& f) { return f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff(); }

double default_tol(const Field& sigma, const SteadyOptions& options) {
    if (options.residual_tol > 0.0) return options.residual_tol;
    return 1e-8 * std::max(1.0, sup_norm(sigma));
}

// F(u) = A u - (sigma - u) u
Field euler_lagrange(const OperatorMatrix& op, const Field& sigma, const Field& u) {
    return op.matrix * u - (sigma - u).cwiseProduct(u);
}

// Smallest residual double arithmetic can certify for this problem.
double roundoff_floor(const OperatorMatrix& op, const Field& sigma, const Field& u) {
    const double scale = op.matrix.cwiseAbs().rowwise().sum().maxCoeff() + sup_norm(sigma) + sup_norm(u);
    return 32.0 * std::numeric_limits<double>::epsilon() * scale * std::max(sup_norm(u), 1e-300);
}

SteadyState finish(const OperatorMatrix& op, const Field& sigma, Field u, int descent, int newton) {
    SteadyState st;
    st.u = std::move(u);
    st.residual = steady_residual(op, sigma, st.u);
    st.energy = energy(op, sigma, st.u);
    st.nontrivial = st.energy.value < -1e-12 * op.grid.measure();
    st.descent_iterations = descent;
    st.newton_iterations = newton;
    return st;
}

}  // namespace

EnergyReport energy(const OperatorMatrix& op, const Field& sigma, const Field& u) {
    require_field(op.grid, sigma, "sigma");
    require_field(op.grid, u, "u");
    const double vol = op.grid.cell_volume();
    EnergyReport e;
    const Field au = op.matrix * u;
    e.diffusion = 0.5 * vol * u.dot(au);
    e.resource = -0.5 * vol * sigma.dot(u.cwiseProduct(u));
    e.cubic = vol * u.cwiseAbs().array().cube().sum() / 3.0;
    e.value = e.diffusion + e.resource + e.cubic;
    const Field grad = au - sigma.cwiseProduct(u) + u.cwiseAbs().cwiseProduct(u);
    e.gradient_norm = l2_norm(op.grid, grad);
    return e;
}

double steady_residual(const OperatorMatrix& op, const Field& sigma, const Field& u) {
    return sup_norm(euler_lagrange(op, sigma, u));
}

SteadyState newton_refine(const OperatorMatrix& op, const Field& sigma, const Field& u0,
                          const SteadyOptions& options) {
    require_field(op.grid, sigma, "sigma");
    require_field(op.grid, u0, "u");
    const double tol = default_tol(sigma, options);
    const double target = 1e-10 * sup_norm(sigma);

    Field u = u0.cwiseMax(0.0);
    Field f = euler_lagrange(op, sigma, u);
    double res = sup_norm(f);
    int steps = 0;
    while (steps < options.max_newton_iterations &&
           res > std::max(target, roundoff_floor(op, sigma, u))) {
        MatrixXd jac = op.matrix;
        jac.diagonal() -= sigma - 2.0 * u;
        const Eigen::PartialPivLU<MatrixXd> lu(jac);
        const double rcond = lu.rcond();
        if (!(rcond > 1e3 * std::numeric_limits<double>::epsilon())) {
            throw SteadyStateError("newton_refine: singular Jacobian", finish(op, sigma, u, 0, steps));
        }
        const Field delta = lu.solve(-f);
        double alpha = 1.0;
        bool improved = false;
        while (alpha > 1e-6) {
            Field trial = (u + alpha * delta).cwiseMax(0.0);
            Field ft = euler_lagrange(op, sigma, trial);
            const double rt = sup_norm(ft);
            if (rt < res) {
                u = std::move(trial);
                f = std::move(ft);
                res = rt;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        ++steps;
        if (!improved) break;  // stagnated at roundoff
    }
    SteadyState st = finish(op, sigma, u, 0, steps);
    if (st.residual > tol) {
        throw SteadyStateError("newton_refine: residual above tolerance", st);
    }
    return st;
}

SteadyState minimize_energy(const OperatorMatrix& op, const Field& sigma, const std::optional<Field>& seed,
                            const SteadyOptions& options) {
    require_field(op.grid, sigma, "sigma");
    if (sigma.minCoeff() < 0.0) throw std::invalid_argument("minimize_energy: sigma must be nonnegative");
    const double vol = op.grid.cell_volume();
    const double tol = default_tol(sigma, options);

    Field u;
    if (seed) {
        require_field(op.grid, *seed, "seed");
        u = seed->cwiseAbs();
    } else {
        const ReverseConditionReport rc = reverse_condition(op, sigma);
        if (!rc.holds) {
            // E(u) >= int |u|^3 / 3 here, so 0 is the only minimizer.
            return finish(op, sigma, Field::Zero(sigma.size()), 0, 0);
        }
        const Field w = rc.witness.cwiseAbs();
        const double cubic = vol * w.array().cube().sum();
        u = (rc.margin / cubic) * w;  // minimizer of eps -> E(eps w)
    }

    const double coarse = std::max(tol, 1e-4 * std::max(1.0, sup_norm(sigma)));
    MatrixXd precond = op.matrix;
    precond.diagonal().array() += sup_norm(sigma) + 1.0;
    const Eigen::LLT<MatrixXd> llt(precond);

    double e = energy(op, sigma, u).value;
    int it = 0;
    for (; it < options.max_descent_iterations; ++it) {
        const Field au = op.matrix * u;
        const Field grad = au - sigma.cwiseProduct(u) + u.cwiseAbs().cwiseProduct(u);
        if (sup_norm(grad) < coarse) break;
        const Field dir = -llt.solve(grad);
        const double slope = vol * grad.dot(dir);
        double alpha = 1.0;
        bool accepted = false;
        while (alpha > 1e-12) {
            Field trial = (u + alpha * dir).cwiseAbs();
            const double et = energy(op, sigma, trial).value;
            if (et <= e + 1e-4 * alpha * slope) {
                u = std::move(trial);
                e = et;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
    }

    try {
        SteadyState st = newton_refine(op, sigma, u, options);
        st.descent_iterations = it;
        st.nontrivial = st.energy.value < -1e-12 * op.grid.measure();
        return st;
    } catch (const SteadyStateError& err) {
        SteadyState last = finish(op, sigma, u, it, 0);
        throw SteadyStateError(std::string("minimize_energy: descent stagnated (") + err.what() + ")", last);
    }
}

bool max_principle_check(const SteadyState& state, const Field& sigma, double tol) {
    if (state.u.size() == 0) return true;
    return state.u.maxCoeff() <= sup_norm(sigma) + tol;
}

double second_variation(const OperatorMatrix& op, const Field& sigma, const Field& u, const Field& d) {
    const double vol = op.grid.cell_volume();
    return vol * (d.dot(op.matrix * d) - sigma.dot(d.cwiseProduct(d)) + 2.0 * u.dot(d.cwiseProduct(d)));
}

void write_steady_csv(std::ostream& os, const Grid& grid, const SteadyState& state, double s,
                      const std::string& sigma_descriptor) {
    const auto old = os.precision(17);
    os << "# s=" << s << '\n';
    os << "# sigma=" << sigma_descriptor << '\n';
    os << "# residual=" << state.residual << '\n';
    os << "# energy=" << state.energy.value << '\n';
    os << (grid.dim() == 1 ? "x,u\n" : "x,y,u\n");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point p = grid.node(k);
        os << p[0] << ',';
        if (grid.dim() == 2) os << p[1] << ',';
        os << state.u[static_cast<Eigen::Index>(k)] << '\n';
    }
    os.precision(old);
}

}  // namespace dispersal
