#include "dispersal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace dispersal {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double residual_of(const MatrixXd& b, const VectorXd& x, double rho) {
    long double num = 0.0L;
    long double den = 0.0L;
    for (Index i = 0; i < b.rows(); ++i) {
        long double acc = -static_cast<long double>(rho) * x[i];
        for (Index j = 0; j < b.cols(); ++j) {
            acc += static_cast<long double>(b(i, j)) * x[j];
        }
        num += acc * acc;
        den += static_cast<long double>(x[i]) * x[i];
    }
    return static_cast<double>(std::sqrt(num / den)) / std::max(std::abs(rho), 1.0);
}

bool is_z_matrix(const MatrixXd& b) {
    for (Index j = 0; j < b.cols(); ++j) {
        for (Index i = 0; i < b.rows(); ++i) {
            if (i != j && b(i, j) > 0.0) return false;
        }
    }
    return true;
}

double gershgorin_lower(const MatrixXd& b) {
    double lower = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < b.rows(); ++i) {
        const double off = b.row(i).cwiseAbs().sum() - std::abs(b(i, i));
        lower = std::min(lower, b(i, i) - off);
    }
    return lower;
}

struct Attempt {
    VectorXd x;
    double rho = 0.0;
    double residual = std::numeric_limits<double>::infinity();
    int iterations = 0;
};

Attempt iterate(const MatrixXd& b, VectorXd x, const EigenOptions& opt, double stall_tol,
                double floor) {
    const Index n = b.rows();
    const double lb = gershgorin_lower(b);
    const double shift = lb - std::max(1.0, 1e-3 * std::abs(lb));
    const Eigen::LLT<MatrixXd> llt(b - shift * MatrixXd::Identity(n, n));

    Attempt out;
    x.normalize();
    double previous = std::numeric_limits<double>::infinity();
    for (int it = 1; it <= opt.max_iterations; ++it) {
        x = llt.solve(x);
        x.normalize();
        out.rho = x.dot(b * x);
        out.iterations = it;
        const double change = std::abs(out.rho - previous);
        previous = out.rho;
        if (change < stall_tol * std::max(1.0, std::abs(out.rho)) || it % 50 == 0) {
            out.residual = residual_of(b, x, out.rho);
            if (out.residual <= opt.residual_tol || change < stall_tol * std::max(1.0, std::abs(out.rho))) {
                break;
            }
        }
    }
    out.x = x;
    out.residual = residual_of(b, x, out.rho);

    // Rayleigh-quotient polish.
    for (int it = 0; it < 8 && out.residual > std::max(opt.residual_tol, floor) * 1e-2; ++it) {
        double rho = out.rho;
        VectorXd y = (b - rho * MatrixXd::Identity(n, n)).ldlt().solve(out.x);
        if (!y.allFinite() || y.norm() == 0.0) {
            rho -= 1e-12 * std::max(1.0, std::abs(rho));
            y = (b - rho * MatrixXd::Identity(n, n)).ldlt().solve(out.x);
            if (!y.allFinite() || y.norm() == 0.0) break;
        }
        y.normalize();
        const double rq = y.dot(b * y);
        const double res = residual_of(b, y, rq);
        ++out.iterations;
        if (res >= out.residual) break;
        out.x = y;
        out.rho = rq;
        out.residual = res;
    }
    return out;
}

bool single_signed(VectorXd& x) {
    if (x.sum() < 0.0) x = -x;
    return x.minCoeff() >= -1e-8 * x.cwiseAbs().maxCoeff();
}

}  // namespace

EigenReport principal_eigenpair(const MatrixXd& sym, double cell_volume, const EigenOptions& options) {
    const Index n = sym.rows();
    if (n == 0 || sym.cols() != n) throw std::invalid_argument("principal_eigenpair: empty or non-square matrix");
    EigenReport report;
    if (n == 1) {
        report.eigenvalue = sym(0, 0);
        report.eigenfunction = VectorXd::Constant(1, 1.0 / std::sqrt(cell_volume));
        return report;
    }
    const bool perron = is_z_matrix(sym);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() *
                         sym.cwiseAbs().rowwise().sum().maxCoeff();

    auto accept = [&](Attempt& a) {
        const bool converged = a.residual <= options.residual_tol ||
                               a.residual * std::max(std::abs(a.rho), 1.0) <= floor;
        const bool signed_ok = !perron || single_signed(a.x);
        if (!perron && a.x.sum() < 0.0) a.x = -a.x;
        return converged && signed_ok;
    };

    Attempt a = iterate(sym, VectorXd::Ones(n), options, 1e-10, floor);
    if (!accept(a)) {
        std::mt19937_64 rng(options.restart_seed);
        std::uniform_real_distribution<double> unif(0.1, 1.0);
        VectorXd start(n);
        for (Index i = 0; i < n; ++i) start[i] = unif(rng);
        Attempt b = iterate(sym, start, options, 1e-14, floor);
        b.iterations += a.iterations;
        if (!accept(b)) {
            std::ostringstream os;
            os << "principal_eigenpair did not converge: residual " << b.residual << " after "
               << b.iterations << " iterations";
            throw ConvergenceError(os.str(), b.residual);
        }
        a = std::move(b);
    }
    report.eigenvalue = a.rho;
    report.eigenfunction = a.x / std::sqrt(cell_volume);  // h^n sum phi^2 = 1
    report.residual = a.residual;
    report.iterations = a.iterations;
    return report;
}

EigenReport principal_eigenpair(const OperatorMatrix& op, const EigenOptions& options) {
    return principal_eigenpair(op.matrix, op.grid.cell_volume(), options);
}

EigenReport top_eigenpair(const OperatorMatrix& op, const Field& potential, const EigenOptions& options) {
    require_field(op.grid, potential, "potential");
    MatrixXd b = op.matrix;
    b.diagonal() -= potential;
    EigenReport r = principal_eigenpair(b, op.grid.cell_volume(), options);
    r.eigenvalue = -r.eigenvalue;
    return r;
}

double poincare_constant(const OperatorMatrix& op, const std::optional<NodeSet>& region) {
    if (!region) return 1.0 / principal_eigenpair(op).eigenvalue;
    if (region->empty()) throw std::invalid_argument("poincare_constant: empty region");
    const MatrixXd sub = restrict_matrix(op.matrix, region->indices);
    return 1.0 / principal_eigenpair(sub, op.grid.cell_volume()).eigenvalue;
}

double poincare_constant(const Grid& grid, double s, const std::optional<NodeSet>& region) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("poincare_constant: s must lie in (0,1]");
    return poincare_constant(assemble_operator(grid, s), region);
}

double unit_ball_poincare(int dim, double s, int nodes_across) {
    if (dim == 1) return poincare_constant(Grid::line({-1.0, 1.0}, nodes_across), s);
    const Grid grid = Grid::box({-1.0, 1.0}, {-1.0, 1.0}, nodes_across);
    return poincare_constant(grid, s, ball_nodes(grid, {0.0, 0.0}, 1.0));
}

double scaled_poincare(double unit_ball_constant, double radius, double s) {
    return std::pow(radius, 2.0 * s) * unit_ball_constant;
}

ReverseConditionReport reverse_condition(const OperatorMatrix& op, const Field& sigma) {
    require_field(op.grid, sigma, "sigma");
    if (sigma.minCoeff() < 0.0) throw std::invalid_argument("reverse_condition: sigma must be nonnegative");
    ReverseConditionReport out;
    const double vol = op.grid.cell_volume();

    const EigenReport base = principal_eigenpair(op);
    out.lambda1 = base.eigenvalue;
    const Field& phi = base.eigenfunction;
    const double phi_sq = vol * phi.squaredNorm();
    const double sigma_phi_sq = vol * sigma.dot(phi.cwiseProduct(phi));
    out.sufficient_check = out.lambda1 * phi_sq < sigma_phi_sq;

    MatrixXd shifted = op.matrix;
    shifted.diagonal() -= sigma;
    const EigenReport shifted_pair = principal_eigenpair(shifted, vol);
    out.nu = shifted_pair.eigenvalue;
    out.witness = shifted_pair.eigenfunction;
    out.holds = out.nu < 0.0;
    const Field& w = out.witness;
    out.margin = vol * sigma.dot(w.cwiseProduct(w)) - op.energy(w);
    return out;
}

double excess(const OperatorMatrix& op, double tau, const NodeSet& ball) {
    MatrixXd shifted = op.matrix;
    for (auto i : ball.indices) shifted(static_cast<Index>(i), static_cast<Index>(i)) -= tau;
    return -principal_eigenpair(shifted, op.grid.cell_volume()).eigenvalue;
}

BranchingCurve branching_threshold(const OperatorMatrix& op, const NodeSet& ball,
                                   const BranchingOptions& options) {
    BranchingCurve curve;
    curve.center = ball.center;
    curve.radius = ball.radius;
    double tol = options.tolerance;
    if (!(tol > 0.0)) tol = 1e-6 * principal_eigenpair(op).eigenvalue;
    curve.tolerance = tol;

    auto sample = [&](double tau) {
        const double e = excess(op, tau, ball);
        curve.samples.push_back({tau, e});
        return e;
    };

    double lo = 0.0;
    double hi = 1.0;
    if (sample(lo) > 0.0) throw std::logic_error("branching_threshold: e(0) > 0");
    while (sample(hi) <= 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > options.tau_cap) {
            throw std::runtime_error("branching_threshold: bracket expansion exceeded the safety cap");
        }
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (sample(mid) <= 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    curve.bracket_low = lo;
    curve.bracket_high = hi;
    curve.threshold = 0.5 * (lo + hi);
    curve.excess_below = sample(std::max(0.0, curve.threshold - tol));
    curve.excess_above = sample(curve.threshold + tol);
    curve.continuous = curve.excess_above <= 2.0 * tol;

    std::sort(curve.samples.begin(), curve.samples.end(),
              [](const BranchingSample& a, const BranchingSample& b) { return a.tau < b.tau; });
    return curve;
}

void attach_lower_bound(BranchingCurve& curve, double s_prime, double tau_star) {
    curve.s_prime = s_prime;
    curve.lower_bound = std::pow(curve.radius, -2.0 * s_prime) * tau_star;
}

TauStarEstimate estimate_tau_star(const OperatorMatrix& local_op, const Point& center,
                                  const std::vector<double>& radii, double s_prime) {
    if (radii.empty()) throw std::invalid_argument("estimate_tau_star: no radii");
    TauStarEstimate est;
    est.s_prime = s_prime;
    est.tau_star = std::numeric_limits<double>::infinity();
    for (double r : radii) {
        const NodeSet ball = ball_nodes(local_op.grid, center, r);
        const BranchingCurve curve = branching_threshold(local_op, ball);
        const double scaled = curve.threshold * std::pow(r, 2.0 * s_prime);
        est.radii.push_back(r);
        est.thresholds.push_back(curve.threshold);
        est.scaled.push_back(scaled);
        est.tau_star = std::min(est.tau_star, scaled);
    }
    return est;
}

void write_branching_csv(std::ostream& os, const BranchingCurve& curve) {
    const auto old = os.precision(17);
    os << "# x0=" << curve.center[0] << ',' << curve.center[1] << '\n';
    os << "# r=" << curve.radius << '\n';
    if (curve.s_prime) os << "# s_prime=" << *curve.s_prime << '\n';
    if (curve.lower_bound) os << "# lower_bound=" << *curve.lower_bound << '\n';
    os << "# threshold=" << curve.threshold << '\n';
    os << "# bracket=" << curve.bracket_low << ',' << curve.bracket_high << '\n';
    os << "tau,excess\n";
    for (const auto& s : curve.samples) os << s.tau << ',' << s.excess << '\n';
    os.precision(old);
}

}  // namespace dispersal
