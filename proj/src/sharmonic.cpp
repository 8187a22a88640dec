#include "dispersal/sharmonic.hpp"

#include "dispersal/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dispersal {

namespace {

using Eigen::MatrixXd;

struct FitGeometry {
    Grid grid;
    std::vector<std::size_t> inner;
    std::vector<std::size_t> collar;
    MatrixXd a_in;
    MatrixXd a_cross;
};

double radius_of(const Point& p, int dim) { return distance(p, {0.0, 0.0}, dim); }

FitGeometry make_geometry(double s, double R, int resolution, int dim) {
    if (!(R > 1.0)) throw std::invalid_argument("fit_s_harmonic: R must exceed 1");
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("fit_s_harmonic: s must lie in (0,1]");
    if (resolution < 8 || resolution % 2 != 0) {
        throw std::invalid_argument("fit_s_harmonic: resolution must be an even count >= 8");
    }
    const double cells = R * resolution;
    const double collar_cells = (R - 1.0) * resolution / 2.0;
    if (std::abs(cells - std::round(cells)) > 1e-9 || std::abs(collar_cells - std::round(collar_cells)) > 1e-9) {
        throw std::invalid_argument("fit_s_harmonic: R * resolution / 2 must align B_1 with the cells");
    }
    const int n = static_cast<int>(std::round(cells));
    const Grid grid = dim == 1 ? Grid::line({-R, R}, n) : Grid::box({-R, R}, {-R, R}, n);

    std::vector<std::size_t> region;  // nodes of B_R
    FitGeometry geo{grid, {}, {}, {}, {}};
    std::vector<Eigen::Index> inner_pos;
    std::vector<Eigen::Index> collar_pos;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double rad = radius_of(grid.node(k), dim);
        if (dim == 2 && rad >= R) continue;
        const auto pos = static_cast<Eigen::Index>(region.size());
        region.push_back(k);
        if (rad < 1.0) {
            geo.inner.push_back(k);
            inner_pos.push_back(pos);
        } else {
            geo.collar.push_back(k);
            collar_pos.push_back(pos);
        }
    }
    const OperatorMatrix op = assemble_operator(grid, s);
    const MatrixXd a = dim == 1 ? op.matrix : restrict_matrix(op.matrix, region);
    geo.a_in = a(inner_pos, inner_pos);
    geo.a_cross = a(inner_pos, collar_pos);
    return geo;
}

// G = -A_in^{-1} A_cross, the map from collar data to the inner trace.
MatrixXd trace_map(const FitGeometry& geo) {
    const Eigen::LLT<MatrixXd> llt(geo.a_in);
    return -llt.solve(geo.a_cross);
}

SHarmonicFit fit_geometry(FitGeometry geo, const Field& target, double s, double R, const FitOptions& opt) {
    if (target.size() != static_cast<Eigen::Index>(geo.inner.size())) {
        throw std::invalid_argument("fit_s_harmonic: target size does not match B_1");
    }
    if (!target.allFinite()) throw std::invalid_argument("fit_s_harmonic: target must be bounded");
    SHarmonicFit fit;
    fit.s = s;
    fit.R = R;
    fit.target = target;

    const MatrixXd g_map = trace_map(geo);
    const Eigen::BDCSVD<MatrixXd> svd(g_map, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Field& sv = svd.singularValues();
    const double scale = sv.squaredNorm() / static_cast<double>(g_map.rows());

    // Ridge solution g = V diag(s / (s^2 + rho)) U^T sigma; rho = 0 is the minimum-norm fit.
    auto solve_with = [&](double rho) {
        const double cutoff = sv.size() ? 1e-15 * sv[0] * static_cast<double>(sv.size()) : 0.0;
        Field filt(sv.size());
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            filt[i] = sv[i] > cutoff ? sv[i] / (sv[i] * sv[i] + rho) : 0.0;
        }
        return Field(svd.matrixV() * filt.cwiseProduct(svd.matrixU().transpose() * target));
    };
    fit.rho = opt.ridge * scale;
    fit.g = solve_with(fit.rho);
    if (!fit.g.allFinite()) {
        if (opt.ridge != 0.0) throw std::runtime_error("fit_s_harmonic: least-squares solve failed");
        fit.ridge_retried = true;
        fit.rho = 1e-10 * scale;
        fit.g = solve_with(fit.rho);
        if (!fit.g.allFinite()) throw std::runtime_error("fit_s_harmonic: least-squares solve failed");
    }
    fit.u_inner = g_map * fit.g;

    const Field diff = fit.u_inner - target;
    fit.misfit_sup = diff.cwiseAbs().maxCoeff();
    fit.misfit_l2 = std::sqrt(geo.grid.cell_volume() * diff.squaredNorm());
    const double gsup = fit.g.size() ? fit.g.cwiseAbs().maxCoeff() : 0.0;
    const Field harm = geo.a_in * fit.u_inner + geo.a_cross * fit.g;
    fit.harmonicity_residual = gsup > 0.0 ? harm.cwiseAbs().maxCoeff() / gsup : harm.cwiseAbs().maxCoeff();

    fit.grid = geo.grid;
    fit.inner = std::move(geo.inner);
    fit.collar = std::move(geo.collar);
    return fit;
}

}  // namespace

SHarmonicFit fit_s_harmonic(const Resource& sigma, double s, double R, int resolution, const FitOptions& opt) {
    FitGeometry geo = make_geometry(s, R, resolution, opt.dim);
    Field target(static_cast<Eigen::Index>(geo.inner.size()));
    for (std::size_t r = 0; r < geo.inner.size(); ++r) {
        target[static_cast<Eigen::Index>(r)] = sigma(geo.grid.node(geo.inner[r]));
    }
    return fit_geometry(std::move(geo), target, s, R, opt);
}

SHarmonicFit fit_s_harmonic(const Field& target_inner, double s, double R, int resolution, const FitOptions& opt) {
    return fit_geometry(make_geometry(s, R, resolution, opt.dim), target_inner, s, R, opt);
}

Field s_harmonic_trace(const Field& g_collar, double s, double R, int resolution, int dim) {
    const FitGeometry geo = make_geometry(s, R, resolution, dim);
    if (g_collar.size() != static_cast<Eigen::Index>(geo.collar.size())) {
        throw std::invalid_argument("s_harmonic_trace: collar data has the wrong size");
    }
    const Eigen::LLT<MatrixXd> llt(geo.a_in);
    return -llt.solve(geo.a_cross * g_collar);
}

Resource contrast_resource(double M) {
    if (!(M > 0.0)) throw std::invalid_argument("contrast_resource: M must be positive");
    return [M](const Point& p) {
        const double r = std::sqrt(p[0] * p[0] + p[1] * p[1]);
        constexpr double inner = 1.0 / 16.0;
        constexpr double outer = 1.0 / 10.0;
        const double low = std::min(M, 1.0);
        if (r <= inner) return M;
        if (r >= outer) return low;
        const double t = (r - inner) / (outer - inner);
        const double smooth = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);  // C^2 step
        return M + (low - M) * smooth;
    };
}

ImpossibilityReport local_impossibility(double M, int resolution, double fractional_s, double fractional_R) {
    ImpossibilityReport rep;
    rep.M = M;
    const Resource sigma = contrast_resource(M);
    constexpr double harmonic_R = 1.5;

    const FitGeometry geo = make_geometry(1.0, harmonic_R, resolution, 1);
    const SHarmonicFit harmonic = fit_s_harmonic(sigma, 1.0, harmonic_R, resolution);
    rep.harmonic_misfit = harmonic.misfit_sup;

    // Discrete Poisson kernels: columns of the trace map, positive in B_1.
    const MatrixXd g_map = trace_map(geo);
    std::vector<Eigen::Index> quarter;
    for (std::size_t r = 0; r < geo.inner.size(); ++r) {
        if (radius_of(geo.grid.node(geo.inner[r]), 1) < 0.25) quarter.push_back(static_cast<Eigen::Index>(r));
    }
    rep.harnack_quotient = 1.0;
    for (Eigen::Index c = 0; c < g_map.cols(); ++c) {
        const Field col = g_map.col(c)(quarter);
        if (col.maxCoeff() <= 0.0) continue;
        rep.harnack_quotient = std::max(rep.harnack_quotient, col.maxCoeff() / col.minCoeff());
    }
    rep.harnack_bound = (M - rep.harnack_quotient) / (1.0 + rep.harnack_quotient);

    rep.fractional_s = fractional_s;
    rep.fractional_R = fractional_R;
    const SHarmonicFit frac = fit_s_harmonic(sigma, fractional_s, fractional_R, resolution);
    rep.fractional_misfit = frac.misfit_sup;
    rep.fractional_relative = frac.misfit_sup / std::max(M, 1.0);
    return rep;
}

void write_fit_csv(std::ostream& os, const SHarmonicFit& fit) {
    const auto old = os.precision(17);
    os << "# s=" << fit.s << '\n' << "# R=" << fit.R << '\n' << "# rho=" << fit.rho << '\n';
    os << "# misfit_sup=" << fit.misfit_sup << '\n';
    const bool two_d = fit.grid.dim() == 2;
    os << (two_d ? "x,y,u\n" : "x,u\n");
    std::vector<std::pair<std::size_t, double>> rows;
    for (std::size_t r = 0; r < fit.inner.size(); ++r) rows.emplace_back(fit.inner[r], fit.u_inner[static_cast<Eigen::Index>(r)]);
    for (std::size_t r = 0; r < fit.collar.size(); ++r) rows.emplace_back(fit.collar[r], fit.g[static_cast<Eigen::Index>(r)]);
    std::sort(rows.begin(), rows.end());
    for (const auto& [k, value] : rows) {
        const Point p = fit.grid.node(k);
        os << p[0] << ',';
        if (two_d) os << p[1] << ',';
        os << value << '\n';
    }
    os.precision(old);
}

}  // namespace dispersal
