#include "dispersal/operators.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace dispersal {

namespace {

void require_order(double s) {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("fractional order s must lie in (0,1)");
}

// Integral of (x^2 + y^2)^{-1-s} over [x0,x1] x [y0,y1], tensor Gauss-Legendre.
double rect_integral(double x0, double x1, double y0, double y1, double s) {
    using boost::math::quadrature::gauss;
    return gauss<double, 4>::integrate(
        [&](double x) {
            return gauss<double, 4>::integrate(
                [&](double y) { return std::pow(x * x + y * y, -1.0 - s); }, y0, y1);
        },
        x0, x1);
}

// Unit-spacing cell integral in 2D for offset (di, dj) != (0,0).
double unit_cell_2d(int di, int dj, double s) {
    const double x0 = di - 0.5, y0 = dj - 0.5;
    const int reach = std::max(std::abs(di), std::abs(dj));
    const int sub = reach <= 2 ? 8 : 1;
    const double step = 1.0 / sub;
    double total = 0.0;
    for (int a = 0; a < sub; ++a) {
        for (int b = 0; b < sub; ++b) {
            total += rect_integral(x0 + a * step, x0 + (a + 1) * step, y0 + b * step,
                                   y0 + (b + 1) * step, s);
        }
    }
    return total;
}

// Exterior of a half-plane side seen from a node at normal distance delta,
// restricted to the angular window spanned by tangential offsets [t0, t1].
double side_tail(double delta, double t0, double t1, double s) {
    using boost::math::quadrature::gauss_kronrod;
    const double phi0 = std::atan2(t0, delta);
    const double phi1 = std::atan2(t1, delta);
    const double angular = gauss_kronrod<double, 31>::integrate(
        [s](double phi) { return std::pow(std::cos(phi), 2.0 * s); }, phi0, phi1, 12, 1e-13);
    return std::pow(delta, -2.0 * s) * angular / (2.0 * s);
}

}  // namespace

double fractional_constant(int dim, double s) {
    require_order(s);
    const double n = dim;
    return std::pow(4.0, s) * std::tgamma(n / 2.0 + s) /
           (std::pow(std::numbers::pi, n / 2.0) * std::abs(std::tgamma(-s)));
}

double OperatorMatrix::energy(const Field& u) const {
    return grid.cell_volume() * u.dot(matrix * u);
}

KernelWeights::KernelWeights(const Grid& grid, double s)
    : grid_(grid), s_(s), span_(grid.nodes_per_axis()) {
    require_order(s);
    const double h = grid.spacing();
    const double scale = std::pow(h, -2.0 * s);
    if (grid.dim() == 1) {
        table_.assign(static_cast<std::size_t>(span_), 0.0);
        for (int k = 1; k < span_; ++k) {
            table_[static_cast<std::size_t>(k)] =
                scale * (std::pow(k - 0.5, -2.0 * s) - std::pow(k + 0.5, -2.0 * s)) / (2.0 * s);
        }
    } else {
        table_.assign(static_cast<std::size_t>(span_ * span_), 0.0);
        for (int dj = 0; dj < span_; ++dj) {
            for (int di = dj; di < span_; ++di) {
                if (di == 0 && dj == 0) continue;
                const double w = scale * unit_cell_2d(di, dj, s);
                table_[static_cast<std::size_t>(di + dj * span_)] = w;
                table_[static_cast<std::size_t>(dj + di * span_)] = w;
            }
        }
    }
}

double KernelWeights::cell(int di, int dj) const {
    di = std::abs(di);
    dj = std::abs(dj);
    if (grid_.dim() == 1) return table_[static_cast<std::size_t>(di)];
    return table_[static_cast<std::size_t>(di + dj * span_)];
}

double KernelWeights::tail(const Point& x) const {
    const auto& bx = grid_.bounds(0);
    if (grid_.dim() == 1) {
        return (std::pow(bx.upper - x[0], -2.0 * s_) + std::pow(x[0] - bx.lower, -2.0 * s_)) /
               (2.0 * s_);
    }
    const auto& by = grid_.bounds(1);
    return side_tail(bx.upper - x[0], by.lower - x[1], by.upper - x[1], s_) +
           side_tail(x[0] - bx.lower, by.lower - x[1], by.upper - x[1], s_) +
           side_tail(by.upper - x[1], bx.lower - x[0], bx.upper - x[0], s_) +
           side_tail(x[1] - by.lower, bx.lower - x[0], bx.upper - x[0], s_);
}

OperatorMatrix assemble_classical(const Grid& grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    const double h = grid.spacing();
    const double inv_h2 = 1.0 / (h * h);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    const int m = grid.nodes_per_axis();
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto [i, j] = grid.multi_index(static_cast<std::size_t>(k));
        a(k, k) = 2.0 * grid.dim() * inv_h2;
        auto link = [&](int ii, int jj) {
            if (ii < 0 || ii >= m || jj < 0 || jj >= m) {
                // ghost value -u puts the zero Dirichlet datum on the box face
                a(k, k) += inv_h2;
                return;
            }
            a(k, static_cast<Eigen::Index>(grid.flat_index(ii, jj))) = -inv_h2;
        };
        link(i - 1, j);
        link(i + 1, j);
        if (grid.dim() == 2) {
            link(i, j - 1);
            link(i, j + 1);
        }
    }
    return {grid, OperatorSpec{1.0, 1.0}, std::move(a)};
}

OperatorMatrix assemble_fractional(const Grid& grid, double s) {
    require_order(s);
    const double c = fractional_constant(grid.dim(), s);
    const KernelWeights w(grid, s);
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    std::vector<std::array<int, 2>> index(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) index[k] = grid.multi_index(k);

    for (Eigen::Index p = 0; p < n; ++p) {
        const auto ip = index[static_cast<std::size_t>(p)];
        for (Eigen::Index q = p + 1; q < n; ++q) {
            const auto iq = index[static_cast<std::size_t>(q)];
            const double wpq = c * w.cell(iq[0] - ip[0], iq[1] - ip[1]);
            a(p, q) = -wpq;
            a(q, p) = -wpq;
            a(p, p) += wpq;
            a(q, q) += wpq;
        }
        a(p, p) += c * w.tail(grid.node(static_cast<std::size_t>(p)));
    }
    return {grid, OperatorSpec{s, c}, std::move(a)};
}

OperatorMatrix assemble_operator(const Grid& grid, double s) {
    if (s == 1.0) return assemble_classical(grid);
    return assemble_fractional(grid, s);
}

double gagliardo_seminorm_sq(const Grid& grid, double s, const Field& u) {
    require_field(grid, u, "gagliardo_seminorm_sq");
    const KernelWeights w(grid, s);
    const double vol = grid.cell_volume();
    double interior = 0.0;
    double exterior = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p) {
        const auto ip = grid.multi_index(p);
        const double up = u[static_cast<Eigen::Index>(p)];
        for (std::size_t q = 0; q < grid.size(); ++q) {
            if (q == p) continue;
            const auto iq = grid.multi_index(q);
            const double d = up - u[static_cast<Eigen::Index>(q)];
            interior += w.cell(iq[0] - ip[0], iq[1] - ip[1]) * d * d;
        }
        // (x in cell p, y outside) and the mirrored pair
        exterior += 2.0 * w.tail(grid.node(p)) * up * up;
    }
    return vol * (interior + exterior);
}

Eigen::MatrixXd restrict_matrix(const Eigen::MatrixXd& a, std::span<const std::size_t> indices) {
    const auto m = static_cast<Eigen::Index>(indices.size());
    Eigen::MatrixXd out(m, m);
    for (Eigen::Index r = 0; r < m; ++r) {
        for (Eigen::Index c = 0; c < m; ++c) {
            out(r, c) = a(static_cast<Eigen::Index>(indices[static_cast<std::size_t>(r)]),
                          static_cast<Eigen::Index>(indices[static_cast<std::size_t>(c)]));
        }
    }
    return out;
}

void write_triplets(std::ostream& os, const OperatorMatrix& op) {
    const auto old = os.precision(17);
    for (Eigen::Index r = 0; r < op.matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < op.matrix.cols(); ++c) {
            if (op.matrix(r, c) != 0.0) os << r << ' ' << c << ' ' << op.matrix(r, c) << '\n';
        }
    }
    os.precision(old);
}

}  // namespace dispersal
