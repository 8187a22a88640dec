#include "dispersal/operators.hpp"

#include "doctest.h"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace dispersal;

namespace {

Field random_field(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    Field f(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = d(rng);
    return f;
}

// weakly diagonally dominant with nonpositive off-diagonals and at least one strict row
void check_m_matrix(const Eigen::MatrixXd& a) {
    bool strict = false;
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        double off = 0.0;
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            if (r == c) continue;
            REQUIRE(a(r, c) <= 0.0);
            off += -a(r, c);
        }
        REQUIRE(a(r, r) >= off * (1.0 - 1e-14));
        strict = strict || a(r, r) > off * (1.0 + 1e-12);
    }
    REQUIRE(strict);
}

}  // namespace

TEST_CASE("normalization constant") {
    CHECK(fractional_constant(1, 0.5) == doctest::Approx(1.0 / std::numbers::pi).epsilon(1e-14));
    // 2D, s = 1/2: Gamma(3/2) 2 / (pi |Gamma(-1/2)|) = 1 / (2 pi)
    CHECK(fractional_constant(2, 0.5) == doctest::Approx(0.5 / std::numbers::pi).epsilon(1e-14));
    CHECK_THROWS_AS(fractional_constant(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(fractional_constant(1, 0.0), std::invalid_argument);
}

TEST_CASE("classical stencil") {
    const Grid g = Grid::line({-1.0, 1.0}, 512);
    const OperatorMatrix op = assemble_classical(g);
    const double h = g.spacing();
    CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    check_m_matrix(op.matrix);

    SUBCASE("constants feel only the boundary rows") {
        const Field one = Field::Ones(static_cast<Eigen::Index>(g.size()));
        const Field a1 = op.matrix * one;
        // ghost value -u places the zero datum on the face
        CHECK(a1[0] == doctest::Approx(2.0 / (h * h)));
        CHECK(op.matrix(0, 0) == doctest::Approx(3.0 / (h * h)));
        CHECK(a1[a1.size() - 1] == doctest::Approx(2.0 / (h * h)));
        CHECK(a1.segment(1, a1.size() - 2).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("first Dirichlet mode") {
        Field u(static_cast<Eigen::Index>(g.size()));
        for (std::size_t k = 0; k < g.size(); ++k) {
            u[static_cast<Eigen::Index>(k)] = std::sin(std::numbers::pi * (g.node(k)[0] + 1.0) / 2.0);
        }
        const double lam = std::numbers::pi * std::numbers::pi / 4.0;
        const Field au = op.matrix * u;
        const double rel = ((au - lam * u).cwiseAbs().array() / (lam * u.array().abs())).maxCoeff();
        CHECK(rel < 1e-3);
    }
    SUBCASE("2D five-point stencil") {
        const OperatorMatrix op2 = assemble_classical(Grid::box({0.0, 1.0}, {0.0, 1.0}, 8));
        CHECK((op2.matrix - op2.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
        check_m_matrix(op2.matrix);
        CHECK(op2.matrix(0, 0) == doctest::Approx(6.0 * 64.0));  // corner: two ghost faces
    }
}

TEST_CASE("1D fractional assembly") {
    for (double s : {0.2, 0.5, 0.9}) {
        CAPTURE(s);
        const Grid g = Grid::line({-1.0, 1.0}, 64);
        const OperatorMatrix op = assemble_fractional(g, s);
        CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
        check_m_matrix(op.matrix);

        // constants feel only the exterior tail
        const Field a1 = op.matrix * Field::Ones(64);
        const KernelWeights w(g, s);
        for (std::size_t i = 0; i < g.size(); ++i) {
            CHECK(a1[static_cast<Eigen::Index>(i)] ==
                  doctest::Approx(op.spec.normalization * w.tail(g.node(i))).epsilon(1e-10));
        }
        CHECK((op.matrix * Field::Zero(64)).norm() == 0.0);
    }
}

TEST_CASE("exact 1D cell weights") {
    // the cell integral of |t|^{-1-2s} over [(k-1/2)h, (k+1/2)h], by independent Simpson quadrature
    const double s = 0.35;
    const Grid g = Grid::line({0.0, 1.0}, 16);
    const KernelWeights w(g, s);
    const double h = g.spacing();
    for (int k : {1, 2, 5}) {
        const double a = (k - 0.5) * h, b = (k + 0.5) * h;
        const int m = 2000;
        double sum = 0.0;
        for (int i = 0; i <= m; ++i) {
            const double t = a + (b - a) * i / m;
            const double f = std::pow(t, -1.0 - 2.0 * s);
            sum += (i == 0 || i == m ? 1.0 : (i % 2 ? 4.0 : 2.0)) * f;
        }
        CHECK(w.cell(k, 0) == doctest::Approx(sum * (b - a) / (3.0 * m)).epsilon(1e-9));
        CHECK(w.cell(-k, 0) == w.cell(k, 0));
    }
}

TEST_CASE("seminorm identity (C/2)[u]^2 = h^n u^T A u") {
    for (double s : {0.3, 0.7}) {
        CAPTURE(s);
        const Grid g1 = Grid::line({-1.0, 1.0}, 40);
        const Field u1 = random_field(g1.size(), 11);
        const double c1 = fractional_constant(1, s);
        const double lhs1 = 0.5 * c1 * gagliardo_seminorm_sq(g1, s, u1);
        const double rhs1 = assemble_fractional(g1, s).energy(u1);
        CHECK(std::abs(lhs1 - rhs1) / lhs1 < 1e-10);

        const Grid g2 = Grid::box({-1.0, 1.0}, {-1.0, 1.0}, 10);
        const Field u2 = random_field(g2.size(), 12);
        const double lhs2 = 0.5 * fractional_constant(2, s) * gagliardo_seminorm_sq(g2, s, u2);
        const double rhs2 = assemble_fractional(g2, s).energy(u2);
        CHECK(std::abs(lhs2 - rhs2) / lhs2 < 1e-10);
    }
    const Grid g = Grid::line({-1.0, 1.0}, 16);
    CHECK(gagliardo_seminorm_sq(g, 0.5, Field::Zero(16)) == 0.0);
    CHECK(gagliardo_seminorm_sq(g, 0.5, random_field(16, 3)) > 0.0);
}

TEST_CASE("2D fractional assembly") {
    const Grid g = Grid::box({-1.0, 1.0}, {-1.0, 1.0}, 12);
    const OperatorMatrix op = assemble_fractional(g, 0.5);
    CHECK((op.matrix - op.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    check_m_matrix(op.matrix);
    const KernelWeights w(g, 0.5);
    CHECK(w.cell(2, 1) == w.cell(1, 2));
    CHECK(w.cell(-2, 1) == w.cell(2, -1));

    SUBCASE("tail of the center node against a polar oracle") {
        // exterior of the square seen from its center: 4 * int_{-pi/4}^{pi/4} (cos phi)^{2s} dphi / (2s), unit half-width
        const double s = 0.5;
        const int m = 20000;
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            const double phi = -std::numbers::pi / 4.0 + (i + 0.5) * (std::numbers::pi / 2.0) / m;
            acc += std::pow(std::cos(phi), 2.0 * s);
        }
        const double oracle = 4.0 * acc * (std::numbers::pi / 2.0) / m / (2.0 * s);
        CHECK(w.tail({0.0, 0.0}) == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("discrete maximum principle") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    for (double s : {0.4, 1.0}) {
        const OperatorMatrix op = assemble_operator(g, s);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Field f = random_field(g.size(), seed, 0.0, 1.0);
            const Field u = op.matrix.llt().solve(f);
            CHECK(u.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("restriction and triplet dump") {
    const Grid g = Grid::line({-1.0, 1.0}, 8);
    const OperatorMatrix op = assemble_fractional(g, 0.5);
    const std::vector<std::size_t> idx{2, 5};
    const Eigen::MatrixXd sub = restrict_matrix(op.matrix, idx);
    CHECK(sub(0, 1) == op.matrix(2, 5));
    CHECK(sub(1, 1) == op.matrix(5, 5));
    std::ostringstream os;
    write_triplets(os, op);
    std::istringstream in(os.str());
    int lines = 0, r = 0, c = 0;
    double v = 0.0;
    while (in >> r >> c >> v) {
        CHECK(v == op.matrix(r, c));
        ++lines;
    }
    CHECK(lines == 64);
}
