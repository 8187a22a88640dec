#include "dispersal/spectral.hpp"
#include "dispersal/stability.hpp"
#include "dispersal/steady.hpp"

#include "doctest.h"

#include <cmath>
#include <random>
#include <sstream>

using namespace dispersal;

namespace {

Field constant(const Grid& g, double c) { return Field::Constant(static_cast<Eigen::Index>(g.size()), c); }

Field random_field(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Field f(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = d(rng);
    return f;
}

struct Setup {
    Grid grid = Grid::line({-1.0, 1.0}, 128);
    OperatorMatrix local = assemble_classical(grid);
    OperatorMatrix nonlocal = assemble_fractional(grid, 0.5);
};

}  // namespace

TEST_CASE("quadratic form basics") {
    const Setup s;
    const Field z = constant(s.grid, 0.0);
    const Field sigma = constant(s.grid, 4.0);
    CHECK(qform(s.local, s.nonlocal, sigma, z, z, z).total == 0.0);

    const Field ut = random_field(s.grid.size(), 1).cwiseAbs();
    const QFormValue q = qform(s.local, s.nonlocal, sigma, ut, random_field(s.grid.size(), 2),
                               random_field(s.grid.size(), 3));
    CHECK(q.total == doctest::Approx(q.local_diffusion + q.nonlocal_diffusion + q.local_reaction + q.cross +
                                     q.nonlocal_reaction)
                         .epsilon(1e-13));
    CHECK(q.local_diffusion <= 0.0);
    CHECK(q.nonlocal_diffusion <= 0.0);
}

TEST_CASE("quadratic form at the minimizer") {
    const Setup s;
    const double lam = principal_eigenpair(s.local).eigenvalue;
    const Field sigma = constant(s.grid, 3.0 * lam);
    const SteadyState st = minimize_energy(s.local, sigma);
    REQUIRE(st.nontrivial);
    const Field z = constant(s.grid, 0.0);

    // Q(u~,0)(u~,0) = -int u~^3
    const double q_self = qform(s.local, s.nonlocal, sigma, st.u, st.u, z).total;
    const double cube = integrate(s.grid, st.u.array().cube().matrix());
    CHECK(q_self < 0.0);
    CHECK(std::abs(q_self + cube) <= 10.0 * st.residual * std::sqrt(s.grid.measure()) * l2_norm(s.grid, st.u) + 1e-10);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        CHECK(qform(s.local, s.nonlocal, sigma, st.u, random_field(s.grid.size(), seed), z).total <= 1e-9);
    }
}

TEST_CASE("certificate with no resource") {
    const Setup s;
    const Field z = constant(s.grid, 0.0);
    const NodeSet ball = ball_nodes(s.grid, {0.0, 0.0}, 0.25);
    const MismatchCertificate c = instability_certificate(s.local, s.nonlocal, z, z, ball);
    CHECK_FALSE(c.satisfied);
    CHECK(c.gap == 0.0);
    const double lam_s = principal_eigenpair(s.nonlocal).eigenvalue;
    CHECK(c.lambda == doctest::Approx(-lam_s).epsilon(1e-10));

    const auto cands = candidate_balls(s.grid, 3, 8);
    const MismatchScan scan = mismatch_scan(s.local, s.nonlocal, z, z, cands, unit_ball_poincare(1, 0.5, 64));
    CHECK_FALSE(scan.best.satisfied);
    CHECK(scan.candidates == cands.size());
    CHECK_THROWS(mismatch_scan(s.local, s.nonlocal, z, z, {}, 1.0));
}

TEST_CASE("satisfied certificate") {
    // strong resource on a small ball, steady state of the local species
    const Setup s;
    Field sigma = constant(s.grid, 0.0);
    const NodeSet ball = ball_nodes(s.grid, {0.0, 0.0}, 0.1);
    for (std::size_t k : ball.indices) sigma[static_cast<Eigen::Index>(k)] = 400.0;
    const SteadyState st = minimize_energy(s.local, sigma);
    REQUIRE(st.nontrivial);

    const MismatchCertificate c = instability_certificate(s.local, s.nonlocal, sigma, st.u, ball);
    REQUIRE(c.satisfied);
    CHECK(c.gap > c.threshold);
    CHECK(c.q_value > 0.0);
    CHECK(c.lambda > 0.0);
    CHECK(c.lambda >= c.q_value - 1e-9);
    CHECK(l2_norm(s.grid, c.witness) == doctest::Approx(1.0).epsilon(1e-10));
    const Field inside = ball.indicator(s.grid.size());
    CHECK((c.witness.array() * (1.0 - inside.array())).abs().maxCoeff() == 0.0);
    CHECK(c.q_parts.nonlocal_reaction > c.gap - 1e-9);
    CHECK(c.q_value == doctest::Approx(c.q_parts.nonlocal_diffusion + c.q_parts.nonlocal_reaction));

    // oracle for lambda: dense eigensolve of diag(sigma - u~) - A_s
    Eigen::MatrixXd m = -s.nonlocal.matrix;
    m.diagonal() += sigma - st.u;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    CHECK(c.lambda == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-9));

    // two-sign shape of the linearization
    CHECK(local_block_eigenpair(s.local, sigma, st.u).eigenvalue < 0.0);

    std::ostringstream os;
    write_certificate_json(os, c);
    for (const char* key : {"\"x0\"", "\"r\"", "\"gap\"", "\"threshold\"", "\"satisfied\"", "\"Q\"", "\"lambda\"", "\"s\""}) {
        CHECK(os.str().find(key) != std::string::npos);
    }
}

TEST_CASE("candidate balls fit in the box") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    const auto cands = candidate_balls(g, 4, 1);
    CHECK_FALSE(cands.empty());
    for (const auto& b : cands) CHECK(g.contains_ball(b.center, b.radius));
}

TEST_CASE("linearization at a pure nonlocal state") {
    const Setup s;
    const double lam = principal_eigenpair(s.local).eigenvalue;
    const Field z = constant(s.grid, 0.0);
    CHECK(linearization_at_pure_nonlocal(s.local, z, z).eigenvalue == doctest::Approx(-lam).epsilon(1e-10));
    CHECK(linearization_at_pure_nonlocal(s.local, constant(s.grid, 2.0 * lam), z).eigenvalue ==
          doctest::Approx(lam).epsilon(1e-10));
}
