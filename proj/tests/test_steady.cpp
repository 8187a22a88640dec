#include "dispersal/spectral.hpp"
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

Field bump_resource(const Grid& g, double tau, double r) {
    Field sigma = constant(g, 0.0);
    for (std::size_t k : ball_nodes(g, {0.0, 0.0}, r).indices) sigma[static_cast<Eigen::Index>(k)] = tau;
    return sigma;
}

}  // namespace

TEST_CASE("energy functional") {
    const Grid g = Grid::line({-1.0, 1.0}, 96);
    const OperatorMatrix op = assemble_fractional(g, 0.5);
    const Field sigma = constant(g, 3.0);

    const EnergyReport zero = energy(op, sigma, constant(g, 0.0));
    CHECK(zero.value == 0.0);

    const Field u = random_field(g.size(), 5);
    const EnergyReport e = energy(op, sigma, u);
    CHECK(e.value == doctest::Approx(e.diffusion + e.resource + e.cubic).epsilon(1e-14));
    CHECK(e.diffusion >= 0.0);
    CHECK(e.cubic >= 0.0);

    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Field w = random_field(g.size(), seed);
        CHECK(energy(op, sigma, w.cwiseAbs()).value <= energy(op, sigma, w).value + 1e-14);
    }

    SUBCASE("small-amplitude expansion") {
        const Field w = random_field(g.size(), 9).cwiseAbs();
        const double quad = 0.5 * op.energy(w) - 0.5 * integrate(g, (sigma.array() * w.array().square()).matrix());
        const double cub = integrate(g, w.array().cube().matrix()) / 3.0;
        for (double eps : {1e-2, 1e-3}) {
            const double expected = eps * eps * quad + eps * eps * eps * cub;
            CHECK(std::abs(energy(op, sigma, eps * w).value - expected) <= 1e-8 * std::abs(expected));
        }
    }
    SUBCASE("coercive along phi_1") {
        const Field phi = principal_eigenpair(op).eigenfunction;
        double prev = energy(op, sigma, phi).value;
        for (double c : {10.0, 100.0, 1000.0}) {
            const double next = energy(op, sigma, c * phi).value;
            CHECK(next > prev);
            prev = next;
        }
    }
}

TEST_CASE("trivial steady states") {
    const Grid g = Grid::line({-1.0, 1.0}, 96);
    for (double s : {0.5, 1.0}) {
        CAPTURE(s);
        const OperatorMatrix op = assemble_operator(g, s);
        const double lam = principal_eigenpair(op).eigenvalue;

        const SteadyState none = minimize_energy(op, constant(g, 0.0));
        CHECK(none.u.cwiseAbs().maxCoeff() == 0.0);
        CHECK(none.energy.value == 0.0);
        CHECK_FALSE(none.nontrivial);

        // oracle: A - c I is positive definite
        const double c = 0.5 * lam;
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
            op.matrix - c * Eigen::MatrixXd::Identity(op.size(), op.size()), Eigen::EigenvaluesOnly);
        REQUIRE(es.eigenvalues()[0] > 0.0);
        const SteadyState below = minimize_energy(op, constant(g, c));
        CHECK(below.u.cwiseAbs().maxCoeff() < 1e-8);
        CHECK_FALSE(below.nontrivial);
    }
}

TEST_CASE("nontrivial steady state") {
    const Grid g = Grid::line({-1.0, 1.0}, 128);
    for (double s : {0.5, 1.0}) {
        CAPTURE(s);
        const OperatorMatrix op = assemble_operator(g, s);
        const double lam = principal_eigenpair(op).eigenvalue;
        const Field sigma = constant(g, 2.0 * lam);
        const SteadyState st = minimize_energy(op, sigma);
        CHECK(st.nontrivial);
        CHECK(st.energy.value < 0.0);
        CHECK(st.u.minCoeff() >= 0.0);
        CHECK(st.residual <= 1e-8 * std::max(1.0, 2.0 * lam));
        CHECK(steady_residual(op, sigma, st.u) == doctest::Approx(st.residual));
        CHECK(max_principle_check(st, sigma));

        SUBCASE("second variation is nonnegative at the minimizer") {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                CHECK(second_variation(op, sigma, st.u, random_field(g.size(), seed)) >= -1e-9);
            }
        }
        SUBCASE("Newton keeps an exact root") {
            const SteadyState again = newton_refine(op, sigma, st.u);
            CHECK(again.newton_iterations == 0);
            CHECK((again.u - st.u).cwiseAbs().maxCoeff() == 0.0);
        }
        SUBCASE("Newton contracts a perturbed root") {
            Field delta = random_field(g.size(), 17);
            delta *= 1e-3 / l2_norm(g, delta);
            const Field start = (st.u + delta).cwiseMax(0.0);
            const double before = steady_residual(op, sigma, start);
            const SteadyState polished = newton_refine(op, sigma, start);
            CHECK(polished.residual <= 1e-4 * before);
        }
    }
}

TEST_CASE("Newton at zero with no resource advantage") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    const OperatorMatrix op = assemble_classical(g);
    const SteadyState st = newton_refine(op, constant(g, 0.5), constant(g, 0.0));
    CHECK(st.u.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("maximum principle") {
    const Grid g = Grid::line({-1.0, 1.0}, 128);
    const OperatorMatrix op = assemble_classical(g);

    SteadyState zero;
    zero.u = constant(g, 0.0);
    CHECK(max_principle_check(zero, constant(g, 1.0)));

    const double tau = 400.0;
    const Field sigma = bump_resource(g, tau, 0.3);
    const SteadyState st = minimize_energy(op, sigma);
    CHECK(st.nontrivial);
    CHECK(st.u.maxCoeff() <= tau);
    CHECK(max_principle_check(st, sigma));

    SteadyState violated = st;
    violated.u = constant(g, 2.0 * tau);
    CHECK_FALSE(max_principle_check(violated, sigma));
}

TEST_CASE("2D steady state") {
    const Grid g = Grid::box({-1.0, 1.0}, {-1.0, 1.0}, 16);
    const OperatorMatrix op = assemble_fractional(g, 0.5);
    const double lam = principal_eigenpair(op).eigenvalue;
    const Field sigma = constant(g, 3.0 * lam);
    const SteadyState st = minimize_energy(op, sigma);
    CHECK(st.nontrivial);
    CHECK(st.u.minCoeff() >= 0.0);
    CHECK(st.residual <= 1e-8 * 3.0 * lam);
}

TEST_CASE("steady CSV") {
    const Grid g = Grid::line({-1.0, 1.0}, 16);
    SteadyState st;
    st.u = constant(g, 0.25);
    std::ostringstream os;
    write_steady_csv(os, g, st, 0.5, "constant 1");
    const std::string text = os.str();
    CHECK(text.rfind("#", 0) == 0);
    CHECK(text.find("constant 1") != std::string::npos);
    CHECK(text.find("x,u") != std::string::npos);
}
