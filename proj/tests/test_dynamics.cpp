#include "dispersal/dynamics.hpp"
#include "dispersal/spectral.hpp"
#include "dispersal/stability.hpp"
#include "dispersal/steady.hpp"

#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

using namespace dispersal;

namespace {

Field constant(const Grid& g, double c) { return Field::Constant(static_cast<Eigen::Index>(g.size()), c); }

Field random_field(std::size_t n, std::uint64_t seed, double lo, double hi) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    Field f(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = d(rng);
    return f;
}

CoupledStepper make_stepper(const Grid& g, double s) {
    return CoupledStepper(assemble_classical(g), assemble_fractional(g, s));
}

}  // namespace

TEST_CASE("stepper preconditions") {
    const Grid g = Grid::line({-1.0, 1.0}, 32);
    CHECK_THROWS_AS(CoupledStepper(assemble_fractional(g, 0.5), assemble_fractional(g, 0.5)), std::invalid_argument);
    CHECK_THROWS_AS(CoupledStepper(assemble_classical(g), assemble_fractional(Grid::line({-1.0, 1.0}, 16), 0.5)),
                    std::invalid_argument);

    CoupledStepper st = make_stepper(g, 0.5);
    const Field sigma = constant(g, 4.0);
    const SystemState s0{0.0, constant(g, 1.0), constant(g, 1.0)};
    const double bound = admissible_step(sigma, s0.u, s0.v);
    CHECK(bound == doctest::Approx(1.0 / 13.0));
    try {
        st.step(s0, sigma, 2.0 * bound);
        FAIL("expected a step size error");
    } catch (const StepSizeError& e) {
        CHECK(e.admissible() == doctest::Approx(bound));
    }
    CHECK_THROWS_AS(st.step(s0, sigma, 0.0), StepSizeError);
    CHECK_NOTHROW(st.step(s0, sigma, bound));
}

TEST_CASE("zero stays zero") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    CoupledStepper st = make_stepper(g, 0.5);
    const Field z = constant(g, 0.0);
    const Trajectory tr = simulate(st, z, z, constant(g, 5.0), 1.0, 0.05, 4);
    for (const auto& s : tr.samples) {
        CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
        CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("pure dissipation") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    CoupledStepper st = make_stepper(g, 0.5);
    const Field u0 = random_field(g.size(), 1, 0.0, 1.0);
    const Field v0 = random_field(g.size(), 2, 0.0, 1.0);
    const Trajectory tr = simulate(st, u0, v0, constant(g, 0.0), 1.0, 0.01, 1);
    REQUIRE(tr.samples.size() == 101);
    REQUIRE(tr.diagnostics.size() == tr.samples.size());
    for (std::size_t k = 1; k < tr.diagnostics.size(); ++k) {
        CHECK(tr.diagnostics[k].t > tr.diagnostics[k - 1].t);
        CHECK(tr.diagnostics[k].l2_u < tr.diagnostics[k - 1].l2_u);
        CHECK(tr.diagnostics[k].l2_v < tr.diagnostics[k - 1].l2_v);
        CHECK(tr.diagnostics[k].min_u >= 0.0);
        CHECK(tr.diagnostics[k].min_v >= 0.0);
    }
    const TrajectoryDiagnostics d = diagnose(st.local(), constant(g, 0.0), tr.samples.back());
    CHECK(d.l2_u == tr.diagnostics.back().l2_u);
    CHECK(d.max_v == tr.samples.back().v.maxCoeff());
}

TEST_CASE("nonnegativity with resource") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    CoupledStepper st = make_stepper(g, 0.3);
    const Field sigma = random_field(g.size(), 3, 0.0, 10.0);
    const Trajectory tr = simulate(st, random_field(g.size(), 4, 0.0, 2.0), random_field(g.size(), 5, 0.0, 2.0),
                                   sigma, 0.5, 0.02, 5);
    for (const auto& s : tr.samples) {
        CHECK(s.u.minCoeff() >= 0.0);
        CHECK(s.v.minCoeff() >= 0.0);
    }
    CHECK(tr.samples.front().t == 0.0);
    CHECK(tr.samples.back().t == doctest::Approx(0.5));
}

TEST_CASE("equilibrium preservation") {
    const Grid g = Grid::line({-1.0, 1.0}, 96);
    CoupledStepper st = make_stepper(g, 0.5);
    const double lam = principal_eigenpair(st.local()).eigenvalue;
    const Field sigma = constant(g, 2.0 * lam);
    const SteadyState ut = minimize_energy(st.local(), sigma);
    REQUIRE(ut.nontrivial);
    const Field z = constant(g, 0.0);
    const Trajectory tr = simulate(st, ut.u, z, sigma, 1.0, 0.5 * admissible_step(sigma, ut.u, z), 1000000);
    CHECK((tr.samples.back().u - ut.u).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK(tr.samples.back().v.cwiseAbs().maxCoeff() == 0.0);

    const SteadyState vt = minimize_energy(st.nonlocal(), sigma);
    REQUIRE(vt.nontrivial);
    const Trajectory tv = simulate(st, z, vt.u, sigma, 1.0, 0.5 * admissible_step(sigma, z, vt.u), 1000000);
    CHECK((tv.samples.back().v - vt.u).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("invasion") {
    const Grid g = Grid::line({-1.0, 1.0}, 128);
    CoupledStepper st = make_stepper(g, 0.5);
    Field sigma = constant(g, 0.0);
    const NodeSet ball = ball_nodes(g, {0.0, 0.0}, 0.1);
    for (std::size_t k : ball.indices) sigma[static_cast<Eigen::Index>(k)] = 400.0;
    const SteadyState ut = minimize_energy(st.local(), sigma);
    const MismatchCertificate c = instability_certificate(st.local(), st.nonlocal(), sigma, ut.u, ball);
    REQUIRE(c.satisfied);

    const GrowthReport a = invasion_experiment(st, ut.u, c.witness, 1e-4, sigma, 1.0, c.lambda);
    CHECK(a.growing);
    CHECK((a.initial_rate > 0.0) == (c.lambda > 0.0));
    CHECK(a.lambda == c.lambda);
    const GrowthReport b = invasion_experiment(st, ut.u, c.witness, 5e-5, sigma, 1.0, c.lambda);
    CHECK(std::abs(b.initial_rate / a.initial_rate - 1.0) < 0.05);

    const Field z = constant(g, 0.0);
    const GrowthReport none = invasion_experiment(st, z, c.witness, 1e-4, z, 1.0);
    CHECK(none.initial_rate < 0.0);
    CHECK_FALSE(none.growing);

    CHECK_THROWS_AS(invasion_experiment(st, ut.u, c.witness, 0.1, sigma, 1.0), std::invalid_argument);
}

TEST_CASE("comparison harness") {
    const Grid g = Grid::line({-1.0, 1.0}, 64);
    const OperatorMatrix op = assemble_fractional(g, 0.5);

    SUBCASE("nonnegativity against zero") {
        const Reaction f = [](double v, std::size_t) { return -(2.0 - v) * v; };
        ComparisonOptions opt{3.0, 1.0, 1.0 / 16.0};
        CHECK(comparison_check(op, random_field(g.size(), 1, 0.0, 0.5), constant(g, 0.0), f, opt));
    }
    SUBCASE("linear reaction against the spectral oracle") {
        // difference phi_1 c evolves by ((1 - dt m) / (1 + dt lambda_1))^k: stays positive
        const double m = 2.0;
        const Reaction f = [m](double v, std::size_t) { return m * v; };
        const Field w0 = random_field(g.size(), 8, -1.0, 1.0);
        const Field phi = principal_eigenpair(op).eigenfunction;
        ComparisonOptions opt{m, 1.0, 1.0 / (4.0 * (m + 1.0))};
        CHECK(comparison_check(op, w0 + 0.1 * phi, w0, f, opt));
        CHECK(comparison_check(op, w0 + constant(g, 0.1), w0, f, opt));
    }
    SUBCASE("logistic reaction on random ordered pairs") {
        const Field sigma = random_field(g.size(), 21, 0.0, 5.0);
        const Reaction f = [&sigma](double v, std::size_t i) { return -(sigma[static_cast<Eigen::Index>(i)] - v) * v; };
        // on [0, 10]: |f'| <= ||sigma|| + 2 * 10
        const double lip = sigma.maxCoeff() + 20.0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const Field w0 = random_field(g.size(), 100 + seed, 0.0, 2.0);
            const Field v0 = w0 + random_field(g.size(), 200 + seed, 0.0, 2.0);
            CHECK(comparison_check(op, v0, w0, f, {lip, 1.0, 1.0 / (4.0 * (lip + 1.0))}));
        }
    }
    SUBCASE("preconditions") {
        const Reaction f = [](double v, std::size_t) { return v; };
        Field w0 = constant(g, 0.0);
        Field v0 = constant(g, 1.0);
        v0[3] = -1.0;
        CHECK_THROWS_AS(comparison_check(op, v0, w0, f, {1.0, 1.0, 0.1}), std::invalid_argument);
        CHECK_THROWS_AS(comparison_check(op, constant(g, 1.0), w0, f, {1.0, 1.0, 0.2}), StepSizeError);
    }
}

TEST_CASE("trajectory output") {
    const Grid g = Grid::line({-1.0, 1.0}, 16);
    CoupledStepper st = make_stepper(g, 0.5);
    const Trajectory tr = simulate(st, constant(g, 0.5), constant(g, 0.5), constant(g, 1.0), 0.1, 0.05, 1);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    std::istringstream in(os.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,L2_u,L2_v,max_u,max_v,energy_u");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3);

    const auto dir = std::filesystem::temp_directory_path() / "dispersal_snapshots_test";
    std::filesystem::remove_all(dir);
    write_snapshots(dir, g, tr);
    CHECK(std::filesystem::exists(dir / "snapshot_2.csv"));
    std::filesystem::remove_all(dir);
}
