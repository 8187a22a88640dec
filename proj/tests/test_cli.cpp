#include "dispersal/config.hpp"
#include "dispersal/expression.hpp"
#include "dispersal/runner.hpp"

#include "doctest.h"
#include "json.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dispersal;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    return dir;
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

}  // namespace

TEST_CASE("expression grammar") {
    const auto at = [](const std::string& text, double x, double y = 0.0) {
        return Expression::parse(text)({x, y});
    };
    CHECK(at("2.0*(1-x^2)", 0.5) == doctest::Approx(1.5));
    CHECK(at("1+2*3", 0.0) == 7.0);
    CHECK(at("(1+2)*3", 0.0) == 9.0);
    CHECK(at("8/4/2", 0.0) == 1.0);
    CHECK(at("2^3^2", 0.0) == 512.0);
    CHECK(at("-x^2", 3.0) == -9.0);
    CHECK(at("x - -x", 2.0) == 4.0);
    CHECK(at("+x", 2.0) == 2.0);
    CHECK(at("1e-1*x*y", 2.0, 5.0) == doctest::Approx(1.0));
    CHECK(at(" 3 * ( x + y ) ", 1.0, 1.0) == 6.0);

    CHECK_THROWS_AS(Expression::parse(""), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("1+"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("(x"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("x)"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("sin(x)"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("2**x"), ExpressionError);
    CHECK_THROWS_AS(Expression::parse("x+y", 1), ExpressionError);
    try {
        Expression::parse("1 + $");
        FAIL("expected a parse error");
    } catch (const ExpressionError& e) {
        CHECK(e.position() == 4);
    }
}

TEST_CASE("minimal config gets defaults") {
    const ExperimentConfig c =
        parse_config(R"j({"experiment": "eigen", "s": 0.5, "grid": {"dim": 1, "bounds": [-1, 1], "n": 256}})j");
    CHECK(c.experiment == "eigen");
    CHECK(c.s == 0.5);
    CHECK(c.n == 256);
    CHECK(c.residual_tol == 1e-8);
    CHECK(c.eigen_tol == 1e-10);
    CHECK(c.seed == 20240601);
    CHECK_FALSE(c.sigma.has_value());
    CHECK(c.grid().size() == 256);

    const ExperimentConfig d = parse_config(R"j({"experiment": "eigen"})j");
    CHECK(d.dim == 1);
    CHECK(d.bounds.size() == 1);
}

TEST_CASE("resource descriptors") {
    const ExperimentConfig c = parse_config(
        R"j({"experiment": "steady", "s": 1, "grid": {"n": 64}, "sigma": {"type": "expression", "expr": "2.0*(1-x^2)"}})j");
    REQUIRE(c.sigma.has_value());
    const Field f = evaluate_resource(*c.sigma, c.grid(), 1.0);
    CHECK(f.minCoeff() >= 0.0);
    CHECK(f.maxCoeff() <= 2.0);

    const ExperimentConfig b = parse_config(
        R"j({"experiment": "steady", "grid": {"n": 64}, "sigma": {"type": "bump", "tau": 5, "center": [0.25], "radius": 0.25}})j");
    const Field fb = evaluate_resource(*b.sigma, b.grid(), 1.0);
    CHECK(fb.maxCoeff() == 5.0);
    CHECK(fb[0] == 0.0);

    const ExperimentConfig k = parse_config(R"j({"experiment": "steady", "sigma": {"type": "constant"}})j");
    CHECK(evaluate_resource(*k.sigma, k.grid(), 3.0).minCoeff() == 6.0);
}

TEST_CASE("strict validation") {
    const auto message = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message(R"j({"experiment": "eigen", "sigma_typo": 1})j").find("sigma_typo") != std::string::npos);
    CHECK(message(R"j({"experiment": "eigen", "grid": {"n": 64, "m": 3}})j").find("m") != std::string::npos);
    CHECK(message(R"j({"experiment": "nope"})j").find("nope") != std::string::npos);
    CHECK_FALSE(message(R"j({"experiment": "eigen", "s": 1.5})j").empty());
    CHECK_FALSE(message(R"j({"experiment": "eigen", "s": "half"})j").empty());
    CHECK_FALSE(message(R"j({"experiment": "eigen", "tolerances": {"residual": 0}})j").empty());
    CHECK_FALSE(message(R"j({"s": 0.5})j").empty());
    CHECK_FALSE(message(R"j([1, 2])j").empty());

    const std::string syntax = message("{\n  \"experiment\": \"eigen\",\n  \"s\": 0.5,,\n}");
    CHECK(syntax.find("line 3") != std::string::npos);
    CHECK(syntax.find("column") != std::string::npos);

    const std::string negative = message(
        R"j({"experiment": "steady", "grid": {"n": 64}, "sigma": {"type": "expression", "expr": "x"}})j");
    CHECK(negative.find("node") != std::string::npos);
    CHECK(negative.find("-0.98") != std::string::npos);
}

TEST_CASE("experiment names") {
    const auto& names = experiment_names();
    for (const char* n : {"eigen", "steady", "mismatch", "rescaled", "branching", "invasion", "comparison",
                          "sharmonic", "impossibility", "acceptance"}) {
        CHECK(std::find(names.begin(), names.end(), n) != names.end());
    }
}

TEST_CASE("runner rejects configs it cannot drive") {
    const ExperimentConfig c = parse_config(R"j({"experiment": "mismatch", "s": 1})j");
    CHECK_THROWS_AS(validate_for_experiment(c), ConfigError);
    const ExperimentConfig r = parse_config(R"j({"experiment": "rescaled", "grid": {"dim": 2, "bounds": [[-1,1],[-1,1]], "n": 16}})j");
    CHECK_THROWS_AS(validate_for_experiment(r), ConfigError);
    CHECK_NOTHROW(validate_for_experiment(parse_config(R"j({"experiment": "eigen"})j")));
}

TEST_CASE("runner artifacts") {
    const ExperimentConfig c = parse_config(
        R"j({"experiment": "steady", "s": 0.5, "grid": {"n": 64}, "sigma": {"type": "constant", "value": 10}})j");
    const fs::path a = fresh_dir("dispersal_cli_a");
    const fs::path b = fresh_dir("dispersal_cli_b");
    std::ostringstream log;
    RunOptions opt;
    opt.log = &log;
    opt.out = a;
    CHECK(run_experiment(c, opt) == 0);
    opt.out = b;
    CHECK(run_experiment(c, opt) == 0);
    REQUIRE(fs::exists(a / "summary.json"));
    REQUIRE(fs::exists(a / "steady.csv"));

    const nlohmann::json ja = read_json(a / "summary.json");
    const nlohmann::json jb = read_json(b / "summary.json");
    CHECK(ja["experiment"] == "steady");
    CHECK(ja["all_passed"] == true);
    CHECK(ja.contains("wall_time_s"));
    CHECK(ja["numbers"].dump() == jb["numbers"].dump());
    CHECK(ja["inputs"].dump() == jb["inputs"].dump());

    SUBCASE("seed override lands in the inputs") {
        const fs::path d = fresh_dir("dispersal_cli_seed");
        RunOptions so;
        so.log = &log;
        so.out = d;
        so.seed = 7;
        CHECK(run_experiment(c, so) == 0);
        CHECK(read_json(d / "summary.json")["inputs"]["seed"] == 7);
        fs::remove_all(d);
    }
    fs::remove_all(a);
    fs::remove_all(b);
}

TEST_CASE("module errors leave only the error record") {
    // a ball that does not fit in the box fails inside the mismatch module
    const ExperimentConfig c =
        parse_config(R"j({"experiment": "mismatch", "s": 0.5, "grid": {"n": 64}, "ball": {"center": [0.9], "radius": 0.5}})j");
    const fs::path d = fresh_dir("dispersal_cli_error");
    std::ostringstream log;
    RunOptions opt;
    opt.log = &log;
    opt.out = d;
    CHECK(run_experiment(c, opt) == 2);
    REQUIRE(fs::exists(d / "summary.json"));
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(d)) ++files;
    CHECK(files == 1);
    const nlohmann::json j = read_json(d / "summary.json");
    CHECK(j.contains("error"));
    CHECK(j["all_passed"] == false);
    fs::remove_all(d);
}
