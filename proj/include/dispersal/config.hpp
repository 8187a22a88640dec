#pragma once

#include "dispersal/expression.hpp"
#include "dispersal/mesh.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dispersal {

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct ResourceSpec {
    enum class Kind { constant, bump, expression };
    Kind kind = Kind::constant;
    std::optional<double> value;  ///< constant; empty means 2 lambda_1(Omega)
    double tau = 0.0;             ///< bump height
    Point center{0.0, 0.0};
    double radius = 0.0;
    std::optional<Expression> expression;

    std::string describe() const;
};

struct ExperimentConfig {
    std::string experiment;
    double s = 0.5;
    std::optional<double> s_prime;
    int dim = 1;
    std::vector<Interval> bounds{{-1.0, 1.0}};
    int n = 256;
    std::optional<ResourceSpec> sigma;
    double residual_tol = 1e-8;
    double eigen_tol = 1e-10;
    std::optional<std::string> output;
    std::uint64_t seed = 20240601;

    // experiment knobs
    std::optional<Point> ball_center;
    std::optional<double> ball_radius;
    int levels = 6;
    std::vector<double> fit_radii{1.5, 3.0, 6.0};
    int fit_resolution = 512;
    std::vector<double> contrasts{1.0, 100.0};
    double horizon = 1.0;
    int pairs = 10;
    bool fast = false;

    Grid grid() const;
};

/// Strict JSON config parser: unknown keys, wrong types and out-of-range values
/// throw ConfigError. Syntax errors report line and column.
ExperimentConfig parse_config(const std::string& text);

/// sigma on every node. Throws ConfigError naming the first node where it is
/// negative or not finite. lambda1 fills a constant with no value.
Field evaluate_resource(const ResourceSpec& spec, const Grid& grid, double lambda1);

const std::vector<std::string>& experiment_names();

}  // namespace dispersal
