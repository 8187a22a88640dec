#pragma once

#include "dispersal/mesh.hpp"
#include "dispersal/operators.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

namespace dispersal {

/// E(u) = 1/2 energy(u) - 1/2 int sigma u^2 + 1/3 int |u|^3.
struct EnergyReport {
    double value = 0.0;
    double diffusion = 0.0;  ///< 1/2 h^n u^T A u
    double resource = 0.0;   ///< -1/2 int sigma u^2
    double cubic = 0.0;      ///< 1/3 int |u|^3
    double gradient_norm = 0.0;
};

EnergyReport energy(const OperatorMatrix& op, const Field& sigma, const Field& u);

struct SteadyState {
    Field u;
    double residual = 0.0;  ///< ||A u - (sigma - u) u||_inf
    EnergyReport energy;
    bool nontrivial = false;
    int descent_iterations = 0;
    int newton_iterations = 0;
};

/// Raised when a solve ends above tolerance; carries the last iterate.
class SteadyStateError : public std::runtime_error {
public:
    SteadyStateError(const std::string& what, SteadyState last)
        : std::runtime_error(what), last_(std::move(last)) {}
    const SteadyState& last() const { return last_; }

private:
    SteadyState last_;
};

struct SteadyOptions {
    double residual_tol = 0.0;  ///< <= 0 selects 1e-8 max(1, ||sigma||_inf)
    int max_descent_iterations = 20000;
    int max_newton_iterations = 50;
};

double steady_residual(const OperatorMatrix& op, const Field& sigma, const Field& u);

/// Nonnegative minimizer of E by preconditioned gradient descent with Armijo
/// backtracking and |.| projection, then Newton polishing.
SteadyState minimize_energy(const OperatorMatrix& op, const Field& sigma,
                            const std::optional<Field>& seed = std::nullopt,
                            const SteadyOptions& options = {});

/// Damped Newton on F(u) = A u - (sigma - u) u with Jacobian A - diag(sigma - 2u).
SteadyState newton_refine(const OperatorMatrix& op, const Field& sigma, const Field& u,
                          const SteadyOptions& options = {});

/// max u <= ||sigma||_inf + tol
bool max_principle_check(const SteadyState& state, const Field& sigma, double tol = 1e-9);

/// h^n (d^T A d - sum sigma d^2 + 2 sum u d^2): the second variation at u.
double second_variation(const OperatorMatrix& op, const Field& sigma, const Field& u, const Field& direction);

/// CSV rows "x[,y],u" with '#' metadata lines.
void write_steady_csv(std::ostream& os, const Grid& grid, const SteadyState& state, double s,
                      const std::string& sigma_descriptor);

}  // namespace dispersal
