#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace dispersal {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    double seconds = 0.0;
    double time_limit = 0.0;              ///< seconds; part of the pass flag
    std::map<std::string, double> numbers;  ///< key numbers, compared across runs for determinism
    std::vector<std::string> notes;         ///< one line per sub-check
};

struct AcceptanceOptions {
    bool fast = false;  ///< the determinism rerun covers only the seeded criteria
    std::uint64_t seed = 20240601;
    std::ostream* log = nullptr;  ///< progress, one line per finished criterion
};

struct AcceptanceReport {
    std::vector<CriterionResult> criteria;
    double seconds = 0.0;
    bool all_passed() const;
};

/// Singular-integral value of (-Delta)^s u at x in (-1,1) for u = (1-x^2)_+^s / Gamma(2s+1),
/// by adaptive quadrature of the second-difference form.
double torsion_oracle(double x, double s);

CriterionResult criterion_operator_fidelity();
CriterionResult criterion_scaling_law();
CriterionResult criterion_steady_state(std::uint64_t seed);
CriterionResult criterion_linearization(std::uint64_t seed);
CriterionResult criterion_branching(std::uint64_t seed);
CriterionResult criterion_rescaled_construction();
CriterionResult criterion_bump_construction();
CriterionResult criterion_dynamics(std::uint64_t seed);
CriterionResult criterion_nonlocal_fit();

/// Criteria 1-9, then criterion 10: wall time and a rerun compared number by number.
AcceptanceReport run_acceptance(const AcceptanceOptions& options = {});

/// "PASS|FAIL criterion N: title (t s)" followed by indented notes.
void print_criterion(std::ostream& os, const CriterionResult& result);

}  // namespace dispersal
