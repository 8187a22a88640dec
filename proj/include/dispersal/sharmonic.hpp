#pragma once

#include "dispersal/mesh.hpp"

#include <functional>
#include <iosfwd>
#include <vector>

namespace dispersal {

using Resource = std::function<double(const Point&)>;

/// Exterior-data fit of an s-harmonic function to a target on B_1.
///
/// The grid covers B_R at spacing 2/resolution. Unknowns split into the inner
/// ball B_1 and the collar B_R \ B_1; the inner trace is u(g) = -A_in^{-1} A_cross g.
struct SHarmonicFit {
    double s = 0.0;
    double R = 0.0;
    double rho = 0.0;            ///< ridge weight actually used
    bool ridge_retried = false;  ///< the rho = 0 solve broke down and was redone with a ridge
    Grid grid;
    std::vector<std::size_t> inner;   ///< grid indices of B_1
    std::vector<std::size_t> collar;  ///< grid indices of B_R \ B_1
    Field target;                     ///< sigma on the inner nodes
    Field g;                          ///< exterior data on the collar
    Field u_inner;                    ///< fitted trace; also the adjusted resource sigma_eps
    double misfit_sup = 0.0;
    double misfit_l2 = 0.0;
    double harmonicity_residual = 0.0;  ///< ||A_in u + A_cross g||_inf / ||g||_inf

    /// The adjusted resource sigma_eps := u_eps on B_1.
    const Field& adjusted_resource() const { return u_inner; }
};

struct FitOptions {
    int dim = 1;
    double ridge = 1e-10;  ///< relative to trace(G G^T) / #inner; 0 requests an unregularized fit
};

/// Least-squares fit of the inner trace to sigma over B_1. s = 1 gives the
/// classical harmonic fit, where only the collar nodes next to B_1 matter.
SHarmonicFit fit_s_harmonic(const Resource& sigma, double s, double R, int resolution,
                            const FitOptions& options = {});

/// Same fit, for a target given directly on the inner nodes of the fit geometry.
SHarmonicFit fit_s_harmonic(const Field& target_inner, double s, double R, int resolution,
                            const FitOptions& options = {});

/// The inner trace produced by exterior data g on the fit geometry.
Field s_harmonic_trace(const Field& g_collar, double s, double R, int resolution, int dim = 1);

/// Contrast resource: >= M on B_{1/16}, <= 1 outside B_{1/10}, C^2 in between.
Resource contrast_resource(double M);

struct ImpossibilityReport {
    double M = 0.0;
    double harmonic_misfit = 0.0;
    double harnack_quotient = 0.0;  ///< worst max/min over B_{1/4} of the discrete Poisson kernels
    double harnack_bound = 0.0;     ///< (M - H) / (1 + H): misfit floor for positive harmonic fits
    double fractional_s = 0.0;
    double fractional_R = 0.0;
    double fractional_misfit = 0.0;
    double fractional_relative = 0.0;  ///< fractional misfit / ||sigma_M||_inf
};

ImpossibilityReport local_impossibility(double M, int resolution, double fractional_s = 0.5,
                                        double fractional_R = 4.0);

/// "x[,y],u" over B_R, inner trace plus collar data.
void write_fit_csv(std::ostream& os, const SHarmonicFit& fit);

}  // namespace dispersal
