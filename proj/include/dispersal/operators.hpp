#pragma once

#include "dispersal/mesh.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <span>
#include <vector>

namespace dispersal {

/// C(n,s) = 4^s Gamma(n/2+s) / (pi^{n/2} |Gamma(-s)|), the constant for which
/// (-Delta)^s tends to -Delta as s -> 1.
double fractional_constant(int dim, double s);

struct OperatorSpec {
    double order = 1.0;          ///< s in (0,1]; 1 is the classical Laplacian
    double normalization = 1.0;  ///< C(n,s); 1 for the classical operator

    bool classical() const { return order == 1.0; }
};

/// Dense symmetric matrix for -Delta or (-Delta)^s with zero exterior data.
struct OperatorMatrix {
    Grid grid;
    OperatorSpec spec;
    Eigen::MatrixXd matrix;

    Eigen::Index size() const { return matrix.rows(); }
    /// h^n u^T A u: the Dirichlet energy for s = 1, (C(n,s)/2)[u]^2 for s < 1.
    double energy(const Field& u) const;
};

/// Integrals of |y|^{-(n+2s)} over the cells of a uniform grid, indexed by the
/// offset between a node and a cell, plus the exterior tail.
///
/// 1D entries are exact. 2D cells use tensor Gauss-Legendre rules, refined
/// 8x8 for cells within two cells of the singularity; the 2D tail integrates
/// the radial part in closed form and the angle per box side with Gauss-Legendre.
class KernelWeights {
public:
    KernelWeights(const Grid& grid, double s);

    /// Integral over the cell at offset (di, dj) from the node; (0,0) is 0.
    double cell(int di, int dj = 0) const;
    /// Integral over R^n minus the box, seen from the given node.
    double tail(const Point& x) const;

private:
    Grid grid_;
    double s_;
    int span_;
    std::vector<double> table_;
};

OperatorMatrix assemble_classical(const Grid& grid);
OperatorMatrix assemble_fractional(const Grid& grid, double s);
/// Dispatches on s: 1 gives the classical stencil, (0,1) the fractional one.
OperatorMatrix assemble_operator(const Grid& grid, double s);

/// Quadrature of the Gagliardo double integral for the zero-extended,
/// piecewise-constant field, on the same cells as the assembly.
double gagliardo_seminorm_sq(const Grid& grid, double s, const Field& u);

/// Principal submatrix on the given node indices. Zero extension outside the
/// subset is exactly this restriction, since the diagonal keeps every
/// interaction with the removed cells.
Eigen::MatrixXd restrict_matrix(const Eigen::MatrixXd& a, std::span<const std::size_t> indices);

/// Writes "row col value" lines for every nonzero entry.
void write_triplets(std::ostream& os, const OperatorMatrix& op);

}  // namespace dispersal
