#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <vector>

namespace dispersal {

using Point = std::array<double, 2>;

/// Values on the interior nodes of a Grid, in grid order. Zero outside the box.
using Field = Eigen::VectorXd;

struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    double width() const { return upper - lower; }
    bool operator==(const Interval&) const = default;
};

/// Cell-centered uniform grid on a 1D interval or a 2D box.
///
/// Nodes sit at cell centers, so no node lies on the boundary; the zero
/// exterior condition starts right at the box faces. Nodes are ordered
/// lexicographically with the x index running fastest.
class Grid {
public:
    Grid(int dim, std::vector<Interval> bounds, int nodes_per_axis);
    /// Placeholder grid: 8 cells on (0,1).
    Grid() : Grid(1, {Interval{0.0, 1.0}}, 8) {}

    static Grid line(Interval x, int nodes);
    static Grid box(Interval x, Interval y, int nodes_per_axis);

    int dim() const { return dim_; }
    int nodes_per_axis() const { return nodes_per_axis_; }
    const Interval& bounds(int axis) const { return bounds_[static_cast<std::size_t>(axis)]; }
    double spacing(int axis = 0) const { return spacing_[static_cast<std::size_t>(axis)]; }

    std::size_t size() const;
    /// h^n, the midpoint quadrature weight of every node.
    double cell_volume() const;
    /// |Omega|
    double measure() const;

    Point node(std::size_t index) const;
    std::array<int, 2> multi_index(std::size_t index) const;
    std::size_t flat_index(int i, int j = 0) const;
    std::vector<Point> nodes() const;

    bool contains_ball(const Point& center, double radius) const;

    bool operator==(const Grid&) const = default;

private:
    int dim_;
    int nodes_per_axis_;
    std::vector<Interval> bounds_;
    std::vector<double> spacing_;
};

/// A subset of interior nodes, usually the nodes of a ball B_r(x0).
struct NodeSet {
    std::vector<std::size_t> indices;
    Point center{0.0, 0.0};
    double radius = 0.0;

    std::size_t size() const { return indices.size(); }
    bool empty() const { return indices.empty(); }
    /// 0/1 indicator over the whole grid.
    Field indicator(std::size_t grid_size) const;
};

Grid build_grid(int dim, const std::vector<Interval>& bounds, int nodes_per_axis);

/// Nodes with |node - x0| < r. Throws if B_r(x0) leaves the box or holds no node.
NodeSet ball_nodes(const Grid& grid, const Point& center, double radius);

/// Every interior node; radius is set to +inf.
NodeSet all_nodes(const Grid& grid);

/// Midpoint rule: h^n * sum(values).
double integrate(const Grid& grid, const Field& field);

double l2_norm(const Grid& grid, const Field& field);

double distance(const Point& a, const Point& b, int dim);

/// Throws std::invalid_argument unless field has one finite value per node.
void require_field(const Grid& grid, const Field& field, const char* name);

}  // namespace dispersal
