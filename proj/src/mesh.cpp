#include "dispersal/mesh.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dispersal {

Grid::Grid(int dim, std::vector<Interval> bounds, int nodes_per_axis)
    : dim_(dim), nodes_per_axis_(nodes_per_axis), bounds_(std::move(bounds)) {
    if (dim_ != 1 && dim_ != 2) {
        throw std::invalid_argument("grid dimension must be 1 or 2");
    }
    if (static_cast<int>(bounds_.size()) != dim_) {
        throw std::invalid_argument("grid needs one interval per axis");
    }
    if (nodes_per_axis_ < 8) {
        throw std::invalid_argument("grid needs at least 8 nodes per axis");
    }
    for (const auto& b : bounds_) {
        if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.upper > b.lower)) {
            std::ostringstream os;
            os << "degenerate grid bounds (" << b.lower << ", " << b.upper << ")";
            throw std::invalid_argument(os.str());
        }
        spacing_.push_back(b.width() / nodes_per_axis_);
    }
    if (dim_ == 2 && std::abs(spacing_[0] - spacing_[1]) > 1e-12 * spacing_[0]) {
        throw std::invalid_argument("2D grids must have square cells");
    }
}

Grid Grid::line(Interval x, int nodes) { return Grid(1, {x}, nodes); }

Grid Grid::box(Interval x, Interval y, int nodes_per_axis) {
    return Grid(2, {x, y}, nodes_per_axis);
}

std::size_t Grid::size() const {
    const auto n = static_cast<std::size_t>(nodes_per_axis_);
    return dim_ == 1 ? n : n * n;
}

double Grid::cell_volume() const { return dim_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1]; }

double Grid::measure() const {
    return dim_ == 1 ? bounds_[0].width() : bounds_[0].width() * bounds_[1].width();
}

std::array<int, 2> Grid::multi_index(std::size_t index) const {
    const auto n = static_cast<std::size_t>(nodes_per_axis_);
    if (dim_ == 1) return {static_cast<int>(index), 0};
    return {static_cast<int>(index % n), static_cast<int>(index / n)};
}

std::size_t Grid::flat_index(int i, int j) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(j) * static_cast<std::size_t>(dim_ == 1 ? 0 : nodes_per_axis_);
}

Point Grid::node(std::size_t index) const {
    const auto [i, j] = multi_index(index);
    Point p{bounds_[0].lower + (i + 0.5) * spacing_[0], 0.0};
    if (dim_ == 2) p[1] = bounds_[1].lower + (j + 0.5) * spacing_[1];
    return p;
}

std::vector<Point> Grid::nodes() const {
    std::vector<Point> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = node(k);
    return out;
}

bool Grid::contains_ball(const Point& center, double radius) const {
    for (int a = 0; a < dim_; ++a) {
        const auto& b = bounds(a);
        const double slack = 1e-12 * b.width();
        if (center[a] - radius < b.lower - slack || center[a] + radius > b.upper + slack) return false;
    }
    return true;
}

Field NodeSet::indicator(std::size_t grid_size) const {
    Field chi = Field::Zero(static_cast<Eigen::Index>(grid_size));
    for (auto i : indices) chi[static_cast<Eigen::Index>(i)] = 1.0;
    return chi;
}

Grid build_grid(int dim, const std::vector<Interval>& bounds, int nodes_per_axis) {
    return Grid(dim, bounds, nodes_per_axis);
}

double distance(const Point& a, const Point& b, int dim) {
    const double dx = a[0] - b[0];
    const double dy = dim == 2 ? a[1] - b[1] : 0.0;
    return std::sqrt(dx * dx + dy * dy);
}

NodeSet ball_nodes(const Grid& grid, const Point& center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    if (!grid.contains_ball(center, radius)) {
        std::ostringstream os;
        os << "ball of radius " << radius << " at (" << center[0] << ", " << center[1]
           << ") is not contained in the domain";
        throw std::invalid_argument(os.str());
    }
    NodeSet set;
    set.center = center;
    set.radius = radius;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (distance(grid.node(k), center, grid.dim()) < radius) set.indices.push_back(k);
    }
    if (set.empty()) throw std::invalid_argument("ball contains no grid node");
    return set;
}

NodeSet all_nodes(const Grid& grid) {
    NodeSet set;
    set.indices.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) set.indices[k] = k;
    for (int a = 0; a < grid.dim(); ++a) {
        set.center[static_cast<std::size_t>(a)] = 0.5 * (grid.bounds(a).lower + grid.bounds(a).upper);
    }
    set.radius = std::numeric_limits<double>::infinity();
    return set;
}

double integrate(const Grid& grid, const Field& field) {
    return grid.cell_volume() * field.sum();
}

double l2_norm(const Grid& grid, const Field& field) {
    return std::sqrt(grid.cell_volume() * field.squaredNorm());
}

void require_field(const Grid& grid, const Field& field, const char* name) {
    if (static_cast<std::size_t>(field.size()) != grid.size()) {
        std::ostringstream os;
        os << name << ": expected " << grid.size() << " values, got " << field.size();
        throw std::invalid_argument(os.str());
    }
    if (!field.allFinite()) {
        throw std::invalid_argument(std::string(name) + ": non-finite value");
    }
}

}  // namespace dispersal
