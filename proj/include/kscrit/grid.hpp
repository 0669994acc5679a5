#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>  // pchip.hpp relies on it
#include <boost/math/interpolators/pchip.hpp>

namespace kscrit {

/// Strictly increasing nodes on [0,1], geometrically graded away from x = 0
/// and uniform in the far field.
struct GradedGrid {
    std::vector<double> nodes;
    double x_min = 0.0;          ///< smallest interior node (= nodes[1])
    double grading_ratio = 1.0;  ///< growth factor of the near-origin cell widths

    std::size_t size() const { return nodes.size(); }
    double operator[](std::size_t i) const { return nodes[i]; }

    /// Throws InvalidInput unless nodes[0]=0, nodes.back()=1, strictly increasing.
    void validate() const;

    /// Wrap arbitrary nodes; x_min and the ratio are read off the first two cells.
    static GradedGrid from_nodes(std::vector<double> nodes);
};

/// Geometric widths x_min·r^k from the origin until they reach the uniform
/// far-field width; the last node is pinned to 1.  ratio = 1 gives uniform
/// spacing after x_min.
GradedGrid make_graded_grid(std::size_t n, double x_min, double grading_ratio);

/// u on a grid at one time, with its Dirichlet data.
struct Snapshot {
    std::shared_ptr<const GradedGrid> grid;
    std::vector<double> values;
    double time = 0.0;
    double left_bc = 0.0;
    double right_bc = 1.0;

    std::size_t size() const { return values.size(); }
    double x(std::size_t i) const { return grid->nodes[i]; }

    /// Boundary consistency, [0,1] bounds and (optionally) monotonicity, with
    /// absolute slack tol.  Throws MaximumPrincipleViolation.
    void validate(bool require_monotone, double tol = 1e-10) const;
};

/// Sample a function on a grid.
template <class F>
Snapshot sample(std::shared_ptr<const GradedGrid> grid, F&& u, double time = 0.0) {
    Snapshot s;
    s.values.reserve(grid->size());
    for (double x : grid->nodes) s.values.push_back(u(x));
    s.grid = std::move(grid);
    s.time = time;
    s.left_bc = s.values.front();
    s.right_bc = s.values.back();
    return s;
}

/// Radial profile (density ρ or the 4D-radial w) on r-nodes in [0,R].
struct RadialField {
    std::vector<double> r_nodes;
    std::vector<double> values;
    double total_mass = 0.0;  ///< 2π ∫ s·values ds (trapezoid)
};

/// Build a RadialField and fill total_mass.
RadialField make_radial_field(std::vector<double> r, std::vector<double> values);

/// Monotone piecewise-cubic (Fritsch–Butland) interpolant over nodal data.
class MonotoneCubic {
public:
    MonotoneCubic(std::vector<double> x, std::vector<double> y);
    double operator()(double x) const;
    double prime(double x) const;
    double lo() const { return lo_; }
    double hi() const { return hi_; }

private:
    double lo_, hi_;
    boost::math::interpolators::pchip<std::vector<double>> impl_;
};

/// Monotone cubic value of the snapshot at x ∈ [0,1]; throws RangeError outside.
double interp(const Snapshot& s, double x);

}  // namespace kscrit
