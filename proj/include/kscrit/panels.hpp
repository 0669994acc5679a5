#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace kscrit {

/// Composite Gauss–Legendre panels on [edges.front(), edges.back()].
///
/// Functions are represented by their samples at the Gauss points; cumulative
/// integrals, derivatives and point values use the per-panel polynomial
/// interpolant through those samples (spectral accuracy for smooth data).
class PanelMesh {
public:
    /// order ∈ {8, 12, 16, 20}; edges strictly increasing.
    PanelMesh(std::vector<double> edges, int order = 12);

    /// Edges 0, y_first, then per_decade log-spaced edges up to y_max, with
    /// breakpoints (kinks of the integrands) inserted exactly.
    static PanelMesh log_spaced(double y_max, int per_decade = 40, double y_first = 1e-6,
                                std::vector<double> breakpoints = {1.0, 2.0}, int order = 12);

    std::size_t panels() const { return edges_.size() - 1; }
    int order() const { return p_; }
    std::size_t size() const { return points_.size(); }
    const std::vector<double>& points() const { return points_; }
    const std::vector<double>& edges() const { return edges_; }
    double lo() const { return edges_.front(); }
    double hi() const { return edges_.back(); }
    double y_first() const { return edges_.size() > 1 ? edges_[1] : edges_[0]; }
    int per_decade() const { return per_decade_; }

    struct Cumulative {
        std::vector<double> at_points;
        std::vector<double> at_edges;  ///< at_edges[0] = 0
    };
    /// ∫_{lo}^{y} of the sampled function, at every Gauss point and edge.
    Cumulative cumulative(const std::vector<double>& samples) const;

    /// Derivative of the per-panel interpolant at the Gauss points.
    std::vector<double> differentiate(const std::vector<double>& samples) const;

    /// Per-panel polynomial interpolant evaluated at y (RangeError outside).
    double interpolate(const std::vector<double>& samples, double y) const;

    /// Interpolation weights for one query point, reusable across many
    /// sampled functions on the same mesh.  edge >= 0 when y is exactly an edge.
    struct Stencil {
        std::size_t offset = 0;
        std::array<double, 20> c{};
        long edge = -1;
    };
    Stencil stencil(double y) const;
    double apply(const Stencil& s, const std::vector<double>& samples) const;

    /// Panel containing y (last panel for y = hi()).
    std::size_t locate(double y) const;

    template <class F>
    std::vector<double> sample(F&& f) const {
        std::vector<double> v(points_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(points_[i]);
        return v;
    }
    template <class F>
    std::vector<double> sample_edges(F&& f) const {
        std::vector<double> v(edges_.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(edges_[i]);
        return v;
    }

private:
    int p_;
    int per_decade_ = 0;
    std::vector<double> edges_;
    std::vector<double> points_;
    // reference element data on [-1,1]
    std::vector<double> xi_, omega_, lambda_;
    std::vector<double> S_;  // p×p cumulative integration matrix, row-major
    std::vector<double> D_;  // p×p differentiation matrix, row-major
};

}  // namespace kscrit
