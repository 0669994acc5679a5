#include "kscrit/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kscrit/errors.hpp"

namespace kscrit {

void GradedGrid::validate() const {
    if (nodes.size() < 4) throw InvalidInput("grid needs at least 4 nodes");
    if (nodes.front() != 0.0) throw InvalidInput("grid must start at x=0");
    if (nodes.back() != 1.0) throw InvalidInput("grid must end at x=1");
    for (std::size_t i = 1; i < nodes.size(); ++i)
        if (!(nodes[i] > nodes[i - 1]))
            throw InvalidInput("grid nodes not strictly increasing at index " + std::to_string(i));
}

GradedGrid GradedGrid::from_nodes(std::vector<double> nodes) {
    GradedGrid g;
    g.nodes = std::move(nodes);
    g.validate();
    g.x_min = g.nodes[1];
    g.grading_ratio = (g.nodes[2] - g.nodes[1]) / (g.nodes[1] - g.nodes[0]);
    return g;
}

GradedGrid make_graded_grid(std::size_t n, double x_min, double ratio) {
    if (n < 4) throw ConstructionError("need n >= 4 nodes");
    if (!(x_min > 0.0 && x_min < 1.0)) throw ConstructionError("x_min must lie in (0,1)");
    if (!(ratio >= 1.0) || !std::isfinite(ratio)) throw ConstructionError("grading ratio must be >= 1");

    const std::size_t cells = n - 1;
    std::vector<double> widths;
    widths.reserve(cells);

    if (ratio == 1.0) {
        widths.push_back(x_min);
        const double w = (1.0 - x_min) / double(cells - 1);
        widths.insert(widths.end(), cells - 1, w);
    } else {
        // smallest m with x_min·r^m >= (1 - S_m)/(cells - m), S_m = Σ_{k<m} x_min r^k
        std::size_t m = 0;
        double uniform = 0.0;
        double sum = 0.0, width = x_min;
        for (std::size_t k = 1; k < cells; ++k) {
            sum += width;  // S_k
            width *= ratio;
            const double w = (1.0 - sum) / double(cells - k);
            if (sum >= 1.0) break;
            if (width >= w) {
                m = k;
                uniform = w;
                break;
            }
        }
        if (m == 0)
            throw ConstructionError("infeasible (n, x_min, ratio): geometric cells never reach the far-field width");
        double wk = x_min;
        for (std::size_t k = 0; k < m; ++k, wk *= ratio) widths.push_back(wk);
        widths.insert(widths.end(), cells - m, uniform);
    }

    GradedGrid g;
    g.nodes.resize(n);
    g.nodes[0] = 0.0;
    for (std::size_t i = 0; i < cells; ++i) g.nodes[i + 1] = g.nodes[i] + widths[i];
    g.nodes.back() = 1.0;
    g.x_min = x_min;
    g.grading_ratio = ratio;
    g.validate();
    return g;
}

void Snapshot::validate(bool require_monotone, double tol) const {
    if (!grid || values.size() != grid->size())
        throw InvalidInput("snapshot size does not match its grid");
    if (std::abs(values.front() - left_bc) > tol || std::abs(values.back() - right_bc) > tol)
        throw MaximumPrincipleViolation("boundary values do not match boundary data");
    const double top = std::max(right_bc, 1.0);
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i]) || values[i] < -tol || values[i] > top + tol)
            throw MaximumPrincipleViolation("value out of [0," + std::to_string(top) + "] at x=" +
                                            std::to_string(x(i)));
        if (require_monotone && i > 0 && values[i] < values[i - 1] - tol)
            throw MaximumPrincipleViolation("monotonicity lost at x=" + std::to_string(x(i)));
    }
}

RadialField make_radial_field(std::vector<double> r, std::vector<double> values) {
    if (r.size() != values.size() || r.size() < 2) throw InvalidInput("radial field size mismatch");
    RadialField f{std::move(r), std::move(values), 0.0};
    double m = 0.0;
    for (std::size_t i = 1; i < f.r_nodes.size(); ++i)
        m += 0.5 * (f.r_nodes[i] - f.r_nodes[i - 1]) *
             (f.r_nodes[i] * f.values[i] + f.r_nodes[i - 1] * f.values[i - 1]);
    f.total_mass = 2.0 * M_PI * m;
    return f;
}

namespace {

// Three-point one-sided end derivative, limited so the end cell stays monotone.
double end_slope(double h0, double h1, double d0, double d1) {
    double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (s * d0 <= 0.0) return 0.0;
    if (d0 * d1 < 0.0 && std::abs(s) > 3.0 * std::abs(d0)) s = 3.0 * d0;
    return s;
}

boost::math::interpolators::pchip<std::vector<double>> make_pchip(std::vector<double>& x,
                                                                  std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 4) throw InvalidInput("monotone cubic needs >= 4 matching points");
    const std::size_t n = x.size();
    const double hl0 = x[1] - x[0], hl1 = x[2] - x[1];
    const double hr0 = x[n - 1] - x[n - 2], hr1 = x[n - 2] - x[n - 3];
    const double left = end_slope(hl0, hl1, (y[1] - y[0]) / hl0, (y[2] - y[1]) / hl1);
    const double right = end_slope(hr0, hr1, (y[n - 1] - y[n - 2]) / hr0, (y[n - 2] - y[n - 3]) / hr1);
    return {std::move(x), std::move(y), left, right};
}

}  // namespace

MonotoneCubic::MonotoneCubic(std::vector<double> x, std::vector<double> y)
    : lo_(x.empty() ? 0.0 : x.front()), hi_(x.empty() ? 0.0 : x.back()), impl_(make_pchip(x, y)) {}

double MonotoneCubic::operator()(double x) const {
    if (x < lo_ || x > hi_) throw RangeError("interpolation point outside the data range");
    return impl_(x);
}

double MonotoneCubic::prime(double x) const {
    if (x < lo_ || x > hi_) throw RangeError("interpolation point outside the data range");
    return impl_.prime(x);
}

double interp(const Snapshot& s, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw RangeError("x outside [0,1]");
    const auto& nodes = s.grid->nodes;
    // exact at nodes, and avoid rebuilding the whole interpolant: use a local
    // 4..6-point window, which gives the same Fritsch–Butland cubic on the
    // interior cell as the global one.
    auto it = std::lower_bound(nodes.begin(), nodes.end(), x);
    std::size_t j = std::size_t(it - nodes.begin());
    if (j < nodes.size() && nodes[j] == x) return s.values[j];
    const std::size_t cell = j - 1;  // x in (nodes[cell], nodes[cell+1])
    const std::size_t lo = cell >= 2 ? cell - 2 : 0;
    const std::size_t hi = std::min(nodes.size() - 1, std::max(cell + 3, lo + 3));
    const std::size_t first = std::min(lo, hi >= 3 ? hi - 3 : 0);
    std::vector<double> xs(nodes.begin() + first, nodes.begin() + hi + 1);
    std::vector<double> ys(s.values.begin() + first, s.values.begin() + hi + 1);
    return MonotoneCubic(std::move(xs), std::move(ys))(x);
}

}  // namespace kscrit
