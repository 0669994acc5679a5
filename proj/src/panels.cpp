#include "kscrit/panels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

#include "kscrit/errors.hpp"

namespace kscrit {

namespace {

template <unsigned N>
void gauss_rule(std::vector<double>& xi, std::vector<double>& w) {
    using G = boost::math::quadrature::gauss<double, N>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    // Boost stores the nonnegative half; mirror it.
    for (std::size_t k = a.size(); k-- > 0;) {
        if (a[k] == 0.0) continue;
        xi.push_back(-a[k]);
        w.push_back(wt[k]);
    }
    for (std::size_t k = 0; k < a.size(); ++k) {
        xi.push_back(a[k]);
        w.push_back(wt[k]);
    }
}

void reference_rule(int p, std::vector<double>& xi, std::vector<double>& w) {
    switch (p) {
        case 8: gauss_rule<8>(xi, w); break;
        case 12: gauss_rule<12>(xi, w); break;
        case 16: gauss_rule<16>(xi, w); break;
        case 20: gauss_rule<20>(xi, w); break;
        default: throw InvalidInput("panel order must be one of 8, 12, 16, 20");
    }
}

// Lagrange basis values ℓ_j(z) through the reference nodes (barycentric form).
void lagrange_row(const std::vector<double>& xi, const std::vector<double>& lambda, double z,
                  std::vector<double>& row) {
    const std::size_t p = xi.size();
    row.assign(p, 0.0);
    for (std::size_t j = 0; j < p; ++j)
        if (z == xi[j]) {
            row[j] = 1.0;
            return;
        }
    double denom = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        row[j] = lambda[j] / (z - xi[j]);
        denom += row[j];
    }
    for (double& r : row) r /= denom;
}

}  // namespace

PanelMesh::PanelMesh(std::vector<double> edges, int order) : p_(order), edges_(std::move(edges)) {
    if (edges_.size() < 2) throw InvalidInput("panel mesh needs at least one panel");
    for (std::size_t k = 1; k < edges_.size(); ++k)
        if (!(edges_[k] > edges_[k - 1])) throw InvalidInput("panel edges must increase strictly");

    reference_rule(p_, xi_, omega_);
    const std::size_t p = xi_.size();

    lambda_.assign(p, 1.0);
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k)
            if (k != j) lambda_[j] /= (xi_[j] - xi_[k]);

    // S_ij = ∫_{-1}^{ξ_i} ℓ_j, by the same Gauss rule mapped onto [-1, ξ_i]
    S_.assign(p * p, 0.0);
    std::vector<double> row;
    for (std::size_t i = 0; i < p; ++i) {
        const double half = 0.5 * (xi_[i] + 1.0);
        for (std::size_t k = 0; k < p; ++k) {
            lagrange_row(xi_, lambda_, -1.0 + half * (xi_[k] + 1.0), row);
            for (std::size_t j = 0; j < p; ++j) S_[i * p + j] += half * omega_[k] * row[j];
        }
    }

    D_.assign(p * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        double diag = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            if (i == j) continue;
            const double d = (lambda_[j] / lambda_[i]) / (xi_[i] - xi_[j]);
            D_[i * p + j] = d;
            diag -= d;
        }
        D_[i * p + i] = diag;
    }

    points_.reserve(panels() * p);
    for (std::size_t k = 0; k < panels(); ++k) {
        const double mid = 0.5 * (edges_[k] + edges_[k + 1]);
        const double half = 0.5 * (edges_[k + 1] - edges_[k]);
        for (std::size_t j = 0; j < p; ++j) points_.push_back(mid + half * xi_[j]);
    }
}

PanelMesh PanelMesh::log_spaced(double y_max, int per_decade, double y_first,
                                std::vector<double> breakpoints, int order) {
    if (!(y_max > y_first) || !(y_first > 0.0)) throw InvalidInput("need 0 < y_first < y_max");
    if (per_decade < 1) throw InvalidInput("per_decade must be positive");
    std::vector<double> edges{0.0};
    const double decades = std::log10(y_max / y_first);
    const auto n = std::size_t(std::ceil(decades * per_decade - 1e-9));
    for (std::size_t k = 0; k < n; ++k) edges.push_back(y_first * std::pow(10.0, double(k) / per_decade));
    edges.push_back(y_max);

    const double step = std::pow(10.0, 1.0 / per_decade);
    for (double b : breakpoints) {
        if (!(b > y_first && b < y_max)) continue;
        // drop edges too close to the breakpoint, then insert it exactly
        std::erase_if(edges, [&](double e) { return e > 0.0 && e != y_max && std::abs(std::log(e / b)) < 0.3 * std::log(step); });
        edges.insert(std::upper_bound(edges.begin(), edges.end(), b), b);
    }
    PanelMesh mesh(std::move(edges), order);
    mesh.per_decade_ = per_decade;
    return mesh;
}

PanelMesh::Cumulative PanelMesh::cumulative(const std::vector<double>& f) const {
    if (f.size() != points_.size()) throw InvalidInput("sample count does not match the panel mesh");
    const std::size_t p = xi_.size();
    Cumulative c;
    c.at_points.resize(points_.size());
    c.at_edges.assign(edges_.size(), 0.0);
    double acc = 0.0;
    for (std::size_t k = 0; k < panels(); ++k) {
        const double half = 0.5 * (edges_[k + 1] - edges_[k]);
        const double* fk = f.data() + k * p;
        for (std::size_t i = 0; i < p; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += S_[i * p + j] * fk[j];
            c.at_points[k * p + i] = acc + half * s;
        }
        double full = 0.0;
        for (std::size_t j = 0; j < p; ++j) full += omega_[j] * fk[j];
        acc += half * full;
        c.at_edges[k + 1] = acc;
    }
    return c;
}

std::vector<double> PanelMesh::differentiate(const std::vector<double>& f) const {
    if (f.size() != points_.size()) throw InvalidInput("sample count does not match the panel mesh");
    const std::size_t p = xi_.size();
    std::vector<double> d(f.size());
    for (std::size_t k = 0; k < panels(); ++k) {
        const double scale = 2.0 / (edges_[k + 1] - edges_[k]);
        const double* fk = f.data() + k * p;
        for (std::size_t i = 0; i < p; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < p; ++j) s += D_[i * p + j] * fk[j];
            d[k * p + i] = scale * s;
        }
    }
    return d;
}

std::size_t PanelMesh::locate(double y) const {
    if (!(y >= edges_.front() && y <= edges_.back()))
        throw RangeError("y=" + std::to_string(y) + " outside the tabulated range [" +
                         std::to_string(edges_.front()) + ", " + std::to_string(edges_.back()) + "]");
    auto it = std::upper_bound(edges_.begin(), edges_.end(), y);
    std::size_t k = std::size_t(it - edges_.begin());
    return std::min(k == 0 ? 0 : k - 1, panels() - 1);
}

double PanelMesh::interpolate(const std::vector<double>& f, double y) const {
    const std::size_t k = locate(y);
    const std::size_t p = xi_.size();
    const double z = (2.0 * y - edges_[k] - edges_[k + 1]) / (edges_[k + 1] - edges_[k]);
    const double* fk = f.data() + k * p;
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double dz = z - xi_[j];
        if (dz == 0.0) return fk[j];
        const double c = lambda_[j] / dz;
        num += c * fk[j];
        den += c;
    }
    return num / den;
}

PanelMesh::Stencil PanelMesh::stencil(double y) const {
    Stencil s;
    const std::size_t k = locate(y);
    if (y == edges_[k]) s.edge = long(k);
    else if (y == edges_[k + 1]) s.edge = long(k + 1);
    const std::size_t p = xi_.size();
    s.offset = k * p;
    const double z = (2.0 * y - edges_[k] - edges_[k + 1]) / (edges_[k + 1] - edges_[k]);
    double den = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
        const double dz = z - xi_[j];
        if (dz == 0.0) {
            s.c.fill(0.0);
            s.c[j] = 1.0;
            return s;
        }
        s.c[j] = lambda_[j] / dz;
        den += s.c[j];
    }
    for (std::size_t j = 0; j < p; ++j) s.c[j] /= den;
    return s;
}

double PanelMesh::apply(const Stencil& s, const std::vector<double>& f) const {
    const std::size_t p = xi_.size();
    double v = 0.0;
    for (std::size_t j = 0; j < p; ++j) v += s.c[j] * f[s.offset + j];
    return v;
}

}  // namespace kscrit
