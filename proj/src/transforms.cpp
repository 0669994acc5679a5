#include "kscrit/transforms.hpp"

#include <algorithm>
#include <cmath>

#include "kscrit/errors.hpp"
#include "kscrit/observables.hpp"

namespace kscrit {

namespace {
constexpr double kEightPi = 8.0 * M_PI;
}

FieldTable q_from_rho(const RadialField& rho) {
    const auto& r = rho.r_nodes;
    const auto& v = rho.values;
    if (r.size() != v.size() || r.size() < 2) throw InvalidInput("density field size mismatch");
    if (r.front() != 0.0) throw InvalidInput("radial nodes must start at r=0");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= 0.0)) throw InvalidInput("negative or non-finite density entry");
        if (i > 0 && !(r[i] > r[i - 1])) throw InvalidInput("radial nodes not strictly increasing");
    }

    FieldTable q;
    q.x = r;
    q.values.assign(r.size(), 0.0);
    for (std::size_t i = 1; i < r.size(); ++i)
        q.values[i] = q.values[i - 1] + M_PI * (r[i] - r[i - 1]) * (r[i] * v[i] + r[i - 1] * v[i - 1]);

    // coarse rule on even nodes; Richardson estimate of the fine-rule error
    double coarse = 0.0, err = 0.0;
    for (std::size_t i = 2; i < r.size(); i += 2) {
        coarse += M_PI * (r[i] - r[i - 2]) * (r[i] * v[i] + r[i - 2] * v[i - 2]);
        err = std::max(err, std::abs(q.values[i] - coarse) / 3.0);
    }
    q.error_estimate = err;
    return q;
}

FieldTable n_from_q(const FieldTable& q) {
    if (q.x.size() != q.values.size() || q.x.empty()) throw InvalidInput("Q table size mismatch");
    const double R = q.x.back();
    if (!(R > 0.0)) throw InvalidInput("Q table needs a positive radius");
    FieldTable n = q;
    for (double& x : n.x) {
        const double s = x / R;
        x = s * s;
    }
    n.x.back() = 1.0;
    return n;
}

Snapshot u_from_n(const FieldTable& n) {
    Snapshot s;
    s.grid = std::make_shared<const GradedGrid>(GradedGrid::from_nodes(n.x));
    s.values.resize(n.values.size());
    std::transform(n.values.begin(), n.values.end(), s.values.begin(), [](double v) { return v / kEightPi; });
    s.time = 4.0 * n.time;
    s.left_bc = s.values.front();
    s.right_bc = s.values.back();
    return s;
}

FieldTable n_from_u(const Snapshot& u) {
    FieldTable n;
    n.x = u.grid->nodes;
    n.values.resize(u.values.size());
    std::transform(u.values.begin(), u.values.end(), n.values.begin(), [](double v) { return v * kEightPi; });
    n.time = u.time / 4.0;
    return n;
}

RadialField w_from_u(const Snapshot& u) {
    if (u.values.front() != 0.0) throw DegenerateSlope("u(0) != 0: u/x is unbounded at the origin");
    double slope;
    try {
        slope = slope_origin(u).slope;
    } catch (const ResolutionError& e) {
        throw DegenerateSlope(std::string("origin slope not extractable: ") + e.what());
    }
    const auto& x = u.grid->nodes;
    std::vector<double> r(x.size()), w(x.size());
    r[0] = 0.0;
    w[0] = 8.0 * slope;
    for (std::size_t i = 1; i < x.size(); ++i) {
        r[i] = std::sqrt(x[i]);
        w[i] = 8.0 * u.values[i] / x[i];
    }
    r.back() = 1.0;
    return make_radial_field(std::move(r), std::move(w));
}

Snapshot u_from_w(const RadialField& w, double w_time, double left_bc) {
    std::vector<double> x(w.r_nodes.size());
    std::vector<double> u(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = w.r_nodes[i] * w.r_nodes[i];
        u[i] = x[i] * w.values[i] / 8.0;
    }
    x.back() = 1.0;
    Snapshot s;
    s.grid = std::make_shared<const GradedGrid>(GradedGrid::from_nodes(std::move(x)));
    s.values = std::move(u);
    s.values.front() = left_bc;
    s.time = 4.0 * w_time;
    s.left_bc = left_bc;
    s.right_bc = s.values.back();
    return s;
}

}  // namespace kscrit
