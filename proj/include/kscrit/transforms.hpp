#pragma once

#include <vector>

#include "kscrit/grid.hpp"

namespace kscrit {

/// A tabulated function of one variable (Q(r), N(x), ...), with the time it
/// refers to and a quadrature error estimate when it came from integration.
struct FieldTable {
    std::vector<double> x;
    std::vector<double> values;
    double time = 0.0;
    double error_estimate = 0.0;
};

/// Q(r) = 2π ∫₀^r s ρ(s) ds by cumulative trapezoid on the given r-nodes.
/// error_estimate is the Richardson difference against the every-other-node rule.
FieldTable q_from_rho(const RadialField& rho);

/// N(x) = Q(R√x): the radius is normalized to 1 first, then x = (r/R)².
FieldTable n_from_q(const FieldTable& q);

/// u(x, 4t) = N(x,t)/(8π): returns the snapshot at u-time 4·N-time.
Snapshot u_from_n(const FieldTable& n);

/// Inverse of u_from_n.
FieldTable n_from_u(const Snapshot& u);

/// w(r) = 8u(r²)/r², w(0) = 8·(origin slope of u).  Throws DegenerateSlope if
/// u(0) ≠ 0 or u/x is unbounded near 0.  The field's time is not stored; w-time
/// is u-time / 4.
RadialField w_from_u(const Snapshot& u);

/// Inverse of w_from_u on x = r²: u = r² w / 8 (w-time s ↦ u-time 4s).
Snapshot u_from_w(const RadialField& w, double w_time, double left_bc = 0.0);

}  // namespace kscrit
