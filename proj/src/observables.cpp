#include "kscrit/observables.hpp"

#include <algorithm>
#include <cmath>

#include "kscrit/errors.hpp"
#include "kscrit/field_io.hpp"

namespace kscrit {

SlopeFit slope_origin(const Snapshot& u) {
    const auto& x = u.grid->nodes;
    if (u.size() < 4) throw InvalidInput("slope_origin needs at least 4 nodes");
    SlopeFit fit;
    const double ratio = u.values[1] / x[1];
    if (!(ratio > 0.0)) {
        fit.slope = 0.0;
        fit.fallback = true;
        fit.warning = "u vanishes at the first interior node";
        return fit;
    }
    std::vector<double> xs, ys;
    for (std::size_t i = 1; i + 1 < u.size() && xs.size() < 16; ++i) {
        if (xs.size() >= 3 && x[i] * ratio > 0.05) break;
        if (!(u.values[i] > 0.0)) continue;
        xs.push_back(x[i]);
        ys.push_back(x[i] / u.values[i]);
    }
    if (x[1] * ratio > 0.01) fit.warning = "first node outside the inner layer";
    fit.nodes_used = xs.size();

    // least squares for x/u = α + βx, centred for conditioning
    const double n = double(xs.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.beta = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.alpha = my - fit.beta * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (fit.alpha + fit.beta * xs[i]);
        ss += e * e;
    }
    fit.fit_residual = std::sqrt(ss / n) / std::abs(fit.alpha);
    const bool good = fit.alpha > 0.0 && fit.fit_residual <= 1e-3;
    if (good) {
        fit.slope = 1.0 / fit.alpha;
        return fit;
    }
    fit.fallback = true;
    fit.slope = ratio;
    fit.warning = "layer not resolved: using u(x1)/x1";
    if (!(fit.alpha > 0.0) || std::abs(1.0 / fit.alpha - ratio) > 0.1 * ratio)
        throw ResolutionError("inner layer unresolved at t=" + format_double(u.time) + " (fit residual " +
                              format_double(fit.fit_residual) + ")");
    return fit;
}

double l1_to_one(const Snapshot& u) {
    const auto& x = u.grid->nodes;
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i)
        s += 0.5 * (x[i + 1] - x[i]) * ((1.0 - u.values[i]) + (1.0 - u.values[i + 1]));
    return s;
}

OrderedPairReport ordered_pair_test(const Snapshot& u0_low, const Snapshot& u0_high, const SolverConfig& cfg,
                                    double t_end, const std::vector<double>& output_times, double tol) {
    OrderedPairReport rep;
    const auto lo = solve(u0_low, cfg, t_end, output_times);
    SolverConfig hi_cfg = cfg;
    hi_cfg.right_bc = u0_high.values.back();
    const auto hi = solve(u0_high, hi_cfg, t_end, output_times);
    rep.worst_gap = -std::numeric_limits<double>::infinity();
    const std::size_t m = std::min(lo.snapshots.size(), hi.snapshots.size());
    for (std::size_t k = 0; k < m; ++k) {
        const auto& a = lo.snapshots[k];
        const auto& b = hi.snapshots[k];
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double gap = a.values[i] - b.values[i];
            if (gap > rep.worst_gap) {
                rep.worst_gap = gap;
                rep.worst_t = a.time;
                rep.worst_x = a.x(i);
            }
        }
    }
    rep.ordered = rep.worst_gap <= tol;
    return rep;
}

SmallTimeReport small_time_checks(const Trajectory& traj, double K, double delta, double tol) {
    if (!(K > 0.0) || !(delta > 0.0 && delta < 1.0)) throw InvalidInput("need K > 0 and 0 < delta < 1");
    SmallTimeReport rep;
    rep.tau = 1.0 / (4.0 * K);
    for (const auto& s : traj.snapshots) {
        if (s.time <= rep.tau * (1.0 + 1e-12)) {
            for (std::size_t i = 1; i < s.size(); ++i) {
                const double bound = 2.0 * K * s.x(i);
                rep.worst_ratio = std::max(rep.worst_ratio, s.values[i] / bound);
                if (s.values[i] > bound + tol) rep.bound_ok = false;
            }
        }
        if (std::abs(s.time - rep.tau) <= 1e-12 * rep.tau) {
            rep.have_tau = true;
            rep.eta = std::numeric_limits<double>::infinity();
            for (std::size_t i = 1; i + 1 < s.size(); ++i)
                rep.eta = std::min(rep.eta, (1.0 - s.values[i]) / (1.0 - s.x(i)));
        }
        if (!rep.have_T_delta) {
            bool ok = true;
            for (std::size_t i = 0; i < s.size() && ok; ++i)
                ok = s.values[i] >= std::min(1.0 - delta, s.x(i) / delta) - tol;
            if (ok) {
                rep.have_T_delta = true;
                rep.T_delta = s.time;
            }
        }
    }
    return rep;
}

}  // namespace kscrit
