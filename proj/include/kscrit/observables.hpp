#pragma once

#include <string>
#include <vector>

#include "kscrit/grid.hpp"
#include "kscrit/solver.hpp"

namespace kscrit {

struct SlopeFit {
    double slope = 0.0;      ///< â
    double alpha = 0.0;      ///< x/u ≈ alpha + beta·x
    double beta = 0.0;
    std::size_t nodes_used = 0;
    double fit_residual = 0.0;  ///< relative rms of the linear fit in x/u
    bool fallback = false;      ///< slope is u(x₁)/x₁
    std::string warning;
};

/// Origin slope from the inner layer form u ≈ âx/(âx+1) fitted on the
/// innermost nodes (x·u(x₁)/x₁ ≤ 0.05, between 3 and 16 nodes).  A poor fit
/// falls back to u(x₁)/x₁ with a warning; ResolutionError when the two
/// estimates then disagree by more than 10%.
SlopeFit slope_origin(const Snapshot& u);

/// ∫₀¹ (1 − u) dx by the trapezoid rule on the snapshot's nodes.
double l1_to_one(const Snapshot& u);

struct OrderedPairReport {
    bool ordered = true;
    double worst_gap = 0.0;  ///< max(u_low − u_high) over nodes and outputs
    double worst_t = 0.0;
    double worst_x = 0.0;
};

/// Solves from both data on the same grid and compares at every output time.
OrderedPairReport ordered_pair_test(const Snapshot& u0_low, const Snapshot& u0_high, const SolverConfig& cfg,
                                    double t_end, const std::vector<double>& output_times, double tol = 1e-8);

struct SmallTimeReport {
    double tau = 0.0;        ///< 1/(4K)
    bool bound_ok = true;    ///< u ≤ 2Kx at all snapshots with t ≤ τ
    double worst_ratio = 0.0;  ///< max u/(2Kx) over those snapshots
    bool have_tau = false;
    double eta = 0.0;        ///< min (1−u)/(1−x) at t = τ over interior nodes
    bool have_T_delta = false;
    double T_delta = 0.0;    ///< first output with u ≥ min(1−δ, x/δ) everywhere
};

SmallTimeReport small_time_checks(const Trajectory& traj, double K, double delta, double tol = 1e-9);

}  // namespace kscrit
