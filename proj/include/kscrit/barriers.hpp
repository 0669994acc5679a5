#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kscrit/grid.hpp"
#include "kscrit/matching.hpp"
#include "kscrit/special.hpp"

namespace kscrit {

enum class BarrierKind { Lower, Upper };
const char* to_string(BarrierKind k);

/// Lower: U_a + b f − b² g.   Upper: U_a + b f − (1+ε) b² h, ε = γ.
/// Barrier time t reads the path at t + time_shift.
struct BarrierSpec {
    BarrierKind kind = BarrierKind::Lower;
    std::shared_ptr<const MatchingPath> path;
    std::shared_ptr<const SpecialTable> tables;
    double time_shift = 0.0;

    MatchingState state(double t) const { return path->at(t + time_shift); }
};

struct BarrierValue {
    double value = 0.0;
    double slope = 0.0;  ///< ∂/∂x
};

BarrierValue eval_barrier(const BarrierSpec& spec, double x, double t);
/// Same, for a precomputed path state (scans reuse one state for many x).
BarrierValue eval_barrier(const BarrierSpec& spec, const MatchingState& s, double x);

/// Grouped residual: A (lower) or B (upper) at y for a given state; the full
/// parabolic residual is a·b²·A (resp. a·b²·B).
double residual_reduced(const BarrierSpec& spec, const MatchingState& s, double y);
double residual_reduced(const BarrierSpec& spec, double y, double t);

struct FdSteps {
    double dx = 0.0;
    double dt = 0.0;
};

/// 𝒫v = v_t − x v_xx − 2 v v_x by central differences.
double parabolic_residual_fd(const std::function<double(double, double)>& v, double x, double t, FdSteps steps);

/// 𝒫 applied to eval_barrier.  Throws ResolutionError if dx does not resolve
/// the local scale max(x, 1/a(t)) or the stencil leaves the domain.
double residual_fd(const BarrierSpec& spec, double x, double t, FdSteps steps);

struct TimeRange {
    double t_lo = 0.01;
    double t_hi = 3000.0;
    int samples = 400;  ///< geometric lattice
    std::vector<double> lattice() const;
};

struct ResidualReport {
    BarrierKind kind = BarrierKind::Lower;
    double K = 0.0;
    double M = 0.0;
    TimeRange box;
    double threshold_T = 0.0;  ///< NaN when the sign never settles in range
    double worst_value = 0.0;
    double worst_y = 0.0, worst_x = 0.0, worst_t = 0.0;
    bool sign_ok = false;
    std::string to_json() const;
};

/// Scan y ∈ {0} ∪ {y_first·10^{k/y_per_decade}} ∪ {a(t)} at every lattice time.
ResidualReport certify_sign(const BarrierSpec& spec, const TimeRange& range, int y_per_decade = 50);

struct OnsetReport {
    bool ok = false;
    double onset_time = 0.0;   ///< NaN when it never holds to the end of the range
    double worst_margin = 0.0; ///< smallest margin at or after the onset (or overall worst if !ok)
    std::vector<double> t, margin;
    std::string to_json() const;
};

/// Slope of the lower barrier scaled by 1/a, on a dense (x,t) sample.
OnsetReport check_lower_monotone(const BarrierSpec& spec, const TimeRange& range, int y_per_decade = 50);

/// Lower: a·(1/(a+1) − b f(a) + b² g(a)) > 0.  Upper: a·(b f(a) − (1+ε) b² h(a) − 1/(a+1)) ≥ 0.
/// Margins are scaled by a so that they are O(1/log²a), not O(1/a).
OnsetReport check_boundary_matching(const BarrierSpec& spec, const TimeRange& range);

struct ShiftOptions {
    double shift_max = 200.0;
    double lattice = 0.5;
    double tol = 1e-9;
    double lower_from = 0.0;  ///< lower ordering checked for t ≥ max(T₁, lower_from)
    double upper_from = 0.0;  ///< upper ordering checked for t ≥ upper_from
};

struct ShiftResult {
    double T1 = 0.0, T2 = 0.0;
    double worst_lower = 0.0;  ///< max over checked nodes/times of lower − u
    double worst_upper = 0.0;  ///< max of u − upper
    std::string to_json() const;
};

/// Smallest lattice shifts with lower(·, t−T₁) ≤ u(·,t) ≤ upper(·, t+T₂) on
/// every snapshot in the window.  Throws OrderingFailure when none ≤ shift_max works.
ShiftResult find_time_shifts(const BarrierSpec& lower, const BarrierSpec& upper, const std::vector<Snapshot>& solution,
                             const ShiftOptions& opt = {});

/// max over nodes of lower(x, t−T₁) − u and of u − upper(x, t+T₂) for one snapshot.
struct SandwichGap {
    double lower_excess = 0.0;
    double upper_excess = 0.0;
};
SandwichGap sandwich_gap(const BarrierSpec& lower, const BarrierSpec& upper, const Snapshot& u, double T1, double T2);

}  // namespace kscrit
