#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kscrit/grid.hpp"

namespace kscrit {

enum class Scheme { BackwardEuler, TrBdf2 };
const char* to_string(Scheme s);

struct SolverConfig {
    std::shared_ptr<const GradedGrid> grid;
    double dt_initial = 1e-4;
    double dt_max = 0.05;
    double newton_tol = 1e-12;
    int newton_max_iter = 30;
    double reg_epsilon = 0.0;  ///< diffusion coefficient x + ε
    Scheme scheme = Scheme::BackwardEuler;
    double right_bc = 1.0;     ///< ξ

    bool adaptive = true;      ///< step doubling; false: fixed dt_initial
    double rtol = 1e-3;
    double atol = 1e-6;
    double dt_floor = 1e-12;
    double mp_tol = 1e-10;     ///< slack for the maximum-principle checks
    double blowup_cap = std::numeric_limits<double>::infinity();  ///< u: slope u₁/x₁, w: ‖w‖∞

    void validate() const;
    nlohmann::json to_json() const;
};

struct StepDiagnostics {
    double t = 0.0;
    double dt = 0.0;
    int newton_iterations = 0;
};

struct BlowUpEvent {
    double time = 0.0;
    double measure = 0.0;  ///< the capped quantity when detected
};

struct Trajectory {
    std::vector<Snapshot> snapshots;
    std::vector<StepDiagnostics> steps;
    std::optional<BlowUpEvent> blow_up;
    int rejected_steps = 0;

    const Snapshot& at_time(double t) const;  ///< exact output time, else InvalidInput
    nlohmann::json manifest(const SolverConfig& cfg) const;
};

/// u_t = (x+ε)u_xx + 2u u_x, u(0)=left_bc, u(1)=right_bc, implicit in time.
/// output_times are hit exactly; times outside (0, t_end] are ignored, t=0 is
/// recorded when listed.
Trajectory solve(const Snapshot& u0, const SolverConfig& cfg, double t_end, std::vector<double> output_times);

struct WTrajectory {
    std::vector<double> times;  ///< w-time
    std::vector<RadialField> fields;
    std::vector<StepDiagnostics> steps;
    std::optional<BlowUpEvent> blow_up;
};

/// w_t = w_rr + (3/r) w_r + w² + (r/2) w w_r, w_r(0)=0, w(1)=8·right_bc, on
/// the r-nodes of w0 (cfg.grid is not used).  Times are w-times (= u-time/4).
WTrajectory solve_w(const RadialField& w0, const SolverConfig& cfg, double t_end, std::vector<double> output_times);

}  // namespace kscrit
