#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kscrit/barriers.hpp"
#include "kscrit/solver.hpp"

namespace kscrit {

/// Every command's parameters.  Loaded from an INI file with one section per
/// command ([special], [match], [certify], [solve], [rate], [profile],
/// [sandwich]); keys not listed here are rejected.
struct ExperimentConfig {
    struct Special {
        double y_max = 1e6;
        int per_decade = 40;
        double y_first = 1e-6;
        int order = 12;
        double M = -1.0;  ///< < 0: smallest admissible M rounded up to 0.5
        std::vector<double> windows{1e4, 1e5, 1e6};
        double growth_limit = 2.0;
        double roundtrip_lo = 0.01, roundtrip_hi = 1e4, roundtrip_tol = 1e-6;
        double f_tol = 0.01, g_tol = 0.02;  ///< at the top window
    } special;

    struct Match {
        double K = 5.0;
        double t_end = 1000.0;
        double rtol = 1e-12, atol = 1e-14;
        double window_lo = 100.0, window_hi = 1000.0;
        double bracket_lo = 2.0, bracket_hi = 3.0;
        double halving_tol = 1e-8;
        double halving_step = 0.05;  ///< fixed-step RK5 step for the halving study
    } match;

    struct Certify {
        double K_lower = 5.0, K_upper = 6.0;
        double y_max = 1e36;  ///< must cover a(t_hi)
        double t_lo = 0.01, t_hi = 3000.0;
        int samples = 400;
        int y_per_decade = 50;
        double threshold_max = 1000.0;  ///< sign onset must occur before this
        bool swaps = true;              ///< also run the K-swapped matching checks
        double K_lower_swap = 7.0, K_upper_swap = 5.0;
    } certify;

    struct Solve {
        std::size_t n = 800;
        double x_min = 1e-10;
        double ratio = 1.035;
        double t_end = 50.0;
        double output_step = 1.0;
        std::string scheme = "tr_bdf2";
        double rtol = 1e-5, atol = 1e-8;
        double dt_initial = 1e-4, dt_max = 0.05;
        double reg_epsilon = 0.0;
        std::string u0 = "x";  ///< x | x2 | steady:<a>
        bool write_snapshots = true;
    } solve;

    struct Rate {
        double t_lo = 20.0, t_hi = 50.0;
        double d_lo = 1.5, d_hi = 3.5;
        double r_at = 50.0, r_lo = 0.4, r_hi = 2.5;
        double trend_from = 10.0;
    } rate;

    struct Profile {
        double t_lo = 10.0, t_hi = 50.0;
        double E_max = 0.6;
    } profile;

    struct Sandwich {
        double shift_max = 200.0;
        double lattice = 0.5;
        double tol = 1e-9;
        double width_x = 0.5;
    } sandwich;

    /// Throws ConfigError on unknown keys, bad values or a missing file.
    static ExperimentConfig load(const std::string& path);
    static ExperimentConfig parse(std::istream& in);
    void validate() const;
    nlohmann::json to_json() const;

    SolverConfig solver_config() const;
    Snapshot initial_data() const;
};

struct RunContext {
    std::string out_dir = "out";
    bool quiet = false;
    std::ostream* log = nullptr;  ///< progress lines; nullptr: std::cout unless quiet
};

/// Result of one command: 0 pass, 1 scientific check failed, 2 numerical or
/// configuration failure.  Summaries are also written to out_dir.
struct CommandResult {
    int status = 0;
    nlohmann::json summary;
};

/// Exit status for a library error category.
int status_for(const std::string& error_category);

CommandResult cmd_tabulate(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_match(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_certify(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_solve(const ExperimentConfig& cfg, const RunContext& ctx);
/// rate/profile/sandwich solve the critical problem unless a trajectory is given.
CommandResult cmd_rate(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory* traj = nullptr);
CommandResult cmd_profile(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory* traj = nullptr);
CommandResult cmd_sandwich(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory* traj = nullptr);
CommandResult cmd_all(const ExperimentConfig& cfg, const RunContext& ctx);

// ------------------------------------------------------------ shared pieces

struct RatePoint {
    double t = 0, slope = 0, d = 0, l1 = 0, r = 0;
    bool fallback = false;
};
std::vector<RatePoint> rate_series(const Trajectory& traj);

/// Least-squares slope of ys against ts.
double trend_slope(const std::vector<double>& ts, const std::vector<double>& ys);

/// E = sup_x |(1−u)(1+â x) − (1−x)| with â = slope_origin(u).
double profile_error(const Snapshot& u);

/// Certified onset of a barrier: the latest of its sign threshold, its
/// boundary-matching onset and (lower) its monotonicity onset.  NaN when any
/// of them never settles in the range.
struct BarrierCertificate {
    ResidualReport sign;
    OnsetReport matching;
    std::optional<OnsetReport> monotone;
    double onset = 0.0;
    bool ok = false;
    nlohmann::json to_json() const;
};
BarrierCertificate certify_barrier(const BarrierSpec& spec, const TimeRange& range, int y_per_decade);

/// Barrier specs with their intrinsic shift = certified onset rounded up to
/// the sandwich lattice.
struct BarrierPair {
    BarrierSpec lower, upper;
    BarrierCertificate lower_cert, upper_cert;
};
BarrierPair certified_barriers(const ExperimentConfig& cfg);

}  // namespace kscrit
