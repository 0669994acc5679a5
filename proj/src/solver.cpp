#include "kscrit/solver.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <lapacke.h>

#include "kscrit/errors.hpp"
#include "kscrit/field_io.hpp"

namespace kscrit {

const char* to_string(Scheme s) { return s == Scheme::BackwardEuler ? "backward_euler" : "tr_bdf2"; }

void SolverConfig::validate() const {
    if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
    if (!(dt_initial > 0.0) || !(dt_max > 0.0) || dt_initial > dt_max)
        throw ConfigError("need 0 < dt_initial <= dt_max");
    if (!(reg_epsilon >= 0.0)) throw ConfigError("reg_epsilon must be >= 0");
    if (!(right_bc > 0.0)) throw ConfigError("right_bc must be positive");
    if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("tolerances must be positive");
    if (newton_max_iter < 1) throw ConfigError("newton_max_iter must be >= 1");
}

nlohmann::json SolverConfig::to_json() const {
    nlohmann::json j;
    if (grid) j["grid"] = {{"n", grid->size()}, {"x_min", grid->x_min}, {"grading_ratio", grid->grading_ratio}};
    j["dt_initial"] = dt_initial;
    j["dt_max"] = dt_max;
    j["newton_tol"] = newton_tol;
    j["reg_epsilon"] = reg_epsilon;
    j["scheme"] = to_string(scheme);
    j["right_bc"] = right_bc;
    j["adaptive"] = adaptive;
    j["rtol"] = rtol;
    j["atol"] = atol;
    return j;
}

namespace {

/// du_i/dt = G_i(u) on the free nodes [first, last]; the remaining nodes are
/// Dirichlet data.  eval fills G and, if requested, the tridiagonal dG/du.
class Discretization {
public:
    virtual ~Discretization() = default;
    virtual std::size_t first() const = 0;
    virtual std::size_t last() const = 0;
    virtual void eval(const std::vector<double>& u, std::vector<double>& G, std::vector<double>* lo,
                      std::vector<double>* di, std::vector<double>* up) const = 0;
};

// Vertex-centred finite volumes for u_t = ∂x[(x+ε)u_x + u² − u].
class UForm final : public Discretization {
public:
    UForm(const std::vector<double>& x, double eps) : n_(x.size()) {
        const std::size_t faces = n_ - 1;
        coef_.resize(faces);
        h_.resize(faces);
        upwind_.resize(faces);
        for (std::size_t k = 0; k < faces; ++k) {
            h_[k] = x[k + 1] - x[k];
            coef_[k] = 0.5 * (x[k] + x[k + 1]) + eps;
            upwind_[k] = h_[k] / coef_[k] > 2.0 * (1.0 + 1e-12);
        }
        V_.assign(n_, 0.0);
        for (std::size_t i = 1; i + 1 < n_; ++i) V_[i] = 0.5 * (x[i + 1] - x[i - 1]);
    }
    std::size_t first() const override { return 1; }
    std::size_t last() const override { return n_ - 2; }

    void eval(const std::vector<double>& u, std::vector<double>& G, std::vector<double>* lo, std::vector<double>* di,
              std::vector<double>* up) const override {
        const std::size_t faces = n_ - 1;
        F_.resize(faces);
        dl_.resize(faces);
        dr_.resize(faces);
        for (std::size_t k = 0; k < faces; ++k) {
            const double ul = u[k], ur = u[k + 1], d = coef_[k] / h_[k];
            double q, ql, qr;
            if (!upwind_[k]) {
                // product form: makes U_a an exact discrete steady state
                q = ul * ur - 0.5 * (ul + ur);
                ql = ur - 0.5;
                qr = ul - 0.5;
            } else {
                // Engquist–Osher for the flux u − u² (F carries its negative)
                const double fp = ul <= 0.5 ? ul - ul * ul : 0.25;
                const double fm = ur <= 0.5 ? 0.0 : ur - ur * ur - 0.25;
                q = -(fp + fm);
                ql = -std::max(1.0 - 2.0 * ul, 0.0);
                qr = std::max(2.0 * ur - 1.0, 0.0);
            }
            F_[k] = d * (ur - ul) + q;
            dl_[k] = -d + ql;
            dr_[k] = d + qr;
        }
        G.assign(n_, 0.0);
        if (lo) {
            lo->assign(n_, 0.0);
            di->assign(n_, 0.0);
            up->assign(n_, 0.0);
        }
        for (std::size_t i = 1; i + 1 < n_; ++i) {
            G[i] = (F_[i] - F_[i - 1]) / V_[i];
            if (lo) {
                (*lo)[i] = -dl_[i - 1] / V_[i];
                (*di)[i] = (dl_[i] - dr_[i - 1]) / V_[i];
                (*up)[i] = dr_[i] / V_[i];
            }
        }
    }

private:
    std::size_t n_;
    std::vector<double> coef_, h_, V_;
    std::vector<bool> upwind_;
    mutable std::vector<double> F_, dl_, dr_;
};

// 4D-radial finite volumes: volume element r³dr, symmetric origin cell.
class WForm final : public Discretization {
public:
    explicit WForm(const std::vector<double>& r) : r_(r), n_(r.size()) {
        const std::size_t faces = n_ - 1;
        T_.resize(faces);
        rf_.resize(faces);
        for (std::size_t k = 0; k < faces; ++k) {
            rf_[k] = 0.5 * (r[k] + r[k + 1]);
            T_[k] = rf_[k] * rf_[k] * rf_[k] / (r[k + 1] - r[k]);
        }
        V_.resize(n_);
        V_[0] = std::pow(rf_[0], 4) / 4.0;
        for (std::size_t i = 1; i + 1 < n_; ++i) V_[i] = (std::pow(rf_[i], 4) - std::pow(rf_[i - 1], 4)) / 4.0;
    }
    std::size_t first() const override { return 0; }
    std::size_t last() const override { return n_ - 2; }

    void eval(const std::vector<double>& w, std::vector<double>& G, std::vector<double>* lo, std::vector<double>* di,
              std::vector<double>* up) const override {
        G.assign(n_, 0.0);
        if (lo) {
            lo->assign(n_, 0.0);
            di->assign(n_, 0.0);
            up->assign(n_, 0.0);
        }
        for (std::size_t i = 0; i + 1 < n_; ++i) {
            const double right = T_[i] * (w[i + 1] - w[i]);
            const double left = i == 0 ? 0.0 : T_[i - 1] * (w[i] - w[i - 1]);
            double adv = 0.0, adv_l = 0.0, adv_r = 0.0;
            if (i > 0) {
                const double c = r_[i] / (4.0 * (r_[i + 1] - r_[i - 1]));
                adv = c * (w[i + 1] * w[i + 1] - w[i - 1] * w[i - 1]);
                adv_l = -2.0 * c * w[i - 1];
                adv_r = 2.0 * c * w[i + 1];
            }
            G[i] = (right - left) / V_[i] + w[i] * w[i] + adv;
            if (lo) {
                (*lo)[i] = (i == 0 ? 0.0 : T_[i - 1] / V_[i]) + adv_l;
                (*di)[i] = -(T_[i] + (i == 0 ? 0.0 : T_[i - 1])) / V_[i] + 2.0 * w[i];
                (*up)[i] = T_[i] / V_[i] + adv_r;
            }
        }
    }

private:
    std::vector<double> r_;
    std::size_t n_;
    std::vector<double> T_, rf_, V_;
};

struct StageResult {
    bool ok = false;
    int iterations = 0;
};

// Solve u − θ G(u) = rhs on the free nodes by Newton; u holds the initial guess.
StageResult newton_stage(const Discretization& D, double theta, const std::vector<double>& rhs, std::vector<double>& u,
                         const SolverConfig& cfg) {
    const std::size_t i0 = D.first(), i1 = D.last();
    const auto m = lapack_int(i1 - i0 + 1);
    std::vector<double> G, lo, di, up;
    const auto mm = static_cast<std::size_t>(m);
    std::vector<double> dl(mm), d(mm), du(mm), b(mm);
    StageResult res;
    for (int it = 1; it <= cfg.newton_max_iter; ++it) {
        D.eval(u, G, &lo, &di, &up);
        for (std::size_t i = i0; i <= i1; ++i) {
            const std::size_t k = i - i0;
            b[k] = -(u[i] - theta * G[i] - rhs[i]);
            d[k] = 1.0 - theta * di[i];
            if (k + 1 < mm) du[k] = -theta * up[i];
            if (k > 0) dl[k - 1] = -theta * lo[i];
        }
        if (LAPACKE_dgtsv(LAPACK_COL_MAJOR, m, 1, dl.data(), d.data(), du.data(), b.data(), m) != 0) return res;
        double change = 0.0;
        for (std::size_t i = i0; i <= i1; ++i) {
            const double delta = b[i - i0];
            if (!std::isfinite(delta)) return res;
            u[i] += delta;
            change = std::max(change, std::abs(delta) / (1.0 + std::abs(u[i])));
        }
        res.iterations = it;
        if (change <= cfg.newton_tol) {
            res.ok = true;
            return res;
        }
    }
    return res;
}

// One time step of the configured scheme from u (in place on success).
StageResult time_step(const Discretization& D, const SolverConfig& cfg, std::vector<double>& u, double dt) {
    StageResult total;
    if (cfg.scheme == Scheme::BackwardEuler) {
        std::vector<double> next = u;
        total = newton_stage(D, dt, u, next, cfg);
        if (total.ok) u.swap(next);
        return total;
    }
    const double g = 2.0 - std::sqrt(2.0);
    std::vector<double> G;
    D.eval(u, G, nullptr, nullptr, nullptr);
    std::vector<double> rhs = u;
    for (std::size_t i = D.first(); i <= D.last(); ++i) rhs[i] += 0.5 * g * dt * G[i];
    std::vector<double> stage = u;
    auto s1 = newton_stage(D, 0.5 * g * dt, rhs, stage, cfg);
    if (!s1.ok) return s1;
    const double c = 1.0 / (g * (2.0 - g));
    for (std::size_t i = D.first(); i <= D.last(); ++i) rhs[i] = c * (stage[i] - (1.0 - g) * (1.0 - g) * u[i]);
    std::vector<double> next = stage;
    auto s2 = newton_stage(D, (1.0 - g) / (2.0 - g) * dt, rhs, next, cfg);
    total.ok = s2.ok;
    total.iterations = s1.iterations + s2.iterations;
    if (total.ok) u.swap(next);
    return total;
}

struct DriveResult {
    std::vector<StepDiagnostics> steps;
    int rejected = 0;
    std::optional<BlowUpEvent> blow_up;
};

// Adaptive (step doubling) or fixed stepping to t_end, landing on output times.
// on_output(u, t) records; check(u, t) validates an accepted state and returns
// a blow-up measure to compare against the cap.
DriveResult drive(const Discretization& D, const SolverConfig& cfg, std::vector<double> u, double t_end,
                  std::vector<double> outputs, const std::function<void(const std::vector<double>&, double)>& on_output,
                  const std::function<double(const std::vector<double>&, double)>& check) {
    std::sort(outputs.begin(), outputs.end());
    outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());
    std::vector<double> stops;
    for (double t : outputs) {
        if (t == 0.0) on_output(u, 0.0);
        else if (t > 0.0 && t < t_end) stops.push_back(t);
    }
    stops.push_back(t_end);
    const bool record_end = std::find(outputs.begin(), outputs.end(), t_end) != outputs.end();

    DriveResult out;
    const double order = cfg.scheme == Scheme::BackwardEuler ? 1.0 : 2.0;
    double t = 0.0, dt = cfg.dt_initial;
    std::size_t next = 0;
    while (next < stops.size()) {
        const double target = stops[next];
        const double remaining = target - t;
        const bool lands = dt >= remaining - 1e-9 * std::max(1.0, target);
        const double h = lands ? remaining : dt;
        if (h < cfg.dt_floor)
            throw SolverFailure("time step fell below the floor at t=" + format_double(t));

        std::vector<double> trial = u;
        int iters = 0;
        bool accepted = false;
        double factor = 2.0;
        if (!cfg.adaptive) {
            auto r = time_step(D, cfg, trial, h);
            iters = r.iterations;
            accepted = r.ok;
            factor = r.ok ? 1.0 : 0.5;
        } else {
            std::vector<double> full = u;
            auto r1 = time_step(D, cfg, full, h);
            auto r2 = r1.ok ? time_step(D, cfg, trial, 0.5 * h) : StageResult{};
            auto r3 = r2.ok ? time_step(D, cfg, trial, 0.5 * h) : StageResult{};
            iters = r1.iterations + r2.iterations + r3.iterations;
            if (r3.ok) {
                double err = 0.0;
                for (std::size_t i = 0; i < u.size(); ++i)
                    err = std::max(err, std::abs(full[i] - trial[i]) / (cfg.atol + cfg.rtol * std::abs(trial[i])));
                factor = err > 0.0 ? std::clamp(0.9 * std::pow(err, -1.0 / (order + 1.0)), 0.2, 2.0) : 2.0;
                accepted = err <= 1.0;
            } else {
                factor = 0.5;
            }
        }
        if (!accepted) {
            ++out.rejected;
            if (cfg.adaptive || factor < 1.0) dt = h * std::min(factor, 0.9);
            if (dt < cfg.dt_floor)
                throw SolverFailure("Newton failed / error too large down to dt floor at t=" + format_double(t));
            continue;
        }
        u.swap(trial);
        t = lands ? target : t + h;
        out.steps.push_back({t, h, iters});
        const double measure = check(u, t);
        if (measure > cfg.blowup_cap) {
            out.blow_up = BlowUpEvent{t, measure};
            on_output(u, t);
            return out;
        }
        if (cfg.adaptive && !(lands && h < dt)) dt = std::min(cfg.dt_max, h * factor);
        if (!cfg.adaptive) dt = cfg.dt_initial;
        if (lands) {
            if (next + 1 < stops.size() || record_end) on_output(u, t);
            ++next;
        }
    }
    return out;
}

}  // namespace

const Snapshot& Trajectory::at_time(double t) const {
    for (const auto& s : snapshots)
        if (s.time == t) return s;
    throw InvalidInput("no snapshot at t=" + format_double(t));
}

nlohmann::json Trajectory::manifest(const SolverConfig& cfg) const {
    nlohmann::json j;
    j["config"] = cfg.to_json();
    j["accepted_steps"] = steps.size();
    j["rejected_steps"] = rejected_steps;
    long newton = 0;
    double dmin = steps.empty() ? 0.0 : steps.front().dt, dmax = 0.0;
    for (const auto& s : steps) {
        newton += s.newton_iterations;
        dmin = std::min(dmin, s.dt);
        dmax = std::max(dmax, s.dt);
    }
    j["newton_iterations"] = newton;
    j["dt_min"] = dmin;
    j["dt_max_used"] = dmax;
    nlohmann::json times = nlohmann::json::array();
    for (const auto& s : snapshots) times.push_back(s.time);
    j["output_times"] = times;
    if (blow_up) j["blow_up"] = {{"time", blow_up->time}, {"measure", blow_up->measure}};
    return j;
}

Trajectory solve(const Snapshot& u0, const SolverConfig& cfg_in, double t_end, std::vector<double> output_times) {
    SolverConfig cfg = cfg_in;
    if (!cfg.grid) cfg.grid = u0.grid;
    cfg.validate();
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    if (u0.grid->nodes != cfg.grid->nodes) throw InvalidInput("initial data lives on a different grid");
    if (u0.values.front() != 0.0) throw InvalidInput("u0(0) must be 0");
    if (std::abs(u0.values.back() - cfg.right_bc) > 1e-12) throw InvalidInput("u0(1) must equal right_bc");

    bool monotone = true;
    for (std::size_t i = 1; i < u0.size(); ++i) {
        if (u0.values[i] < u0.values[i - 1]) monotone = false;
        if (u0.values[i] < 0.0) throw InvalidInput("u0 must be nonnegative");
    }
    const double top = std::max(cfg.right_bc, *std::max_element(u0.values.begin(), u0.values.end()));

    UForm D(cfg.grid->nodes, cfg.reg_epsilon);
    std::vector<double> u = u0.values;
    u.front() = 0.0;
    u.back() = cfg.right_bc;

    Trajectory traj;
    auto record = [&](const std::vector<double>& v, double t) {
        Snapshot s;
        s.grid = cfg.grid;
        s.values = v;
        s.time = t;
        s.left_bc = 0.0;
        s.right_bc = cfg.right_bc;
        traj.snapshots.push_back(std::move(s));
    };
    const auto& x = cfg.grid->nodes;
    auto check = [&](const std::vector<double>& v, double t) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!std::isfinite(v[i]) || v[i] < -cfg.mp_tol || v[i] > top + cfg.mp_tol)
                throw MaximumPrincipleViolation("u=" + format_double(v[i]) + " at x=" + format_double(x[i]) +
                                                ", t=" + format_double(t));
            if (monotone && i > 0 && v[i] < v[i - 1] - cfg.mp_tol)
                throw MaximumPrincipleViolation("monotonicity lost at x=" + format_double(x[i]) + ", t=" + format_double(t));
        }
        return v[1] / x[1];
    };
    auto res = drive(D, cfg, std::move(u), t_end, std::move(output_times), record, check);
    traj.steps = std::move(res.steps);
    traj.rejected_steps = res.rejected;
    traj.blow_up = res.blow_up;
    return traj;
}

WTrajectory solve_w(const RadialField& w0, const SolverConfig& cfg_in, double t_end, std::vector<double> output_times) {
    SolverConfig cfg = cfg_in;
    cfg.validate();
    if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
    const auto& r = w0.r_nodes;
    if (r.size() < 4 || r.front() != 0.0 || r.back() != 1.0) throw InvalidInput("w-grid must span [0,1]");
    for (double v : w0.values)
        if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidInput("w0 must be finite and nonnegative");
    if (std::abs(w0.values.back() - 8.0 * cfg.right_bc) > 1e-12 * 8.0 * cfg.right_bc)
        throw InvalidInput("w0(1) must equal 8*right_bc");

    WForm D(r);
    std::vector<double> w = w0.values;
    w.back() = 8.0 * cfg.right_bc;

    WTrajectory traj;
    auto record = [&](const std::vector<double>& v, double t) {
        traj.times.push_back(t);
        traj.fields.push_back(make_radial_field(r, v));
    };
    auto check = [&](const std::vector<double>& v, double t) {
        double mx = 0.0;
        for (double x : v) {
            if (!std::isfinite(x) || x < -cfg.mp_tol * (1.0 + mx))
                throw MaximumPrincipleViolation("w lost positivity or finiteness at t=" + format_double(t));
            mx = std::max(mx, x);
        }
        return mx;
    };
    auto res = drive(D, cfg, std::move(w), t_end, std::move(output_times), record, check);
    traj.steps = std::move(res.steps);
    traj.blow_up = res.blow_up;
    return traj;
}

}  // namespace kscrit
