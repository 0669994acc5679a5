#include "kscrit/barriers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "kscrit/errors.hpp"
#include "kscrit/field_io.hpp"

namespace kscrit {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double nan_to_json_safe(double v) { return v; }

nlohmann::json num(double v) {
    if (std::isnan(v)) return nullptr;
    return nan_to_json_safe(v);
}

// second-order coefficient: 1 for the lower barrier, 1+ε for the upper
double second_coeff(const BarrierSpec& spec, const MatchingState& s) {
    return spec.kind == BarrierKind::Lower ? 1.0 : 1.0 + s.epsilon;
}

// Geometric y-lattice y_first·10^{k/n}; nested under refinement n → 2n.
std::vector<double> y_lattice(double y_first, double y_hi, int per_decade) {
    std::vector<double> y;
    for (long k = 0;; ++k) {
        const double v = y_first * std::pow(10.0, double(k) / per_decade);
        if (v > y_hi) break;
        y.push_back(v);
    }
    return y;
}

// Threshold index: first lattice index after the last bad one; -1 if the last is bad.
long settle_index(const std::vector<bool>& bad) {
    long last_bad = -1;
    for (std::size_t i = 0; i < bad.size(); ++i)
        if (bad[i]) last_bad = long(i);
    if (last_bad == long(bad.size()) - 1) return -1;
    return last_bad + 1;
}

}  // namespace

const char* to_string(BarrierKind k) { return k == BarrierKind::Lower ? "lower" : "upper"; }

BarrierValue eval_barrier(const BarrierSpec& spec, const MatchingState& s, double x) {
    if (!(x >= 0.0)) throw RangeError("barrier needs x >= 0");
    const double y = s.a * x;
    if (y == 0.0) return {0.0, s.a * (1.0 + s.b * 1.0)};  // f'(0)=1, g'(0)=h'(0)=0
    const auto v = spec.tables->at(y);
    const double c = second_coeff(spec, s);
    const double G = spec.kind == BarrierKind::Lower ? v.g : v.h;
    const double Gp = spec.kind == BarrierKind::Lower ? v.g_prime : v.h_prime;
    const double yp1 = 1.0 + y;
    BarrierValue out;
    out.value = y / yp1 + s.b * v.f - s.b * s.b * c * G;
    out.slope = s.a * (1.0 / (yp1 * yp1) + s.b * v.f_prime - s.b * s.b * c * Gp);
    return out;
}

BarrierValue eval_barrier(const BarrierSpec& spec, double x, double t) {
    if (!(x >= 0.0 && x <= 1.0)) throw RangeError("barrier needs x in [0,1]");
    return eval_barrier(spec, spec.state(t), x);
}

namespace {

double reduced_from_values(const BarrierSpec& spec, const MatchingState& s, double y, const SpecialTable::Values& v) {
    const double b = s.b, gam = s.gamma;
    if (spec.kind == BarrierKind::Lower) {
        return -gam * v.f + b * (2.0 * v.f_prime * v.g + 2.0 * v.f * v.g_prime - y * v.g_prime + 2.0 * (1.0 + gam) * v.g) -
               2.0 * b * b * v.g * v.g_prime;
    }
    const double M = spec.tables->M();
    const double opg = 1.0 + gam;
    return gam * (2.0 * v.f * v.f_prime - y * v.f_prime) + M * opg * v.phi - (s.gamma_prime / s.a) * v.h +
           opg * b * (2.0 * v.f_prime * v.h + 2.0 * v.f * v.h_prime - y * v.h_prime + 2.0 * opg * v.h) -
           2.0 * opg * opg * b * b * v.h * v.h_prime;
}

}  // namespace

double residual_reduced(const BarrierSpec& spec, const MatchingState& s, double y) {
    return reduced_from_values(spec, s, y, spec.tables->at(y));
}

double residual_reduced(const BarrierSpec& spec, double y, double t) { return residual_reduced(spec, spec.state(t), y); }

double parabolic_residual_fd(const std::function<double(double, double)>& v, double x, double t, FdSteps st) {
    const double v0 = v(x, t);
    const double vl = v(x - st.dx, t), vr = v(x + st.dx, t);
    const double vt = (v(x, t + st.dt) - v(x, t - st.dt)) / (2.0 * st.dt);
    const double vxx = (vr - 2.0 * v0 + vl) / (st.dx * st.dx);
    const double vx = (vr - vl) / (2.0 * st.dx);
    return vt - x * vxx - 2.0 * v0 * vx;
}

double residual_fd(const BarrierSpec& spec, double x, double t, FdSteps st) {
    if (!(st.dx > 0.0 && st.dt > 0.0)) throw ResolutionError("difference steps must be positive");
    if (x - st.dx < 0.0 || x + st.dx > 1.0) throw ResolutionError("x-stencil leaves [0,1]");
    if (t + spec.time_shift - st.dt < 0.0) throw ResolutionError("t-stencil reaches negative path time");
    const double a = spec.state(t).a;
    if (st.dx > 0.1 * std::max(x, 1.0 / a))
        throw ResolutionError("dx=" + format_double(st.dx) + " does not resolve the local scale at x=" + format_double(x));
    return parabolic_residual_fd([&](double xx, double tt) { return eval_barrier(spec, spec.state(tt), xx).value; }, x,
                                 t, st);
}

// ---------------------------------------------------------------- certification

std::vector<double> TimeRange::lattice() const {
    if (!(t_hi > t_lo) || samples < 2) throw InvalidInput("bad time range");
    std::vector<double> t(static_cast<std::size_t>(samples));
    if (t_lo > 0.0) {
        const double r = std::pow(t_hi / t_lo, 1.0 / (samples - 1));
        for (int k = 0; k < samples; ++k) t[std::size_t(k)] = t_lo * std::pow(r, k);
    } else {
        for (int k = 0; k < samples; ++k) t[std::size_t(k)] = t_lo + (t_hi - t_lo) * k / (samples - 1);
    }
    t.back() = t_hi;
    return t;
}

std::string ResidualReport::to_json() const {
    nlohmann::json j;
    j["kind"] = to_string(kind);
    j["K"] = K;
    j["M"] = M;
    j["box"] = {{"x", {0.0, 1.0}}, {"t", {box.t_lo, box.t_hi}}, {"t_samples", box.samples}};
    j["threshold_T"] = num(threshold_T);
    j["worst_value"] = worst_value;
    j["worst_location"] = {{"x", worst_x}, {"y", worst_y}, {"t", worst_t}};
    j["sign_ok"] = sign_ok;
    return j.dump(2);
}

std::string OnsetReport::to_json() const {
    nlohmann::json j;
    j["ok"] = ok;
    j["onset_time"] = num(onset_time);
    j["worst_margin"] = worst_margin;
    return j.dump(2);
}

std::string ShiftResult::to_json() const {
    nlohmann::json j;
    j["T1"] = T1;
    j["T2"] = T2;
    j["worst_lower_minus_u"] = worst_lower;
    j["worst_u_minus_upper"] = worst_upper;
    return j.dump(2);
}

ResidualReport certify_sign(const BarrierSpec& spec, const TimeRange& range, int y_per_decade) {
    const auto times = range.lattice();
    const double y_first = spec.tables->options().y_first;
    const bool lower = spec.kind == BarrierKind::Lower;

    // the tables do not depend on t: evaluate them once on the whole lattice
    const double a_max = spec.state(times.back()).a;
    const auto ys = y_lattice(y_first, std::min(a_max, spec.tables->y_max()), y_per_decade);
    std::vector<SpecialTable::Values> vals;
    vals.reserve(ys.size());
    for (double y : ys) vals.push_back(spec.tables->at(y));

    ResidualReport rep;
    rep.kind = spec.kind;
    rep.K = spec.path->K().value_or(kNaN);
    rep.M = spec.tables->M();
    rep.box = range;

    struct Worst {
        double value, y, t, a;
    };
    std::vector<Worst> per_t;
    std::vector<bool> bad;
    for (double t : times) {
        const auto s = spec.state(t);
        Worst w{lower ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity(), 0.0, t, s.a};
        auto visit = [&](double y, double r) {
            if (lower ? r > w.value : r < w.value) w = {r, y, t, s.a};
        };
        for (std::size_t k = 0; k < ys.size() && ys[k] <= s.a; ++k) visit(ys[k], reduced_from_values(spec, s, ys[k], vals[k]));
        visit(s.a, residual_reduced(spec, s, s.a));
        per_t.push_back(w);
        bad.push_back(lower ? w.value > 0.0 : w.value < 0.0);
    }

    const long idx = settle_index(bad);
    rep.sign_ok = idx >= 0;
    rep.threshold_T = rep.sign_ok ? times[std::size_t(idx)] : kNaN;
    const std::size_t from = rep.sign_ok ? std::size_t(idx) : 0;
    Worst worst = per_t[from];
    for (std::size_t i = from; i < per_t.size(); ++i)
        if (lower ? per_t[i].value > worst.value : per_t[i].value < worst.value) worst = per_t[i];
    rep.worst_value = worst.value;
    rep.worst_y = worst.y;
    rep.worst_t = worst.t;
    rep.worst_x = worst.y / worst.a;
    return rep;
}

namespace {

OnsetReport settle(const std::vector<double>& t, const std::vector<double>& margin, bool strict) {
    OnsetReport r;
    r.t = t;
    r.margin = margin;
    std::vector<bool> bad;
    for (double m : margin) bad.push_back(strict ? !(m > 0.0) : !(m >= 0.0));
    const long idx = settle_index(bad);
    r.ok = idx >= 0;
    r.onset_time = r.ok ? t[std::size_t(idx)] : kNaN;
    const std::size_t from = r.ok ? std::size_t(idx) : 0;
    r.worst_margin = *std::min_element(margin.begin() + long(from), margin.end());
    return r;
}

}  // namespace

OnsetReport check_lower_monotone(const BarrierSpec& spec, const TimeRange& range, int y_per_decade) {
    const auto times = range.lattice();
    const double a_max = spec.state(times.back()).a;
    const auto ys = y_lattice(spec.tables->options().y_first, std::min(a_max, spec.tables->y_max()), y_per_decade);
    std::vector<SpecialTable::Values> vals;
    for (double y : ys) vals.push_back(spec.tables->at(y));
    std::vector<double> margin;
    for (double t : times) {
        const auto s = spec.state(t);
        const double c = second_coeff(spec, s);
        auto scaled = [&](double y, const SpecialTable::Values& v) {
            const double Gp = spec.kind == BarrierKind::Lower ? v.g_prime : v.h_prime;
            return 1.0 / ((1.0 + y) * (1.0 + y)) + s.b * v.f_prime - s.b * s.b * c * Gp;
        };
        double m = 1.0 + s.b;  // y = 0
        for (std::size_t k = 0; k < ys.size() && ys[k] <= s.a; ++k) m = std::min(m, scaled(ys[k], vals[k]));
        m = std::min(m, scaled(s.a, spec.tables->at(s.a)));
        margin.push_back(m);
    }
    return settle(times, margin, true);
}

OnsetReport check_boundary_matching(const BarrierSpec& spec, const TimeRange& range) {
    const auto times = range.lattice();
    std::vector<double> margin;
    for (double t : times) {
        const auto s = spec.state(t);
        const auto v = spec.tables->at(s.a);
        const double ab = s.a_prime / s.a;  // = a·b
        if (spec.kind == BarrierKind::Lower)
            margin.push_back(s.a / (s.a + 1.0) - ab * v.f + ab * s.b * v.g);
        else
            margin.push_back(ab * v.f - ab * s.b * (1.0 + s.epsilon) * v.h - s.a / (s.a + 1.0));
    }
    return settle(times, margin, spec.kind == BarrierKind::Lower);
}

// ---------------------------------------------------------------- sandwich

SandwichGap sandwich_gap(const BarrierSpec& lower, const BarrierSpec& upper, const Snapshot& u, double T1, double T2) {
    SandwichGap g{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    const auto sl = lower.state(u.time - T1);
    const auto su = upper.state(u.time + T2);
    for (std::size_t i = 0; i < u.size(); ++i) {
        g.lower_excess = std::max(g.lower_excess, eval_barrier(lower, sl, u.x(i)).value - u.values[i]);
        g.upper_excess = std::max(g.upper_excess, u.values[i] - eval_barrier(upper, su, u.x(i)).value);
    }
    return g;
}

ShiftResult find_time_shifts(const BarrierSpec& lower, const BarrierSpec& upper, const std::vector<Snapshot>& solution,
                             const ShiftOptions& opt) {
    if (solution.empty()) throw InvalidInput("no snapshots for the shift search");
    if (!(opt.lattice > 0.0) || !(opt.shift_max >= 0.0)) throw InvalidInput("bad shift lattice");
    const auto n = long(std::floor(opt.shift_max / opt.lattice + 1e-9));

    auto worst_for = [&](const BarrierSpec& spec, double shift, bool is_lower, double& worst) {
        worst = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (const auto& u : solution) {
            if (is_lower && (u.time < shift || u.time < opt.lower_from)) continue;
            if (!is_lower && u.time < opt.upper_from) continue;
            any = true;
            const auto s = spec.state(is_lower ? u.time - shift : u.time + shift);
            for (std::size_t i = 0; i < u.size(); ++i) {
                const double b = eval_barrier(spec, s, u.x(i)).value;
                const double ex = is_lower ? b - u.values[i] : u.values[i] - b;
                worst = std::max(worst, ex);
                if (ex > opt.tol) return false;
            }
        }
        return any;
    };

    ShiftResult r;
    bool found = false;
    for (long k = 0; k <= n && !found; ++k) {
        r.T1 = double(k) * opt.lattice;
        found = worst_for(lower, r.T1, true, r.worst_lower);
    }
    if (!found) throw OrderingFailure("no lower shift T1 <= " + format_double(opt.shift_max) + " orders below the solution");
    found = false;
    for (long k = 0; k <= n && !found; ++k) {
        r.T2 = double(k) * opt.lattice;
        found = worst_for(upper, r.T2, false, r.worst_upper);
    }
    if (!found) throw OrderingFailure("no upper shift T2 <= " + format_double(opt.shift_max) + " orders above the solution");
    return r;
}

}  // namespace kscrit
