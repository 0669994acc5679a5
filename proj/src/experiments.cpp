#include "kscrit/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "kscrit/errors.hpp"
#include "kscrit/field_io.hpp"
#include "kscrit/matching.hpp"
#include "kscrit/observables.hpp"
#include "kscrit/panels.hpp"
#include "kscrit/special.hpp"

namespace kscrit {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ------------------------------------------------------------ config registry

struct Entry {
    std::function<void(const std::string&)> set;
    std::function<nlohmann::json()> get;
};

double parse_real(const std::string& key, const std::string& s) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": not a number: '" + s + "'");
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t' || c == '[' || c == ']') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

Entry bind_key(const std::string& key, double& v) {
    return {[&v, key](const std::string& s) { v = parse_real(key, s); }, [&v] { return nlohmann::json(v); }};
}
Entry bind_key(const std::string& key, int& v) {
    return {[&v, key](const std::string& s) {
                const double d = parse_real(key, s);
                if (d != std::floor(d)) throw ConfigError(key + ": expected an integer");
                v = int(d);
            },
            [&v] { return nlohmann::json(v); }};
}
Entry bind_key(const std::string& key, std::size_t& v) {
    return {[&v, key](const std::string& s) {
                const double d = parse_real(key, s);
                if (d != std::floor(d) || d < 0) throw ConfigError(key + ": expected a nonnegative integer");
                v = std::size_t(d);
            },
            [&v] { return nlohmann::json(v); }};
}
Entry bind_key(const std::string& key, bool& v) {
    return {[&v, key](const std::string& s) {
                if (s == "true" || s == "1" || s == "yes") v = true;
                else if (s == "false" || s == "0" || s == "no") v = false;
                else throw ConfigError(key + ": expected true/false");
            },
            [&v] { return nlohmann::json(v); }};
}
Entry bind_key(const std::string&, std::string& v) {
    return {[&v](const std::string& s) { v = s; }, [&v] { return nlohmann::json(v); }};
}
Entry bind_key(const std::string& key, std::vector<double>& v) {
    return {[&v, key](const std::string& s) {
                v.clear();
                for (const auto& item : split_list(s)) v.push_back(parse_real(key, item));
            },
            [&v] { return nlohmann::json(v); }};
}

std::map<std::string, Entry> registry(ExperimentConfig& c) {
    std::map<std::string, Entry> r;
#define KS_BIND(section, field) r.emplace(#section "." #field, bind_key(#section "." #field, c.section.field))
    KS_BIND(special, y_max);
    KS_BIND(special, per_decade);
    KS_BIND(special, y_first);
    KS_BIND(special, order);
    KS_BIND(special, M);
    KS_BIND(special, windows);
    KS_BIND(special, growth_limit);
    KS_BIND(special, roundtrip_lo);
    KS_BIND(special, roundtrip_hi);
    KS_BIND(special, roundtrip_tol);
    KS_BIND(special, f_tol);
    KS_BIND(special, g_tol);
    KS_BIND(match, K);
    KS_BIND(match, t_end);
    KS_BIND(match, rtol);
    KS_BIND(match, atol);
    KS_BIND(match, window_lo);
    KS_BIND(match, window_hi);
    KS_BIND(match, bracket_lo);
    KS_BIND(match, bracket_hi);
    KS_BIND(match, halving_tol);
    KS_BIND(match, halving_step);
    KS_BIND(certify, K_lower);
    KS_BIND(certify, K_upper);
    KS_BIND(certify, y_max);
    KS_BIND(certify, t_lo);
    KS_BIND(certify, t_hi);
    KS_BIND(certify, samples);
    KS_BIND(certify, y_per_decade);
    KS_BIND(certify, threshold_max);
    KS_BIND(certify, swaps);
    KS_BIND(certify, K_lower_swap);
    KS_BIND(certify, K_upper_swap);
    KS_BIND(solve, n);
    KS_BIND(solve, x_min);
    KS_BIND(solve, ratio);
    KS_BIND(solve, t_end);
    KS_BIND(solve, output_step);
    KS_BIND(solve, scheme);
    KS_BIND(solve, rtol);
    KS_BIND(solve, atol);
    KS_BIND(solve, dt_initial);
    KS_BIND(solve, dt_max);
    KS_BIND(solve, reg_epsilon);
    KS_BIND(solve, u0);
    KS_BIND(solve, write_snapshots);
    KS_BIND(rate, t_lo);
    KS_BIND(rate, t_hi);
    KS_BIND(rate, d_lo);
    KS_BIND(rate, d_hi);
    KS_BIND(rate, r_at);
    KS_BIND(rate, r_lo);
    KS_BIND(rate, r_hi);
    KS_BIND(rate, trend_from);
    KS_BIND(profile, t_lo);
    KS_BIND(profile, t_hi);
    KS_BIND(profile, E_max);
    KS_BIND(sandwich, shift_max);
    KS_BIND(sandwich, lattice);
    KS_BIND(sandwich, tol);
    KS_BIND(sandwich, width_x);
#undef KS_BIND
    return r;
}

// ------------------------------------------------------------ output helpers

std::ostream& log_of(const RunContext& ctx) {
    static std::ostringstream sink;
    if (ctx.log) return *ctx.log;
    if (ctx.quiet) {
        sink.str("");
        return sink;
    }
    return std::cout;
}

fs::path out_path(const RunContext& ctx, const std::string& name) {
    fs::create_directories(ctx.out_dir);
    return fs::path(ctx.out_dir) / name;
}

void write_json(const RunContext& ctx, const std::string& name, const nlohmann::json& j) {
    write_text(out_path(ctx, name).string(), j.dump(2) + "\n");
}

std::ofstream open_csv(const RunContext& ctx, const std::string& name, const std::string& header) {
    std::ofstream os(out_path(ctx, name));
    if (!os) throw ConfigError("cannot write " + out_path(ctx, name).string());
    os << header << '\n';
    return os;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

// Runs body, mapping library errors to exit statuses.
CommandResult guarded(const std::string& name, const RunContext& /*ctx*/, const std::function<CommandResult()>& body) {
    try {
        return body();
    } catch (const Error& e) {
        CommandResult r;
        r.status = status_for(e.category());
        r.summary = {{"command", name}, {"error", e.category()}, {"message", e.what()}, {"status", r.status}};
        std::cerr << name << ": " << e.what() << '\n';
        return r;
    } catch (const std::filesystem::filesystem_error& e) {
        CommandResult r{2, {{"command", name}, {"error", "io"}, {"message", e.what()}, {"status", 2}}};
        std::cerr << name << ": " << e.what() << '\n';
        return r;
    }
}

SpecialOptions special_options(const ExperimentConfig& cfg, double y_max) {
    SpecialOptions o;
    o.y_max = y_max;
    o.per_decade = cfg.special.per_decade;
    o.y_first = cfg.special.y_first;
    o.order = cfg.special.order;
    o.M = cfg.special.M;
    return o;
}

Trajectory run_critical(const ExperimentConfig& cfg, const RunContext& ctx) {
    const auto sc = cfg.solver_config();
    std::vector<double> outs{0.05, 0.1, 0.15, 0.2, 0.25};
    for (double t = cfg.solve.output_step; t <= cfg.solve.t_end * (1.0 + 1e-12); t += cfg.solve.output_step)
        outs.push_back(std::round(t / cfg.solve.output_step) * cfg.solve.output_step);
    outs.push_back(cfg.solve.t_end);
    const auto t0 = std::chrono::steady_clock::now();
    auto traj = solve(cfg.initial_data(), sc, cfg.solve.t_end, outs);
    log_of(ctx) << "solve: " << traj.steps.size() << " steps to t=" << cfg.solve.t_end << " in "
                << seconds_since(t0) << " s\n";
    return traj;
}

double initial_K(const ExperimentConfig& cfg) {
    const auto& s = cfg.solve.u0;
    if (s.rfind("steady:", 0) == 0) return parse_real("solve.u0", s.substr(7));
    return 1.0;
}

}  // namespace

// ------------------------------------------------------------ config

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path);
    return parse(in);
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
    ExperimentConfig c;
    auto reg = registry(c);
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        const std::string key = item.fullname();
        auto it = reg.find(key);
        if (it == reg.end()) throw ConfigError("unknown key " + key);
        std::string value;
        for (std::size_t k = 0; k < item.inputs.size(); ++k) value += (k ? "," : "") + item.inputs[k];
        it->second.set(value);
    }
    c.validate();
    return c;
}

void ExperimentConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw ConfigError(std::string(what) + " must be positive");
    };
    positive(special.y_max, "special.y_max");
    positive(special.growth_limit, "special.growth_limit");
    positive(special.roundtrip_tol, "special.roundtrip_tol");
    positive(special.f_tol, "special.f_tol");
    positive(special.g_tol, "special.g_tol");
    if (!(special.roundtrip_lo > 0 && special.roundtrip_hi > special.roundtrip_lo))
        throw ConfigError("special.roundtrip range must satisfy 0 < lo < hi");
    positive(match.rtol, "match.rtol");
    positive(match.atol, "match.atol");
    positive(match.t_end, "match.t_end");
    positive(match.halving_tol, "match.halving_tol");
    positive(match.halving_step, "match.halving_step");
    if (!(match.window_hi > match.window_lo && match.window_hi <= match.t_end))
        throw ConfigError("match window must lie inside [0, t_end]");
    if (!(certify.t_hi > certify.t_lo && certify.t_lo > 0)) throw ConfigError("certify time range invalid");
    if (certify.samples < 2 || certify.y_per_decade < 1) throw ConfigError("certify sampling invalid");
    positive(certify.y_max, "certify.y_max");
    if (solve.n < 4) throw ConfigError("solve.n must be >= 4");
    positive(solve.x_min, "solve.x_min");
    positive(solve.t_end, "solve.t_end");
    positive(solve.output_step, "solve.output_step");
    positive(solve.rtol, "solve.rtol");
    positive(solve.atol, "solve.atol");
    if (solve.scheme != "backward_euler" && solve.scheme != "tr_bdf2")
        throw ConfigError("solve.scheme must be backward_euler or tr_bdf2");
    if (solve.u0 != "x" && solve.u0 != "x2" && solve.u0.rfind("steady:", 0) != 0)
        throw ConfigError("solve.u0 must be x, x2 or steady:<a>");
    if (!(rate.t_hi > rate.t_lo) || !(rate.d_hi > rate.d_lo) || !(rate.r_hi > rate.r_lo))
        throw ConfigError("rate brackets must be increasing");
    positive(profile.E_max, "profile.E_max");
    positive(sandwich.shift_max, "sandwich.shift_max");
    positive(sandwich.lattice, "sandwich.lattice");
    positive(sandwich.tol, "sandwich.tol");
    if (!(sandwich.width_x > 0 && sandwich.width_x < 1)) throw ConfigError("sandwich.width_x must be in (0,1)");
}

nlohmann::json ExperimentConfig::to_json() const {
    auto copy = *this;
    nlohmann::json j;
    for (auto& [key, e] : registry(copy)) {
        const auto dot = key.find('.');
        j[key.substr(0, dot)][key.substr(dot + 1)] = e.get();
    }
    return j;
}

SolverConfig ExperimentConfig::solver_config() const {
    SolverConfig s;
    s.grid = std::make_shared<GradedGrid>(make_graded_grid(solve.n, solve.x_min, solve.ratio));
    s.scheme = solve.scheme == "tr_bdf2" ? Scheme::TrBdf2 : Scheme::BackwardEuler;
    s.rtol = solve.rtol;
    s.atol = solve.atol;
    s.dt_initial = solve.dt_initial;
    s.dt_max = solve.dt_max;
    s.reg_epsilon = solve.reg_epsilon;
    if (solve.u0.rfind("steady:", 0) == 0) {
        const double a = initial_K(*this);
        if (!(a > 0)) throw ConfigError("steady:<a> needs a > 0");
        s.right_bc = a / (1.0 + a);
    }
    s.validate();
    return s;
}

Snapshot ExperimentConfig::initial_data() const {
    auto grid = std::make_shared<GradedGrid>(make_graded_grid(solve.n, solve.x_min, solve.ratio));
    if (solve.u0 == "x") return sample(grid, [](double x) { return x; });
    if (solve.u0 == "x2") return sample(grid, [](double x) { return x * x; });
    const double a = initial_K(*this);
    return sample(grid, [a](double x) { return a * x / (a * x + 1.0); });
}

int status_for(const std::string& c) {
    if (c == "asymptotics-violation" || c == "ordering-failure" || c == "maximum-principle-violation") return 1;
    return 2;
}

// ------------------------------------------------------------ shared pieces

std::vector<RatePoint> rate_series(const Trajectory& traj) {
    std::vector<RatePoint> out;
    for (const auto& s : traj.snapshots) {
        if (!(s.time > 0.0)) continue;
        RatePoint p;
        p.t = s.time;
        const auto fit = slope_origin(s);
        p.slope = fit.slope;
        p.fallback = fit.fallback;
        p.d = std::log(fit.slope) - std::sqrt(2.0 * s.time);
        p.l1 = l1_to_one(s);
        p.r = p.l1 / (std::sqrt(2.0 * s.time) * std::exp(-2.5 - std::sqrt(2.0 * s.time)));
        out.push_back(p);
    }
    return out;
}

double trend_slope(const std::vector<double>& ts, const std::vector<double>& ys) {
    if (ts.size() < 2 || ts.size() != ys.size()) return kNaN;
    const double n = double(ts.size());
    double mt = 0, my = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        mt += ts[i];
        my += ys[i];
    }
    mt /= n;
    my /= n;
    double stt = 0, sty = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        stt += (ts[i] - mt) * (ts[i] - mt);
        sty += (ts[i] - mt) * (ys[i] - my);
    }
    return sty / stt;
}

double profile_error(const Snapshot& u) {
    const double a = slope_origin(u).slope;
    double E = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        E = std::max(E, std::abs((1.0 - u.values[i]) * (1.0 + a * u.x(i)) - (1.0 - u.x(i))));
    return E;
}

nlohmann::json BarrierCertificate::to_json() const {
    nlohmann::json j;
    j["sign"] = nlohmann::json::parse(sign.to_json());
    auto strip = [](const OnsetReport& r) {
        auto o = nlohmann::json::parse(r.to_json());
        o.erase("t");
        o.erase("margin");
        return o;
    };
    j["boundary_matching"] = strip(matching);
    if (monotone) j["monotone"] = strip(*monotone);
    j["onset"] = num(onset);
    j["ok"] = ok;
    return j;
}

BarrierCertificate certify_barrier(const BarrierSpec& spec, const TimeRange& range, int y_per_decade) {
    BarrierCertificate c;
    c.sign = certify_sign(spec, range, y_per_decade);
    c.matching = check_boundary_matching(spec, range);
    if (spec.kind == BarrierKind::Lower) c.monotone = check_lower_monotone(spec, range, y_per_decade);
    c.ok = c.sign.sign_ok && c.matching.ok && (!c.monotone || c.monotone->ok);
    c.onset = c.ok ? std::max({c.sign.threshold_T, c.matching.onset_time, c.monotone ? c.monotone->onset_time : 0.0})
                   : kNaN;
    return c;
}

BarrierPair certified_barriers(const ExperimentConfig& cfg) {
    auto tables = std::make_shared<const SpecialTable>(SpecialTable::build(special_options(cfg, cfg.certify.y_max)));
    const TimeRange range{cfg.certify.t_lo, cfg.certify.t_hi, cfg.certify.samples};
    auto lower_path = std::make_shared<const MatchingPath>(integrate_a(cfg.certify.K_lower, cfg.certify.t_hi));
    auto upper_path = std::make_shared<const MatchingPath>(integrate_a(cfg.certify.K_upper, cfg.certify.t_hi));
    BarrierPair p;
    p.lower = BarrierSpec{BarrierKind::Lower, lower_path, tables, 0.0};
    p.upper = BarrierSpec{BarrierKind::Upper, upper_path, tables, 0.0};
    p.lower_cert = certify_barrier(p.lower, range, cfg.certify.y_per_decade);
    p.upper_cert = certify_barrier(p.upper, range, cfg.certify.y_per_decade);
    auto snap = [&](double onset) { return std::ceil(onset / cfg.sandwich.lattice) * cfg.sandwich.lattice; };
    if (p.lower_cert.ok) p.lower.time_shift = snap(p.lower_cert.onset);
    if (p.upper_cert.ok) p.upper.time_shift = snap(p.upper_cert.onset);
    return p;
}

// ------------------------------------------------------------ commands

CommandResult cmd_tabulate(const ExperimentConfig& cfg, const RunContext& ctx) {
    return guarded("tabulate", ctx, [&] {
        auto& log = log_of(ctx);
        const auto t0 = std::chrono::steady_clock::now();
        CommandResult res;
        auto& s = res.summary;
        s["command"] = "tabulate";
        const auto table = SpecialTable::build(special_options(cfg, cfg.special.y_max));
        table.write_csv(out_path(ctx, "special_table.csv").string());
        write_text(out_path(ctx, "special_table.json").string(), table.header_json() + "\n");
        s["M"] = table.M();
        s["min_M"] = {{"raw", table.min_m().raw}, {"clamped", table.min_m().clamped}};

        // operator round trip on three reference right-hand sides
        const double rt_hi = std::min(cfg.special.roundtrip_hi, table.y_max());
        std::vector<std::pair<std::string, std::function<double(double)>>> psis{
            {"y", [](double y) { return y; }},
            {"y/(1+y)^2", [](double y) { return y / ((1.0 + y) * (1.0 + y)); }},
            {"log(1+y)", [](double y) { return std::log1p(y); }}};
        bool rt_ok = true;
        for (const auto& [name, psi] : psis) {
            const auto inv = invert_L0(table.mesh_ptr(), psi);
            const double err = roundtrip_error(inv, table.mesh().sample(psi), cfg.special.roundtrip_lo, rt_hi);
            s["roundtrip"][name] = err;
            rt_ok = rt_ok && err <= cfg.special.roundtrip_tol;
        }
        s["roundtrip_ok"] = rt_ok;

        std::vector<double> windows;
        for (double w : cfg.special.windows)
            if (w >= 1e4 && w <= table.y_max()) windows.push_back(w);
        bool asym_ok = true;
        if (windows.size() < 2) {
            s["warning"] = "asymptotic window too small: Y_max must reach at least two windows >= 1e4";
            log << "tabulate: warning: " << s["warning"].get<std::string>() << '\n';
        } else {
            const auto rep = check_asymptotics(table, windows, cfg.special.growth_limit, false);
            write_text(out_path(ctx, "asymptotics.json").string(), rep.to_json() + "\n");
            s["asymptotics"] = nlohmann::json::parse(rep.to_json());
            asym_ok = rep.ok();
            if (windows.back() >= 1e6) {
                asym_ok = asym_ok && rep.f_error_at_top <= cfg.special.f_tol &&
                          rep.g_over_y_error_at_top <= cfg.special.g_tol;
            }
        }
        s["asymptotics_ok"] = asym_ok;
        res.status = rt_ok && asym_ok ? 0 : 1;
        s["status"] = res.status;
        s["seconds"] = seconds_since(t0);
        write_json(ctx, "tabulate_summary.json", s);
        log << "tabulate: M=" << table.M() << " roundtrip " << (rt_ok ? "ok" : "FAILED") << ", asymptotics "
            << (asym_ok ? "ok" : "VIOLATED") << '\n';
        return res;
    });
}

CommandResult cmd_match(const ExperimentConfig& cfg, const RunContext& ctx) {
    return guarded("match", ctx, [&] {
        auto& log = log_of(ctx);
        const auto t0 = std::chrono::steady_clock::now();
        CommandResult res;
        auto& s = res.summary;
        s["command"] = "match";
        MatchingControl ctl;
        ctl.rtol = cfg.match.rtol;
        ctl.atol = cfg.match.atol;
        const auto path = integrate_a(cfg.match.K, cfg.match.t_end, ctl);
        path.write_csv(out_path(ctx, "matching_path.csv").string());
        write_text(out_path(ctx, "matching_path.json").string(), path.header_json() + "\n");

        auto os = open_csv(ctx, "matching_deviation.csv", "t,log_a,deviation");
        bool in_bracket = true, monotone = true;
        double worst_increase = 0.0, prev = kNaN;
        std::vector<double> ts, devs;
        for (double t = cfg.match.window_lo; t <= cfg.match.window_hi * (1 + 1e-12); t += 1.0) {
            const double L = path.at(t).log_a;
            const double d = L - std::sqrt(2.0 * t);
            write_csv_row(os, {t, L, d});
            in_bracket = in_bracket && d >= cfg.match.bracket_lo && d <= cfg.match.bracket_hi;
            const double gap = std::abs(d - 2.5);
            if (std::isfinite(prev) && gap > prev) {
                monotone = false;
                worst_increase = std::max(worst_increase, gap - prev);
            }
            prev = gap;
            ts.push_back(t);
            devs.push_back(gap);
        }
        const double trend = trend_slope(ts, devs);

        // step-halving study with fixed-step RK5
        MatchingControl h1, h2;
        h1.fixed_step = cfg.match.halving_step;
        h2.fixed_step = cfg.match.halving_step / 2;
        const double a1 = integrate_a(cfg.match.K, cfg.match.window_hi, h1).at(cfg.match.window_hi).log_a;
        const double a2 = integrate_a(cfg.match.K, cfg.match.window_hi, h2).at(cfg.match.window_hi).log_a;
        const double halving = std::abs(std::expm1(a1 - a2));

        s["K"] = cfg.match.K;
        s["deviation"] = {{"window", {cfg.match.window_lo, cfg.match.window_hi}},
                          {"bracket", {cfg.match.bracket_lo, cfg.match.bracket_hi}},
                          {"at_window_lo", devs.empty() ? kNaN : 2.5 - devs.front()},
                          {"in_bracket", in_bracket},
                          {"gap_nonincreasing", monotone},
                          {"worst_gap_increase", worst_increase},
                          {"gap_trend_slope", num(trend)}};
        s["step_halving_relative_change"] = halving;
        const auto gm = gamma_monotone_check(path);
        s["gamma_monotone"] = {{"ok", gm.ok}, {"onset_time", gm.onset_time}, {"worst_increase", gm.worst_increase}};
        const bool ok = in_bracket && monotone && trend < 0 && halving < cfg.match.halving_tol;
        res.status = ok ? 0 : 1;
        s["status"] = res.status;
        s["seconds"] = seconds_since(t0);
        write_json(ctx, "match_summary.json", s);
        log << "match: K=" << cfg.match.K << " deviation in bracket: " << (in_bracket ? "yes" : "no")
            << ", halving change " << halving << '\n';
        return res;
    });
}

CommandResult cmd_certify(const ExperimentConfig& cfg, const RunContext& ctx) {
    return guarded("certify", ctx, [&] {
        auto& log = log_of(ctx);
        const auto t0 = std::chrono::steady_clock::now();
        CommandResult res;
        auto& s = res.summary;
        s["command"] = "certify";
        const auto pair = certified_barriers(cfg);
        s["lower"] = pair.lower_cert.to_json();
        s["upper"] = pair.upper_cert.to_json();
        s["lower"]["K"] = cfg.certify.K_lower;
        s["upper"]["K"] = cfg.certify.K_upper;
        auto within = [&](const BarrierCertificate& c) {
            return c.ok && c.sign.threshold_T <= cfg.certify.threshold_max;
        };
        bool ok = within(pair.lower_cert) && within(pair.upper_cert);

        auto os = open_csv(ctx, "boundary_matching.csv", "t,lower_margin,upper_margin");
        for (std::size_t i = 0; i < pair.lower_cert.matching.t.size(); ++i)
            write_csv_row(os, {pair.lower_cert.matching.t[i], pair.lower_cert.matching.margin[i],
                               pair.upper_cert.matching.margin[i]});

        if (cfg.certify.swaps) {
            // swapped K must break the boundary matching inequality
            const TimeRange range{cfg.certify.t_lo, cfg.certify.t_hi, cfg.certify.samples};
            auto lp = std::make_shared<const MatchingPath>(integrate_a(cfg.certify.K_lower_swap, cfg.certify.t_hi));
            auto up = std::make_shared<const MatchingPath>(integrate_a(cfg.certify.K_upper_swap, cfg.certify.t_hi));
            const BarrierSpec ls{BarrierKind::Lower, lp, pair.lower.tables, 0.0};
            const BarrierSpec us{BarrierKind::Upper, up, pair.lower.tables, 0.0};
            const auto lr = check_boundary_matching(ls, range);
            const auto ur = check_boundary_matching(us, range);
            s["swaps"] = {{"lower", {{"K", cfg.certify.K_lower_swap}, {"matching_holds", lr.ok},
                                     {"final_margin", lr.margin.back()}}},
                          {"upper", {{"K", cfg.certify.K_upper_swap}, {"matching_holds", ur.ok},
                                     {"final_margin", ur.margin.back()}}}};
            const bool fail_as_predicted = !lr.ok && !ur.ok;
            s["swaps"]["fail_as_predicted"] = fail_as_predicted;
            ok = ok && fail_as_predicted;
        }
        res.status = ok ? 0 : 1;
        s["status"] = res.status;
        s["seconds"] = seconds_since(t0);
        write_json(ctx, "certify_summary.json", s);
        log << "certify: lower onset " << pair.lower_cert.onset << ", upper onset " << pair.upper_cert.onset << " -> "
            << (ok ? "certified" : "FAILED") << '\n';
        return res;
    });
}

namespace {

nlohmann::json solve_summary(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory& traj,
                             int& status) {
    nlohmann::json s;
    s["manifest"] = traj.manifest(cfg.solver_config());
    s["manifest"]["u0"] = cfg.solve.u0;
    const double K = initial_K(cfg);
    const auto st = small_time_checks(traj, K, 0.5);
    s["small_time"] = {{"K", K},
                       {"tau", st.tau},
                       {"bound_ok", st.bound_ok},
                       {"worst_ratio", st.worst_ratio},
                       {"eta", st.have_tau ? num(st.eta) : nlohmann::json(nullptr)},
                       {"T_delta", st.have_T_delta ? num(st.T_delta) : nlohmann::json(nullptr)}};
    if (!st.bound_ok) status = 1;
    if (cfg.solve.write_snapshots) {
        fs::create_directories(out_path(ctx, "snapshots"));
        for (const auto& snap : traj.snapshots)
            write_snapshot_csv(snap, out_path(ctx, "snapshots/u_t" + format_double(snap.time) + ".csv").string());
    }
    return s;
}

}  // namespace

CommandResult cmd_solve(const ExperimentConfig& cfg, const RunContext& ctx) {
    return guarded("solve", ctx, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        CommandResult res;
        const auto traj = run_critical(cfg, ctx);
        res.summary = solve_summary(cfg, ctx, traj, res.status);
        res.summary["command"] = "solve";
        res.summary["status"] = res.status;
        res.summary["seconds"] = seconds_since(t0);
        write_json(ctx, "solve_summary.json", res.summary);
        return res;
    });
}

CommandResult cmd_rate(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory* traj) {
    return guarded("rate", ctx, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<Trajectory> own;
        if (!traj) traj = &own.emplace(run_critical(cfg, ctx));
        CommandResult res;
        auto& s = res.summary;
        s["command"] = "rate";
        const auto series = rate_series(*traj);
        auto os = open_csv(ctx, "rate.csv", "t,slope,log_slope,d,l1,r");
        bool in_bracket = true, fallback = false, have_r = false;
        double r_at = kNaN;
        std::vector<double> ts, dgap, rgap;
        for (const auto& p : series) {
            write_csv_row(os, {p.t, p.slope, std::log(p.slope), p.d, p.l1, p.r});
            fallback = fallback || p.fallback;
            if (p.t >= cfg.rate.t_lo && p.t <= cfg.rate.t_hi)
                in_bracket = in_bracket && p.d >= cfg.rate.d_lo && p.d <= cfg.rate.d_hi;
            if (p.t >= cfg.rate.trend_from && p.t <= cfg.rate.t_hi) {
                ts.push_back(p.t);
                dgap.push_back(std::abs(p.d - 2.5));
                rgap.push_back(std::abs(p.r - 1.0));
            }
            if (std::abs(p.t - cfg.rate.r_at) < 1e-9) {
                have_r = true;
                r_at = p.r;
            }
        }
        const double d_trend = trend_slope(ts, dgap), r_trend = trend_slope(ts, rgap);
        const bool d_ok = in_bracket && d_trend < 0;
        const bool r_ok = have_r && r_at >= cfg.rate.r_lo && r_at <= cfg.rate.r_hi && r_trend < 0;
        s["d"] = {{"window", {cfg.rate.t_lo, cfg.rate.t_hi}},
                  {"bracket", {cfg.rate.d_lo, cfg.rate.d_hi}},
                  {"in_bracket", in_bracket},
                  {"gap_trend_slope", num(d_trend)},
                  {"ok", d_ok}};
        s["r"] = {{"t", cfg.rate.r_at},
                  {"value", num(r_at)},
                  {"bracket", {cfg.rate.r_lo, cfg.rate.r_hi}},
                  {"gap_trend_slope", num(r_trend)},
                  {"ok", r_ok}};
        if (!series.empty()) s["d_final"] = series.back().d;
        if (fallback) s["warning"] = "slope fit fell back to u(x1)/x1 at some outputs";
        res.status = d_ok && r_ok ? 0 : 1;
        s["status"] = res.status;
        s["seconds"] = seconds_since(t0);
        write_json(ctx, "rate_summary.json", s);
        log_of(ctx) << "rate: d in bracket " << (in_bracket ? "yes" : "no") << ", r(" << cfg.rate.r_at << ")=" << r_at
                    << " -> " << (res.status == 0 ? "pass" : "FAIL") << '\n';
        return res;
    });
}

CommandResult cmd_profile(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory* traj) {
    return guarded("profile", ctx, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<Trajectory> own;
        if (!traj) traj = &own.emplace(run_critical(cfg, ctx));
        CommandResult res;
        auto& s = res.summary;
        s["command"] = "profile";
        auto os = open_csv(ctx, "profile.csv", "t,a_hat,E");
        bool decreasing = true;
        double prev = kNaN, E_end = kNaN;
        for (const auto& snap : traj->snapshots) {
            if (!(snap.time > 0)) continue;
            const double E = profile_error(snap);
            write_csv_row(os, {snap.time, slope_origin(snap).slope, E});
            if (snap.time >= cfg.profile.t_lo - 1e-12 && snap.time <= cfg.profile.t_hi + 1e-12) {
                if (std::isfinite(prev) && !(E < prev)) decreasing = false;
                prev = E;
                E_end = E;
            }
        }
        const bool ok = decreasing && E_end <= cfg.profile.E_max;
        s["window"] = {cfg.profile.t_lo, cfg.profile.t_hi};
        s["decreasing"] = decreasing;
        s["E_end"] = num(E_end);
        s["E_max"] = cfg.profile.E_max;
        res.status = ok ? 0 : 1;
        s["status"] = res.status;
        s["seconds"] = seconds_since(t0);
        write_json(ctx, "profile_summary.json", s);
        log_of(ctx) << "profile: E(" << cfg.profile.t_hi << ")=" << E_end << (decreasing ? ", decreasing" : ", NOT decreasing")
                    << '\n';
        return res;
    });
}

CommandResult cmd_sandwich(const ExperimentConfig& cfg, const RunContext& ctx, const Trajectory* traj) {
    return guarded("sandwich", ctx, [&] {
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<Trajectory> own;
        if (!traj) traj = &own.emplace(run_critical(cfg, ctx));
        CommandResult res;
        auto& s = res.summary;
        s["command"] = "sandwich";
        const auto pair = certified_barriers(cfg);
        if (!pair.lower_cert.ok || !pair.upper_cert.ok)
            throw OrderingFailure("barriers are not certified in the configured range");
        s["barrier_shift"] = {{"lower", pair.lower.time_shift}, {"upper", pair.upper.time_shift}};
        ShiftOptions opt;
        opt.shift_max = cfg.sandwich.shift_max;
        opt.lattice = cfg.sandwich.lattice;
        opt.tol = cfg.sandwich.tol;
        const auto shifts = find_time_shifts(pair.lower, pair.upper, traj->snapshots, opt);
        s["shifts"] = nlohmann::json::parse(shifts.to_json());

        auto os = open_csv(ctx, "sandwich.csv", "t,lower,u,upper,width,lower_excess,upper_excess");
        std::vector<double> ts, widths;
        bool holds = true;
        for (const auto& snap : traj->snapshots) {
            if (snap.time < shifts.T1 || !(snap.time > 0)) continue;
            const auto gap = sandwich_gap(pair.lower, pair.upper, snap, shifts.T1, shifts.T2);
            holds = holds && gap.lower_excess <= opt.tol && gap.upper_excess <= opt.tol;
            const double x = cfg.sandwich.width_x;
            const double lo = eval_barrier(pair.lower, x, snap.time - shifts.T1).value;
            const double up = eval_barrier(pair.upper, x, snap.time + shifts.T2).value;
            write_csv_row(os, {snap.time, lo, interp(snap, x), up, up - lo, gap.lower_excess, gap.upper_excess});
            ts.push_back(snap.time);
            widths.push_back(std::log(std::max(up - lo, 1e-300)));
        }
        const double width_trend = trend_slope(ts, widths);
        s["holds_at_all_outputs"] = holds;
        s["width_x"] = cfg.sandwich.width_x;
        s["log_width_trend_slope"] = num(width_trend);
        res.status = holds && width_trend < 0 ? 0 : 1;
        s["status"] = res.status;
        s["seconds"] = seconds_since(t0);
        write_json(ctx, "sandwich_summary.json", s);
        log_of(ctx) << "sandwich: T1=" << shifts.T1 << " T2=" << shifts.T2 << (holds ? ", holds" : ", BROKEN") << '\n';
        return res;
    });
}

CommandResult cmd_all(const ExperimentConfig& cfg, const RunContext& ctx) {
    CommandResult res;
    res.summary["command"] = "all";
    auto merge = [&](const CommandResult& r) {
        res.summary["commands"][r.summary.value("command", "?")] = r.status;
        if (r.status == 2 || res.status == 2) res.status = 2;
        else res.status = std::max(res.status, r.status);
    };
    merge(cmd_tabulate(cfg, ctx));
    merge(cmd_match(cfg, ctx));
    merge(cmd_certify(cfg, ctx));
    std::optional<Trajectory> traj;
    auto solved = guarded("solve", ctx, [&] {
        CommandResult r;
        traj.emplace(run_critical(cfg, ctx));
        r.summary = solve_summary(cfg, ctx, *traj, r.status);
        r.summary["command"] = "solve";
        r.summary["status"] = r.status;
        write_json(ctx, "solve_summary.json", r.summary);
        return r;
    });
    merge(solved);
    if (traj) {
        merge(cmd_rate(cfg, ctx, &*traj));
        merge(cmd_profile(cfg, ctx, &*traj));
        merge(cmd_sandwich(cfg, ctx, &*traj));
    }
    res.summary["status"] = res.status;
    write_json(ctx, "all_summary.json", res.summary);
    return res;
}

}  // namespace kscrit
