#include "kscrit/matching.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <boost/numeric/odeint.hpp>

#include "json.hpp"
#include "kscrit/errors.hpp"
#include "kscrit/field_io.hpp"

namespace kscrit {

namespace odeint = boost::numeric::odeint;
using State = std::array<double, 1>;

double H_of(double s, double K) { return s * (1.0 + 5.0 * s + 3.0 * K * s * s) / (1.0 + 2.5 * s + K * s * s); }

double H_prime(double s, double K) {
    const double N = 1.0 + 5.0 * s + 3.0 * K * s * s, Np = 5.0 + 6.0 * K * s;
    const double D = 1.0 + 2.5 * s + K * s * s, Dp = 2.5 + 2.0 * K * s;
    return (N + s * Np) / D - s * N * Dp / (D * D);
}

double gamma_of_a(double a, double K) {
    if (!(a > 1.0)) throw DomainError("gamma_of_a needs a > 1");
    return H_of(1.0 / std::log(a), K);
}

double closed_A(double t) {
    if (t < 0.0) throw DomainError("closed_A needs t >= 0");
    return std::exp(2.5 + std::sqrt(2.0 * t));
}

namespace {

double rhs(double L, double K) { return (L * L + 2.5 * L + K) / (L * L * L); }

void advance(double K, const MatchingControl& ctl, double& L, double t0, double t1) {
    if (t1 == t0) return;
    State x{L};
    auto sys = [K](const State& s, State& d, double) { d[0] = rhs(s[0], K); };
    if (ctl.fixed_step > 0.0) {
        const auto n = std::max<long>(1, long(std::ceil((t1 - t0) / ctl.fixed_step - 1e-9)));
        const double h = (t1 - t0) / double(n);
        odeint::runge_kutta_dopri5<State> stepper;
        double t = t0;
        for (long k = 0; k < n; ++k, t += h) stepper.do_step(sys, x, t, h);
    } else {
        auto stepper = odeint::make_controlled(ctl.atol, ctl.rtol, odeint::runge_kutta_dopri5<State>());
        odeint::integrate_adaptive(stepper, sys, x, t0, t1, std::min(1e-3, 0.1 * (t1 - t0)));
    }
    L = x[0];
}

}  // namespace

MatchingState state_from_log_a(double t, double L, double K) {
    MatchingState s;
    s.t = t;
    s.log_a = L;
    s.a = std::exp(L);
    const double eta = 2.5 / L + K / (L * L);
    s.a_prime = s.a / L * (1.0 + eta);
    s.b = (1.0 + eta) / (s.a * L);  // a'/a² without forming a²
    s.gamma = H_of(1.0 / L, K);
    s.gamma_prime = -(s.a_prime / (s.a * L * L)) * H_prime(1.0 / L, K);
    s.epsilon = s.gamma;
    return s;
}

MatchingPath integrate_a(double K, double t_end, const MatchingControl& ctl, const std::vector<double>& extra) {
    if (!std::isfinite(K)) throw InvalidK("K must be finite");
    if (!(t_end > 0.0)) throw InvalidInput("t_end must be positive");
    const double L0 = std::log(2.0);
    if (!(1.0 + 2.5 / L0 + K / (L0 * L0) > 0.0)) throw InvalidK("a' <= 0 at a = 2 for K=" + format_double(K));

    std::vector<double> times{0.0};
    for (double t = 1e-3; t < t_end; t *= 1.05) times.push_back(t);
    for (double t = 1.0; t < t_end; t += 1.0) times.push_back(t);  // a varies on the √t scale
    for (double t : extra)
        if (t >= 0.0 && t <= t_end) times.push_back(t);
    times.push_back(t_end);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    MatchingPath p;
    p.K_ = K;
    p.ctl_ = ctl;
    double L = L0;
    p.samples_.push_back(state_from_log_a(0.0, L, K));
    for (std::size_t i = 1; i < times.size(); ++i) {
        advance(K, ctl, L, times[i - 1], times[i]);
        if (!std::isfinite(L) || L <= 0.0) throw SolverFailure("matching ODE left the admissible range");
        p.samples_.push_back(state_from_log_a(times[i], L, K));
    }
    return p;
}

MatchingPath MatchingPath::synthetic(std::vector<MatchingState> samples) {
    if (samples.empty()) throw InvalidInput("synthetic path needs samples");
    std::sort(samples.begin(), samples.end(), [](auto& x, auto& y) { return x.t < y.t; });
    for (auto& s : samples)
        if (s.log_a == 0.0 && s.a > 0.0) s.log_a = std::log(s.a);
    MatchingPath p;
    p.samples_ = std::move(samples);
    return p;
}

MatchingState MatchingPath::at(double t) const {
    if (!(t >= samples_.front().t && t <= samples_.back().t))
        throw RangeError("t=" + format_double(t) + " outside the matching path [" + format_double(samples_.front().t) +
                         ", " + format_double(samples_.back().t) + "]");
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t, [](double v, const MatchingState& s) { return v < s.t; });
    const MatchingState& lo = *(it - 1);
    if (lo.t == t) return lo;
    if (K_) {
        double L = lo.log_a;
        advance(*K_, ctl_, L, lo.t, t);
        return state_from_log_a(t, L, *K_);
    }
    const MatchingState& hi = *it;
    const double w = (t - lo.t) / (hi.t - lo.t);
    auto mix = [w](double x, double y) { return (1.0 - w) * x + w * y; };
    MatchingState s;
    s.t = t;
    s.a = mix(lo.a, hi.a);
    s.log_a = std::log(s.a);
    s.a_prime = mix(lo.a_prime, hi.a_prime);
    s.b = mix(lo.b, hi.b);
    s.gamma = mix(lo.gamma, hi.gamma);
    s.gamma_prime = mix(lo.gamma_prime, hi.gamma_prime);
    s.epsilon = mix(lo.epsilon, hi.epsilon);
    return s;
}

#define KSCRIT_COLUMN(name, field)                          \
    std::vector<double> MatchingPath::name() const {        \
        std::vector<double> v;                              \
        v.reserve(samples_.size());                         \
        for (const auto& s : samples_) v.push_back(s.field); \
        return v;                                           \
    }
KSCRIT_COLUMN(t, t)
KSCRIT_COLUMN(a, a)
KSCRIT_COLUMN(a_prime, a_prime)
KSCRIT_COLUMN(gamma, gamma)
KSCRIT_COLUMN(epsilon, epsilon)
#undef KSCRIT_COLUMN

void MatchingPath::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "t,a,a',b,gamma\n";
    for (const auto& s : samples_) write_csv_row(os, {s.t, s.a, s.a_prime, s.b, s.gamma});
}

std::string MatchingPath::header_json() const {
    nlohmann::json j;
    if (K_) j["K"] = *K_;
    else j["K"] = nullptr;
    j["rtol"] = ctl_.rtol;
    j["atol"] = ctl_.atol;
    j["fixed_step"] = ctl_.fixed_step;
    j["integrator"] = {{"method", "dormand_prince"}, {"order", 5}};
    j["t_end"] = t_end();
    j["samples"] = samples_.size();
    return j.dump(2);
}

std::vector<double> b_of(const MatchingPath& path) {
    std::vector<double> b;
    for (const auto& s : path.samples()) b.push_back((s.a_prime / s.a) / s.a);
    return b;
}

MonotoneGamma gamma_monotone_check(const MatchingPath& path) {
    MonotoneGamma r;
    const auto& s = path.samples();
    std::size_t start = 0;
    while (start < s.size() && !(s[start].log_a >= 3.0)) ++start;
    if (start == s.size()) {
        r.onset_time = s.back().t;
        return r;
    }
    r.onset_time = s[start].t;
    for (std::size_t i = start + 1; i < s.size(); ++i) {
        const double inc = s[i].gamma - s[i - 1].gamma;
        if (inc > 0.0) {
            r.ok = false;
            r.worst_increase = std::max(r.worst_increase, inc);
        }
    }
    return r;
}

}  // namespace kscrit
