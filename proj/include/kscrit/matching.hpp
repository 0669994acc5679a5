#pragma once

#include <optional>
#include <string>
#include <vector>

namespace kscrit {

/// a, a', b = a'/a², γ = (a/a')', γ' and ε = γ at one time.
struct MatchingState {
    double t = 0, a = 0, log_a = 0, a_prime = 0, b = 0, gamma = 0, gamma_prime = 0, epsilon = 0;
};

struct MatchingControl {
    double rtol = 1e-12;
    double atol = 1e-14;
    double fixed_step = 0.0;  ///< > 0: fixed-step RK5 with this step (order studies)
};

/// H(s) = s(1 + 5s + 3Ks²)/(1 + 5s/2 + Ks²) and its derivative.
double H_of(double s, double K);
double H_prime(double s, double K);

/// γ = H(1/log a).  Throws DomainError for a ≤ 1.
double gamma_of_a(double a, double K);

/// A(t) = exp(5/2 + √(2t)).
double closed_A(double t);

/// Solution of (log a)' = (1 + 5/(2 log a) + K/log²a)/log a, a(0) = 2.
///
/// ODE-backed paths answer at(t) for any t in [0, t_end] by integrating from the
/// nearest stored sample; synthetic paths interpolate their samples linearly.
class MatchingPath {
public:
    static MatchingPath synthetic(std::vector<MatchingState> samples);

    MatchingState at(double t) const;

    std::optional<double> K() const { return K_; }
    double t_end() const { return samples_.back().t; }
    const std::vector<MatchingState>& samples() const { return samples_; }
    const MatchingControl& control() const { return ctl_; }

    std::vector<double> t() const;
    std::vector<double> a() const;
    std::vector<double> a_prime() const;
    std::vector<double> gamma() const;
    std::vector<double> epsilon() const;

    /// CSV (t, a, a', b, gamma) and the JSON header (K, tolerances, order).
    void write_csv(const std::string& path) const;
    std::string header_json() const;

private:
    friend MatchingPath integrate_a(double, double, const MatchingControl&, const std::vector<double>&);
    std::optional<double> K_;
    MatchingControl ctl_;
    std::vector<MatchingState> samples_;
};

/// Integrate the matching ODE to t_end; stores geometrically spaced samples
/// plus every time in extra_times.  Throws InvalidK if a' ≤ 0 at a = 2.
MatchingPath integrate_a(double K, double t_end, const MatchingControl& ctl = {},
                         const std::vector<double>& extra_times = {});

/// The full state for log a = L at time t.
MatchingState state_from_log_a(double t, double L, double K);

/// b_i = a'_i / a_i² for every sample.
std::vector<double> b_of(const MatchingPath& path);

struct MonotoneGamma {
    bool ok = true;
    double onset_time = 0.0;  ///< first sample with log a ≥ 3
    double worst_increase = 0.0;
};
/// γ nonincreasing beyond the first sample where log a ≥ 3.
MonotoneGamma gamma_monotone_check(const MatchingPath& path);

}  // namespace kscrit
