#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "json.hpp"
#include "kscrit/errors.hpp"
#include "kscrit/matching.hpp"

using namespace kscrit;

namespace {

const MatchingPath& path5() {
    static const MatchingPath p = integrate_a(5.0, 1000.0, {}, {100, 200, 250, 400, 800, 1000});
    return p;
}

/// t as a function of L = log a, by quadrature of dt/dL = L³/(L² + 5L/2 + K).
double t_of_L(double L, double K) {
    auto f = [K](double l) { return l * l * l / (l * l + 2.5 * l + K); };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, std::log(2.0), L, 15, 1e-14);
}

double deviation(double t) { return std::abs(path5().at(t).log_a - std::sqrt(2 * t) - 2.5); }

}  // namespace

TEST(ClosedForm, ReferenceValues) {
    EXPECT_NEAR(closed_A(0), 12.182493960703473, 1e-12);
    EXPECT_NEAR(closed_A(50) / 2.6834e5, 1.0, 1e-4);
    for (double t : {0.5, 3.0, 77.0, 1000.0}) {
        const double l = std::log(closed_A(t)) - 2.5;
        EXPECT_NEAR(l * l, 2 * t, 1e-10 * (1 + t));
    }
    EXPECT_THROW(closed_A(-1), DomainError);
}

TEST(Gamma, ReferenceValueAndSmallS) {
    EXPECT_NEAR(gamma_of_a(std::exp(10.0), 6.0), 0.168 / 1.31, 1e-14);
    EXPECT_NEAR(gamma_of_a(std::exp(10.0), 6.0), 0.1282, 1e-4);
    for (double s : {1e-2, 1e-3, 1e-4}) EXPECT_LE(std::abs(H_of(s, 5.0) - s), 3 * s * s);
    for (double s : {0.01, 0.3, 1.0}) {
        const double h = 1e-6;
        EXPECT_NEAR(H_prime(s, 5.0), (H_of(s + h, 5.0) - H_of(s - h, 5.0)) / (2 * h), 1e-8);
    }
    EXPECT_THROW(gamma_of_a(1.0, 5.0), DomainError);
    EXPECT_THROW(gamma_of_a(0.5, 5.0), DomainError);
}

TEST(IntegrateA, InitialStateAndInvalidK) {
    const auto s0 = path5().samples().front();
    EXPECT_EQ(s0.t, 0.0);
    EXPECT_DOUBLE_EQ(s0.a, 2.0);
    EXPECT_NEAR(s0.a_prime, 43.3, 0.05);
    EXPECT_THROW(integrate_a(-10.0, 1.0), InvalidK);
    EXPECT_THROW(integrate_a(std::nan(""), 1.0), InvalidK);
    EXPECT_THROW(integrate_a(5.0, 0.0), InvalidInput);
}

TEST(IntegrateA, LogAAboveSqrt2t) {
    for (const auto& s : path5().samples()) EXPECT_GE(s.log_a, std::sqrt(2 * s.t));
}

TEST(IntegrateA, MatchesQuadratureOracle) {
    for (double K : {5.0, 6.0, 0.0}) {
        const auto p = integrate_a(K, 1000.0);
        for (std::size_t i = 1; i < p.samples().size(); i += 37) {
            const auto& s = p.samples()[i];
            EXPECT_NEAR(t_of_L(s.log_a, K), s.t, 1e-8 * (1 + s.t)) << "K=" << K;
        }
    }
}

TEST(IntegrateA, StepHalvingConverged) {
    MatchingControl c1, c2;
    c1.fixed_step = 0.05;
    c2.fixed_step = 0.025;
    const double a1 = integrate_a(5.0, 1000.0, c1).at(1000.0).log_a;
    const double a2 = integrate_a(5.0, 1000.0, c2).at(1000.0).log_a;
    EXPECT_LT(std::abs(a1 - a2), 1e-8);
    EXPECT_NEAR(a2, path5().at(1000.0).log_a, 1e-9);
}

TEST(IntegrateA, AtBetweenSamplesAgreesWithDirectIntegration) {
    const double t = 123.456;
    EXPECT_NEAR(path5().at(t).log_a, integrate_a(5.0, t).at(t).log_a, 1e-10);
    EXPECT_THROW(path5().at(1000.5), RangeError);
}

TEST(MatchingState, DerivedQuantities) {
    const auto b = b_of(path5());
    const auto& ss = path5().samples();
    for (std::size_t i = 0; i < ss.size(); ++i) {
        const auto& s = ss[i];
        EXPECT_EQ(s.epsilon, s.gamma);
        EXPECT_NEAR(b[i], s.b, 1e-13 * s.b);
        const double eta = 2.5 / s.log_a + 5.0 / (s.log_a * s.log_a);
        EXPECT_NEAR(s.b * s.a * s.log_a, 1 + eta, 1e-12);
        if (s.t >= 400) {
            EXPECT_GE(s.b * s.a * s.log_a, 0.9);
            EXPECT_LE(s.b * s.a * s.log_a, 1.1);
        }
    }
}

TEST(MatchingState, FiniteDifferenceIdentities) {
    for (double t : {1.0, 10.0, 100.0, 500.0}) {
        const double h = 1e-4 * t;
        const auto m = path5().at(t - h), s = path5().at(t), p = path5().at(t + h);
        // b' = −(1+γ) a b²
        const double db = (p.b - m.b) / (2 * h);
        EXPECT_NEAR(db / (-(1 + s.gamma) * s.a * s.b * s.b), 1.0, 2e-6) << t;
        // γ = (a/a')'
        const double dq = (p.a / p.a_prime - m.a / m.a_prime) / (2 * h);
        EXPECT_NEAR(dq / s.gamma, 1.0, 2e-6) << t;
        // γ' by differences of γ
        EXPECT_NEAR((p.gamma - m.gamma) / (2 * h) / s.gamma_prime, 1.0, 2e-6) << t;
        // a' by differences of a
        EXPECT_NEAR((p.a - m.a) / (2 * h) / s.a_prime, 1.0, 2e-6) << t;
    }
}

TEST(MatchingState, GammaMonotoneAndDecay) {
    const auto r = gamma_monotone_check(path5());
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.worst_increase, 0.0);
    double prev = 1e300;
    for (double t : {100.0, 250.0, 1000.0}) {
        const auto s = path5().at(t);
        const double c = s.gamma_prime * std::pow(s.log_a, 3);
        EXPECT_LT(std::abs(c + 1), 10 / s.log_a) << t;
        EXPECT_LT(std::abs(c + 1), prev);
        prev = std::abs(c + 1);
    }
}

TEST(MatchingState, ConvergenceToClosedForm) {
    for (double t : {100.0, 400.0, 1000.0}) {
        const double d = path5().at(t).log_a - std::sqrt(2 * t);
        EXPECT_GT(d, 2.0) << t;
        EXPECT_LT(d, 3.0) << t;
        // O(t^{-1/2} log t) with an O(1) constant
        const double c = deviation(t) / (std::log(t) / std::sqrt(t));
        EXPECT_GT(c, 0.5) << t;
        EXPECT_LT(c, 1.0) << t;
    }
    for (double t : {100.0, 200.0, 250.0}) EXPECT_LE(deviation(4 * t) / deviation(t), 0.55 * std::log(4 * t) / std::log(t));
    double prev = 1e300;
    for (int t = 100; t <= 1000; ++t) {
        const double d = deviation(t);
        EXPECT_LE(d, prev);
        prev = d;
    }
}

TEST(MatchingPath, CsvAndHeader) {
    const auto dir = std::filesystem::temp_directory_path();
    const auto p = integrate_a(6.0, 10.0);
    p.write_csv((dir / "kscrit_match.csv").string());
    std::ifstream in(dir / "kscrit_match.csv");
    std::string header, row;
    std::getline(in, header);
    EXPECT_EQ(header, "t,a,a',b,gamma");
    std::size_t rows = 0;
    while (std::getline(in, row)) ++rows;
    EXPECT_EQ(rows, p.samples().size());
    const auto j = nlohmann::json::parse(p.header_json());
    EXPECT_EQ(j["K"].get<double>(), 6.0);
    EXPECT_EQ(j["integrator"]["order"].get<int>(), 5);
}

TEST(MatchingPath, Synthetic) {
    MatchingState s1, s2;
    s1.t = 0;
    s1.a = 3;
    s2.t = 2;
    s2.a = 5;
    s2.b = 1;
    const auto p = MatchingPath::synthetic({s2, s1});
    EXPECT_FALSE(p.K());
    EXPECT_DOUBLE_EQ(p.samples().front().log_a, std::log(3.0));
    EXPECT_DOUBLE_EQ(p.at(1.0).a, 4.0);
    EXPECT_DOUBLE_EQ(p.at(1.0).b, 0.5);
    EXPECT_THROW(p.at(3.0), RangeError);
    EXPECT_THROW(MatchingPath::synthetic({}), InvalidInput);
}
