#include "kscrit/special.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "kscrit/errors.hpp"
#include "kscrit/field_io.hpp"

namespace kscrit {

double apply_L(double w, double wp, double wpp, double y) {
    const double yp1 = 1.0 + y;
    return y * wpp + 2.0 * y * wp / yp1 + 2.0 * w / (yp1 * yp1);
}

double apply_L_divergence(const std::function<double(double)>& w, double y, double rel_step) {
    const double d = rel_step * y;
    // inner(s) = ((s+1)²/s) w(s); outer(s) = (s/(s+1))² inner'(s)
    auto inner = [&](double s) { return (s + 1.0) * (s + 1.0) / s * w(s); };
    auto outer = [&](double s) {
        const double q = s / (s + 1.0);
        return q * q * (inner(s + 0.5 * d) - inner(s - 0.5 * d)) / d;
    };
    return (outer(y + 0.5 * d) - outer(y - 0.5 * d)) / d;
}

// ---------------------------------------------------------------- φ and f₂

namespace {
constexpr double kLog2 = 0.69314718055994530942;
}

double PhiSpec::value(double y) const {
    if (y >= 2.0) return scale / std::log(y);
    const double t = 0.5 * y;
    const double v2 = 1.0 / kLog2, d2 = -0.5 / (kLog2 * kLog2);
    const double h10 = t * t * t - 2.0 * t * t + t;
    const double h01 = -2.0 * t * t * t + 3.0 * t * t;
    const double h11 = t * t * t - t * t;
    return scale * (2.0 * slope0 * h10 + v2 * h01 + 2.0 * d2 * h11);
}

double PhiSpec::prime(double y) const {
    if (y >= 2.0) {
        const double l = std::log(y);
        return -scale / (y * l * l);
    }
    const double t = 0.5 * y;
    const double v2 = 1.0 / kLog2, d2 = -0.5 / (kLog2 * kLog2);
    const double h10 = 3.0 * t * t - 4.0 * t + 1.0;
    const double h01 = -6.0 * t * t + 6.0 * t;
    const double h11 = 3.0 * t * t - 2.0 * t;
    return scale * 0.5 * (2.0 * slope0 * h10 + v2 * h01 + 2.0 * d2 * h11);
}

void PhiSpec::validate() const {
    if (!(slope0 > 0.0) || !(scale > 0.0)) throw InvalidInput("phi needs a positive slope at 0 and positive scale");
    for (int k = 1; k < 4000; ++k) {
        const double y = 2.0 * k / 4000.0;
        if (!(value(y) > 0.0)) throw InvalidInput("phi blend is not positive on (0,2)");
    }
}

double cutoff_f2(double y, CutoffBlend blend) {
    if (y >= 1.0) return 1.0;
    if (y <= 0.0) return 0.0;
    if (blend == CutoffBlend::Smoothstep) return y * y * (3.0 - 2.0 * y);
    const double s = std::sin(0.5 * M_PI * y);
    return s * s;
}

// ---------------------------------------------------------------- ℒ₀⁻¹

double eval(const PanelMesh& mesh, const PanelMesh::Stencil& s, const PanelFunction& f) {
    if (s.edge >= 0) return f.at_edges[std::size_t(s.edge)];
    return mesh.apply(s, f.at_points);
}

double eval(const PanelMesh& mesh, const PanelFunction& f, double y) {
    return eval(mesh, mesh.stencil(y), f);
}

std::vector<double> LInverse::apply_L_points() const {
    const auto& y = mesh->points();
    const auto wpp = mesh->differentiate(w_prime.at_points);
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i)
        out[i] = apply_L(w.at_points[i], w_prime.at_points[i], wpp[i], y[i]);
    return out;
}

namespace {

void check_origin_ratio(double y_small, double psi_small, double y_large, double psi_large, double factor) {
    if (!std::isfinite(psi_small) || !std::isfinite(psi_large))
        throw SingularInput("psi is not finite near the origin");
    const double r_small = std::abs(psi_small) / y_small;
    const double r_large = std::abs(psi_large) / y_large;
    if (r_small > factor * r_large + 1e-300 && r_small > 1e-12)
        throw SingularInput("psi(y)/y diverges as y -> 0 (psi is not O(y))");
}

}  // namespace

LInverse invert_L0(std::shared_ptr<const PanelMesh> mesh, std::vector<double> psi) {
    const auto& y = mesh->points();
    if (psi.size() != y.size()) throw InvalidInput("psi samples do not match the mesh");
    for (double v : psi)
        if (!std::isfinite(v)) throw SingularInput("psi sample is not finite");
    const std::size_t p = std::size_t(mesh->order());
    check_origin_ratio(y[0], psi[0], y[p - 1], psi[p - 1], 3.0);

    LInverse inv;
    inv.mesh = mesh;
    auto Psi = mesh->cumulative(psi);

    // outer integrand ((t+1)/t)²Ψ(t), only ever evaluated at interior Gauss points
    std::vector<double> integrand(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double q = (y[i] + 1.0) / y[i];
        integrand[i] = q * q * Psi.at_points[i];
    }
    auto outer = mesh->cumulative(integrand);

    auto fill = [](const std::vector<double>& ys, const std::vector<double>& O, const std::vector<double>& In,
                   std::vector<double>& w, std::vector<double>& wp) {
        w.resize(ys.size());
        wp.resize(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const double t = ys[i];
            if (t == 0.0) {
                w[i] = 0.0;
                wp[i] = 0.0;
                continue;
            }
            w[i] = t / ((t + 1.0) * (t + 1.0)) * O[i];
            wp[i] = (1.0 / t - 2.0 / (t + 1.0)) * w[i] + In[i] / t;
        }
    };
    fill(y, outer.at_points, Psi.at_points, inv.w.at_points, inv.w_prime.at_points);
    fill(mesh->edges(), outer.at_edges, Psi.at_edges, inv.w.at_edges, inv.w_prime.at_edges);
    inv.inner.at_points = std::move(Psi.at_points);
    inv.inner.at_edges = std::move(Psi.at_edges);
    return inv;
}

LInverse invert_L0(std::shared_ptr<const PanelMesh> mesh, const std::function<double(double)>& psi) {
    const double y1 = mesh->points().front();
    check_origin_ratio(1e-3 * y1, psi(1e-3 * y1), y1, psi(y1), 10.0);
    return invert_L0(mesh, mesh->sample(psi));
}

double roundtrip_error(const LInverse& inv, const std::vector<double>& psi, double lo, double hi) {
    const auto Lw = inv.apply_L_points();
    const auto& y = inv.mesh->points();
    double err = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] >= lo && y[i] <= hi) err = std::max(err, std::abs(Lw[i] - psi[i]));
    return err;
}

// ---------------------------------------------------------------- f, g, h

namespace {

double w0(double y) { return y / ((y + 1.0) * (y + 1.0)); }
double w0_prime(double y) { return (1.0 - y) / ((y + 1.0) * (y + 1.0) * (y + 1.0)); }

std::vector<double> concat(const PanelFunction& f) {
    std::vector<double> v = f.at_points;
    v.insert(v.end(), f.at_edges.begin(), f.at_edges.end());
    return v;
}

}  // namespace

FTable build_f(std::shared_ptr<const PanelMesh> mesh) {
    if (mesh->hi() < 10.0) throw InvalidInput("build_f needs Y_max >= 10");
    auto inv = invert_L0(mesh, mesh->sample(w0));
    FTable t;
    t.mesh = mesh;
    auto assemble = [](const std::vector<double>& ys, const std::vector<double>& w, const std::vector<double>& wp,
                       std::vector<double>& f, std::vector<double>& fp, std::vector<double>& ft) {
        f.resize(ys.size());
        fp.resize(ys.size());
        ft.resize(ys.size());
        for (std::size_t i = 0; i < ys.size(); ++i) {
            f[i] = w0(ys[i]) + w[i];
            fp[i] = w0_prime(ys[i]) + wp[i];
            ft[i] = 2.0 * f[i] * fp[i] - ys[i] * fp[i] + f[i];
        }
    };
    assemble(mesh->points(), inv.w.at_points, inv.w_prime.at_points, t.f.at_points, t.f_prime.at_points,
             t.tilde_f.at_points);
    assemble(mesh->edges(), inv.w.at_edges, inv.w_prime.at_edges, t.f.at_edges, t.f_prime.at_edges,
             t.tilde_f.at_edges);
    return t;
}

LInverse build_g(const FTable& f) { return invert_L0(f.mesh, f.tilde_f.at_points); }

MinM min_M(const std::vector<double>& tilde_f, const std::vector<double>& phi, double lattice) {
    if (tilde_f.size() != phi.size()) throw InvalidInput("min_M: sample size mismatch");
    if (!(lattice > 0.0)) throw InvalidInput("min_M: lattice must be positive");
    double need = 0.0;
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double slack = 1e-13 * (1.0 + std::abs(tilde_f[i]));
        if (tilde_f[i] >= -slack) continue;
        if (!(phi[i] > 0.0)) throw Infeasible("tilde_f < 0 where phi vanishes; no M can fix it");
        need = std::max(need, -tilde_f[i] / phi[i]);
    }
    MinM m;
    m.raw = std::ceil(need / lattice - 1e-9) * lattice;
    if (m.raw > 1e6) throw Infeasible("no M <= 1e6 makes tilde_f + M phi nonnegative");
    m.clamped = std::max(m.raw, 3.0);
    return m;
}

MinM min_M(const FTable& f, const PhiSpec& phi, double lattice) {
    auto phis = concat({f.mesh->sample([&](double y) { return phi.value(y); }),
                        f.mesh->sample_edges([&](double y) { return phi.value(y); })});
    return min_M(concat(f.tilde_f), phis, lattice);
}

HTable build_h(const FTable& f, const LInverse& g, double M, const PhiSpec& phi, bool enforce_min) {
    phi.validate();
    if (enforce_min) {
        const auto m = min_M(f, phi);
        if (M < m.clamped)
            throw MTooSmall("M=" + format_double(M) + " is below the admissible minimum " + format_double(m.clamped));
    }
    HTable t;
    t.M = M;
    t.g4 = invert_L0(f.mesh, [&](double y) { return phi.value(y); });
    auto combine = [M](const std::vector<double>& a, const std::vector<double>& b) {
        std::vector<double> out(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + M * b[i];
        return out;
    };
    t.h.at_points = combine(g.w.at_points, t.g4.w.at_points);
    t.h.at_edges = combine(g.w.at_edges, t.g4.w.at_edges);
    t.h_prime.at_points = combine(g.w_prime.at_points, t.g4.w_prime.at_points);
    t.h_prime.at_edges = combine(g.w_prime.at_edges, t.g4.w_prime.at_edges);
    return t;
}

HTable build_h(const FTable& f, const LInverse& g, double M, const PhiSpec& phi) {
    return build_h(f, g, M, phi, true);
}

LInverse build_component_gi(int i, std::shared_ptr<const PanelMesh> mesh, const PhiSpec& phi, CutoffBlend blend) {
    switch (i) {
        case 1: return invert_L0(mesh, [](double y) { return std::log1p(y); });
        case 2: return invert_L0(mesh, [blend](double y) { return cutoff_f2(y, blend); });
        case 3:
            return invert_L0(mesh, [](double y) {
                const double l = std::log1p(y);
                return l * l / (1.0 + y);
            });
        case 4: return invert_L0(mesh, [&](double y) { return phi.value(y); });
        default: throw InvalidInput("component index must be 1..4");
    }
}

// ---------------------------------------------------------------- table

SpecialTable SpecialTable::build(const SpecialOptions& opt) {
    SpecialTable t;
    t.opt_ = opt;
    t.phi_ = opt.phi;
    t.phi_.validate();
    t.mesh_ = std::make_shared<const PanelMesh>(
        PanelMesh::log_spaced(opt.y_max, opt.per_decade, opt.y_first, {1.0, 2.0}, opt.order));
    t.f_ = build_f(t.mesh_);
    t.g_ = build_g(t.f_);
    t.min_m_ = min_M(t.f_, t.phi_);
    const double M = opt.M < 0.0 ? std::ceil(2.0 * t.min_m_.clamped) / 2.0 : opt.M;
    t.h_ = build_h(t.f_, t.g_, M, t.phi_, opt.enforce_min_M);
    t.opt_.M = M;
    return t;
}

SpecialTable::Values SpecialTable::at(double y) const {
    const auto s = mesh_->stencil(y);
    Values v;
    v.f = eval(*mesh_, s, f_.f);
    v.f_prime = eval(*mesh_, s, f_.f_prime);
    v.tilde_f = eval(*mesh_, s, f_.tilde_f);
    v.g = eval(*mesh_, s, g_.w);
    v.g_prime = eval(*mesh_, s, g_.w_prime);
    v.h = eval(*mesh_, s, h_.h);
    v.h_prime = eval(*mesh_, s, h_.h_prime);
    v.phi = phi_.value(y);
    return v;
}

void SpecialTable::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path);
    os << "y,f,f',tilde_f,g,g',h,h'\n";
    const auto& e = mesh_->edges();
    for (std::size_t i = 0; i < e.size(); ++i)
        write_csv_row(os, {e[i], f_.f.at_edges[i], f_.f_prime.at_edges[i], f_.tilde_f.at_edges[i], g_.w.at_edges[i],
                           g_.w_prime.at_edges[i], h_.h.at_edges[i], h_.h_prime.at_edges[i]});
}

std::string SpecialTable::header_json() const {
    nlohmann::json j;
    j["M"] = M();
    j["Y_max"] = y_max();
    j["min_M_raw"] = min_m_.raw;
    j["min_M_clamped"] = min_m_.clamped;
    j["phi"] = {{"blend", "cubic_hermite"}, {"slope0", phi_.slope0}, {"scale", phi_.scale}, {"join", 2.0}};
    j["quadrature"] = {{"rule", "gauss_legendre_panels"}, {"order", mesh_->order()},
                       {"per_decade", opt_.per_decade},  {"y_first", opt_.y_first},
                       {"panels", mesh_->panels()}};
    return j.dump(2);
}

// ---------------------------------------------------------------- asymptotics

bool AsymptoticsReport::ok() const {
    return std::all_of(claims.begin(), claims.end(), [](const AsymptoticClaim& c) { return c.bounded; });
}

std::string AsymptoticsReport::to_json() const {
    nlohmann::json j;
    for (const auto& c : claims)
        j["claims"].push_back({{"name", c.name}, {"Y", c.y_windows}, {"ratio", c.ratios}, {"bounded", c.bounded}});
    j["f_error_at_top"] = f_error_at_top;
    j["g_over_y_error_at_top"] = g_over_y_error_at_top;
    j["ok"] = ok();
    return j.dump(2);
}

AsymptoticsReport check_asymptotics(const SpecialTable& table, const std::vector<double>& windows,
                                    double growth_limit, bool throw_on_violation) {
    if (windows.empty()) throw InvalidInput("no asymptotic windows");
    for (double Y : windows) {
        if (Y < 1e4) throw InvalidInput("asymptotic windows need Y >= 1e4");
        if (Y > table.y_max()) throw RangeError("window Y exceeds the table range; extend Y_max");
    }
    const auto mesh = table.mesh_ptr();
    const auto g1 = build_component_gi(1, mesh);
    const auto g2 = build_component_gi(2, mesh);
    const auto g3 = build_component_gi(3, mesh);
    const auto& g4 = table.h().g4;

    struct Spec {
        const char* name;
        std::function<double(const PanelMesh::Stencil&, double)> actual;
        std::function<double(double)> leading, oterm;
    };
    const auto& M = *mesh;
    auto col = [&M](const PanelFunction& f) {
        return [&M, &f](const PanelMesh::Stencil& s, double) { return eval(M, s, f); };
    };
    auto zero = [](double) { return 0.0; };
    auto lg = [](double y) { return std::log(y); };
    const std::vector<Spec> specs = {
        {"f", col(table.f().f), [&](double y) { return lg(y) - 2.0; }, [&](double y) { return lg(y) * lg(y) / y; }},
        {"f'", col(table.f().f_prime), [](double y) { return 1.0 / y; },
         [&](double y) { return lg(y) * lg(y) / (y * y); }},
        {"g", col(table.g().w), [&](double y) { return 0.5 * y * lg(y) - 2.25 * y; },
         [&](double y) { return std::pow(lg(y), 3); }},
        {"g'", col(table.g().w_prime), [&](double y) { return 0.5 * lg(y) - 1.75; },
         [&](double y) { return std::pow(lg(y), 3) / y; }},
        {"h", col(table.h().h), [&](double y) { return 0.5 * y * lg(y) - 2.25 * y; }, [&](double y) { return y / lg(y); }},
        {"h'", col(table.h().h_prime), [&](double y) { return 0.5 * lg(y) - 1.75; }, [&](double y) { return 1.0 / lg(y); }},
        {"g1", col(g1.w), [&](double y) { return 0.5 * y * lg(y) - 0.75 * y; }, lg},
        {"g1'", col(g1.w_prime), [&](double y) { return 0.5 * lg(y) - 0.25; }, [&](double y) { return lg(y) / y; }},
        {"g2", col(g2.w), [](double y) { return 0.5 * y; }, [](double) { return 1.0; }},
        {"g2'", col(g2.w_prime), [](double) { return 0.5; }, [](double y) { return 1.0 / y; }},
        {"g3", col(g3.w), zero, [&](double y) { return std::pow(lg(y), 3); }},
        {"g3'", col(g3.w_prime), zero, [&](double y) { return std::pow(lg(y), 3) / y; }},
        {"g4", col(g4.w), zero, [&](double y) { return y / lg(y); }},
        {"g4'", col(g4.w_prime), zero, [&](double y) { return 1.0 / lg(y); }},
    };

    AsymptoticsReport rep;
    const auto& edges = M.edges();
    for (const auto& s : specs) {
        AsymptoticClaim c;
        c.name = s.name;
        for (double Y : windows) {
            double sup = 0.0;
            for (double y : edges) {
                if (y < Y / 100.0 || y > Y) continue;
                const auto st = M.stencil(y);
                sup = std::max(sup, std::abs(s.actual(st, y) - s.leading(y)) / std::abs(s.oterm(y)));
            }
            c.y_windows.push_back(Y);
            c.ratios.push_back(sup);
        }
        c.bounded = c.ratios.back() <= growth_limit * c.ratios.front() + 1e-12;
        rep.claims.push_back(std::move(c));
    }
    const double top = *std::max_element(windows.begin(), windows.end());
    const auto v = table.at(top);
    rep.f_error_at_top = std::abs(v.f - (std::log(top) - 2.0));
    rep.g_over_y_error_at_top = std::abs(v.g / top - (0.5 * std::log(top) - 2.25));

    if (throw_on_violation && !rep.ok()) {
        std::string names;
        for (const auto& c : rep.claims)
            if (!c.bounded) names += c.name + " ";
        throw AsymptoticsViolation("deviation ratio grows with Y_max for: " + names);
    }
    return rep;
}

}  // namespace kscrit
