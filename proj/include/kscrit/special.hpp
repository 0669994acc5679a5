#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "kscrit/panels.hpp"

namespace kscrit {

/// ℒw = y w'' + 2y w'/(1+y) + 2w/(1+y)².
double apply_L(double w, double w_prime, double w_second, double y);

/// ℒw in the nested form [(y/(y+1))² ((y+1)²/y · w)']', by central differences
/// with relative step rel_step; independent of apply_L.
double apply_L_divergence(const std::function<double(double)>& w, double y, double rel_step = 1e-3);

/// C¹ extension of 1/log y to [0,2): cubic Hermite with φ(0)=0, φ'(0)=slope0,
/// matching value and slope of 1/log y at y = 2.
struct PhiSpec {
    double slope0 = 1.0 / (2.0 * 0.69314718055994530942);
    double scale = 1.0;  ///< overall multiplier (used to probe the M scaling)

    double value(double y) const;
    double prime(double y) const;
    /// Throws InvalidInput unless φ > 0 on (0,2) and φ'(0) > 0.
    void validate() const;
};

/// The cutoff f₂ (= 1 for y ≥ 1) on [0,1).
enum class CutoffBlend { Smoothstep, SineSquared };
double cutoff_f2(double y, CutoffBlend blend);

/// Samples of a function at the Gauss points and at the panel edges.
struct PanelFunction {
    std::vector<double> at_points;
    std::vector<double> at_edges;
};

/// Value at y using the exact edge sample when y is an edge.
double eval(const PanelMesh& mesh, const PanelFunction& f, double y);
double eval(const PanelMesh& mesh, const PanelMesh::Stencil& s, const PanelFunction& f);

/// w = ℒ₀⁻¹ψ with w' from the analytic identity w' = (1/y − 2/(y+1))w + Ψ/y,
/// Ψ = ∫₀^y ψ.
struct LInverse {
    std::shared_ptr<const PanelMesh> mesh;
    PanelFunction w, w_prime, inner;

    double value(double y) const { return eval(*mesh, w, y); }
    double prime(double y) const { return eval(*mesh, w_prime, y); }
    /// ℒw at the Gauss points, with w'' the spectral derivative of tabulated w'.
    std::vector<double> apply_L_points() const;
};

/// Inverse from samples of ψ at the Gauss points (and optionally edges, only
/// used to report ψ).  Throws SingularInput if ψ/y blows up at the origin.
LInverse invert_L0(std::shared_ptr<const PanelMesh> mesh, std::vector<double> psi_points);
LInverse invert_L0(std::shared_ptr<const PanelMesh> mesh, const std::function<double(double)>& psi);

/// sup over Gauss points in [lo, hi] of |ℒ(ℒ₀⁻¹ψ) − ψ|.
double roundtrip_error(const LInverse& inv, const std::vector<double>& psi_points, double lo, double hi);

/// f = (I + ℒ₀⁻¹) w₀ with w₀ = y/(y+1)², its derivative and g̃ = 2ff' − yf' + f.
struct FTable {
    std::shared_ptr<const PanelMesh> mesh;
    PanelFunction f, f_prime, tilde_f;
};
FTable build_f(std::shared_ptr<const PanelMesh> mesh);

/// g = ℒ₀⁻¹ g̃.
LInverse build_g(const FTable& f);

/// Raw lattice minimum of M with g̃ + Mφ ≥ 0, and the value clamped below by 3.
struct MinM {
    double raw = 0.0;
    double clamped = 3.0;
};
MinM min_M(const std::vector<double>& tilde_f, const std::vector<double>& phi, double lattice = 0.01);
MinM min_M(const FTable& f, const PhiSpec& phi, double lattice = 0.01);

/// h = g + M·ℒ₀⁻¹φ.  Throws MTooSmall when M < clamped min_M.
struct HTable {
    double M = 0.0;
    LInverse g4;  ///< ℒ₀⁻¹φ
    PanelFunction h, h_prime;
};
HTable build_h(const FTable& f, const LInverse& g, double M, const PhiSpec& phi);
/// As above; enforce_min = false skips the admissibility check (diagnostics only).
HTable build_h(const FTable& f, const LInverse& g, double M, const PhiSpec& phi, bool enforce_min);

/// gᵢ = ℒ₀⁻¹fᵢ, f₁ = log(1+y), f₂ cutoff, f₃ = log²(1+y)/(1+y), f₄ = φ.
LInverse build_component_gi(int i, std::shared_ptr<const PanelMesh> mesh, const PhiSpec& phi = {},
                            CutoffBlend blend = CutoffBlend::Smoothstep);

struct SpecialOptions {
    double y_max = 1e6;
    int per_decade = 40;
    double y_first = 1e-6;
    int order = 12;
    PhiSpec phi;
    double M = -1.0;  ///< < 0: min_M rounded up to the next 0.5
    bool enforce_min_M = true;
};

/// Everything the barriers need, immutable once built.
class SpecialTable {
public:
    struct Values {
        double f = 0, f_prime = 0, tilde_f = 0, g = 0, g_prime = 0, h = 0, h_prime = 0, phi = 0;
    };

    static SpecialTable build(const SpecialOptions& opt);

    Values at(double y) const;  ///< RangeError outside [0, y_max]
    double y_max() const { return mesh_->hi(); }
    double M() const { return h_.M; }
    const PhiSpec& phi() const { return phi_; }
    const PanelMesh& mesh() const { return *mesh_; }
    std::shared_ptr<const PanelMesh> mesh_ptr() const { return mesh_; }
    const FTable& f() const { return f_; }
    const LInverse& g() const { return g_; }
    const HTable& h() const { return h_; }
    const MinM& min_m() const { return min_m_; }
    const SpecialOptions& options() const { return opt_; }

    /// CSV rows at the panel edges: y, f, f', tilde_f, g, g', h, h'.
    void write_csv(const std::string& path) const;
    /// JSON header: M, Y_max, φ parameters, quadrature settings.
    std::string header_json() const;

private:
    SpecialOptions opt_;
    std::shared_ptr<const PanelMesh> mesh_;
    PhiSpec phi_;
    FTable f_;
    LInverse g_;
    MinM min_m_;
    HTable h_;
};

/// One asymptotic claim measured on windows [Y/100, Y].
struct AsymptoticClaim {
    std::string name;
    std::vector<double> y_windows;
    std::vector<double> ratios;  ///< sup |actual − leading| / |O-term| per window
    bool bounded = true;
};
struct AsymptoticsReport {
    std::vector<AsymptoticClaim> claims;
    double f_error_at_top = 0.0;        ///< |f(Y) − (log Y − 2)| at the largest window
    double g_over_y_error_at_top = 0.0; ///< |g(Y)/Y − (log Y/2 − 9/4)|
    bool ok() const;
    std::string to_json() const;
};

/// Ratio growth rule: a claim is unbounded when its ratio on the last window
/// exceeds growth_limit × its ratio on the first window.
AsymptoticsReport check_asymptotics(const SpecialTable& table, const std::vector<double>& y_windows,
                                    double growth_limit = 2.0, bool throw_on_violation = true);

}  // namespace kscrit
