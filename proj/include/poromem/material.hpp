#pragma once

// Constitutive function bundle and structural constants of the model,
// built-in van Genuchten/Mualem family, and numerical validation of the
// structural assumptions (saturation bounds and monotonicity, permeability
// and viscosity bounds, porosity Lipschitz bound, hydration-rate envelope,
// transport-coefficient envelopes, and the degeneracy smallness limit).

#include <functional>
#include <string>
#include <vector>

#include "poromem/mesh.hpp"

namespace poromem {

struct MaterialModel {
    // Saturation S: R -> (0, S_s], strictly increasing, with derivative dS
    // and inverse S_inv on (0, S_s).
    std::function<double(double)> S;
    std::function<double(double)> dS;
    std::function<double(double)> S_inv;
    double S_s = 1.0;

    // Intrinsic permeability k(x, r) in [k1, k2].
    std::function<double(const Vec2&, double)> k;
    double k1 = 0.0, k2 = 0.0;

    // Relative permeability k_R on [0, S_s], strictly increasing, positive.
    std::function<double(double)> k_R;

    // Viscosity mu(theta) in [mu1, mu2].
    std::function<double(double)> mu;
    double mu1 = 0.0, mu2 = 0.0;

    // Porosity phi(x, r) in [phi1, phi2], Lipschitz in r with constant C_phi.
    std::function<double(const Vec2&, double)> phi;
    std::function<double(const Vec2&, double)> dphi_dr;
    double phi1 = 0.0, phi2 = 0.0, C_phi = 0.0;

    // Skeleton density rho(x, r) in [rho1, rho2].
    std::function<double(const Vec2&, double)> rho;
    double rho1 = 0.0, rho2 = 0.0;

    // Solute diffusivity D_w(x, p) > 0 and thermal conductivity
    // lambda(x, p, theta, r) > 0.
    std::function<double(const Vec2&, double)> D_w;
    std::function<double(const Vec2&, double, double, double)> lambda;

    // Hydration rate f(x, p, c, theta, r), |f| <= f_tilde(p) <= C_f with
    // f_tilde increasing and positive; df_dp is the partial derivative in p
    // (filled with a finite-difference fallback if absent).
    std::function<double(const Vec2&, double, double, double, double)> f;
    std::function<double(const Vec2&, double, double, double, double)> df_dp;
    std::function<double(double)> f_tilde;
    double C_f = 0.0;

    double alpha1 = 0.0, alpha2 = 0.0;

    // Envelopes of the transport coefficient a = k * k_R(S(p)) / mu:
    // a1(p) <= a <= a2, a1 strictly increasing positive; M non-increasing
    // positive with M(xi) <= a1(xi)/S'(xi).
    std::function<double(double)> a1;
    double a2 = 0.0;
    std::function<double(double)> M;

    /// a(x, p, theta, r) = k(x,r) * k_R(S(p)) / mu(theta).
    double transport_coefficient(const Vec2& x, double p, double theta, double r) const;
};

/// Fill S_inv (bisection on S), df_dp / dphi_dr (central differences) when
/// the model does not provide them.
void fill_model_fallbacks(MaterialModel& m);

/// Derive concrete envelopes: a1(p) = k1*k_R(S(p))/mu2, a2 = k2*k_R(S_s)/mu1,
/// and M as the running infimum of a1/S' over a deep-suction tail grid
/// (non-increasing step function).
void derive_envelopes(MaterialModel& m);

struct VanGenuchtenParams {
    // Saturation (van Genuchten) and its strict-monotonicity extension.
    double alpha_vg = 1.0;
    double n_vg = 2.0;
    double S_res = 0.0;
    double S_s = 1.0;
    double sigma_blend = 1e-2;   // width of the C1 blending interval [-sigma, 0]
    double kappa_floor = 1e-12;  // Mualem positivity floor

    // Intrinsic permeability k(r) = k1 + (k2 - k1)/(1 + c_k r).
    double k1 = 5e-4;
    double k2 = 1e-3;
    double c_k = 1.0;

    // Viscosity mu(theta) = mu1 + (mu2 - mu1)/(1 + exp(theta/theta_scale)).
    double mu1 = 0.5;
    double mu2 = 1.5;
    double theta_scale = 10.0;

    // Porosity phi(r) = phi_a - phi_b r/(1+r); density rho(r) = rho_a + rho_b r/(1+r).
    double phi_a = 0.4;
    double phi_b = 0.04;
    double rho_a = 2.0;
    double rho_b = 0.2;

    // Solute diffusivity D_w(p) = d0 (0.1 + 0.9 S(p)/S_s).
    double d0 = 1e-3;

    // Thermal conductivity lambda = lambda0 (1 + lambda_S S/S_s + lambda_r r/(1+r)).
    double lambda0 = 1.0;
    double lambda_S = 0.5;
    double lambda_r = 0.5;

    // Hydration rate f = clip(A max(0, 1 - r/r_max) (S/S_s)^kappa_g
    //                         exp(-E_a/(theta_off + softplus(theta))), 0, C_f)
    // with C_f = A and envelope f_tilde(p) = A (S(p)/S_s)^kappa_g.
    double A = 0.05;
    double r_max = 1.0;
    double kappa_g = 5.0;
    double E_a = 1.0;
    double theta_off = 1.0;

    // alpha1 >= 0 keeps the hydration source sign-compatible with the
    // concentration maximum principle (the discrete bound ||c||_inf <=
    // ||c0||_inf needs alpha1 f >= 0).
    double alpha1 = 0.5;
    double alpha2 = 1.0;
};

/// Build the default van Genuchten/Mualem model family. Throws
/// std::invalid_argument naming the violated assumption on bad parameters.
MaterialModel make_van_genuchten_model(const VanGenuchtenParams& params);

struct SampleGrid {
    std::vector<double> p;      // pressures including deep suction
    std::vector<double> s;      // saturations in (0, S_s]
    std::vector<double> r;      // hydration degrees
    std::vector<double> theta;  // temperatures
    std::vector<double> c;      // concentrations
    std::vector<Vec2> x;        // spatial points
    bool check_smallness_limit = true;  // Assumption (v) dyadic-decay proxy

    static SampleGrid standard(const MaterialModel& m);
};

/// Spot-check every MaterialModel invariant by dense sampling; empty list
/// iff no violation found.
std::vector<std::string> validate_assumptions(const MaterialModel& m, const SampleGrid& grid);

struct InitialData {
    std::vector<double> p0, c0, th0;  // nodal
    double p1 = -1e30;                // strict lower bound of p0
};

/// Checks -inf < p1 < p0 <= 0 everywhere and that p0, c0, th0 vanish on
/// Dirichlet nodes.
std::vector<std::string> validate_initial(const InitialData& init, const Mesh& mesh);

}  // namespace poromem
