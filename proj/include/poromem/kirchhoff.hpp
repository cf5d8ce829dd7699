#pragma once

// Kirchhoff transformation with truncated relative permeability, the Theta_S
// energy density, and the level-set recurrence machinery that produces the
// n-independent pressure lower bound.

#include <vector>

#include "poromem/material.hpp"

namespace poromem {

/// u = beta(p) with beta the primitive of the truncated permeability
/// ktr(xi) = k_R(S(xi)) for xi > ell, frozen at K0 = k_R(S(ell)) below.
/// beta is tabulated on a graded grid with monotone cubic (Hermite)
/// interpolation; exactly linear with slope K0 below ell.
struct KirchhoffMap {
    double ell = 0.0;
    double K0 = 0.0;  // = k_R(S(ell))
    double K1 = 0.0;  // = k_R(S_s)
    std::vector<double> knot_xi;    // increasing, knot_xi.front() == ell
    std::vector<double> knot_beta;  // beta at knots (beta(0) == 0)
    std::vector<double> knot_d;     // exact derivative ktr at knots

    double ktr(double xi) const;
    double beta(double xi) const;
    double beta_inv(double u) const;
};

/// Builds the map; throws std::runtime_error if the tabulation is not
/// strictly monotone (user model violation).
KirchhoffMap build_kirchhoff_map(const MaterialModel& model, double ell);

/// Theta_S(xi) = int_0^xi S'(z) z dz by adaptive quadrature (relative error
/// <= 1e-10); always >= 0. Throws on quadrature non-convergence.
double theta_S(const MaterialModel& model, double xi);

/// Checks Theta_S(xi1) - Theta_S(xi2) <= [S(xi1) - S(xi2)] xi1 within 1e-9.
bool theta_S_inequality_check(const MaterialModel& model, double xi1, double xi2);

struct DeGiorgiResult {
    std::vector<double> Z;  // Z_0..Z_jmax (clamped at overflow)
    bool converged = false; // Z_jmax < 1e-30
};

/// Iterates Z_{j+1} = gamma 4^j Z_j^{tau+1} in log space; overflow counts as
/// divergence.
DeGiorgiResult degiorgi_recurrence(double gamma, double tau, double Z0, int j_max);

struct PressureBoundResult {
    bool found = false;
    double ell = 0.0;    // -inf sentinel when !found
    double delta = 0.0;  // largest admissible dyadic level parameter
    double gamma = 0.0;  // recurrence constant at the chosen delta
    double tau = 0.0;
    double q = 0.0, C_E = 0.0, domain_area = 0.0;
    std::vector<double> searched_delta;  // descent trace
    std::vector<double> searched_gamma;
};

/// Dyadic descent delta = 2^-j, j = 0..60, over the level parameter of the
/// level-set recurrence: gamma(delta) = (phi2/phi1) * (4 C_E (C_phi S_s +
/// |alpha1|) f_tilde(S_inv(delta)) / (M(S_inv(delta)) delta))^2, tau =
/// 2(q-2)/q, Z0 = domain_area. Returns ell = S_inv(delta/2) for the largest
/// admissible delta, or the -inf sentinel when none is admissible.
PressureBoundResult estimate_pressure_lower_bound(const MaterialModel& model, double domain_area,
                                                  double q, double C_E);

}  // namespace poromem
