#pragma once

// Shared fixtures for the unit tests: a closed-form logistic test model
// (cheap, smooth, analytically tractable), tiny-mesh builders, and a
// deterministic RNG so every suite run sees the same sample points.

#include <cmath>
#include <random>

#include "poromem/material.hpp"
#include "poromem/mesh.hpp"

namespace poromem::testing {

/// Logistic saturation S(p) = 1/(1+e^{-p}), k_R(s) = s, k = mu = 1,
/// phi = 0.4, rho = 1, D_w = 1, lambda = 1, f == 0. Satisfies all structural
/// assumptions except the smallness-limit proxy (f == 0 makes it trivially
/// true). Used as the analytic oracle model in the Kirchhoff tests.
inline MaterialModel make_logistic_model() {
    MaterialModel m;
    m.S_s = 1.0;
    m.S = [](double p) { return 1.0 / (1.0 + std::exp(-p)); };
    m.dS = [](double p) {
        const double s = 1.0 / (1.0 + std::exp(-p));
        return s * (1.0 - s);
    };
    m.S_inv = [](double s) { return std::log(s / (1.0 - s)); };

    m.k = [](const Vec2&, double) { return 1.0; };
    m.k1 = m.k2 = 1.0;
    m.k_R = [](double s) { return s; };
    m.mu = [](double) { return 1.0; };
    m.mu1 = m.mu2 = 1.0;

    m.phi = [](const Vec2&, double) { return 0.4; };
    m.dphi_dr = [](const Vec2&, double) { return 0.0; };
    m.phi1 = m.phi2 = 0.4;
    m.C_phi = 0.0;

    m.rho = [](const Vec2&, double) { return 1.0; };
    m.rho1 = m.rho2 = 1.0;

    m.D_w = [](const Vec2&, double) { return 1.0; };
    m.lambda = [](const Vec2&, double, double, double) { return 1.0; };

    m.f = [](const Vec2&, double, double, double, double) { return 0.0; };
    m.df_dp = [](const Vec2&, double, double, double, double) { return 0.0; };
    m.f_tilde = [](double) { return 0.0; };
    m.C_f = 0.0;

    m.alpha1 = 0.5;
    m.alpha2 = 1.0;

    fill_model_fallbacks(m);
    derive_envelopes(m);
    return m;
}

/// Same family but with a constant hydration rate f == C_f (equality case
/// of the rate bound) and f_tilde == C_f.
inline MaterialModel make_constant_rate_model(double C_f) {
    MaterialModel m = make_logistic_model();
    m.f = [C_f](const Vec2&, double, double, double, double) { return C_f; };
    m.df_dp = [](const Vec2&, double, double, double, double) { return 0.0; };
    m.f_tilde = [C_f](double) { return C_f; };
    m.C_f = C_f;
    derive_envelopes(m);
    return m;
}

/// 2x2 all-Dirichlet unit square: exactly one interior dof (the center).
inline Mesh one_interior_dof_mesh() {
    BoundarySpec spec;
    spec.left = spec.right = spec.bottom = spec.top = BoundaryTag::Dirichlet;
    return build_structured_mesh(2, 2, 1.0, 1.0, spec);
}

inline int center_node(const Mesh& mesh) {
    for (int i = 0; i < mesh.num_nodes(); ++i)
        if (!mesh.is_dirichlet[i]) return i;
    return -1;
}

inline std::mt19937_64 make_rng(unsigned seed) { return std::mt19937_64(seed); }

}  // namespace poromem::testing
