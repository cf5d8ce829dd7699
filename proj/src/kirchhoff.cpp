#include "poromem/kirchhoff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace poromem {

namespace {

// Hermite cubic on [x0, x1] with values y0, y1 and derivatives d0, d1.
double hermite(double x, double x0, double x1, double y0, double y1, double d0, double d1) {
    const double hh = x1 - x0;
    const double t = (x - x0) / hh;
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * hh * d0 +
           (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * hh * d1;
}

double hermite_deriv(double x, double x0, double x1, double y0, double y1, double d0, double d1) {
    const double hh = x1 - x0;
    const double t = (x - x0) / hh;
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y0 + (3 * t2 - 4 * t + 1) * hh * d0 + (-6 * t2 + 6 * t) * y1 +
            (3 * t2 - 2 * t) * hh * d1) /
           hh;
}

// 8-point Gauss-Legendre on [a, b].
template <class F>
double gauss8(F&& f, double a, double b) {
    static const double xs[4] = {0.1834346424956498, 0.5255324099163290,
                                 0.7966664774136267, 0.9602898564975363};
    static const double ws[4] = {0.3626837833783620, 0.3137066458778873,
                                 0.2223810344533745, 0.1012285362903763};
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double acc = 0.0;
    for (int i = 0; i < 4; ++i)
        acc += ws[i] * (f(c + hw * xs[i]) + f(c - hw * xs[i]));
    return acc * hw;
}

}  // namespace

double KirchhoffMap::ktr(double xi) const {
    // Exact slope of the interpolated beta, so that ktr = beta' holds for
    // the map as implemented (Jacobians built from ktr are then exact
    // derivatives of residuals built from beta).
    if (xi <= knot_xi.front()) return K0;
    if (xi >= knot_xi.back()) return knot_d.back();
    auto it = std::upper_bound(knot_xi.begin(), knot_xi.end(), xi);
    const size_t i1 = static_cast<size_t>(it - knot_xi.begin());
    const size_t i0 = i1 - 1;
    return hermite_deriv(xi, knot_xi[i0], knot_xi[i1], knot_beta[i0], knot_beta[i1], knot_d[i0],
                         knot_d[i1]);
}

double KirchhoffMap::beta(double xi) const {
    if (xi <= knot_xi.front()) return knot_beta.front() + K0 * (xi - knot_xi.front());
    if (xi >= knot_xi.back()) return knot_beta.back() + knot_d.back() * (xi - knot_xi.back());
    auto it = std::upper_bound(knot_xi.begin(), knot_xi.end(), xi);
    const size_t i1 = static_cast<size_t>(it - knot_xi.begin());
    const size_t i0 = i1 - 1;
    return hermite(xi, knot_xi[i0], knot_xi[i1], knot_beta[i0], knot_beta[i1], knot_d[i0],
                   knot_d[i1]);
}

double KirchhoffMap::beta_inv(double u) const {
    if (u <= knot_beta.front()) return knot_xi.front() + (u - knot_beta.front()) / K0;
    if (u >= knot_beta.back())
        return knot_xi.back() + (u - knot_beta.back()) / knot_d.back();
    auto it = std::upper_bound(knot_beta.begin(), knot_beta.end(), u);
    const size_t i1 = static_cast<size_t>(it - knot_beta.begin());
    const size_t i0 = i1 - 1;
    double lo = knot_xi[i0], hi = knot_xi[i1];
    // beta is strictly increasing on the bracket; plain bisection to near
    // machine precision.
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        const double bm = hermite(mid, knot_xi[i0], knot_xi[i1], knot_beta[i0], knot_beta[i1],
                                  knot_d[i0], knot_d[i1]);
        (bm < u ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

KirchhoffMap build_kirchhoff_map(const MaterialModel& model, double ell) {
    if (!std::isfinite(ell)) throw std::invalid_argument("build_kirchhoff_map: ell must be finite");

    KirchhoffMap km;
    km.ell = ell;
    auto kRS = [&](double xi) {
        return model.k_R(std::clamp(model.S(xi), 0.0, model.S_s));
    };
    km.K0 = kRS(ell);
    km.K1 = model.k_R(model.S_s);
    if (!(km.K0 > 0.0) || !(km.K1 >= km.K0))
        throw std::runtime_error("build_kirchhoff_map: truncated permeability bounds invalid");

    const double hi = std::max(50.0, ell + 1.0);
    // Graded knots: logarithmic in |xi| on [ell, -1] (deep suction), uniform
    // on [-1, hi].
    std::vector<double>& xs = km.knot_xi;
    if (ell < -1.0) {
        const int nlog = 600;
        const double la = std::log(-ell), lb = 0.0;  // log|xi| from log|ell| to log 1
        for (int i = 0; i < nlog; ++i)
            xs.push_back(-std::exp(la + (lb - la) * i / (nlog - 1)));
    } else {
        xs.push_back(ell);
    }
    {
        const double a = xs.back();
        const int nlin = 800;
        for (int i = 1; i <= nlin; ++i) xs.push_back(a + (hi - a) * i / nlin);
    }

    auto ktr_exact = [&](double xi) { return xi <= ell ? km.K0 : kRS(xi); };

    km.knot_beta.resize(xs.size());
    km.knot_d.resize(xs.size());
    km.knot_beta[0] = 0.0;  // provisional; shifted so beta(0) = 0 below
    km.knot_d[0] = ktr_exact(xs[0]);
    for (size_t i = 1; i < xs.size(); ++i) {
        km.knot_beta[i] = km.knot_beta[i - 1] + gauss8(ktr_exact, xs[i - 1], xs[i]);
        km.knot_d[i] = ktr_exact(xs[i]);
    }

    // Shift so that beta(0) = 0.
    double beta0;
    if (0.0 <= xs.front())
        beta0 = km.knot_beta.front() + km.K0 * (0.0 - xs.front());
    else {
        auto it = std::upper_bound(xs.begin(), xs.end(), 0.0);
        const size_t i1 = std::min(xs.size() - 1, static_cast<size_t>(it - xs.begin()));
        const size_t i0 = i1 - 1;
        beta0 = hermite(0.0, xs[i0], xs[i1], km.knot_beta[i0], km.knot_beta[i1], km.knot_d[i0],
                        km.knot_d[i1]);
    }
    for (double& b : km.knot_beta) b -= beta0;

    for (size_t i = 0; i < xs.size(); ++i) {
        if (!(km.knot_d[i] > 0.0))
            throw std::runtime_error("build_kirchhoff_map: non-positive integrand at knot " +
                                     std::to_string(i) + " (model violation)");
        if (i > 0 && !(km.knot_beta[i] > km.knot_beta[i - 1]))
            throw std::runtime_error("build_kirchhoff_map: non-monotone tabulation at knot " +
                                     std::to_string(i) + " (model violation)");
    }
    return km;
}

namespace {

struct AdaptiveQuad {
    const MaterialModel* model;
    double abstol;
    int max_depth = 60;
    double worst_err = 0.0;

    double integrand(double z) const { return model->dS(z) * z; }

    double simpson(double a, double m, double b, double fa, double fm, double fb) const {
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    }

    double recurse(double a, double b, double fa, double fm, double fb, double whole, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        const double flm = integrand(lm), frm = integrand(rm);
        const double left = simpson(a, lm, m, fa, flm, fm);
        const double right = simpson(m, rm, b, fm, frm, fb);
        const double err = left + right - whole;
        if (std::abs(err) <= 15.0 * abstol || depth >= max_depth) {
            if (depth >= max_depth) worst_err = std::max(worst_err, std::abs(err) / 15.0);
            return left + right + err / 15.0;
        }
        return recurse(a, m, fa, flm, fm, left, depth + 1) +
               recurse(m, b, fm, frm, fb, right, depth + 1);
    }
};

}  // namespace

double theta_S(const MaterialModel& model, double xi) {
    if (xi == 0.0) return 0.0;
    const double a = std::min(0.0, xi), b = std::max(0.0, xi);
    // Crude magnitude estimate to set the absolute tolerance for the
    // requested relative accuracy.
    double scale = 0.0;
    {
        const int n = 64;
        for (int i = 0; i <= n; ++i) {
            const double z = a + (b - a) * i / n;
            scale = std::max(scale, std::abs(model.dS(z) * z));
        }
        scale *= (b - a);
    }
    AdaptiveQuad q{&model, std::max(1e-300, 1e-11 * std::max(scale, 1e-30)), 60, 0.0};
    const double fa = q.integrand(a), fb = q.integrand(b);
    const double fm = q.integrand(0.5 * (a + b));
    const double whole = q.simpson(a, 0.5 * (a + b), b, fa, fm, fb);
    double val = q.recurse(a, b, fa, fm, fb, whole, 0);
    if (q.worst_err > 1e-8 * std::max(std::abs(val), 1e-30))
        throw std::runtime_error("theta_S: adaptive quadrature did not converge (achieved " +
                                 std::to_string(q.worst_err) + ")");
    if (xi < 0.0) val = -val;  // int_0^xi with xi < 0 flips orientation
    // Integrand sign matches z, so the value is nonnegative up to rounding.
    return std::max(val, 0.0);
}

bool theta_S_inequality_check(const MaterialModel& model, double xi1, double xi2) {
    const double lhs = theta_S(model, xi1) - theta_S(model, xi2);
    const double rhs = (model.S(xi1) - model.S(xi2)) * xi1;
    const double tol = 1e-9 * (1.0 + std::abs(lhs) + std::abs(rhs));
    return lhs <= rhs + tol;
}

DeGiorgiResult degiorgi_recurrence(double gamma, double tau, double Z0, int j_max) {
    if (j_max < 1) throw std::invalid_argument("degiorgi_recurrence: j_max must be >= 1");
    DeGiorgiResult res;
    res.Z.reserve(j_max + 1);
    res.Z.push_back(Z0);
    if (Z0 == 0.0) {
        res.Z.assign(j_max + 1, 0.0);
        res.converged = true;
        return res;
    }
    const double log4 = std::log(4.0);
    double logZ = std::log(Z0);
    const double loggamma = gamma > 0.0 ? std::log(gamma) : -std::numeric_limits<double>::infinity();
    bool overflowed = false;
    for (int j = 0; j < j_max; ++j) {
        logZ = loggamma + j * log4 + (tau + 1.0) * logZ;
        if (logZ > 700.0) {
            overflowed = true;
            for (int k = j; k < j_max; ++k)
                res.Z.push_back(std::numeric_limits<double>::infinity());
            break;
        }
        res.Z.push_back(std::exp(logZ));
        if (res.Z.back() == 0.0) {
            for (int k = j + 1; k < j_max; ++k) res.Z.push_back(0.0);
            break;
        }
    }
    res.converged = !overflowed && res.Z.back() < 1e-30;
    return res;
}

PressureBoundResult estimate_pressure_lower_bound(const MaterialModel& model, double domain_area,
                                                  double q, double C_E) {
    if (!(q > 2.0)) throw std::invalid_argument("estimate_pressure_lower_bound: q must exceed 2");
    if (!(C_E > 0.0) || !(domain_area > 0.0))
        throw std::invalid_argument("estimate_pressure_lower_bound: C_E and area must be positive");

    PressureBoundResult out;
    out.q = q;
    out.C_E = C_E;
    out.domain_area = domain_area;
    out.tau = 2.0 * (q - 2.0) / q;
    const double threshold = std::pow(domain_area, -out.tau) * std::pow(4.0, -1.0 / out.tau);
    const double coef = 4.0 * C_E * (model.C_phi * model.S_s + std::abs(model.alpha1));
    const double phi_ratio = model.phi2 / model.phi1;

    for (int j = 0; j <= 60; ++j) {
        const double delta = std::pow(2.0, -j);
        const double delta_eval = std::min(delta, model.S_s * (1.0 - 1e-12));
        const double xi = model.S_inv(delta_eval);
        const double base = coef * model.f_tilde(xi) / (model.M(xi) * delta);
        const double gamma = phi_ratio * base * base;
        out.searched_delta.push_back(delta);
        out.searched_gamma.push_back(gamma);
        if (gamma <= threshold) {
            out.found = true;
            out.delta = delta;
            out.gamma = gamma;
            out.ell = model.S_inv(std::min(0.5 * delta, model.S_s * (1.0 - 1e-12)));
            return out;
        }
    }
    out.found = false;
    out.ell = -std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace poromem
