#include "poromem/material.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace poromem {

namespace {

// Composite Simpson quadrature on a fixed even panel count (integrands below
// are smooth on short intervals, so this reaches near machine precision).
template <class F>
double simpson(F&& f, double a, double b, int panels) {
    if (panels % 2) ++panels;
    const double h = (b - a) / panels;
    double acc = f(a) + f(b);
    for (int i = 1; i < panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return acc * h / 3.0;
}

double softplus(double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); }

}  // namespace

double MaterialModel::transport_coefficient(const Vec2& x, double p, double theta,
                                            double r) const {
    const double s = S(p);
    if (!(s >= -1e-12) || !(s <= S_s * (1.0 + 1e-12)) || !std::isfinite(s))
        throw std::runtime_error("transport_coefficient: S(p) outside [0, S_s] (model evaluation)");
    const double sc = std::clamp(s, 0.0, S_s);
    return k(x, r) * k_R(sc) / mu(theta);
}

void fill_model_fallbacks(MaterialModel& m) {
    if (!m.S_inv) {
        auto S = m.S;
        const double S_s = m.S_s;
        m.S_inv = [S, S_s](double target) {
            if (!(target > 0.0) || !(target < S_s))
                throw std::domain_error("S_inv: target outside (0, S_s)");
            double hi = 1.0;
            while (S(hi) < target && hi < 1e15) hi *= 2.0;
            double lo = -1.0;
            while (S(lo) >= target && lo > -1e290) lo *= 2.0;
            if (S(lo) >= target) return lo;  // below attainable range; clamp at search bound
            for (int it = 0; it < 400; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (mid == lo || mid == hi) break;
                (S(mid) < target ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        };
    }
    if (!m.df_dp) {
        auto f = m.f;
        m.df_dp = [f](const Vec2& x, double p, double c, double th, double r) {
            const double eps = 1e-6 * (1.0 + std::abs(p));
            return (f(x, p + eps, c, th, r) - f(x, p - eps, c, th, r)) / (2.0 * eps);
        };
    }
    if (!m.dphi_dr) {
        auto phi = m.phi;
        m.dphi_dr = [phi](const Vec2& x, double r) {
            const double eps = 1e-6 * (1.0 + std::abs(r));
            return (phi(x, r + eps) - phi(x, r - eps)) / (2.0 * eps);
        };
    }
}

void derive_envelopes(MaterialModel& m) {
    const double k1 = m.k1, mu2 = m.mu2, S_s = m.S_s;
    auto S = m.S;
    auto k_R = m.k_R;
    m.a1 = [k1, mu2, S_s, S, k_R](double p) {
        return k1 * k_R(std::clamp(S(p), 0.0, S_s)) / mu2;
    };
    m.a2 = m.k2 * m.k_R(m.S_s) / m.mu1;

    // M(xi) = inf over the tail grid {zeta <= xi} of a1(zeta)/S'(zeta),
    // made non-increasing by a running minimum from deep suction upward.
    auto grid = std::make_shared<std::vector<double>>();
    auto runmin = std::make_shared<std::vector<double>>();
    const int n_log = 2048;
    for (int i = 0; i < n_log; ++i) {
        const double t = 19.5 - (19.5 - (-6.0)) * i / (n_log - 1);  // 19.5 down to -6
        grid->push_back(-std::pow(10.0, t));
    }
    for (int i = 0; i <= 40; ++i) grid->push_back(10.0 * i / 40.0);
    double cur = std::numeric_limits<double>::infinity();
    auto a1 = m.a1;
    auto dS = m.dS;
    for (double xi : *grid) {
        const double sp = dS(xi);
        const double ratio = sp > 0.0 ? a1(xi) / sp : std::numeric_limits<double>::infinity();
        cur = std::min(cur, ratio);
        runmin->push_back(cur);
    }
    // Evaluate at the right grid neighbor: the running minimum through the
    // bracketing knot stays below a1(xi)/S'(xi) whenever the ratio is
    // monotone between adjacent knots, keeping M pointwise admissible.
    m.M = [grid, runmin](double xi) {
        auto it = std::lower_bound(grid->begin(), grid->end(), xi);
        const size_t idx = (it == grid->end()) ? grid->size() - 1
                                               : static_cast<size_t>(it - grid->begin());
        return (*runmin)[idx];
    };
}

MaterialModel make_van_genuchten_model(const VanGenuchtenParams& prm) {
    if (!(prm.n_vg > 1.0))
        throw std::invalid_argument("van Genuchten: n_vg must exceed 1");
    if (!(prm.S_res >= 0.0) || !(prm.S_res < prm.S_s))
        throw std::invalid_argument("van Genuchten: need 0 <= S_res < S_s");
    if (!(prm.alpha_vg > 0.0) || !(prm.S_s > 0.0) || !(prm.sigma_blend > 0.0) ||
        !(prm.kappa_floor > 0.0))
        throw std::invalid_argument("van Genuchten: alpha_vg, S_s, sigma_blend, kappa_floor must be positive");
    if (!(prm.k1 > 0.0) || !(prm.k2 >= prm.k1))
        throw std::invalid_argument("permeability: need 0 < k1 <= k2");
    if (!(prm.mu1 > 0.0) || !(prm.mu2 >= prm.mu1))
        throw std::invalid_argument("viscosity: need 0 < mu1 <= mu2");
    if (!(prm.phi_b >= 0.0) || !(prm.phi_a - prm.phi_b > 0.0))
        throw std::invalid_argument("porosity: need phi_a - phi_b > 0 and phi_b >= 0");
    if (!(prm.rho_a > 0.0) || !(prm.rho_b >= 0.0))
        throw std::invalid_argument("density: need rho_a > 0 and rho_b >= 0");
    if (!(prm.d0 > 0.0) || !(prm.lambda0 > 0.0) || !(prm.lambda_S >= 0.0) || !(prm.lambda_r >= 0.0))
        throw std::invalid_argument("diffusivity/conductivity: need d0, lambda0 > 0");
    if (!(prm.A > 0.0) || !(prm.r_max > 0.0) || !(prm.kappa_g >= 1.0) || !(prm.E_a >= 0.0) ||
        !(prm.theta_off > 0.0))
        throw std::invalid_argument("hydration: need A, r_max, theta_off > 0 and kappa_g >= 1");

    const double alpha = prm.alpha_vg, n = prm.n_vg, m_vg = 1.0 - 1.0 / prm.n_vg;
    const double S_res = prm.S_res, S_s = prm.S_s, sigma = prm.sigma_blend;

    auto S_raw = [=](double p) {
        // p < 0 branch of van Genuchten.
        return S_res + (S_s - S_res) * std::pow(1.0 + std::pow(alpha * (-p), n), -m_vg);
    };
    auto dS_raw = [=](double p) {
        const double ap = alpha * (-p);
        const double apn = std::pow(ap, n);
        return (S_s - S_res) * m_vg * n * alpha * std::pow(ap, n - 1.0) *
               std::pow(1.0 + apn, -m_vg - 1.0);
    };
    // C1 blend on [-sigma, 0]: interpolate the derivative between the raw
    // van Genuchten slope and the target slope eps of the p >= 0 extension
    // S(p) = S_s - eps*exp(-p). The smoothstep weight keeps the blended
    // derivative strictly positive; eps is fixed by value continuity at 0:
    //   S_vg(-sigma) + int_{-sigma}^0 D = S_s - eps
    // which gives eps = (int_{-sigma}^0 w*S_vg') / (1 + sigma/2).
    auto wgt = [sigma](double p) {
        const double u = (p + sigma) / sigma;
        return u * u * (3.0 - 2.0 * u);
    };
    const double J = simpson([&](double p) { return wgt(p) * dS_raw(p); }, -sigma, 0.0, 256);
    const double eps0 = J / (1.0 + 0.5 * sigma);
    if (!(eps0 > 0.0))
        throw std::invalid_argument("van Genuchten: extension slope eps0 not positive "
                                    "(saturation monotonicity extension failed)");
    const double S_at_msigma = S_raw(-sigma);

    auto Dblend = [=](double p) { return (1.0 - wgt(p)) * dS_raw(p) + wgt(p) * eps0; };

    MaterialModel mm;
    mm.S_s = S_s;
    mm.S = [=](double p) {
        if (p <= -sigma) return S_raw(p);
        if (p >= 0.0) return S_s - eps0 * std::exp(-p);
        return S_at_msigma + simpson(Dblend, -sigma, p, 64);
    };
    mm.dS = [=](double p) {
        if (p <= -sigma) return dS_raw(p);
        if (p >= 0.0) return eps0 * std::exp(-p);
        return Dblend(p);
    };

    const double kf = prm.kappa_floor;
    mm.k_R = [=](double s) {
        const double se = std::clamp((s - S_res) / (S_s - S_res), 0.0, 1.0);
        const double mualem =
            std::sqrt(se) * std::pow(1.0 - std::pow(1.0 - std::pow(se, 1.0 / m_vg), m_vg), 2.0);
        return std::max(mualem, kf * (1.0 + s / S_s));
    };

    mm.k1 = prm.k1;
    mm.k2 = prm.k2;
    {
        const double k1 = prm.k1, k2 = prm.k2, c_k = prm.c_k;
        mm.k = [=](const Vec2&, double r) { return k1 + (k2 - k1) / (1.0 + c_k * std::max(r, 0.0)); };
    }

    mm.mu1 = prm.mu1;
    mm.mu2 = prm.mu2;
    {
        const double mu1 = prm.mu1, mu2 = prm.mu2, ts = prm.theta_scale;
        mm.mu = [=](double th) { return mu1 + (mu2 - mu1) / (1.0 + std::exp(th / ts)); };
    }

    mm.phi1 = prm.phi_a - prm.phi_b;
    mm.phi2 = prm.phi_a;
    mm.C_phi = prm.phi_b;
    {
        const double pa = prm.phi_a, pb = prm.phi_b;
        mm.phi = [=](const Vec2&, double r) {
            const double rr = std::max(r, 0.0);
            return pa - pb * rr / (1.0 + rr);
        };
        mm.dphi_dr = [=](const Vec2&, double r) {
            if (r < 0.0) return 0.0;
            const double d = 1.0 + r;
            return -pb / (d * d);
        };
    }

    mm.rho1 = prm.rho_a;
    mm.rho2 = prm.rho_a + prm.rho_b;
    {
        const double ra = prm.rho_a, rb = prm.rho_b;
        mm.rho = [=](const Vec2&, double r) {
            const double rr = std::max(r, 0.0);
            return ra + rb * rr / (1.0 + rr);
        };
    }

    {
        const double d0 = prm.d0;
        auto S = mm.S;
        mm.D_w = [=](const Vec2&, double p) { return d0 * (0.1 + 0.9 * std::clamp(S(p), 0.0, S_s) / S_s); };
    }
    {
        const double l0 = prm.lambda0, lS = prm.lambda_S, lr = prm.lambda_r;
        auto S = mm.S;
        mm.lambda = [=](const Vec2&, double p, double, double r) {
            const double rr = std::max(r, 0.0);
            return l0 * (1.0 + lS * std::clamp(S(p), 0.0, S_s) / S_s + lr * rr / (1.0 + rr));
        };
    }

    {
        const double A = prm.A, rmax = prm.r_max, kg = prm.kappa_g;
        const double Ea = prm.E_a, toff = prm.theta_off;
        auto S = mm.S;
        mm.C_f = A;
        mm.f = [=](const Vec2&, double p, double, double th, double r) {
            const double R = std::max(0.0, 1.0 - std::max(r, 0.0) / rmax);
            const double g = std::pow(std::clamp(S(p), 0.0, S_s) / S_s, kg);
            const double E = std::exp(-Ea / (toff + softplus(th)));
            return std::clamp(A * R * g * E, 0.0, A);
        };
        auto dS = mm.dS;
        mm.df_dp = [=](const Vec2&, double p, double, double th, double r) {
            const double R = std::max(0.0, 1.0 - std::max(r, 0.0) / rmax);
            if (R == 0.0) return 0.0;
            const double s = std::clamp(S(p), 0.0, S_s);
            const double E = std::exp(-Ea / (toff + softplus(th)));
            return A * R * E * kg * std::pow(s / S_s, kg - 1.0) * dS(p) / S_s;
        };
        mm.f_tilde = [=](double p) { return A * std::pow(std::clamp(S(p), 0.0, S_s) / S_s, kg); };
    }

    mm.alpha1 = prm.alpha1;
    mm.alpha2 = prm.alpha2;

    fill_model_fallbacks(mm);
    derive_envelopes(mm);
    return mm;
}

SampleGrid SampleGrid::standard(const MaterialModel& m) {
    SampleGrid g;
    for (int i = 0; i < 60; ++i) {
        const double t = -3.0 + (12.0 - (-3.0)) * i / 59.0;
        g.p.push_back(-std::pow(10.0, t));
    }
    for (int i = 0; i <= 24; ++i) g.p.push_back(-2.0 + 12.0 * i / 24.0);
    std::sort(g.p.begin(), g.p.end());
    for (int i = 1; i <= 30; ++i) g.s.push_back(m.S_s * i / 30.0);
    g.r = {0.0, 0.1, 0.5, 1.0, 2.0, 10.0};
    g.theta = {-5.0, 0.0, 10.0, 20.0, 40.0, 80.0};
    g.c = {0.0, 0.5, 1.0};
    g.x = {{0.0, 0.0}, {0.5, 0.5}, {1.0, 0.25}};
    return g;
}

std::vector<std::string> validate_assumptions(const MaterialModel& m, const SampleGrid& grid) {
    std::vector<std::string> v;
    auto rel = [](double a, double b) { return std::abs(a - b) / (std::abs(a) + std::abs(b) + 1e-300); };
    (void)rel;

    // (i) saturation: range and strict monotonicity.
    double prev_S = -std::numeric_limits<double>::infinity();
    double prev_p = 0.0;
    bool first = true;
    for (double p : grid.p) {
        const double s = m.S(p);
        if (!(s > 0.0) || !(s <= m.S_s * (1.0 + 1e-12)))
            v.push_back("assumption (i): S(" + std::to_string(p) + ") outside (0, S_s]");
        if (!first && !(s > prev_S))
            v.push_back("assumption (i): S not strictly increasing between p=" +
                        std::to_string(prev_p) + " and p=" + std::to_string(p));
        if (!(m.dS(p) >= 0.0))
            v.push_back("assumption (i): S'(" + std::to_string(p) + ") negative");
        prev_S = s;
        prev_p = p;
        first = false;
    }

    // (ii)/(iii) permeability, viscosity, porosity, density bounds.
    for (const Vec2& x : grid.x)
        for (double r : grid.r) {
            const double kk = m.k(x, r);
            if (!(kk >= m.k1 * (1.0 - 1e-12)) || !(kk <= m.k2 * (1.0 + 1e-12)))
                v.push_back("assumption (ii): k outside [k1, k2] at r=" + std::to_string(r));
            const double ph = m.phi(x, r);
            if (!(ph >= m.phi1 * (1.0 - 1e-12)) || !(ph <= m.phi2 * (1.0 + 1e-12)))
                v.push_back("assumption (iii): phi outside [phi1, phi2] at r=" + std::to_string(r));
            const double rh = m.rho(x, r);
            if (!(rh >= m.rho1 * (1.0 - 1e-12)) || !(rh <= m.rho2 * (1.0 + 1e-12)))
                v.push_back("assumption (iii): rho outside [rho1, rho2] at r=" + std::to_string(r));
        }
    for (double th : grid.theta) {
        const double mv = m.mu(th);
        if (!(mv >= m.mu1 * (1.0 - 1e-12)) || !(mv <= m.mu2 * (1.0 + 1e-12)))
            v.push_back("assumption (ii): mu outside [mu1, mu2] at theta=" + std::to_string(th));
    }

    // (ii) relative permeability: strictly increasing and positive on [0, S_s].
    double prev_kr = -1.0;
    for (size_t i = 0; i < grid.s.size(); ++i) {
        const double kr = m.k_R(grid.s[i]);
        if (!(kr > 0.0))
            v.push_back("assumption (ii): k_R(" + std::to_string(grid.s[i]) + ") not positive");
        if (i > 0 && !(kr > prev_kr))
            v.push_back("assumption (ii): k_R not strictly increasing at s=" +
                        std::to_string(grid.s[i]));
        prev_kr = kr;
    }

    // (iii) porosity Lipschitz bound in r.
    for (const Vec2& x : grid.x)
        for (size_t i = 0; i + 1 < grid.r.size(); ++i) {
            const double r1 = grid.r[i], r2 = grid.r[i + 1];
            const double dphi = std::abs(m.phi(x, r1) - m.phi(x, r2));
            if (!(dphi <= m.C_phi * std::abs(r1 - r2) * (1.0 + 1e-9)))
                v.push_back("assumption (iii): phi Lipschitz bound C_phi violated between r=" +
                            std::to_string(r1) + " and r=" + std::to_string(r2));
        }

    // (iv) hydration rate envelope.
    double prev_ft = -std::numeric_limits<double>::infinity();
    for (double p : grid.p) {
        const double ft = m.f_tilde(p);
        if (!(ft >= 0.0) || !(ft <= m.C_f * (1.0 + 1e-12)))
            v.push_back("assumption (iv): f_tilde outside [0, C_f] at p=" + std::to_string(p));
        if (!(ft >= prev_ft * (1.0 - 1e-12)))
            v.push_back("assumption (iv): f_tilde not increasing at p=" + std::to_string(p));
        prev_ft = ft;
        for (const Vec2& x : grid.x)
            for (double c : grid.c)
                for (double th : grid.theta)
                    for (double r : grid.r)
                        if (!(std::abs(m.f(x, p, c, th, r)) <= ft * (1.0 + 1e-9) + 1e-300))
                            v.push_back("assumption (iv): |f| exceeds f_tilde at p=" +
                                        std::to_string(p));
    }

    // (ii) transport coefficient envelopes a1 <= a <= a2.
    for (const Vec2& x : grid.x)
        for (double p : grid.p)
            for (double th : grid.theta)
                for (double r : grid.r) {
                    const double a = m.transport_coefficient(x, p, th, r);
                    if (!(a >= m.a1(p) * (1.0 - 1e-12)))
                        v.push_back("assumption (ii): a below lower envelope a1 at p=" +
                                    std::to_string(p));
                    if (!(a <= m.a2 * (1.0 + 1e-12)))
                        v.push_back("assumption (ii): a above upper bound a2 at p=" +
                                    std::to_string(p));
                }

    // (v) M non-increasing, M <= a1/S', and dyadic decay of the smallness ratio.
    double prev_M = std::numeric_limits<double>::infinity();
    for (double p : grid.p) {
        const double Mv = m.M(p);
        if (!(Mv > 0.0)) v.push_back("assumption (v): M not positive at xi=" + std::to_string(p));
        if (!(Mv <= prev_M * (1.0 + 1e-12)))
            v.push_back("assumption (v): M not non-increasing at xi=" + std::to_string(p));
        const double sp = m.dS(p);
        if (sp > 0.0 && !(Mv <= (m.a1(p) / sp) * (1.0 + 1e-6)))
            v.push_back("assumption (v): M exceeds a1/S' at xi=" + std::to_string(p));
        prev_M = Mv;
    }
    if (grid.check_smallness_limit) {
        std::vector<double> ratio;
        for (int j = 1; j <= 40; ++j) {
            const double delta = std::pow(2.0, -j);
            if (!(delta < m.S_s)) {
                ratio.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            const double xi = m.S_inv(delta);
            ratio.push_back(m.f_tilde(xi) / (m.M(xi) * delta));
        }
        // Eventual monotone decrease toward 0 (finite proxy for the delta->0 limit).
        bool tail_monotone = true;
        for (size_t j = 19; j + 1 < ratio.size(); ++j)
            if (std::isfinite(ratio[j]) && std::isfinite(ratio[j + 1]) &&
                !(ratio[j + 1] <= ratio[j] * (1.0 + 1e-9)))
                tail_monotone = false;
        const double r_mid = ratio[19], r_end = ratio.back();
        const bool decays = r_end <= std::max(1e-14, 1e-3 * (std::isfinite(r_mid) ? r_mid : 0.0)) ||
                            (std::isfinite(r_mid) && r_mid == 0.0 && r_end == 0.0);
        if (!tail_monotone || !decays)
            v.push_back("assumption (v): f_tilde(S_inv(delta))/(M(S_inv(delta)) delta) does not "
                        "decay toward 0 along delta_j = 2^-j (j = 1..40)");
    }

    return v;
}

std::vector<std::string> validate_initial(const InitialData& init, const Mesh& mesh) {
    std::vector<std::string> v;
    const size_t nn = static_cast<size_t>(mesh.num_nodes());
    if (init.p0.size() != nn || init.c0.size() != nn || init.th0.size() != nn) {
        v.push_back("initial data: nodal vector sizes do not match mesh");
        return v;
    }
    for (size_t i = 0; i < nn; ++i) {
        if (!(init.p0[i] <= 0.0))
            v.push_back("assumption (vi): p0 > 0 at node " + std::to_string(i) +
                        " (requires p0 <= 0)");
        if (!(init.p0[i] > init.p1))
            v.push_back("assumption (vi): p0 <= p1 at node " + std::to_string(i) +
                        " (requires p1 < p0)");
        if (!std::isfinite(init.c0[i]) || !std::isfinite(init.th0[i]))
            v.push_back("initial data: c0/theta0 not finite at node " + std::to_string(i));
        if (mesh.is_dirichlet[i]) {
            if (init.p0[i] != 0.0)
                v.push_back("initial data: p0 nonzero on Dirichlet node " + std::to_string(i));
            if (init.c0[i] != 0.0)
                v.push_back("initial data: c0 nonzero on Dirichlet node " + std::to_string(i));
            if (init.th0[i] != 0.0)
                v.push_back("initial data: theta0 nonzero on Dirichlet node " + std::to_string(i));
        }
    }
    return v;
}

}  // namespace poromem
