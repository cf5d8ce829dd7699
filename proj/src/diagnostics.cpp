#include "poromem/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "poromem/kirchhoff.hpp"

namespace poromem {

namespace {

// C1 temporal bump q_b(t) = (1 - u^2)^2, u = (t - b*w)/w, w = T/(B+1),
// supported on [b*w - w, b*w + w]; vanishes (with derivative) at the
// support ends and at t = T for every b <= B-1.
struct TemporalBump {
    double center, w;
    double value(double t) const {
        const double u = (t - center) / w;
        if (u <= -1.0 || u >= 1.0) return 0.0;
        const double s = 1.0 - u * u;
        return s * s;
    }
    static double anti(double u) { return u - 2.0 * u * u * u / 3.0 + std::pow(u, 5) / 5.0; }
    double integral(double t0, double t1) const {
        const double u0 = std::clamp((t0 - center) / w, -1.0, 1.0);
        const double u1 = std::clamp((t1 - center) / w, -1.0, 1.0);
        return w * (anti(u1) - anti(u0));
    }
};

double grad_sq(const Mesh& mesh, const std::vector<double>& v) {
    double acc = 0.0;
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        Vec2 g{0, 0};
        for (int k = 0; k < 3; ++k) g = g + v[tri[k]] * mesh.tri_grad[t][k];
        acc += dot(g, g) * std::abs(mesh.tri_area[t]);
    }
    return acc;
}

}  // namespace

std::pair<double, bool> check_max_principle(const TrajectoryView& traj, double ell) {
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 0; i < traj.num_levels(); ++i)
        for (double v : traj.level(i).p) mn = std::min(mn, v);
    return {mn, mn >= ell};
}

std::vector<TranslateRow> check_translate_estimates(const TrajectoryView& traj, const Mesh& mesh,
                                                    const MaterialModel& model,
                                                    const std::vector<int>& lags) {
    const int n = traj.num_levels() - 1;
    const double h = traj.step_size();
    std::vector<TranslateRow> table;
    for (int k : lags) {
        if (k >= n) throw std::invalid_argument("check_translate_estimates: lag k must be < n");
        TranslateRow row;
        row.k = k;
        // The interpolants take levels 1..n on (0, T]; the translate
        // integral over (0, T - kh) pairs levels (j, j+k) for j = 1..n-k.
        for (int j = 1; j + k <= n; ++j) {
            const StateFields& a = traj.level(j);
            const StateFields& b = traj.level(j + k);
            for (int i = 0; i < mesh.num_nodes(); ++i) {
                const double m = mesh.lumped_mass[i];
                const double dp = b.p[i] - a.p[i];
                row.T1 += h * m * (model.S(b.p[i]) - model.S(a.p[i])) * dp;
                row.T1_plain += h * m * dp * dp;
                const double dc = b.c[i] - a.c[i];
                row.T2 += h * m * dc * dc;
                const double dth = b.th[i] - a.th[i];
                row.T3 += h * m * dth * dth;
                const double dr = b.r[i] - a.r[i];
                row.T4 += h * m * dr * dr;
            }
        }
        const double kh = k * h;
        row.r1 = row.T1 / kh;
        row.r2 = row.T2 / kh;
        row.r3 = row.T3 / kh;
        row.r4 = row.T4 / kh;
        table.push_back(row);
    }
    return table;
}

std::vector<double> check_energy_estimate(const TrajectoryView& traj, const Mesh& mesh,
                                          const MaterialModel& model) {
    const int n = traj.num_levels() - 1;
    const double h = traj.step_size();

    // Tabulate Theta_S over the observed pressure range (Hermite interpolant
    // with the exact derivative S'(xi) xi; dense enough to stay far below
    // the reporting tolerance).
    double pmin = 0.0, pmax = 0.0;
    for (int i = 0; i <= n; ++i)
        for (double v : traj.level(i).p) {
            pmin = std::min(pmin, v);
            pmax = std::max(pmax, v);
        }
    const int nk = 4096;
    const double lo = pmin - 1.0, hi = pmax + 1.0;
    std::vector<double> kx(nk + 1), kv(nk + 1), kd(nk + 1);
    for (int i = 0; i <= nk; ++i) {
        kx[i] = lo + (hi - lo) * i / nk;
        kv[i] = theta_S(model, kx[i]);
        kd[i] = model.dS(kx[i]) * kx[i];
    }
    auto theta_tab = [&](double xi) {
        const double s = (xi - lo) / (hi - lo) * nk;
        const int i0 = std::clamp(static_cast<int>(s), 0, nk - 1);
        const double x0 = kx[i0], x1 = kx[i0 + 1];
        const double t = (xi - x0) / (x1 - x0);
        const double t2 = t * t, t3 = t2 * t, hh = x1 - x0;
        return (2 * t3 - 3 * t2 + 1) * kv[i0] + (t3 - 2 * t2 + t) * hh * kd[i0] +
               (-2 * t3 + 3 * t2) * kv[i0 + 1] + (t3 - t2) * hh * kd[i0 + 1];
    };

    std::vector<double> E(n + 1, 0.0);
    double grad_acc = 0.0;
    for (int k = 0; k <= n; ++k) {
        const StateFields& st = traj.level(k);
        double theta_part = 0.0;
        for (int i = 0; i < mesh.num_nodes(); ++i)
            theta_part += mesh.lumped_mass[i] * theta_tab(st.p[i]);
        if (k >= 1) grad_acc += h * grad_sq(mesh, st.p);
        E[k] = theta_part + grad_acc;
    }
    return E;
}

WeakResiduals check_weak_residual(const TrajectoryView& traj, const Mesh& mesh,
                                  const MaterialModel& model, const KirchhoffMap& kmap,
                                  int temporal_basis, const VolumeSources* src) {
    const int n = traj.num_levels() - 1;
    const double h = traj.step_size();
    const double T = n * h;
    const int nn = mesh.num_nodes();

    std::vector<TemporalBump> bumps;
    const double w = T / (temporal_basis + 1);
    for (int b = 0; b < temporal_basis; ++b) bumps.push_back({b * w, w});

    std::vector<int> interior;
    for (int i = 0; i < nn; ++i)
        if (!mesh.is_dirichlet[i]) interior.push_back(i);

    const size_t cnt = interior.size() * bumps.size();
    std::vector<double> Rp(cnt, 0.0), Rc(cnt, 0.0), Rth(cnt, 0.0);

    // Memory-condition replay (the scheme defines r by this very sum).
    std::vector<double> fsum(nn, 0.0);
    double mem_max = 0.0;

    for (int lvl = 1; lvl <= n; ++lvl) {
        const StateFields& cur = traj.level(lvl);
        const StateFields& prev = traj.level(lvl - 1);
        const double t0 = (lvl - 1) * h, t1 = lvl * h;

        // Non-lagged spatial operators at the current level (the weak form
        // of Definition-style interpolants; the O(h) defect against the
        // lagged scheme is exactly what this metric measures).
        const SpMat KA = assemble_darcy_stiffness(mesh, model, cur.th, cur.r);
        std::vector<double> u(nn);
        for (int i = 0; i < nn; ++i) u[i] = kmap.beta(cur.p[i]);
        Eigen::Map<const Eigen::VectorXd> uv(u.data(), nn);
        const Eigen::VectorXd Ku = KA * uv;

        SpMat N = assemble_upwind_advection(mesh, KA, u);
        Eigen::Map<const Eigen::VectorXd> cv(cur.c.data(), nn);
        Eigen::Map<const Eigen::VectorXd> thv(cur.th.data(), nn);

        // Diffusion / conduction with non-lagged coefficients.
        std::vector<Eigen::Triplet<double>> dtrips, ltrips;
        for (int t = 0; t < mesh.num_triangles(); ++t) {
            const auto& tri = mesh.triangles[t];
            const Vec2 xc = mesh.tri_centroid[t];
            const double pc = (cur.p[tri[0]] + cur.p[tri[1]] + cur.p[tri[2]]) / 3.0;
            const double thc = (cur.th[tri[0]] + cur.th[tri[1]] + cur.th[tri[2]]) / 3.0;
            const double rc = (cur.r[tri[0]] + cur.r[tri[1]] + cur.r[tri[2]]) / 3.0;
            const double cd = model.phi(xc, rc) * std::clamp(model.S(pc), 0.0, model.S_s) *
                              model.D_w(xc, pc) * std::abs(mesh.tri_area[t]);
            const double ld = model.lambda(xc, pc, thc, rc) * std::abs(mesh.tri_area[t]);
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) {
                    const double gij = dot(mesh.tri_grad[t][i], mesh.tri_grad[t][j]);
                    dtrips.emplace_back(tri[i], tri[j], cd * gij);
                    ltrips.emplace_back(tri[i], tri[j], ld * gij);
                }
        }
        SpMat Dc(nn, nn), Lth(nn, nn);
        Dc.setFromTriplets(dtrips.begin(), dtrips.end());
        Lth.setFromTriplets(ltrips.begin(), ltrips.end());

        const Eigen::VectorXd diff_c = Dc * cv + N * cv;
        const Eigen::VectorXd diff_th = Lth * thv + N * thv;

        for (size_t ii = 0; ii < interior.size(); ++ii) {
            const int i = interior[ii];
            const Vec2& x = mesh.nodes[i];
            const double m = mesh.lumped_mass[i];
            const double fi = model.f(x, cur.p[i], cur.c[i], cur.th[i], cur.r[i]);

            const double capP_new = model.phi(x, cur.r[i]) * model.S(cur.p[i]);
            const double capP_old = model.phi(x, prev.r[i]) * model.S(prev.p[i]);
            const double dm_p = m * (capP_new - capP_old);
            const double dm_c = m * (capP_new * cur.c[i] - capP_old * prev.c[i]);
            const double dm_th = m * ((capP_new + model.rho(x, cur.r[i])) * cur.th[i] -
                                      (capP_old + model.rho(x, prev.r[i])) * prev.th[i]);

            double sp_p = Ku[i] - m * model.alpha1 * fi;
            double sp_c = diff_c[i];
            double sp_th = diff_th[i] - m * model.alpha2 * fi;
            if (src) {
                if (src->g_p) sp_p -= m * src->g_p(x, t1);
                if (src->g_c) sp_c -= m * src->g_c(x, t1);
                if (src->g_th) sp_th -= m * src->g_th(x, t1);
            }

            for (size_t b = 0; b < bumps.size(); ++b) {
                const double qv = bumps[b].value(t0);
                const double qi = bumps[b].integral(t0, t1);
                const size_t idx = ii * bumps.size() + b;
                Rp[idx] += dm_p * qv + sp_p * qi;
                Rc[idx] += dm_c * qv + sp_c * qi;
                Rth[idx] += dm_th * qv + sp_th * qi;
            }
        }

        // Memory condition uses the scheme's own (lagged) arguments.
        for (int i = 0; i < nn; ++i) {
            fsum[i] += h * model.f(mesh.nodes[i], cur.p[i], prev.c[i], prev.th[i], prev.r[i]);
            mem_max = std::max(mem_max, std::abs(cur.r[i] - fsum[i]));
        }
    }

    auto rms = [&](const std::vector<double>& R) {
        double acc = 0.0;
        for (double v : R) acc += v * v;
        return std::sqrt(acc / std::max<size_t>(R.size(), 1));
    };
    WeakResiduals res;
    res.p_eq = rms(Rp);
    res.c_eq = rms(Rc);
    res.th_eq = rms(Rth);
    res.memory_identity = mem_max;
    res.temporal_basis = temporal_basis;
    res.spatial_basis = static_cast<int>(interior.size());
    return res;
}

HydrationRateResult check_hydration_rate_bound(const TrajectoryView& traj,
                                               const MaterialModel& model) {
    HydrationRateResult res;
    res.C_f = model.C_f;
    const double h = traj.step_size();
    for (int i = 1; i < traj.num_levels(); ++i) {
        const auto& r0 = traj.level(i - 1).r;
        const auto& r1 = traj.level(i).r;
        for (size_t j = 0; j < r1.size(); ++j)
            res.max_rate = std::max(res.max_rate, std::abs(r1[j] - r0[j]) / h);
    }
    res.pass = res.max_rate <= model.C_f * (1.0 + 1e-12);
    return res;
}

DiagnosticsReport run_diagnostics(const TrajectoryView& traj, const Mesh& mesh,
                                  const MaterialModel& model, const DiagnosticsConfig& cfg,
                                  const PressureBoundResult& bound, double ell_used,
                                  const VolumeSources* src) {
    DiagnosticsReport rep;

    auto [mn, pass] = check_max_principle(traj, ell_used);
    rep.max_principle.theoretical_ell = ell_used;
    rep.max_principle.observed_min = mn;
    rep.max_principle.has_bound = bound.found;
    rep.max_principle.pass = bound.found ? pass : true;

    const int n = traj.num_levels() - 1;
    const double h = traj.step_size();
    const double T = n * h;

    double c0max = 0.0;
    for (double v : traj.level(0).c) c0max = std::max(c0max, std::abs(v));
    double cmax = 0.0, thmax = 0.0, rmax = 0.0;
    for (int i = 0; i <= n; ++i) {
        const StateFields& st = traj.level(i);
        for (double v : st.c) cmax = std::max(cmax, std::abs(v));
        for (double v : st.th) thmax = std::max(thmax, std::abs(v));
        for (double v : st.r) rmax = std::max(rmax, std::abs(v));
    }
    rep.linf.push_back({"c", c0max * (1.0 + cfg.c_linf_tol), cmax, true,
                        cmax <= c0max * (1.0 + cfg.c_linf_tol)});
    rep.linf.push_back({"theta", 0.0, thmax, false, true});
    rep.linf.push_back({"r", T * model.C_f * (1.0 + cfg.rate_tol), rmax, true,
                        rmax <= T * model.C_f * (1.0 + cfg.rate_tol)});

    rep.energy_series = check_energy_estimate(traj, mesh, model);
    rep.energy_sup = *std::max_element(rep.energy_series.begin(), rep.energy_series.end());

    std::vector<int> lags;
    for (int k : cfg.lags)
        if (k < n) lags.push_back(k);
    rep.translates = check_translate_estimates(traj, mesh, model, lags);

    const KirchhoffMap kmap = build_kirchhoff_map(model, ell_used);
    rep.weak = check_weak_residual(traj, mesh, model, kmap, cfg.temporal_test_functions, src);

    rep.hydration = check_hydration_rate_bound(traj, model);

    if (bound.found) {
        rep.degiorgi_delta = bound.delta;
        rep.degiorgi_gamma = bound.gamma;
        rep.degiorgi_tau = bound.tau;
        for (int j = 0; j <= 20; ++j) {
            const double dj = 0.5 * bound.delta * (1.0 + std::pow(2.0, -j));
            rep.degiorgi_d.push_back(dj);
            rep.degiorgi_k.push_back(model.S_inv(std::min(dj, model.S_s * (1.0 - 1e-12))));
        }
        rep.degiorgi_Z = degiorgi_recurrence(bound.gamma, bound.tau, bound.domain_area, 200).Z;
    }

    rep.all_pass = rep.max_principle.pass && rep.hydration.pass;
    for (const LinfBound& b : rep.linf) rep.all_pass = rep.all_pass && b.pass;
    return rep;
}

}  // namespace poromem
