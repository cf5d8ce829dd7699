#include "poromem/stepper.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>

namespace poromem {

namespace {

double free_norm(const Mesh& mesh, const Eigen::VectorXd& v) {
    double acc = 0.0;
    for (int i = 0; i < v.size(); ++i)
        if (!mesh.is_dirichlet[i]) acc += v[i] * v[i];
    return std::sqrt(acc);
}

// Solve the Dirichlet-reduced linear system J du = -res on the free dofs.
Eigen::VectorXd solve_newton_direction(const Mesh& mesh, const SpMat& J,
                                       const Eigen::VectorXd& res, const SchemeConfig& cfg) {
    const int nn = mesh.num_nodes();
    std::vector<int> free_idx(nn, -1);
    int nf = 0;
    for (int i = 0; i < nn; ++i)
        if (!mesh.is_dirichlet[i]) free_idx[i] = nf++;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(J.nonZeros());
    for (int k = 0; k < J.outerSize(); ++k)
        for (SpMat::InnerIterator it(J, k); it; ++it) {
            const int fi = free_idx[it.row()], fj = free_idx[it.col()];
            if (fi >= 0 && fj >= 0) trips.emplace_back(fi, fj, it.value());
        }
    SpMat Jr(nf, nf);
    Jr.setFromTriplets(trips.begin(), trips.end());
    Eigen::VectorXd rhs(nf);
    for (int i = 0; i < nn; ++i)
        if (free_idx[i] >= 0) rhs[free_idx[i]] = -res[i];

    Eigen::VectorXd x;
    const bool iterative = cfg.linear_solver == "iterative" || nf > cfg.direct_dof_threshold;
    if (!iterative) {
        Eigen::SparseLU<SpMat> lu;
        lu.compute(Jr);
        if (lu.info() != Eigen::Success)
            throw std::runtime_error("pressure step: Jacobian factorization failed");
        x = lu.solve(rhs);
    } else {
        Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> solver;
        solver.setTolerance(cfg.linear_tol);
        solver.setMaxIterations(20000);
        solver.compute(Jr);
        x = solver.solve(rhs);
        if (solver.info() != Eigen::Success)
            throw std::runtime_error("pressure step: iterative linear solve failed");
    }

    Eigen::VectorXd du = Eigen::VectorXd::Zero(nn);
    for (int i = 0; i < nn; ++i)
        if (free_idx[i] >= 0) du[i] = x[free_idx[i]];
    return du;
}

}  // namespace

std::vector<double> solve_pressure_step(const Mesh& mesh, const MaterialModel& model,
                                        const KirchhoffMap& kmap, const SpMat& KA,
                                        const StateFields& prev, double h, double t_new,
                                        const SchemeConfig& cfg, const VolumeSources* src,
                                        StepStats* stats_out) {
    const int nn = mesh.num_nodes();
    std::vector<double> p(nn);
    Eigen::VectorXd u(nn);
    for (int i = 0; i < nn; ++i) {
        p[i] = mesh.is_dirichlet[i] ? 0.0 : prev.p[i];
        u[i] = mesh.is_dirichlet[i] ? 0.0 : kmap.beta(p[i]);
    }

    Eigen::VectorXd res;
    assemble_pressure_residual(mesh, model, kmap, KA, p, prev, h, t_new, src, res, nullptr);

    double norm = free_norm(mesh, res);
    const double target = cfg.newton_tol * (norm + 1.0);
    std::vector<double> history{norm};
    bool picard = false;
    bool used_picard = false;

    int iter = 0;
    while (norm > target) {
        if (iter++ >= cfg.newton_max_iter)
            throw StepFailure("pressure step: Newton did not converge within " +
                                  std::to_string(cfg.newton_max_iter) + " iterations",
                              history);

        const SpMat J = pressure_jacobian_u(mesh, model, kmap, KA, p, prev, h, picard);
        const Eigen::VectorXd du = solve_newton_direction(mesh, J, res, cfg);

        double t = 1.0;
        bool accepted = false;
        std::vector<double> p_try(nn);
        Eigen::VectorXd u_try(nn), res_try;
        for (int ls = 0; ls <= cfg.line_search_max; ++ls) {
            u_try = u + t * du;
            for (int i = 0; i < nn; ++i)
                p_try[i] = mesh.is_dirichlet[i] ? 0.0 : kmap.beta_inv(u_try[i]);
            assemble_pressure_residual(mesh, model, kmap, KA, p_try, prev, h, t_new, src, res_try,
                                       nullptr);
            const double norm_try = free_norm(mesh, res_try);
            if (norm_try <= (1.0 - 1e-4 * t) * norm) {
                accepted = true;
                u = u_try;
                p = p_try;
                res = res_try;
                norm = norm_try;
                history.push_back(norm);
                break;
            }
            t *= cfg.line_search_factor;
        }
        if (!accepted) {
            if (!picard) {
                // Fall back to the Picard linearization (coefficient
                // derivatives dropped) and retry from the current iterate.
                picard = true;
                used_picard = true;
                continue;
            }
            throw StepFailure("pressure step: line search stalled (Picard fallback included)",
                              history);
        }
    }

    if (stats_out) {
        stats_out->newton_iters = static_cast<int>(history.size()) - 1;
        stats_out->residual_norms = history;
        stats_out->used_picard = used_picard;
    }
    return p;
}

StateFields advance_one_level(const Mesh& mesh, const MaterialModel& model,
                              const KirchhoffMap& kmap, const StateFields& prev, double h,
                              const SchemeConfig& cfg, const VolumeSources* src,
                              StepStats* stats_out) {
    const double t_new = prev.time + h;
    const SpMat KA = assemble_darcy_stiffness(mesh, model, prev.th, prev.r);

    StepStats stats;
    StateFields next;
    next.level_index = prev.level_index + 1;
    next.time = t_new;
    next.p = solve_pressure_step(mesh, model, kmap, KA, prev, h, t_new, cfg, src, &stats);
    next.r = update_hydration(mesh, model, next.p, prev, h);

    const bool iterative = cfg.linear_solver == "iterative" ||
                           mesh.num_interior_dofs() > cfg.direct_dof_threshold;

    AssembledSystem csys =
        assemble_concentration_system(mesh, model, KA, kmap, next.p, next.r, prev, h, t_new, src);
    stats.min_diag_c = csys.min_diagonal;
    Eigen::VectorXd c = solve_sparse(csys, iterative, cfg.linear_tol);

    AssembledSystem tsys =
        assemble_temperature_system(mesh, model, KA, kmap, next.p, next.r, prev, h, t_new, src);
    stats.min_diag_th = tsys.min_diagonal;
    Eigen::VectorXd th = solve_sparse(tsys, iterative, cfg.linear_tol);

    next.c.assign(c.data(), c.data() + c.size());
    next.th.assign(th.data(), th.data() + th.size());
    if (stats_out) *stats_out = stats;
    return next;
}

std::pair<PressureBoundResult, double> resolve_pressure_bound(const MaterialModel& model,
                                                              double domain_area,
                                                              const SchemeConfig& cfg,
                                                              double p1) {
    PressureBoundResult bound;
    double ell_used;
    if (std::isnan(cfg.ell_override)) {
        bound = estimate_pressure_lower_bound(model, domain_area, cfg.q, cfg.C_E);
        ell_used = bound.found ? std::min(bound.ell, p1) : std::min(4.0 * p1, -100.0);
    } else {
        ell_used = cfg.ell_override;
    }
    return {bound, ell_used};
}

RunResult run(const Mesh& mesh, const MaterialModel& model, const InitialData& init,
              const SchemeConfig& cfg, const VolumeSources* src, const LevelSink* sink,
              bool keep_in_memory) {
    RunResult out;

    double area = 0.0;
    for (double a : mesh.tri_area) area += std::abs(a);
    std::tie(out.bound, out.ell_used) = resolve_pressure_bound(model, area, cfg, init.p1);
    const KirchhoffMap kmap = build_kirchhoff_map(model, out.ell_used);
    const double ell_floor =
        out.ell_used - cfg.ell_slack * std::abs(out.ell_used);  // falsification threshold

    for (int attempt = 0; attempt <= cfg.max_h_halvings; ++attempt) {
        const int n = cfg.n << attempt;
        const double h = cfg.T / n;
        out.halvings = attempt;
        out.n_effective = n;

        Trajectory traj;
        traj.h = h;
        StateFields state;
        state.p = init.p0;
        state.c = init.c0;
        state.th = init.th0;
        state.r.assign(mesh.num_nodes(), 0.0);
        state.level_index = 0;
        state.time = 0.0;

        out.observed_min_p = *std::min_element(state.p.begin(), state.p.end());
        if (sink && sink->begin) sink->begin(n + 1, h);
        if (sink && sink->append) sink->append(state);
        if (keep_in_memory) traj.levels.push_back(state);

        bool failed = false;
        for (int i = 1; i <= n; ++i) {
            StepStats stats;
            StateFields next;
            try {
                next = advance_one_level(mesh, model, kmap, state, h, cfg, src, &stats);
            } catch (const StepFailure& e) {
                failed = true;
                out.error = e.what();
                break;
            }
            const double minp = *std::min_element(next.p.begin(), next.p.end());
            out.observed_min_p = std::min(out.observed_min_p, minp);
            if (keep_in_memory) {
                traj.levels.push_back(next);
                traj.stats.push_back(stats);
            }
            if (sink && sink->append) sink->append(next);
            if (minp < ell_floor) {
                // A genuine weak-maximum-principle violation relative to the
                // configured embedding constant: report, do not retry.
                out.trajectory = std::move(traj);
                out.ell_violation = true;
                out.completed = false;
                out.error = "observed min p " + std::to_string(minp) +
                            " fell below ell - slack = " + std::to_string(ell_floor) +
                            " (configured C_E too optimistic)";
                return out;
            }
            state = std::move(next);
        }
        if (!failed) {
            out.trajectory = std::move(traj);
            out.completed = true;
            out.error.clear();
            return out;
        }
    }
    out.completed = false;
    if (out.error.empty()) out.error = "run: all h-halving attempts failed";
    return out;
}

}  // namespace poromem
