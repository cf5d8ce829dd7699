#include <cmath>
#include <limits>

#include "doctest.h"
#include "poromem/diagnostics.hpp"
#include "poromem/kirchhoff.hpp"
#include "test_helpers.hpp"

using namespace poromem;
using namespace poromem::testing;

namespace {

StateFields make_level(const Mesh& mesh, int idx, double h, double pv, double cv, double thv,
                       double rv) {
    StateFields s;
    const int nn = mesh.num_nodes();
    s.p.assign(nn, 0.0);
    s.c.assign(nn, 0.0);
    s.th.assign(nn, 0.0);
    s.r.assign(nn, 0.0);
    for (int i = 0; i < nn; ++i) {
        if (mesh.is_dirichlet[i]) continue;
        s.p[i] = pv;
        s.c[i] = cv;
        s.th[i] = thv;
        s.r[i] = rv;
    }
    s.level_index = idx;
    s.time = idx * h;
    return s;
}

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

TEST_CASE("max principle: zero trajectory, finite and sentinel bounds") {
    Mesh mesh = one_interior_dof_mesh();
    Trajectory traj;
    traj.h = 0.5;
    traj.levels = {make_level(mesh, 0, 0.5, 0, 0, 0, 0), make_level(mesh, 1, 0.5, 0, 0, 0, 0)};
    auto [mn, pass] = check_max_principle(traj, -2.0);
    CHECK(mn == 0.0);
    CHECK(pass);
    auto [mn2, pass2] =
        check_max_principle(traj, -std::numeric_limits<double>::infinity());
    CHECK(mn2 == 0.0);
    CHECK(pass2);  // vacuously true without a finite bound
}

TEST_CASE("stationary trajectory has zero translates") {
    Mesh mesh = one_interior_dof_mesh();
    Trajectory traj;
    traj.h = 0.1;
    for (int i = 0; i <= 8; ++i)
        traj.levels.push_back(make_level(mesh, i, 0.1, -0.7, 0.3, 0.2, 0.05));
    MaterialModel m = make_logistic_model();
    auto table = check_translate_estimates(traj, mesh, m, {1, 2, 4});
    for (const auto& row : table) {
        CHECK(row.T1 == 0.0);
        CHECK(row.T1_plain == 0.0);
        CHECK(row.T2 == 0.0);
        CHECK(row.T3 == 0.0);
        CHECK(row.T4 == 0.0);
    }
}

TEST_CASE("lags at or beyond the step count are rejected") {
    Mesh mesh = one_interior_dof_mesh();
    Trajectory traj;
    traj.h = 0.1;
    for (int i = 0; i <= 4; ++i) traj.levels.push_back(make_level(mesh, i, 0.1, 0, 0, 0, 0));
    MaterialModel m = make_logistic_model();
    CHECK_THROWS_AS(check_translate_estimates(traj, mesh, m, {4}), std::invalid_argument);
    CHECK_NOTHROW(check_translate_estimates(traj, mesh, m, {3}));
}

TEST_CASE("largest admissible lag on a two-step run reduces to a single hand term") {
    Mesh mesh = one_interior_dof_mesh();
    const int ic = center_node(mesh);
    const double h = 0.25;
    Trajectory traj;
    traj.h = h;
    traj.levels = {make_level(mesh, 0, h, -1.0, 0.9, 0.1, 0.0),
                   make_level(mesh, 1, h, -0.8, 0.7, 0.3, 0.01),
                   make_level(mesh, 2, h, -0.5, 0.6, 0.4, 0.02)};
    MaterialModel m = make_logistic_model();
    auto table = check_translate_estimates(traj, mesh, m, {1});
    REQUIRE(table.size() == 1);
    // Only the pair (level 1, level 2) enters: the interpolants live on
    // (0, T], so level 0 is not part of the translate integral.
    const double mass = mesh.lumped_mass[ic];
    const double dp = -0.5 - (-0.8);
    const double T1_hand = h * mass * (m.S(-0.5) - m.S(-0.8)) * dp;
    const double T2_hand = h * mass * (0.6 - 0.7) * (0.6 - 0.7);
    const double T3_hand = h * mass * (0.4 - 0.3) * (0.4 - 0.3);
    const double T4_hand = h * mass * (0.02 - 0.01) * (0.02 - 0.01);
    CHECK(table[0].T1 == doctest::Approx(T1_hand).epsilon(1e-14));
    CHECK(table[0].T2 == doctest::Approx(T2_hand).epsilon(1e-14));
    CHECK(table[0].T3 == doctest::Approx(T3_hand).epsilon(1e-14));
    CHECK(table[0].T4 == doctest::Approx(T4_hand).epsilon(1e-14));
    CHECK(table[0].r1 == doctest::Approx(T1_hand / h).epsilon(1e-14));
}

TEST_CASE("energy series vanishes on the zero trajectory") {
    Mesh mesh = one_interior_dof_mesh();
    Trajectory traj;
    traj.h = 0.1;
    for (int i = 0; i <= 4; ++i) traj.levels.push_back(make_level(mesh, i, 0.1, 0, 0, 0, 0));
    MaterialModel m = make_logistic_model();
    auto E = check_energy_estimate(traj, mesh, m);
    REQUIRE(E.size() == 5);
    for (double e : E) CHECK(std::abs(e) < 1e-12);
}

TEST_CASE("one-step energy matches the hand-assembled value") {
    Mesh mesh = one_interior_dof_mesh();
    const int ic = center_node(mesh);
    const double h = 0.2;
    Trajectory traj;
    traj.h = h;
    traj.levels = {make_level(mesh, 0, h, -1.0, 0, 0, 0), make_level(mesh, 1, h, -0.6, 0, 0, 0)};
    MaterialModel m = make_logistic_model();
    auto E = check_energy_estimate(traj, mesh, m);
    REQUIRE(E.size() == 2);
    const double mass = mesh.lumped_mass[ic];
    const double E1_hand = mass * theta_S(m, -0.6) + h * grad_sq(mesh, traj.levels[1].p);
    CHECK(E[1] == doctest::Approx(E1_hand).epsilon(1e-8));
    // Gradient partial sum is nondecreasing by construction.
    const double theta0 = mass * theta_S(m, -1.0);
    const double theta1 = mass * theta_S(m, -0.6);
    CHECK(E[1] - theta1 >= E[0] - theta0 - 1e-14);
}

TEST_CASE("stationary zero trajectory with zero rate has zero weak residuals") {
    Mesh mesh = one_interior_dof_mesh();
    MaterialModel m = make_logistic_model();  // f == 0
    KirchhoffMap km = build_kirchhoff_map(m, -10.0);
    Trajectory traj;
    traj.h = 0.125;
    for (int i = 0; i <= 8; ++i) traj.levels.push_back(make_level(mesh, i, 0.125, 0, 0, 0, 0));
    WeakResiduals w = check_weak_residual(traj, mesh, m, km, 8, nullptr);
    CHECK(w.p_eq == doctest::Approx(0.0));
    CHECK(w.c_eq == doctest::Approx(0.0));
    CHECK(w.th_eq == doctest::Approx(0.0));
    CHECK(w.memory_identity == doctest::Approx(0.0));
}

TEST_CASE("memory identity is definitional on any computed run") {
    BoundarySpec spec;
    Mesh mesh = build_structured_mesh(4, 4, 1.0, 1.0, spec);
    MaterialModel m = make_van_genuchten_model(VanGenuchtenParams{});
    InitialData init;
    const int nn = mesh.num_nodes();
    init.p0.assign(nn, 0.0);
    init.c0.assign(nn, 0.0);
    init.th0.assign(nn, 0.0);
    init.p1 = -3.0;
    for (int i = 0; i < nn; ++i)
        if (!mesh.is_dirichlet[i]) init.p0[i] = -1.0;
    SchemeConfig cfg;
    cfg.T = 0.5;
    cfg.n = 8;
    RunResult rr = run(mesh, m, init, cfg);
    REQUIRE(rr.completed);
    KirchhoffMap km = build_kirchhoff_map(m, rr.ell_used);
    WeakResiduals w = check_weak_residual(rr.trajectory, mesh, m, km, 8, nullptr);
    CHECK(w.memory_identity <= 1e-14);
}

TEST_CASE("hydration rate bound: zero rate, and exact equality at constant rate") {
    Mesh mesh = one_interior_dof_mesh();
    const double h = 0.1;

    {
        Trajectory traj;
        traj.h = h;
        for (int i = 0; i <= 3; ++i) traj.levels.push_back(make_level(mesh, i, h, 0, 0, 0, 0));
        MaterialModel m = make_logistic_model();
        auto res = check_hydration_rate_bound(traj, m);
        CHECK(res.max_rate == 0.0);
        CHECK(res.pass);
    }
    {
        MaterialModel m = make_constant_rate_model(0.05);
        Trajectory traj;
        traj.h = h;
        for (int i = 0; i <= 3; ++i)
            traj.levels.push_back(make_level(mesh, i, h, 0, 0, 0, i * h * 0.05));
        auto res = check_hydration_rate_bound(traj, m);
        CHECK(res.max_rate == doctest::Approx(0.05).epsilon(1e-14));
        CHECK(res.pass);
    }
}

TEST_CASE("diagnostics are a pure function of the trajectory") {
    BoundarySpec spec;
    Mesh mesh = build_structured_mesh(5, 5, 1.0, 1.0, spec);
    MaterialModel m = make_van_genuchten_model(VanGenuchtenParams{});
    InitialData init;
    const int nn = mesh.num_nodes();
    init.p0.assign(nn, 0.0);
    init.c0.assign(nn, 0.0);
    init.th0.assign(nn, 0.0);
    init.p1 = -5.0;
    for (int i = 0; i < nn; ++i)
        if (!mesh.is_dirichlet[i]) {
            init.p0[i] = -2.0;
            init.c0[i] = 0.5;
            init.th0[i] = 0.5;
        }
    SchemeConfig cfg;
    cfg.T = 0.5;
    cfg.n = 10;
    RunResult rr = run(mesh, m, init, cfg);
    REQUIRE(rr.completed);
    DiagnosticsConfig dcfg;
    dcfg.lags = {1, 2, 4};
    DiagnosticsReport a =
        run_diagnostics(rr.trajectory, mesh, m, dcfg, rr.bound, rr.ell_used, nullptr);
    DiagnosticsReport b =
        run_diagnostics(rr.trajectory, mesh, m, dcfg, rr.bound, rr.ell_used, nullptr);
    CHECK(a.all_pass);
    CHECK(a.all_pass == b.all_pass);
    CHECK(a.energy_sup == b.energy_sup);
    CHECK(a.energy_series == b.energy_series);
    CHECK(a.weak.p_eq == b.weak.p_eq);
    CHECK(a.weak.c_eq == b.weak.c_eq);
    CHECK(a.weak.th_eq == b.weak.th_eq);
    REQUIRE(a.translates.size() == b.translates.size());
    for (size_t i = 0; i < a.translates.size(); ++i) {
        CHECK(a.translates[i].T1 == b.translates[i].T1);
        CHECK(a.translates[i].T2 == b.translates[i].T2);
        CHECK(a.translates[i].T3 == b.translates[i].T3);
        CHECK(a.translates[i].T4 == b.translates[i].T4);
    }
    CHECK(a.max_principle.observed_min == b.max_principle.observed_min);
    CHECK(a.hydration.max_rate == b.hydration.max_rate);
}
