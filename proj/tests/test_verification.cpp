#include <cmath>

#include "doctest.h"
#include "poromem/verification.hpp"
#include "test_helpers.hpp"

using namespace poromem;
using namespace poromem::testing;

namespace {

Mesh all_dirichlet_mesh(int nx, int ny) {
    BoundarySpec spec;
    spec.left = spec.right = spec.bottom = spec.top = BoundaryTag::Dirichlet;
    return build_structured_mesh(nx, ny, 1.0, 1.0, spec);
}

}  // namespace

TEST_CASE("smooth-case sources match the symbolic worksheet spot values") {
    // Frozen 30-digit evaluations from docs/mms_worksheet.py.
    ManufacturedCase mc = make_smooth_case();
    struct Spot {
        double x, y, t, gp, gc, gth;
    };
    const Spot spots[] = {
        {0.3, 0.7, 0.25, -0.858509859882543520968486016729, 1.91520532914145442569386392433,
         6.02924392533164310306215157067},
        {0.5, 0.5, 1.0, -1.52088596966555393477570489750, 1.70272493152210643115331132352,
         10.8527660916673402278067131353},
        {0.8, 0.2, 2.5, -0.522866417764345707027909395443, 0.613561381048728286550587366748,
         2.51938690699181827646451510548},
    };
    for (const auto& s : spots) {
        const Vec2 x{s.x, s.y};
        CHECK(mc.sources.g_p(x, s.t) == doctest::Approx(s.gp).epsilon(1e-13));
        CHECK(mc.sources.g_c(x, s.t) == doctest::Approx(s.gc).epsilon(1e-13));
        CHECK(mc.sources.g_th(x, s.t) == doctest::Approx(s.gth).epsilon(1e-13));
    }
}

TEST_CASE("exact fields vanish on the Dirichlet boundary at all times") {
    ManufacturedCase mc = make_smooth_case();
    Mesh mesh = all_dirichlet_mesh(8, 8);
    for (double t : {0.0, 0.37, 1.0}) {
        for (int i : mesh.dirichlet_nodes) {
            const Vec2& x = mesh.nodes[i];
            CHECK(std::abs(mc.p_exact(x, t)) < 1e-14);
            CHECK(std::abs(mc.c_exact(x, t)) < 1e-14);
            CHECK(std::abs(mc.th_exact(x, t)) < 1e-14);
            CHECK(std::abs(mc.r_exact(x, t)) < 1e-14);
        }
    }
}

TEST_CASE("nondegeneracy certificates hold for both manufactured cases") {
    Mesh mesh = all_dirichlet_mesh(12, 12);
    for (auto mc : {make_smooth_case(), make_constant_case()}) {
        const auto violations = mc.check_nondegeneracy(mesh);
        for (const auto& v : violations) MESSAGE(mc.name << ": " << v);
        CHECK(violations.empty());
    }
}

TEST_CASE("manufactured initial data passes the structural validation") {
    ManufacturedCase mc = make_smooth_case();
    Mesh mesh = all_dirichlet_mesh(8, 8);
    InitialData init = mc.initial_data(mesh);
    CHECK(validate_initial(init, mesh).empty());
}

TEST_CASE("constant case is reproduced to rounding") {
    ManufacturedCase mc = make_constant_case();
    SchemeConfig cfg;
    ConvergenceTable table = run_convergence_study(mc, {8}, {4, 8}, cfg, 16);
    for (const auto& row : table.rows) {
        CHECK(row.err_p <= 1e-9);
        CHECK(row.err_c <= 1e-9);
        CHECK(row.err_th <= 1e-9);
        CHECK(row.err_r <= 1e-9);
    }
}

TEST_CASE("halving the spatial step cuts the pressure error by at least 3x") {
    ManufacturedCase mc = make_smooth_case();
    SchemeConfig cfg;
    cfg.ell_override = -50.0;
    ConvergenceTable t12 = run_convergence_study(mc, {12}, {256}, cfg, 256);
    ConvergenceTable t24 = run_convergence_study(mc, {24}, {256}, cfg, 256);
    REQUIRE(t12.rows.size() == 1);
    REQUIRE(t24.rows.size() == 1);
    CHECK(t12.rows[0].err_p >= 3.0 * t24.rows[0].err_p);
}

TEST_CASE("memory variable is exact for the state-independent rate") {
    ManufacturedCase mc = make_smooth_case();
    SchemeConfig cfg;
    cfg.ell_override = -50.0;
    ConvergenceTable t = run_convergence_study(mc, {8}, {8}, cfg, 16);
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0].err_r < 1e-13);
}

TEST_CASE("brute-force step: zero state with zero rate stays zero") {
    Mesh mesh = one_interior_dof_mesh();
    MaterialModel m = make_logistic_model();
    KirchhoffMap km = build_kirchhoff_map(m, -10.0);
    StateFields prev;
    const int nn = mesh.num_nodes();
    prev.p.assign(nn, 0.0);
    prev.c.assign(nn, 0.0);
    prev.th.assign(nn, 0.0);
    prev.r.assign(nn, 0.0);
    StateFields next = brute_force_single_step(mesh, m, km, prev, 0.1);
    for (int i = 0; i < nn; ++i) {
        CHECK(std::abs(next.p[i]) < 1e-12);
        CHECK(std::abs(next.c[i]) < 1e-12);
        CHECK(std::abs(next.th[i]) < 1e-12);
    }
}

TEST_CASE("single-dof step operator is monotone in the previous pressure") {
    Mesh mesh = one_interior_dof_mesh();
    const int ic = center_node(mesh);
    MaterialModel m = make_van_genuchten_model(VanGenuchtenParams{});
    KirchhoffMap km = build_kirchhoff_map(m, -20.0);
    double last = -std::numeric_limits<double>::infinity();
    for (double p_prev = -3.0; p_prev <= -0.2; p_prev += 0.2) {
        StateFields prev;
        const int nn = mesh.num_nodes();
        prev.p.assign(nn, 0.0);
        prev.c.assign(nn, 0.0);
        prev.th.assign(nn, 0.0);
        prev.r.assign(nn, 0.0);
        prev.p[ic] = p_prev;
        StateFields next = brute_force_single_step(mesh, m, km, prev, 0.05);
        CHECK(next.p[ic] > last);
        last = next.p[ic];
    }
}

TEST_CASE("stepper and brute-force oracle agree on randomized tiny scenarios") {
    MaterialModel m = make_van_genuchten_model(VanGenuchtenParams{});
    KirchhoffMap km = build_kirchhoff_map(m, -20.0);
    auto rng = make_rng(2024);
    std::uniform_real_distribution<double> up(-3.0, -0.1), uc(0.0, 1.0), uth(0.0, 3.0),
        ur(0.0, 0.3), uh(0.01, 0.2);
    for (int trial = 0; trial < 5; ++trial) {
        Mesh mesh = trial % 2 == 0 ? all_dirichlet_mesh(2, 2) : all_dirichlet_mesh(3, 2);
        const int nn = mesh.num_nodes();
        StateFields prev;
        prev.p.assign(nn, 0.0);
        prev.c.assign(nn, 0.0);
        prev.th.assign(nn, 0.0);
        prev.r.assign(nn, 0.0);
        for (int i = 0; i < nn; ++i) {
            if (mesh.is_dirichlet[i]) continue;
            prev.p[i] = up(rng);
            prev.c[i] = uc(rng);
            prev.th[i] = uth(rng);
            prev.r[i] = ur(rng);
        }
        const double h = uh(rng);
        SchemeConfig cfg;
        StateFields fast = advance_one_level(mesh, m, km, prev, h, cfg);
        StateFields slow = brute_force_single_step(mesh, m, km, prev, h);
        for (int i = 0; i < nn; ++i) {
            CHECK(std::abs(fast.p[i] - slow.p[i]) < 1e-9);
            CHECK(std::abs(fast.c[i] - slow.c[i]) < 1e-9);
            CHECK(std::abs(fast.th[i] - slow.th[i]) < 1e-9);
            CHECK(std::abs(fast.r[i] - slow.r[i]) < 1e-9);
        }
    }
}
