#include "poromem/verification.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace poromem {

namespace {

constexpr double kPi = 3.14159265358979323846;

double sx(double x, double y) { return std::sin(kPi * x) * std::sin(kPi * y); }

// Arctangent saturation family shared by both manufactured cases:
// S(p) = 0.8 (1/2 + atan(p)/pi), a(p) = 0.2 + S(p), all other coefficients
// constant. The polynomial tails keep S strictly positive in double
// precision at arbitrarily deep suction (an exponential tail underflows).
MaterialModel make_mms_model() {
    MaterialModel m;
    m.S_s = 0.8;
    m.S = [](double p) { return 0.8 * (0.5 + std::atan(p) / kPi); };
    m.dS = [](double p) { return 0.8 / (kPi * (1.0 + p * p)); };
    m.S_inv = [](double s) { return std::tan(kPi * (s / 0.8 - 0.5)); };

    m.k = [](const Vec2&, double) { return 1.0; };
    m.k1 = 1.0;
    m.k2 = 1.0;
    m.k_R = [](double s) { return 0.2 + s; };
    m.mu = [](double) { return 1.0; };
    m.mu1 = 1.0;
    m.mu2 = 1.0;

    m.phi = [](const Vec2&, double) { return 0.4; };
    m.dphi_dr = [](const Vec2&, double) { return 0.0; };
    m.phi1 = 0.4;
    m.phi2 = 0.4;
    m.C_phi = 0.0;

    m.rho = [](const Vec2&, double) { return 1.0; };
    m.rho1 = 1.0;
    m.rho2 = 1.0;

    m.D_w = [](const Vec2&, double) { return 1.5; };
    m.lambda = [](const Vec2&, double, double, double) { return 1.0; };

    // State-independent rate: the memory variable is reproduced exactly by
    // the scheme, which makes the case a sharp oracle for the other fields.
    m.f = [](const Vec2& x, double, double, double, double) { return 0.05 * sx(x.x, x.y); };
    m.df_dp = [](const Vec2&, double, double, double, double) { return 0.0; };
    m.f_tilde = [](double) { return 0.05; };
    m.C_f = 0.05;

    m.alpha1 = 0.5;
    m.alpha2 = 0.8;

    fill_model_fallbacks(m);
    derive_envelopes(m);
    return m;
}

double lumped_l2_error(const Mesh& mesh, const std::vector<double>& v,
                       const std::function<double(const Vec2&, double)>& exact, double t) {
    double acc = 0.0;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const double d = v[i] - exact(mesh.nodes[i], t);
        acc += mesh.lumped_mass[i] * d * d;
    }
    return std::sqrt(acc);
}

double lumped_l2_diff(const Mesh& mesh, const std::vector<double>& a,
                      const std::vector<double>& b) {
    double acc = 0.0;
    for (int i = 0; i < mesh.num_nodes(); ++i) {
        const double d = a[i] - b[i];
        acc += mesh.lumped_mass[i] * d * d;
    }
    return std::sqrt(acc);
}

Mesh unit_square_dirichlet(int nx) {
    BoundarySpec spec;
    spec.left = spec.right = spec.bottom = spec.top = BoundaryTag::Dirichlet;
    return build_structured_mesh(nx, nx, 1.0, 1.0, spec);
}

}  // namespace

InitialData ManufacturedCase::initial_data(const Mesh& mesh) const {
    InitialData init;
    const int nn = mesh.num_nodes();
    init.p0.resize(nn);
    init.c0.resize(nn);
    init.th0.resize(nn);
    for (int i = 0; i < nn; ++i) {
        if (mesh.is_dirichlet[i]) {
            init.p0[i] = init.c0[i] = init.th0[i] = 0.0;
        } else {
            // Clamp rounding noise: the exact fields are <= 0 (pressure) by
            // construction and the initial data contract requires p0 <= 0.
            init.p0[i] = std::min(p_exact(mesh.nodes[i], 0.0), 0.0);
            init.c0[i] = c_exact(mesh.nodes[i], 0.0);
            init.th0[i] = th_exact(mesh.nodes[i], 0.0);
        }
    }
    init.p1 = p1;
    return init;
}

std::vector<std::string> ManufacturedCase::check_nondegeneracy(const Mesh& mesh) const {
    std::vector<std::string> out;
    double min_sp = 1e300, min_krs = 1e300, min_dw = 1e300, min_lam = 1e300;
    for (int it = 0; it <= 20; ++it) {
        const double t = T * it / 20.0;
        for (const Vec2& x : mesh.nodes) {
            const double p = p_exact(x, t);
            const double c = c_exact(x, t);
            const double th = th_exact(x, t);
            const double r = r_exact(x, t);
            min_sp = std::min(min_sp, model.dS(p));
            min_krs = std::min(min_krs, model.k_R(model.S(p)));
            min_dw = std::min(min_dw, model.D_w(x, p));
            min_lam = std::min(min_lam, model.lambda(x, p, th, r));
            (void)c;
        }
    }
    if (min_sp < floor_Sprime)
        out.push_back("S' dropped to " + std::to_string(min_sp) + " below floor");
    if (min_krs < floor_kRS)
        out.push_back("k_R(S) dropped to " + std::to_string(min_krs) + " below floor");
    if (min_dw < floor_Dw) out.push_back("D_w dropped below floor");
    if (min_lam < floor_lambda) out.push_back("lambda dropped below floor");
    return out;
}

ManufacturedCase make_smooth_case() {
    ManufacturedCase mc;
    mc.name = "smooth";
    mc.model = make_mms_model();
    mc.T = 1.0;
    mc.p1 = -2.0;
    mc.floor_Sprime = 0.15;
    mc.floor_kRS = 0.3;
    mc.floor_Dw = 0.4;
    mc.floor_lambda = 0.9;

    mc.p_exact = [](const Vec2& v, double t) {
        return -(0.1 + 0.04 * std::sin(t)) * sx(v.x, v.y);
    };
    mc.c_exact = [](const Vec2& v, double t) { return (0.5 + 0.2 * std::cos(t)) * sx(v.x, v.y); };
    mc.th_exact = [](const Vec2& v, double t) {
        return (0.4 + 0.2 * std::sin(1.3 * t)) * sx(v.x, v.y);
    };
    mc.r_exact = [](const Vec2& v, double t) { return 0.05 * t * sx(v.x, v.y); };

    // Volume sources generated symbolically (docs/mms_worksheet.py) from the
    // strong form of the system with the exact fields above. Do not edit by
    // hand; regenerate with the worksheet.
    using std::cos;
    using std::exp;
    using std::pow;
    using std::sin;
    mc.sources.g_p = [](const Vec2& v, double t) {
        const double x = v.x, y = v.y;
        return (1.0/1000.0)*(kPi*(8*kPi*(2*sin(t) + 5)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi) - 25)*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500)*sin(kPi*x)*sin(kPi*y) + 200*pow(kPi, 2)*pow(2*sin(t) + 5, 2)*(cos(kPi*(2*x - 2*y)) + cos(kPi*(2*x + 2*y)) - 2) - 32000*sin(kPi*x)*sin(kPi*y)*cos(t))/(kPi*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500));
    };
    mc.sources.g_c = [](const Vec2& v, double t) {
        const double x = v.x, y = v.y;
        return (1.0/2500.0)*(pow(kPi, 2)*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500)*(2*cos(t) + 5)*(2*(2*sin(t) + 5)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) - (2*sin(t) + 5)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi)*pow(sin(kPi*x), 2)*pow(cos(kPi*y), 2) - (2*sin(t) + 5)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi)*pow(sin(kPi*y), 2)*pow(cos(kPi*x), 2) - 120*(2*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - kPi)*sin(kPi*x)*sin(kPi*y)) + 80*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500)*(2*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - kPi)*sin(t)*sin(kPi*x)*sin(kPi*y) + 50*pow(kPi, 2)*pow(2*sin(t) + 5, 2)*(2*cos(t) + 5)*(cos(kPi*(2*x - 2*y)) + cos(kPi*(2*x + 2*y)) - 2)*sin(kPi*x)*sin(kPi*y) + 1500*pow(kPi, 2)*(2*sin(t) + 5)*(2*cos(t) + 5)*(-cos(kPi*(2*x - 2*y)) - cos(kPi*(2*x + 2*y)) + 2) - 8000*(2*cos(t) + 5)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2)*cos(t))/(kPi*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500));
    };
    mc.sources.g_th = [](const Vec2& v, double t) {
        const double x = v.x, y = v.y;
        return (1.0/1250.0)*(-13*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500)*(8*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 29*kPi)*sin(kPi*x)*sin(kPi*y)*cos((13.0/10.0)*t) + kPi*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500)*(2*kPi*(2*sin(t) + 5)*(sin((13.0/10.0)*t) + 2)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) - kPi*(2*sin(t) + 5)*(sin((13.0/10.0)*t) + 2)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi)*pow(sin(kPi*x), 2)*pow(cos(kPi*y), 2) - kPi*(2*sin(t) + 5)*(sin((13.0/10.0)*t) + 2)*(4*atan((1.0/50.0)*(2*sin(t) + 5)*sin(kPi*x)*sin(kPi*y)) - 3*kPi)*pow(sin(kPi*y), 2)*pow(cos(kPi*x), 2) + 500*pow(kPi, 2)*(sin((13.0/10.0)*t) + 2)*sin(kPi*x)*sin(kPi*y) - 50*sin(kPi*x)*sin(kPi*y)) + 50*pow(kPi, 2)*pow(2*sin(t) + 5, 2)*(sin((13.0/10.0)*t) + 2)*(cos(kPi*(2*x - 2*y)) + cos(kPi*(2*x + 2*y)) - 2)*sin(kPi*x)*sin(kPi*y) - 8000*(sin((13.0/10.0)*t) + 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2)*cos(t))/(kPi*(pow(2*sin(t) + 5, 2)*pow(sin(kPi*x), 2)*pow(sin(kPi*y), 2) + 2500));
    };
    return mc;
}

ManufacturedCase make_constant_case() {
    ManufacturedCase mc;
    mc.name = "constant";
    mc.model = make_mms_model();
    mc.T = 1.0;
    mc.p1 = -2.0;
    mc.floor_Sprime = 0.19;
    mc.floor_kRS = 0.59;
    mc.floor_Dw = 0.4;
    mc.floor_lambda = 0.9;

    mc.p_exact = [](const Vec2&, double) { return 0.0; };
    mc.c_exact = [](const Vec2&, double) { return 0.0; };
    mc.th_exact = [](const Vec2&, double) { return 0.0; };
    mc.r_exact = [](const Vec2& v, double t) { return 0.05 * t * sx(v.x, v.y); };

    // With all fields identically zero the elliptic and transport terms
    // vanish and only the hydration coupling must be balanced.
    mc.sources.g_p = [](const Vec2& v, double) { return -0.5 * 0.05 * sx(v.x, v.y); };
    mc.sources.g_c = [](const Vec2&, double) { return 0.0; };
    mc.sources.g_th = [](const Vec2& v, double) { return -0.8 * 0.05 * sx(v.x, v.y); };
    return mc;
}

ConvergenceTable run_convergence_study(const ManufacturedCase& mc,
                                       const std::vector<int>& mesh_levels,
                                       const std::vector<int>& n_levels, const SchemeConfig& cfg,
                                       int reference_n) {
    if (mesh_levels.empty() || n_levels.empty())
        throw std::invalid_argument("convergence study: empty level lists");

    ConvergenceTable table;
    SchemeConfig base = cfg;
    base.T = mc.T;
    if (std::isnan(base.ell_override)) base.ell_override = -50.0;

    auto run_one = [&](const Mesh& mesh, int n) {
        SchemeConfig c = base;
        c.n = n;
        c.max_h_halvings = 0;
        const InitialData init = mc.initial_data(mesh);
        RunResult rr = run(mesh, mc.model, init, c, &mc.sources);
        if (!rr.completed)
            throw std::runtime_error("convergence study run failed (n=" + std::to_string(n) +
                                     "): " + rr.error);
        return rr.trajectory;
    };

    auto error_row = [&](const Mesh& mesh, int nx, int n, const StateFields& last,
                         double t_final) {
        ConvergenceRow row;
        row.nx = nx;
        row.n = n;
        row.err_p = lumped_l2_error(mesh, last.p, mc.p_exact, t_final);
        row.err_c = lumped_l2_error(mesh, last.c, mc.c_exact, t_final);
        row.err_th = lumped_l2_error(mesh, last.th, mc.th_exact, t_final);
        row.err_r = lumped_l2_error(mesh, last.r, mc.r_exact, t_final);
        return row;
    };

    // Simultaneous refinement against the exact solution.
    const size_t rows = std::max(mesh_levels.size(), n_levels.size());
    for (size_t i = 0; i < rows; ++i) {
        const int nx = mesh_levels[std::min(i, mesh_levels.size() - 1)];
        const int n = n_levels[std::min(i, n_levels.size() - 1)];
        const Mesh mesh = unit_square_dirichlet(nx);
        Trajectory traj = run_one(mesh, n);
        table.rows.push_back(error_row(mesh, nx, n, traj.levels.back(), mc.T));
    }

    // Temporal orders: fixed finest mesh, errors against a same-mesh
    // reference run so the spatial error floor cancels.
    const int nx_ref = mesh_levels.back();
    const Mesh mesh = unit_square_dirichlet(nx_ref);
    Trajectory ref = run_one(mesh, reference_n);
    const StateFields& ref_last = ref.levels.back();
    for (int n : n_levels) {
        Trajectory traj = run_one(mesh, n);
        const StateFields& last = traj.levels.back();
        ConvergenceRow row;
        row.nx = nx_ref;
        row.n = n;
        row.err_p = lumped_l2_diff(mesh, last.p, ref_last.p);
        row.err_c = lumped_l2_diff(mesh, last.c, ref_last.c);
        row.err_th = lumped_l2_diff(mesh, last.th, ref_last.th);
        row.err_r = lumped_l2_diff(mesh, last.r, ref_last.r);
        table.rows_vs_ref.push_back(row);
    }

    auto order_of = [](double e0, double e1) {
        if (e0 < 1e-13 && e1 < 1e-13) return std::numeric_limits<double>::quiet_NaN();
        return std::log2(e0 / e1);
    };
    for (size_t i = 0; i + 1 < table.rows_vs_ref.size(); ++i) {
        const ConvergenceRow& a = table.rows_vs_ref[i];
        const ConvergenceRow& b = table.rows_vs_ref[i + 1];
        table.order_p.push_back(order_of(a.err_p, b.err_p));
        table.order_c.push_back(order_of(a.err_c, b.err_c));
        table.order_th.push_back(order_of(a.err_th, b.err_th));
    }
    if (!table.order_p.empty()) {
        double m = 1e300;
        bool any = false;
        for (double o : {table.order_p.back(), table.order_c.back(), table.order_th.back()}) {
            if (!std::isnan(o)) {
                m = std::min(m, o);
                any = true;
            }
        }
        table.finest_pair_order = any ? m : std::numeric_limits<double>::quiet_NaN();
    }
    return table;
}

StateFields brute_force_single_step(const Mesh& mesh, const MaterialModel& model,
                                    const KirchhoffMap& kmap, const StateFields& prev, double h,
                                    const VolumeSources* src, double t_new) {
    const int nn = mesh.num_nodes();
    std::vector<int> interior;
    for (int i = 0; i < nn; ++i)
        if (!mesh.is_dirichlet[i]) interior.push_back(i);
    if (interior.size() > 2)
        throw std::invalid_argument("brute_force_single_step: more than 2 interior dofs");

    const SpMat KA = assemble_darcy_stiffness(mesh, model, prev.th, prev.r);

    std::vector<double> p(nn, 0.0);
    Eigen::VectorXd res;
    auto residual_at = [&](const std::vector<double>& u_int) {
        for (size_t j = 0; j < interior.size(); ++j)
            p[interior[j]] = kmap.beta_inv(u_int[j]);
        assemble_pressure_residual(mesh, model, kmap, KA, p, prev, h, t_new, src, res, nullptr);
        std::vector<double> out(interior.size());
        for (size_t j = 0; j < interior.size(); ++j) out[j] = res[interior[j]];
        return out;
    };

    // Bisection on a monotone scalar map (the residual is increasing in the
    // node's own Kirchhoff variable; the Schur reduction preserves this).
    auto bisect = [](const std::function<double(double)>& F) {
        double lo = -1.0, hi = 1.0;
        double flo = F(lo), fhi = F(hi);
        int guard = 0;
        while (flo > 0.0) {
            lo *= 2.0;
            flo = F(lo);
            if (++guard > 120) throw std::runtime_error("brute force: no lower bracket");
        }
        guard = 0;
        while (fhi < 0.0) {
            hi *= 2.0;
            fhi = F(hi);
            if (++guard > 120) throw std::runtime_error("brute force: no upper bracket");
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (F(mid) <= 0.0)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    if (interior.size() == 1) {
        const double u = bisect([&](double v) { return residual_at({v})[0]; });
        (void)residual_at({u});
    } else if (interior.size() == 2) {
        auto inner = [&](double u1) {
            return bisect([&](double u2) { return residual_at({u1, u2})[1]; });
        };
        const double u1 = bisect([&](double v) { return residual_at({v, inner(v)})[0]; });
        const double u2 = inner(u1);
        (void)residual_at({u1, u2});
    }
    // `p` now holds the converged pressure (Dirichlet entries zero).

    StateFields next;
    next.level_index = prev.level_index + 1;
    next.time = t_new;
    next.p = p;
    next.r = update_hydration(mesh, model, next.p, prev, h);

    auto dense_solve = [&](const AssembledSystem& sys) {
        Eigen::MatrixXd A = Eigen::MatrixXd(sys.matrix);
        Eigen::VectorXd x = Eigen::PartialPivLU<Eigen::MatrixXd>(A).solve(sys.rhs);
        return std::vector<double>(x.data(), x.data() + x.size());
    };
    next.c = dense_solve(
        assemble_concentration_system(mesh, model, KA, kmap, next.p, next.r, prev, h, t_new, src));
    next.th = dense_solve(
        assemble_temperature_system(mesh, model, KA, kmap, next.p, next.r, prev, h, t_new, src));
    return next;
}

}  // namespace poromem
