#include "poromem/discretization.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace poromem {

namespace {

double centroid_value(const Mesh& mesh, int t, const std::vector<double>& nodal) {
    const auto& tri = mesh.triangles[t];
    return (nodal[tri[0]] + nodal[tri[1]] + nodal[tri[2]]) / 3.0;
}

// Generic P1 stiffness with a per-triangle scalar coefficient.
SpMat assemble_stiffness(const Mesh& mesh, const std::function<double(int)>& coef) {
    const int nn = mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * mesh.num_triangles());
    for (int t = 0; t < mesh.num_triangles(); ++t) {
        const double a = coef(t) * std::abs(mesh.tri_area[t]);
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trips.emplace_back(tri[i], tri[j], a * dot(mesh.tri_grad[t][i], mesh.tri_grad[t][j]));
    }
    SpMat K(nn, nn);
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

void constrain_dirichlet(const Mesh& mesh, SpMat& A, Eigen::VectorXd& rhs) {
    // Replace Dirichlet rows by identity rows with zero right-hand side
    // (homogeneous data). Column entries are kept: constrained values are 0,
    // so they contribute nothing.
    for (int k = 0; k < A.outerSize(); ++k)
        for (SpMat::InnerIterator it(A, k); it; ++it)
            if (mesh.is_dirichlet[it.row()]) it.valueRef() = (it.row() == it.col()) ? 1.0 : 0.0;
    for (int i : mesh.dirichlet_nodes) rhs[i] = 0.0;
    A.prune(0.0);
}

}  // namespace

SpMat assemble_darcy_stiffness(const Mesh& mesh, const MaterialModel& model,
                               const std::vector<double>& th_prev,
                               const std::vector<double>& r_prev) {
    return assemble_stiffness(mesh, [&](int t) {
        const Vec2 xc = mesh.tri_centroid[t];
        const double rc = centroid_value(mesh, t, r_prev);
        const double thc = centroid_value(mesh, t, th_prev);
        return model.k(xc, rc) / model.mu(thc);
    });
}

void assemble_pressure_residual(const Mesh& mesh, const MaterialModel& model,
                                const KirchhoffMap& kmap, const SpMat& KA,
                                const std::vector<double>& p_trial, const StateFields& prev,
                                double h, double t_new, const VolumeSources* src,
                                Eigen::VectorXd& residual, SpMat* jacobian_p, bool picard) {
    const int nn = mesh.num_nodes();
    Eigen::VectorXd u(nn);
    for (int i = 0; i < nn; ++i) u[i] = kmap.beta(p_trial[i]);

    residual = KA * u;

    std::vector<double> diag_extra(nn, 0.0);
    for (int i = 0; i < nn; ++i) {
        if (mesh.is_dirichlet[i]) {
            residual[i] = p_trial[i];
            continue;
        }
        const Vec2& x = mesh.nodes[i];
        const double m_i = mesh.lumped_mass[i];
        const double fi = model.f(x, p_trial[i], prev.c[i], prev.th[i], prev.r[i]);
        const double r_hat = prev.r[i] + h * fi;
        const double mass_new = model.phi(x, r_hat) * model.S(p_trial[i]);
        const double mass_old = model.phi(x, prev.r[i]) * model.S(prev.p[i]);
        residual[i] += m_i * ((mass_new - mass_old) / h - model.alpha1 * fi);
        if (src && src->g_p) residual[i] -= m_i * src->g_p(x, t_new);

        if (jacobian_p) {
            const double Sp = model.dS(p_trial[i]);
            double d = model.phi(x, r_hat) * Sp / h;
            if (!picard) {
                const double fp = model.df_dp(x, p_trial[i], prev.c[i], prev.th[i], prev.r[i]);
                d += model.dphi_dr(x, r_hat) * fp * model.S(p_trial[i]) - model.alpha1 * fp;
            }
            diag_extra[i] = m_i * d;
        }
    }

    if (jacobian_p) {
        // d/dp_j of (K^A beta(p))_i = K^A_ij * beta'(p_j), plus the nodal
        // diagonal mass/source derivative; Dirichlet rows are identity.
        std::vector<Eigen::Triplet<double>> trips;
        trips.reserve(KA.nonZeros() + nn);
        for (int k = 0; k < KA.outerSize(); ++k)
            for (SpMat::InnerIterator it(KA, k); it; ++it) {
                if (mesh.is_dirichlet[it.row()]) continue;
                trips.emplace_back(it.row(), it.col(), it.value() * kmap.ktr(p_trial[it.col()]));
            }
        for (int i = 0; i < nn; ++i)
            trips.emplace_back(i, i, mesh.is_dirichlet[i] ? 1.0 : diag_extra[i]);
        jacobian_p->resize(nn, nn);
        jacobian_p->setFromTriplets(trips.begin(), trips.end());
    }
}

SpMat pressure_jacobian_u(const Mesh& mesh, const MaterialModel& model, const KirchhoffMap& kmap,
                          const SpMat& KA, const std::vector<double>& p_trial,
                          const StateFields& prev, double h, bool picard) {
    const int nn = mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(KA.nonZeros() + nn);
    for (int k = 0; k < KA.outerSize(); ++k)
        for (SpMat::InnerIterator it(KA, k); it; ++it) {
            if (mesh.is_dirichlet[it.row()]) continue;
            trips.emplace_back(it.row(), it.col(), it.value());
        }
    for (int i = 0; i < nn; ++i) {
        if (mesh.is_dirichlet[i]) {
            trips.emplace_back(i, i, 1.0);
            continue;
        }
        const Vec2& x = mesh.nodes[i];
        const double fi = model.f(x, p_trial[i], prev.c[i], prev.th[i], prev.r[i]);
        const double r_hat = prev.r[i] + h * fi;
        const double Sp = model.dS(p_trial[i]);
        double d = model.phi(x, r_hat) * Sp / h;
        if (!picard) {
            const double fp = model.df_dp(x, p_trial[i], prev.c[i], prev.th[i], prev.r[i]);
            d += model.dphi_dr(x, r_hat) * fp * model.S(p_trial[i]) - model.alpha1 * fp;
        }
        trips.emplace_back(i, i, mesh.lumped_mass[i] * d / kmap.ktr(p_trial[i]));
    }
    SpMat J(nn, nn);
    J.setFromTriplets(trips.begin(), trips.end());
    return J;
}

SpMat assemble_upwind_advection(const Mesh& mesh, const SpMat& KA, const std::vector<double>& u) {
    const int nn = mesh.num_nodes();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(KA.nonZeros());
    for (int k = 0; k < KA.outerSize(); ++k)
        for (SpMat::InnerIterator it(KA, k); it; ++it) {
            const int i = static_cast<int>(it.row()), j = static_cast<int>(it.col());
            if (i == j) continue;
            const double q_ij = it.value() * (u[j] - u[i]);  // Darcy flux i -> j
            if (q_ij > 0.0)
                trips.emplace_back(i, i, q_ij);
            else
                trips.emplace_back(i, j, q_ij);
        }
    SpMat N(nn, nn);
    N.setFromTriplets(trips.begin(), trips.end());
    return N;
}

namespace {

AssembledSystem assemble_transport(const Mesh& mesh, const MaterialModel& model, const SpMat& KA,
                                   const KirchhoffMap& kmap, const std::vector<double>& p_new,
                                   const std::vector<double>& r_new, const StateFields& prev,
                                   double h, double t_new, const VolumeSources* src,
                                   bool temperature) {
    const int nn = mesh.num_nodes();

    // Diffusion/conduction stiffness.
    SpMat D = assemble_stiffness(mesh, [&](int t) {
        const Vec2 xc = mesh.tri_centroid[t];
        const double pc = centroid_value(mesh, t, p_new);
        if (temperature) {
            // Fully lagged conductivity.
            const double pp = centroid_value(mesh, t, prev.p);
            const double thp = centroid_value(mesh, t, prev.th);
            const double rp = centroid_value(mesh, t, prev.r);
            return model.lambda(xc, pp, thp, rp);
        }
        const double rc = centroid_value(mesh, t, r_new);
        return model.phi(xc, rc) * std::clamp(model.S(pc), 0.0, model.S_s) * model.D_w(xc, pc);
    });

    std::vector<double> u(nn);
    for (int i = 0; i < nn; ++i) u[i] = kmap.beta(p_new[i]);
    SpMat N = assemble_upwind_advection(mesh, KA, u);

    AssembledSystem sys;
    sys.matrix = D + N;
    sys.rhs = Eigen::VectorXd::Zero(nn);
    sys.constrained_dofs = mesh.dirichlet_nodes;

    std::vector<Eigen::Triplet<double>> mass;
    mass.reserve(nn);
    for (int i = 0; i < nn; ++i) {
        const Vec2& x = mesh.nodes[i];
        const double m_i = mesh.lumped_mass[i];
        double cap_new = model.phi(x, r_new[i]) * model.S(p_new[i]);
        double cap_old = model.phi(x, prev.r[i]) * model.S(prev.p[i]);
        if (temperature) {
            cap_new += model.rho(x, r_new[i]);
            cap_old += model.rho(x, prev.r[i]);
        }
        mass.emplace_back(i, i, m_i * cap_new / h);
        const double prev_field = temperature ? prev.th[i] : prev.c[i];
        sys.rhs[i] = m_i * cap_old * prev_field / h;
        if (temperature)
            sys.rhs[i] += m_i * model.alpha2 * model.f(x, p_new[i], prev.c[i], prev.th[i], prev.r[i]);
        if (src) {
            const auto& g = temperature ? src->g_th : src->g_c;
            if (g) sys.rhs[i] += m_i * g(x, t_new);
        }
    }
    SpMat Mdiag(nn, nn);
    Mdiag.setFromTriplets(mass.begin(), mass.end());
    sys.matrix = SpMat(Mdiag + sys.matrix);

    constrain_dirichlet(mesh, sys.matrix, sys.rhs);

    sys.min_diagonal = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nn; ++i)
        if (!mesh.is_dirichlet[i]) sys.min_diagonal = std::min(sys.min_diagonal, sys.matrix.coeff(i, i));
    return sys;
}

}  // namespace

AssembledSystem assemble_concentration_system(const Mesh& mesh, const MaterialModel& model,
                                              const SpMat& KA, const KirchhoffMap& kmap,
                                              const std::vector<double>& p_new,
                                              const std::vector<double>& r_new,
                                              const StateFields& prev, double h, double t_new,
                                              const VolumeSources* src) {
    return assemble_transport(mesh, model, KA, kmap, p_new, r_new, prev, h, t_new, src, false);
}

AssembledSystem assemble_temperature_system(const Mesh& mesh, const MaterialModel& model,
                                            const SpMat& KA, const KirchhoffMap& kmap,
                                            const std::vector<double>& p_new,
                                            const std::vector<double>& r_new,
                                            const StateFields& prev, double h, double t_new,
                                            const VolumeSources* src) {
    return assemble_transport(mesh, model, KA, kmap, p_new, r_new, prev, h, t_new, src, true);
}

std::vector<double> update_hydration(const Mesh& mesh, const MaterialModel& model,
                                     const std::vector<double>& p_new, const StateFields& prev,
                                     double h) {
    const int nn = mesh.num_nodes();
    std::vector<double> r_new(nn);
    for (int i = 0; i < nn; ++i)
        r_new[i] = prev.r[i] + h * model.f(mesh.nodes[i], p_new[i], prev.c[i], prev.th[i], prev.r[i]);
    return r_new;
}

Eigen::VectorXd solve_sparse(const AssembledSystem& sys, bool force_iterative, double iter_tol) {
    if (!force_iterative) {
        Eigen::SparseLU<SpMat> lu;
        lu.compute(sys.matrix);
        if (lu.info() == Eigen::Success) {
            Eigen::VectorXd x = lu.solve(sys.rhs);
            if (lu.info() == Eigen::Success) return x;
        }
        throw std::runtime_error("solve_sparse: direct factorization failed (min diagonal " +
                                 std::to_string(sys.min_diagonal) + ")");
    }
    Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
    it.setTolerance(iter_tol);
    it.setMaxIterations(20000);
    it.compute(sys.matrix);
    Eigen::VectorXd x = it.solve(sys.rhs);
    if (it.info() != Eigen::Success)
        throw std::runtime_error("solve_sparse: iterative solver failed (min diagonal " +
                                 std::to_string(sys.min_diagonal) + ")");
    return x;
}

}  // namespace poromem
