#pragma once

// Spatially discrete (P1 triangles, lumped mass, one-point coefficient
// quadrature) versions of the four recurrence problems at one time level:
// the nonlinear pressure residual (with the hydration unknown eliminated by
// substitution), the linear concentration and temperature systems with
// upwinded advection, and the pointwise hydration update.

#include <Eigen/Sparse>
#include <functional>
#include <vector>

#include "poromem/kirchhoff.hpp"
#include "poromem/material.hpp"
#include "poromem/mesh.hpp"

namespace poromem {

using SpMat = Eigen::SparseMatrix<double>;

/// Discrete foursome at one time level.
struct StateFields {
    std::vector<double> p, c, th, r;
    int level_index = 0;
    double time = 0.0;
};

/// Optional manufactured-solution volume sources (x, t) -> value, applied
/// with lumped quadrature at the new time level.
struct VolumeSources {
    std::function<double(const Vec2&, double)> g_p, g_c, g_th;
};

/// Sparse system with Dirichlet rows replaced by identity rows (rhs 0 unless
/// stated otherwise).
struct AssembledSystem {
    SpMat matrix;
    Eigen::VectorXd rhs;
    std::vector<int> constrained_dofs;
    double min_diagonal = 0.0;  // over free rows (degeneracy monitor)
};

/// Stiffness matrix K^A with the bounded Kirchhoff-form coefficient
/// A(x) = k(x, r_prev(x)) / mu(theta_prev(x)) at triangle centroids.
SpMat assemble_darcy_stiffness(const Mesh& mesh, const MaterialModel& model,
                               const std::vector<double>& th_prev,
                               const std::vector<double>& r_prev);

/// Residual of the nonlinear pressure equation at p_trial (elliptic part in
/// the Kirchhoff variable: (K^A beta(p))_i), plus its exact Jacobian in
/// p_trial. KA must be assemble_darcy_stiffness(mesh, model, prev.th, prev.r).
/// Rows of Dirichlet nodes hold residual = p_trial and identity Jacobian.
void assemble_pressure_residual(const Mesh& mesh, const MaterialModel& model,
                                const KirchhoffMap& kmap, const SpMat& KA,
                                const std::vector<double>& p_trial, const StateFields& prev,
                                double h, double t_new, const VolumeSources* src,
                                Eigen::VectorXd& residual, SpMat* jacobian_p,
                                bool picard = false);

/// Jacobian of the same residual with respect to u = beta(p) (the Newton
/// variable): K^A + diag of the nodal mass derivative divided by beta'(p).
SpMat pressure_jacobian_u(const Mesh& mesh, const MaterialModel& model, const KirchhoffMap& kmap,
                          const SpMat& KA, const std::vector<double>& p_trial,
                          const StateFields& prev, double h, bool picard);

/// Edge-upwind advection operator built from the discrete Darcy fluxes
/// q_ij = K^A_ij (u_j - u_i), u = beta(p_new): row i gains sum_j max(q_ij,0)
/// on the diagonal and min(q_ij,0) at (i,j). Exactly compatible with the
/// discrete pressure equation (row sums equal (K^A u)_i).
SpMat assemble_upwind_advection(const Mesh& mesh, const SpMat& KA, const std::vector<double>& u);

AssembledSystem assemble_concentration_system(const Mesh& mesh, const MaterialModel& model,
                                              const SpMat& KA, const KirchhoffMap& kmap,
                                              const std::vector<double>& p_new,
                                              const std::vector<double>& r_new,
                                              const StateFields& prev, double h, double t_new,
                                              const VolumeSources* src);

AssembledSystem assemble_temperature_system(const Mesh& mesh, const MaterialModel& model,
                                            const SpMat& KA, const KirchhoffMap& kmap,
                                            const std::vector<double>& p_new,
                                            const std::vector<double>& r_new,
                                            const StateFields& prev, double h, double t_new,
                                            const VolumeSources* src);

/// r_new = r_prev + h f(x, p_new, c_prev, theta_prev, r_prev) nodewise.
std::vector<double> update_hydration(const Mesh& mesh, const MaterialModel& model,
                                     const std::vector<double>& p_new, const StateFields& prev,
                                     double h);

/// Deterministic sparse solve; direct factorization up to the dof threshold,
/// BiCGSTAB with ILUT above it (tolerance 1e-12). Throws on failure carrying
/// the minimum diagonal value of the system.
Eigen::VectorXd solve_sparse(const AssembledSystem& sys, bool force_iterative = false,
                             double iter_tol = 1e-12);

}  // namespace poromem
