#pragma once

// Independent oracles: manufactured solutions in the nondegenerate regime
// (sources derived offline with the computer-algebra worksheet in
// docs/mms_worksheet.py and hard-coded here), convergence studies, and a
// dense brute-force single-step solver for tiny meshes.

#include <functional>
#include <string>
#include <vector>

#include "poromem/stepper.hpp"

namespace poromem {

struct ManufacturedCase {
    std::string name;
    MaterialModel model;
    std::function<double(const Vec2&, double)> p_exact, c_exact, th_exact, r_exact;
    VolumeSources sources;
    double T = 1.0;
    double p1 = -2.0;  // Assumption (vi) lower bound for the induced initial data

    // Nondegeneracy certificate floors over the space-time box.
    double floor_Sprime = 0.0, floor_kRS = 0.0, floor_Dw = 0.0, floor_lambda = 0.0;

    InitialData initial_data(const Mesh& mesh) const;
    /// Re-verifies the certificate by sampling; empty list iff respected.
    std::vector<std::string> check_nondegeneracy(const Mesh& mesh) const;
};

/// Smooth-in-time nondegenerate case on the unit square (all-Dirichlet).
ManufacturedCase make_smooth_case();
/// Exact-constant case: fields identically zero, sources balancing the
/// hydration coupling; the scheme must reproduce it to rounding.
ManufacturedCase make_constant_case();

struct ConvergenceRow {
    int nx = 0, n = 0;
    double err_p = 0, err_c = 0, err_th = 0, err_r = 0;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;         // final-time lumped-L2 errors vs exact
    std::vector<ConvergenceRow> rows_vs_ref;  // finest mesh, errors vs reference run
    // Observed temporal orders between successive n (fixed finest mesh,
    // measured against the reference run); NaN where the field is exact.
    std::vector<double> order_p, order_c, order_th;
    double finest_pair_order = 0.0;  // min over {p, c, theta} at the last pair
};

/// Runs the stepper for each (mesh level nx, n) pair with the case's
/// sources. Temporal orders are measured on the finest mesh against a
/// same-mesh reference run with reference_n steps.
ConvergenceTable run_convergence_study(const ManufacturedCase& mc,
                                       const std::vector<int>& mesh_levels,
                                       const std::vector<int>& n_levels, const SchemeConfig& cfg,
                                       int reference_n);

/// Exhaustive-bisection pressure solve (nested bisection on up to 2 interior
/// dofs, residual 1e-13) followed by dense direct solves for c and theta.
StateFields brute_force_single_step(const Mesh& mesh, const MaterialModel& model,
                                    const KirchhoffMap& kmap, const StateFields& prev, double h,
                                    const VolumeSources* src = nullptr, double t_new = 0.0);

}  // namespace poromem
