#pragma once

// Post-processing of a trajectory into a report verifying every a-priori
// estimate: weak maximum principle, L-infinity bounds, discrete energy
// bound, time-translate (compactness) estimates, hydration-rate bound, and
// weak-form residuals of the piecewise-constant interpolants.

#include <string>
#include <vector>

#include "poromem/stepper.hpp"

namespace poromem {

struct DiagnosticsConfig {
    std::vector<int> lags{1, 2, 4, 8};
    int temporal_test_functions = 16;
    double c_linf_tol = 1e-8;
    double rate_tol = 1e-12;
};

struct MaxPrincipleResult {
    double theoretical_ell = 0.0;
    double observed_min = 0.0;
    bool has_bound = false;  // false when the delta-search found no bound
    bool pass = false;       // vacuously true without a bound (flagged)
};

struct LinfBound {
    std::string field;
    double bound = 0.0;
    double observed = 0.0;
    bool has_bound = false;
    bool pass = false;
};

struct TranslateRow {
    int k = 0;
    double T1 = 0, T2 = 0, T3 = 0, T4 = 0;  // S-weighted p, then c, theta, r
    double T1_plain = 0;                    // plain L2 translate of p (context only)
    double r1 = 0, r2 = 0, r3 = 0, r4 = 0;  // T_m / (k h)
};

struct WeakResiduals {
    double p_eq = 0, c_eq = 0, th_eq = 0;
    double memory_identity = 0;  // max |r^i - h sum f| (definitional, ~0)
    int temporal_basis = 0, spatial_basis = 0;
};

struct HydrationRateResult {
    double C_f = 0.0;
    double max_rate = 0.0;
    bool pass = false;
};

struct DiagnosticsReport {
    MaxPrincipleResult max_principle;
    std::vector<LinfBound> linf;  // fields c, theta, r
    std::vector<double> energy_series;
    double energy_sup = 0.0;
    std::vector<TranslateRow> translates;
    WeakResiduals weak;
    HydrationRateResult hydration;
    // De Giorgi trace at the chosen delta: d_j, k_j = S_inv(d_j), Z_j.
    std::vector<double> degiorgi_d, degiorgi_k, degiorgi_Z;
    double degiorgi_gamma = 0.0, degiorgi_tau = 0.0, degiorgi_delta = 0.0;
    bool all_pass = false;  // conjunction of the hard invariants
};

std::pair<double, bool> check_max_principle(const TrajectoryView& traj, double ell);

std::vector<TranslateRow> check_translate_estimates(const TrajectoryView& traj, const Mesh& mesh,
                                                    const MaterialModel& model,
                                                    const std::vector<int>& lags);

std::vector<double> check_energy_estimate(const TrajectoryView& traj, const Mesh& mesh,
                                          const MaterialModel& model);

WeakResiduals check_weak_residual(const TrajectoryView& traj, const Mesh& mesh,
                                  const MaterialModel& model, const KirchhoffMap& kmap,
                                  int temporal_basis, const VolumeSources* src);

HydrationRateResult check_hydration_rate_bound(const TrajectoryView& traj,
                                               const MaterialModel& model);

DiagnosticsReport run_diagnostics(const TrajectoryView& traj, const Mesh& mesh,
                                  const MaterialModel& model, const DiagnosticsConfig& cfg,
                                  const PressureBoundResult& bound, double ell_used,
                                  const VolumeSources* src = nullptr);

}  // namespace poromem
