#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gevreylab/estimators.hpp"
#include "gevreylab/field.hpp"
#include "gevreylab/hierarchy.hpp"

namespace gevreylab {

/// Physical parameters of the amplitude/phase system.
struct AuxParams {
    double gamma = 0.6;
    double kappa = 1.0;
    double mu = 0.5;
    double k = 4.0;  // regularity exponent used when a hierarchy is needed
};

/// The coupled state (w, phi) at one time; phi is a real (Hermitian
/// symmetric) field on the same grid as w.
struct AuxState {
    double t = 1.0;
    SpectralField w;
    SpectralField phi;
    void validate() const;  // throws ConfigError
};

struct SolverConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    double theta = 0.0;      // parabolic coefficient, 0 = off
    double max_step = 0.0;   // 0 = unlimited
    int stepper_order = 4;   // embedded 4(3) or 2(1)
    double norm_ceiling = 1e8;
    void validate() const;  // throws ConfigError
};

/// Accepted steps of one integration. Fields are stored in the plain
/// (un-rotated) variables; norm diagnostics carry the rho(t) in force.
struct Trajectory {
    std::vector<double> times;
    std::vector<SpectralField> w, phi;
    std::vector<double> w_norm, phi_norm, rho;
    AuxParams params;
    SolverConfig config;

    size_t index_of(double t) const;  // throws ConfigError if t absent
};

/// Right-hand side of the amplitude/phase system:
///   dw/dt   = i (2t^2)^{-1} lap w + (2t^2)^{-1} (2 grad phi . grad w
///             + (lap phi) w)
///   dphi/dt = (2t^2)^{-1} |grad phi|^2 + t^{-gamma} g0(w, w)
std::pair<SpectralField, SpectralField> rhs_auxiliary(const AuxState& state,
                                                      double gamma,
                                                      double kappa, double mu);

/// Adaptive embedded Runge-Kutta integration over t_span (either
/// direction). The free term is removed exactly by stepping the rotated
/// variable U(1/t) w; theta > 0 adds theta*lap to both equations there.
/// Norm diagnostics use norm_spec with its Gevrey radius replaced by
/// rho(t) when a schedule is given. Steps are clipped so every time in
/// t_eval is hit exactly (all accepted steps are recorded regardless).
Trajectory integrate(const AuxState& initial, std::pair<double, double> t_span,
                     const SolverConfig& config, const AuxParams& params,
                     const std::optional<RhoSchedule>& rho_schedule = {},
                     const std::optional<NormSpec>& norm_spec = {},
                     const std::vector<double>& t_eval = {});

enum class TransportKind { V, Chi };

/// Linear transport along a reference phase, seeded at t0:
///   V:   dV/dt   = (2t^2)^{-1} (2 grad phi . grad V + (lap phi) V)
///   Chi: dchi/dt = t^{-2} grad phi . grad chi
/// Returns the trajectory from t0 toward the far end of t_span.
Trajectory solve_transport(
    const std::function<SpectralField(double)>& phi_ref,
    const SpectralField& seed, double t0, std::pair<double, double> t_span,
    TransportKind which, const SolverConfig& config,
    const std::vector<double>& t_eval = {});

/// The Cauchy problem seeded at t0 from asymptotic data: w(t0) = W_p(t0),
/// phi(t0) = phi_p(t0) + psi_plus (partial sums of the hierarchy built
/// from w_plus), integrated backward to T. The hierarchy is returned
/// alongside so callers can compare against the same levels.
struct CauchyRun {
    Trajectory trajectory;
    AsymptoticHierarchy hierarchy;
};

CauchyRun cauchy_from_t0(const SpectralField& w_plus,
                         const SpectralField& psi_plus, int p, double t0,
                         double T, const SolverConfig& config,
                         const AuxParams& params,
                         const std::optional<RhoSchedule>& rho_schedule = {},
                         const std::optional<NormSpec>& norm_spec = {},
                         const std::vector<double>& t_eval = {});

/// Convergence-rate report for the asymptotic-data extractions: L2
/// distances to the final value at the recorded times, with a power-law
/// fit of the decay.
struct RateReport {
    std::vector<double> times;
    std::vector<double> diffs;
    double fitted_slope = 0.0;  // alpha in diff ~ c t^alpha
};

/// w_plus as the rotated amplitude U(1/t)w at the last (largest) recorded
/// time, plus the Cauchy rate of |U(1/t)w(t) - w_plus|. Throws
/// NotConverged when the differences fail to decrease.
std::pair<SpectralField, RateReport> extract_w_plus(const Trajectory& traj);

/// psi_plus as the limit of phi(t) - phi_p(t); same reporting contract.
std::pair<SpectralField, RateReport> extract_psi_plus(
    const Trajectory& traj, const AsymptoticHierarchy& hierarchy);

/// Defect of the recorded trajectory under the evolution equations:
/// five-point finite-difference time derivative minus the right-hand
/// side, in plain L2 per recorded time (interior points only).
struct ResidualRow {
    double t = 0.0;
    double w_residual = 0.0;
    double phi_residual = 0.0;
};
std::vector<ResidualRow> residual(const Trajectory& traj);

/// Snapshot directory + JSON manifest (times, norms, config hash).
void save_trajectory(const Trajectory& traj, const std::string& dir);

}  // namespace gevreylab
