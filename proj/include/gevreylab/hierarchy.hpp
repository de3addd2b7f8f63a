#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <vector>

#include "gevreylab/estimators.hpp"
#include "gevreylab/field.hpp"

namespace gevreylab {

/// A scalar function of time sampled on a log-uniform grid over [1, t_end].
/// Interpolation is 4-point Lagrange in log t; integrals are cumulative
/// per-interval Simpson (interpolated midpoints), with a fitted power tail
/// past t_end. This is the time half of the separable terms the triangular
/// hierarchy is made of: products of such factors stay in the class.
class TimeFactor {
  public:
    TimeFactor() = default;

    static TimeFactor sample(const std::function<double(double)>& fn,
                             double t_end, int per_decade = 256);

    double operator()(double t) const;  // t >= 1; power continuation past end
    double t_end() const { return nodes_.empty() ? 1.0 : nodes_.back(); }

    /// F(t) = int_1^t v
    TimeFactor cumulative_from_start() const;
    /// F(t) = int_t^inf v; fits the last decade as c t^alpha; throws
    /// TailFitFailure when the log-log fit residual exceeds 1%, and
    /// DivergentIntegral when alpha >= -1
    TimeFactor cumulative_to_inf() const;

    TimeFactor scaled(double c) const;
    /// pointwise product with a closed-form multiplier
    TimeFactor multiplied(const std::function<double(double)>& fn) const;
    friend TimeFactor operator*(const TimeFactor& a, const TimeFactor& b);

    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& values() const { return v_; }

  private:
    std::vector<double> nodes_, v_;
    double dlog_ = 0.0;
    // sign * exp(logc) t^alpha past the grid end
    double tail_logc_ = 0.0, tail_alpha_ = 0.0, tail_sign_ = 0.0;
    double tail_residual_ = 0.0;  // rms log-residual of the fit
    void fit_tail();
    double interp(double t) const;
};

/// One (time factor) x (fixed field) product.
struct SeparableTerm {
    TimeFactor tau;
    SpectralField field;
};

using Level = std::vector<SeparableTerm>;

/// The solved triangular system: amplitude levels w_0..w_{p+1} and phase
/// levels phi_0..phi_p (+ optionally phi_{p+1} anchored at infinity), each
/// as an exact sum of separable terms, plus trajectories sampled on the
/// requested time grid.
struct AsymptoticHierarchy {
    int p = 0;
    double gamma = 0.0, kappa = 0.0, mu = 0.0;
    double k = 0.0;  // base regularity exponent of the data
    Grid grid;
    std::vector<double> time_grid;

    std::vector<Level> w_levels;    // indices 0..p+1
    std::vector<Level> phi_levels;  // indices 0..p (+ p+1 when has_phi_top)
    bool has_phi_top = false;

    double lambda() const { return mu - grid.n + 2.0; }
    double lambda_bar() const { return std::max(lambda(), 1.0); }
    double k_m(int m) const { return k - m * lambda_bar(); }
    double ell_m(int m) const { return k - m * lambda_bar() - lambda(); }

    SpectralField eval_w(int m, double t) const;
    SpectralField eval_phi(int m, double t) const;

    // trajectories sampled on time_grid, [level][time index]
    std::vector<std::vector<SpectralField>> w_traj, phi_traj;
};

/// Solves (levels built by successive integrations: each amplitude level by
/// integrating back from infinity, each phase level forward from t = 1).
/// k is the regularity exponent of w_plus used for the exponent ladder;
/// requires k > n/2 and k >= (p+2) lambda_bar - 1. phi_{p+1} (anchored at
/// infinity) is built when with_phi_top, which requires (p+2) gamma > 1.
AsymptoticHierarchy solve_hierarchy(const SpectralField& w_plus, int p,
                                    double gamma, double kappa, double mu,
                                    const std::vector<double>& time_grid,
                                    double t_max, double k,
                                    bool with_phi_top = false,
                                    int per_decade = 256);

/// Running sums W_m = sum_{j<=m} w_j and phi_m = sum_{j<=m} varphi_j on the
/// time grid.
std::pair<std::vector<SpectralField>, std::vector<SpectralField>>
partial_sums(const AsymptoticHierarchy& h, int m);

/// Ratio stability of the decay estimates: |w_{m+1}(t)| against Q_m(t),
/// |phi_m(t)| against N_m(t), and |phi_{p+1}(t)| against P_p(t), with the
/// estimating functions built from h0' = t^{-gamma}. Only the time shape is
/// testable (the constants are unknown), so the report carries the min/max
/// ratio over the grid and their drift.
struct DecayRow {
    std::string quantity;  // "w", "phi", "phi-top"
    int m = 0;
    double ratio_min = 0.0, ratio_max = 0.0;
    double drift = 0.0;  // ratio_max / ratio_min - 1
};

struct DecayReport {
    std::vector<DecayRow> rows;
};

DecayReport verify_decay(const AsymptoticHierarchy& h,
                         const EstimatorTable& table,
                         const NormSpec& norm_spec);

/// Builds the hierarchies for w_plus and w_plus e^{i omega} and returns the
/// largest relative deviations over levels and times: the phases must
/// coincide, the amplitudes generally differ.
struct GaugeShiftResult {
    double max_phi_rel_dev = 0.0;
    double max_w_rel_dev = 0.0;
};

GaugeShiftResult gauge_shift_check(const SpectralField& w_plus,
                                   const SpectralField& omega, int p,
                                   double gamma, double kappa, double mu,
                                   const std::vector<double>& time_grid,
                                   double t_max, double k,
                                   bool with_phi_top = false);

/// pointwise w e^{i omega} for a real phase field
SpectralField apply_phase(const SpectralField& w, const SpectralField& omega);

/// per-level norms vs time for export
std::string hierarchy_norms_csv(const AsymptoticHierarchy& h,
                                const NormSpec& norm_spec);

}  // namespace gevreylab
