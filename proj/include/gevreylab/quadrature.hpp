#pragma once

#include <functional>

namespace gevreylab {

/// Single Gauss-Kronrod 15(7) panel on [a,b]. Returns the K15 value and
/// stores the |K15 - G7| error estimate in *err if non-null.
double gk15_panel(const std::function<double(double)>& f, double a, double b,
                  double* err = nullptr);

/// Adaptive Gauss-Kronrod integration of f over the finite interval [a,b].
/// Bisects panels until each panel error is below the per-panel share of
/// abs_tol or the panel contributes below rel_tol relative to the running
/// total.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-12);

/// Integral of f over [a, inf), summed decade by decade with a geometric
/// estimate of the remainder. Requires a > 0; throws DivergentIntegral when
/// the tail has not resolved by t = 1e300.
double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol = 1e-12, double rel_tol = 1e-12);

/// Least-squares fit of log|f| vs log t over [t_lo, t_hi] (n_pts samples,
/// log-spaced): f ~ c * t^alpha. Returns {log_c, alpha, rms_residual}.
struct PowerFit {
    double log_c;
    double alpha;
    double residual;  // rms of log-residuals
    double eval(double t) const;
};
PowerFit fit_power_law(const std::function<double(double)>& f, double t_lo,
                       double t_hi, int n_pts = 32);

}  // namespace gevreylab
