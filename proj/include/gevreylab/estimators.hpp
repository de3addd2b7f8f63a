#pragma once

#include <map>
#include <string>
#include <vector>

namespace gevreylab {

/// Decay profile h0'(t): either the power law t^{-gamma} (closed forms used
/// wherever possible) or a tabulated positive function, interpolated
/// log-log-linearly so that power laws are preserved exactly.
struct H0Spec {
    bool power_law = true;
    double gamma = 0.5;  // in (0, 1]
    std::vector<double> t_table, hp_table;  // used when !power_law

    void validate() const;  // throws ConfigError / DivergentIntegral
    double hprime(double t) const;
    /// h0(t) = int_1^t h0'
    double h0bar(double t) const;
};

/// The integral calculus built on h0': the base function
///   h(t)   = int_1^inf (t v t1)^{-1} h0'(t1) dt1,
/// the cumulative moments
///   N_m(t) = int_1^t h0' h^m,
///   Q_m(t) = int_1^inf (t v t1)^{-1} h0' h^m dt1,
///   P_m(t) = int_1^inf h(t v t1) h0' h^m dt1  (finite iff int h0' h^{m+1}
///            converges); Q_{-1} is identically 1.
/// Evaluations are O(1): cumulative integrals are precomputed once per
/// moment order on a dense log-uniform grid (15-point panels, machine
/// precision for these smooth integrands), with analytic power-law tails
/// beyond the grid. This class is the ground truth, tables are sampled
/// from it.
class EstimatorFuncs {
  public:
    explicit EstimatorFuncs(const H0Spec& spec);

    double h(double t) const;
    double N(int m, double t) const;
    double Q(int m, double t) const;  // m >= -1
    double P(int m, double t) const;  // throws DivergentIntegral if infinite
    bool p_finite(int m) const;
    const H0Spec& spec() const { return spec_; }

    /// integral of h0' h^m over [a, b] (b may be huge); used in the
    /// inequality suite
    double moment_integral(int m, double a, double b) const;
    /// tail exponent alpha in h0'(t) h(t)^{m+1} ~ t^alpha fitted at large t
    double tail_exponent(int m) const;

  private:
    struct MomentCache {
        std::vector<double> ncum, qtail;  // at the grid nodes
        double fit_logc = 0.0, fit_alpha = 0.0;  // h0' h^m tail power
        double ninf = 0.0;  // limit of N(m, .), +inf when divergent
    };

    const MomentCache& moments(int m) const;
    size_t node_below(double t) const;
    double n_inf(int m) const;  // limit of N(m, .); +inf when divergent

    H0Spec spec_;
    double dlog_ = 0.0;
    std::vector<double> tg_;             // log-uniform nodes on [1, T_big]
    std::vector<double> h0cum_, htail_;  // tabulated profiles only
    double hp_tail_logc_ = 0.0, hp_tail_alpha_ = 0.0;
    mutable std::map<int, MomentCache> cache_;
};

struct EstimatorTable {
    H0Spec spec;
    int m_max = 0;
    std::vector<double> t;
    std::vector<double> h;
    std::vector<std::vector<double>> N, Q, P;  // indexed [m][i]
    std::vector<bool> p_is_finite;             // per m

    std::string to_csv() const;
};

std::vector<double> log_time_grid(double t_min, double t_max,
                                  int per_decade = 64);

EstimatorTable compute_table(const H0Spec& spec, int m_max,
                             const std::vector<double>& time_grid);

/// One checked identity or inequality from the integral calculus.
struct CalculusCheck {
    std::string id;        // e.g. "3.76" or "monotone-h"
    double t = 0.0;        // sample time (or a for interval checks)
    int m = 0, i = 0, j = 0;
    double lhs = 0.0, rhs = 0.0;
    bool identity = false;  // equality to 1e-6 rel, else <= with 1e-9 slack
    bool ok = false;
};

struct CalculusReport {
    std::vector<CalculusCheck> checks;
    bool all_ok = true;
    int failures() const;
};

/// Verifies the full identity/inequality suite of the estimating-function
/// calculus at the given sample times and intervals [a,b].
CalculusReport verify_calculus(const EstimatorFuncs& funcs,
                               const std::vector<double>& sample_times,
                               const std::vector<std::pair<double, double>>&
                                   ab_pairs,
                               int m_max = 2);

/// rho(t) with |rho'(t)| = t^{-1-eps}: either anchored at a finite t0 and
/// decreasing away from it, or anchored at infinity (rho -> rho_inf).
struct RhoSchedule {
    enum class Direction { Decreasing, Increasing };
    Direction direction = Direction::Increasing;
    double rho_anchor = 1.0;  // rho(t0), or rho_inf for Increasing
    double eps = 0.1;
    double t0 = 1.0;  // ignored for Increasing

    void validate() const;
};

double rho_at(const RhoSchedule& s, double t);       // throws on rho < 0
double rho_prime_abs(const RhoSchedule& s, double t);

/// c * t^alpha
struct PowerLaw {
    double c = 1.0;
    double alpha = 0.0;
    double operator()(double t) const;
};

/// The solvability schedules: power-law shapes saturating the constraint
/// chain, with prefactors calibrated so every constraint holds pointwise on
/// the working grid. h3 is the max of its two lower bounds.
struct ScheduleSet {
    double gamma = 0.0, eps = 0.0;
    int p = 0;
    PowerLaw h0bar;         // base growth t^{1-gamma}/(1-gamma) shape
    PowerLaw hbar1, h2, h1;
    PowerLaw h3_main, h3_floor;  // h3(t) = max of the two
    double h3(double t) const;
};

/// Builds and numerically re-verifies the schedules on [1, t_max].
/// Throws ScheduleInfeasible when (p+2)gamma <= 1 or 2 eps >= (p+2)gamma - 1,
/// or when a constraint fails on the verification grid.
ScheduleSet build_schedules(double gamma, double eps, int p,
                            const RhoSchedule& rho, double t_max = 1e4);

}  // namespace gevreylab
