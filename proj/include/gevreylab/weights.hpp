#pragma once

#include <array>
#include <vector>

namespace gevreylab {

/// Which exponential Fourier weight to evaluate:
///   F0     f0(xi) = exp(rho |xi|^nu)
///   F      f(xi)  = exp(rho (|xi|^nu v 1))
///   FTilde series sum_j (j!)^{-1/nu} rho^{j/nu} |xi|^j
///   FCap   series sum_j (j+1)^{-1} (j!)^{-1/nu} |rho^{1/nu} xi|^{j+1}
/// The series variants are the rho = 1 definitions with rho reintroduced by
/// the scaling xi -> rho^{1/nu} xi.
enum class WeightVariant { F0, F, FTilde, FCap };

struct WeightParams {
    double rho = 1.0;
    double nu = 0.5;
    WeightVariant variant = WeightVariant::F;
};

/// log of the weight at radius xi_norm >= 0. Always finite for finite input
/// (series summed in log space via log-gamma).
double eval_log_weight(const WeightParams& params, double xi_norm);

/// The weight itself; throws WeightOverflow once the exponent passes the
/// representable range (callers needing large arguments use the log form).
double eval_weight(const WeightParams& params, double xi_norm);

/// Termwise radial derivative d/d|xi| of the FTilde series (rho-scaled).
double eval_log_ftilde_derivative(const WeightParams& params, double xi_norm);

/// Orderings of |xi - eta| against |xi| and |eta|; the region determines
/// which inequality applies and which constant it carries.
enum class PairRegion {
    DiffSmallest,  // |xi-eta| <= |xi| ^ |eta|
    DiffMiddle,    // |xi| <= |xi-eta| <= |eta|  (the C = 2^{1-nu} region)
    DiffLargest,   // |xi| ^ |eta| <= |xi-eta|, not DiffMiddle
};

struct InequalityReport {
    const char* name = "";
    double lhs = 0.0;       // linear scale (may be inf for huge weights)
    double rhs = 0.0;
    double log_lhs = 0.0;   // the comparison is carried out on these
    double log_rhs = 0.0;
    PairRegion region = PairRegion::DiffSmallest;
    double constant_used = 1.0;
    bool applicable = true;  // region precondition held
    bool satisfied = true;   // lhs <= rhs * (1 + 1e-12) in log space
};

using Vec3 = std::array<double, 3>;

/// Submultiplicativity: (3.3) always and (3.4) on its region for F0/F;
/// (A.9)/(A.10) for the series variants. Returns one report per inequality.
std::vector<InequalityReport> check_submultiplicative(const WeightParams& params,
                                                      const Vec3& xi,
                                                      const Vec3& eta, int dim);

/// Lipschitz-type estimates (3.5)-(3.7) for F0/F, (A.11)-(A.14) for FTilde,
/// with C = 1 except C = 2^{1-nu} in the DiffMiddle region.
std::vector<InequalityReport> check_lipschitz_family(const WeightParams& params,
                                                     const Vec3& xi,
                                                     const Vec3& eta, int dim);

/// Coefficients a_j = (j!)^{-1/nu} of the FTilde series and the b_k defined
/// by b_k^2 = sum_{0<=j<=2k} a_j a_{2k-j}. Returned in log scale (the linear
/// values underflow long before j_max ~ 300).
struct SeriesCoefficients {
    std::vector<double> log_a;
    std::vector<double> log_b;
};
SeriesCoefficients series_coefficients(double nu, int j_max);

/// FTilde(xi) divided by its large-|xi| form
///   (2 pi)^{(nu-1)/2nu} nu^{1/2} |xi|^{(nu-1)/2} exp(|xi|^nu / nu)
/// (computed at the rho-scaled argument). Throws SeriesNotConverged when the
/// truncation tail is not below tolerance.
double asymptotic_ratio_A8(const WeightParams& params, double xi_norm);

/// The algebra constant of (B.2):
///   C^2 = int d eta  fbar(eta)^{-2} (1 + 2^{2k} f0(eta)^{2 nu}),
/// fbar = f * f1, f1 = |eta|_>^{k_high} + |eta|_<^{k_low}, k = k_low v k_high,
/// by radial quadrature in dimension dim. Throws DivergentIntegral when
/// nu = 1 or k_low >= dim/2.
double algebra_constant_B2(const WeightParams& params, double k_low,
                           double k_high, int dim);

double pair_norm(const Vec3& v, int dim);
PairRegion classify_region(double nxi, double neta, double ndiff);

class Rng;

/// Random (xi, eta) pairs for the inequality suites: isotropic Gaussian
/// components scaled by one of {0.1, 1, 10, 100}; a quarter of the pairs set
/// eta = xi + small perturbation to hit the nearby-pair region.
std::vector<std::pair<Vec3, Vec3>> sample_pairs(Rng& rng, int count, int dim);

}  // namespace gevreylab
