#include "gevreylab/weights.hpp"

#include <cmath>
#include <limits>

#include "gevreylab/errors.hpp"
#include "gevreylab/quadrature.hpp"
#include "gevreylab/rng.hpp"

namespace gevreylab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogSlack = 1e-12;
constexpr int kSeriesCap = 10000;

// log sum of the FTilde (weighted = false) or FCap (weighted = true) series
// at rho = 1 and argument x >= 0, summed in log space with a running offset.
// Stops once past the peak index j* ~ x^nu the term ratio is below 1e-18 and
// the geometric tail bound is below 1e-15 of the partial sum.
double log_series(double x, double nu, bool fcap) {
    if (x == 0.0) return fcap ? -kInf : 0.0;
    const double lx = std::log(x);
    const double peak = std::pow(x, nu);
    double offset = -kInf;  // running max of log-terms
    double sum = 0.0;       // sum of exp(log_term - offset)
    for (int j = 0; j < kSeriesCap; ++j) {
        double lt = -std::lgamma(j + 1.0) / nu + j * lx;
        if (fcap) lt += lx - std::log(j + 1.0);
        if (lt > offset) {
            sum = sum * std::exp(offset - lt) + 1.0;
            offset = lt;
        } else {
            sum += std::exp(lt - offset);
        }
        if (j + 1 > peak) {
            const double ratio = x / std::pow(j + 2.0, 1.0 / nu);
            const double term = std::exp(lt - offset);
            if (ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-15 * sum &&
                term < 1e-18 * sum)
                return offset + std::log(sum);
        }
    }
    throw SeriesNotConverged("series cap reached at x = " + std::to_string(x));
}

double scaled_arg(const WeightParams& p, double xi_norm) {
    return std::pow(p.rho, 1.0 / p.nu) * xi_norm;
}

bool is_series(WeightVariant v) {
    return v == WeightVariant::FTilde || v == WeightVariant::FCap;
}

// log|e^{la} - e^{lb}| for la, lb possibly large.
double log_abs_diff_exp(double la, double lb) {
    if (la == lb) return -kInf;
    const double hi = std::max(la, lb), lo = std::min(la, lb);
    return hi + std::log1p(-std::exp(lo - hi));
}

double safe_exp(double l) { return l > 700.0 ? kInf : std::exp(l); }

InequalityReport make_report(const char* name, double log_lhs, double log_rhs,
                             PairRegion region, double constant_used,
                             bool applicable, double slack = kLogSlack) {
    InequalityReport r;
    r.name = name;
    r.log_lhs = log_lhs;
    r.log_rhs = log_rhs;
    r.lhs = safe_exp(log_lhs);
    r.rhs = safe_exp(log_rhs);
    r.region = region;
    r.constant_used = constant_used;
    r.applicable = applicable;
    r.satisfied = !applicable || log_lhs == -kInf || log_lhs <= log_rhs + slack;
    return r;
}

// Relative slack for comparisons whose lhs is |e^{la} - e^{lb}|: the
// cancellation amplifies the ~1e-13 accuracy of each log by 1/|la - lb|.
double diff_slack(double la, double lb) {
    const double d = std::abs(la - lb);
    if (d == 0.0) return kLogSlack;
    return kLogSlack + 1e-12 * std::exp(-d) / (-std::expm1(-d));
}

}  // namespace

double eval_log_weight(const WeightParams& p, double xi_norm) {
    if (!(p.nu > 0.0 && p.nu <= 1.0)) throw NumericsError("nu out of (0,1]");
    if (p.rho < 0.0) throw NumericsError("rho < 0");
    switch (p.variant) {
        case WeightVariant::F0:
            return p.rho * std::pow(xi_norm, p.nu);
        case WeightVariant::F:
            return p.rho * std::max(std::pow(xi_norm, p.nu), 1.0);
        case WeightVariant::FTilde:
            return log_series(scaled_arg(p, xi_norm), p.nu, false);
        case WeightVariant::FCap:
            return log_series(scaled_arg(p, xi_norm), p.nu, true);
    }
    return 0.0;
}

double eval_weight(const WeightParams& p, double xi_norm) {
    const double l = eval_log_weight(p, xi_norm);
    if (l > 700.0)
        throw WeightOverflow("log weight " + std::to_string(l) +
                             " at |xi| = " + std::to_string(xi_norm));
    return std::exp(l);
}

double eval_log_ftilde_derivative(const WeightParams& p, double xi_norm) {
    // d/d|xi| sum_j a_j rho^{j/nu} |xi|^j = rho^{1/nu} sum_j j a_j x^{j-1},
    // x the scaled argument.
    const double x = scaled_arg(p, xi_norm);
    if (x == 0.0) return -kInf;
    const double lx = std::log(x);
    const double peak = std::pow(x, p.nu);
    double offset = -kInf, sum = 0.0;
    for (int j = 1; j < kSeriesCap; ++j) {
        const double lt = std::log(static_cast<double>(j)) -
                          std::lgamma(j + 1.0) / p.nu + (j - 1) * lx;
        if (lt > offset) {
            sum = sum * std::exp(offset - lt) + 1.0;
            offset = lt;
        } else {
            sum += std::exp(lt - offset);
        }
        if (j > peak + 1) {
            const double ratio = x / std::pow(j + 1.0, 1.0 / p.nu);
            if (ratio < 1.0 && std::exp(lt - offset) * ratio / (1.0 - ratio) <
                                   1e-15 * sum)
                break;
        }
    }
    return std::log(p.rho) / p.nu + offset + std::log(sum);
}

double pair_norm(const Vec3& v, int dim) {
    double s = 0.0;
    for (int i = 0; i < dim; ++i) s += v[i] * v[i];
    return std::sqrt(s);
}

PairRegion classify_region(double nxi, double neta, double ndiff) {
    if (ndiff <= std::min(nxi, neta)) return PairRegion::DiffSmallest;
    if (nxi <= ndiff && ndiff <= neta) return PairRegion::DiffMiddle;
    return PairRegion::DiffLargest;
}

std::vector<InequalityReport> check_submultiplicative(const WeightParams& p,
                                                      const Vec3& xi,
                                                      const Vec3& eta, int dim) {
    if (p.variant == WeightVariant::FCap)
        throw NumericsError("pair inequalities are stated for f0, f, ftilde only");
    Vec3 diff{};
    for (int i = 0; i < dim; ++i) diff[i] = xi[i] - eta[i];
    double nxi = pair_norm(xi, dim), neta = pair_norm(eta, dim),
           ndiff = pair_norm(diff, dim);
    const PairRegion region = classify_region(nxi, neta, ndiff);
    const bool series = is_series(p.variant);
    WeightParams wp = p;
    if (series) {
        // Appendix A inequalities are at rho = 1 in the scaled variable.
        const double s = std::pow(p.rho, 1.0 / p.nu);
        nxi *= s;
        neta *= s;
        ndiff *= s;
        wp.rho = 1.0;
    }
    auto lw = [&](double r) { return eval_log_weight(wp, r); };
    std::vector<InequalityReport> out;
    // (3.3) / (A.9): f(xi) <= f(xi-eta) f(eta), all pairs.
    out.push_back(make_report(series ? "A.9" : "3.3", lw(nxi),
                              lw(ndiff) + lw(neta), region, 1.0, true));
    // (3.4) / (A.10): f(xi) <= f(xi-eta) f0(eta)^nu  for |xi|^|eta| <= |xi-eta|.
    const bool reg34 = std::min(nxi, neta) <= ndiff;
    double rhs34;
    if (series) {
        rhs34 = lw(ndiff) + std::pow(neta, p.nu);  // exp(|eta|^nu), scaled units
    } else {
        rhs34 = lw(ndiff) + p.nu * p.rho * std::pow(neta, p.nu);
    }
    out.push_back(make_report(series ? "A.10" : "3.4", lw(nxi), rhs34, region,
                              1.0, reg34));
    return out;
}

std::vector<InequalityReport> check_lipschitz_family(const WeightParams& p,
                                                     const Vec3& xi,
                                                     const Vec3& eta, int dim) {
    if (p.variant == WeightVariant::FCap)
        throw NumericsError("pair inequalities are stated for f0, f, ftilde only");
    Vec3 diff{};
    for (int i = 0; i < dim; ++i) diff[i] = xi[i] - eta[i];
    double nxi = pair_norm(xi, dim), neta = pair_norm(eta, dim),
           ndiff = pair_norm(diff, dim);
    const PairRegion region = classify_region(nxi, neta, ndiff);
    const bool series = is_series(p.variant);
    WeightParams wp = p;
    if (series) {
        const double s = std::pow(p.rho, 1.0 / p.nu);
        nxi *= s;
        neta *= s;
        ndiff *= s;
        wp.rho = 1.0;
    }
    auto lw = [&](double r) { return eval_log_weight(wp, r); };
    const double nu = p.nu;
    const double lfxi = lw(nxi), lfeta = lw(neta), lfdiff = lw(ndiff);
    const double C = (region == PairRegion::DiffMiddle)
                         ? std::pow(2.0, 1.0 - nu)
                         : 1.0;
    const double logC = std::log(C);
    // lhs common to (3.5)-(3.7) and (A.12)-(A.14):
    //   |f(xi) - f(eta)| |eta|^{1-nu}
    const double lfac = (nu == 1.0)   ? 0.0
                        : (neta == 0) ? -kInf
                                      : (1.0 - nu) * std::log(neta);
    const double log_lhs = log_abs_diff_exp(lfxi, lfeta) + lfac;
    const double slack = diff_slack(lfxi, lfeta);
    const double lpow_diff =
        (nu == 1.0) ? 0.0 : (ndiff == 0 ? -kInf : (1.0 - nu) * std::log(ndiff));

    std::vector<InequalityReport> out;
    if (!series) {
        // (3.5): <= |xi-eta|^{1-nu} f(xi-eta) f(eta), all pairs, C = 1.
        out.push_back(make_report("3.5", log_lhs, lpow_diff + lfdiff + lfeta,
                                  region, 1.0, true, slack));
        // (3.6): <= C |xi-eta|^{1-nu} f0(xi-eta)^nu f(eta),
        //        for |xi| ^ |xi-eta| <= |eta|.
        const bool reg36 = std::min(nxi, ndiff) <= neta;
        out.push_back(make_report(
            "3.6", log_lhs,
            logC + lpow_diff + nu * p.rho * std::pow(ndiff, nu) + lfeta, region,
            C, reg36, slack));
        // (3.7): <= C |xi-eta|^{1-nu} f(xi-eta) f0(eta)^nu,
        //        for |xi| ^ |eta| <= |xi-eta|.
        const bool reg37 = std::min(nxi, neta) <= ndiff;
        out.push_back(make_report(
            "3.7", log_lhs,
            logC + lpow_diff + lfdiff + nu * p.rho * std::pow(neta, nu), region,
            C, reg37, slack));
    } else {
        // (A.11): (ftilde(eta) - ftilde(xi)) |eta|^{1-nu} <= |xi-eta| ftilde(eta),
        //         for |xi| <= |eta| (one-sided difference).
        const bool reg11 = nxi <= neta;
        const double log_lhs11 =
            (lfeta >= lfxi) ? log_abs_diff_exp(lfeta, lfxi) + lfac : -kInf;
        out.push_back(make_report(
            "A.11", log_lhs11,
            (ndiff == 0 ? -kInf : std::log(ndiff)) + lfeta, region, 1.0, reg11,
            slack));
        // (A.12): <= |xi-eta|^{1-nu} ftilde(xi-eta) ftilde(eta), all pairs.
        out.push_back(make_report("A.12", log_lhs, lpow_diff + lfdiff + lfeta,
                                  region, 1.0, true, slack));
        // (A.13): <= |xi-eta|^{1-nu} (exp(|xi-eta|^nu) - 1) ftilde(eta),
        //         for |xi| ^ |xi-eta| <= |eta|.
        const bool reg13 = std::min(nxi, ndiff) <= neta;
        const double lexpm1 =
            (ndiff == 0)
                ? -kInf
                : ((std::pow(ndiff, nu) > 700.0)
                       ? std::pow(ndiff, nu)
                       : std::log(std::expm1(std::pow(ndiff, nu))));
        out.push_back(make_report("A.13", log_lhs, lpow_diff + lexpm1 + lfeta,
                                  region, 1.0, reg13, slack));
        // (A.14): <= C |xi-eta|^{1-nu} (ftilde(xi-eta) - 1) exp(|eta|^nu),
        //         for |xi| ^ |eta| <= |xi-eta|.
        const bool reg14 = std::min(nxi, neta) <= ndiff;
        const double lftm1 = (ndiff == 0) ? -kInf
                                          : log_abs_diff_exp(lfdiff, 0.0);
        out.push_back(make_report("A.14", log_lhs,
                                  logC + lpow_diff + lftm1 +
                                      std::pow(neta, nu),
                                  region, C, reg14,
                                  slack + diff_slack(lfdiff, 0.0)));
    }
    return out;
}

SeriesCoefficients series_coefficients(double nu, int j_max) {
    SeriesCoefficients sc;
    sc.log_a.resize(j_max + 1);
    sc.log_b.resize(j_max + 1);
    for (int j = 0; j <= j_max; ++j)
        sc.log_a[j] = -std::lgamma(j + 1.0) / nu;
    for (int k = 0; k <= j_max; ++k) {
        // b_k^2 = sum_{0<=j<=2k} a_j a_{2k-j}, log-sum-exp.
        double offset = -kInf, sum = 0.0;
        for (int j = 0; j <= 2 * k; ++j) {
            const double lt = -std::lgamma(j + 1.0) / nu -
                              std::lgamma(2 * k - j + 1.0) / nu;
            if (lt > offset) {
                sum = sum * std::exp(offset - lt) + 1.0;
                offset = lt;
            } else {
                sum += std::exp(lt - offset);
            }
        }
        sc.log_b[k] = 0.5 * (offset + std::log(sum));
    }
    return sc;
}

double asymptotic_ratio_A8(const WeightParams& params, double xi_norm) {
    if (params.variant != WeightVariant::FTilde)
        throw NumericsError("A.8 ratio is defined for the FTilde variant");
    WeightParams p1 = params;
    p1.rho = 1.0;
    const double x = scaled_arg(params, xi_norm);
    if (x <= 0.0) throw NumericsError("A.8 ratio needs |xi| > 0");
    const double nu = params.nu;
    const double log_f = eval_log_weight(p1, x);
    const double log_asym = (nu - 1.0) / (2.0 * nu) * std::log(2.0 * M_PI) +
                            0.5 * std::log(nu) +
                            (nu - 1.0) / 2.0 * std::log(x) +
                            std::pow(x, nu) / nu;
    return std::exp(log_f - log_asym);
}

double algebra_constant_B2(const WeightParams& params, double k_low,
                           double k_high, int dim) {
    const double nu = params.nu, rho = params.rho;
    if (nu >= 1.0) throw DivergentIntegral("large-eta tail diverges for nu = 1");
    if (k_low >= dim / 2.0)
        throw DivergentIntegral("small-eta singularity needs k_low < n/2");
    if (k_low < 0.0 || rho <= 0.0)
        throw DivergentIntegral("requires k_low >= 0 and rho > 0");
    const double k = std::max(k_low, k_high);
    const double sphere =
        2.0 * std::pow(M_PI, dim / 2.0) / std::tgamma(dim / 2.0);
    // fbar = f * f1; integrand in log space to survive large radii.
    auto radial = [&](double r) {
        if (r <= 0.0) return 0.0;
        const double lf = rho * std::max(std::pow(r, nu), 1.0);
        const double lf1 = (r > 1.0 ? k_high : k_low) * std::log(r);
        const double lf0_2nu = 2.0 * nu * rho * std::pow(r, nu);
        const double lcommon = (dim - 1.0) * std::log(r) - 2.0 * (lf + lf1);
        // 1 + 2^{2k} f0^{2 nu}
        const double lbig = 2.0 * k * std::log(2.0) + lf0_2nu;
        const double lsum = std::max(0.0, lbig) +
                            std::log1p(std::exp(-std::abs(lbig)));
        return std::exp(lcommon + lsum);
    };
    // [0,1]: substitution r = v^m flattens the r^{-2 k_low} endpoint.
    const double m = 2.0 / (dim - 2.0 * k_low);
    auto inner = [&](double v) {
        const double r = std::pow(v, m);
        return radial(r) * m * std::pow(v, m - 1.0);
    };
    const double part0 = integrate(inner, 0.0, 1.0, 1e-12, 1e-10);
    // [1,inf): substitution u = r^nu makes the decay exponential.
    const double decay = 2.0 * rho * (1.0 - nu);
    const double u_max = 1.0 + 60.0 / decay;
    auto outer = [&](double u) {
        const double r = std::pow(u, 1.0 / nu);
        return radial(r) * std::pow(u, 1.0 / nu - 1.0) / nu;
    };
    const double part1 = integrate(outer, 1.0, u_max, 1e-12, 1e-10);
    return sphere * (part0 + part1);
}

std::vector<std::pair<Vec3, Vec3>> sample_pairs(Rng& rng, int count, int dim) {
    static constexpr double kScales[4] = {0.1, 1.0, 10.0, 100.0};
    std::vector<std::pair<Vec3, Vec3>> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const double sx = kScales[rng.integer(4)];
        Vec3 xi{}, eta{};
        for (int d = 0; d < dim; ++d) xi[d] = sx * rng.normal();
        if (i % 4 == 0) {
            // nearby pair: the |xi-eta| <= |xi| ^ |eta| region needs these
            for (int d = 0; d < dim; ++d)
                eta[d] = xi[d] + 0.01 * sx * rng.normal();
        } else {
            const double se = kScales[rng.integer(4)];
            for (int d = 0; d < dim; ++d) eta[d] = se * rng.normal();
        }
        out.emplace_back(xi, eta);
    }
    return out;
}

}  // namespace gevreylab
