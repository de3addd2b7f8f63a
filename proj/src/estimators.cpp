#include "gevreylab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gevreylab/errors.hpp"
#include "gevreylab/quadrature.hpp"

namespace gevreylab {

namespace {

double loglog_slope(const std::vector<double>& t, const std::vector<double>& v,
                    size_t seg) {
    return (std::log(v[seg + 1]) - std::log(v[seg])) /
           (std::log(t[seg + 1]) - std::log(t[seg]));
}

}  // namespace

void H0Spec::validate() const {
    if (power_law) {
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw ConfigError("power-law decay exponent must lie in (0,1]");
        return;
    }
    if (t_table.size() < 2 || t_table.size() != hp_table.size())
        throw ConfigError("tabulated decay profile needs >= 2 samples");
    for (size_t i = 0; i < t_table.size(); ++i) {
        if (hp_table[i] <= 0.0)
            throw ConfigError("tabulated decay profile must be positive");
        if (i > 0 && t_table[i] <= t_table[i - 1])
            throw ConfigError("tabulated times must increase");
    }
    // integrability of t^{-1} h0': the extrapolated tail t^{sigma - 1} needs
    // sigma < 0
    if (loglog_slope(t_table, hp_table, t_table.size() - 2) >= 0.0)
        throw DivergentIntegral("tabulated decay profile does not decay");
}

double H0Spec::hprime(double t) const {
    if (power_law) return std::pow(t, -gamma);
    const double lt = std::log(t);
    auto it = std::upper_bound(t_table.begin(), t_table.end(), t);
    size_t seg = it == t_table.begin() ? 0 : (it - t_table.begin()) - 1;
    seg = std::min(seg, t_table.size() - 2);
    const double s = loglog_slope(t_table, hp_table, seg);
    return hp_table[seg] * std::exp(s * (lt - std::log(t_table[seg])));
}

double H0Spec::h0bar(double t) const {
    if (power_law)
        return gamma == 1.0 ? std::log(t)
                            : (std::pow(t, 1.0 - gamma) - 1.0) / (1.0 - gamma);
    return integrate([this](double s) { return hprime(s); }, 1.0, t, 1e-12,
                     1e-11);
}

namespace {

constexpr double kTBig = 1e10;  // cache grid end
constexpr int kPerDecade = 256;

// integral of exp(logc) s^alpha over [a, b]
double power_integral(double logc, double alpha, double a, double b) {
    if (std::abs(alpha + 1.0) < 1e-12)
        return std::exp(logc) * std::log(b / a);
    return std::exp(logc) *
           (std::pow(b, alpha + 1.0) - std::pow(a, alpha + 1.0)) /
           (alpha + 1.0);
}

// integral of exp(logc) s^alpha over [a, inf); requires alpha < -1
double power_tail(double logc, double alpha, double a) {
    if (alpha >= -1.0)
        throw DivergentIntegral("power tail with exponent " +
                                std::to_string(alpha));
    return -std::exp(logc) * std::pow(a, alpha + 1.0) / (alpha + 1.0);
}

}  // namespace

EstimatorFuncs::EstimatorFuncs(const H0Spec& spec) : spec_(spec) {
    spec_.validate();
    const int n =
        static_cast<int>(std::lround(kPerDecade * std::log10(kTBig))) + 1;
    dlog_ = std::log(kTBig) / (n - 1);
    tg_.resize(n);
    for (int i = 0; i < n; ++i) tg_[i] = std::exp(i * dlog_);
    tg_.front() = 1.0;
    tg_.back() = kTBig;
    if (!spec_.power_law) {
        // cumulative primitive of h0' and backward tail of h0'/s; beyond the
        // table the log-log extrapolation is an exact power, so the analytic
        // tail is exact
        auto fit = fit_power_law([this](double s) { return spec_.hprime(s); },
                                 kTBig / 10.0, kTBig);
        hp_tail_logc_ = fit.log_c;
        hp_tail_alpha_ = fit.alpha;
        h0cum_.assign(n, 0.0);
        for (int i = 1; i < n; ++i)
            h0cum_[i] =
                h0cum_[i - 1] +
                gk15_panel([this](double s) { return spec_.hprime(s); },
                           tg_[i - 1], tg_[i], nullptr);
        htail_.assign(n, 0.0);
        htail_.back() =
            power_tail(hp_tail_logc_, hp_tail_alpha_ - 1.0, kTBig);
        for (int i = n - 2; i >= 0; --i)
            htail_[i] =
                htail_[i + 1] +
                gk15_panel([this](double s) { return spec_.hprime(s) / s; },
                           tg_[i], tg_[i + 1], nullptr);
    }
}

size_t EstimatorFuncs::node_below(double t) const {
    const auto i = static_cast<long>(std::log(t) / dlog_);
    return std::min(std::max(i, long{0}), static_cast<long>(tg_.size()) - 2);
}

double EstimatorFuncs::h(double t) const {
    if (spec_.power_law) {
        const double g = spec_.gamma;
        return spec_.h0bar(t) / t + std::pow(t, -g) / g;
    }
    double h0v, tail;
    if (t <= kTBig) {
        size_t i = node_below(t);
        if (tg_[i] > t) i = (i == 0) ? 0 : i - 1;
        h0v = h0cum_[i] +
              gk15_panel([this](double s) { return spec_.hprime(s); }, tg_[i],
                         t, nullptr);
        tail = htail_[i + 1] +
               gk15_panel([this](double s) { return spec_.hprime(s) / s; }, t,
                          tg_[i + 1], nullptr);
    } else {
        h0v = h0cum_.back() +
              power_integral(hp_tail_logc_, hp_tail_alpha_, kTBig, t);
        tail = power_tail(hp_tail_logc_, hp_tail_alpha_ - 1.0, t);
    }
    return h0v / t + tail;
}

const EstimatorFuncs::MomentCache& EstimatorFuncs::moments(int m) const {
    auto it = cache_.find(m);
    if (it != cache_.end()) return it->second;
    auto g = [this, m](double s) {
        return spec_.hprime(s) * std::pow(h(s), m);
    };
    MomentCache mc;
    if (spec_.power_law) {
        // exact asymptotic power of h0' h^m (up to t^{-(1-gamma)} corrections
        // absorbed by the grid part)
        const double gm = spec_.gamma;
        const double ch =
            gm == 1.0 ? 1.0 : 1.0 / (gm * (1.0 - gm));  // h ~ ch t^{-gamma}
        mc.fit_alpha = -gm * (m + 1);
        mc.fit_logc = m * std::log(ch);
    } else {
        auto fit = fit_power_law(g, kTBig / 10.0, kTBig);
        mc.fit_alpha = fit.alpha;
        mc.fit_logc = fit.log_c;
    }
    const int n = static_cast<int>(tg_.size());
    mc.ncum.assign(n, 0.0);
    for (int i = 1; i < n; ++i)
        mc.ncum[i] =
            mc.ncum[i - 1] + gk15_panel(g, tg_[i - 1], tg_[i], nullptr);
    mc.qtail.assign(n, 0.0);
    auto gq = [&g](double s) { return g(s) / s; };
    // tail past the grid by adaptive quadrature of the true integrand: the
    // fitted power is kept only for divergence decisions and beyond-grid
    // evaluations, its prefactor bias would leak into every Q value
    mc.qtail.back() = integrate_to_inf(gq, kTBig, 0.0, 1e-13);
    for (int i = n - 2; i >= 0; --i)
        mc.qtail[i] = mc.qtail[i + 1] + gk15_panel(gq, tg_[i], tg_[i + 1],
                                                   nullptr);
    mc.ninf = mc.fit_alpha < -1.0
                  ? mc.ncum.back() + integrate_to_inf(g, kTBig, 0.0, 1e-13)
                  : std::numeric_limits<double>::infinity();
    return cache_.emplace(m, std::move(mc)).first->second;
}

double EstimatorFuncs::N(int m, double t) const {
    if (t <= 1.0) return 0.0;
    const auto& mc = moments(m);
    if (t <= kTBig) {
        size_t i = node_below(t);
        if (tg_[i] > t) i = (i == 0) ? 0 : i - 1;
        return mc.ncum[i] +
               gk15_panel(
                   [this, m](double s) {
                       return spec_.hprime(s) * std::pow(h(s), m);
                   },
                   tg_[i], t, nullptr);
    }
    return mc.ncum.back() +
           power_integral(mc.fit_logc, mc.fit_alpha, kTBig, t);
}

double EstimatorFuncs::Q(int m, double t) const {
    if (m == -1) return 1.0;
    const auto& mc = moments(m);
    double tail;
    if (t <= kTBig) {
        size_t i = node_below(t);
        if (tg_[i] > t) i = (i == 0) ? 0 : i - 1;
        tail = mc.qtail[i + 1] +
               gk15_panel(
                   [this, m](double s) {
                       return spec_.hprime(s) * std::pow(h(s), m) / s;
                   },
                   t, tg_[i + 1], nullptr);
    } else {
        tail = power_tail(mc.fit_logc, mc.fit_alpha - 1.0, t);
    }
    return N(m, t) / t + tail;
}

double EstimatorFuncs::tail_exponent(int m) const {
    // exponent of h0' h^{m+1} at large t; the gamma = 1 log factor only
    // steepens the fitted slope marginally
    return moments(m + 1).fit_alpha;
}

bool EstimatorFuncs::p_finite(int m) const {
    if (spec_.power_law) return spec_.gamma * (m + 2) > 1.0 + 1e-12;
    return tail_exponent(m) < -1.0 - 1e-6;
}

double EstimatorFuncs::n_inf(int m) const {
    const auto& mc = moments(m);
    return mc.ninf;
}

double EstimatorFuncs::P(int m, double t) const {
    if (!p_finite(m))
        throw DivergentIntegral("p-infinite: moment " + std::to_string(m) +
                                " tail is not integrable");
    return h(t) * N(m, t) + (n_inf(m + 1) - N(m + 1, t));
}

double EstimatorFuncs::moment_integral(int m, double a, double b) const {
    return N(m, b) - N(m, a);
}

std::vector<double> log_time_grid(double t_min, double t_max, int per_decade) {
    if (!(t_min >= 1.0 && t_max > t_min))
        throw ConfigError("time grid must satisfy 1 <= t_min < t_max");
    const int n =
        std::max(2, static_cast<int>(std::ceil(
                        per_decade * std::log10(t_max / t_min))) + 1);
    std::vector<double> g(n);
    const double la = std::log(t_min), lb = std::log(t_max);
    for (int i = 0; i < n; ++i)
        g[i] = std::exp(la + (lb - la) * i / (n - 1));
    g.front() = t_min;
    g.back() = t_max;
    return g;
}

EstimatorTable compute_table(const H0Spec& spec, int m_max,
                             const std::vector<double>& time_grid) {
    if (m_max < 0 || m_max > 6)
        throw ConfigError("moment order must lie in [0, 6]");
    EstimatorFuncs f(spec);
    EstimatorTable tab;
    tab.spec = spec;
    tab.m_max = m_max;
    tab.t = time_grid;
    tab.h.reserve(time_grid.size());
    for (double t : time_grid) tab.h.push_back(f.h(t));
    tab.N.assign(m_max + 1, {});
    tab.Q.assign(m_max + 1, {});
    tab.P.assign(m_max + 1, {});
    tab.p_is_finite.assign(m_max + 1, false);
    for (int m = 0; m <= m_max; ++m) {
        for (double t : time_grid) {
            tab.N[m].push_back(f.N(m, t));
            tab.Q[m].push_back(f.Q(m, t));
        }
        tab.p_is_finite[m] = f.p_finite(m);
        if (tab.p_is_finite[m])
            for (double t : time_grid) tab.P[m].push_back(f.P(m, t));
    }
    return tab;
}

std::string EstimatorTable::to_csv() const {
    std::ostringstream os;
    os.precision(12);
    os << "t,h";
    for (int m = 0; m <= m_max; ++m) os << ",N_" << m;
    for (int m = 0; m <= m_max; ++m) os << ",Q_" << m;
    for (int m = 0; m <= m_max; ++m)
        if (p_is_finite[m]) os << ",P_" << m;
    os << "\n";
    for (size_t i = 0; i < t.size(); ++i) {
        os << t[i] << "," << h[i];
        for (int m = 0; m <= m_max; ++m) os << "," << N[m][i];
        for (int m = 0; m <= m_max; ++m) os << "," << Q[m][i];
        for (int m = 0; m <= m_max; ++m)
            if (p_is_finite[m]) os << "," << P[m][i];
        os << "\n";
    }
    return os.str();
}

int CalculusReport::failures() const {
    int n = 0;
    for (const auto& c : checks)
        if (!c.ok) ++n;
    return n;
}

namespace {

constexpr double kIdentityTol = 1e-6;  // relative
constexpr double kIneqSlack = 1e-9;    // absolute + relative

void push_identity(CalculusReport& rep, std::string id, double t, int m,
                   double lhs, double rhs) {
    CalculusCheck c;
    c.id = std::move(id);
    c.t = t;
    c.m = m;
    c.lhs = lhs;
    c.rhs = rhs;
    c.identity = true;
    c.ok = std::abs(lhs - rhs) <=
           kIdentityTol * std::max(std::abs(lhs), std::abs(rhs));
    rep.all_ok &= c.ok;
    rep.checks.push_back(std::move(c));
}

void push_bound(CalculusReport& rep, std::string id, double t, int i, int j,
                int m, double lhs, double rhs) {
    CalculusCheck c;
    c.id = std::move(id);
    c.t = t;
    c.i = i;
    c.j = j;
    c.m = m;
    c.lhs = lhs;
    c.rhs = rhs;
    c.ok = lhs <= rhs + kIneqSlack * (1.0 + std::abs(rhs));
    rep.all_ok &= c.ok;
    rep.checks.push_back(std::move(c));
}

}  // namespace

CalculusReport verify_calculus(
    const EstimatorFuncs& f, const std::vector<double>& sample_times,
    const std::vector<std::pair<double, double>>& ab_pairs, int m_max) {
    CalculusReport rep;
    const double h1v = f.h(1.0);
    for (double t : sample_times) {
        const double ht = f.h(t);
        for (int m = 0; m <= m_max; ++m) {
            // integral identities (right sides read at t; the displayed
            // integration variable cannot appear free on the right)
            const double i75 = integrate_to_inf(
                [&](double s) { return f.N(m, s) / (s * s); }, t, 1e-11, 1e-10);
            push_identity(rep, "3.75", t, m, i75, f.Q(m, t));
            const double i76 = integrate(
                [&](double s) { return f.N(0, s) * f.N(m, s) / (s * s); }, 1.0,
                t, 1e-11, 1e-10);
            push_identity(rep, "3.76", t, m, i76,
                          f.N(m + 1, t) - ht * f.N(m, t));
            push_bound(rep, "3.76b", t, 0, 0, m, i76, f.N(m + 1, t));
            if (f.p_finite(m)) {
                const double i77 = integrate_to_inf(
                    [&](double s) { return f.N(0, s) * f.N(m, s) / (s * s); },
                    t, 1e-11, 1e-10);
                push_identity(rep, "3.77", t, m, i77, f.P(m, t));
                const double i82 = integrate_to_inf(
                    [&](double s) { return f.spec().hprime(s) * f.Q(m, s); },
                    t, 1e-11, 1e-10);
                push_bound(rep, "3.82", t, 0, 0, m, i82, f.P(m, t));
                const double i81l = integrate_to_inf(
                    [&](double s) {
                        return f.spec().hprime(s) * f.h(s) * f.Q(m - 1, s);
                    },
                    t, 1e-11, 1e-10);
                push_bound(rep, "3.81", t, 0, 0, m, i81l, i82);
            }
            const double i83 = integrate(
                [&](double s) {
                    return f.spec().hprime(s) * f.h(s) * f.Q(m - 1, s);
                },
                1.0, t, 1e-11, 1e-10);
            push_bound(rep, "3.83", t, 0, 0, m, i83, f.N(m + 1, t));
            const double i84 = integrate(
                [&](double s) { return f.spec().hprime(s) * f.Q(m, s); }, 1.0,
                t, 1e-11, 1e-10);
            push_bound(rep, "3.84", t, 0, 0, m, i84, f.N(m + 1, t));
        }
        // pointwise products
        for (int i = 0; i <= m_max; ++i)
            for (int j = 0; j <= m_max - i; ++j) {
                push_bound(rep, "3.78", t, i, j, 0, f.N(i, t) * f.N(j, t),
                           f.N(0, t) * f.N(i + j, t));
                const double r79 = ht * f.N(i + j, t);
                push_bound(rep, "3.79a", t, i, j, 0, f.N(i, t) * f.Q(j, t),
                           r79);
                push_bound(rep, "3.79b", t, i, j, 0, r79, f.N(i + j + 1, t));
                const double r80 = ht * f.Q(i + j, t);
                push_bound(rep, "3.80a", t, i, j, 0, f.Q(i, t) * f.Q(j, t),
                           r80);
                push_bound(rep, "3.80b", t, i, j, 0, r80,
                           2.0 * f.Q(i + j + 1, t));
                push_bound(rep, "3.70", t, i, j, 0, f.N(i + j, t),
                           std::pow(h1v, i) * f.N(j, t));
                push_bound(rep, "3.71a", t, i, j, 0, f.Q(i + j, t),
                           std::pow(h1v, i) * f.Q(j, t));
                push_bound(rep, "3.71b", t, i, j, 0,
                           std::pow(h1v, i) * f.Q(j, t),
                           std::pow(h1v, i + j) * ht);
            }
        // P sandwich
        for (int m = 0; m <= m_max; ++m)
            if (f.p_finite(m)) {
                push_bound(rep, "3.74a", t, 0, 0, m, f.P(m, 1.0) * ht,
                           h1v * f.P(m, t));
                push_bound(rep, "3.74b", t, 0, 0, m, h1v * f.P(m, t),
                           h1v * f.P(m, 1.0));
            }
    }
    // interval bounds
    for (auto [a, b] : ab_pairs) {
        if (!(1.0 <= a && a <= b)) throw ConfigError("need 1 <= a <= b");
        const double dh0 = f.spec().h0bar(b) - f.spec().h0bar(a);
        for (int m = 0; m <= m_max; ++m) {
            const double i85 = integrate(
                [&](double s) { return f.spec().hprime(s) * f.Q(m, s); }, a, b,
                1e-11, 1e-10);
            push_bound(rep, "3.85", a, 0, 0, m, i85, f.Q(m, a) * dh0);
            const double i86 = integrate(
                [&](double s) {
                    return f.spec().hprime(s) * f.h(s) * f.Q(m - 1, s);
                },
                a, b, 1e-11, 1e-10);
            push_bound(rep, "3.86", a, 0, 0, m, i86, 2.0 * f.Q(m, a) * dh0);
        }
    }
    return rep;
}

void RhoSchedule::validate() const {
    if (eps <= 0.0) throw ConfigError("rho schedule needs eps > 0");
    if (direction == Direction::Decreasing && t0 < 1.0)
        throw ConfigError("rho schedule anchor must satisfy t0 >= 1");
}

double rho_prime_abs(const RhoSchedule& s, double t) {
    s.validate();
    return std::pow(t, -1.0 - s.eps);
}

double rho_at(const RhoSchedule& s, double t) {
    s.validate();
    double r;
    if (s.direction == RhoSchedule::Direction::Increasing) {
        r = s.rho_anchor - std::pow(t, -s.eps) / s.eps;
    } else {
        r = s.rho_anchor -
            std::abs(std::pow(s.t0, -s.eps) - std::pow(t, -s.eps)) / s.eps;
    }
    if (r < 0.0)
        throw ConfigError("negative-rho: anchor value too small at t = " +
                          std::to_string(t));
    return r;
}

double PowerLaw::operator()(double t) const {
    return c * std::pow(t, alpha);
}

double ScheduleSet::h3(double t) const {
    return std::max(h3_main(t), h3_floor(t));
}

ScheduleSet build_schedules(double gamma, double eps, int p,
                            const RhoSchedule& rho, double t_max) {
    if (p < 0) throw ConfigError("hierarchy depth must be >= 0");
    if ((p + 2) * gamma <= 1.0)
        throw ScheduleInfeasible("(p+2) gamma <= 1: the top schedule cannot "
                                 "decay");
    if (2.0 * eps >= (p + 2) * gamma - 1.0)
        throw ScheduleInfeasible("need 2 eps < (p+2) gamma - 1");
    if (std::abs(rho.eps - eps) > 1e-12)
        throw ConfigError("schedule eps must match the rho schedule");

    H0Spec h0;
    h0.power_law = true;
    h0.gamma = gamma;
    EstimatorFuncs f(h0);
    auto grid = log_time_grid(1.0, t_max, 16);
    auto invrp = [&](double t) { return 1.0 / rho_prime_abs(rho, t); };

    ScheduleSet s;
    s.gamma = gamma;
    s.eps = eps;
    s.p = p;
    s.h0bar = {gamma == 1.0 ? 1.0 : 1.0 / (1.0 - gamma),
               gamma == 1.0 ? 0.0 : 1.0 - gamma};

    // saturated power-law shapes; the h2 shape flattens to t^{-1+eps} when
    // (p+1) gamma >= 1 (the cumulative moment stops growing)
    s.hbar1.alpha = -gamma + eps;
    s.h2.alpha = (p == 0) ? s.hbar1.alpha
                          : -std::min((p + 1) * gamma, 1.0) + eps;
    s.h3_main.alpha = s.h2.alpha + 1.0 + eps - gamma;
    s.h1.alpha = -gamma + 2.0 * eps;
    for (double a : {s.hbar1.alpha, s.h2.alpha, s.h3_main.alpha, s.h1.alpha})
        if (a >= 0.0)
            throw ScheduleInfeasible(
                "schedule exponent " + std::to_string(a) +
                " is not negative: decrease eps or increase gamma");

    // calibrate prefactors: smallest constants making each lower bound hold
    // on the grid
    auto calibrate = [&](PowerLaw& pl,
                         const std::function<double(double)>& bound) {
        double c = 0.0;
        for (double t : grid)
            c = std::max(c, bound(t) / std::pow(t, pl.alpha));
        pl.c = c;
    };
    calibrate(s.hbar1, [&](double t) {
        return invrp(t) / (t * t) * f.spec().h0bar(t);
    });
    if (p == 0) {
        s.h2 = s.hbar1;
    } else {
        calibrate(s.h2, [&](double t) {
            return std::max(invrp(t) / (t * t) * f.N(p, t), f.Q(p, t));
        });
    }
    calibrate(s.h3_main, [&](double t) {
        return std::pow(t, -gamma) * invrp(t) * s.h2(t);
    });
    s.h3_floor = s.hbar1;  // C = 1
    calibrate(s.h1, [&](double t) {
        return invrp(t) / (t * t) * s.h3(t) / s.h2(t);
    });

    // re-verify every constraint pointwise
    for (double t : grid) {
        const double slack = 1.0 + 1e-9;
        const bool ok =
            s.hbar1(t) * slack >= invrp(t) / (t * t) * f.spec().h0bar(t) &&
            s.h2(t) * slack >= invrp(t) / (t * t) * f.N(p, t) &&
            (p == 0 || s.h2(t) * slack >= f.Q(p, t)) &&
            s.h3(t) * slack >= std::pow(t, -gamma) * invrp(t) * s.h2(t) &&
            s.h1(t) * slack >= invrp(t) / (t * t) * s.h3(t) / s.h2(t) &&
            s.h3(t) * slack >= s.hbar1(t);
        if (!ok)
            throw ScheduleInfeasible("constraint violated at t = " +
                                     std::to_string(t));
    }
    return s;
}

}  // namespace gevreylab
