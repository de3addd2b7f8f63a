#include "gevreylab/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gevreylab/errors.hpp"
#include "gevreylab/quadrature.hpp"

namespace gevreylab {

namespace {

// tail fit window: the last decade of the grid
constexpr double kTailResidualMax = 0.01;

}  // namespace

// --- TimeFactor ---------------------------------------------------------

TimeFactor TimeFactor::sample(const std::function<double(double)>& fn,
                              double t_end, int per_decade) {
    if (t_end <= 1.0) throw ConfigError("TimeFactor: t_end must exceed 1");
    if (per_decade < 8) throw ConfigError("TimeFactor: per_decade too small");
    TimeFactor f;
    const double span = std::log10(t_end);
    const long n = std::max(2L, std::lround(span * per_decade)) + 1;
    f.nodes_.resize(n);
    f.v_.resize(n);
    f.dlog_ = std::log(t_end) / double(n - 1);
    for (long i = 0; i < n; ++i) {
        f.nodes_[i] = (i == 0) ? 1.0
                               : (i == n - 1) ? t_end
                                              : std::exp(f.dlog_ * double(i));
        f.v_[i] = fn(f.nodes_[i]);
    }
    f.fit_tail();
    return f;
}

void TimeFactor::fit_tail() {
    // least squares of log|v| vs log t over the last decade of nodes
    const long n = long(nodes_.size());
    long i0 = n - 1;
    while (i0 > 0 && nodes_[i0 - 1] > nodes_.back() / 10.0) --i0;
    double vmax = 0.0;
    for (long i = i0; i < n; ++i) vmax = std::max(vmax, std::abs(v_[i]));
    if (vmax == 0.0) {
        tail_sign_ = 0.0;
        tail_logc_ = 0.0;
        tail_alpha_ = 0.0;
        tail_residual_ = 0.0;
        return;
    }
    const double sign = v_.back() >= 0.0 ? 1.0 : -1.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    long m = 0;
    bool mixed = false;
    for (long i = i0; i < n; ++i) {
        if (sign * v_[i] <= 0.0) {
            mixed = true;
            continue;
        }
        const double x = std::log(nodes_[i]);
        const double y = std::log(sign * v_[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m < 4 || mixed) {
        // no consistent sign near the end: flag via a large residual so
        // cumulative_to_inf reports the failure, keep a flat continuation
        tail_sign_ = sign;
        tail_logc_ = std::log(vmax);
        tail_alpha_ = 0.0;
        tail_residual_ = 1.0;
        return;
    }
    const double det = double(m) * sxx - sx * sx;
    tail_alpha_ = (double(m) * sxy - sx * sy) / det;
    tail_logc_ = (sy - tail_alpha_ * sx) / double(m);
    tail_sign_ = sign;
    double rss = 0.0;
    for (long i = i0; i < n; ++i) {
        if (sign * v_[i] <= 0.0) continue;
        const double r = std::log(sign * v_[i]) - tail_logc_ -
                         tail_alpha_ * std::log(nodes_[i]);
        rss += r * r;
    }
    tail_residual_ = std::sqrt(rss / double(m));
}

double TimeFactor::interp(double t) const {
    const long n = long(nodes_.size());
    const double s = std::log(t);
    long i = long(std::floor(s / dlog_));
    // center a 4-point Lagrange stencil on the containing interval
    i = std::clamp(i - 1, 0L, n - 4);
    const double x = s / dlog_ - double(i);  // in stencil coordinates
    const double c0 = -(x - 1.0) * (x - 2.0) * (x - 3.0) / 6.0;
    const double c1 = x * (x - 2.0) * (x - 3.0) / 2.0;
    const double c2 = -x * (x - 1.0) * (x - 3.0) / 2.0;
    const double c3 = x * (x - 1.0) * (x - 2.0) / 6.0;
    return c0 * v_[i] + c1 * v_[i + 1] + c2 * v_[i + 2] + c3 * v_[i + 3];
}

double TimeFactor::operator()(double t) const {
    if (t < 1.0) throw ConfigError("TimeFactor: t must be >= 1");
    if (t > nodes_.back())
        return tail_sign_ * std::exp(tail_logc_ + tail_alpha_ * std::log(t));
    return interp(t);
}

TimeFactor TimeFactor::cumulative_from_start() const {
    TimeFactor f;
    f.nodes_ = nodes_;
    f.dlog_ = dlog_;
    const long n = long(nodes_.size());
    f.v_.assign(n, 0.0);
    for (long i = 0; i + 1 < n; ++i) {
        // Simpson in s = log t of v(e^s) e^s, midpoint by interpolation
        const double s0 = dlog_ * double(i), s1 = dlog_ * double(i + 1);
        const double sm = 0.5 * (s0 + s1);
        const double tm = std::exp(sm);
        const double g0v = v_[i] * nodes_[i];
        const double g1v = v_[i + 1] * nodes_[i + 1];
        const double gm = interp(tm) * tm;
        f.v_[i + 1] = f.v_[i] + dlog_ / 6.0 * (g0v + 4.0 * gm + g1v);
    }
    f.fit_tail();
    return f;
}

TimeFactor TimeFactor::cumulative_to_inf() const {
    if (tail_sign_ != 0.0) {
        if (tail_residual_ > kTailResidualMax)
            throw TailFitFailure("tail is not a clean power law (residual " +
                                 std::to_string(tail_residual_) + ")");
        if (tail_alpha_ >= -1.0)
            throw DivergentIntegral("tail exponent " +
                                    std::to_string(tail_alpha_) +
                                    " is not integrable at infinity");
    }
    TimeFactor f;
    f.nodes_ = nodes_;
    f.dlog_ = dlog_;
    const long n = long(nodes_.size());
    f.v_.assign(n, 0.0);
    // int_{t_end}^inf c t^alpha dt = -c t_end^{alpha+1} / (alpha+1)
    f.v_[n - 1] = tail_sign_ == 0.0
                      ? 0.0
                      : tail_sign_ *
                            std::exp(tail_logc_ +
                                     (tail_alpha_ + 1.0) *
                                         std::log(nodes_.back())) /
                            -(tail_alpha_ + 1.0);
    for (long i = n - 2; i >= 0; --i) {
        const double s0 = dlog_ * double(i), s1 = dlog_ * double(i + 1);
        const double sm = 0.5 * (s0 + s1);
        const double tm = std::exp(sm);
        const double g0v = v_[i] * nodes_[i];
        const double g1v = v_[i + 1] * nodes_[i + 1];
        const double gm = interp(tm) * tm;
        f.v_[i] = f.v_[i + 1] + dlog_ / 6.0 * (g0v + 4.0 * gm + g1v);
    }
    f.fit_tail();
    return f;
}

TimeFactor TimeFactor::scaled(double c) const {
    TimeFactor f = *this;
    for (auto& v : f.v_) v *= c;
    if (c == 0.0) {
        f.tail_sign_ = 0.0;
        f.tail_logc_ = 0.0;
        f.tail_alpha_ = 0.0;
        f.tail_residual_ = 0.0;
    } else {
        f.tail_sign_ *= (c > 0.0 ? 1.0 : -1.0);
        f.tail_logc_ += std::log(std::abs(c));
    }
    return f;
}

TimeFactor TimeFactor::multiplied(
    const std::function<double(double)>& fn) const {
    TimeFactor f = *this;
    for (size_t i = 0; i < f.v_.size(); ++i) f.v_[i] *= fn(f.nodes_[i]);
    f.fit_tail();
    return f;
}

TimeFactor operator*(const TimeFactor& a, const TimeFactor& b) {
    if (a.nodes_.size() != b.nodes_.size() ||
        std::abs(a.nodes_.back() - b.nodes_.back()) >
            1e-9 * a.nodes_.back())
        throw ConfigError("TimeFactor: product requires matching grids");
    TimeFactor f = a;
    for (size_t i = 0; i < f.v_.size(); ++i) f.v_[i] *= b.v_[i];
    f.fit_tail();
    return f;
}

// --- hierarchy construction ---------------------------------------------

namespace {

void prune(Level& level) {
    std::erase_if(level, [](const SeparableTerm& term) {
        double vmax = 0.0;
        for (double v : term.tau.values()) vmax = std::max(vmax, std::abs(v));
        return vmax == 0.0 || l2_norm(term.field) == 0.0;
    });
}

SpectralField eval_level(const Level& level, const Grid& g, double t,
                         bool real) {
    SpectralField out = SpectralField::zero(g, real);
    for (const auto& term : level) {
        const double c = term.tau(t);
        if (c == 0.0) continue;
        out = add(out, scale(term.field, c));
    }
    out.reality_flag = real;
    return out;
}

}  // namespace

SpectralField AsymptoticHierarchy::eval_w(int m, double t) const {
    return eval_level(w_levels.at(m), grid, t, false);
}

SpectralField AsymptoticHierarchy::eval_phi(int m, double t) const {
    return eval_level(phi_levels.at(m), grid, t, true);
}

AsymptoticHierarchy solve_hierarchy(const SpectralField& w_plus, int p,
                                    double gamma, double kappa, double mu,
                                    const std::vector<double>& time_grid,
                                    double t_max, double k, bool with_phi_top,
                                    int per_decade) {
    if (p < 0) throw ConfigError("solve_hierarchy: p must be >= 0");
    if (gamma <= 0.0 || gamma > 1.0)
        throw ConfigError("solve_hierarchy: gamma must lie in (0, 1]");
    if (time_grid.empty() || time_grid.front() < 1.0 ||
        !std::is_sorted(time_grid.begin(), time_grid.end()))
        throw ConfigError("solve_hierarchy: time grid must be sorted, >= 1");
    AsymptoticHierarchy h;
    h.p = p;
    h.gamma = gamma;
    h.kappa = kappa;
    h.mu = mu;
    h.k = k;
    h.grid = w_plus.grid;
    h.time_grid = time_grid;
    const double lb = h.lambda_bar();
    if (k <= h.grid.n / 2.0)
        throw ConfigError("solve_hierarchy: k must exceed n/2");
    if (k < (p + 2) * lb - 1.0)
        throw ConfigError("solve_hierarchy: k must be >= (p+2) max(mu-n+2,1) - 1");
    if (with_phi_top && (p + 2) * gamma <= 1.0)
        throw ConfigError(
            "solve_hierarchy: anchoring the top phase at infinity needs "
            "(p+2) gamma > 1");
    // Sample the time factors far past the requested horizon: the hierarchy
    // integrands approach their limiting power laws only slowly (relative
    // corrections ~ t^{-(1-gamma)}), and the tail fit must see the clean
    // power regime.
    const double t_end = std::max(1e14, std::max(t_max, time_grid.back()));

    const auto one = TimeFactor::sample([](double) { return 1.0; }, t_end,
                                        per_decade);
    const auto t_mg =
        TimeFactor::sample([gamma](double t) { return std::pow(t, -gamma); },
                           t_end, per_decade);

    h.w_levels.resize(p + 2);
    h.phi_levels.resize(with_phi_top ? p + 2 : p + 1);
    h.has_phi_top = with_phi_top;

    // base level: the amplitude is the datum itself, the phase solves
    // phase' = t^{-gamma} g0(w+, w+) from zero at t = 1
    h.w_levels[0].push_back({one, w_plus});
    h.phi_levels[0].push_back(
        {t_mg.cumulative_from_start(), g0(w_plus, w_plus, kappa, mu)});
    prune(h.phi_levels[0]);

    const auto half_inv_t2 = [](double t) { return 0.5 / (t * t); };

    for (int m = 0; m <= p; ++m) {
        // amplitude level m+1: one term per (phase_j term, w_{m-j} term)
        // pair, integrated back from infinity
        Level& wl = h.w_levels[m + 1];
        for (int j = 0; j <= m; ++j) {
            for (const auto& tp : h.phi_levels[j]) {
                for (const auto& tw : h.w_levels[m - j]) {
                    SeparableTerm term;
                    term.field =
                        add(scale(dot_gradients(tp.field, tw.field), 2.0),
                            product(laplacian(tp.field), tw.field));
                    term.tau = (tp.tau * tw.tau)
                                   .multiplied(half_inv_t2)
                                   .cumulative_to_inf()
                                   .scaled(-1.0);
                    wl.push_back(std::move(term));
                }
            }
        }
        prune(wl);

        // phase level m+1: gradient pairs plus the coupling pairs (which
        // reach the amplitude level just built)
        if (m + 1 > p && !with_phi_top) break;
        Level rhs;
        for (int j = 0; j <= m; ++j) {
            for (const auto& ta : h.phi_levels[j]) {
                for (const auto& tb : h.phi_levels[m - j]) {
                    rhs.push_back({(ta.tau * tb.tau).multiplied(half_inv_t2),
                                   dot_gradients(ta.field, tb.field)});
                }
            }
        }
        for (int j = 0; j <= m + 1; ++j) {
            for (const auto& ta : h.w_levels[j]) {
                for (const auto& tb : h.w_levels[m + 1 - j]) {
                    rhs.push_back({(ta.tau * tb.tau).multiplied(
                                       [gamma](double t) {
                                           return std::pow(t, -gamma);
                                       }),
                                   g0(ta.field, tb.field, kappa, mu)});
                }
            }
        }
        prune(rhs);
        Level& pl = h.phi_levels[m + 1];
        for (const auto& term : rhs) {
            SeparableTerm out;
            out.field = term.field;
            out.tau = (m + 1 <= p) ? term.tau.cumulative_from_start()
                                   : term.tau.cumulative_to_inf().scaled(-1.0);
            pl.push_back(std::move(out));
        }
    }

    h.w_traj.resize(h.w_levels.size());
    for (size_t m = 0; m < h.w_levels.size(); ++m)
        for (double t : time_grid) h.w_traj[m].push_back(h.eval_w(int(m), t));
    h.phi_traj.resize(h.phi_levels.size());
    for (size_t m = 0; m < h.phi_levels.size(); ++m)
        for (double t : time_grid)
            h.phi_traj[m].push_back(h.eval_phi(int(m), t));
    return h;
}

std::pair<std::vector<SpectralField>, std::vector<SpectralField>>
partial_sums(const AsymptoticHierarchy& h, int m) {
    if (m < 0 || size_t(m) >= h.w_levels.size() ||
        size_t(m) >= h.phi_levels.size() + 1)
        throw ConfigError("partial_sums: level out of range");
    std::vector<SpectralField> w_sum, phi_sum;
    for (size_t it = 0; it < h.time_grid.size(); ++it) {
        SpectralField ws = h.w_traj[0][it];
        SpectralField ps = h.phi_traj[0][it];
        for (int j = 1; j <= m; ++j) {
            ws = add(ws, h.w_traj[j][it]);
            if (size_t(j) < h.phi_traj.size())
                ps = add(ps, h.phi_traj[j][it]);
        }
        ps.reality_flag = true;
        w_sum.push_back(std::move(ws));
        phi_sum.push_back(std::move(ps));
    }
    return {std::move(w_sum), std::move(phi_sum)};
}

DecayReport verify_decay(const AsymptoticHierarchy& h,
                         const EstimatorTable& table,
                         const NormSpec& norm_spec) {
    if (table.t.size() != h.time_grid.size())
        throw ConfigError("verify_decay: time grids differ in size");
    for (size_t i = 0; i < table.t.size(); ++i)
        if (std::abs(table.t[i] - h.time_grid[i]) > 1e-9 * h.time_grid[i])
            throw ConfigError("verify_decay: time grids do not match");

    DecayReport report;
    const auto add_row = [&report](const std::string& quantity, int m,
                                   const std::vector<double>& ratios) {
        DecayRow row{quantity, m, 0.0, 0.0, 0.0};
        bool any = false;
        for (double r : ratios) {
            if (!any) {
                row.ratio_min = row.ratio_max = r;
                any = true;
            } else {
                row.ratio_min = std::min(row.ratio_min, r);
                row.ratio_max = std::max(row.ratio_max, r);
            }
        }
        if (any && row.ratio_min > 0.0)
            row.drift = row.ratio_max / row.ratio_min - 1.0;
        report.rows.push_back(row);
    };

    for (int m = 0; m + 1 < int(h.w_levels.size()); ++m) {
        if (size_t(m) >= table.Q.size()) break;
        NormSpec spec = norm_spec;
        spec.k = h.k_m(m + 1);
        std::vector<double> ratios;
        for (size_t it = 0; it < h.time_grid.size(); ++it) {
            const double den = table.Q[m][it];
            if (den <= 0.0) continue;
            ratios.push_back(k_norm(h.w_traj[m + 1][it], spec) / den);
        }
        add_row("w", m + 1, ratios);
    }
    const int n_phi_reg = h.has_phi_top ? int(h.phi_levels.size()) - 1
                                        : int(h.phi_levels.size());
    for (int m = 0; m < n_phi_reg; ++m) {
        if (size_t(m) >= table.N.size()) break;
        NormSpec spec = norm_spec;
        spec.ell = h.ell_m(m);
        std::vector<double> ratios;
        for (size_t it = 0; it < h.time_grid.size(); ++it) {
            const double den = table.N[m][it];
            if (den <= 0.0) continue;
            ratios.push_back(y_norm(h.phi_traj[m][it], spec) / den);
        }
        add_row("phi", m, ratios);
    }
    if (h.has_phi_top) {
        const int top = int(h.phi_levels.size()) - 1;
        if (size_t(h.p) < table.P.size() && table.p_is_finite[h.p]) {
            NormSpec spec = norm_spec;
            spec.ell = h.ell_m(top);
            std::vector<double> ratios;
            for (size_t it = 0; it < h.time_grid.size(); ++it) {
                const double den = table.P[h.p][it];
                if (den <= 0.0) continue;
                ratios.push_back(y_norm(h.phi_traj[top][it], spec) / den);
            }
            add_row("phi-top", top, ratios);
        }
    }
    return report;
}

SpectralField apply_phase(const SpectralField& w, const SpectralField& omega) {
    if (!(w.grid == omega.grid))
        throw ConfigError("apply_phase: grids must match");
    if (l2_norm(omega) == 0.0) return w;
    auto wx = to_real_space(w);
    const auto ox = to_real_space(omega);
    for (size_t i = 0; i < wx.size(); ++i)
        wx[i] *= std::exp(cplx(0.0, ox[i].real()));
    return from_real_space(w.grid, wx, false);
}

GaugeShiftResult gauge_shift_check(const SpectralField& w_plus,
                                   const SpectralField& omega, int p,
                                   double gamma, double kappa, double mu,
                                   const std::vector<double>& time_grid,
                                   double t_max, double k, bool with_phi_top) {
    const auto base = solve_hierarchy(w_plus, p, gamma, kappa, mu, time_grid,
                                      t_max, k, with_phi_top);
    const auto shifted =
        solve_hierarchy(apply_phase(w_plus, omega), p, gamma, kappa, mu,
                        time_grid, t_max, k, with_phi_top);
    GaugeShiftResult result;
    const auto level_dev = [](const std::vector<SpectralField>& a,
                              const std::vector<SpectralField>& b) {
        double scale_ref = 0.0;
        for (const auto& u : a) scale_ref = std::max(scale_ref, l2_norm(u));
        for (const auto& u : b) scale_ref = std::max(scale_ref, l2_norm(u));
        if (scale_ref == 0.0) return 0.0;
        double dev = 0.0;
        for (size_t i = 0; i < a.size(); ++i)
            dev = std::max(dev, l2_norm(sub(a[i], b[i])) / scale_ref);
        return dev;
    };
    for (size_t m = 0; m < base.phi_traj.size(); ++m)
        result.max_phi_rel_dev =
            std::max(result.max_phi_rel_dev,
                     level_dev(base.phi_traj[m], shifted.phi_traj[m]));
    for (size_t m = 0; m < base.w_traj.size(); ++m)
        result.max_w_rel_dev = std::max(
            result.max_w_rel_dev, level_dev(base.w_traj[m], shifted.w_traj[m]));
    return result;
}

std::string hierarchy_norms_csv(const AsymptoticHierarchy& h,
                                const NormSpec& norm_spec) {
    std::ostringstream out;
    out.precision(16);
    out << "t";
    for (size_t m = 0; m < h.w_levels.size(); ++m) out << ",w_" << m;
    for (size_t m = 0; m < h.phi_levels.size(); ++m) out << ",phi_" << m;
    out << "\n";
    for (size_t it = 0; it < h.time_grid.size(); ++it) {
        out << h.time_grid[it];
        for (size_t m = 0; m < h.w_levels.size(); ++m) {
            NormSpec spec = norm_spec;
            spec.k = h.k_m(int(m));
            out << "," << k_norm(h.w_traj[m][it], spec);
        }
        for (size_t m = 0; m < h.phi_levels.size(); ++m) {
            NormSpec spec = norm_spec;
            spec.ell = h.ell_m(int(m));
            out << "," << y_norm(h.phi_traj[m][it], spec);
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace gevreylab
