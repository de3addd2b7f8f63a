#include "gevreylab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "gevreylab/errors.hpp"

namespace gevreylab {

namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1,1] (QUADPACK dqk15 constants).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

}  // namespace

double gk15_panel(const std::function<double(double)>& f, double a, double b,
                  double* err) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    const double fc = f(c);
    fv[7] = fc;
    double resk = kWgk[7] * fc, resg = kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        fv[j] = f(c - x);
        fv[14 - j] = f(c + x);
        const double fsum = fv[j] + fv[14 - j];
        resk += kWgk[j] * fsum;
        if (j % 2 == 1) resg += kWg[j / 2] * fsum;
    }
    if (err) {
        // QUADPACK-style scaled estimate: the raw Kronrod-Gauss difference
        // badly underestimates near singularities, so rescale against the
        // mean absolute deviation of f on the panel.
        const double mean = resk * 0.5;
        double resasc = kWgk[7] * std::abs(fc - mean);
        for (int j = 0; j < 7; ++j)
            resasc += kWgk[j] *
                      (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
        resasc *= std::abs(h);
        double e = std::abs((resk - resg) * h);
        if (resasc != 0.0 && e != 0.0)
            e = resasc * std::min(1.0, std::pow(200.0 * e / resasc, 1.5));
        *err = e;
    }
    return resk * h;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol) {
    if (a == b) return 0.0;
    struct Panel {
        double a, b, value, error;
        bool operator<(const Panel& o) const { return error < o.error; }
    };
    std::priority_queue<Panel> panels;
    double err0;
    double total = gk15_panel(f, a, b, &err0);
    double total_err = err0;
    panels.push({a, b, total, err0});
    const int max_panels = 4000;
    int n = 1;
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total)) &&
           n < max_panels) {
        Panel worst = panels.top();
        panels.pop();
        const double m = 0.5 * (worst.a + worst.b);
        double e1, e2;
        const double v1 = gk15_panel(f, worst.a, m, &e1);
        const double v2 = gk15_panel(f, m, worst.b, &e2);
        total += (v1 + v2) - worst.value;
        total_err += (e1 + e2) - worst.error;
        panels.push({worst.a, m, v1, e1});
        panels.push({m, worst.b, v2, e2});
        n += 1;
    }
    if (!std::isfinite(total))
        throw DivergentIntegral("non-finite adaptive quadrature result");
    return total;
}

double integrate_to_inf(const std::function<double(double)>& f, double a,
                        double abs_tol, double rel_tol) {
    if (a <= 0.0) throw DivergentIntegral("integrate_to_inf requires a > 0");
    // Decade-by-decade summation with a geometric remainder estimate. The
    // compactifying substitution t = a/u turns slow power tails into
    // endpoint singularities whose adaptive error estimates are unreliable;
    // segment sums keep them honest.
    double total = 0.0, prev = 0.0;
    double lo = a;
    bool have_prev = false;
    while (lo < 1e300) {
        const double hi = lo * 10.0;
        const double seg =
            integrate(f, lo, hi, 0.1 * abs_tol, 0.1 * rel_tol);
        total += seg;
        if (have_prev && std::abs(seg) < std::abs(prev)) {
            const double r = std::abs(seg) / std::abs(prev);
            const double rem = std::abs(seg) * r / (1.0 - r);
            const double tol_eff =
                std::max(abs_tol, rel_tol * std::abs(total));
            if (std::abs(seg) < tol_eff && rem < tol_eff) {
                total += (seg < 0.0 ? -rem : rem);
                return total;
            }
        }
        prev = seg;
        have_prev = true;
        lo = hi;
    }
    throw DivergentIntegral("tail decays too slowly past t = 1e300");
}

double PowerFit::eval(double t) const { return std::exp(log_c + alpha * std::log(t)); }

PowerFit fit_power_law(const std::function<double(double)>& f, double t_lo,
                       double t_hi, int n_pts) {
    std::vector<double> lx, ly;
    const double la = std::log(t_lo), lb = std::log(t_hi);
    for (int i = 0; i < n_pts; ++i) {
        const double lt = la + (lb - la) * i / (n_pts - 1);
        const double v = f(std::exp(lt));
        if (v == 0.0 || !std::isfinite(v)) continue;
        lx.push_back(lt);
        ly.push_back(std::log(std::abs(v)));
    }
    if (lx.size() < 3) throw TailFitFailure("too few usable samples for power fit");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(lx.size());
    for (size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double alpha = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double log_c = (sy - alpha * sx) / m;
    double rss = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (log_c + alpha * lx[i]);
        rss += r * r;
    }
    return {log_c, alpha, std::sqrt(rss / m)};
}

}  // namespace gevreylab
