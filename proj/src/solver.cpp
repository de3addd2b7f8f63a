#include "gevreylab/solver.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gevreylab/errors.hpp"
#include "gevreylab/quadrature.hpp"
#include "nlohmann/json.hpp"

namespace gevreylab {

namespace {

// state vector for the generic embedded stepper
using State = std::vector<SpectralField>;

void accumulate(State& y, double h, const State& d) {
    for (size_t i = 0; i < y.size(); ++i)
        for (size_t j = 0; j < y[i].coeffs.size(); ++j)
            y[i].coeffs[j] += h * d[i].coeffs[j];
}

// weighted RMS of the embedded error estimate, scaled to 1 = at tolerance
double error_norm(const State& y0, const State& y1, const State& err,
                  double abs_tol, double rel_tol) {
    double sum = 0.0;
    long count = 0;
    for (size_t i = 0; i < y0.size(); ++i) {
        for (size_t j = 0; j < y0[i].coeffs.size(); ++j) {
            const double scale =
                abs_tol + rel_tol * std::max(std::abs(y0[i].coeffs[j]),
                                             std::abs(y1[i].coeffs[j]));
            const double e = std::abs(err[i].coeffs[j]) / scale;
            sum += e * e;
            ++count;
        }
    }
    return std::sqrt(sum / double(std::max(1L, count)));
}

// Zonneveld's 4(3) embedded pair (classical RK4 plus one extra stage for
// the third-order comparison solution)
struct Tableau {
    int stages;
    double c[5];
    double a[5][5];
    double b[5];      // higher order
    double b_err[5];  // b - b_hat
    int order;
};

const Tableau& tableau_43() {
    static const Tableau t = {
        5,
        {0.0, 0.5, 0.5, 1.0, 0.75},
        {{0, 0, 0, 0, 0},
         {0.5, 0, 0, 0, 0},
         {0.0, 0.5, 0, 0, 0},
         {0.0, 0.0, 1.0, 0, 0},
         {5.0 / 32, 7.0 / 32, 13.0 / 32, -1.0 / 32, 0}},
        {1.0 / 6, 1.0 / 3, 1.0 / 3, 1.0 / 6, 0.0},
        {1.0 / 6 + 0.5, 1.0 / 3 - 7.0 / 3, 1.0 / 3 - 7.0 / 3,
         1.0 / 6 - 13.0 / 6, 16.0 / 3},
        4};
    return t;
}

// Heun's method with the Euler line as the embedded comparison
const Tableau& tableau_21() {
    static const Tableau t = {2,
                              {0.0, 1.0},
                              {{0, 0}, {1.0, 0}},
                              {0.5, 0.5, 0, 0, 0},
                              {0.5 - 1.0, 0.5, 0, 0, 0},
                              2};
    return t;
}

struct StepRecorder {
    std::function<void(double, const State&)> on_accept;
};

// Generic adaptive integration of dy/dt = f(t, y) from t0 to t1 (either
// direction), clipping steps to hit every target in t_eval exactly.
void adaptive_integrate(const std::function<State(double, const State&)>& f,
                        double t0, double t1, State y,
                        const SolverConfig& config,
                        const std::vector<double>& t_eval,
                        const StepRecorder& rec) {
    const Tableau& tb =
        config.stepper_order == 2 ? tableau_21() : tableau_43();
    const double dir = t1 >= t0 ? 1.0 : -1.0;
    std::vector<double> targets = t_eval;
    std::sort(targets.begin(), targets.end());
    if (dir < 0) std::reverse(targets.begin(), targets.end());
    size_t next_target = 0;
    const auto skip_passed = [&](double t) {
        while (next_target < targets.size() &&
               dir * (targets[next_target] - t) <= 1e-12 * std::abs(t))
            ++next_target;
    };

    double t = t0;
    rec.on_accept(t, y);
    skip_passed(t);
    double h = dir * std::abs(t1 - t0) / 100.0;
    if (config.max_step > 0.0)
        h = dir * std::min(std::abs(h), config.max_step);

    long total_steps = 0;
    while (dir * (t1 - t) > 1e-12 * std::max(1.0, std::abs(t))) {
        if (++total_steps > 2000000)
            throw StepFailure("step budget exhausted at t = " +
                              std::to_string(t));
        if (config.max_step > 0.0 && std::abs(h) > config.max_step)
            h = dir * config.max_step;
        if (dir * (t + h - t1) > 0.0) h = t1 - t;
        bool clipped_to_target = false;
        if (next_target < targets.size() &&
            dir * (t + h - targets[next_target]) > 0.0) {
            h = targets[next_target] - t;
            clipped_to_target = true;
        }
        if (std::abs(h) < 1e-13 * std::max(1.0, std::abs(t)))
            throw StepFailure("step size underflow at t = " +
                              std::to_string(t));

        // stages
        std::vector<State> k(tb.stages);
        k[0] = f(t, y);
        for (int s = 1; s < tb.stages; ++s) {
            State ys = y;
            for (int j = 0; j < s; ++j)
                if (tb.a[s][j] != 0.0) accumulate(ys, h * tb.a[s][j], k[j]);
            k[s] = f(t + tb.c[s] * h, ys);
        }
        State ynew = y;
        for (int s = 0; s < tb.stages; ++s)
            if (tb.b[s] != 0.0) accumulate(ynew, h * tb.b[s], k[s]);
        State err = y;
        for (auto& field : err)
            std::fill(field.coeffs.begin(), field.coeffs.end(), cplx(0.0));
        for (int s = 0; s < tb.stages; ++s)
            if (tb.b_err[s] != 0.0) accumulate(err, h * tb.b_err[s], k[s]);

        const double en =
            error_norm(y, ynew, err, config.abs_tol, config.rel_tol);
        (void)clipped_to_target;
        if (en <= 1.0) {
            t += h;
            y = std::move(ynew);
            rec.on_accept(t, y);
            skip_passed(t);
        }
        const double factor = en > 0.0
                                  ? 0.9 * std::pow(en, -1.0 / tb.order)
                                  : 5.0;
        h *= std::clamp(factor, 0.2, 5.0);
    }
}

SpectralField rotate(const SpectralField& w, double t, bool forward) {
    // forward: w~ = U(1/t) w; backward: w = U(1/t)^{-1} w~
    return apply_MDU(w, 1.0 / t, forward ? MDUOp::U : MDUOp::Uinv);
}

SpectralField lap_scaled(const SpectralField& u, double theta) {
    SpectralField out = laplacian(u);
    return scale(out, -theta);  // theta * lap = -theta |xi|^2 spectrally
}

SpectralField transport_rhs_field(const SpectralField& phi,
                                  const SpectralField& v, double t,
                                  TransportKind which) {
    if (which == TransportKind::V) {
        SpectralField out = add(scale(dot_gradients(phi, v), 2.0),
                                product(laplacian(phi), v));
        return scale(out, 0.5 / (t * t));
    }
    return scale(dot_gradients(phi, v), 1.0 / (t * t));
}

}  // namespace

void AuxState::validate() const {
    if (t < 1.0) throw ConfigError("AuxState: t must be >= 1");
    if (!(w.grid == phi.grid))
        throw ConfigError("AuxState: w and phi must share a grid");
}

void SolverConfig::validate() const {
    if (rel_tol < 1e-12 || rel_tol > 1e-4 || abs_tol < 1e-12 ||
        abs_tol > 1e-4)
        throw ConfigError("SolverConfig: tolerances must lie in [1e-12, 1e-4]");
    if (theta < 0.0) throw ConfigError("SolverConfig: theta must be >= 0");
    if (stepper_order != 2 && stepper_order != 4)
        throw ConfigError("SolverConfig: stepper order must be 2 or 4");
    if (max_step < 0.0) throw ConfigError("SolverConfig: max_step must be >= 0");
}

size_t Trajectory::index_of(double t) const {
    for (size_t i = 0; i < times.size(); ++i)
        if (std::abs(times[i] - t) <= 1e-9 * std::max(1.0, std::abs(t)))
            return i;
    throw ConfigError("trajectory does not record t = " + std::to_string(t));
}

std::pair<SpectralField, SpectralField> rhs_auxiliary(const AuxState& state,
                                                      double gamma,
                                                      double kappa,
                                                      double mu) {
    state.validate();
    const double t = state.t;
    SpectralField dw = laplacian(state.w);
    dw = scale(dw, cplx(0.0, 0.5 / (t * t)));  // i (2t^2)^{-1} lap w
    SpectralField coupling =
        add(scale(dot_gradients(state.phi, state.w), 2.0),
            product(laplacian(state.phi), state.w));
    dw = add(dw, scale(coupling, 0.5 / (t * t)));

    SpectralField dphi =
        scale(dot_gradients(state.phi, state.phi), 0.5 / (t * t));
    dphi = add(dphi, scale(g0(state.w, state.w, kappa, mu),
                           std::pow(t, -gamma)));
    dphi.reality_flag = true;
    return {std::move(dw), std::move(dphi)};
}

Trajectory integrate(const AuxState& initial, std::pair<double, double> t_span,
                     const SolverConfig& config, const AuxParams& params,
                     const std::optional<RhoSchedule>& rho_schedule,
                     const std::optional<NormSpec>& norm_spec,
                     const std::vector<double>& t_eval) {
    initial.validate();
    config.validate();
    if (std::min(t_span.first, t_span.second) < 1.0)
        throw ConfigError("integrate: t_span must stay within t >= 1");
    if (std::abs(t_span.first - initial.t) > 1e-9 * initial.t)
        throw ConfigError("integrate: t_span must start at the initial time");

    Trajectory traj;
    traj.params = params;
    traj.config = config;

    const double gamma = params.gamma, kappa = params.kappa, mu = params.mu;
    const double theta = config.theta;

    const auto f = [&](double t, const State& y) {
        const SpectralField w = rotate(y[0], t, false);
        SpectralField coupling =
            add(scale(dot_gradients(y[1], w), 2.0),
                product(laplacian(y[1]), w));
        SpectralField dwt = rotate(scale(coupling, 0.5 / (t * t)), t, true);
        SpectralField dphi =
            scale(dot_gradients(y[1], y[1]), 0.5 / (t * t));
        dphi = add(dphi, scale(g0(w, w, kappa, mu), std::pow(t, -gamma)));
        if (theta > 0.0) {
            dwt = add(dwt, lap_scaled(y[0], -theta));
            dphi = add(dphi, lap_scaled(y[1], -theta));
        }
        dphi.reality_flag = true;
        return State{std::move(dwt), std::move(dphi)};
    };

    StepRecorder rec;
    rec.on_accept = [&](double t, const State& y) {
        SpectralField w = rotate(y[0], t, false);
        SpectralField phi = y[1];
        double rho_here = norm_spec ? norm_spec->weight.rho : 0.0;
        if (rho_schedule) rho_here = rho_at(*rho_schedule, t);
        double wn, pn;
        if (norm_spec) {
            NormSpec spec = *norm_spec;
            spec.weight.rho = rho_here;
            wn = k_norm(w, spec);
            pn = y_norm(phi, spec);
        } else {
            wn = l2_norm(w);
            pn = l2_norm(phi);
        }
        if (!std::isfinite(wn) || !std::isfinite(pn) ||
            wn > config.norm_ceiling || pn > config.norm_ceiling)
            throw NormBlowup("norm ceiling exceeded at t = " +
                             std::to_string(t) + " with rho = " +
                             std::to_string(rho_here));
        traj.times.push_back(t);
        traj.w.push_back(std::move(w));
        traj.phi.push_back(std::move(phi));
        traj.w_norm.push_back(wn);
        traj.phi_norm.push_back(pn);
        traj.rho.push_back(rho_here);
    };

    State y0 = {rotate(initial.w, initial.t, true), initial.phi};
    adaptive_integrate(f, t_span.first, t_span.second, std::move(y0), config,
                       t_eval, rec);
    return traj;
}

Trajectory solve_transport(
    const std::function<SpectralField(double)>& phi_ref,
    const SpectralField& seed, double t0, std::pair<double, double> t_span,
    TransportKind which, const SolverConfig& config,
    const std::vector<double>& t_eval) {
    config.validate();
    if (std::abs(t_span.first - t0) > 1e-9 * std::max(1.0, t0))
        throw ConfigError("solve_transport: t_span must start at t0");
    Trajectory traj;
    traj.config = config;

    const auto f = [&](double t, const State& y) {
        return State{transport_rhs_field(phi_ref(t), y[0], t, which)};
    };
    StepRecorder rec;
    rec.on_accept = [&](double t, const State& y) {
        traj.times.push_back(t);
        traj.w.push_back(y[0]);
        traj.phi.push_back(SpectralField::zero(y[0].grid, true));
        traj.w_norm.push_back(l2_norm(y[0]));
        traj.phi_norm.push_back(0.0);
        traj.rho.push_back(0.0);
        if (!std::isfinite(traj.w_norm.back()) ||
            traj.w_norm.back() > config.norm_ceiling)
            throw NormBlowup("norm ceiling exceeded at t = " +
                             std::to_string(t));
    };
    adaptive_integrate(f, t_span.first, t_span.second, State{seed}, config,
                       t_eval, rec);
    return traj;
}

CauchyRun cauchy_from_t0(const SpectralField& w_plus,
                         const SpectralField& psi_plus, int p, double t0,
                         double T, const SolverConfig& config,
                         const AuxParams& params,
                         const std::optional<RhoSchedule>& rho_schedule,
                         const std::optional<NormSpec>& norm_spec,
                         const std::vector<double>& t_eval) {
    if (T < 1.0 || t0 <= T)
        throw ConfigError("cauchy_from_t0 needs 1 <= T < t0");
    std::vector<double> hgrid = log_time_grid(T, t0, 16);
    hgrid.insert(hgrid.end(), t_eval.begin(), t_eval.end());
    std::sort(hgrid.begin(), hgrid.end());
    hgrid.erase(std::unique(hgrid.begin(), hgrid.end()), hgrid.end());

    CauchyRun run{Trajectory{},
                  solve_hierarchy(w_plus, p, params.gamma, params.kappa,
                                  params.mu, hgrid, t0, params.k)};

    SpectralField w0 = run.hierarchy.eval_w(0, t0);
    SpectralField phi0 = run.hierarchy.eval_phi(0, t0);
    for (int m = 1; m <= p; ++m) {
        w0 = add(w0, run.hierarchy.eval_w(m, t0));
        phi0 = add(phi0, run.hierarchy.eval_phi(m, t0));
    }
    phi0 = add(phi0, psi_plus);
    phi0.reality_flag = true;

    AuxState data{t0, std::move(w0), std::move(phi0)};
    run.trajectory = integrate(data, {t0, T}, config, params, rho_schedule,
                               norm_spec, t_eval);
    return run;
}

namespace {

RateReport rate_report(const std::vector<double>& times,
                       const std::vector<double>& diffs) {
    RateReport report;
    report.times = times;
    report.diffs = diffs;
    // least-squares slope of log diff vs log t over the nonzero entries
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    long m = 0;
    for (size_t i = 0; i < times.size(); ++i) {
        if (diffs[i] <= 0.0) continue;
        const double x = std::log(times[i]), y = std::log(diffs[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++m;
    }
    if (m >= 2)
        report.fitted_slope =
            (double(m) * sxy - sx * sy) / (double(m) * sxx - sx * sx);
    return report;
}

std::vector<size_t> ascending_order(const std::vector<double>& times) {
    std::vector<size_t> idx(times.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(),
              [&](size_t a, size_t b) { return times[a] < times[b]; });
    return idx;
}

}  // namespace

std::pair<SpectralField, RateReport> extract_w_plus(const Trajectory& traj) {
    if (traj.times.size() < 3)
        throw ConfigError("extract_w_plus needs at least 3 recorded times");
    const auto order = ascending_order(traj.times);
    const size_t last = order.back();
    SpectralField w_plus = rotate(traj.w[last], traj.times[last], true);

    std::vector<double> times, diffs;
    for (size_t i = 0; i + 1 < order.size(); ++i) {
        const size_t j = order[i];
        times.push_back(traj.times[j]);
        diffs.push_back(
            l2_norm(sub(rotate(traj.w[j], traj.times[j], true), w_plus)));
    }
    // differences at the roundoff floor count as converged
    const double floor = 1e-12 * (1.0 + l2_norm(w_plus));
    if (diffs.back() > floor && diffs.back() >= diffs.front())
        throw NotConverged("rotated amplitude is not Cauchy along the "
                           "trajectory");
    return {std::move(w_plus), rate_report(times, diffs)};
}

std::pair<SpectralField, RateReport> extract_psi_plus(
    const Trajectory& traj, const AsymptoticHierarchy& hierarchy) {
    if (traj.times.size() < 3)
        throw ConfigError("extract_psi_plus needs at least 3 recorded times");
    const auto order = ascending_order(traj.times);
    const auto remainder = [&](size_t j) {
        SpectralField phi_p = hierarchy.eval_phi(0, traj.times[j]);
        for (int m = 1; m <= hierarchy.p; ++m)
            phi_p = add(phi_p, hierarchy.eval_phi(m, traj.times[j]));
        return sub(traj.phi[j], phi_p);
    };
    SpectralField psi_plus = remainder(order.back());
    psi_plus.reality_flag = true;

    std::vector<double> times, diffs;
    for (size_t i = 0; i + 1 < order.size(); ++i) {
        const size_t j = order[i];
        times.push_back(traj.times[j]);
        diffs.push_back(l2_norm(sub(remainder(j), psi_plus)));
    }
    const double floor = 1e-12 * (1.0 + l2_norm(psi_plus));
    if (diffs.back() > floor && diffs.back() >= diffs.front())
        throw NotConverged("phase remainder is not Cauchy along the "
                           "trajectory");
    return {std::move(psi_plus), rate_report(times, diffs)};
}

namespace {

// Fornberg finite-difference weights for the first derivative at x0 on an
// arbitrary stencil
std::vector<double> fd_weights_first(double x0,
                                     const std::vector<double>& x) {
    const int n = int(x.size());
    std::vector<std::vector<double>> c(n, std::vector<double>(2, 0.0));
    double c1 = 1.0;
    double c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        const int mn = std::min(i, 1);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int s = mn; s >= 1; --s)
                    c[i][s] =
                        c1 * (s * c[i - 1][s - 1] - c5 * c[i - 1][s]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int s = mn; s >= 1; --s)
                c[j][s] = (c4 * c[j][s] - s * c[j][s - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][1];
    return w;
}

}  // namespace

std::vector<ResidualRow> residual(const Trajectory& traj) {
    std::vector<ResidualRow> rows;
    const auto order = ascending_order(traj.times);
    const long n = long(order.size());
    if (n < 5) return rows;
    for (long i = 2; i + 2 < n; ++i) {
        std::vector<double> ts;
        for (long s = i - 2; s <= i + 2; ++s) ts.push_back(traj.times[order[s]]);
        const auto wts = fd_weights_first(ts[2], ts);

        const size_t center = order[i];
        SpectralField dw = SpectralField::zero(traj.w[center].grid);
        SpectralField dphi = SpectralField::zero(traj.w[center].grid, true);
        for (int s = 0; s < 5; ++s) {
            const size_t j = order[i - 2 + s];
            dw = add(dw, scale(traj.w[j], wts[s]));
            dphi = add(dphi, scale(traj.phi[j], wts[s]));
        }
        const AuxState state{traj.times[center], traj.w[center],
                             traj.phi[center]};
        const auto [rw, rphi] = rhs_auxiliary(state, traj.params.gamma,
                                              traj.params.kappa,
                                              traj.params.mu);
        rows.push_back({traj.times[center], l2_norm(sub(dw, rw)),
                        l2_norm(sub(dphi, rphi))});
    }
    return rows;
}

void save_trajectory(const Trajectory& traj, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["times"] = traj.times;
    manifest["w_norm"] = traj.w_norm;
    manifest["phi_norm"] = traj.phi_norm;
    manifest["rho"] = traj.rho;
    manifest["params"] = {{"gamma", traj.params.gamma},
                          {"kappa", traj.params.kappa},
                          {"mu", traj.params.mu},
                          {"k", traj.params.k}};
    std::ostringstream cfg;
    cfg << traj.config.rel_tol << ':' << traj.config.abs_tol << ':'
        << traj.config.theta << ':' << traj.config.max_step << ':'
        << traj.config.stepper_order << ':' << traj.config.norm_ceiling;
    manifest["config"] = cfg.str();
    std::ostringstream hash;
    hash << std::hex << std::hash<std::string>{}(cfg.str());
    manifest["config_hash"] = hash.str();
    std::vector<std::string> snaps;
    for (size_t i = 0; i < traj.times.size(); ++i) {
        std::ostringstream name;
        name << "snapshot_" << i;
        std::ofstream(fs::path(dir) / (name.str() + "_w.json"))
            << to_json(traj.w[i]);
        std::ofstream(fs::path(dir) / (name.str() + "_phi.json"))
            << to_json(traj.phi[i]);
        snaps.push_back(name.str());
    }
    manifest["snapshots"] = snaps;
    std::ofstream(fs::path(dir) / "manifest.json") << manifest.dump(2);
}

}  // namespace gevreylab
