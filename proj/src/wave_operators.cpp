#include "gevreylab/wave_operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gevreylab/errors.hpp"
#include "nlohmann/json.hpp"

namespace gevreylab {

namespace {

double sup_abs(const SpectralField& u) {
    double m = 0.0;
    for (const auto& s : to_real_space(u)) m = std::max(m, std::abs(s));
    return m;
}

/// least-squares slope of log|y| vs log t (zero rows are skipped)
double loglog_slope(const std::vector<double>& t,
                    const std::vector<double>& y) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    size_t n = 0;
    for (size_t i = 0; i < t.size(); ++i) {
        if (y[i] <= 0.0) continue;
        const double lx = std::log(t[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return 0.0;
    const double denom = n * sxx - sx * sx;
    return denom == 0.0 ? 0.0 : (n * sxy - sx * sy) / denom;
}

/// phi evaluated at x/t: the resampling core of the dilation, without the
/// unitary prefactor or the mass gate (a pointwise phase need not be
/// L2-localized in the box)
SpectralField resample_at_x_over_t(const SpectralField& phi, double t) {
    return from_real_space(phi.grid, scaled_synthesis(phi, 1.0 / t),
                           phi.reality_flag);
}

SpectralField md_of(const SpectralField& f, double t) {
    return apply_MDU(apply_MDU(f, t, MDUOp::D), t, MDUOp::M);
}

/// D(t) f (inverse = true gives D(t)^{-1} f) via the resampling core,
/// without the mass gate: evolved amplitudes carry an interaction-generated
/// algebraic far field whose clipped mass (~1e-7 relative) would trip the
/// strict gate, which is irrelevant for a consistency diagnostic at 1e-6
SpectralField dilate_permissive(const SpectralField& f, double t,
                                bool inverse = false) {
    const double half = 0.5 * f.grid.n;
    const double sgn = inverse ? 1.0 : -1.0;
    const cplx pref =
        std::pow(t, sgn * half) * std::exp(cplx(0.0, sgn * M_PI * half / 2));
    auto s = scaled_synthesis(f, inverse ? t : 1.0 / t);
    for (auto& v : s) v *= pref;
    return from_real_space(f.grid, s);
}

}  // namespace

double h1_shape(double t, double gamma, double eps) {
    return std::pow(t, -gamma + 2.0 * eps);
}

double h2_shape(double t, double gamma, int p, double eps) {
    return std::pow(t, -(p + 1) * gamma + eps);
}

double h3_shape(double t, double gamma, int p, double eps) {
    return std::pow(t, 1.0 - (p + 2) * gamma + 2.0 * eps);
}

SpectralField fourier_map(const SpectralField& u) {
    // F = D(1)* M(1)* U(1) M(1)*, applied right to left
    SpectralField v = apply_MDU(u, 1.0, MDUOp::Minv);
    v = apply_MDU(v, 1.0, MDUOp::U);
    v = apply_MDU(v, 1.0, MDUOp::Minv);
    return apply_MDU(v, 1.0, MDUOp::Dinv);
}

SpectralField fourier_map_inverse(const SpectralField& u) {
    // F^{-1} = M(1) U(1)* M(1) D(1)
    SpectralField v = apply_MDU(u, 1.0, MDUOp::D);
    v = apply_MDU(v, 1.0, MDUOp::M);
    v = apply_MDU(v, 1.0, MDUOp::Uinv);
    return apply_MDU(v, 1.0, MDUOp::M);
}

SpectralField lambda_map(const SpectralField& w, const SpectralField& phi,
                         double t) {
    return md_of(apply_phase(w, scale(phi, -1.0)), t);
}

void LadderConfig::validate() const {
    if (p < 0) throw ConfigError("ladder needs p >= 0");
    if (T < 1.0) throw ConfigError("ladder needs T >= 1");
    if (rungs < 2) throw ConfigError("ladder needs at least two rungs");
    if (eps <= 0.0) throw ConfigError("ladder needs eps > 0");
    if ((p + 2) * params.gamma <= 1.0)
        throw ConfigError("ladder shapes need (p+2) gamma > 1");
    solver.validate();
}

Omega0Result omega0(const SpectralField& w_plus, const SpectralField& psi_plus,
                    const LadderConfig& config) {
    config.validate();
    Omega0Result result;
    LadderCertificate& cert = result.certificate;

    CauchyRun prev;
    for (int j = 1; j <= config.rungs; ++j) {
        const double t0 = config.T * std::pow(2.0, j);
        std::vector<double> te;
        for (double t : config.t_eval)
            if (t >= config.T && t <= t0) te.push_back(t);
        CauchyRun run = cauchy_from_t0(w_plus, psi_plus, config.p, t0,
                                       config.T, config.solver, config.params,
                                       {}, {}, te);
        if (j > 1) {
            const size_t ia = prev.trajectory.index_of(config.T);
            const size_t ib = run.trajectory.index_of(config.T);
            cert.w_diff.push_back(l2_norm(
                sub(prev.trajectory.w[ia], run.trajectory.w[ib])));
            cert.phi_diff.push_back(l2_norm(
                sub(prev.trajectory.phi[ia], run.trajectory.phi[ib])));
            const double h3 = h3_shape(cert.t0.back(), config.params.gamma,
                                       config.p, config.eps);
            cert.h3_ref.push_back(h3);
            cert.ratio.push_back(
                (cert.w_diff.back() + cert.phi_diff.back()) / h3);
        }
        cert.t0.push_back(t0);
        prev = std::move(run);
    }

    cert.accepted = true;
    for (size_t j = 0; j + 1 < cert.t0.size(); ++j)
        if (cert.w_diff[j] + cert.phi_diff[j] > 10.0 * cert.h3_ref[j])
            cert.accepted = false;
    if (!cert.accepted)
        throw NotConverged(
            "t0-ladder differences exceed 10 h3(t0); worst ratio " +
            std::to_string(
                *std::max_element(cert.ratio.begin(), cert.ratio.end())));

    result.run = std::move(prev);
    return result;
}

SpectralField OmegaResult::u_at(size_t i) const {
    const Trajectory& traj = aux.run.trajectory;
    return lambda_map(traj.w[i], traj.phi[i], traj.times[i]);
}

OmegaResult omega(const SpectralField& u_plus, const LadderConfig& config) {
    OmegaResult result;
    result.w_plus = fourier_map(u_plus);
    result.aux = omega0(result.w_plus,
                        SpectralField::zero(u_plus.grid, /*real=*/true),
                        config);
    return result;
}

GaugeComparison gauge_equivalent(const Trajectory& a, const Trajectory& b,
                                 const std::vector<double>& t_set,
                                 double tol) {
    GaugeComparison out;
    for (double t : t_set) {
        const size_t ia = a.index_of(t), ib = b.index_of(t);
        const SpectralField va = apply_phase(a.w[ia], scale(a.phi[ia], -1.0));
        const SpectralField vb = apply_phase(b.w[ib], scale(b.phi[ib], -1.0));
        out.max_deviation = std::max(out.max_deviation, l2_norm(sub(va, vb)));
    }
    out.equivalent = out.max_deviation <= tol;
    return out;
}

ShapeReport check_asymptotic_estimate(const OmegaResult& result,
                                      const LadderConfig& config,
                                      const NormSpec& spec, double eps_beta) {
    const Trajectory& traj = result.aux.run.trajectory;
    const AsymptoticHierarchy& h = result.aux.run.hierarchy;
    const int n = traj.w.empty() ? 1 : traj.w.front().grid.n;
    const double gamma = config.params.gamma;

    // rows at the requested recording times (all recorded times otherwise)
    std::vector<size_t> rows;
    if (config.t_eval.empty()) {
        rows.resize(traj.times.size());
        for (size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    } else {
        const auto [lo, hi] = std::minmax_element(traj.times.begin(),
                                                  traj.times.end());
        for (double t : config.t_eval)
            if (t >= *lo && t <= *hi) rows.push_back(traj.index_of(t));
    }
    std::sort(rows.begin(), rows.end(), [&](size_t a, size_t b) {
        return traj.times[a] < traj.times[b];
    });

    auto beta_of = [&](double delta_r, bool r_infinite) {
        const double nu = spec.weight.nu;
        if (!r_infinite || spec.k > 0.5 * n)
            return std::max(delta_r - spec.k, 0.0) / nu;
        return (0.5 * n - spec.k + eps_beta) / nu;
    };
    const double beta2 = beta_of(0.0, false);
    const double betainf = beta_of(0.5 * n, true);
    const double rho = spec.weight.rho;

    ShapeReport report;
    report.reference_slope = 1.0 - (config.p + 2) * gamma + 2.0 * config.eps;

    std::vector<double> fit_t, fit_y;
    for (size_t i : rows) {
        const double t = traj.times[i];
        SpectralField phi_p = h.eval_phi(0, t);
        for (int m = 1; m <= config.p; ++m)
            phi_p = add(phi_p, h.eval_phi(m, t));

        // D* M* [e^{i phi_p(x/t)} u - M D w_plus] = e^{i(phi_p-phi)} w - w_+
        const SpectralField wdiff = sub(
            apply_phase(traj.w[i], sub(phi_p, traj.phi[i])), result.w_plus);
        const double lhs_w = k_norm(wdiff, spec, /*use_bracket=*/true);
        const double h3 = h3_shape(t, gamma, config.p, config.eps);
        report.weighted.push_back({t, lhs_w, h3, lhs_w / h3});
        fit_t.push_back(t);
        fit_y.push_back(lhs_w);

        // u - e^{-i phi_p(x/t)} M D w_plus = M D [e^{-i phi} w
        // - e^{-i phi_p} w_plus]; M D is unitary in L2 and scales the sup
        // norm by t^{-n/2}
        const SpectralField d =
            sub(apply_phase(traj.w[i], scale(traj.phi[i], -1.0)),
                apply_phase(result.w_plus, scale(phi_p, -1.0)));
        const double lhs2 = l2_norm(d);
        const double lhsinf = std::pow(t, -0.5 * n) * sup_abs(d);
        const double ref2 = std::pow(rho, -beta2) * h3;
        const double refinf = std::pow(rho, -betainf) *
                              std::pow(t, -0.5 * n) * h3;
        report.lr2.push_back({t, lhs2, ref2, lhs2 / ref2});
        report.lrinf.push_back({t, lhsinf, refinf, lhsinf / refinf});
    }
    report.fitted_slope = loglog_slope(fit_t, fit_y);

    // direct u-side evaluation, at the earliest trajectory time: phi_p
    // resampled at x/t through the dilation machinery, then the J-weighted
    // norm taken on the u side. Small t keeps the region the inverse
    // dilation reads outside the box (|x| > half_width / t) negligible
    {
        const size_t i = static_cast<size_t>(
            std::min_element(traj.times.begin(), traj.times.end()) -
            traj.times.begin());
        const double t = traj.times[i];
        SpectralField phi_p = h.eval_phi(0, t);
        for (int m = 1; m <= config.p; ++m)
            phi_p = add(phi_p, h.eval_phi(m, t));
        const SpectralField v_i =
            apply_phase(traj.w[i], scale(traj.phi[i], -1.0));
        const SpectralField u = apply_MDU(dilate_permissive(v_i, t), t,
                                          MDUOp::M);
        const SpectralField lhs_field =
            sub(apply_phase(u, resample_at_x_over_t(phi_p, t)),
                apply_MDU(dilate_permissive(result.w_plus, t), t, MDUOp::M));
        // <J>^k f(J) (M D v) = M D (<i grad>^k f(i grad) v): undo M and the
        // (permissive) dilation, then take the bracketed amplitude norm
        const SpectralField back = dilate_permissive(
            apply_MDU(lhs_field, t, MDUOp::Minv), t, /*inverse=*/true);
        const double lhs_u = k_norm(back, spec, /*use_bracket=*/true);
        const double lhs_w = k_norm(
            sub(apply_phase(traj.w[i], sub(phi_p, traj.phi[i])),
                result.w_plus),
            spec, /*use_bracket=*/true);
        report.dilation_check =
            std::abs(lhs_u - lhs_w) / (lhs_w > 0.0 ? lhs_w : 1.0);
    }
    return report;
}

std::string ShapeReport::to_json() const {
    nlohmann::json j;
    auto pack = [](const std::vector<EstimateRow>& rows) {
        nlohmann::json arr = nlohmann::json::object();
        std::vector<double> t, lhs, ref, ratio;
        for (const auto& r : rows) {
            t.push_back(r.t);
            lhs.push_back(r.lhs);
            ref.push_back(r.reference);
            ratio.push_back(r.ratio);
        }
        arr["t"] = t;
        arr["lhs"] = lhs;
        arr["reference"] = ref;
        arr["ratio"] = ratio;
        return arr;
    };
    j["weighted"] = pack(weighted);
    j["l2"] = pack(lr2);
    j["linf"] = pack(lrinf);
    j["fitted_slope"] = fitted_slope;
    j["reference_slope"] = reference_slope;
    j["dilation_check"] = dilation_check;
    return j.dump(2);
}

std::vector<double> cluster_times(const std::vector<double>& check_times,
                                  double delta) {
    std::vector<double> out;
    for (double t : check_times)
        for (int s = -2; s <= 2; ++s) out.push_back(t + s * delta);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<NlsResidualRow> nls_residual(
    const Trajectory& traj, const std::vector<double>& check_times,
    double delta) {
    if (delta <= 0.0) throw ConfigError("nls_residual needs delta > 0");
    std::vector<NlsResidualRow> out;
    for (double t : check_times) {
        SpectralField vprime;
        // five-point first derivative of v = e^{-i phi} w at t
        const double stencil[4] = {-2.0, -1.0, 1.0, 2.0};
        const double weight[4] = {1.0, -8.0, 8.0, -1.0};
        for (int s = 0; s < 4; ++s) {
            const size_t i = traj.index_of(t + stencil[s] * delta);
            const SpectralField v =
                apply_phase(traj.w[i], scale(traj.phi[i], -1.0));
            const SpectralField term =
                scale(v, weight[s] / (12.0 * delta));
            vprime = (s == 0) ? term : add(vprime, term);
        }
        const size_t i = traj.index_of(t);
        const SpectralField v =
            apply_phase(traj.w[i], scale(traj.phi[i], -1.0));
        SpectralField res = scale(vprime, cplx(0.0, 1.0));
        res = add(res, scale(laplacian(v), 1.0 / (2.0 * t * t)));
        const SpectralField pot =
            g0(traj.w[i], traj.w[i], traj.params.kappa, traj.params.mu);
        res = sub(res, scale(product(pot, v), std::pow(t, -traj.params.gamma)));
        out.push_back({t, l2_norm(res)});
    }
    return out;
}

}  // namespace gevreylab
