#include "gevreylab/field.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>

#include <json.hpp>

#include "gevreylab/errors.hpp"
#include "gevreylab/rng.hpp"

namespace gevreylab {

namespace {

std::mutex g_fftw_mutex;  // fftw plan creation is not thread-safe

// in-place DFT of `data` in FFT storage order, sign = FFTW_FORWARD/BACKWARD
void raw_fft(const Grid& g, std::vector<cplx>& data, int sign) {
    std::vector<int> dims(g.n, g.modes);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        plan = fftw_plan_dft(g.n, dims.data(), p, p, sign, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(g_fftw_mutex);
        fftw_destroy_plan(plan);
    }
}

// parity (-1)^{sum_d k_d} of a linear storage index: k_d and its storage
// index differ by the (even) mode count, so storage parity works
double lattice_parity(const Grid& g, long idx) {
    int s = 0;
    for (int d = 0; d < g.n; ++d) {
        s += static_cast<int>(idx % g.modes);
        idx /= g.modes;
    }
    return (s % 2 == 0) ? 1.0 : -1.0;
}

long negated_index(const Grid& g, long idx) {
    long out = 0, stride = 1;
    for (int d = 0; d < g.n; ++d) {
        const long m = idx % g.modes;
        out += ((g.modes - m) % g.modes) * stride;
        stride *= g.modes;
        idx /= g.modes;
    }
    return out;
}

}  // namespace

void Grid::validate() const {
    if (n < 1 || n > 3) throw ConfigError("grid dimension must be 1, 2 or 3");
    if (modes < 16 || modes % 2 != 0)
        throw ConfigError("modes_per_dim must be an even integer >= 16");
    if (half_width <= 0.0) throw ConfigError("half_width must be positive");
    if (dxi() > 0.25)
        throw ConfigError("frequency spacing must resolve the |xi| = 1 split "
                          "(dxi <= 1/4): increase half_width");
}

Vec3 Grid::xi_at(long idx) const {
    Vec3 xi{};
    const double d = dxi();
    for (int dd = 0; dd < n; ++dd) {
        xi[dd] = freq_index(static_cast<int>(idx % modes)) * d;
        idx /= modes;
    }
    return xi;
}

double Grid::xi_norm_at(long idx) const { return pair_norm(xi_at(idx), n); }

Vec3 Grid::x_at(long idx) const {
    Vec3 x{};
    for (int dd = 0; dd < n; ++dd) {
        x[dd] = -half_width + (idx % modes) * dx();
        idx /= modes;
    }
    return x;
}

SpectralField SpectralField::zero(const Grid& g, bool real) {
    SpectralField f;
    f.grid = g;
    f.coeffs.assign(g.size(), cplx(0.0));
    f.reality_flag = real;
    return f;
}

std::vector<cplx> to_real_space(const SpectralField& u) {
    const Grid& g = u.grid;
    std::vector<cplx> data(u.coeffs);
    for (long i = 0; i < g.size(); ++i) data[i] *= lattice_parity(g, i);
    raw_fft(g, data, FFTW_BACKWARD);
    const double scale =
        std::pow(g.dxi() / std::sqrt(2.0 * M_PI), g.n);
    for (auto& v : data) v *= scale;
    return data;
}

SpectralField from_real_space(const Grid& g, const std::vector<cplx>& samples,
                              bool reality_flag) {
    if (static_cast<long>(samples.size()) != g.size())
        throw ConfigError("sample count does not match grid");
    SpectralField f;
    f.grid = g;
    f.reality_flag = reality_flag;
    f.coeffs = samples;
    raw_fft(g, f.coeffs, FFTW_FORWARD);
    const double scale = std::pow(g.dx() / std::sqrt(2.0 * M_PI), g.n);
    for (long i = 0; i < g.size(); ++i)
        f.coeffs[i] *= scale * lattice_parity(g, i);
    return f;
}

namespace {

// accumulate |c|^2 * exp(2 * log_factor) with an overflow gate
void accumulate(double& sum, const cplx& c, double log_factor) {
    const double a = std::abs(c);
    if (a == 0.0) return;
    const double lt = 2.0 * (log_factor + std::log(a));
    if (lt > 700.0)
        throw WeightOverflow("weighted norm overflows: shrink rho or the grid");
    sum += std::exp(lt);
}

}  // namespace

std::pair<double, double> k_norm_parts(const SpectralField& w,
                                       const NormSpec& spec, bool use_bracket) {
    const Grid& g = w.grid;
    const double measure = std::pow(g.dxi(), g.n);
    double hi = 0.0, lo = 0.0;
    for (long i = 0; i < g.size(); ++i) {
        const double r = g.xi_norm_at(i);
        double lf = eval_log_weight(spec.weight, r);
        if (r > 1.0) {
            lf += spec.k * (use_bracket ? 0.5 * std::log1p(r * r)
                                        : std::log(r));
            accumulate(hi, w.coeffs[i], lf);
        } else {
            accumulate(lo, w.coeffs[i], lf);
        }
    }
    return {hi * measure, lo * measure};
}

double k_norm(const SpectralField& w, const NormSpec& spec, bool use_bracket) {
    auto [hi, lo] = k_norm_parts(w, spec, use_bracket);
    return std::sqrt(hi + lo);
}

double y_norm(const SpectralField& phi, const NormSpec& spec) {
    const Grid& g = phi.grid;
    const double measure = std::pow(g.dxi(), g.n);
    double sum = 0.0;
    for (long i = 0; i < g.size(); ++i) {
        const double r = g.xi_norm_at(i);
        const double lf = eval_log_weight(spec.weight, r);
        const double p = (r > 1.0) ? spec.ell + 2.0 : spec.ell_low;
        const double lpow = (r == 0.0) ? (p == 0.0 ? 0.0 : -1e308)
                                       : p * std::log(r);
        accumulate(sum, phi.coeffs[i], lf + lpow);
    }
    return std::sqrt(sum * measure);
}

double l2_norm(const SpectralField& u) {
    double sum = 0.0;
    for (const auto& c : u.coeffs) sum += std::norm(c);
    return std::sqrt(sum * std::pow(u.grid.dxi(), u.grid.n));
}

cplx inner_product(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid == b.grid)) throw ConfigError("grid mismatch");
    cplx sum = 0.0;
    for (long i = 0; i < a.grid.size(); ++i)
        sum += std::conj(a.coeffs[i]) * b.coeffs[i];
    return sum * std::pow(a.grid.dxi(), a.grid.n);
}

SpectralField add(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid == b.grid)) throw ConfigError("grid mismatch");
    SpectralField out = a;
    for (long i = 0; i < a.grid.size(); ++i) out.coeffs[i] += b.coeffs[i];
    out.reality_flag = a.reality_flag && b.reality_flag;
    return out;
}

SpectralField sub(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid == b.grid)) throw ConfigError("grid mismatch");
    SpectralField out = a;
    for (long i = 0; i < a.grid.size(); ++i) out.coeffs[i] -= b.coeffs[i];
    out.reality_flag = a.reality_flag && b.reality_flag;
    return out;
}

SpectralField scale(const SpectralField& a, cplx s) {
    SpectralField out = a;
    for (auto& c : out.coeffs) c *= s;
    if (s.imag() != 0.0) out.reality_flag = false;
    return out;
}

SpectralField conjugate(const SpectralField& a) {
    // conj in real space: c(xi) -> conj(c(-xi))
    SpectralField out = a;
    for (long i = 0; i < a.grid.size(); ++i)
        out.coeffs[i] = std::conj(a.coeffs[negated_index(a.grid, i)]);
    return out;
}

SpectralField product(const SpectralField& a, const SpectralField& b) {
    if (!(a.grid == b.grid)) throw ConfigError("grid mismatch");
    const Grid& g = a.grid;
    // zero-pad to 3/2 resolution so the retained modes are alias-free
    Grid pg = g;
    pg.modes = ((3 * g.modes / 2) + 1) / 2 * 2;
    // the lone Nyquist plane k = -N/2 has no +N/2 partner; keeping it would
    // break the Hermitian symmetry of products, so it is excluded
    auto padded_index = [&](long i, bool& nyquist) {
        long pidx = 0, stride = 1;
        nyquist = false;
        for (int d = 0; d < g.n; ++d) {
            const int k = g.freq_index(static_cast<int>(i % g.modes));
            if (k == -g.modes / 2) nyquist = true;
            pidx += ((k + pg.modes) % pg.modes) * stride;
            stride *= pg.modes;
            i /= g.modes;
        }
        return pidx;
    };
    auto pad = [&](const SpectralField& u) {
        SpectralField pu = SpectralField::zero(pg);
        for (long i = 0; i < g.size(); ++i) {
            bool ny;
            const long pidx = padded_index(i, ny);
            if (!ny) pu.coeffs[pidx] = u.coeffs[i];
        }
        return pu;
    };
    auto sa = to_real_space(pad(a));
    auto sb = to_real_space(pad(b));
    for (long i = 0; i < pg.size(); ++i) sa[i] *= sb[i];
    SpectralField pp = from_real_space(pg, sa);
    // truncate back
    SpectralField out = SpectralField::zero(g);
    out.reality_flag = a.reality_flag && b.reality_flag;
    for (long i = 0; i < g.size(); ++i) {
        bool ny;
        const long pidx = padded_index(i, ny);
        if (!ny) out.coeffs[i] = pp.coeffs[pidx];
    }
    return out;
}

std::pair<SpectralField, SpectralField> split_low_high(const SpectralField& u,
                                                       double threshold) {
    SpectralField low = u, high = u;
    for (long i = 0; i < u.grid.size(); ++i) {
        if (u.grid.xi_norm_at(i) <= threshold)
            high.coeffs[i] = 0.0;
        else
            low.coeffs[i] = 0.0;
    }
    return {low, high};
}

SpectralField fractional_multiplier(const SpectralField& u, double exponent) {
    const Grid& g = u.grid;
    if (exponent <= -g.n)
        throw ConfigError("fractional multiplier exponent must exceed -n");
    SpectralField out = u;
    // zero mode: equal-volume average of |xi|^e over the fundamental cell
    const double vball[3] = {2.0, M_PI, 4.0 * M_PI / 3.0};
    const double r0 = g.dxi() * std::pow(1.0 / vball[g.n - 1], 1.0 / g.n);
    const double zero_value =
        g.n / (g.n + exponent) * std::pow(r0, exponent);
    for (long i = 0; i < g.size(); ++i) {
        const double r = g.xi_norm_at(i);
        out.coeffs[i] *= (r == 0.0) ? zero_value : std::pow(r, exponent);
    }
    return out;
}

SpectralField g0(const SpectralField& w1, const SpectralField& w2,
                 double kappa, double mu) {
    const int n = w1.grid.n;
    SpectralField p = fractional_multiplier(product(w1, conjugate(w2)),
                                            mu - n);
    // Re: Hermitian part of the spectrum
    SpectralField out = p;
    for (long i = 0; i < p.grid.size(); ++i)
        out.coeffs[i] = 0.5 * kappa *
                        (p.coeffs[i] +
                         std::conj(p.coeffs[negated_index(p.grid, i)]));
    out.reality_flag = true;
    return out;
}

std::vector<SpectralField> gradient(const SpectralField& u) {
    std::vector<SpectralField> out;
    for (int d = 0; d < u.grid.n; ++d) {
        SpectralField g = u;
        g.reality_flag = false;
        for (long i = 0; i < u.grid.size(); ++i)
            g.coeffs[i] *= cplx(0.0, u.grid.xi_at(i)[d]);
        out.push_back(std::move(g));
    }
    return out;
}

SpectralField laplacian(const SpectralField& u) {
    SpectralField out = u;
    for (long i = 0; i < u.grid.size(); ++i) {
        const double r = u.grid.xi_norm_at(i);
        out.coeffs[i] *= -r * r;
    }
    return out;
}

SpectralField dot_gradients(const SpectralField& a, const SpectralField& b) {
    auto ga = gradient(a);
    auto gb = gradient(b);
    SpectralField out = product(ga[0], gb[0]);
    for (int d = 1; d < a.grid.n; ++d) out = add(out, product(ga[d], gb[d]));
    return out;
}

// samples_j = pref * (dxi/sqrt(2 pi))^n sum_k c_k exp(i xi_k x_j sigma):
// trigonometric interpolation of the field at the scaled points x_j sigma,
// applied one axis at a time (the kernel is separable)
std::vector<cplx> scaled_synthesis(const SpectralField& u, double sigma) {
    const Grid& g = u.grid;
    const int N = g.modes;
    std::vector<cplx> B(static_cast<size_t>(N) * N);
    for (int j = 0; j < N; ++j) {
        const double x = (-g.half_width + j * g.dx()) * sigma;
        for (int m = 0; m < N; ++m)
            // scaled points outside the box read zero: the field is assumed
            // negligible there, and the periodic extension would otherwise
            // fold spurious images into a compressed output
            B[static_cast<size_t>(j) * N + m] =
                (std::abs(x) > g.half_width)
                    ? cplx(0.0)
                    : std::exp(cplx(0.0, g.freq_index(m) * g.dxi() * x));
    }
    std::vector<cplx> a = u.coeffs, tmp(a.size());
    long stride = 1;
    for (int d = 0; d < g.n; ++d) {
        const long outer = g.size() / (stride * N);
        for (long o = 0; o < outer; ++o)
            for (long s = 0; s < stride; ++s) {
                const long base = o * stride * N + s;
                for (int j = 0; j < N; ++j) {
                    cplx acc = 0.0;
                    for (int m = 0; m < N; ++m)
                        acc += B[static_cast<size_t>(j) * N + m] *
                               a[base + m * stride];
                    tmp[base + j * stride] = acc;
                }
            }
        std::swap(a, tmp);
        stride *= N;
    }
    const double scale = std::pow(g.dxi() / std::sqrt(2.0 * M_PI), g.n);
    for (auto& v : a) v *= scale;
    return a;
}

SpectralField apply_MDU(const SpectralField& u, double t, MDUOp which) {
    if (t <= 0.0) throw ConfigError("propagator factors need t > 0");
    const Grid& g = u.grid;
    switch (which) {
        case MDUOp::U:
        case MDUOp::Uinv: {
            SpectralField out = u;
            const double sgn = (which == MDUOp::U) ? -1.0 : 1.0;
            for (long i = 0; i < g.size(); ++i) {
                const double r = g.xi_norm_at(i);
                out.coeffs[i] *= std::exp(cplx(0.0, sgn * 0.5 * t * r * r));
            }
            out.reality_flag = false;
            return out;
        }
        case MDUOp::M:
        case MDUOp::Minv: {
            auto s = to_real_space(u);
            const double sgn = (which == MDUOp::M) ? 1.0 : -1.0;
            for (long i = 0; i < g.size(); ++i) {
                const Vec3 x = g.x_at(i);
                double x2 = 0.0;
                for (int d = 0; d < g.n; ++d) x2 += x[d] * x[d];
                s[i] *= std::exp(cplx(0.0, sgn * x2 / (2.0 * t)));
            }
            return from_real_space(g, s);
        }
        case MDUOp::D:
        case MDUOp::Dinv: {
            // D(t)u(x) = (it)^{-n/2} u(x/t); inverse (it)^{n/2} u(t x)
            const double sigma = (which == MDUOp::D) ? 1.0 / t : t;
            const double half = 0.5 * g.n;
            const cplx pref =
                (which == MDUOp::D)
                    ? std::pow(t, -half) * std::exp(cplx(0.0, -M_PI * half / 2))
                    : std::pow(t, half) * std::exp(cplx(0.0, M_PI * half / 2));
            auto s = scaled_synthesis(u, sigma);
            for (auto& v : s) v *= pref;
            SpectralField out = from_real_space(g, s);
            const double n0 = l2_norm(u), n1 = l2_norm(out);
            if (n0 > 0.0 && std::abs(n1 - n0) > 1e-8 * n0)
                throw DilationOffGrid(
                    "dilation mass leakage " +
                    std::to_string(std::abs(n1 - n0) / n0) + " at t = " +
                    std::to_string(t));
            return out;
        }
    }
    throw ConfigError("unknown propagator factor");
}

double j_weighted_norm(const SpectralField& u, double t, const NormSpec& spec) {
    // u = M D v  =>  <J>^k f(J) u = M D (<i grad>^k f(i grad) v), and M, D
    // preserve L2, so the norm is the bracketed amplitude norm of v
    SpectralField v = apply_MDU(apply_MDU(u, t, MDUOp::Minv), t, MDUOp::Dinv);
    return k_norm(v, spec, /*use_bracket=*/true);
}

SpectralField single_mode(const Grid& g, const Vec3& xi0, cplx amplitude) {
    SpectralField f = SpectralField::zero(g);
    long idx = 0, stride = 1;
    for (int d = 0; d < g.n; ++d) {
        int k = static_cast<int>(std::lround(xi0[d] / g.dxi()));
        k = std::max(-g.modes / 2, std::min(g.modes / 2 - 1, k));
        idx += ((k + g.modes) % g.modes) * stride;
        stride *= g.modes;
    }
    f.coeffs[idx] = amplitude;
    return f;
}

SpectralField random_field(const Grid& g, Rng& rng, double decay, bool real) {
    SpectralField f = SpectralField::zero(g, real);
    for (long i = 0; i < g.size(); ++i) {
        const double r = g.xi_norm_at(i);
        const double amp = std::exp(-decay * r * r);
        f.coeffs[i] = amp * cplx(rng.normal(), rng.normal());
    }
    if (real) {
        SpectralField sym = f;
        for (long i = 0; i < g.size(); ++i)
            sym.coeffs[i] = 0.5 * (f.coeffs[i] +
                                   std::conj(f.coeffs[negated_index(g, i)]));
        return sym;
    }
    return f;
}

SpectralField gaussian_packet(const Grid& g, cplx alpha, double amplitude) {
    if (alpha.real() <= 0.0) throw ConfigError("gaussian packet needs Re alpha > 0");
    std::vector<cplx> s(g.size());
    for (long i = 0; i < g.size(); ++i) {
        const Vec3 x = g.x_at(i);
        double x2 = 0.0;
        for (int d = 0; d < g.n; ++d) x2 += x[d] * x[d];
        s[i] = amplitude * std::exp(-alpha * x2);
    }
    return from_real_space(g, s);
}

std::string to_json(const SpectralField& u) {
    nlohmann::json j;
    j["version"] = 1;
    j["grid"] = {{"n", u.grid.n},
                 {"half_width", u.grid.half_width},
                 {"modes", u.grid.modes}};
    j["reality"] = u.reality_flag;
    std::vector<double> re, im;
    re.reserve(u.coeffs.size());
    im.reserve(u.coeffs.size());
    for (const auto& c : u.coeffs) {
        re.push_back(c.real());
        im.push_back(c.imag());
    }
    j["re"] = std::move(re);
    j["im"] = std::move(im);
    return j.dump();
}

SpectralField field_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (j.value("version", 0) != 1)
        throw ConfigError("unsupported field serialization version");
    Grid g;
    g.n = j["grid"]["n"];
    g.half_width = j["grid"]["half_width"];
    g.modes = j["grid"]["modes"];
    g.validate();
    SpectralField f = SpectralField::zero(g, j.value("reality", false));
    const auto& re = j["re"];
    const auto& im = j["im"];
    if (static_cast<long>(re.size()) != g.size() || im.size() != re.size())
        throw ConfigError("coefficient count does not match grid");
    for (long i = 0; i < g.size(); ++i)
        f.coeffs[i] = cplx(re[i].get<double>(), im[i].get<double>());
    return f;
}

}  // namespace gevreylab
