#pragma once

#include <complex>
#include <string>
#include <vector>

#include "gevreylab/weights.hpp"

namespace gevreylab {

using cplx = std::complex<double>;

/// Periodic box [-L, L]^n discretized by `modes` points per dimension.
/// Frequencies live on the centered lattice with spacing dxi = pi / L; the
/// low/high split at |xi| = 1 must be resolvable (dxi <= 1/4).
struct Grid {
    int n = 1;
    double half_width = 16.0;
    int modes = 128;

    double dx() const { return 2.0 * half_width / modes; }
    double dxi() const { return M_PI / half_width; }
    long size() const {
        long s = 1;
        for (int d = 0; d < n; ++d) s *= modes;
        return s;
    }
    double xi_max() const { return (modes / 2) * dxi(); }
    void validate() const;  // throws ConfigError
    bool operator==(const Grid&) const = default;

    /// signed frequency index along one axis from storage index (FFT layout)
    int freq_index(int m) const { return m < modes / 2 ? m : m - modes; }
    /// frequency vector / radius of a linear storage index
    Vec3 xi_at(long idx) const;
    double xi_norm_at(long idx) const;
    /// spatial point of a linear storage index (row-major, x = -L + j dx)
    Vec3 x_at(long idx) const;
};

/// A function on the box held as continuum-normalized Fourier coefficients
/// c(xi) ~ (2 pi)^{-n/2} int e^{-i xi x} u(x) dx, in FFT storage order.
struct SpectralField {
    Grid grid;
    std::vector<cplx> coeffs;
    bool reality_flag = false;

    static SpectralField zero(const Grid& g, bool real = false);
    cplx& at(long idx) { return coeffs[idx]; }
    const cplx& at(long idx) const { return coeffs[idx]; }
};

/// Weighted-norm parameters: weight f, amplitude exponent k, phase exponents
/// ell (high part carries |xi|^{ell+2}) and ell_low.
struct NormSpec {
    WeightParams weight;
    double k = 0.0;
    double ell = 0.0;
    double ell_low = 0.25;
};

// --- transforms ---------------------------------------------------------

/// real-space samples u(x_j) from coefficients (and back); deterministic
std::vector<cplx> to_real_space(const SpectralField& u);
SpectralField from_real_space(const Grid& g, const std::vector<cplx>& samples,
                              bool reality_flag = false);

// --- norms --------------------------------------------------------------

/// amplitude norm: (|| |xi|^k f c_> ||^2 + || f c_< ||^2)^{1/2}, lattice
/// measure dxi^n; use_bracket replaces |xi|^k by <xi>^k on the high part
double k_norm(const SpectralField& w, const NormSpec& spec,
              bool use_bracket = false);

/// the two squared contributions (high |xi| > 1, low |xi| <= 1) of k_norm^2,
/// reported separately so rho-derivative identities can be examined per part
std::pair<double, double> k_norm_parts(const SpectralField& w,
                                       const NormSpec& spec,
                                       bool use_bracket = false);

/// phase norm: (|| |xi|^{ell+2} f c_> ||^2 + || |xi|^{ell_low} f c_< ||^2)^{1/2}
double y_norm(const SpectralField& phi, const NormSpec& spec);

double l2_norm(const SpectralField& u);
cplx inner_product(const SpectralField& a, const SpectralField& b);

// --- algebra ------------------------------------------------------------

SpectralField add(const SpectralField& a, const SpectralField& b);
SpectralField sub(const SpectralField& a, const SpectralField& b);
SpectralField scale(const SpectralField& a, cplx s);
SpectralField conjugate(const SpectralField& a);

/// pointwise product via padded transforms (2/3-rule dealiasing)
SpectralField product(const SpectralField& a, const SpectralField& b);

/// split at |xi| <= threshold / |xi| > threshold; low + high == u exactly
std::pair<SpectralField, SpectralField> split_low_high(const SpectralField& u,
                                                       double threshold = 1.0);

/// multiply coefficients by |xi|^exponent; the xi = 0 mode takes the
/// equal-volume cell average of the symbol (kept bounded for exponent < 0)
SpectralField fractional_multiplier(const SpectralField& u, double exponent);

/// g0(w1, w2) = kappa Re |nabla|^{mu-n} (w1 conj(w2)); real-valued output
SpectralField g0(const SpectralField& w1, const SpectralField& w2,
                 double kappa, double mu);

std::vector<SpectralField> gradient(const SpectralField& u);
SpectralField laplacian(const SpectralField& u);

/// sum_d product(grad_a[d], grad_b[d]) — the |grad phi|^2 / grad phi . grad
/// building block
SpectralField dot_gradients(const SpectralField& a, const SpectralField& b);

// --- propagator factors -------------------------------------------------

enum class MDUOp { M, D, U, Minv, Dinv, Uinv };

/// M(t): multiply by exp(i x^2 / 2t);  U(t) = exp(i (t/2) Delta): Fourier
/// multiplier exp(-i t xi^2 / 2);  D(t): (it)^{-n/2} u(x/t) by band-limited
/// (trigonometric) rescaling. Throws DilationOffGrid when the L2 mass drifts
/// by more than 1e-8 under D.
SpectralField apply_MDU(const SpectralField& u, double t, MDUOp which);

/// || <J(t)>^k f(J(t)) u ||_2 computed on Dinv Minv u via the commutation
/// identity (J acts as multiplication by the frequency there)
double j_weighted_norm(const SpectralField& u, double t, const NormSpec& spec);

/// trigonometric interpolation of u at the scaled points x_j * sigma
/// (points outside the box read zero); the resampling core of D without
/// the unitary prefactor or the mass-conservation gate, usable for
/// rescaling pointwise phases that need not be L2-localized
std::vector<cplx> scaled_synthesis(const SpectralField& u, double sigma);

// --- construction helpers ----------------------------------------------

class Rng;

/// single lattice mode closest to xi0 with given amplitude
SpectralField single_mode(const Grid& g, const Vec3& xi0, cplx amplitude);

/// smooth random field: Gaussian coefficients damped by exp(-decay |xi|^2);
/// Hermitian-symmetrized when real
SpectralField random_field(const Grid& g, Rng& rng, double decay,
                           bool real = false);

/// coefficients of exp(-a x^2 + i b x^2) type radial Gaussians (sampled)
SpectralField gaussian_packet(const Grid& g, cplx alpha, double amplitude = 1.0);

// --- serialization ------------------------------------------------------

std::string to_json(const SpectralField& u);
SpectralField field_from_json(const std::string& text);

}  // namespace gevreylab
