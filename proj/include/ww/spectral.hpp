#pragma once

#include <cmath>
#include <vector>

#include "ww/cutoffs.hpp"
#include "ww/fft.hpp"
#include "ww/grid.hpp"

namespace ww {

// Applies a spectral multiplier: u -> F^-1( m(xi) uhat(xi) ).
// The multiplier is evaluated once per spectral slot; non-finite values raise
// InvalidMultiplierError.
template <class M>
RealField apply_multiplier(const RealField& u, M&& m) {
    Spectrum s = analyze(u);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        Complex mv = m(s.grid.xi(i));
        if (!std::isfinite(mv.real()) || !std::isfinite(mv.imag()))
            throw InvalidMultiplierError("multiplier is not finite at a grid wavenumber");
        s.coeffs[i] *= mv;
    }
    return synthesize(s);
}

// Littlewood-Paley dyadic decomposition of a grid field. Blocks 0..kmax are
// fully resolved annuli; blocks above kmax are clipped by the Nyquist sphere
// and flagged via `truncated` when they carry content. The stored blocks
// always sum back to the field to round-off.
struct DyadicBlocks {
    std::vector<RealField> blocks;
    int kmax = 0;
    bool truncated = false;
};

// largest dyadic index whose annulus [1.1*2^(k-1), 1.9*2^k] is fully resolved
int lp_kmax(const Grid& g);
// smallest K with zeta_K = 1 on every resolved wavenumber (reconstruction ceiling)
int lp_ktop(const Grid& g);

// band-pass projection Delta_k u (zero field for k < 0)
RealField lp_block(const RealField& u, int k);
// low-pass projection S_k u with profile zeta_k, any integer k
RealField lp_lowpass(const RealField& u, int k);

DyadicBlocks lp_decompose(const RealField& u);

// discrete (integral_cell |u|^p dx)^(1/p); p = infinity is the max over nodes
double lp_norm(const RealField& u, double p);
// Parseval H^s norm: sqrt( L^d sum (1+|xi|^2)^s |uhat|^2 )
double sobolev_norm(const RealField& u, double s);
// Besov norm (sum_k 2^{ksq} ||Delta_k u||_p^q)^(1/q); p, q in [1, inf]
double besov_norm(const RealField& u, double s, double p, double q);

// spectral 2/3-rule mask: zeroes every slot with an axis mode above n/3
RealField dealias_two_thirds(const RealField& u);

// spectral partial derivative along axis `dim` (Nyquist slot zeroed)
RealField grad_component(const RealField& u, int dim);
std::vector<RealField> gradient(const RealField& u);
RealField laplacian(const RealField& u);
RealField divergence(const std::vector<RealField>& w);

double max_abs(const RealField& u);
double max_abs(const std::vector<RealField>& w);

}  // namespace ww
