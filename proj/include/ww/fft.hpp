#pragma once

#include <vector>

#include "ww/grid.hpp"

namespace ww {

// Thin wrapper around FFTW complex transforms with cached plans.
//
// Conventions: forward() produces coefficients of the trigonometric
// interpolant, u(x) = sum_m uhat_m exp(i xi_m . x) with uhat = forward(u)
// (the 1/n^d scaling is applied on the forward side). Batched transforms
// treat `howmany` contiguous fields of grid.size() entries each.
namespace fft {

void forward(const Grid& g, const Complex* in, Complex* out, int howmany = 1);
void inverse(const Grid& g, const Complex* in, Complex* out, int howmany = 1);

}  // namespace fft

Spectrum analyze(const RealField& u);
// Takes the real part; imaginary residue from conjugate-symmetric input is round-off.
RealField synthesize(const Spectrum& s);

}  // namespace ww
