#pragma once

namespace ww {

// Dyadic cutoff family.
//
//   zeta(t)    = 1 for |t| <= 1.1, 0 for |t| >= 1.9, smooth monotone bridge
//   zeta_k(t)  = zeta(2^-k t), any integer k
//   phi_0      = zeta,  phi_k = zeta_k - zeta_{k-1} for k >= 1
//
// so that sum_{k>=0} phi_k = 1 and phi_k is supported in the annulus
// [1.1*2^(k-1), 1.9*2^k] for k >= 1. The bridge is a quintic blend with two
// vanishing derivatives at both plateau ends; tests must not depend on its
// shape.
namespace cutoffs {

double zeta(double t);
double zeta_k(int k, double t);
double phi_k(int k, double t);

// Bivariate admissible cutoff chi(theta, eta) = sum_{k>=0} zeta_{k-3}(theta) phi_k(eta),
// evaluated for radial arguments |theta|, |eta|.
double chi(double theta_abs, double eta_abs);

// Radial cutoff with plateau 0 for |eta| <= 1 and 1 for |eta| >= 2.
double psi_cut(double eta_abs);

}  // namespace cutoffs

}  // namespace ww
