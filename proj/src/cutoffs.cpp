#include "ww/cutoffs.hpp"

#include <cmath>

namespace ww {
namespace cutoffs {
namespace {

// quintic smoothstep: s(0)=0, s(1)=1, s'=s''=0 at both ends
double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace

double zeta(double t) {
    double a = std::fabs(t);
    if (a <= 1.1) return 1.0;
    if (a >= 1.9) return 0.0;
    return 1.0 - smoothstep((a - 1.1) / 0.8);
}

double zeta_k(int k, double t) { return zeta(std::ldexp(std::fabs(t), -k)); }

double phi_k(int k, double t) {
    if (k < 0) return 0.0;
    if (k == 0) return zeta(t);
    return zeta_k(k, t) - zeta_k(k - 1, t);
}

double chi(double theta_abs, double eta_abs) {
    double sum = 0.0;
    for (int k = 0;; ++k) {
        // phi_k vanishes below 1.1*2^(k-1); once the annuli pass |eta| we are done
        if (k >= 1 && std::ldexp(1.1, k - 1) >= eta_abs) {
            if (zeta_k(k - 1, eta_abs) >= 1.0) break;
        }
        sum += zeta_k(k - 3, theta_abs) * phi_k(k, eta_abs);
        if (k > 80) break;
    }
    return sum;
}

double psi_cut(double eta_abs) {
    double a = std::fabs(eta_abs);
    if (a <= 1.0) return 0.0;
    if (a >= 2.0) return 1.0;
    return smoothstep(a - 1.0);
}

}  // namespace cutoffs
}  // namespace ww
