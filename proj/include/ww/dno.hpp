#pragma once

#include <memory>

#include "ww/strip.hpp"

namespace ww {

// Dirichlet-Neumann operator context for one surface eta. Immutable after
// construction; dn_apply on distinct right-hand sides may run concurrently.
// The strip solver is grid-level (its flat preconditioner does not depend on
// eta) and is shared across contexts.
struct DnoContext {
    RealField eta;
    FlattenMap map;
    EllipticCoefficients coeffs;
    RealField zeta1;  // (1+|grad rho|^2)/dz rho at z=0
    std::vector<RealField> zeta2;  // grad rho at z=0
    std::shared_ptr<const StripSolver> solver;
    double tol = 1e-10;
};

DnoContext make_dno_context(const RealField& eta, std::shared_ptr<const StripSolver> solver,
                            double delta_hint = 0.5, double tol = 1e-10);

// Harmonic extension of f: the strip solve with zero source. `guess` warm
// starts the iteration (the fixed point is unchanged).
StripField solve_potential(const DnoContext& ctx, const RealField& f,
                           const StripField* guess = nullptr, SolveStats* stats = nullptr);

// G(eta) f = (zeta1 dz v - zeta2 . grad v) at z=0
RealField dn_apply(const DnoContext& ctx, const RealField& f,
                   const StripField* guess = nullptr);
// same, also returning the potential for reuse
RealField dn_apply_with_potential(const DnoContext& ctx, const RealField& f, StripField& v_out,
                                  const StripField* guess = nullptr);

struct Traces {
    std::vector<RealField> V;  // horizontal velocity trace, d components
    RealField B;               // vertical velocity trace
};

// B = (grad eta . grad psi + G(eta) psi) / (1+|grad eta|^2), V = grad psi - B grad eta
Traces traces(const DnoContext& ctx, const RealField& psi, const StripField* guess = nullptr);
Traces traces_from_g(const DnoContext& ctx, const RealField& psi, const RealField& g_psi);

// d_eta G(eta) psi . h = -G(eta)(h B) - div(h V)
RealField shape_derivative(const DnoContext& ctx, const RealField& psi,
                           const RealField& delta_eta);

// principal symbol lambda = zeta1 A - i zeta2 . xi at z=0 (flat case: |xi|)
SymbolTable dn_symbol(const DnoContext& ctx);

// R(eta) f = G(eta) f - T_lambda f
RealField dn_paralinear_remainder(const DnoContext& ctx, const RealField& f);

}  // namespace ww
