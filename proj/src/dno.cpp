#include "ww/dno.hpp"

namespace ww {

DnoContext make_dno_context(const RealField& eta, std::shared_ptr<const StripSolver> solver,
                            double delta_hint, double tol) {
    require_same_grid(eta.grid, solver->grid(), "make_dno_context");
    DnoContext ctx;
    ctx.eta = eta;
    ctx.map = build_map(eta, solver->zgrid(), delta_hint);
    ctx.coeffs = coefficients(ctx.map);
    ctx.solver = std::move(solver);
    ctx.tol = tol;

    const Grid& g = eta.grid;
    const int top = ctx.map.zgrid->m;
    ctx.zeta1 = RealField(g);
    ctx.zeta2.assign(g.d, RealField(g));
    for (std::size_t j = 0; j < g.size(); ++j) {
        double g2 = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double rx = ctx.map.rho_x[a].level(top)[j];
            ctx.zeta2[a][j] = rx;
            g2 += rx * rx;
        }
        ctx.zeta1[j] = (1.0 + g2) / ctx.map.rho_z.level(top)[j];
    }
    return ctx;
}

StripField solve_potential(const DnoContext& ctx, const RealField& f, const StripField* guess,
                           SolveStats* stats) {
    return ctx.solver->solve(ctx.coeffs, f, nullptr, ctx.tol, stats, guess);
}

namespace {

RealField dn_from_potential(const DnoContext& ctx, const StripField& v) {
    const Grid& g = ctx.eta.grid;
    RealField vz_top = dz(v).surface();
    RealField out(g);
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = ctx.zeta1[j] * vz_top[j];
    for (int a = 0; a < g.d; ++a) {
        RealField va = dx(v, a).surface();
        for (std::size_t j = 0; j < g.size(); ++j) out[j] -= ctx.zeta2[a][j] * va[j];
    }
    return out;
}

}  // namespace

RealField dn_apply(const DnoContext& ctx, const RealField& f, const StripField* guess) {
    StripField v = solve_potential(ctx, f, guess);
    return dn_from_potential(ctx, v);
}

RealField dn_apply_with_potential(const DnoContext& ctx, const RealField& f, StripField& v_out,
                                  const StripField* guess) {
    v_out = solve_potential(ctx, f, guess);
    return dn_from_potential(ctx, v_out);
}

Traces traces_from_g(const DnoContext& ctx, const RealField& psi, const RealField& g_psi) {
    const Grid& g = ctx.eta.grid;
    std::vector<RealField> grad_eta = gradient(ctx.eta);
    std::vector<RealField> grad_psi = gradient(psi);
    Traces tr;
    tr.B = RealField(g);
    tr.V.assign(g.d, RealField(g));
    for (std::size_t j = 0; j < g.size(); ++j) {
        double ge2 = 0.0, dots = 0.0;
        for (int a = 0; a < g.d; ++a) {
            ge2 += grad_eta[a][j] * grad_eta[a][j];
            dots += grad_eta[a][j] * grad_psi[a][j];
        }
        double B = (dots + g_psi[j]) / (1.0 + ge2);
        tr.B[j] = B;
        for (int a = 0; a < g.d; ++a) tr.V[a][j] = grad_psi[a][j] - B * grad_eta[a][j];
    }
    return tr;
}

Traces traces(const DnoContext& ctx, const RealField& psi, const StripField* guess) {
    return traces_from_g(ctx, psi, dn_apply(ctx, psi, guess));
}

RealField shape_derivative(const DnoContext& ctx, const RealField& psi,
                           const RealField& delta_eta) {
    const Grid& g = ctx.eta.grid;
    Traces tr = traces(ctx, psi);
    RealField hB(g);
    for (std::size_t j = 0; j < g.size(); ++j) hB[j] = delta_eta[j] * tr.B[j];
    RealField term1 = dn_apply(ctx, hB);
    std::vector<RealField> hV(g.d, RealField(g));
    for (int a = 0; a < g.d; ++a)
        for (std::size_t j = 0; j < g.size(); ++j) hV[a][j] = delta_eta[j] * tr.V[a][j];
    RealField term2 = divergence(hV);
    RealField out(g);
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = -term1[j] - term2[j];
    return out;
}

SymbolTable dn_symbol(const DnoContext& ctx) {
    const Grid& g = ctx.eta.grid;
    const int top = ctx.map.zgrid->m;
    auto [a_sym, A_sym] = decoupling_symbols(ctx.coeffs, top);
    const std::size_t N = g.size();
    SymbolTable lambda(g, 1.0);
    for (std::size_t s = 0; s < N; ++s) {
        auto xi = g.xi(s);
        const Complex* Acol = A_sym.column(s);
        Complex* lcol = lambda.column(s);
        for (std::size_t j = 0; j < N; ++j) {
            double z2dot = 0.0;
            for (int a = 0; a < g.d; ++a) z2dot += ctx.zeta2[a][j] * xi[a];
            lcol[j] = ctx.zeta1[j] * Acol[j] - Complex(0.0, z2dot);
        }
    }
    return lambda;
}

RealField dn_paralinear_remainder(const DnoContext& ctx, const RealField& f) {
    RealField gf = dn_apply(ctx, f);
    RealField tf = paradiff_apply(dn_symbol(ctx), f);
    return gf - tf;
}

}  // namespace ww
