#include "ww/paradiff.hpp"

#include <cmath>

namespace ww {
namespace {

void check_finite(const SymbolTable& t) {
    for (const Complex& c : t.samples)
        if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
            throw SymbolDomainError("symbol table contains non-finite samples");
}

// FFT of every frequency column of the table with respect to x:
// out[eta_slot * N + theta_slot] = ahat(theta, eta).
std::vector<Complex> column_transforms(const SymbolTable& a) {
    const std::size_t N = a.grid.size();
    std::vector<Complex> hat(N * N);
    int howmany = static_cast<int>(N);
    // one batched call: columns are contiguous fields of length N
    fft::forward(a.grid, a.samples.data(), hat.data(), howmany);
    return hat;
}

}  // namespace

SymbolTable SymbolTable::from_function(
    const Grid& g, double order,
    const std::function<Complex(const std::array<double, 2>&, const std::array<double, 2>&)>& f) {
    SymbolTable t(g, order);
    const std::size_t N = g.size();
#pragma omp parallel for schedule(static)
    for (long long s = 0; s < static_cast<long long>(N); ++s) {
        auto xi = g.xi(static_cast<std::size_t>(s));
        Complex* col = t.column(static_cast<std::size_t>(s));
        for (std::size_t j = 0; j < N; ++j) col[j] = f(g.node(j), xi);
    }
    check_finite(t);
    return t;
}

SymbolTable SymbolTable::from_multiplier(
    const Grid& g, double order, const std::function<Complex(const std::array<double, 2>&)>& m) {
    return from_function(g, order,
                         [&m](const std::array<double, 2>&, const std::array<double, 2>& xi) {
                             return m(xi);
                         });
}

SymbolTable SymbolTable::from_field(const RealField& a) {
    SymbolTable t(a.grid, 0.0);
    const std::size_t N = a.grid.size();
    for (std::size_t s = 0; s < N; ++s) {
        Complex* col = t.column(s);
        for (std::size_t j = 0; j < N; ++j) col[j] = Complex(a.values[j], 0.0);
    }
    check_finite(t);
    return t;
}

SymbolTable symbol_product(const SymbolTable& a, const SymbolTable& b) {
    require_same_grid(a.grid, b.grid, "symbol_product");
    SymbolTable t(a.grid, a.order + b.order);
    for (std::size_t i = 0; i < t.samples.size(); ++i) t.samples[i] = a.samples[i] * b.samples[i];
    return t;
}

RealField paraproduct(const RealField& a, const RealField& u) {
    require_same_grid(a.grid, u.grid, "paraproduct");
    const int ktop = lp_ktop(u.grid);
    Spectrum ahat = analyze(a);

    RealField out(u.grid);
    std::vector<RealField> pieces(ktop + 1, RealField(u.grid));
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k <= ktop; ++k) {
        Spectrum low = ahat;
        for (std::size_t i = 0; i < low.coeffs.size(); ++i)
            low.coeffs[i] *= cutoffs::zeta_k(k - 3, low.grid.xi_norm(i));
        RealField Sa = synthesize(low);
        RealField Du = lp_block(u, k);
        for (std::size_t i = 0; i < Du.size(); ++i) pieces[k][i] = Sa[i] * Du[i];
    }
    for (int k = 0; k <= ktop; ++k) out += pieces[k];
    return out;
}

BonyParts bony_decompose(const RealField& a, const RealField& u) {
    require_same_grid(a.grid, u.grid, "bony_decompose");
    DyadicBlocks ba = lp_decompose(a);
    DyadicBlocks bu = lp_decompose(u);
    const int K = static_cast<int>(ba.blocks.size()) - 1;

    BonyParts parts{RealField(u.grid), RealField(u.grid), RealField(u.grid)};
    const std::size_t N = u.size();

    // running block sums S_{k-3} = Delta_0 + ... + Delta_{k-3}
    RealField sum_a(u.grid), sum_u(u.grid);
    for (int k = 0; k <= K; ++k) {
        if (k - 3 >= 0) {
            sum_a += ba.blocks[k - 3];
            sum_u += bu.blocks[k - 3];
        }
        for (std::size_t i = 0; i < N; ++i) {
            parts.Ta_u[i] += sum_a[i] * bu.blocks[k][i];
            parts.Tu_a[i] += sum_u[i] * ba.blocks[k][i];
        }
    }
    for (int k = 0; k <= K; ++k)
        for (int l = std::max(0, k - 2); l <= std::min(K, k + 2); ++l)
            for (std::size_t i = 0; i < N; ++i)
                parts.remainder[i] += ba.blocks[k][i] * bu.blocks[l][i];
    return parts;
}

namespace {

struct SlotModes {
    std::vector<int> mx, my;
};

SlotModes slot_modes(const Grid& g) {
    const std::size_t N = g.size();
    SlotModes m{std::vector<int>(N), std::vector<int>(N)};
    for (std::size_t s = 0; s < N; ++s) {
        int idx[2];
        g.index_split(s, idx);
        m.mx[s] = g.fold(idx[0]);
        m.my[s] = g.d == 2 ? g.fold(idx[1]) : 0;
    }
    return m;
}

std::vector<Complex> cut_source(const Grid& g, const Spectrum& uhat) {
    std::vector<Complex> src(uhat.coeffs.size());
    for (std::size_t s = 0; s < src.size(); ++s)
        src[s] = cutoffs::psi_cut(g.xi_norm(s)) * uhat.coeffs[s];
    return src;
}

}  // namespace

RealField paradiff_apply(const SymbolTable& a, const RealField& u) {
    require_same_grid(a.grid, u.grid, "paradiff_apply");
    const Grid& g = u.grid;
    const std::size_t N = g.size();
    const int n = g.n;
    const double f = 2.0 * pi / g.L;

    std::vector<Complex> ahat = column_transforms(a);
    SlotModes modes = slot_modes(g);
    std::vector<Complex> src = cut_source(g, analyze(u));

    Spectrum out(g);
#pragma omp parallel for schedule(dynamic, 16)
    for (long long os = 0; os < static_cast<long long>(N); ++os) {
        const int ox = modes.mx[os];
        const int oy = modes.my[os];
        Complex acc(0.0);
        for (std::size_t es = 0; es < N; ++es) {
            if (src[es] == Complex(0.0)) continue;
            int tx = ox - modes.mx[es];
            int ty = oy - modes.my[es];
            if (tx < -n / 2 || tx >= n / 2) continue;
            if (g.d == 2 && (ty < -n / 2 || ty >= n / 2)) continue;
            double theta = f * (g.d == 2 ? std::hypot(double(tx), double(ty)) : std::fabs(double(tx)));
            double eta = f * (g.d == 2 ? std::hypot(double(modes.mx[es]), double(modes.my[es]))
                                       : std::fabs(double(modes.mx[es])));
            double c = cutoffs::chi(theta, eta);
            if (c == 0.0) continue;
            std::size_t ts = static_cast<std::size_t>(tx < 0 ? tx + n : tx);
            if (g.d == 2) ts += static_cast<std::size_t>(ty < 0 ? ty + n : ty) * n;
            acc += c * ahat[es * N + ts] * src[es];
        }
        out.coeffs[os] = acc;
    }
    return synthesize(out);
}

namespace reference {

// Scatter form: walk each input frequency column once, transform it, and
// accumulate its contribution into every output mode it can reach.
RealField paradiff_apply(const SymbolTable& a, const RealField& u) {
    require_same_grid(a.grid, u.grid, "paradiff_apply (reference)");
    const Grid& g = u.grid;
    const std::size_t N = g.size();
    const int n = g.n;
    const double f = 2.0 * pi / g.L;

    SlotModes modes = slot_modes(g);
    std::vector<Complex> src = cut_source(g, analyze(u));

    Spectrum out(g);
    std::vector<Complex> col(N);
    for (std::size_t es = 0; es < N; ++es) {
        if (src[es] == Complex(0.0)) continue;
        double eta = g.xi_norm(es);
        fft::forward(g, a.column(es), col.data());
        for (std::size_t ts = 0; ts < N; ++ts) {
            int ox = modes.mx[ts] + modes.mx[es];
            int oy = modes.my[ts] + modes.my[es];
            if (ox < -n / 2 || ox >= n / 2) continue;
            if (g.d == 2 && (oy < -n / 2 || oy >= n / 2)) continue;
            double theta = f * (g.d == 2 ? std::hypot(double(modes.mx[ts]), double(modes.my[ts]))
                                         : std::fabs(double(modes.mx[ts])));
            double c = cutoffs::chi(theta, eta);
            if (c == 0.0) continue;
            std::size_t os = static_cast<std::size_t>(ox < 0 ? ox + n : ox);
            if (g.d == 2) os += static_cast<std::size_t>(oy < 0 ? oy + n : oy) * n;
            out.coeffs[os] += c * col[ts] * src[es];
        }
    }
    return synthesize(out);
}

}  // namespace reference

ComposeDiagnostic symbol_compose_check(const SymbolTable& a, const SymbolTable& b,
                                       const RealField& u, double mu) {
    ComposeDiagnostic diag;
    SymbolTable ab = symbol_product(a, b);
    double target = mu - a.order - b.order + 0.5;
    int kmax = lp_kmax(u.grid);
    for (int j = 3; j <= kmax; ++j) {
        RealField uj = lp_block(u, j);
        double denom = sobolev_norm(uj, mu);
        if (denom < 1e-14) continue;
        RealField defect = paradiff_apply(a, paradiff_apply(b, uj)) - paradiff_apply(ab, uj);
        diag.bands.push_back(j);
        diag.ratios.push_back(sobolev_norm(defect, target) / denom);
    }
    return diag;
}

}  // namespace ww
