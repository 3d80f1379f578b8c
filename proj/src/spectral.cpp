#include "ww/spectral.hpp"

#include <algorithm>
#include <limits>

namespace ww {

int lp_kmax(const Grid& g) {
    return static_cast<int>(std::floor(std::log2(g.k_nyquist() / 1.9)));
}

int lp_ktop(const Grid& g) {
    double ximax = g.k_nyquist() * std::sqrt(static_cast<double>(g.d));
    int k = static_cast<int>(std::ceil(std::log2(ximax / 1.1)));
    return std::max(k, 0);
}

RealField lp_block(const RealField& u, int k) {
    if (k < 0) return RealField(u.grid);
    return apply_multiplier(u, [k](const std::array<double, 2>& xi) {
        return Complex(cutoffs::phi_k(k, std::hypot(xi[0], xi[1])), 0.0);
    });
}

RealField lp_lowpass(const RealField& u, int k) {
    return apply_multiplier(u, [k](const std::array<double, 2>& xi) {
        return Complex(cutoffs::zeta_k(k, std::hypot(xi[0], xi[1])), 0.0);
    });
}

DyadicBlocks lp_decompose(const RealField& u) {
    DyadicBlocks out;
    out.kmax = lp_kmax(u.grid);
    int ktop = lp_ktop(u.grid);
    out.blocks.resize(ktop + 1, RealField(u.grid));
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k <= ktop; ++k) out.blocks[k] = lp_block(u, k);

    double scale = max_abs(u);
    double tol = 100.0 * std::numeric_limits<double>::epsilon() * scale;
    for (int k = out.kmax + 1; k <= ktop; ++k)
        if (max_abs(out.blocks[k]) > tol) out.truncated = true;
    return out;
}

double lp_norm(const RealField& u, double p) {
    if (std::isinf(p)) return max_abs(u);
    if (p < 1.0) throw Error("lp_norm: p must be in [1, inf]");
    double acc = 0.0;
    for (double v : u.values) acc += std::pow(std::fabs(v), p);
    return std::pow(acc * u.grid.cell_volume(), 1.0 / p);
}

double sobolev_norm(const RealField& u, double s) {
    Spectrum sp = analyze(u);
    double vol = std::pow(u.grid.L, u.grid.d);
    double acc = 0.0;
    for (std::size_t i = 0; i < sp.coeffs.size(); ++i) {
        double x = u.grid.xi_norm(i);
        acc += std::pow(1.0 + x * x, s) * std::norm(sp.coeffs[i]);
    }
    return std::sqrt(vol * acc);
}

double besov_norm(const RealField& u, double s, double p, double q) {
    int ktop = lp_ktop(u.grid);
    std::vector<double> term(ktop + 1, 0.0);
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k <= ktop; ++k)
        term[k] = std::pow(2.0, k * s) * lp_norm(lp_block(u, k), p);

    if (std::isinf(q)) return *std::max_element(term.begin(), term.end());
    double acc = 0.0;
    for (double t : term) acc += std::pow(t, q);
    return std::pow(acc, 1.0 / q);
}

RealField dealias_two_thirds(const RealField& u) {
    const Grid& g = u.grid;
    int cut = g.n / 3;
    Spectrum s = analyze(u);
    for (std::size_t i = 0; i < s.coeffs.size(); ++i) {
        int idx[2];
        g.index_split(i, idx);
        if (std::abs(g.fold(idx[0])) > cut || (g.d == 2 && std::abs(g.fold(idx[1])) > cut))
            s.coeffs[i] = Complex(0.0);
    }
    return synthesize(s);
}

RealField grad_component(const RealField& u, int dim) {
    return apply_multiplier(u, [dim, &u](const std::array<double, 2>& xi) {
        double x = xi[dim];
        // odd multipliers have no conjugate partner at the Nyquist slot
        if (std::fabs(x) >= u.grid.k_nyquist()) return Complex(0.0);
        return Complex(0.0, x);
    });
}

std::vector<RealField> gradient(const RealField& u) {
    std::vector<RealField> g;
    g.reserve(u.grid.d);
    for (int dim = 0; dim < u.grid.d; ++dim) g.push_back(grad_component(u, dim));
    return g;
}

RealField laplacian(const RealField& u) {
    return apply_multiplier(u, [](const std::array<double, 2>& xi) {
        return Complex(-(xi[0] * xi[0] + xi[1] * xi[1]), 0.0);
    });
}

RealField divergence(const std::vector<RealField>& w) {
    RealField out = grad_component(w[0], 0);
    for (std::size_t dim = 1; dim < w.size(); ++dim) out += grad_component(w[dim], static_cast<int>(dim));
    return out;
}

double max_abs(const RealField& u) {
    double m = 0.0;
    for (double v : u.values) m = std::max(m, std::fabs(v));
    return m;
}

double max_abs(const std::vector<RealField>& w) {
    double m = 0.0;
    for (const auto& f : w) m = std::max(m, max_abs(f));
    return m;
}

}  // namespace ww
