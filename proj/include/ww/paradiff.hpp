#pragma once

#include <functional>
#include <vector>

#include "ww/spectral.hpp"

namespace ww {

// Sampled symbol a(x, xi) of declared order m: one complex value per
// (spectral slot, grid node) pair. Column xi holds the x-samples of
// a(., xi), contiguous in x.
struct SymbolTable {
    Grid grid;
    double order = 0.0;
    std::vector<Complex> samples;  // [xi_slot * grid.size() + x_node]

    SymbolTable() = default;
    SymbolTable(const Grid& g, double m) : grid(g), order(m), samples(g.size() * g.size()) {}

    Complex* column(std::size_t xi_slot) { return samples.data() + xi_slot * grid.size(); }
    const Complex* column(std::size_t xi_slot) const {
        return samples.data() + xi_slot * grid.size();
    }

    // f(x, xi) -> complex, sampled over every node and resolvable wavenumber
    static SymbolTable from_function(
        const Grid& g, double order,
        const std::function<Complex(const std::array<double, 2>& x, const std::array<double, 2>& xi)>& f);
    // x-independent symbol (a Fourier multiplier)
    static SymbolTable from_multiplier(const Grid& g, double order,
                                       const std::function<Complex(const std::array<double, 2>& xi)>& m);
    // xi-independent symbol (a function of x)
    static SymbolTable from_field(const RealField& a);
};

// pointwise product of two symbol tables; order adds
SymbolTable symbol_product(const SymbolTable& a, const SymbolTable& b);

// Paraproduct T_a u = sum_k S_{k-3} a . Delta_k u. The low-pass S_{k-3}
// uses the spectral profile zeta_{k-3} for every k, so constants pass all
// filters and T_1 u = u.
RealField paraproduct(const RealField& a, const RealField& u);

// Bony decomposition a.u = T_a u + T_u a + R(u, a), computed with the exact
// index-pair partition (l <= k-3, k <= l-3, |k-l| <= 2) over dyadic blocks,
// so the three parts sum to the pointwise product to round-off. Inside this
// partition S_{k-3} is the block sum Delta_0 + ... + Delta_{k-3} (empty for
// k < 3), which differs from paraproduct() on deep-low frequencies.
struct BonyParts {
    RealField Ta_u;
    RealField Tu_a;
    RealField remainder;
};
BonyParts bony_decompose(const RealField& a, const RealField& u);

// Paradifferential quantization
//   (T_a u)^(xi) = sum_eta chi(xi-eta, eta) ahat(xi-eta, eta) psi_cut(eta) uhat(eta),
// evaluated by direct summation over resolvable frequency pairs (one
// transform per frequency column). Note the psi_cut factor: this operation
// removes modes |xi| <= 1 even for a = 1, unlike paraproduct().
RealField paradiff_apply(const SymbolTable& a, const RealField& u);

namespace reference {
// Serial direct-summation implementation kept as the oracle for the
// OpenMP-parallel paradiff_apply.
RealField paradiff_apply(const SymbolTable& a, const RealField& u);
}  // namespace reference

// Composition defect diagnostic: for band-limited slices u_j = Delta_j u,
// ratios[i] = ||T_a T_b u_j - T_{ab} u_j||_{H^{mu-m-m'+1/2}} / ||u_j||_{H^mu}.
struct ComposeDiagnostic {
    std::vector<int> bands;
    std::vector<double> ratios;
};
ComposeDiagnostic symbol_compose_check(const SymbolTable& a, const SymbolTable& b,
                                       const RealField& u, double mu);

}  // namespace ww
