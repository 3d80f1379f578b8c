#pragma once

#include <memory>
#include <vector>

#include "ww/paradiff.hpp"
#include "ww/spectral.hpp"

namespace ww {

// Chebyshev collocation grid in z on [-depth, 0], nodes clustered at both
// ends, ascending (z[0] = -depth, z[m] = 0). Holds the differentiation
// matrices (dense (m+1)^2, row-major) and Clenshaw-Curtis quadrature weights.
struct ZGrid {
    double depth = 10.0;
    int m = 64;
    std::vector<double> z;        // m+1 nodes
    std::vector<double> deriv;    // D, row-major (m+1)x(m+1)
    std::vector<double> deriv2;   // D^2
    std::vector<double> weights;  // integral over [-depth, 0]

    ZGrid(double depth, int m);
    int levels() const { return m + 1; }
};

std::shared_ptr<const ZGrid> make_zgrid(double depth, int m);

// Scalar field v(x, z) on the flattened strip, level-major storage:
// values[i * grid.size() + j] is level i (z ascending), node j.
struct StripField {
    Grid grid;
    std::shared_ptr<const ZGrid> zgrid;
    std::vector<double> values;

    StripField() = default;
    StripField(const Grid& g, std::shared_ptr<const ZGrid> zg)
        : grid(g), zgrid(std::move(zg)), values(grid.size() * zgrid->levels(), 0.0) {}

    double* level(int i) { return values.data() + static_cast<std::size_t>(i) * grid.size(); }
    const double* level(int i) const {
        return values.data() + static_cast<std::size_t>(i) * grid.size();
    }
    // trace at z = 0
    RealField surface() const {
        RealField f(grid);
        const double* top = level(zgrid->m);
        for (std::size_t j = 0; j < grid.size(); ++j) f[j] = top[j];
        return f;
    }
};

// Regularized flattening rho_delta(x,z) = z + (e^{delta z |D|} eta)(x) with
// all first and second derivatives sampled on the strip grid. delta is halved
// from the hint until dz rho >= 1/2 everywhere.
struct FlattenMap {
    Grid grid;
    std::shared_ptr<const ZGrid> zgrid;
    double delta = 0.5;
    StripField rho, rho_z, rho_zz;
    std::vector<StripField> rho_x, rho_xz;  // d components each
    std::vector<StripField> rho_xx;         // symmetric, sym_index()
};

inline int sym_index(int i, int j, int d) {
    (void)d;
    // d <= 2: (0,0)->0, (0,1)/(1,0)->1, (1,1)->2
    return i + j;
}

FlattenMap build_map(const RealField& eta, std::shared_ptr<const ZGrid> zgrid,
                     double delta_hint);

// alpha = (dz rho)^2 / (1+|grad rho|^2), beta = -2 dz rho grad rho / (1+|grad rho|^2),
// gamma = (dz2 rho + alpha lap rho + beta . grad dz rho) / dz rho
struct EllipticCoefficients {
    Grid grid;
    std::shared_ptr<const ZGrid> zgrid;
    StripField alpha, gamma;
    std::vector<StripField> beta;
};

EllipticCoefficients coefficients(const FlattenMap& map);

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    double condition_estimate = 0.0;
};

// Variable-coefficient strip solver:
//   dz2 v + alpha lap v + beta . grad dz v - gamma dz v = alpha * source
//   v(.,0) = f,   dz v = |D| v at z = -depth (zero mode: dz v = 0)
// Preconditioned GMRES with the flat solve (alpha=1, beta=gamma=0) as
// preconditioner, assembled once per (grid, zgrid) and shareable across
// threads. `source` holds the Cartesian Laplacian values sampled on strip
// nodes; the alpha factor is applied internally.
class StripSolver {
  public:
    StripSolver(const Grid& g, std::shared_ptr<const ZGrid> zg);
    ~StripSolver();
    StripSolver(const StripSolver&) = delete;
    StripSolver& operator=(const StripSolver&) = delete;

    StripField solve(const EllipticCoefficients& coeffs, const RealField& f_surface,
                     const StripField* source, double tol, SolveStats* stats = nullptr,
                     const StripField* guess = nullptr) const;

    // one application of the discrete operator (boundary rows included)
    StripField apply_operator(const EllipticCoefficients& coeffs, const StripField& v) const;

    const Grid& grid() const;
    const std::shared_ptr<const ZGrid>& zgrid() const;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Free-function form used by modules that do not keep a solver around.
StripField solve_dirichlet(const StripSolver& solver, const EllipticCoefficients& coeffs,
                           const RealField& f_surface, const StripField* source, double tol,
                           SolveStats* stats = nullptr);

// Decoupling symbols of the flattened operator at one z level:
//   a = (-i beta.xi - sqrt(4 alpha |xi|^2 - (beta.xi)^2)) / 2
//   A = (-i beta.xi + sqrt(4 alpha |xi|^2 - (beta.xi)^2)) / 2
// Raises DegenerateSymbolError when the radicand fails ellipticity.
std::pair<SymbolTable, SymbolTable> decoupling_symbols(const EllipticCoefficients& coeffs,
                                                       int level);

// Cartesian derivatives of the unflattened function recovered from strip
// derivatives by the inverted chain rules.
struct CartesianDerivs {
    std::vector<StripField> grad_x;   // d components
    StripField dy;
    std::vector<StripField> dxy;      // d components
    StripField dyy;
    std::vector<StripField> hess_xx;  // symmetric, sym_index()
};

CartesianDerivs pushforward_derivatives(const StripField& v, const FlattenMap& map);

// z-derivative of a strip field (Chebyshev differentiation across levels)
StripField dz(const StripField& v);
// spectral horizontal derivative on every level
StripField dx(const StripField& v, int dim);

// integral over the strip of f * J dx dz with the flattening Jacobian J = dz rho
double strip_integral(const StripField& f, const FlattenMap& map);

namespace reference {
// Serial straightforward-loop implementation of the discrete strip operator,
// kept as the oracle for the batched/OpenMP production path.
StripField strip_apply(const StripSolver& solver, const EllipticCoefficients& coeffs,
                       const StripField& v);
}  // namespace reference

}  // namespace ww
