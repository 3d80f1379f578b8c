#include "ww/strip.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace ww {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;

ZGrid::ZGrid(double depth_, int m_) : depth(depth_), m(m_) {
    if (!(depth > 0.0) || m < 8) throw Error("zgrid: depth must be positive and m >= 8");
    const int L = m + 1;
    z.resize(L);
    std::vector<double> u(L);
    for (int i = 0; i <= m; ++i) {
        u[i] = -std::cos(pi * i / m);  // ascending in [-1, 1]
        z[i] = depth * (u[i] - 1.0) / 2.0;
    }
    // barycentric weights for Chebyshev-Gauss-Lobatto nodes
    std::vector<double> w(L);
    for (int i = 0; i <= m; ++i) w[i] = (i % 2 == 0 ? 1.0 : -1.0) * (i == 0 || i == m ? 0.5 : 1.0);

    deriv.assign(static_cast<std::size_t>(L) * L, 0.0);
    for (int i = 0; i <= m; ++i) {
        double diag = 0.0;
        for (int j = 0; j <= m; ++j) {
            if (i == j) continue;
            double dij = (w[j] / w[i]) / (u[i] - u[j]);
            deriv[static_cast<std::size_t>(i) * L + j] = dij;
            diag -= dij;
        }
        deriv[static_cast<std::size_t>(i) * L + i] = diag;
    }
    // scale to [-depth, 0]
    double scale = 2.0 / depth;
    for (double& v : deriv) v *= scale;

    deriv2.assign(static_cast<std::size_t>(L) * L, 0.0);
    CMapMat D(deriv.data(), L, L);
    MapMat D2(deriv2.data(), L, L);
    D2 = D * D;

    // Clenshaw-Curtis weights on [-depth, 0]
    weights.assign(L, 0.0);
    if (m % 2 == 0) {
        weights[0] = weights[m] = 1.0 / (m * m - 1.0);
        for (int i = 1; i < m; ++i) {
            double theta = pi * i / m;
            double acc = 1.0;
            for (int k = 1; k <= m / 2 - 1; ++k)
                acc -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
            acc -= std::cos(m * theta) / (m * m - 1.0);
            weights[i] = 2.0 * acc / m;
        }
    } else {
        weights[0] = weights[m] = 1.0 / (m * m);
        for (int i = 1; i < m; ++i) {
            double theta = pi * i / m;
            double acc = 1.0;
            for (int k = 1; k <= (m - 1) / 2; ++k)
                acc -= 2.0 * std::cos(2.0 * k * theta) / (4.0 * k * k - 1.0);
            weights[i] = 2.0 * acc / m;
        }
    }
    for (double& wq : weights) wq *= depth / 2.0;
}

std::shared_ptr<const ZGrid> make_zgrid(double depth, int m) {
    return std::make_shared<const ZGrid>(depth, m);
}

namespace {

void levels_forward(const Grid& g, int levels, const double* v, Complex* scratch, Complex* hat) {
    const std::size_t len = g.size() * static_cast<std::size_t>(levels);
    for (std::size_t i = 0; i < len; ++i) scratch[i] = Complex(v[i], 0.0);
    fft::forward(g, scratch, hat, levels);
}

void levels_inverse(const Grid& g, int levels, const Complex* hat, Complex* scratch, double* v) {
    const std::size_t len = g.size() * static_cast<std::size_t>(levels);
    fft::inverse(g, hat, scratch, levels);
    for (std::size_t i = 0; i < len; ++i) v[i] = scratch[i].real();
}

}  // namespace

StripField dz(const StripField& v) {
    const int L = v.zgrid->levels();
    const std::size_t N = v.grid.size();
    StripField out(v.grid, v.zgrid);
    CMapMat D(v.zgrid->deriv.data(), L, L);
    CMapMat V(v.values.data(), L, static_cast<Eigen::Index>(N));
    MapMat O(out.values.data(), L, static_cast<Eigen::Index>(N));
    O.noalias() = D * V;
    return out;
}

StripField dx(const StripField& v, int dim) {
    const int L = v.zgrid->levels();
    const std::size_t N = v.grid.size();
    StripField out(v.grid, v.zgrid);
    std::vector<Complex> hat(N * L), scratch(N * L);
    levels_forward(v.grid, L, v.values.data(), scratch.data(), hat.data());
    const Grid& g = v.grid;
    double nyq = g.k_nyquist();
    for (int i = 0; i < L; ++i)
        for (std::size_t s = 0; s < N; ++s) {
            auto xi = g.xi(s);
            double x = xi[dim];
            hat[static_cast<std::size_t>(i) * N + s] *=
                std::fabs(x) >= nyq ? Complex(0.0) : Complex(0.0, x);
        }
    levels_inverse(v.grid, L, hat.data(), scratch.data(), out.values.data());
    return out;
}

// ---------------------------------------------------------------------------
// flattening map
// ---------------------------------------------------------------------------

namespace {

// e^{delta z_i |xi_s|} table, cached because the time stepper rebuilds the
// map with identical (grid, zgrid, delta) every substage
struct ExpTableCache {
    int d = 0, n = 0, m = 0;
    double L = 0.0, depth = 0.0, delta = 0.0;
    std::vector<double> tab;  // [level * N + slot]
};

const std::vector<double>& exp_table(const Grid& g, const ZGrid& zg, double delta) {
    thread_local ExpTableCache cache;
    if (cache.d == g.d && cache.n == g.n && cache.L == g.L && cache.m == zg.m &&
        cache.depth == zg.depth && cache.delta == delta)
        return cache.tab;
    const std::size_t N = g.size();
    const int L = zg.levels();
    cache = ExpTableCache{g.d, g.n, zg.m, g.L, zg.depth, delta, {}};
    cache.tab.resize(N * static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i)
        for (std::size_t s = 0; s < N; ++s)
            cache.tab[static_cast<std::size_t>(i) * N + s] =
                std::exp(delta * zg.z[i] * g.xi_norm(s));
    return cache.tab;
}

}  // namespace

FlattenMap build_map(const RealField& eta, std::shared_ptr<const ZGrid> zgrid,
                     double delta_hint) {
    const Grid& g = eta.grid;
    const int L = zgrid->levels();
    const std::size_t N = g.size();
    Spectrum ehat = analyze(eta);
    const double nyq = g.k_nyquist();

    double delta = delta_hint;
    if (!(delta > 0.0)) throw SurfaceTooRoughError("build_map: delta hint must be positive");

    // per-slot multiplier tables reused for every level
    std::vector<double> absxi(N);
    std::vector<Complex> ider(N * g.d);
    std::vector<double> mxx(N * static_cast<std::size_t>(g.d * (g.d + 1) / 2));
    for (std::size_t s = 0; s < N; ++s) {
        auto xi = g.xi(s);
        absxi[s] = std::hypot(xi[0], xi[1]);
        for (int a = 0; a < g.d; ++a)
            ider[static_cast<std::size_t>(a) * N + s] =
                std::fabs(xi[a]) >= nyq ? Complex(0.0) : Complex(0.0, xi[a]);
        for (int a = 0; a < g.d; ++a)
            for (int b = a; b < g.d; ++b) {
                bool cut = std::fabs(xi[a]) >= nyq || std::fabs(xi[b]) >= nyq;
                mxx[static_cast<std::size_t>(sym_index(a, b, g.d)) * N + s] =
                    cut ? 0.0 : -xi[a] * xi[b];
            }
    }

    FlattenMap map;
    thread_local std::vector<Complex> hat, work, scratch;
    hat.resize(N * static_cast<std::size_t>(L));
    work.resize(N * static_cast<std::size_t>(L));
    scratch.resize(N * static_cast<std::size_t>(L));
    while (true) {
        const std::vector<double>& etab = exp_table(g, *zgrid, delta);
        map = FlattenMap{};
        map.grid = g;
        map.zgrid = zgrid;
        map.delta = delta;
        map.rho = StripField(g, zgrid);
        map.rho_z = StripField(g, zgrid);
        map.rho_zz = StripField(g, zgrid);
        map.rho_x.assign(g.d, StripField(g, zgrid));
        map.rho_xz.assign(g.d, StripField(g, zgrid));
        map.rho_xx.assign(g.d * (g.d + 1) / 2, StripField(g, zgrid));

        for (int i = 0; i < L; ++i) {
            const double* ei = etab.data() + static_cast<std::size_t>(i) * N;
            Complex* hi = hat.data() + static_cast<std::size_t>(i) * N;
            for (std::size_t s = 0; s < N; ++s) hi[s] = ei[s] * ehat.coeffs[s];
        }

        auto derive = [&](auto&& mult, StripField& dst) {
            for (int i = 0; i < L; ++i) {
                Complex* wi = work.data() + static_cast<std::size_t>(i) * N;
                const Complex* hi = hat.data() + static_cast<std::size_t>(i) * N;
                for (std::size_t s = 0; s < N; ++s) wi[s] = mult(s) * hi[s];
            }
            levels_inverse(g, L, work.data(), scratch.data(), dst.values.data());
        };

        levels_inverse(g, L, hat.data(), scratch.data(), map.rho.values.data());
        derive([&](std::size_t s) { return Complex(delta * absxi[s], 0.0); }, map.rho_z);
        derive([&](std::size_t s) { return Complex(delta * delta * absxi[s] * absxi[s], 0.0); },
               map.rho_zz);
        for (int a = 0; a < g.d; ++a) {
            derive([&](std::size_t s) { return ider[static_cast<std::size_t>(a) * N + s]; },
                   map.rho_x[a]);
            derive([&](std::size_t s) {
                return ider[static_cast<std::size_t>(a) * N + s] * delta * absxi[s];
            }, map.rho_xz[a]);
        }
        for (int a = 0; a < g.d; ++a)
            for (int b = a; b < g.d; ++b) {
                int si = sym_index(a, b, g.d);
                derive([&](std::size_t s) {
                    return Complex(mxx[static_cast<std::size_t>(si) * N + s], 0.0);
                }, map.rho_xx[si]);
            }

        // rho = z + smoothed eta, dz rho = 1 + ...
        for (int i = 0; i < L; ++i) {
            double* rr = map.rho.level(i);
            double* rz = map.rho_z.level(i);
            for (std::size_t j = 0; j < N; ++j) {
                rr[j] += zgrid->z[i];
                rz[j] += 1.0;
            }
        }

        double min_rz = map.rho_z.values[0];
        for (double q : map.rho_z.values) min_rz = std::min(min_rz, q);
        if (min_rz >= 0.5) break;
        delta *= 0.5;
        if (delta < 1e-6)
            throw SurfaceTooRoughError("build_map: no admissible smoothing parameter above 1e-6");
    }
    return map;
}

EllipticCoefficients coefficients(const FlattenMap& map) {
    const Grid& g = map.grid;
    const std::size_t total = map.rho.values.size();
    EllipticCoefficients c;
    c.grid = g;
    c.zgrid = map.zgrid;
    c.alpha = StripField(g, map.zgrid);
    c.gamma = StripField(g, map.zgrid);
    c.beta.assign(g.d, StripField(g, map.zgrid));

    for (std::size_t i = 0; i < total; ++i) {
        double rz = map.rho_z.values[i];
        double g2 = 0.0;
        for (int a = 0; a < g.d; ++a) g2 += map.rho_x[a].values[i] * map.rho_x[a].values[i];
        double denom = 1.0 + g2;
        double alpha = rz * rz / denom;
        c.alpha.values[i] = alpha;
        double lap = 0.0;
        for (int a = 0; a < g.d; ++a) lap += map.rho_xx[sym_index(a, a, g.d)].values[i];
        double bdot = 0.0;
        for (int a = 0; a < g.d; ++a) {
            double beta = -2.0 * rz * map.rho_x[a].values[i] / denom;
            c.beta[a].values[i] = beta;
            bdot += beta * map.rho_xz[a].values[i];
        }
        c.gamma.values[i] = (map.rho_zz.values[i] + alpha * lap + bdot) / rz;
    }
    return c;
}

// ---------------------------------------------------------------------------
// solver
// ---------------------------------------------------------------------------

struct StripSolver::Impl {
    Grid grid;
    std::shared_ptr<const ZGrid> zgrid;
    std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> lus;
    std::vector<int> slot_lu;                // spectral slot -> lu index
    std::vector<std::vector<int>> lu_slots;  // lu index -> slots
    std::vector<double> slot_absxi;
    std::vector<double> neg_xi2;     // -|xi|^2 per slot
    std::vector<Complex> ideriv;     // [dim * N + slot] i xi_dim, Nyquist zeroed

    // scratch reused across operator applications within one solve
    struct Workspace {
        std::vector<double> vz, vzz, lap;
        std::vector<std::vector<double>> vzx;
        std::vector<Complex> ca, cb, cc;
        std::vector<Complex> row_a, row_b;
        void ensure(int L, std::size_t N, int d) {
            std::size_t len = static_cast<std::size_t>(L) * N;
            if (vz.size() != len) {
                vz.resize(len);
                vzz.resize(len);
                lap.resize(len);
                vzx.assign(d, std::vector<double>(len));
                ca.resize(len);
                cb.resize(len);
                cc.resize(len);
                row_a.resize(N);
                row_b.resize(N);
            }
        }
    };

    Impl(const Grid& g, std::shared_ptr<const ZGrid> zg) : grid(g), zgrid(std::move(zg)) {
        const int L = zgrid->levels();
        const std::size_t N = grid.size();
        CMapMat D(zgrid->deriv.data(), L, L);
        CMapMat D2(zgrid->deriv2.data(), L, L);

        slot_lu.resize(N);
        slot_absxi.resize(N);
        neg_xi2.resize(N);
        ideriv.resize(N * grid.d);
        const double nyq = grid.k_nyquist();
        std::map<long long, int> seen;
        for (std::size_t s = 0; s < N; ++s) {
            int idx[2];
            grid.index_split(s, idx);
            long long mx = grid.fold(idx[0]);
            long long my = grid.d == 2 ? grid.fold(idx[1]) : 0;
            long long key = mx * mx + my * my;
            slot_absxi[s] = grid.k_min() * std::sqrt(static_cast<double>(key));
            neg_xi2[s] = -slot_absxi[s] * slot_absxi[s];
            auto xi = grid.xi(s);
            for (int a = 0; a < grid.d; ++a)
                ideriv[static_cast<std::size_t>(a) * N + s] =
                    std::fabs(xi[a]) >= nyq ? Complex(0.0) : Complex(0.0, xi[a]);

            auto it = seen.find(key);
            if (it == seen.end()) {
                int id = static_cast<int>(lus.size());
                seen[key] = id;
                Eigen::MatrixXd A = Eigen::MatrixXd::Zero(L, L);
                double absxi = slot_absxi[s];
                A.row(0) = D.row(0);
                A(0, 0) -= absxi;
                for (int i = 1; i < L - 1; ++i) {
                    A.row(i) = D2.row(i);
                    A(i, i) -= absxi * absxi;
                }
                A(L - 1, L - 1) = 1.0;
                lus.emplace_back(A);
                lu_slots.emplace_back();
                slot_lu[s] = id;
                lu_slots[id].push_back(static_cast<int>(s));
            } else {
                slot_lu[s] = it->second;
                lu_slots[it->second].push_back(static_cast<int>(s));
            }
        }
    }

    // y = K v (discrete operator with boundary rows)
    void apply(const EllipticCoefficients& co, const double* v, double* y, Workspace& ws) const {
        const int L = zgrid->levels();
        const std::size_t N = grid.size();
        ws.ensure(L, N, grid.d);
        CMapMat D(zgrid->deriv.data(), L, L);
        CMapMat D2(zgrid->deriv2.data(), L, L);
        CMapMat V(v, L, static_cast<Eigen::Index>(N));
        MapMat VZ(ws.vz.data(), L, static_cast<Eigen::Index>(N));
        MapMat VZZ(ws.vzz.data(), L, static_cast<Eigen::Index>(N));

#pragma omp parallel sections
        {
#pragma omp section
            VZ.noalias() = D * V;
#pragma omp section
            VZZ.noalias() = D2 * V;
        }

        // horizontal pieces: lap v from vhat, grad(dz v) from vzhat
        levels_forward(grid, L, v, ws.cc.data(), ws.ca.data());
        for (int i = 0; i < L; ++i) {
            Complex* t = ws.cb.data() + static_cast<std::size_t>(i) * N;
            const Complex* h = ws.ca.data() + static_cast<std::size_t>(i) * N;
            for (std::size_t s = 0; s < N; ++s) t[s] = neg_xi2[s] * h[s];
        }
        levels_inverse(grid, L, ws.cb.data(), ws.cc.data(), ws.lap.data());

        levels_forward(grid, L, ws.vz.data(), ws.cc.data(), ws.ca.data());
        for (int a = 0; a < grid.d; ++a) {
            const Complex* id = ideriv.data() + static_cast<std::size_t>(a) * N;
            for (int i = 0; i < L; ++i) {
                Complex* t = ws.cb.data() + static_cast<std::size_t>(i) * N;
                const Complex* h = ws.ca.data() + static_cast<std::size_t>(i) * N;
                for (std::size_t s = 0; s < N; ++s) t[s] = id[s] * h[s];
            }
            levels_inverse(grid, L, ws.cb.data(), ws.cc.data(), ws.vzx[a].data());
        }

        // interior rows
#pragma omp parallel for schedule(static)
        for (int i = 1; i < L - 1; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * N;
            const double* al = co.alpha.values.data() + off;
            const double* ga = co.gamma.values.data() + off;
            double* yo = y + off;
            for (std::size_t j = 0; j < N; ++j)
                yo[j] = ws.vzz[off + j] + al[j] * ws.lap[off + j] - ga[j] * ws.vz[off + j];
            for (int a = 0; a < grid.d; ++a) {
                const double* be = co.beta[a].values.data() + off;
                const double* gx = ws.vzx[a].data() + off;
                for (std::size_t j = 0; j < N; ++j) yo[j] += be[j] * gx[j];
            }
        }
        // bottom row: dz v - |D| v
        {
            for (std::size_t j = 0; j < N; ++j) ws.row_a[j] = Complex(v[j], 0.0);
            fft::forward(grid, ws.row_a.data(), ws.row_b.data());
            for (std::size_t s = 0; s < N; ++s) ws.row_b[s] *= slot_absxi[s];
            fft::inverse(grid, ws.row_b.data(), ws.row_a.data());
            for (std::size_t j = 0; j < N; ++j) y[j] = ws.vz[j] - ws.row_a[j].real();
        }
        // top row: Dirichlet
        const std::size_t top = static_cast<std::size_t>(L - 1) * N;
        for (std::size_t j = 0; j < N; ++j) y[top + j] = v[top + j];
    }

    // y = M^-1 r (flat-surface solve per mode)
    void precondition(const double* r, double* y, Workspace& ws) const {
        const int L = zgrid->levels();
        const std::size_t N = grid.size();
        ws.ensure(L, N, grid.d);
        levels_forward(grid, L, r, ws.cc.data(), ws.ca.data());

        std::size_t maxslots = 0;
        for (const auto& s : lu_slots) maxslots = std::max(maxslots, s.size());

#pragma omp parallel
        {
            Eigen::MatrixXd rhs(L, 2 * maxslots), sol(L, 2 * maxslots);
#pragma omp for schedule(dynamic, 8)
            for (long long gidx = 0; gidx < static_cast<long long>(lus.size()); ++gidx) {
                const auto& slots = lu_slots[gidx];
                const Eigen::Index cols = static_cast<Eigen::Index>(2 * slots.size());
                for (std::size_t c = 0; c < slots.size(); ++c)
                    for (int i = 0; i < L; ++i) {
                        Complex val = ws.ca[static_cast<std::size_t>(i) * N + slots[c]];
                        rhs(i, 2 * c) = val.real();
                        rhs(i, 2 * c + 1) = val.imag();
                    }
                sol.leftCols(cols).noalias() = lus[gidx].solve(rhs.leftCols(cols));
                for (std::size_t c = 0; c < slots.size(); ++c)
                    for (int i = 0; i < L; ++i)
                        ws.cb[static_cast<std::size_t>(i) * N + slots[c]] =
                            Complex(sol(i, 2 * c), sol(i, 2 * c + 1));
            }
        }
        levels_inverse(grid, L, ws.cb.data(), ws.cc.data(), y);
    }
};

StripSolver::StripSolver(const Grid& g, std::shared_ptr<const ZGrid> zg)
    : impl_(std::make_unique<Impl>(g, std::move(zg))) {}

StripSolver::~StripSolver() = default;

const Grid& StripSolver::grid() const { return impl_->grid; }
const std::shared_ptr<const ZGrid>& StripSolver::zgrid() const { return impl_->zgrid; }

StripField StripSolver::apply_operator(const EllipticCoefficients& coeffs,
                                       const StripField& v) const {
    StripField out(impl_->grid, impl_->zgrid);
    thread_local Impl::Workspace ws;
    impl_->apply(coeffs, v.values.data(), out.values.data(), ws);
    return out;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace

StripField StripSolver::solve(const EllipticCoefficients& coeffs, const RealField& f_surface,
                              const StripField* source, double tol, SolveStats* stats,
                              const StripField* guess) const {
    const Impl& im = *impl_;
    require_same_grid(im.grid, f_surface.grid, "strip solve");
    const int L = im.zgrid->levels();
    const std::size_t N = im.grid.size();
    const std::size_t ndof = static_cast<std::size_t>(L) * N;

    // right-hand side: alpha*source at interior, f at top, 0 at bottom
    std::vector<double> b(ndof, 0.0);
    if (source) {
        for (int i = 1; i < L - 1; ++i) {
            const std::size_t off = static_cast<std::size_t>(i) * N;
            for (std::size_t j = 0; j < N; ++j)
                b[off + j] = coeffs.alpha.values[off + j] * source->values[off + j];
        }
    }
    for (std::size_t j = 0; j < N; ++j) b[(static_cast<std::size_t>(L) - 1) * N + j] = f_surface[j];

    double bnorm = norm2(b);
    StripField x = guess ? *guess : StripField(im.grid, im.zgrid);
    if (bnorm == 0.0) {
        if (stats) *stats = SolveStats{0, 0.0, 1.0};
        return StripField(im.grid, im.zgrid);
    }

    // scratch persists across solves on the same thread
    struct SolveScratch {
        std::size_t ndof = 0;
        Impl::Workspace ws;
        std::vector<double> z, w, Kx;
        std::vector<std::vector<double>> basis;
    };
    thread_local SolveScratch sc;
    if (sc.ndof != ndof) {
        sc = SolveScratch{};
        sc.ndof = ndof;
        sc.z.resize(ndof);
        sc.w.resize(ndof);
        sc.Kx.resize(ndof);
    }
    Impl::Workspace& ws = sc.ws;
    std::vector<double>&z = sc.z, &w = sc.w, &Kx = sc.Kx;
    std::vector<std::vector<double>>& basis = sc.basis;

    const int restart = 40;
    const int max_total = 400;
    int total_iters = 0;
    double cond_est = 1.0;

    auto true_residual = [&]() {
        im.apply(coeffs, x.values.data(), Kx.data(), ws);
        for (std::size_t i = 0; i < ndof; ++i) Kx[i] = b[i] - Kx[i];
        return norm2(Kx) / bnorm;
    };

    double rel;
    if (guess) {
        rel = true_residual();
    } else {
        // zero start: the residual is b itself
        Kx = b;
        rel = 1.0;
    }
    double best_rel = rel;
    int stalled = 0;
    while (rel > tol && total_iters < max_total && stalled < 2) {
        // left-preconditioned GMRES cycle from current x; Kx holds b - K x
        im.precondition(Kx.data(), z.data(), ws);
        double beta = norm2(z);
        if (beta == 0.0) break;

        if (basis.empty()) basis.emplace_back(ndof);
        basis[0] = z;
        for (double& q : basis[0]) q /= beta;
        std::vector<double> H((restart + 1) * restart, 0.0);
        std::vector<double> cs(restart), sn(restart), gvec(restart + 1, 0.0);
        gvec[0] = beta;
        int k = 0;
        for (; k < restart && total_iters < max_total; ++k, ++total_iters) {
            im.apply(coeffs, basis[k].data(), w.data(), ws);
            im.precondition(w.data(), z.data(), ws);
            // modified Gram-Schmidt
            for (int i = 0; i <= k; ++i) {
                double h = dot(z, basis[i]);
                H[static_cast<std::size_t>(i) * restart + k] = h;
                const std::vector<double>& bi = basis[i];
                for (std::size_t q = 0; q < ndof; ++q) z[q] -= h * bi[q];
            }
            double hk1 = norm2(z);
            // Givens rotations
            for (int i = 0; i < k; ++i) {
                double t = H[static_cast<std::size_t>(i) * restart + k];
                double b2 = H[static_cast<std::size_t>(i + 1) * restart + k];
                H[static_cast<std::size_t>(i) * restart + k] = cs[i] * t + sn[i] * b2;
                H[static_cast<std::size_t>(i + 1) * restart + k] = -sn[i] * t + cs[i] * b2;
            }
            double t = H[static_cast<std::size_t>(k) * restart + k];
            double denom = std::hypot(t, hk1);
            cs[k] = denom == 0.0 ? 1.0 : t / denom;
            sn[k] = denom == 0.0 ? 0.0 : hk1 / denom;
            H[static_cast<std::size_t>(k) * restart + k] = denom;
            gvec[k + 1] = -sn[k] * gvec[k];
            gvec[k] = cs[k] * gvec[k];

            bool expanded = false;
            if (hk1 > 0.0) {
                if (static_cast<int>(basis.size()) <= k + 1) basis.emplace_back(ndof);
                basis[k + 1] = z;
                for (double& q : basis[k + 1]) q /= hk1;
                expanded = true;
            }
            double inner_rel = std::fabs(gvec[k + 1]) / beta;
            if (!expanded || inner_rel < 0.1 * tol) {
                ++k;
                ++total_iters;
                break;
            }
        }
        // back substitution
        std::vector<double> yv(k, 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double acc = gvec[i];
            for (int j = i + 1; j < k; ++j)
                acc -= H[static_cast<std::size_t>(i) * restart + j] * yv[j];
            yv[i] = acc / H[static_cast<std::size_t>(i) * restart + i];
        }
        for (int i = 0; i < k; ++i) {
            const std::vector<double>& bi = basis[i];
            for (std::size_t q = 0; q < ndof; ++q) x.values[q] += yv[i] * bi[q];
        }

        double hmax = 0.0, hmin = 1e300;
        for (int i = 0; i < k; ++i) {
            double hd = std::fabs(H[static_cast<std::size_t>(i) * restart + i]);
            hmax = std::max(hmax, hd);
            hmin = std::min(hmin, hd);
        }
        if (hmin > 0.0) cond_est = std::max(cond_est, hmax / hmin);

        rel = true_residual();
        // round-off floor: stop once restarts no longer help
        if (rel > 0.5 * best_rel) ++stalled;
        best_rel = std::min(best_rel, rel);
    }

    if (stats) *stats = SolveStats{total_iters, rel, cond_est};
    if (rel > tol) {
        std::ostringstream msg;
        msg << "strip solve stalled at relative residual " << rel << " after " << total_iters
            << " iterations";
        throw IllConditionedError(msg.str(), cond_est);
    }
    return x;
}

StripField solve_dirichlet(const StripSolver& solver, const EllipticCoefficients& coeffs,
                           const RealField& f_surface, const StripField* source, double tol,
                           SolveStats* stats) {
    return solver.solve(coeffs, f_surface, source, tol, stats);
}

std::pair<SymbolTable, SymbolTable> decoupling_symbols(const EllipticCoefficients& coeffs,
                                                       int level) {
    const Grid& g = coeffs.grid;
    const std::size_t N = g.size();
    const double* alpha = coeffs.alpha.level(level);
    SymbolTable lo(g, 1.0), hi(g, 1.0);
    for (std::size_t s = 0; s < N; ++s) {
        auto xi = g.xi(s);
        double r2 = xi[0] * xi[0] + xi[1] * xi[1];
        Complex* clo = lo.column(s);
        Complex* chi_ = hi.column(s);
        for (std::size_t j = 0; j < N; ++j) {
            double bdot = 0.0;
            for (int a = 0; a < g.d; ++a) bdot += coeffs.beta[a].level(level)[j] * xi[a];
            double rad = 4.0 * alpha[j] * r2 - bdot * bdot;
            if (rad < 0.0) {
                std::ostringstream msg;
                msg << "decoupling symbols degenerate at node " << j << ", |xi|=" << std::sqrt(r2);
                throw DegenerateSymbolError(msg.str());
            }
            double root = std::sqrt(rad);
            clo[j] = 0.5 * Complex(-root, -bdot);
            chi_[j] = 0.5 * Complex(root, -bdot);
        }
    }
    return {lo, hi};
}

CartesianDerivs pushforward_derivatives(const StripField& v, const FlattenMap& map) {
    const Grid& g = v.grid;
    const std::size_t total = v.values.size();
    StripField vz = dz(v);
    StripField vzz = dz(vz);
    std::vector<StripField> vx, vxz;
    for (int a = 0; a < g.d; ++a) {
        vx.push_back(dx(v, a));
        vxz.push_back(dx(vz, a));
    }
    std::vector<StripField> vxx;
    for (int a = 0; a < g.d; ++a)
        for (int b = a; b < g.d; ++b) vxx.push_back(dx(vx[a], b));

    CartesianDerivs out;
    out.dy = StripField(g, v.zgrid);
    out.dyy = StripField(g, v.zgrid);
    out.grad_x.assign(g.d, StripField(g, v.zgrid));
    out.dxy.assign(g.d, StripField(g, v.zgrid));
    out.hess_xx.assign(g.d * (g.d + 1) / 2, StripField(g, v.zgrid));

    for (std::size_t i = 0; i < total; ++i) {
        double rz = map.rho_z.values[i];
        double dy = vz.values[i] / rz;
        out.dy.values[i] = dy;
        double dyy = (vzz.values[i] - dy * map.rho_zz.values[i]) / (rz * rz);
        out.dyy.values[i] = dyy;
        for (int a = 0; a < g.d; ++a) {
            out.grad_x[a].values[i] = vx[a].values[i] - dy * map.rho_x[a].values[i];
            out.dxy[a].values[i] = (vxz[a].values[i] - dy * map.rho_xz[a].values[i]) / rz -
                                   dyy * map.rho_x[a].values[i];
        }
        for (int a = 0; a < g.d; ++a)
            for (int b = a; b < g.d; ++b) {
                int si = sym_index(a, b, g.d);
                out.hess_xx[si].values[i] =
                    vxx[si].values[i] - out.dxy[a].values[i] * map.rho_x[b].values[i] -
                    out.dxy[b].values[i] * map.rho_x[a].values[i] -
                    dyy * map.rho_x[a].values[i] * map.rho_x[b].values[i] -
                    dy * map.rho_xx[si].values[i];
            }
    }
    return out;
}

double strip_integral(const StripField& f, const FlattenMap& map) {
    const int L = f.zgrid->levels();
    const std::size_t N = f.grid.size();
    double acc = 0.0;
    for (int i = 0; i < L; ++i) {
        const double* fl = f.level(i);
        const double* jz = map.rho_z.level(i);
        double level_sum = 0.0;
        for (std::size_t j = 0; j < N; ++j) level_sum += fl[j] * jz[j];
        acc += f.zgrid->weights[i] * level_sum;
    }
    return acc * f.grid.cell_volume();
}

namespace reference {

StripField strip_apply(const StripSolver& solver, const EllipticCoefficients& coeffs,
                       const StripField& v) {
    const Grid& g = solver.grid();
    const ZGrid& zg = *solver.zgrid();
    const int L = zg.levels();
    const std::size_t N = g.size();
    StripField out(g, solver.zgrid());

    // z derivatives by plain loops
    std::vector<double> vz(static_cast<std::size_t>(L) * N, 0.0);
    std::vector<double> vzz(static_cast<std::size_t>(L) * N, 0.0);
    for (int i = 0; i < L; ++i)
        for (int k = 0; k < L; ++k) {
            double dik = zg.deriv[static_cast<std::size_t>(i) * L + k];
            double d2ik = zg.deriv2[static_cast<std::size_t>(i) * L + k];
            const double* vk = v.level(k);
            for (std::size_t j = 0; j < N; ++j) {
                vz[static_cast<std::size_t>(i) * N + j] += dik * vk[j];
                vzz[static_cast<std::size_t>(i) * N + j] += d2ik * vk[j];
            }
        }

    // horizontal derivatives one level at a time
    auto level_field = [&](const double* p) {
        RealField f(g);
        for (std::size_t j = 0; j < N; ++j) f[j] = p[j];
        return f;
    };
    for (int i = 1; i < L - 1; ++i) {
        RealField vi = level_field(v.level(i));
        RealField lap = laplacian(vi);
        RealField vzi = level_field(&vz[static_cast<std::size_t>(i) * N]);
        std::vector<RealField> gz = gradient(vzi);
        double* yo = out.level(i);
        const std::size_t off = static_cast<std::size_t>(i) * N;
        for (std::size_t j = 0; j < N; ++j) {
            double acc = vzz[off + j] + coeffs.alpha.values[off + j] * lap[j] -
                         coeffs.gamma.values[off + j] * vz[off + j];
            for (int a = 0; a < g.d; ++a) acc += coeffs.beta[a].values[off + j] * gz[a][j];
            yo[j] = acc;
        }
    }
    // bottom row
    RealField bottom = level_field(v.level(0));
    RealField absd = apply_multiplier(bottom, [](const std::array<double, 2>& xi) {
        return Complex(std::hypot(xi[0], xi[1]), 0.0);
    });
    for (std::size_t j = 0; j < N; ++j) out.level(0)[j] = vz[j] - absd[j];
    // top row
    for (std::size_t j = 0; j < N; ++j) out.level(L - 1)[j] = v.level(L - 1)[j];
    return out;
}

}  // namespace reference

}  // namespace ww
