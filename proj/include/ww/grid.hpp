#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ww/errors.hpp"

namespace ww {

using Complex = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

// Uniform periodic grid on [0,L)^d with n nodes per dimension.
// Wavenumbers are 2*pi*m/L for integer m in the symmetric range [-n/2, n/2).
struct Grid {
    int d = 1;
    int n = 8;
    double L = 2.0 * pi;

    Grid() = default;
    Grid(int d_, int n_, double L_) : d(d_), n(n_), L(L_) {
        if (d < 1 || d > 2)
            throw GridError("grid dimension must be 1 or 2");
        if (n < 8 || (n & (n - 1)) != 0)
            throw GridError("grid size must be a power of two >= 8");
        if (!(L > 0.0))
            throw GridError("period length must be positive");
    }

    std::size_t size() const {
        std::size_t s = static_cast<std::size_t>(n);
        return d == 1 ? s : s * s;
    }
    double dx() const { return L / n; }
    double cell_volume() const { return d == 1 ? dx() : dx() * dx(); }
    // lowest nonzero wavenumber magnitude
    double k_min() const { return 2.0 * pi / L; }
    // largest per-axis wavenumber magnitude (Nyquist)
    double k_nyquist() const { return pi * n / L; }

    // integer mode along one axis for per-axis index j in [0, n)
    int fold(int j) const { return j <= n / 2 ? j : j - n; }

    void index_split(std::size_t flat, int idx[2]) const {
        idx[0] = static_cast<int>(flat % static_cast<std::size_t>(n));
        idx[1] = d == 2 ? static_cast<int>(flat / static_cast<std::size_t>(n)) : 0;
    }
    // physical coordinates of node `flat`
    std::array<double, 2> node(std::size_t flat) const {
        int idx[2];
        index_split(flat, idx);
        return {idx[0] * dx(), idx[1] * dx()};
    }
    // wavenumber vector of spectral slot `flat`
    std::array<double, 2> xi(std::size_t flat) const {
        int idx[2];
        index_split(flat, idx);
        double f = 2.0 * pi / L;
        return {f * fold(idx[0]), d == 2 ? f * fold(idx[1]) : 0.0};
    }
    double xi_norm(std::size_t flat) const {
        auto v = xi(flat);
        return std::sqrt(v[0] * v[0] + v[1] * v[1]);
    }
    bool nyquist_slot(std::size_t flat) const {
        int idx[2];
        index_split(flat, idx);
        if (idx[0] == n / 2) return true;
        return d == 2 && idx[1] == n / 2;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.d == b.d && a.n == b.n && a.L == b.L;
    }
};

// Real scalar field sampled at grid nodes.
struct RealField {
    Grid grid;
    std::vector<double> values;

    RealField() = default;
    explicit RealField(const Grid& g) : grid(g), values(g.size(), 0.0) {}
    RealField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != g.size())
            throw GridError("sample count does not match grid");
    }

    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }

    RealField& operator+=(const RealField& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
        return *this;
    }
    RealField& operator-=(const RealField& o) {
        for (std::size_t i = 0; i < values.size(); ++i) values[i] -= o.values[i];
        return *this;
    }
    RealField& operator*=(double c) {
        for (double& v : values) v *= c;
        return *this;
    }
};

inline RealField operator+(RealField a, const RealField& b) { return a += b; }
inline RealField operator-(RealField a, const RealField& b) { return a -= b; }
inline RealField operator*(double c, RealField a) { return a *= c; }

// Complex Fourier coefficients of a grid field, indexed in FFT slot order.
// For a real field the coefficients satisfy conjugate symmetry.
struct Spectrum {
    Grid grid;
    std::vector<Complex> coeffs;

    Spectrum() = default;
    explicit Spectrum(const Grid& g) : grid(g), coeffs(g.size(), Complex(0.0)) {}
};

void require_same_grid(const Grid& a, const Grid& b, const char* where);

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
    if (!(a == b))
        throw GridError(std::string(where) + ": grid mismatch");
}

}  // namespace ww
