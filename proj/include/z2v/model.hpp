#pragma once

// Shared parameter pack for the staggered six-vertex chain with r=2
// inhomogeneities eta_J = i(-1)^{J-1} and twisted boundary conditions.

#include <cmath>
#include <complex>
#include <stdexcept>

namespace z2v {

using cplx = std::complex<double>;
inline constexpr double pi = 3.14159265358979323846;
inline constexpr cplx I{0.0, 1.0};

struct ModelParams {
    double n = 3.0;   // anisotropy, q = exp(i pi/(n+2)), n > 0
    double k = 0.0;   // twist, omega^2 = exp(2 pi i k), k in (-1/2, 1/2]

    ModelParams() = default;
    ModelParams(double n_, double k_) : n(n_), k(k_) {
        if (!(n > 0.0)) throw std::invalid_argument("ModelParams: need n > 0");
        if (!(k > -0.5) || k > 0.5) throw std::invalid_argument("ModelParams: need k in (-1/2, 1/2]");
    }

    double gamma() const { return pi / (n + 2.0); }
    cplx q() const { return std::exp(I * gamma()); }
    cplx omega() const { return std::exp(I * pi * k); }   // fixed branch of sqrt(omega^2)

    // alternating inhomogeneities, sites J = 1..N
    static cplx eta(int J) { return (J % 2 == 1) ? cplx(0.0, 1.0) : cplx(0.0, -1.0); }
};

// fixed-S^z sector of the length-N chain; N even, Bethe state has M = N/2 - Sz roots
struct Sector {
    int N = 0;
    int Sz = 0;

    Sector() = default;
    Sector(int N_, int Sz_) : N(N_), Sz(Sz_) {
        if (N <= 0 || N % 2 != 0) throw std::invalid_argument("Sector: N must be positive even");
        if (Sz < -N / 2 || Sz > N / 2) throw std::invalid_argument("Sector: |Sz| <= N/2");
    }
    int M() const { return N / 2 - Sz; }
};

} // namespace z2v
