#pragma once

// Special-function kernel. Everything here is pure and reentrant.
//
// Accuracy contracts (checked by tests/test_specfn.cpp):
//   log_gamma / digamma   rel err <= 1e-12 for |z| <= 50 away from the poles
//   lerch_phi             abs err <= 1e-12 (|z| < 1)
//   q_pochhammer          truncation |z qt^m| < 1e-16
//   dedekind_eta, theta1  abs err <= 1e-12
//   gauss_2f1             abs err <= 1e-12 (|x| < 1)
//   f1, f2                rel err <= 1e-9
//   laguerre_roots        residual <= 1e-10 * coefficient scale

#include <complex>
#include <vector>

namespace z2v::specfn {

using cplx = std::complex<double>;

// analytic branch: real on (0,inf), satisfies log_gamma(z+1) = log_gamma(z) + Log z
cplx log_gamma(cplx z);
cplx gamma_fn(cplx z);
cplx digamma(cplx z);

// Phi(z,1,alpha) = sum_{m>=0} z^m/(m+alpha); requires |z| < 1
cplx lerch_phi(cplx z, cplx alpha, double* err = nullptr);

// (z;qt)_inf = prod_{m>=0} (1 - z qt^m); requires |qt| < 1
cplx q_pochhammer(cplx z, cplx qt);

cplx dedekind_eta(cplx tau);           // Im tau > 0
cplx theta1(cplx u, cplx tau);         // Im tau > 0

cplx gauss_2f1(cplx a, cplx b, cplx c, cplx x, double* err = nullptr);

// f1(h,g) = pi Gamma(1-2g) Gamma(g+2h) / (sin(pi g) Gamma(1-g+2h))
cplx f1(cplx h, double g);

// f2(h,g): Gamma-weighted principal integral of S1(x)/(x+ih); for 1/2 < g < 1
// the continuation branch subtracts the pole term picked up at g = 1/2.
// Requires Re h > 0, g in (0,1), g != 1/2.
cplx f2(cplx h, double g, double* err = nullptr);

// integrand kernel of f2, exposed for tests: odd in x, decays like exp(-4 pi x)
double f2_s1(double x, double g);

// all m roots of the generalized Laguerre polynomial L_m^{(alpha)}(x);
// alpha may be any real (roots can leave the real axis for alpha < -1)
std::vector<cplx> laguerre_roots(int m, double alpha, double* residual = nullptr);

} // namespace z2v::specfn
