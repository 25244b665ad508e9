#pragma once

// Connection-coefficient side of the correspondence: direct integration of the
// auxiliary ODE
//   [-d^2/dz^2 + (p^2-1/4)/z^2 + 2is/z + 1
//      + sum_a (2/(z-w_a)^2 + n/(z(z-w_a))) + mu^{-2-n} z^n ] Phi = 0
// together with the closed-form functionals that the integration is checked
// against: the determinant ratio/product Dcheck and Rcheck, the vacuum
// asymptotic coefficients C0^{(+-)}, R0, the vacuum expansion coefficients
// J1, J2, and the local integrals of motion I1, I2, I3.
//
// Conventions
//   D+-(mu) = -+ mu sin(2 pi p/(n+2)) W[Phi_{+-p}, Xi],  D+-(0) = 1.
//   log D+-(mu) = - sum_j J_j^{(+-)} lambda^j with
//   mu = -i (n+2)^{-2/(n+2)} Gamma^2(-1/(n+2)) lambda.
//   D_{p,s}(w) = D0 * Dcheck,  D0 = 2^{2i(n+2)s/n} G(1/2+p-is)/G(1/2+p+is).
//   R_{p,s}(w) = R0 * Rcheck.
//
// The w-set must solve the apparent-singularity system (see singular.hpp);
// integrate_connection validates this. Numerical D evaluation requires n
// away from the resonant points 2/(2k-1); the closed-form routines do not.
// For L >= 1 keep |mu| >= 0.3: the apparent singularities sit at w_a/mu in
// the scaled frame and drift out of reach of the matching radius as mu -> 0.

#include "z2v/model.hpp"

#include <complex>
#include <vector>

namespace z2v::odeiqft {

using cplx = std::complex<double>;

// sqrt(pi) Gamma(1+1/n) / (2 Gamma(3/2+1/n))
double n0_const(double n);

cplx mu_of_lambda(cplx lambda, double n);
cplx lambda_of_mu(cplx mu, double n);

// Vacuum large-mu coefficients: D+ ~ C0^{(+-)} (+-mu)^{+-i(n+2)s/n - p}
// exp(N0 (+-mu)^{(n+2)/n}/cos(pi/n)) for Re(+-mu) > 0 and L = 0.
cplx c0_asym(cplx p, cplx s, double n, int sign);
cplx r0_asym(cplx p, cplx s, double n);   // C0^{(+)} C0^{(-)} in closed form
cplx d0_prefactor(cplx p, cplx s, double n);

// Determinant formulas on a solution set w (empty w gives 1).
// near_zero, when non-null, is set when the denominator loses all significance
// (expected exactly on the discrete-s locus).
cplx d_check(cplx p, cplx s, double n, const std::vector<cplx>& w,
             bool* near_zero = nullptr);
cplx r_check(cplx p, cplx s, double n, const std::vector<cplx>& w);
cplx d_full(cplx p, cplx s, double n, const std::vector<cplx>& w);

// prod over all par2(L) solution sets of Dcheck, evaluated without solving
// the w-system: graded closed form with exponents par2(L) - d_a(L), and the
// double-product form with par1 exponents. The two are independent routes.
cplx dcheck_product_closed_graded(cplx p, cplx s, double n, int L);
cplx dcheck_product_closed_double(cplx p, cplx s, double n, int L);

struct VacuumCoeffs {
    cplx j1, j2;
};
// Closed forms via f1/f2. j2 has a simple pole at n = 2; regularize evaluates
// the subtracted limit instead of throwing there.
VacuumCoeffs vacuum_coeffs(cplx p, cplx s, double n, bool regularize = false);

struct LocalIm {
    cplx i1, i2, i3;
};
LocalIm local_im_vacuum(cplx p, cplx s, double n);
LocalIm local_im(cplx p, cplx s, double n, const std::vector<cplx>& w);

// Finite part of the root-product asymptotics on a discrete trajectory with
// L = Lbar = 0 and s = +-i q_a, q_a = -p - 1/2 - a:
//   [ 2^{-4(n+2)q_a/n} G(pbar-p-a) / ((n+2)^{1+4p/(n+2)} (Sz+a)!) ]^2
//   [ 2^{1/2+p} G(1+p) G(1/2+p) / (G(1+2p/(n+2)) G(1+a+2p)) ]^4
double discrete_product_prefactor(double p, double pbar, int a, int sz, double n);

struct OdeProblem {
    double n = 3;
    cplx p, s;
    cplx mu;
    std::vector<cplx> w;
};

struct ConnectionResult {
    // log_d_* is always finite (up to log-branch); d_* = exp(log_d_*) and
    // overflows to inf once Re log exceeds the double range, which happens
    // quickly at large real mu
    cplx d_plus, d_minus;
    cplx log_d_plus, log_d_minus;
    double err_estimate = 0;
};

// Direct integration. Frobenius basis at the origin, inward sweep of the
// recessive solution from the far WKB region, Wronskian match in between.
// Throws on resonant n, on a Frobenius-resonant p (2p in the exponent
// lattice), or when w fails the apparent-singularity system.
ConnectionResult integrate_connection(const OdeProblem& prob);

// max over mu_grid of |q^{2p} D+(q mu) D-(mu/q) - q^{-2p} D-(q mu) D+(mu/q)
//                      - 2i sin(2 pi p/(n+2))|,  q = e^{i pi/(n+2)}
double wronskian_residual(const OdeProblem& prob, const std::vector<cplx>& mu_grid);

// Dcheck extracted from integration alone: the vacuum-normalized ratio
//   [D+(mu|w)/D+(mu|0)] / [D+(-mu|w)/D+(-mu|0)] -> Dcheck as mu -> +inf,
// accelerated in t = mu^{-(n+2)/n} over a geometric ladder.
cplx dcheck_from_ode(cplx p, cplx s, double n, const std::vector<cplx>& w,
                     double mu0 = 24.0, double ratio = 1.5, int points = 6);

// J1, J2 from finite differences of log D+ in lambda (L = 0 route).
VacuumCoeffs jvac_from_ode(cplx p, cplx s, double n);

// D+ sampled on |mu| = radius and turned into Taylor coefficients; decay of
// |a_k| radius^k probes entirety on the disc.
std::vector<cplx> taylor_coeffs_on_circle(cplx p, cplx s, double n,
                                          const std::vector<cplx>& w,
                                          double radius, int count);

} // namespace z2v::odeiqft
