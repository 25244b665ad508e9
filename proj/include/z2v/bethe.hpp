#pragma once

#include "z2v/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace z2v::bethe {

// Bethe configurations of the staggered chain are tracked through
// beta_m = -log(zeta_m)/2. In this chart the equations close over two
// elementary kernels,
//
//   s(b) = cosh(2b - i g) / cosh(2b + i g),   g = pi/(n+2),
//   r(d) = sinh(d + i g) / sinh(d - i g),
//
// and a configuration solves
//
//   (N/2) Log s(beta_m) - 2 pi i k - sum_{j != m} Log r(beta_j - beta_m)
//       = 2 pi i pattern_m .
//
// Positive real roots sit on Im beta = 0 and negative real ones on
// Im beta = -pi/2; beta is only defined mod i pi. Flows keep the branch
// continuous instead of re-wrapping, so a root may drift out of the
// principal window without harm. The integers pattern_m depend on the
// grouping of the logarithms above (one principal Log per factor); they are
// re-frozen from the configuration at each refinement entry, which absorbs
// cut crossings along a flow.
struct RootState {
    double n = 3;
    double k = 0;
    int N = 8;
    std::vector<cplx> beta;
    std::vector<long> pattern;  // branch integers of the last refinement
    double residual = 1;        // sup_m |exp(G_m) - 1|

    int M() const { return (int)beta.size(); }
    int sz2() const { return N - 2 * M(); }  // twice S^z
    std::vector<cplx> zeta() const;
};

// state from multiplicative roots; beta on the principal branch
RootState from_roots(double n, double k, int N, const std::vector<cplx>& zeta);

// branch-free multiplicative residual of the product-form equations
double bae_residual(const RootState&);

struct RefineReport {
    bool converged = false;
    int iterations = 0;
    double residual = 0;
};

// damped Newton on the logarithmic equations; the step is clipped to
// 0.3 x (smallest pairwise root distance) and backtracked until the
// residual decreases
RefineReport refine(RootState&, double tol = 1e-12, int max_iter = 80);

struct Observables {
    cplx E = 0;               // energy
    cplx E_plus = 0;          // chiral parts, E = E_plus + E_minus
    cplx E_minus = 0;
    cplx K = 0;               // two-site translation eigenvalue
    cplx sqrtK = 0;           // square root fixed by the chiral factorization
    cplx B = 0;               // quasi-shift eigenvalue
    cplx b = 0;               // (n/4pi) log B, reduced to -n/4 < Im b <= n/4
    bool b_boundary = false;  // Im b pinned at the strip edge (B real negative)
    double delta_e = 0;       // N (E - N e_inf) / (4 pi v_F)
    double momentum = 0;      // (N/4pi) Im log K - (Sz) k; integer mod N/2
};
Observables observables(const RootState&);

double fermi_velocity(double n);         // 2(n+2)/n
double ground_energy_density(double n);  // bulk energy per site, infinite chain

// h_j = j^{-1} sum_m zeta_m^{-j}
cplx power_sum(const RootState&, int j);

// h_j plus the finite-size counterterm (-1)^{j/2+1} N / (2j cos(pi j/(n+2)))
// for even j with j n < n + 2; equal to power_sum otherwise
cplx power_sum_reg(const RootState&, int j);

struct SumRuleCheck {
    cplx lattice = 0;    // scaled (and, if needed, subtracted) power sum
    cplx predicted = 0;  // connection-coefficient prediction at s = b(N)
    double rel_err = 0;
    bool log_variant = false;  // resonant size scaling j n = n + 2
};

// Compares the scaled lattice power sum against the w = 0 prediction
// evaluated at s = b(N):
//   (N/2N0)^{-jn/(n+2)} h_j^(reg)  vs  J_j / C'^j,
//   C' = (n+2)^{-2/(n+2)} Gamma^2(-1/(n+2)),
// for j = 1, 2. At j = 2, n = 2 the scaling degenerates to N^{-1} and the
// comparison becomes N^{-1} h_2 - log(N B_1/2)/(2 pi) with B_1 = e^gamma/pi.
// Meaningful for primary (winding-free) states.
SumRuleCheck vacuum_sum_rule(const RootState&, const Observables&, int j);

// Logs of the edge and double-angle root products. Accumulated per root, so
// the imaginary parts are only fixed mod 2 pi.
struct RootProducts {
    cplx log_edge_plus;   // log prod_m q (zeta_m - i/q)(1/zeta_m - i/q)
    cplx log_edge_minus;  // log prod_m q (zeta_m + i/q)(1/zeta_m + i/q)
    cplx log_inv_square;  // log prod_m (zeta_m^{-2} + q^2)(zeta_m^{-2} + q^{-2})
    cplx log_square;      // log prod_m (zeta_m^{+2} + q^2)(zeta_m^{+2} + q^{-2})
    cplx log_zeta_square; // log prod_m zeta_m^2 = -4 sum_m beta_m
};
RootProducts root_products(const RootState&);

// finite part of a product: exp(log_raw - rho log(N/2N0) - N c_site). For the
// double-angle products rho = 4np/(n+2) (plus 8 q_a on a discrete-limit
// trajectory) with c_site = log(4n/(n+2)); for the edge products
// rho = n(p+pbar)/(n+2) -+ 2 i b with c_site = log(4n/(n+2))/2.
cplx finite_part(const RootState&, cplx log_raw, cplx rho, double c_site);

// log of the determinant-form norm (CPT Psi, Psi); exact at finite N.
// M = 0 gives 0, M = 1 reduces to log[(q - 1/q)^2 kappa(zeta_1)]
cplx gaudin_log_norm(const RootState&);

struct FlowOptions {
    int step = 4;          // keeps (-1)^{N/2 - Sz} fixed along the flow
    double tol = 1e-12;
    int max_bisect = 12;   // ramp interval halvings before declaring failure
};

struct TrajectoryPoint {
    RootState state;
    Observables obs;
};

// One continued family of states. Failure leaves the points solved so far
// and a diagnostic message.
struct Trajectory {
    int m = 0;  // line imbalance label M_minus - M_plus where meaningful
    int w = 0;  // winding label used by CFT comparisons
    std::vector<TrajectoryPoint> points;
    bool completed = true;
    std::string failure;
};

// Advances a solved state to chain length N_target in steps of opts.step.
// Each step ramps N as a continuous parameter at fixed root count, then
// inserts one root per real line (scalar pre-solve in the central gap of the
// line, joint Newton after). Ramp intervals are bisected on failure; a stall
// with two colliding real roots is retried as a conjugate pair.
Trajectory continue_trajectory(const RootState& start, int N_target,
                               const FlowOptions& opts = {});

// All transfer eigenstates of one magnetization sector at small N with the
// roots recovered from the Q-polynomial; the independent anchor for flows.
struct SmallChainState {
    cplx E;
    std::vector<cplx> zeta;
    double residual = 0;  // multiplicative mismatch of the recovered roots
};
std::vector<SmallChainState> diagonalize_sector(double n, double k, int N, int sz2);

// Lowest all-real-root state with M_minus - M_plus = m, anchored by exact
// diagonalization at a small chain and continued to length N.
RootState primary_real_state(double n, double k, int N, int sz2, int m);

// JSON-lines archive, one record per chain length; read(write(t)) is exact
void write_trajectory(std::ostream&, const Trajectory&);
Trajectory read_trajectory(std::istream&);

}  // namespace z2v::bethe
