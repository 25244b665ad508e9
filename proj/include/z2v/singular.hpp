#pragma once

// Apparent-singularity systems for the chiral level sets, the bipartition
// combinatorics par2/d_a, and the pure-imaginary-s (discrete) classification.

#include "z2v/model.hpp"

#include <string>
#include <vector>

namespace z2v::singular {

// number of bipartitions of L: generating function 1/(q,q)_inf^2
long par1(int m);
long par2(int L);

// coefficients of chi_a(q) = (q,q)_inf^{-2} sum_m (-1)^m q^{ma+m(m+1)/2};
// negative a via d_a + d_{-1-a} = par2. d_a(L<0) = 0.
long d_a(int a, int L);

struct SingularitySet {
    int L = 0;
    cplx p, s;
    double n = 0;
    std::vector<cplx> w;
    double residual = 0; // max component of the normalized defining-system residual
};

// per-component residual of
//   4n w_a^2 + 8is(n+1) w_a - (n+2)((n+1)^2 - 4p^2)
//     + 4 sum_{b!=a} w_a ((n+2)^2 w_a^2 - n(2n+5) w_a w_b + n(n+1) w_b^2)/(w_a-w_b)^3
std::vector<cplx> w_system_residual(const std::vector<cplx>& w, cplx p, cplx s, double n);

// damped Newton from a seed; returns false on non-convergence or root collision
bool refine_w(std::vector<cplx>& w, cplx p, cplx s, double n, double tol = 1e-13);

// all par2(L) solution sets (up to permutation) at generic parameters.
// Multi-start Newton seeded from the two large-|s| balance points plus random
// clouds; deduplication by the (sum w, sum w^2, sum w^3) fingerprint at 1e-7.
// Throws if fewer than par2(L) sets are found within the start budget.
std::vector<SingularitySet> solve_w_system(cplx p, cplx s, double n, int L, long budget = 0);

struct DiscreteLabel {
    bool bar = false; // which chirality the defining p belongs to
    int a = 0;
    int sigma = +1;   // sign of Im s
    double qval = 0;  // s = sigma * i * qval, 0 < qval <= n/4
    long mult = 0;
    bool plus_sector() const { return a >= 0; }
};

// admissible pure-imaginary s values and their multiplicities for the level
// pair (L, Lbar); p + pbar must be a non-negative integer
std::vector<DiscreteLabel> discrete_spectrum(double p, double pbar, double n, int L, int Lbar);

struct RelabelResult {
    double p_new, pbar_new, q_new;
    int L_new, Lbar_new;
};

// equivalent quantum numbers under the half-period shift; signed a. bar=false:
// p -> p+(n+2)/2, pbar -> pbar-(n+2)/2, L -> L+a, Lbar -> Lbar+a+Sz, q -> q-n/2.
// bar=true mirrors the two chiralities. Throws if a level turns negative.
RelabelResult shift_relabel(double p, double pbar, double q, int L, int Lbar, int a, int Sz,
                            double n, bool bar);

// the unique set for the bottom state with s = i q_a, a < 0:
// 2 w_j run over the roots of the generalized Laguerre polynomial L_{|a|}^{(-2p-n-2)}
SingularitySet laguerre_singularity_check(int a, double p, double n);

void write_catalog(const std::string& path, const std::vector<SingularitySet>& sets);
std::vector<SingularitySet> read_catalog(const std::string& path);

} // namespace z2v::singular
