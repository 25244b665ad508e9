#pragma once

#include "z2v/model.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace z2v::lattice {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

// Staggered six-vertex chain: two-site periodic inhomogeneities eta_J = i(-1)^{J-1},
// anisotropy q = exp(i pi/(n+2)) and twist omega = exp(i pi k). Site m of 1..N is
// bit m-1 of the basis mask; a set bit is a down spin, the all-up state is mask 0.
struct ChainParams {
    double n = 3;
    double k = 0;
    int N = 8;

    cplx q() const { return std::exp(I * pi / (n + 2)); }
    cplx omega() const { return std::exp(I * pi * k); }
    cplx eta(int J) const { return (J % 2 == 1) ? I : -I; }
};

// masks with exactly m_down set bits, ascending
std::vector<uint32_t> sector_basis(int N, int m_down);

// transfer matrix action by the auxiliary-space monodromy sweep, O(N 2^N)
VectorXcd apply_transfer(const ChainParams& cp, cplx zeta, const VectorXcd& in);

// local Hamiltonian action in gather form; the parallel kernel partitions the
// output index only, so results are identical for any thread count
VectorXcd apply_hamiltonian(const ChainParams& cp, const VectorXcd& in);
VectorXcd apply_hamiltonian_serial(const ChainParams& cp, const VectorXcd& in);

MatrixXcd build_transfer(const ChainParams& cp, cplx zeta);
MatrixXcd build_hamiltonian(const ChainParams& cp);

// two-site lattice translation; K^{N/2} = exp(2 pi i k Sz)
MatrixXcd build_shift(const ChainParams& cp);

// quasi-shift T(-i q^{-1}) T(i q^{-1})^{-1}
MatrixXcd build_quasi_shift(const ChainParams& cp);

MatrixXcd restrict_to_sector(const MatrixXcd& full, const std::vector<uint32_t>& basis);
VectorXcd embed_from_sector(int N, const VectorXcd& sec, const std::vector<uint32_t>& basis);

// bare Baxter polynomials multiplying the two Q-shifts
cplx bax_a(const ChainParams& cp, cplx zeta);
cplx bax_d(const ChainParams& cp, cplx zeta);

struct RootRecovery {
    int sz2 = 0;                // twice the Sz eigenvalue
    std::vector<cplx> roots;    // zeros of the normalized A_+ polynomial
    double tq_residual = 0;     // relative misfit of the TQ linear solve
    double bae_residual = 0;    // worst multiplicative Bethe-equation mismatch
};

// Q-polynomial recovery for one transfer eigenstate given in the full basis
RootRecovery recover_roots(const ChainParams& cp, const VectorXcd& state);

// observables evaluated on a root set
cplx a_plus(const std::vector<cplx>& roots, cplx zeta);
cplx energy_from_roots(const ChainParams& cp, const std::vector<cplx>& roots);
cplx shift_from_roots(const ChainParams& cp, int sz2, const std::vector<cplx>& roots);
cplx quasi_shift_from_roots(const ChainParams& cp, const std::vector<cplx>& roots);

} // namespace z2v::lattice
