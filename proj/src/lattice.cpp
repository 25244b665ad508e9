#include "z2v/lattice.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace z2v::lattice {

namespace {

int popcount(uint32_t m) { return std::popcount(m); }

// spin value +-1 at 1-based site
int zspin(uint32_t mask, int site, int N) {
    int b = (site - 1 + N) % N;
    return (mask >> b) & 1u ? -1 : 1;
}

bool down(uint32_t mask, int site, int N) {
    int b = (site - 1 + N) % N;
    return (mask >> b) & 1u;
}

uint32_t flip2(uint32_t mask, int s1, int s2, int N) {
    int b1 = (s1 - 1 + N) % N, b2 = (s2 - 1 + N) % N;
    return mask ^ (1u << b1) ^ (1u << b2);
}

} // namespace

std::vector<uint32_t> sector_basis(int N, int m_down) {
    std::vector<uint32_t> out;
    for (uint32_t m = 0; m < (1u << N); ++m)
        if (popcount(m) == m_down) out.push_back(m);
    return out;
}

VectorXcd apply_transfer(const ChainParams& cp, cplx zeta, const VectorXcd& in) {
    const int N = cp.N;
    const long dim = 1l << N;
    if (in.size() != dim) throw std::invalid_argument("apply_transfer: dimension mismatch");
    const cplx q = cp.q(), qi = 1.0 / q, om = cp.omega();
    const cplx cross = q - qi;

    // V[a][b] accumulates the monodromy block (R_J ... R_1)_{ab} applied to `in`
    MatrixXcd V(dim, 4);
    V.col(0) = in;            // (1,1)
    V.col(1).setZero();       // (1,2)
    V.col(2).setZero();       // (2,1)
    V.col(3) = in;            // (2,2)

    VectorXcd t1(dim), t2(dim);
    for (int J = 1; J <= N; ++J) {
        const cplx zp = zeta / cp.eta(J);
        const int bit = J - 1;
        const cplx dup = q + zp, ddn = 1.0 + q * zp;   // (1,1) entry on up/down
        const cplx eup = 1.0 + q * zp, edn = q + zp;   // (2,2) entry on up/down
        const cplx hop12 = -cross * q * zp;            // with sigma^-
        const cplx hop21 = cross;                      // with sigma^+
        for (int p = 0; p < 2; ++p) {                  // aux column index b
            auto c1 = V.col(0 + p), c2 = V.col(2 + p);
            for (long i = 0; i < dim; ++i) {
                bool dn = (i >> bit) & 1l;
                // sigma^- : source up amplitude lands on flipped (down) index
                cplx lower = dn ? hop12 * c2(i ^ (1l << bit)) : 0.0;
                cplx raise = dn ? 0.0 : hop21 * c1(i ^ (1l << bit));
                t1(i) = (dn ? ddn : dup) * c1(i) + lower;
                t2(i) = (dn ? edn : eup) * c2(i) + raise;
            }
            V.col(0 + p) = t1;
            V.col(2 + p) = t2;
        }
    }
    return std::pow(q, -0.5 * N) * (om * V.col(0) + V.col(3) / om);
}

namespace {

template <bool Parallel>
VectorXcd ham_apply(const ChainParams& cp, const VectorXcd& in) {
    const int N = cp.N;
    const long dim = 1l << N;
    if (in.size() != dim) throw std::invalid_argument("apply_hamiltonian: dimension mismatch");
    const double th = pi / (cp.n + 2);
    const double c0 = -0.5 / std::sin(2 * th);
    const double zz1 = -4 * std::sin(th) * std::sin(th);
    const cplx hop2 = 4.0 * c0;                     // next-nearest XX+YY
    const cplx hop1 = c0 * 2.0 * (2.0 * I * std::sin(th)); // dressed nearest hop
    const double diagc = N / std::tan(2 * th);
    const cplx tw = std::exp(2.0 * pi * I * cp.k);

    VectorXcd out(dim);
    auto body = [&](long i) {
        uint32_t m = (uint32_t)i;
        double zsum = 0;
        for (int s = 1; s <= N; ++s)
            zsum += zspin(m, s, N) * (zz1 * zspin(m, s + 1, N) + 2.0 * zspin(m, s + 2, N));
        cplx acc = (c0 * zsum + diagc) * in(i);

        for (int s = 1; s <= N; ++s) {
            // sigma^+_s sigma^-_{s+2} and conjugate, twist phase on wrapped sites
            cplx ph_m = (s + 2 > N) ? 1.0 / tw : 1.0;  // sigma^- wraps
            cplx ph_p = (s + 2 > N) ? tw : 1.0;        // sigma^+ wraps
            if (!down(m, s, N) && down(m, s + 2, N))
                acc += hop2 * ph_m * in(flip2(m, s, s + 2, N));
            if (down(m, s, N) && !down(m, s + 2, N))
                acc += hop2 * ph_p * in(flip2(m, s, s + 2, N));

            // dressed nearest hop with the z difference of the flanking sites
            double nu = zspin(m, s - 1, N) - zspin(m, s + 2, N);
            if (nu != 0) {
                cplx qh_m = (s + 1 > N) ? 1.0 / tw : 1.0;
                cplx qh_p = (s + 1 > N) ? tw : 1.0;
                if (!down(m, s, N) && down(m, s + 1, N))
                    acc += hop1 * nu * qh_m * in(flip2(m, s, s + 1, N));
                if (down(m, s, N) && !down(m, s + 1, N))
                    acc += hop1 * nu * qh_p * in(flip2(m, s, s + 1, N));
            }
        }
        out(i) = acc;
    };

    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
        for (long i = 0; i < dim; ++i) body(i);
    } else {
        for (long i = 0; i < dim; ++i) body(i);
    }
    return out;
}

} // namespace

VectorXcd apply_hamiltonian(const ChainParams& cp, const VectorXcd& in) {
    return ham_apply<true>(cp, in);
}

VectorXcd apply_hamiltonian_serial(const ChainParams& cp, const VectorXcd& in) {
    return ham_apply<false>(cp, in);
}

namespace {

template <class F>
MatrixXcd build_from_apply(int N, F&& f) {
    const long dim = 1l << N;
    MatrixXcd out(dim, dim);
    VectorXcd e = VectorXcd::Zero(dim);
    for (long j = 0; j < dim; ++j) {
        e(j) = 1;
        out.col(j) = f(e);
        e(j) = 0;
    }
    return out;
}

} // namespace

MatrixXcd build_transfer(const ChainParams& cp, cplx zeta) {
    return build_from_apply(cp.N, [&](const VectorXcd& v) { return apply_transfer(cp, zeta, v); });
}

MatrixXcd build_hamiltonian(const ChainParams& cp) {
    return build_from_apply(cp.N, [&](const VectorXcd& v) { return apply_hamiltonian_serial(cp, v); });
}

MatrixXcd build_shift(const ChainParams& cp) {
    const int N = cp.N;
    if (N % 2) throw std::invalid_argument("build_shift: N must be even");
    const long dim = 1l << N;
    MatrixXcd out = MatrixXcd::Zero(dim, dim);
    for (long a = 0; a < dim; ++a) {
        // spins move up two sites; the two that wrap pick up the twist phase
        uint32_t b = ((uint32_t)a << 2) & ((1u << N) - 1);
        b |= (uint32_t)a >> (N - 2);
        int spins = zspin((uint32_t)a, N - 1, N) + zspin((uint32_t)a, N, N);
        out(b, a) = std::exp(I * pi * cp.k * double(spins));
    }
    return out;
}

MatrixXcd build_quasi_shift(const ChainParams& cp) {
    cplx qi = 1.0 / cp.q();
    MatrixXcd plus = build_transfer(cp, I * qi);
    return build_transfer(cp, -I * qi) * plus.inverse();
}

MatrixXcd restrict_to_sector(const MatrixXcd& full, const std::vector<uint32_t>& basis) {
    const long d = (long)basis.size();
    MatrixXcd out(d, d);
    for (long j = 0; j < d; ++j)
        for (long i = 0; i < d; ++i) out(i, j) = full(basis[i], basis[j]);
    return out;
}

VectorXcd embed_from_sector(int N, const VectorXcd& sec, const std::vector<uint32_t>& basis) {
    VectorXcd out = VectorXcd::Zero(1l << N);
    for (long i = 0; i < (long)basis.size(); ++i) out(basis[i]) = sec(i);
    return out;
}

cplx bax_a(const ChainParams& cp, cplx zeta) {
    cplx qi = 1.0 / cp.q(), out = 1;
    for (int J = 1; J <= cp.N; ++J) out *= 1.0 + qi * zeta / cp.eta(J);
    return out;
}

cplx bax_d(const ChainParams& cp, cplx zeta) {
    cplx q = cp.q(), out = 1;
    for (int J = 1; J <= cp.N; ++J) out *= 1.0 + q * zeta / cp.eta(J);
    return out;
}

RootRecovery recover_roots(const ChainParams& cp, const VectorXcd& state) {
    const int N = cp.N;
    long imax = 0;
    state.cwiseAbs().maxCoeff(&imax);
    const int M = popcount((uint32_t)imax);
    RootRecovery rec;
    rec.sz2 = N - 2 * M;
    if (M == 0) return rec;

    const cplx q = cp.q(), om = cp.omega();
    const cplx fp = om * std::pow(q, 0.5 * rec.sz2);
    const cplx fm = std::pow(q, -0.5 * rec.sz2) / om;
    auto tval = [&](cplx xi) {
        VectorXcd tv = apply_transfer(cp, xi, state);
        return tv(imax) / state(imax);
    };

    // least-squares TQ fit for the monic-at-zero Q coefficients
    const int rows = 2 * M + 6;
    Eigen::MatrixXcd A(rows, M);
    Eigen::VectorXcd rhs(rows);
    for (int r = 0; r < rows; ++r) {
        cplx xi = 0.9 * std::exp(I * (2 * pi * r / rows + 0.37));
        cplx t = tval(xi), ca = fp * bax_a(cp, xi), cd = fm * bax_d(cp, xi);
        cplx xe = 1;
        for (int e = 1; e <= M; ++e) {
            xe *= xi;
            A(r, e - 1) = xe * (t - ca * std::pow(q, 2.0 * e) - cd * std::pow(q, -2.0 * e));
        }
        rhs(r) = -(t - ca - cd);
    }
    Eigen::VectorXcd c = A.colPivHouseholderQr().solve(rhs);
    rec.tq_residual = (A * c - rhs).norm() / std::max(rhs.norm(), 1e-300);

    // companion roots of Q(z) = 1 + c_1 z + ... + c_M z^M
    MatrixXcd comp = MatrixXcd::Zero(M, M);
    for (int i = 1; i < M; ++i) comp(i, i - 1) = 1;
    comp(0, M - 1) = -1.0 / c(M - 1);
    for (int i = 1; i < M; ++i) comp(i, M - 1) = -c(i - 1) / c(M - 1);
    Eigen::ComplexEigenSolver<MatrixXcd> es(comp);
    for (int i = 0; i < M; ++i) rec.roots.push_back(es.eigenvalues()(i));
    std::sort(rec.roots.begin(), rec.roots.end(),
              [](cplx a, cplx b) { return std::arg(a) < std::arg(b); });

    for (int m = 0; m < M; ++m) {
        cplx lhs = 1, prod = 1;
        for (int J = 1; J <= N; ++J)
            lhs *= (cp.eta(J) + q * rec.roots[m]) / (q * cp.eta(J) + rec.roots[m]);
        for (int j = 0; j < M; ++j) {
            if (j == m) continue;
            prod *= (rec.roots[j] / q - q * rec.roots[m]) / (q * rec.roots[j] - rec.roots[m] / q);
        }
        // the excluded j = m factor equals -1 and cancels the overall sign
        rec.bae_residual = std::max(rec.bae_residual,
                                    std::abs(lhs - om * om * prod) / std::max(1.0, std::abs(lhs)));
    }
    return rec;
}

cplx a_plus(const std::vector<cplx>& roots, cplx zeta) {
    cplx out = 1;
    for (auto& r : roots) out *= 1.0 - zeta / r;
    return out;
}

cplx energy_from_roots(const ChainParams& cp, const std::vector<cplx>& roots) {
    cplx q = cp.q(), q2 = q * q, acc = 0;
    for (auto& z : roots) acc += 4.0 * I * (q2 - 1.0 / q2) / (z * z + 1.0 / (z * z) + q2 + 1.0 / q2);
    return acc;
}

cplx shift_from_roots(const ChainParams& cp, int sz2, const std::vector<cplx>& roots) {
    cplx q = cp.q(), out = 1;
    for (int l = 1; l <= 2; ++l) {
        cplx el = cp.eta(l);
        out *= cp.omega() * std::pow(q, -0.5 * cp.N + 0.5 * sz2) *
               a_plus(roots, -q * el) / a_plus(roots, -el / q);
    }
    return out;
}

cplx quasi_shift_from_roots(const ChainParams& cp, const std::vector<cplx>& roots) {
    cplx q = cp.q();
    return a_plus(roots, -I * q) * a_plus(roots, I / q) /
           (a_plus(roots, I * q) * a_plus(roots, -I / q));
}

} // namespace z2v::lattice
