#include "doctest.h"
#include "z2v/model.hpp"
#include "z2v/singular.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <random>
#include <vector>

using namespace z2v;
using namespace z2v::singular;

namespace {

// ---- generating-function oracle for par2 / d_a ------------------------------
// plain power-series arithmetic over ints, nothing shared with the module

std::vector<long> series_inv_qq2(int deg) {
    // 1/(q,q)_inf^2 = (sum_L par2 q^L): build (q,q)_inf^2 then invert
    std::vector<long> qq(deg + 1, 0);
    qq[0] = 1;
    for (int m = 1; m <= deg; ++m) { // multiply by (1-q^m) twice
        for (int rep = 0; rep < 2; ++rep)
            for (int i = deg; i >= m; --i) qq[i] -= qq[i - m];
    }
    std::vector<long> inv(deg + 1, 0);
    inv[0] = 1;
    for (int i = 1; i <= deg; ++i) {
        long acc = 0;
        for (int j = 1; j <= i; ++j) acc += qq[j] * inv[i - j];
        inv[i] = -acc;
    }
    return inv;
}

std::vector<long> chi_series(int a, int deg) {
    // theta-like sum sum_m (-1)^m q^{ma+m(m+1)/2}; for a<0 the low-m terms carry
    // negative exponents which cancel in pairs, so collect with an offset first
    int K = 40;
    std::vector<long> theta(K + deg + 1, 0);
    for (int m = 0; m <= 2 * (std::abs(a) + deg) + 4; ++m) {
        long e = (long)m * a + (long)m * (m + 1) / 2;
        if (e > deg) {
            if (a >= 0 || m > -2 * a) break;
            continue;
        }
        REQUIRE(e + K >= 0);
        theta[e + K] += (m % 2) ? -1 : 1;
    }
    for (int i = 0; i < K; ++i) REQUIRE(theta[i] == 0); // the cancellation itself
    auto inv = series_inv_qq2(deg);
    std::vector<long> out(deg + 1, 0);
    for (int e = 0; e <= deg; ++e)
        if (theta[e + K] != 0)
            for (int i = e; i <= deg; ++i) out[i] += theta[e + K] * inv[i - e];
    return out;
}

// ---- resultant-elimination oracle for the L=2 system ------------------------

struct Poly {          // polynomial in w2 with cplx coefficients
    std::vector<cplx> c; // c[k] * w2^k
};

// coefficients of G1, G2 (denominator-cleared system) as polynomials in w2,
// for fixed w1
Poly g1_in_w2(cplx w1, double n, cplx p, cplx s) {
    cplx cc = (n + 2) * ((n + 1) * (n + 1) - 4.0 * p * p);
    cplx A = 4 * n * w1 * w1 + 8.0 * I * s * (n + 1) * w1 - cc;
    // A*(w1-w2)^3 + 4*w1*((n+2)^2 w1^2 - n(2n+5) w1 w2 + n(n+1) w2^2)
    Poly g;
    g.c = {A * w1 * w1 * w1 + 4.0 * w1 * (n + 2) * (n + 2) * w1 * w1,
           -3.0 * A * w1 * w1 - 4.0 * w1 * n * (2 * n + 5) * w1,
           3.0 * A * w1 + 4.0 * w1 * n * (n + 1),
           -A};
    return g;
}

Poly g2_in_w2(cplx w1, double n, cplx p, cplx s) {
    cplx cc = (n + 2) * ((n + 1) * (n + 1) - 4.0 * p * p);
    // (4n w2^2 + 8is(n+1) w2 - cc)*(w2-w1)^3 + 4 w2 ((n+2)^2 w2^2 - n(2n+5) w2 w1 + n(n+1) w1^2)
    std::vector<cplx> q = {-cc, 8.0 * I * s * (n + 1), 4.0 * n}; // in w2
    std::vector<cplx> cube = {-w1 * w1 * w1, 3.0 * w1 * w1, -3.0 * w1, 1.0};
    Poly g;
    g.c.assign(6, 0.0);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) g.c[i + j] += q[i] * cube[j];
    g.c[3] += 4.0 * (n + 2) * (n + 2);
    g.c[2] += -4.0 * n * (2 * n + 5) * w1;
    g.c[1] += 4.0 * n * (n + 1) * w1 * w1;
    return g;
}

cplx sylvester_det(const Poly& A, const Poly& B) {
    int m = (int)A.c.size() - 1, k = (int)B.c.size() - 1;
    int dim = m + k;
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(dim, dim);
    for (int r = 0; r < k; ++r)
        for (int i = 0; i <= m; ++i) S(r, r + m - i) = A.c[i];
    for (int r = 0; r < m; ++r)
        for (int i = 0; i <= k; ++i) S(k + r, r + k - i) = B.c[i];
    return S.determinant();
}

std::vector<cplx> durand_kerner(std::vector<cplx> a) {
    while (a.size() > 1 && std::abs(a.back()) < 1e-9) a.pop_back();
    int deg = (int)a.size() - 1;
    for (auto& x : a) x /= a[deg];
    std::vector<cplx> r(deg);
    cplx w{0.4, 0.9}, wp = 1.0;
    for (int i = 0; i < deg; ++i) {
        wp *= w;
        r[i] = wp * 3.0;
    }
    auto horner = [&](cplx x) {
        cplx v = 0;
        for (int i = deg; i >= 0; --i) v = v * x + a[i];
        return v;
    };
    for (int it = 0; it < 800; ++it) {
        double moved = 0;
        for (int i = 0; i < deg; ++i) {
            cplx den = 1.0;
            for (int j = 0; j < deg; ++j)
                if (j != i) den *= r[i] - r[j];
            cplx st = horner(r[i]) / den;
            r[i] -= st;
            moved = std::max(moved, std::abs(st));
        }
        if (moved < 1e-13) break;
    }
    return r;
}

double wsys_err(const std::vector<cplx>& w, cplx p, cplx s, double n) {
    double worst = 0;
    for (auto& r : w_system_residual(w, p, s, n)) worst = std::max(worst, std::abs(r));
    return worst;
}

} // namespace

TEST_CASE("par2 and d_a against generating functions") {
    long expect[6] = {1, 2, 5, 10, 20, 36};
    auto inv = series_inv_qq2(14);
    for (int L = 0; L <= 5; ++L) CHECK(par2(L) == expect[L]);
    for (int L = 0; L <= 14; ++L) CHECK(par2(L) == inv[L]);

    for (int a = 0; a <= 6; ++a) CHECK(d_a(a, 0) == 1);
    for (int a = -6; a <= 6; ++a) {
        auto chi = chi_series(a, 8);
        for (int L = 0; L <= 8; ++L) {
            CHECK(d_a(a, L) == chi[L]);
            CHECK(d_a(a, L) + d_a(-1 - a, L) == par2(L));
        }
    }
    // d saturates at par2 once a >= L
    for (int L = 0; L <= 6; ++L)
        for (int a = L; a <= L + 3; ++a) CHECK(d_a(a, L) == par2(L));
}

TEST_CASE("w-system L=1 closed form, both discriminant branches") {
    double n = 3.0;
    cplx p = 0.45, s;

    SUBCASE("C > 0") { s = 0.2; }
    SUBCASE("C < 0") { s = 2.0; }

    cplx C = n * (n + 2) * (1.0 - 4.0 * p * p / ((n + 1) * (n + 1)) - 4.0 * s * s / (n * (n + 2)));
    cplx wp_, wm_;
    if (C.real() > 0) {
        wp_ = -(n + 1) / (2 * n) * (2.0 * I * s + std::sqrt(C));
        wm_ = -(n + 1) / (2 * n) * (2.0 * I * s - std::sqrt(C));
    } else {
        wp_ = -I * (n + 1) / (2 * n) * (2.0 * s - std::sqrt(-C));
        wm_ = -I * (n + 1) / (2 * n) * (2.0 * s + std::sqrt(-C));
    }
    CHECK(wsys_err({wp_}, p, s, n) < 1e-11);
    CHECK(wsys_err({wm_}, p, s, n) < 1e-11);

    auto sets = solve_w_system(p, s, n, 1);
    REQUIRE(sets.size() == 2);
    double d1 = std::min(std::abs(sets[0].w[0] - wp_), std::abs(sets[0].w[0] - wm_));
    double d2 = std::min(std::abs(sets[1].w[0] - wp_), std::abs(sets[1].w[0] - wm_));
    CHECK(d1 < 1e-9);
    CHECK(d2 < 1e-9);
    CHECK(std::abs(sets[0].w[0] - sets[1].w[0]) > 1e-6);
}

TEST_CASE("w-system L=2 count via resultant elimination") {
    double n = 3.0;
    cplx p = 0.37, s = 0.21;

    // sample det Syl(G1,G2;w2) on a circle in w1, fit the polynomial, take roots
    int M = 96, maxdeg = 36;
    double rho = 9.0;
    Eigen::MatrixXcd V(M, maxdeg + 1);
    Eigen::VectorXcd rhs(M);
    for (int k = 0; k < M; ++k) {
        cplx w1 = rho * std::exp(2.0 * pi * I * (double)k / (double)M);
        rhs(k) = sylvester_det(g1_in_w2(w1, n, p, s), g2_in_w2(w1, n, p, s));
        cplx pw = 1.0;
        for (int j = 0; j <= maxdeg; ++j) {
            V(k, j) = pw;
            pw *= w1;
        }
    }
    Eigen::VectorXcd coef = V.colPivHouseholderQr().solve(rhs);
    std::vector<cplx> rc(coef.data(), coef.data() + maxdeg + 1);
    double top = 0;
    for (auto& c : rc) top = std::max(top, std::abs(c));
    for (auto& c : rc) c /= top;
    auto w1cands = durand_kerner(rc);

    // extend each resultant root to full solutions and keep the verified ones
    std::vector<std::vector<cplx>> found;
    for (cplx w1 : w1cands) {
        if (std::abs(w1) > 0.95 * rho) continue;
        auto g2 = g2_in_w2(w1, n, p, s);
        for (cplx w2 : durand_kerner(g2.c)) {
            if (std::abs(w1 - w2) < 1e-5) continue;
            std::vector<cplx> cand = {w1, w2};
            if (!refine_w(cand, p, s, n)) continue;
            if (wsys_err(cand, p, s, n) > 1e-11) continue;
            std::sort(cand.begin(), cand.end(), [](cplx a, cplx b) {
                return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
            });
            bool dup = false;
            for (auto& f : found)
                if (std::abs(f[0] - cand[0]) + std::abs(f[1] - cand[1]) < 1e-6) dup = true;
            if (!dup) found.push_back(cand);
        }
    }
    CHECK(found.size() == 5);

    auto sets = solve_w_system(p, s, n, 2);
    REQUIRE(sets.size() == 5);
    // every solver set appears among the resultant sets
    for (auto& st : sets) {
        auto sw = st.w;
        std::sort(sw.begin(), sw.end(), [](cplx a, cplx b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        bool hit = false;
        for (auto& f : found)
            if (std::abs(f[0] - sw[0]) + std::abs(f[1] - sw[1]) < 1e-6) hit = true;
        CHECK(hit);
    }
}

TEST_CASE("w-system completeness at random generic points, L<=4") {
    std::mt19937 rng(777);
    std::uniform_real_distribution<double> u(0.15, 0.6);
    for (int trial = 0; trial < 3; ++trial) {
        double n = 2.0 + 2.5 * u(rng);
        cplx p = u(rng), s = cplx(u(rng), 0.3 * u(rng));
        for (int L = 0; L <= 4; ++L) {
            auto sets = solve_w_system(p, s, n, L);
            CHECK((long)sets.size() == par2(L));
            for (auto& st : sets) CHECK(st.residual < 1e-11);
        }
    }
}

TEST_CASE("s=0 even L: solution list closed under w -> -w with a symmetric set") {
    double n = 2.7;
    cplx p = 0.33, s = 0.0;
    auto sets = solve_w_system(p, s, n, 2);
    REQUIRE(sets.size() == 5);
    int self_symmetric = 0;
    for (auto& st : sets) {
        cplx m1 = st.w[0] + st.w[1], m3 = st.w[0] * st.w[0] * st.w[0] + st.w[1] * st.w[1] * st.w[1];
        // negated set must appear in the list
        std::vector<cplx> neg = {-st.w[0], -st.w[1]};
        bool hit = false;
        for (auto& other : sets) {
            cplx o1 = other.w[0] + other.w[1];
            cplx o2 = other.w[0] * other.w[1];
            if (std::abs(o1 - (neg[0] + neg[1])) < 1e-7 && std::abs(o2 - neg[0] * neg[1]) < 1e-7) hit = true;
        }
        CHECK(hit);
        if (std::abs(m1) < 1e-7 && std::abs(m3) < 1e-7) ++self_symmetric;
    }
    CHECK(self_symmetric >= 1);
}

TEST_CASE("s -> -s, w -> -w maps solutions to solutions") {
    double n = 3.4;
    cplx p = 0.52, s{0.3, 0.12};
    auto sets = solve_w_system(p, s, n, 2);
    for (auto& st : sets) {
        std::vector<cplx> neg(st.w.size());
        for (size_t i = 0; i < st.w.size(); ++i) neg[i] = -st.w[i];
        CHECK(wsys_err(neg, p, -s, n) <= wsys_err(st.w, p, s, n) + 1e-12);
    }
}

TEST_CASE("discrete spectrum examples") {
    // n=3, k=0.235, Sz=w=0: lone admissible s = +-i((n+2)k-1)/2 at L=Lbar=0
    {
        double n = 3, k = 0.235;
        double p = (0 + k * (n + 2)) / 2, pbar = (0 - k * (n + 2)) / 2;
        auto labels = discrete_spectrum(p, pbar, n, 0, 0);
        REQUIRE(labels.size() == 2); // sigma = +-
        for (auto& lab : labels) {
            CHECK(lab.mult == 1);
            CHECK(lab.a == 0);
            CHECK(std::abs(lab.qval - ((n + 2) * k - 1) / 2) < 1e-12);
            CHECK(lab.plus_sector());
        }
    }
    // N^{(0,0)}_a structure: exactly one state per admissible a >= 0, none for a < 0
    {
        double n = 6.0, k = 0.40; // wide strip so several a fit
        double p = k * (n + 2) / 2, pbar = -k * (n + 2) / 2;
        auto labels = discrete_spectrum(p, pbar, n, 0, 0);
        for (auto& lab : labels) {
            CHECK(lab.mult == 1);
            CHECK(lab.a >= 0);
        }
    }
    // n=3, k=-0.18, Sz=1, (L,Lbar)=(1,0): exactly two disc,- states (Table-style count)
    {
        double n = 3, k = -0.18;
        double p = (1 + k * (n + 2)) / 2, pbar = (1 - k * (n + 2)) / 2;
        auto labels = discrete_spectrum(p, pbar, n, 1, 0);
        long total = 0, minus = 0;
        for (auto& lab : labels) {
            total += lab.mult;
            if (!lab.plus_sector()) minus += lab.mult;
        }
        CHECK(total == 2);
        CHECK(minus == 2);
    }
}

TEST_CASE("shift relabel: invariance of the scaled-energy combination") {
    std::mt19937 rng(4242);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    std::uniform_int_distribution<int> ai(-3, 3), Li(2, 6), Szi(0, 3);
    for (int t = 0; t < 100; ++t) {
        double n = 1.0 + 3.0 * u(rng);
        int Sz = Szi(rng), a = ai(rng), L = Li(rng) + std::abs(a), Lbar = Li(rng) + std::abs(a) + Sz;
        double p = 0.5 * u(rng) - a; // keep q_a generic
        double pbar = Sz - p;
        double q = -p - 0.5 - a;
        auto rl = shift_relabel(p, pbar, q, L, Lbar, a, Sz, n, false);
        double lhs = p * p / (n + 2) - q * q / n + L;
        double rhs = rl.p_new * rl.p_new / (n + 2) - rl.q_new * rl.q_new / n + rl.L_new;
        CHECK(std::abs(lhs - rhs) < 1e-10);
        double lhs2 = pbar * pbar / (n + 2) - q * q / n + Lbar;
        double rhs2 = rl.pbar_new * rl.pbar_new / (n + 2) - rl.q_new * rl.q_new / n + rl.Lbar_new;
        CHECK(std::abs(lhs2 - rhs2) < 1e-10);
    }
}

TEST_CASE("shift relabel: strip-exit example and identity relabel") {
    // n=3, k=0.099: (Sz=0, w=-1, L=Lbar=0), q just above the n/4 edge,
    // relabels to (w=0, L=Lbar=1) with q' = q - n/2
    double n = 3, k = 0.099;
    double p = (0 + (k - 1) * (n + 2)) / 2, pbar = -p; // w = -1
    int a = 1;
    double q = -p - 0.5 - a;
    CHECK(std::abs(q - 0.7525) < 1e-12);
    auto rl = shift_relabel(p, pbar, q, 0, 0, a, 0, n, false);
    CHECK(std::abs(rl.p_new - (0 + k * (n + 2)) / 2) < 1e-12); // w = 0 momentum
    CHECK(rl.L_new == 1);
    CHECK(rl.Lbar_new == 1);
    CHECK(std::abs(rl.q_new - (-0.7475)) < 1e-12);

    auto idrl = shift_relabel(0.26, -0.26, -0.76, 3, 4, 0, 0, n, false);
    CHECK(idrl.L_new == 3);
    CHECK(idrl.Lbar_new == 4);
    CHECK(std::abs(idrl.p_new - (0.26 + (n + 2) / 2)) < 1e-14);

    CHECK_THROWS(shift_relabel(0.3, -0.3, 0.45, 0, 0, -2, 0, n, false));
}

TEST_CASE("laguerre singularity sets solve the w-system") {
    // |a|=1: single root 2w = -2p-n-1
    {
        double n = 2.6, p = -1.1;
        auto st = laguerre_singularity_check(-1, p, n);
        REQUIRE(st.w.size() == 1);
        CHECK(std::abs(2.0 * st.w[0] - cplx(-2 * p - n - 1, 0)) < 1e-10);
        CHECK(st.residual < 1e-10);
    }
    // |a|=2 at (n,p)=(3,-1.6)
    {
        auto st = laguerre_singularity_check(-2, -1.6, 3.0);
        REQUIRE(st.w.size() == 2);
        CHECK(st.residual < 1e-10);
        CHECK(wsys_err(st.w, st.p, st.s, st.n) < 1e-10);
    }
}

TEST_CASE("catalog roundtrip") {
    auto sets = solve_w_system(0.37, 0.21, 3.0, 2);
    write_catalog("wsets_test.json", sets);
    auto back = read_catalog("wsets_test.json");
    REQUIRE(back.size() == sets.size());
    for (size_t i = 0; i < sets.size(); ++i) {
        CHECK(back[i].L == sets[i].L);
        for (size_t j = 0; j < sets[i].w.size(); ++j) CHECK(std::abs(back[i].w[j] - sets[i].w[j]) < 1e-12);
    }
    std::remove("wsets_test.json");
}
