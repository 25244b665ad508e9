#include "z2v/singular.hpp"
#include "z2v/specfn.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

namespace z2v::singular {

namespace {
constexpr int PAR_MAX = 96;

const std::vector<long>& par1_table() {
    static const std::vector<long> t = [] {
        // Euler DP for ordinary partitions
        std::vector<long> p(PAR_MAX + 1, 0);
        p[0] = 1;
        for (int m = 1; m <= PAR_MAX; ++m)
            for (int i = m; i <= PAR_MAX; ++i) p[i] += p[i - m];
        return p;
    }();
    return t;
}
} // namespace

long par1(int m) {
    if (m < 0) return 0;
    if (m > PAR_MAX) throw std::invalid_argument("par1: m too large for the table");
    return par1_table()[m];
}

long par2(int L) {
    if (L < 0) return 0;
    if (L > PAR_MAX) throw std::invalid_argument("par2: L too large for the table");
    static const std::vector<long> t = [] {
        auto& p1 = par1_table();
        std::vector<long> t2(PAR_MAX + 1, 0);
        for (int L_ = 0; L_ <= PAR_MAX; ++L_)
            for (int j = 0; j <= L_; ++j) t2[L_] += p1[j] * p1[L_ - j];
        return t2;
    }();
    return t[L];
}

long d_a(int a, int L) {
    if (L < 0) return 0;
    if (a < 0) return par2(L) - d_a(-1 - a, L);
    long acc = 0;
    for (int m = 0;; ++m) {
        long e = (long)m * a + (long)m * (m + 1) / 2;
        if (e > L) break;
        acc += ((m % 2) ? -1L : 1L) * par2(L - (int)e);
    }
    return acc;
}

std::vector<cplx> w_system_residual(const std::vector<cplx>& w, cplx p, cplx s, double n) {
    int L = (int)w.size();
    cplx c0 = (n + 2) * ((n + 1) * (n + 1) - 4.0 * p * p);
    std::vector<cplx> r(L);
    for (int a = 0; a < L; ++a) {
        cplx acc = 4.0 * n * w[a] * w[a] + 8.0 * I * s * (n + 1) * w[a] - c0;
        for (int b = 0; b < L; ++b) {
            if (b == a) continue;
            cplx d = w[a] - w[b];
            acc += 4.0 * w[a] *
                   ((n + 2) * (n + 2) * w[a] * w[a] - n * (2 * n + 5) * w[a] * w[b] +
                    n * (n + 1) * w[b] * w[b]) /
                   (d * d * d);
        }
        r[a] = acc;
    }
    return r;
}

namespace {

double residual_scale(const std::vector<cplx>& w, cplx p, cplx s, double n) {
    double W = 1.0;
    for (auto& x : w) W = std::max(W, std::abs(x));
    return 4 * n * W * W + 8 * std::abs(s) * (n + 1) * W +
           (n + 2) * ((n + 1) * (n + 1) + 4 * std::norm(p)) + 4 * (n + 2) * (n + 2) * W;
}

double norm_res(const std::vector<cplx>& w, cplx p, cplx s, double n) {
    double worst = 0;
    for (auto& r : w_system_residual(w, p, s, n)) worst = std::max(worst, std::abs(r));
    return worst; // raw; compare against tol * scale at call sites
}

// analytic Jacobian of the defining system
void w_system_jacobian(const std::vector<cplx>& w, cplx s, double n, Eigen::MatrixXcd& J) {
    int L = (int)w.size();
    J.setZero(L, L);
    for (int a = 0; a < L; ++a) {
        J(a, a) = 8.0 * n * w[a] + 8.0 * I * s * (n + 1);
        for (int b = 0; b < L; ++b) {
            if (b == a) continue;
            cplx d = w[a] - w[b], d3 = d * d * d, d4 = d3 * d;
            cplx N = (n + 2) * (n + 2) * w[a] * w[a] * w[a] -
                     n * (2 * n + 5) * w[a] * w[a] * w[b] + n * (n + 1) * w[a] * w[b] * w[b];
            cplx Na = 3.0 * (n + 2) * (n + 2) * w[a] * w[a] - 2.0 * n * (2 * n + 5) * w[a] * w[b] +
                      n * (n + 1) * w[b] * w[b];
            cplx Nb = -n * (2 * n + 5) * w[a] * w[a] + 2.0 * n * (n + 1) * w[a] * w[b];
            J(a, a) += 4.0 * (Na * d - 3.0 * N) / d4;
            J(a, b) = 4.0 * (Nb * d + 3.0 * N) / d4;
        }
    }
}

} // namespace

bool refine_w(std::vector<cplx>& w, cplx p, cplx s, double n, double tol) {
    int L = (int)w.size();
    if (L == 0) return true;
    double scale = residual_scale(w, p, s, n);
    Eigen::MatrixXcd J(L, L);
    Eigen::VectorXcd F(L), dw(L);
    for (int it = 0; it < 80; ++it) {
        auto res = w_system_residual(w, p, s, n);
        double rn = 0;
        for (int i = 0; i < L; ++i) {
            F(i) = res[i];
            rn = std::max(rn, std::abs(res[i]));
        }
        if (rn < tol * scale) return true;
        // collision or blow-up guard
        double W = 0;
        for (auto& x : w) {
            if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
            W = std::max(W, std::abs(x));
        }
        if (W > 1e8) return false;
        for (int a = 0; a < L; ++a)
            for (int b = a + 1; b < L; ++b)
                if (std::abs(w[a] - w[b]) < 1e-9 * (1.0 + W)) return false;
        w_system_jacobian(w, s, n, J);
        dw = J.partialPivLu().solve(F);
        double damp = 1.0;
        std::vector<cplx> cand(L);
        for (int half = 0; half < 10; ++half) {
            for (int i = 0; i < L; ++i) cand[i] = w[i] - damp * dw(i);
            double rc = norm_res(cand, p, s, n);
            if (rc < rn || !std::isfinite(rc)) break;
            damp *= 0.5;
        }
        w = cand;
    }
    return norm_res(w, p, s, n) < tol * scale;
}

std::vector<SingularitySet> solve_w_system(cplx p, cplx s, double n, int L, long budget) {
    if (L < 0) throw std::invalid_argument("solve_w_system: L >= 0");
    long want = par2(L);
    std::vector<SingularitySet> out;
    if (L == 0) {
        out.push_back({0, p, s, n, {}, 0.0});
        return out;
    }
    if (budget <= 0) budget = std::max<long>(4000, 3000 * want);

    // deterministic seeding from the call parameters
    uint64_t seed = 0x9e3779b97f4a7c15ull;
    auto mix = [&seed](double v) {
        uint64_t b;
        std::memcpy(&b, &v, 8);
        seed ^= b + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2);
    };
    mix(p.real());
    mix(p.imag());
    mix(s.real());
    mix(s.imag());
    mix(n);
    mix((double)L);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    // the two large-|s| balance points
    cplx big = -2.0 * I * s * (n + 1) / n;
    cplx small_ = (std::abs(s) > 0.05)
                      ? (n + 2) * ((n + 1) * (n + 1) - 4.0 * p * p) / (8.0 * I * s * (n + 1))
                      : cplx(0.0, 0.0);
    double R = std::max({1.0, std::abs(big), std::abs(small_),
                         std::sqrt((n + 2) * ((n + 1) * (n + 1) + 4.0 * std::norm(p)) / (4 * n))});

    std::vector<std::array<cplx, 3>> prints;
    auto fingerprint = [](const std::vector<cplx>& w) {
        std::array<cplx, 3> f{0.0, 0.0, 0.0};
        for (auto& x : w) {
            f[0] += x;
            f[1] += x * x;
            f[2] += x * x * x;
        }
        return f;
    };

    double scale = residual_scale(std::vector<cplx>(L, R), p, s, n);
    for (long attempt = 0; attempt < budget && (long)out.size() < want; ++attempt) {
        std::vector<cplx> w(L);
        int mode = (int)(attempt % 3);
        for (int i = 0; i < L; ++i) {
            cplx g{gauss(rng), gauss(rng)};
            if (mode == 0) w[i] = R * g;
            else if (mode == 1) w[i] = ((rng() & 1) ? big : small_) + 0.45 * R * g;
            else w[i] = (i < (int)(rng() % (L + 1)) ? big : small_) + 0.25 * R * g;
        }
        bool distinct = true;
        for (int a2 = 0; a2 < L && distinct; ++a2)
            for (int b = a2 + 1; b < L; ++b)
                if (std::abs(w[a2] - w[b]) < 1e-3 * R) distinct = false;
        if (!distinct) continue;
        if (!refine_w(w, p, s, n)) continue;

        auto f = fingerprint(w);
        double fs = 1.0 + std::abs(f[0]) + std::abs(f[1]) + std::abs(f[2]);
        bool dup = false;
        for (auto& g2 : prints)
            if (std::abs(f[0] - g2[0]) + std::abs(f[1] - g2[1]) + std::abs(f[2] - g2[2]) <
                1e-7 * fs)
                dup = true;
        if (dup) continue;

        prints.push_back(f);
        std::vector<cplx> ws = w;
        std::sort(ws.begin(), ws.end(), [](cplx a, cplx b) {
            return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
        });
        out.push_back({L, p, s, n, ws, norm_res(ws, p, s, n) / scale});
    }
    if ((long)out.size() < want)
        throw std::runtime_error("solve_w_system: found " + std::to_string(out.size()) + " of " +
                                 std::to_string(want) + " sets at L=" + std::to_string(L));
    return out;
}

std::vector<DiscreteLabel> discrete_spectrum(double p, double pbar, double n, int L, int Lbar) {
    double szd = p + pbar;
    int Sz = (int)std::lround(szd);
    if (Sz < 0 || std::abs(szd - Sz) > 1e-9)
        throw std::invalid_argument("discrete_spectrum: p + pbar must be a non-negative integer");
    std::vector<DiscreteLabel> out;
    auto scan = [&](bool bar, double pp) {
        int alo = (int)std::ceil(-pp - (n + 2) / 4 - 1e-12);
        int ahi = (int)std::floor(-0.5 - pp + 1e-12);
        if (std::abs(-0.5 - pp - ahi) < 1e-12) --ahi; // strict a < -1/2 - p
        for (int a = alo; a <= ahi; ++a) {
            double q = -pp - 0.5 - a;
            if (!(q > 0 && q <= n / 4 + 1e-12)) continue;
            long mult = bar ? d_a(a, Lbar) * d_a(Sz + a, L) : d_a(Sz + a, Lbar) * d_a(a, L);
            if (mult <= 0) continue;
            for (int sigma : {+1, -1}) out.push_back({bar, a, sigma, q, mult});
        }
    };
    scan(false, p);
    scan(true, pbar);
    return out;
}

RelabelResult shift_relabel(double p, double pbar, double q, int L, int Lbar, int a, int Sz,
                            double n, bool bar) {
    RelabelResult r{};
    r.q_new = q - n / 2;
    if (!bar) {
        r.p_new = p + (n + 2) / 2;
        r.pbar_new = pbar - (n + 2) / 2;
        r.L_new = L + a;
        r.Lbar_new = Lbar + a + Sz;
    } else {
        r.p_new = p - (n + 2) / 2;
        r.pbar_new = pbar + (n + 2) / 2;
        r.L_new = L + a + Sz;
        r.Lbar_new = Lbar + a;
    }
    if (r.L_new < 0 || r.Lbar_new < 0)
        throw std::invalid_argument("shift_relabel: resulting level negative");
    return r;
}

SingularitySet laguerre_singularity_check(int a, double p, double n) {
    if (a >= 0) throw std::invalid_argument("laguerre_singularity_check: need a < 0");
    int m = -a;
    auto roots = specfn::laguerre_roots(m, -2.0 * p - n - 2.0);
    SingularitySet st;
    st.L = m;
    st.p = p;
    st.n = n;
    st.s = I * (-p - 0.5 - (double)a);
    st.w.resize(m);
    for (int i = 0; i < m; ++i) st.w[i] = 0.5 * roots[i];
    st.residual = norm_res(st.w, st.p, st.s, n) / residual_scale(st.w, st.p, st.s, n);
    return st;
}

void write_catalog(const std::string& path, const std::vector<SingularitySet>& sets) {
    nlohmann::json j = nlohmann::json::array();
    for (auto& st : sets) {
        nlohmann::json e;
        e["L"] = st.L;
        e["p"] = {st.p.real(), st.p.imag()};
        e["s"] = {st.s.real(), st.s.imag()};
        e["n"] = st.n;
        e["residual"] = st.residual;
        cplx f1{0, 0}, f2{0, 0}, f3{0, 0};
        for (auto& x : st.w) {
            f1 += x;
            f2 += x * x;
            f3 += x * x * x;
            e["w"].push_back({x.real(), x.imag()});
        }
        if (st.w.empty()) e["w"] = nlohmann::json::array();
        e["fingerprint"] = {{f1.real(), f1.imag()}, {f2.real(), f2.imag()}, {f3.real(), f3.imag()}};
        j.push_back(e);
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_catalog: cannot open " + path);
    out << j.dump(2) << "\n";
}

std::vector<SingularitySet> read_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_catalog: cannot open " + path);
    nlohmann::json j;
    in >> j;
    std::vector<SingularitySet> sets;
    for (auto& e : j) {
        SingularitySet st;
        st.L = e["L"];
        st.p = cplx(e["p"][0], e["p"][1]);
        st.s = cplx(e["s"][0], e["s"][1]);
        st.n = e["n"];
        st.residual = e["residual"];
        for (auto& wv : e["w"]) st.w.push_back(cplx(wv[0], wv[1]));
        sets.push_back(std::move(st));
    }
    return sets;
}

} // namespace z2v::singular
