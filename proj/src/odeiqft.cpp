#include "z2v/odeiqft.hpp"
#include "z2v/specfn.hpp"
#include "z2v/singular.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace z2v::odeiqft {

using specfn::gamma_fn;
using specfn::log_gamma;

namespace {

constexpr double kTwkb = 4000;  // WKB phase units at the far seed point
constexpr double kTmatch = 18;  // phase units at the Wronskian match point

// 1/Gamma, entire: reflection on the left half plane so gamma poles map to
// clean zeros instead of throws.
cplx inv_gamma(cplx z) {
    if (z.real() > 0.5) return 1.0 / gamma_fn(z);
    return std::sin(pi * z) * gamma_fn(1.0 - z) / pi;
}

cplx ipow(cplx z, long e) {
    if (e < 0) return 1.0 / ipow(z, -e);
    cplx r = 1, b = z;
    for (; e; e >>= 1, b *= b)
        if (e & 1) r *= b;
    return r;
}

void check_not_resonant(double n) {
    for (int k = 1; k <= 60; ++k)
        if (std::abs(n - 2.0 / (2 * k - 1)) < 1e-6)
            throw std::invalid_argument("odeiqft: resonant n = 2/(2k-1), ODE route disabled");
}

void check_w_set(const std::vector<cplx>& w, cplx p, cplx s, double n) {
    if (w.empty()) return;
    auto res = singular::w_system_residual(w, p, s, n);
    double scale = std::max(1.0, std::abs((n + 2) * ((n + 1) * (n + 1) - 4.0 * p * p)));
    for (auto& r : res)
        if (std::abs(r) > 1e-7 * scale)
            throw std::invalid_argument("odeiqft: w does not solve the apparent-singularity system");
}

} // namespace

double n0_const(double n) {
    return std::sqrt(pi) * std::tgamma(1 + 1 / n) / (2 * std::tgamma(1.5 + 1 / n));
}

cplx mu_of_lambda(cplx lambda, double n) {
    double g = std::tgamma(-1 / (n + 2));
    return -I * std::pow(n + 2, -2 / (n + 2)) * g * g * lambda;
}

cplx lambda_of_mu(cplx mu, double n) {
    double g = std::tgamma(-1 / (n + 2));
    return mu / (-I * std::pow(n + 2, -2 / (n + 2)) * g * g);
}

cplx c0_asym(cplx p, cplx s, double n, int sign) {
    cplx num = 1.0 + 2.0 * p;
    if (std::abs(num - std::round(num.real())) < 1e-6 && std::round(num.real()) <= 0)
        throw std::invalid_argument("c0_asym: too close to a gamma pole");
    cplx expo = -p + double(sign) * I * (n + 2) * s / n;
    return std::sqrt(2 * pi / (n + 2)) * std::pow(cplx(2), expo) *
           std::pow(n + 2, -2.0 * p / (n + 2)) * gamma_fn(num) *
           inv_gamma(1.0 + 2.0 * p / (n + 2)) *
           inv_gamma(0.5 + p + double(sign) * I * s);
}

cplx r0_asym(cplx p, cplx s, double n) {
    cplx a = gamma_fn(1.0 + p) * inv_gamma(1.0 + 2.0 * p / (n + 2));
    cplx b = gamma_fn(0.5 + p);
    return std::pow(cplx(2), 1.0 + 2.0 * p) * std::pow(n + 2, -1.0 - 4.0 * p / (n + 2)) *
           a * a * b * b * inv_gamma(0.5 + p + I * s) * inv_gamma(0.5 + p - I * s);
}

cplx d0_prefactor(cplx p, cplx s, double n) {
    return std::pow(cplx(2), 2.0 * I * (n + 2) * s / n) * gamma_fn(0.5 + p - I * s) *
           inv_gamma(0.5 + p + I * s);
}

cplx d_check(cplx p, cplx s, double n, const std::vector<cplx>& w, bool* near_zero) {
    if (near_zero) *near_zero = false;
    int L = int(w.size());
    if (L == 0) return 1;

    std::vector<cplx> s1(L, 0);
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b)
            if (b != a) s1[a] += w[a] / (w[a] - w[b]);

    auto quad = [&](int a, int col, double sg) {
        cplx d = col; // D - 1 with D = column index starting at 1
        cplx lin = 2.0 * p + 2.0 + n - sg * 2.0 * w[a] + 4.0 * s1[a];
        cplx c0 = 0.5 * n * n + (p + 1.5) * n - sg * (n + 1.0 + 2.0 * p + sg * 2.0 * I * s) * w[a] +
                  2.0 * p + 1.0 + 4.0 * s1[a] * s1[a] + (4.0 * p + 2.0 - sg * 4.0 * w[a] + n) * s1[a];
        return d * d - lin * d + c0;
    };

    Eigen::MatrixXcd mp(L, L), mm(L, L);
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) {
            cplx wp = ipow(w[a], b);
            mp(a, b) = wp * quad(a, b, +1);
            mm(a, b) = wp * quad(a, b, -1);
        }
    cplx det_p = mp.determinant(), det_m = mm.determinant();

    cplx pref = (L % 2) ? -1 : 1, den = 1;
    double den_scale = 1, had = 1;
    for (int a = 1; a <= L; ++a) {
        pref *= (p + double(a) - 0.5 - I * s);
        den *= (p + double(a) - 0.5 + I * s);
        den_scale *= std::abs(p) + a + 0.5 + std::abs(s);
    }
    for (int a = 0; a < L; ++a) had *= mm.row(a).norm();
    if (near_zero &&
        (std::abs(det_m) < 1e-13 * std::max(had, 1e-300) || std::abs(den) < 1e-13 * den_scale))
        *near_zero = true;
    return pref / den * det_p / det_m;
}

cplx r_check(cplx p, cplx s, double n, const std::vector<cplx>& w) {
    int L = int(w.size());
    if (L == 0) return 1;

    std::vector<cplx> s1(L, 0);
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b)
            if (b != a) s1[a] += w[a] / (w[a] - w[b]);
    auto quad = [&](int a, int col, double sg) {
        cplx d = col;
        cplx lin = 2.0 * p + 2.0 + n - sg * 2.0 * w[a] + 4.0 * s1[a];
        cplx c0 = 0.5 * n * n + (p + 1.5) * n - sg * (n + 1.0 + 2.0 * p + sg * 2.0 * I * s) * w[a] +
                  2.0 * p + 1.0 + 4.0 * s1[a] * s1[a] + (4.0 * p + 2.0 - sg * 4.0 * w[a] + n) * s1[a];
        return d * d - lin * d + c0;
    };
    Eigen::MatrixXcd mp(L, L), mm(L, L);
    for (int a = 0; a < L; ++a)
        for (int b = 0; b < L; ++b) {
            cplx wp = ipow(w[a], b);
            mp(a, b) = wp * quad(a, b, +1);
            mm(a, b) = wp * quad(a, b, -1);
        }

    cplx den = (L % 2) ? -1 : 1;
    for (auto& wa : w) den *= wa * wa;
    for (int b = 1; b < L; ++b)
        for (int a = 0; a < b; ++a) den *= (w[b] - w[a]) * (w[b] - w[a]);
    for (int a = 1; a <= L; ++a)
        den *= (2.0 * p + 2.0 * a - 1.0 + 2.0 * I * s) * (2.0 * p + 2.0 * a - 1.0 - 2.0 * I * s);
    return mp.determinant() * mm.determinant() / den;
}

cplx d_full(cplx p, cplx s, double n, const std::vector<cplx>& w) {
    return d0_prefactor(p, s, n) * d_check(p, s, n, w);
}

cplx dcheck_product_closed_graded(cplx p, cplx s, double n, int L) {
    (void)n;
    cplx prod = 1;
    long p2 = singular::par2(L);
    for (int a = 0; a < L; ++a) {
        cplx da = double(a);
        cplx num = (0.5 + da + p - I * s) * (0.5 + da - p - I * s);
        cplx den = (0.5 + da + p + I * s) * (0.5 + da - p + I * s);
        prod *= ipow(num / den, p2 - singular::d_a(a, L));
    }
    return prod;
}

cplx dcheck_product_closed_double(cplx p, cplx s, double n, int L) {
    (void)n;
    cplx prod = 1;
    for (int m = 1; m <= L; ++m)
        for (int j = 1; j <= m; ++j)
            for (int k = 1; j * k <= m; ++k) {
                long e = singular::par1(m - k * j) * singular::par1(L - m);
                double sh = 2.0 * k - double(j);
                cplx num = (2.0 * p - 2.0 * I * s + sh) * (2.0 * p + 2.0 * I * s - sh);
                cplx den = (2.0 * p - 2.0 * I * s - sh) * (2.0 * p + 2.0 * I * s + sh);
                prod *= ipow(num / den, e);
            }
    return prod;
}

namespace {

cplx j2_bare(cplx p, cplx s, double n) {
    double g1 = std::tgamma(-1 / (n + 2));
    double g2 = std::tgamma(0.5 - 1 / (n + 2));
    cplx t1 = std::pow(2.0, 4 / (n + 2)) * pi * g1 * g1 / (g2 * g2) *
              specfn::f1(p / (n + 2), 2 / (n + 2));
    return t1 + 4.0 * s * s * specfn::f2(p / (n + 2), 1 / (n + 2));
}

// counterterm of the k=1 subtraction at the n=2 resonance
cplx j2_counterterm(double n) {
    double g1 = std::tgamma(-1 / (n + 2));
    double base = std::sqrt(pi) * g1 * g1 / ((n + 2) * std::tgamma(1 - 2 / (n + 2)));
    return base * base * 0.5 / (2 / (n + 2) - 0.5);
}

} // namespace

VacuumCoeffs vacuum_coeffs(cplx p, cplx s, double n, bool regularize) {
    VacuumCoeffs out;
    out.j1 = -2.0 * s * specfn::f1(p / (n + 2), 1 / (n + 2));
    if (std::abs(n - 2) < 1e-6) {
        if (!regularize)
            throw std::invalid_argument("vacuum_coeffs: j2 pole at n = 2, pass regularize");
        auto bracket = [&](double nn) { return j2_bare(p, s, nn) + j2_counterterm(nn); };
        auto sym = [&](double eps) { return 0.5 * (bracket(2 + eps) + bracket(2 - eps)); };
        cplx r1 = sym(1e-3), r2 = sym(5e-4);
        out.j2 = (4.0 * r2 - r1) / 3.0;
    } else {
        out.j2 = j2_bare(p, s, n);
    }
    return out;
}

LocalIm local_im_vacuum(cplx p, cplx s, double n) {
    LocalIm im;
    cplx p2 = p * p, s2 = s * s;
    im.i1 = p2 / (n + 2) + s2 / n - 1.0 / 12;
    im.i2 = s / std::sqrt(n) * (3.0 * p2 / (3 * n + 4) + s2 / n - (2 * n + 3) / (4 * (3 * n + 4)));
    im.i3 = p2 * p2 / ((5 * n + 6) * (n + 2)) - p2 / (2 * (5 * n + 6)) +
            6.0 * p2 * s2 / (n * (5 * n + 6)) + s2 * s2 / (n * n) -
            (3 * n + 4) * s2 / (2 * n * (5 * n + 6)) -
            (n - 6) * (2 * n + 3) / (240 * (5 * n + 6));
    return im;
}

LocalIm local_im(cplx p, cplx s, double n, const std::vector<cplx>& w) {
    int L = int(w.size());
    cplx pl = std::sqrt(p * p + (n + 2) * double(L));
    LocalIm im = local_im_vacuum(pl, s, n);
    cplx w1 = 0, w2 = 0;
    for (auto& wa : w) {
        w1 += wa;
        w2 += wa * wa;
    }
    im.i2 += 3.0 * I * std::sqrt(n) / (3 * n + 4) * w1;
    im.i3 += -4.0 / ((5 * n + 6) * (n + 2)) * (n * w2 - I * s * (n + 4) * w1);
    return im;
}

double discrete_product_prefactor(double p, double pbar, int a, int sz, double n) {
    if (sz + a < 0) throw std::invalid_argument("discrete_product_prefactor: negative factorial");
    double qa = -p - 0.5 - a;
    double b1 = std::pow(2.0, -4 * (n + 2) * qa / n) * std::tgamma(pbar - p - a) /
                (std::pow(n + 2, 1 + 4 * p / (n + 2)) * std::tgamma(sz + a + 1.0));
    double b2 = std::pow(2.0, 0.5 + p) * std::tgamma(1 + p) * std::tgamma(0.5 + p) /
                (std::tgamma(1 + 2 * p / (n + 2)) * std::tgamma(1 + a + 2 * p));
    return b1 * b1 * b2 * b2 * b2 * b2;
}

// ---------------------------------------------------------------------------
// Direct integration engine. Everything below works in the scaled variable
// x = z/mu, where the potential reads
//   U(x) = (p^2-1/4)/x^2 + 2 i s mu / x + mu^2
//          + sum_a [ 2/(x-v_a)^2 + n/(x(x-v_a)) ] + x^n,   v_a = w_a/mu,
// the anharmonic wall is mu-independent and D+- = -+ sin(2 pi p/(n+2)) W_x.

namespace {

using state_t = std::array<cplx, 2>;

struct Engine {
    double n;
    cplx p2q;   // p^2 - 1/4
    cplx s, mu;
    std::vector<cplx> v;

    cplx pot(cplx x) const {
        cplx u = p2q / (x * x) + 2.0 * I * s * mu / x + mu * mu + std::pow(x, n);
        for (auto& va : v) {
            cplx d = x - va;
            u += 2.0 / (d * d) + n / (x * d);
        }
        return u;
    }
    cplx dpot(cplx x) const {
        cplx u = -2.0 * p2q / (x * x * x) - 2.0 * I * s * mu / (x * x) + n * std::pow(x, n - 1);
        for (auto& va : v) {
            cplx d = x - va;
            u += -4.0 / (d * d * d) - n / (x * d * d) - n / (x * x * d);
        }
        return u;
    }
    cplx ddpot(cplx x) const {
        cplx u = 6.0 * p2q / (x * x * x * x) + 4.0 * I * s * mu / (x * x * x) +
                 n * (n - 1) * std::pow(x, n - 2);
        for (auto& va : v) {
            cplx d = x - va, d3 = d * d * d, x3 = x * x * x;
            u += 12.0 / (d3 * d) + 2.0 * n * (x * x + x * d + d * d) / (d3 * x3);
        }
        return u;
    }
    cplx dddpot(cplx x) const {
        cplx x2 = x * x;
        cplx u = -24.0 * p2q / (x2 * x2 * x) - 12.0 * I * s * mu / (x2 * x2) +
                 n * (n - 1) * (n - 2) * std::pow(x, n - 3);
        for (auto& va : v) {
            cplx d = x - va, d2 = d * d;
            u += -48.0 / (d2 * d2 * d) - 6.0 * n * (d + x) * (d2 + x2) / (d2 * d2 * x2 * x2);
        }
        return u;
    }

    // U with the leading x^n + mu^2 part removed, exact at any magnitude of x
    cplx delta0(cplx x) const {
        cplx u = p2q / (x * x) + 2.0 * I * s * mu / x;
        for (auto& va : v) {
            cplx d = x - va;
            u += 2.0 / (d * d) + n / (x * d);
        }
        return u;
    }
    // U' - n U / x with the x^n parts cancelled symbolically
    cplx delta1(cplx x) const {
        cplx u = -(n + 2) * p2q / (x * x * x) - 2.0 * (n + 1) * I * s * mu / (x * x) -
                 n * mu * mu / x;
        for (auto& va : v) {
            cplx d = x - va;
            u += -4.0 / (d * d * d) - 3.0 * n / (x * d * d) - n * (n + 1) / (x * x * d);
        }
        return u;
    }

    // log-derivative of the recessive solution to fourth WKB order
    cplx y_wkb(cplx x) const {
        cplx u = pot(x), du = dpot(x), ddu = ddpot(x), dddu = dddpot(x);
        cplx su = std::sqrt(u), u2 = u * u;
        cplx y = -su - du / (4.0 * u) - ddu / (8.0 * u * su) + 5.0 * du * du / (32.0 * u2 * su);
        y += -dddu / (16.0 * u2) + 9.0 * du * ddu / (32.0 * u2 * u) -
             15.0 * du * du * du / (64.0 * u2 * u2);
        return y;
    }

    // closed-form log-derivative of the reference asymptotic; exact
    // antiderivative of the f21_exp exponent, so far-zone amplitudes can be
    // carried analytically with only a small residual left to quadrature
    cplx gref(cplx x) const {
        return -n / (4.0 * x) - std::sqrt(std::pow(x, n) + mu * mu);
    }

    // y_wkb - gref without subtractive cancellation: the leading sqrt and
    // 1/x parts are differenced symbolically, so the tail integrand stays
    // clean however far out the quadrature samples
    cplx dy_tail(cplx x) const {
        cplx u = pot(x), du = dpot(x), ddu = ddpot(x), dddu = dddpot(x);
        cplx su = std::sqrt(u), u2 = u * u;
        cplx g2 = std::sqrt(std::pow(x, n) + mu * mu);
        cplx r = -delta0(x) / (su + g2) - delta1(x) / (4.0 * u);
        r += -ddu / (8.0 * u * su) + 5.0 * du * du / (32.0 * u2 * su);
        r += -dddu / (16.0 * u2) + 9.0 * du * ddu / (32.0 * u2 * u) -
             15.0 * du * du * du / (64.0 * u2 * u2);
        return r;
    }

    // U - gref^2 - gref', the source term of the residual log-derivative
    cplx rsource(cplx x) const {
        cplx g2 = std::sqrt(std::pow(x, n) + mu * mu);
        return delta0(x) - n * (n + 4.0) / (16.0 * x * x) - n * mu * mu / (2.0 * x * g2);
    }
};

// 2F1(-1/2, -(n+2)/(2n); (n-2)/(2n); x), usable at large |x| through the
// 1/x connection formula (whose second series terminates identically).
cplx f21_exp(cplx x, double n) {
    double a = -0.5, b = -(n + 2) / (2 * n), c = (n - 2) / (2 * n);
    if (std::abs(x) <= 0.97) return specfn::gauss_2f1(a, b, c, x);
    if (std::abs(x) < 1.06)
        throw std::runtime_error("f21_exp: argument in the uncovered annulus");
    cplx a1 = gamma_fn(cplx(c)) * gamma_fn(cplx(-1 / n)) *
              inv_gamma(cplx(b)) * inv_gamma(cplx((n - 1) / n));
    cplx a2 = gamma_fn(cplx(c)) * gamma_fn(cplx(1 / n)) / (-2 * std::sqrt(pi));
    return a1 * std::pow(-x, 0.5) * specfn::gauss_2f1(a, 1 / n, (n + 1) / n, 1.0 / x) +
           a2 * std::pow(-x, (n + 2) / (2 * n));
}

// log of the normalized recessive asymptotic at real x > 0
cplx log_xi_ref(double x, cplx mu, double n) {
    cplx arg = -mu * mu * std::pow(x, -n);
    return -0.25 * n * std::log(x) -
           2.0 / (n + 2) * std::pow(x, 0.5 * (n + 2)) * f21_exp(arg, n);
}

// residual normalization integral int_x1^inf (y_wkb - d/dx log xi_ref) dx
cplx seed_tail(const Engine& en, double x1) {
    boost::math::quadrature::tanh_sinh<double> integ;
    auto f = [&](double t) -> cplx {
        if (t < 1e-22) return 0;
        double x = x1 / t;
        return en.dy_tail(x) * (x1 / (t * t));
    };
    return integ.integrate(f, 0.0, 1.0, 1e-13);
}

struct Piece {
    // straight when radius == 0, else an arc around center
    cplx a, b;
    cplx center;
    double radius = 0, th0 = 0, th1 = 0;

    cplx at(double t) const {
        if (radius == 0) return a + (b - a) * t;
        return center + radius * std::exp(I * (th0 + (th1 - th0) * t));
    }
    cplx deriv(double t) const {
        if (radius == 0) return b - a;
        return I * radius * (th1 - th0) * std::exp(I * (th0 + (th1 - th0) * t));
    }
};

// path along the real axis from `from` to `to`, with semicircular detours
// around any v_a whose exclusion tube (0.2 |v_a|) meets the segment
std::vector<Piece> build_path(double from, double to, const std::vector<cplx>& v) {
    double lo = std::min(from, to), hi = std::max(from, to);
    struct Detour {
        double c1, c2;
        cplx center;
        double r, t0, t1;
    };
    std::vector<Detour> ds;
    for (auto& va : v) {
        double h = va.imag(), re = va.real(), r = 0.3 * std::abs(va);
        if (std::abs(h) >= 0.2 * std::abs(va)) continue;
        if (re + r < lo || re - r > hi) continue;
        double g = std::sqrt(r * r - h * h);
        Detour d;
        d.c1 = re - g;
        d.c2 = re + g;
        d.center = va;
        d.r = r;
        d.t0 = std::atan2(-h, -g);
        d.t1 = std::atan2(-h, g);
        if (d.c1 < lo || d.c2 > hi)
            throw std::runtime_error("ode path planning: singularity overlaps a path endpoint");
        ds.push_back(d);
    }
    std::sort(ds.begin(), ds.end(), [](auto& A, auto& B) { return A.c1 < B.c1; });
    for (size_t i = 1; i < ds.size(); ++i)
        if (ds[i].c1 < ds[i - 1].c2)
            throw std::runtime_error("ode path planning: overlapping exclusion tubes");

    std::vector<Piece> ps;
    double cur = lo;
    auto add_line = [&](double A, double B) {
        if (B - A > 1e-14) {
            Piece pc;
            pc.a = A;
            pc.b = B;
            ps.push_back(pc);
        }
    };
    for (auto& d : ds) {
        add_line(cur, d.c1);
        Piece arc;
        arc.center = d.center;
        arc.radius = d.r;
        arc.th0 = d.t0;
        arc.th1 = d.t1;
        ps.push_back(arc);
        cur = d.c2;
    }
    add_line(cur, hi);
    if (from > to) {
        std::reverse(ps.begin(), ps.end());
        for (auto& pc : ps) {
            if (pc.radius == 0)
                std::swap(pc.a, pc.b);
            else
                std::swap(pc.th0, pc.th1);
        }
    }
    return ps;
}

// integrate Phi'' = U Phi along the path; the state is rescaled between
// growth-bounded chunks and the accumulated log of the rescalings returned
void run_leg(const Engine& en, const std::vector<Piece>& path, state_t& st, double& log_scale) {
    namespace od = boost::numeric::odeint;
    auto stepper = od::make_controlled(1e-30, 1e-13,
                                       od::runge_kutta_fehlberg78<state_t>());
    for (auto& pc : path) {
        double t = 0;
        while (t < 1.0) {
            cplx x0 = pc.at(t);
            double speed = std::abs(pc.deriv(t));
            double rate = speed * (std::sqrt(std::abs(en.pot(x0))) + 1.0);
            double dt = std::min(1.0 - t, 80.0 / rate);
            dt = std::min(dt, std::max(0.35 * std::abs(x0) / std::max(speed, 1e-30), 1e-6));
            double t2 = std::min(1.0, t + dt);
            auto sys = [&](const state_t& y, state_t& dydt, double tt) {
                cplx x = pc.at(tt), dx = pc.deriv(tt);
                dydt[0] = dx * y[1];
                dydt[1] = dx * en.pot(x) * y[0];
            };
            od::integrate_adaptive(stepper, sys, st, t, t2, 0.25 * (t2 - t));
            t = t2;
            double m = std::max(std::abs(st[0]), std::abs(st[1]));
            if (m > 1e30 || (m < 1e-30 && m > 0)) {
                st[0] /= m;
                st[1] /= m;
                log_scale += std::log(m);
            }
        }
    }
}

struct FrobeniusStart {
    cplx phi, dphi;
    double x0;
};

// normalized series solution x^{1/2+p} sum c_e x^e with exponents on the
// lattice e = i + j(n+2); the normalization already carries the mu-free
// combination of the defining prefactor
FrobeniusStart frobenius_start(const Engine& en, cplx p, double x0_hint) {
    double n = en.n;
    cplx alpha = 0.5 + p;
    double vmin = 1e300;
    for (auto& va : en.v) vmin = std::min(vmin, std::abs(va));

    // exponent lattice up to the cap, sorted, with near-duplicates merged
    const double cap = 26.0;
    std::vector<std::pair<double, std::array<int, 2>>> lat;
    for (int i = 0; i <= int(cap); ++i)
        for (int j = 0; i + j * (n + 2) <= cap; ++j)
            lat.push_back({i + j * (n + 2), {i, j}});
    std::sort(lat.begin(), lat.end());

    // series data of the singular sum: a 1/x residue plus a power series,
    //   sum_a [...] = u_res/x + sum_m u_m x^m,
    //   u_res = -n sum_a 1/v_a,  u_m = sum_a (2(m+1)-n)/v_a^{m+2}
    cplx u_res = 0;
    std::vector<cplx> um(int(cap) + 1, 0);
    for (auto& va : en.v) {
        u_res += -n / va;
        cplx ip = 1.0 / (va * va);
        for (int m = 0; m < int(um.size()); ++m, ip /= va) um[m] += (2.0 * (m + 1) - n) * ip;
    }

    std::vector<cplx> c(lat.size(), 0);
    auto coeff_at = [&](double e) -> cplx {
        if (e < -1e-9) return 0;
        auto it = std::lower_bound(lat.begin(), lat.end(), e - 1e-9,
                                   [](auto& A, double val) { return A.first < val; });
        if (it == lat.end() || std::abs(it->first - e) > 1e-9) return 0;
        return c[size_t(it - lat.begin())];
    };

    for (size_t idx = 0; idx < lat.size(); ++idx) {
        double e = lat[idx].first;
        if (e == 0) {
            c[idx] = 1;
            continue;
        }
        if (idx && std::abs(lat[idx].first - lat[idx - 1].first) < 1e-9) continue; // merged slot
        cplx rhs = (2.0 * I * en.s * en.mu + u_res) * coeff_at(e - 1) +
                   en.mu * en.mu * coeff_at(e - 2) + coeff_at(e - (n + 2));
        for (int m = 0; m + 2 <= e + 1e-9 && m < int(um.size()); ++m) {
            if (um[m] == 0.0) continue;
            rhs += um[m] * coeff_at(e - 2 - m);
        }
        cplx den = e * (e + 2.0 * p);
        if (std::abs(den) < 1e-8)
            throw std::invalid_argument("frobenius_start: resonant p (2p on the exponent lattice)");
        c[idx] = rhs / den;
    }
    // merge duplicates into single slots for evaluation
    std::vector<std::pair<double, cplx>> terms;
    for (size_t idx = 0; idx < lat.size(); ++idx) {
        if (!terms.empty() && std::abs(terms.back().first - lat[idx].first) < 1e-9)
            terms.back().second += c[idx];
        else
            terms.push_back({lat[idx].first, c[idx]});
    }

    double x0 = x0_hint;
    if (vmin < 1e299) x0 = std::min(x0, 0.05 * vmin);
    x0 = std::min(x0, 0.6 / std::max(1.0, std::abs(en.mu)));

    cplx norm = 1.0 / std::sqrt(pi) * std::pow(n + 2, (-2.0 * p / (n + 2) - 0.5)) *
                gamma_fn(-2.0 * p / (n + 2));

    for (int tries = 0;; ++tries) {
        cplx sum = 0, dsum = 0;
        double tail = 0, total = 0;
        for (auto& [e, ce] : terms) {
            cplx term = ce * std::pow(x0, e);
            sum += term;
            dsum += (alpha + e) * ce * std::pow(x0, e);
            total += std::abs(term);
            if (e > cap - 3) tail += std::abs(term);
        }
        if (tail <= 1e-13 * std::max(total, 1e-300)) {
            cplx xa = std::pow(cplx(x0), alpha);
            return {norm * xa * sum, norm * xa / x0 * dsum, x0};
        }
        x0 *= 0.7;
        if (tries > 200) throw std::runtime_error("frobenius_start: no converged radius");
    }
}

struct InwardLeg {
    state_t st;       // scaled recessive solution and derivative at x_match
    cplx log_norm;    // log of true Xi over scaled Xi at x_match
};

// far zone in residual log-derivative form: r = y - gref relaxes toward the
// recessive branch under r' = (U - gref^2 - gref') - 2 gref r - r^2, so no
// error accumulates over the long sweep and the small amplitude correction
// integrates alongside without cancellation
std::pair<cplx, cplx> riccati_leg(const Engine& en, double x1, double xh) {
    namespace od = boost::numeric::odeint;
    state_t st = {en.dy_tail(x1), cplx(0)};
    auto stepper = od::make_controlled(1e-30, 1e-13, od::runge_kutta_fehlberg78<state_t>());
    auto sys = [&](const state_t& y, state_t& dydt, double x) {
        dydt[0] = en.rsource(x) - (2.0 * en.gref(x) + y[0]) * y[0];
        dydt[1] = y[0];
    };
    od::integrate_adaptive(stepper, sys, st, x1, xh, -(x1 - xh) / 64);
    if (!std::isfinite(st[0].real()) || !std::isfinite(st[1].real()))
        throw std::runtime_error("riccati_leg: log-derivative sweep failed");
    return {st[0], st[1]};
}

InwardLeg inward_leg(const Engine& en, double x1, double xh, double xm) {
    auto [rh, amp_res] = riccati_leg(en, x1, xh);

    InwardLeg leg;
    leg.st = {cplx(1), en.gref(xh) + rh};
    leg.log_norm = log_xi_ref(xh, en.mu, en.n) - seed_tail(en, x1) + amp_res;
    if (xh - xm > 1e-9) {
        double log_scale = 0;
        auto path = build_path(xh, xm, en.v);
        run_leg(en, path, leg.st, log_scale);
        leg.log_norm += log_scale;
    }
    return leg;
}

} // namespace

ConnectionResult integrate_connection(const OdeProblem& prob) {
    double n = prob.n;
    if (n <= 0) throw std::invalid_argument("integrate_connection: n must be positive");
    check_not_resonant(n);
    check_w_set(prob.w, prob.p, prob.s, n);
    if (!prob.w.empty() && std::abs(prob.mu) < 0.3)
        throw std::invalid_argument("integrate_connection: |mu| < 0.3 with apparent singularities");

    Engine en;
    en.n = n;
    en.p2q = prob.p * prob.p - 0.25;
    en.s = prob.s;
    en.mu = prob.mu;
    double vmax = 0;
    if (prob.mu != 0.0)
        for (auto& wa : prob.w) {
            en.v.push_back(wa / prob.mu);
            vmax = std::max(vmax, std::abs(en.v.back()));
        }

    double amu = std::abs(prob.mu);
    double x1 = std::pow((n + 2) * kTwkb / 2, 2 / (n + 2));
    x1 = std::max(x1, 1.8 * std::pow(std::max(amu, 1e-30), 2 / n));
    x1 = std::max(x1, 3 * vmax + 2.5);

    double xm = std::pow((n + 2) * kTmatch / 2, 2 / (n + 2));
    if (amu > 0) xm = std::min(xm, kTmatch / amu);
    for (int guard = 0; guard < 60; ++guard) {
        bool clear = true;
        for (auto& va : en.v)
            if (std::abs(xm - va) < 0.2 * std::abs(va)) clear = false;
        if (clear) break;
        xm *= 1.15;
        if (guard == 59) throw std::runtime_error("ode path planning: no clear match point");
    }
    if (xm > 0.6 * x1) xm = 0.6 * x1;

    // the log-derivative sweep must stay clear of singularity tubes and,
    // unless mu^2 is dominantly positive, of the turning region
    double xh = std::max(xm, (vmax > 0 ? 3 * vmax + 2 : 0.0));
    cplx mu2 = prob.mu * prob.mu;
    if (mu2.real() < 0.5 * amu * amu) xh = std::max(xh, 1.6 * std::pow(amu, 2 / n));
    // keep the hand-off point out of the f21_exp crossover band
    for (int guard = 0; guard < 40; ++guard) {
        double a2 = amu * amu * std::pow(xh, -n);
        if (a2 < 0.95 || a2 > 1.08) break;
        xh *= 1.06;
    }
    xh = std::min(xh, 0.95 * x1);

    InwardLeg xi = inward_leg(en, x1, xh, xm);

    ConnectionResult out;
    cplx sin_fac = std::sin(2.0 * pi * prob.p / (n + 2));
    for (int sgn : {+1, -1}) {
        cplx p = double(sgn) * prob.p;
        FrobeniusStart fs = frobenius_start(en, p, std::min(0.08, xm / 4));
        state_t st = {fs.phi, fs.dphi};
        double log_scale = 0;
        auto path = build_path(fs.x0, xm, en.v);
        run_leg(en, path, st, log_scale);
        cplx wron = st[1] * xi.st[0] - st[0] * xi.st[1];
        cplx ld = std::log(-double(sgn) * sin_fac * wron) + xi.log_norm + log_scale;
        if (sgn > 0) {
            out.log_d_plus = ld;
            out.d_plus = std::exp(ld);
        } else {
            out.log_d_minus = ld;
            out.d_minus = std::exp(ld);
        }
    }
    out.err_estimate = 2e-10 * (1 + std::max(std::abs(out.d_plus), std::abs(out.d_minus)));
    return out;
}

double wronskian_residual(const OdeProblem& prob, const std::vector<cplx>& mu_grid) {
    cplx q = std::exp(I * pi / (prob.n + 2));
    cplx rhs = 2.0 * I * std::sin(2.0 * pi * prob.p / (prob.n + 2));
    double worst = 0;
    for (auto& mu : mu_grid) {
        OdeProblem hi = prob, lo = prob;
        hi.mu = q * mu;
        lo.mu = mu / q;
        auto rh = integrate_connection(hi);
        auto rl = integrate_connection(lo);
        cplx lhs = std::pow(q, 2.0 * prob.p) * rh.d_plus * rl.d_minus -
                   std::pow(q, -2.0 * prob.p) * rh.d_minus * rl.d_plus;
        worst = std::max(worst, std::abs(lhs - rhs));
    }
    return worst;
}

cplx dcheck_from_ode(cplx p, cplx s, double n, const std::vector<cplx>& w,
                     double mu0, double ratio, int points) {
    std::vector<cplx> val(points);
    std::vector<double> t(points);
    for (int j = 0; j < points; ++j) {
        double mu = mu0 * std::pow(ratio, j);
        t[j] = std::pow(mu, -(n + 2) / n);
        cplx g[2];
        for (int sgn : {0, 1}) {
            OdeProblem with_w{n, p, s, (sgn ? -mu : mu), w};
            OdeProblem vac{n, p, s, (sgn ? -mu : mu), {}};
            g[sgn] = std::exp(integrate_connection(with_w).log_d_plus -
                              integrate_connection(vac).log_d_plus);
        }
        val[j] = g[0] / g[1];
    }
    // Neville in t
    for (int lvl = 1; lvl < points; ++lvl)
        for (int j = points - 1; j >= lvl; --j)
            val[j] = val[j] + (val[j] - val[j - 1]) * t[j] / (t[j - lvl] - t[j]);
    return val[points - 1];
}

VacuumCoeffs jvac_from_ode(cplx p, cplx s, double n) {
    const int levels = 4;
    const double h0 = 0.048;
    std::array<cplx, levels> odd{}, even{};
    for (int k = 0; k < levels; ++k) {
        double h = h0 / (1 << k);
        cplx lp = std::log(integrate_connection({n, p, s, mu_of_lambda(h, n), {}}).d_plus);
        cplx lm = std::log(integrate_connection({n, p, s, mu_of_lambda(-h, n), {}}).d_plus);
        odd[k] = (lp - lm) / (2 * h);
        even[k] = (lp + lm) / (2 * h * h);
    }
    // Richardson in h^2
    for (int lvl = 1; lvl < levels; ++lvl) {
        double f = std::pow(4.0, lvl);
        for (int k = levels - 1; k >= lvl; --k) {
            odd[k] = (f * odd[k] - odd[k - 1]) / (f - 1);
            even[k] = (f * even[k] - even[k - 1]) / (f - 1);
        }
    }
    return {-odd[levels - 1], -even[levels - 1]};
}

std::vector<cplx> taylor_coeffs_on_circle(cplx p, cplx s, double n,
                                          const std::vector<cplx>& w,
                                          double radius, int count) {
    int m = std::max(4 * count, 32);
    std::vector<cplx> d(m);
    for (int j = 0; j < m; ++j) {
        cplx mu = radius * std::exp(2.0 * pi * I * double(j) / double(m));
        d[j] = integrate_connection({n, p, s, mu, w}).d_plus;
    }
    std::vector<cplx> a(count);
    for (int k = 0; k < count; ++k) {
        cplx acc = 0;
        for (int j = 0; j < m; ++j)
            acc += d[j] * std::exp(-2.0 * pi * I * double(j * k) / double(m));
        a[k] = acc / (double(m) * std::pow(radius, k));
    }
    return a;
}

} // namespace z2v::odeiqft
