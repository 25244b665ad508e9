#include "z2v/specfn.hpp"
#include "z2v/model.hpp"

#include <boost/math/quadrature/sinh_sinh.hpp>

#include <cmath>
#include <stdexcept>

namespace z2v::specfn {

namespace {

void check_finite(cplx z, const char* who) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
        throw std::invalid_argument(std::string(who) + ": non-finite argument");
}

bool near_nonpositive_int(cplx z, double tol = 1e-12) {
    if (z.real() > 0.5) return false;
    double r = std::round(z.real());
    return r <= 0.0 && std::abs(z.real() - r) < tol && std::abs(z.imag()) < tol;
}

// Lanczos, g = 7. Valid for Re z >= 0.5; callers shift first.
cplx lanczos_lg(cplx z) {
    static const double c[9] = {
        0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
        771.32342877765313,   -176.61502916214059,   12.507343278686905,
        -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
    cplx zm = z - 1.0;
    cplx s = c[0];
    for (int i = 1; i < 9; ++i) s += c[i] / (zm + (double)i);
    cplx t = zm + 7.5;
    return 0.91893853320467274178 + (zm + 0.5) * std::log(t) - t + std::log(s);
}

} // namespace

cplx log_gamma(cplx z) {
    check_finite(z, "log_gamma");
    if (near_nonpositive_int(z)) throw std::domain_error("log_gamma: pole at non-positive integer");
    // analytic branch via upward recurrence, no reflection: log Gamma(z) =
    // log Gamma(z+m) - sum Log(z+j) stays on the branch real on (0,inf)
    cplx shift = 0.0;
    while (z.real() < 0.5) {
        shift += std::log(z);
        z += 1.0;
    }
    return lanczos_lg(z) - shift;
}

cplx gamma_fn(cplx z) { return std::exp(log_gamma(z)); }

cplx digamma(cplx z) {
    check_finite(z, "digamma");
    if (near_nonpositive_int(z)) throw std::domain_error("digamma: pole at non-positive integer");
    static const double B[7] = {1.0 / 6.0,  -1.0 / 30.0,    1.0 / 42.0, -1.0 / 30.0,
                                5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0};
    cplx shift = 0.0;
    while (std::abs(z) < 15.0 || z.real() < 1.0) {
        shift -= 1.0 / z;
        z += 1.0;
    }
    cplx r = std::log(z) - 0.5 / z;
    cplx z2 = 1.0 / (z * z), zp = z2;
    for (int k = 0; k < 7; ++k) {
        r -= B[k] / (2.0 * (k + 1.0)) * zp;
        zp *= z2;
    }
    return r + shift;
}

cplx lerch_phi(cplx z, cplx alpha, double* err) {
    check_finite(z, "lerch_phi");
    check_finite(alpha, "lerch_phi");
    if (std::abs(z) >= 1.0) throw std::domain_error("lerch_phi: need |z| < 1");
    if (near_nonpositive_int(alpha)) throw std::domain_error("lerch_phi: alpha pole");
    cplx sum = 0.0, zp = 1.0;
    double az = std::abs(z);
    long m = 0;
    double tail = 1e300;
    for (; m < 2000000; ++m) {
        sum += zp / (alpha + (double)m);
        zp *= z;
        double denom = (double)m + 1.0 + alpha.real();
        if (denom > 0.0) {
            tail = std::abs(zp) / (denom * (1.0 - az));
            if (tail < 1e-13) break;
        }
    }
    if (err) *err = tail;
    return sum;
}

cplx q_pochhammer(cplx z, cplx qt) {
    check_finite(z, "q_pochhammer");
    check_finite(qt, "q_pochhammer");
    if (std::abs(qt) >= 1.0) throw std::domain_error("q_pochhammer: need |qt| < 1");
    cplx prod = 1.0, zq = z;
    for (int m = 0; m < 100000; ++m) {
        if (std::abs(zq) < 1e-16) break;
        prod *= 1.0 - zq;
        zq *= qt;
    }
    return prod;
}

cplx dedekind_eta(cplx tau) {
    if (!(tau.imag() > 0.0)) throw std::domain_error("dedekind_eta: need Im tau > 0");
    cplx qt = std::exp(2.0 * pi * I * tau);
    return std::exp(pi * I * tau / 12.0) * q_pochhammer(qt, qt);
}

cplx theta1(cplx u, cplx tau) {
    if (!(tau.imag() > 0.0)) throw std::domain_error("theta1: need Im tau > 0");
    cplx qt = std::exp(2.0 * pi * I * tau);
    cplx e2u = std::exp(2.0 * pi * I * u);
    return 2.0 * std::exp(pi * I * tau / 4.0) * std::sin(pi * u) * q_pochhammer(e2u * qt, qt) *
           q_pochhammer(qt / e2u, qt) * q_pochhammer(qt, qt);
}

cplx gauss_2f1(cplx a, cplx b, cplx c, cplx x, double* err) {
    check_finite(x, "gauss_2f1");
    if (near_nonpositive_int(c)) throw std::domain_error("gauss_2f1: c non-positive integer");
    if (std::abs(x) >= 1.0) throw std::domain_error("gauss_2f1: need |x| < 1");
    cplx sum = 0.0, term = 1.0;
    int m = 0;
    for (; m < 100000; ++m) {
        sum += term;
        term *= (a + (double)m) * (b + (double)m) / ((c + (double)m) * (1.0 + m)) * x;
        if (std::abs(term) < 1e-16 * (1.0 + std::abs(sum)) && m > 2) break;
    }
    if (err) *err = std::abs(term);
    return sum;
}

cplx f1(cplx h, double g) {
    check_finite(h, "f1");
    return pi * std::exp(log_gamma(cplx(1.0 - 2.0 * g)) + log_gamma(g + 2.0 * h) -
                         log_gamma(1.0 - g + 2.0 * h)) /
           std::sin(pi * g);
}

double f2_s1(double x, double g) {
    if (std::abs(x) > 40.0) return 0.0; // |S1| < 1e-200 out here
    cplx ix{0.0, 2.0 * x};
    cplx lg = log_gamma(1.0 - 2.0 * g + ix) + log_gamma(1.0 - 2.0 * g - ix) +
              2.0 * (log_gamma(g + ix) + log_gamma(g - ix));
    return std::sinh(2.0 * pi * x) * std::exp(lg).real();
}

cplx f2(cplx h, double g, double* err) {
    check_finite(h, "f2");
    if (!(h.real() > 0.0)) throw std::domain_error("f2: need Re h > 0");
    if (!(g > 0.0 && g < 1.0) || std::abs(g - 0.5) < 1e-10)
        throw std::domain_error("f2: need g in (0,1), g != 1/2");

    boost::math::quadrature::sinh_sinh<double> integ;
    cplx ih = I * h;
    auto f = [&](double x) -> cplx { return f2_s1(x, g) / (x + ih); };
    double qerr = 0.0;
    cplx integral = integ.integrate(f, 1e-12, &qerr) / (2.0 * pi);

    if (g > 0.5) {
        integral -= std::sin(2.0 * pi * g) *
                    std::exp(log_gamma(cplx(3.0 - 4.0 * g)) + 2.0 * log_gamma(cplx(1.0 - g)) +
                             2.0 * log_gamma(cplx(3.0 * g - 1.0))) /
                    ((2.0 * h + 1.0 - 2.0 * g) * (2.0 * h - 1.0 + 2.0 * g));
    }
    cplx pref = std::pow(2.0, 1.0 - 4.0 * g) *
                std::exp(2.0 * log_gamma(cplx(1.0 - g)) - 2.0 * log_gamma(cplx(0.5 + g)) +
                         log_gamma(2.0 * g + 2.0 * h) - log_gamma(1.0 - 2.0 * g + 2.0 * h));
    if (err) *err = qerr * std::abs(pref);
    return pref * integral;
}

std::vector<cplx> laguerre_roots(int m, double alpha, double* residual) {
    if (m < 1) throw std::invalid_argument("laguerre_roots: need m >= 1");
    // coefficients of L_m^{(alpha)}: c_i = (-1)^i / i! * prod_{j=i+1..m}(alpha+j) / (m-i)!
    std::vector<double> c(m + 1);
    for (int i = 0; i <= m; ++i) {
        double v = 1.0;
        for (int j = i + 1; j <= m; ++j) v *= alpha + j;
        double ifac = 1.0, mfac = 1.0;
        for (int j = 2; j <= i; ++j) ifac *= j;
        for (int j = 2; j <= m - i; ++j) mfac *= j;
        c[i] = ((i % 2) ? -1.0 : 1.0) * v / (ifac * mfac);
    }
    // monic polynomial for Durand-Kerner
    std::vector<cplx> a(m + 1);
    for (int i = 0; i <= m; ++i) a[i] = c[i] / c[m];

    std::vector<cplx> r(m);
    cplx w{0.4, 0.9};
    cplx wp = 1.0;
    double radius = 1.0;
    for (int i = 0; i < m; ++i) radius = std::max(radius, std::pow(std::abs(a[i]), 1.0 / (m - i)));
    for (int i = 0; i < m; ++i) {
        wp *= w;
        r[i] = 1.5 * radius * wp;
    }
    auto horner = [&](const std::vector<cplx>& p, cplx x) {
        cplx v = 0.0;
        for (int i = (int)p.size() - 1; i >= 0; --i) v = v * x + p[i];
        return v;
    };
    for (int it = 0; it < 500; ++it) {
        double moved = 0.0;
        for (int i = 0; i < m; ++i) {
            cplx denom = 1.0;
            for (int j = 0; j < m; ++j)
                if (j != i) denom *= r[i] - r[j];
            cplx step = horner(a, r[i]) / denom;
            r[i] -= step;
            moved = std::max(moved, std::abs(step));
        }
        if (moved < 1e-14 * (1.0 + radius)) break;
    }
    // Newton polish on the original (non-monic) coefficients
    std::vector<cplx> cc(c.begin(), c.end()), dc(m);
    for (int i = 1; i <= m; ++i) dc[i - 1] = c[i] * (double)i;
    for (auto& root : r)
        for (int it = 0; it < 3; ++it) {
            cplx d = horner(dc, root);
            if (std::abs(d) < 1e-300) break;
            root -= horner(cc, root) / d;
        }
    std::sort(r.begin(), r.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    double worst = 0.0;
    for (auto& root : r) {
        double scale = 0.0, ap = 1.0;
        for (int i = 0; i <= m; ++i) {
            scale += std::abs(c[i]) * ap;
            ap *= std::abs(root);
        }
        worst = std::max(worst, std::abs(horner(cc, root)) / scale);
    }
    if (residual) *residual = worst;
    if (worst > 1e-10) throw std::runtime_error("laguerre_roots: root polish failed");
    return r;
}

} // namespace z2v::specfn
