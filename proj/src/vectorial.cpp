#include "soblab/vectorial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>

#include "soblab/rng.hpp"
#include "soblab/threads.hpp"

namespace soblab {

namespace {

double norm_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double vi : v) s += vi * vi;
    return std::sqrt(s);
}

double dot_of(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// |x|^{p-2} with the p = 2 convention 0^0 = 1.
double pow_pm2(double ax, double p) {
    if (p == 2.0) return 1.0;
    if (ax == 0.0) return (p > 2.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return std::pow(ax, p - 2.0);
}

} // namespace

double omega_scalar(int j, double p, double ax, double axy, double c3) {
    // all four weights coincide with 1 at p = 2, so both families admit p = 2
    switch (j) {
        case 1:
            if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("omega: j=1 needs 1<p<=2");
            return (ax <= axy) ? pow_pm2(axy, p) : pow_pm2(ax, p);
        case 2: {
            if (!(p > 1.0 && p <= 2.0)) throw std::invalid_argument("omega: j=2 needs 1<p<=2");
            if (ax <= axy) {
                double den = (2.0 - p) * axy + (p - 1.0) * ax;
                if (den == 0.0) return 0.0; // only when x = y = 0
                return std::pow(axy, p - 1.0) / den;
            }
            return pow_pm2(ax, p);
        }
        case 3: {
            if (!(p >= 2.0)) throw std::invalid_argument("omega: j=3 needs p>=2");
            if (ax <= axy) return pow_pm2(ax, p);
            if (axy >= std::pow(c3, 1.0 / (p - 1.0)) * ax) return std::pow(axy, p - 1.0) / ax;
            return c3 * pow_pm2(ax, p);
        }
        case 4: {
            if (!(p >= 2.0)) throw std::invalid_argument("omega: j=4 needs p>=2");
            if (ax <= axy) return pow_pm2(ax, p);
            return std::pow(axy, p - 1.0) / ax;
        }
        default:
            throw std::invalid_argument("omega: j must be 1..4");
    }
}

double omega(int j, double p, const std::vector<double>& x, const std::vector<double>& y,
             double c3) {
    if (x.size() != y.size()) throw std::invalid_argument("omega: dimension mismatch");
    std::vector<double> s(x.size());
    for (size_t i = 0; i < x.size(); ++i) s[i] = x[i] + y[i];
    return omega_scalar(j, p, norm_of(x), norm_of(s), c3);
}

double gradient_ineq_margin_scalar(double p, const VecIneqConstants& c,
                                   double ax, double ay, double xdoty) {
    double axy2 = ax * ax + 2.0 * xdoty + ay * ay;
    double axy = std::sqrt(std::max(axy2, 0.0));
    double sy = xdoty + ay * ay;                 // (x+y).y
    double lhs = (axy == 0.0) ? 0.0 : std::pow(axy, p - 2.0) * sy;
    double xterm = (ax == 0.0) ? 0.0 : pow_pm2(ax, p) * xdoty;
    double diff2 = (ax - axy) * (ax - axy);
    double margin;
    if (p < 2.0) {
        double w1 = omega_scalar(1, p, ax, axy);
        double w2 = omega_scalar(2, p, ax, axy);
        double xp2 = pow_pm2(ax, p); // +inf at ax = 0, min picks |y|^p
        double minterm = std::min(std::pow(ay, p), xp2 * ay * ay);
        margin = lhs - xterm - (1.0 - c.kappa) * (w1 * ay * ay + (p - 2.0) * w2 * diff2) -
                 c.c1 * minterm;
    } else {
        double w3 = omega_scalar(3, p, ax, axy, c.c3);
        double w4 = omega_scalar(4, p, ax, axy, c.c3);
        margin = lhs - xterm - (1.0 - c.kappa) * (w3 * ay * ay + (p - 2.0) * w4 * diff2) -
                 c.c2 * std::pow(ay, p);
    }
    return margin;
}

double gradient_ineq_margin(double p, const VecIneqConstants& c,
                            const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("gradient_ineq_margin: dim mismatch");
    return gradient_ineq_margin_scalar(p, c, norm_of(x), norm_of(y), dot_of(x, y));
}

double c3_condition_fn(double p, double t, double a) {
    return (2.0 - p) * std::pow(t, p + 1.0) + (2.0 * p - 3.0) * std::pow(t, p) +
           (1.0 - p) * std::pow(t, p - 1.0) - (t - 1.0) * (t - 1.0) * a + (1.0 - t);
}

double find_c3(double p) {
    if (!(p >= 2.0)) throw std::invalid_argument("find_c3: needs p >= 2");
    auto admissible = [&](double a) {
        double tmax = std::pow(a, 1.0 / (p - 1.0));
        const int K = 4000;
        for (int i = 1; i <= K; ++i) {
            double t = tmax * i / K;
            if (c3_condition_fn(p, t, a) < 0.0) return false;
        }
        return true;
    };
    double lo = 0.0, hi = 0.5;
    if (admissible(hi)) return hi;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (admissible(mid) ? lo : hi) = mid;
    }
    return lo;
}

VecIneqConstants estimate_vec_constants(double p, double kappa, double t_max,
                                        int grid_density) {
    if (!(p > 1.0)) throw std::invalid_argument("estimate_vec_constants: need p > 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("estimate_vec_constants: need kappa > 0");
    VecIneqConstants c;
    c.p = p;
    c.kappa = kappa;
    c.c3 = (p >= 2.0) ? find_c3(p) : 0.0;

    // margin without the c-term, on the reduction |x| = 1, |y| = t, angle theta
    VecIneqConstants c0 = c; // c1 = c2 = 0
    double cstar = std::numeric_limits<double>::infinity();
    const int nt = std::max(grid_density, 64);
    const int nth = std::max(grid_density / 3, 64);
    const double tmin = 1e-6;
    for (int i = 0; i < nt; ++i) {
        double t = tmin * std::pow(t_max / tmin, double(i) / (nt - 1));
        for (int j = 0; j <= nth; ++j) {
            double cth = -1.0 + 2.0 * double(j) / nth;
            double m0 = gradient_ineq_margin_scalar(p, c0, 1.0, t, t * cth);
            double minterm = (p < 2.0) ? std::min(std::pow(t, p), t * t) : std::pow(t, p);
            if (minterm <= 0.0) continue;
            cstar = std::min(cstar, m0 / minterm);
        }
    }
    if (!(cstar > 0.0))
        throw std::runtime_error("estimate_vec_constants: no positive constant fits the "
                                 "sampled margins; implementation bug");
    if (p < 2.0)
        c.c1 = 0.9 * cstar;
    else
        c.c2 = 0.9 * cstar;
    return c;
}

double scalar_ineq_margin(double pstar, const ScalarIneqConstants& c, double a, double b) {
    if (c.pstar != pstar)
        throw std::invalid_argument("scalar_ineq_margin: constants/pstar mismatch");
    double ab = a + b;
    double lhs = (ab == 0.0) ? 0.0 : std::pow(std::abs(ab), pstar - 2.0) * ab * b;
    double first = (a == 0.0) ? 0.0 : std::pow(std::abs(a), pstar - 1.0) * ((a > 0) ? b : -b);
    if (pstar <= 2.0) {
        double den = a * a + b * b;
        if (den == 0.0) return 0.0;
        double mass = std::pow(std::abs(a) + c.C1 * std::abs(b), pstar) / den * b * b;
        return first + (pstar - 1.0 + c.kappa) * mass - lhs;
    }
    double mid = (a == 0.0) ? 0.0 : std::pow(std::abs(a), pstar - 2.0) * b * b;
    return first + (pstar - 1.0 + c.kappa) * mid + c.C2 * std::pow(std::abs(b), pstar) - lhs;
}

ScalarIneqConstants estimate_scalar_constants(double pstar, double kappa) {
    if (!(pstar > 1.0)) throw std::invalid_argument("estimate_scalar_constants: pstar > 1");
    if (!(kappa > 0.0)) throw std::invalid_argument("estimate_scalar_constants: kappa > 0");
    ScalarIneqConstants c;
    c.pstar = pstar;
    c.kappa = kappa;

    auto excess = [&](double t) { // |1+t|^{pstar-2}(1+t)t - t
        double at = std::abs(1.0 + t);
        double lhs = (at == 0.0) ? 0.0 : std::pow(at, pstar - 2.0) * (1.0 + t) * t;
        return lhs - t;
    };

    const int K = 200000;
    const double tlo = 1e-8, thi = 1e6;
    double supC1 = 0.0, supC1_inner = 0.0;
    double supC2 = 0.0, supC2_inner = 0.0;
    for (int i = 0; i <= K; ++i) {
        double mag = tlo * std::pow(thi / tlo, double(i) / K);
        for (double t : {mag, -mag}) {
            double N = excess(t);
            if (pstar <= 2.0 && N > 0.0) {
                double inner = (1.0 + t * t) * N / ((pstar - 1.0 + kappa) * t * t);
                double cand = (std::pow(inner, 1.0 / pstar) - 1.0) / std::abs(t);
                supC1 = std::max(supC1, cand);
                if (std::abs(t) <= 1e3) supC1_inner = std::max(supC1_inner, cand);
            }
            double num = N - (pstar - 1.0 + kappa) * t * t;
            if (num > 0.0) {
                double cand = num / std::pow(std::abs(t), pstar);
                supC2 = std::max(supC2, cand);
                if (std::abs(t) <= 1e3) supC2_inner = std::max(supC2_inner, cand);
            }
        }
    }
    if (pstar <= 2.0 && supC1 > 2.0 * supC1_inner + 1.0)
        throw std::runtime_error("estimate_scalar_constants: C1 scan diverging at large t");
    if (pstar > 2.0 && supC2 > 2.0 * supC2_inner + 1.0)
        throw std::runtime_error("estimate_scalar_constants: C2 scan diverging at large t");
    c.C1 = std::max(1.0 / pstar, 1.1 * supC1);
    c.C2 = std::max(1.0, 1.1 * supC2);
    return c;
}

namespace {

constexpr std::uint64_t kChunk = 1 << 16;

template <typename Body>
void run_fuzz_chunks(std::uint64_t samples, const Body& body) {
    int nchunks = static_cast<int>((samples + kChunk - 1) / kChunk);
    parallel_for_chunks(nchunks, [&](int chunk) {
        std::uint64_t lo = static_cast<std::uint64_t>(chunk) * kChunk;
        std::uint64_t hi = std::min(samples, lo + kChunk);
        body(chunk, lo, hi);
    });
}

} // namespace

VecFuzzResult fuzz_gradient_ineq(double p, const VecIneqConstants& c,
                                 std::uint64_t samples, std::uint64_t seed, int dim) {
    VecFuzzResult res;
    res.constants = c;
    res.samples = samples;
    res.min_margin = std::numeric_limits<double>::infinity();
    res.min_margin_over_minterm = std::numeric_limits<double>::infinity();
    res.omega3_min_rel = std::numeric_limits<double>::infinity();
    std::mutex merge_mtx;

    run_fuzz_chunks(samples, [&](int chunk, std::uint64_t lo, std::uint64_t hi) {
        Rng rng(Rng::mix(seed, chunk));
        double local_min = std::numeric_limits<double>::infinity();
        double local_ratio = std::numeric_limits<double>::infinity();
        double local_om3 = std::numeric_limits<double>::infinity();
        std::array<double, 3> ax{}, ay{};
        std::vector<double> x(dim), y(dim);
        for (std::uint64_t k = lo; k < hi; ++k) {
            double sx = rng.log_uniform(1e-3, 1e3);
            double sy = rng.log_uniform(1e-3, 1e3);
            // occasional structured cases: x = 0, y anti-parallel, y tiny
            int special = static_cast<int>(rng.uniform() * 16.0);
            for (int d = 0; d < dim; ++d) {
                x[d] = rng.normal();
                y[d] = rng.normal();
            }
            double nx = norm_of(x), ny = norm_of(y);
            for (int d = 0; d < dim; ++d) {
                x[d] *= sx / (nx > 0 ? nx : 1.0);
                y[d] *= sy / (ny > 0 ? ny : 1.0);
            }
            if (special == 0)
                for (int d = 0; d < dim; ++d) x[d] = 0.0;
            else if (special == 1)
                for (int d = 0; d < dim; ++d) y[d] = -x[d] * (1.0 + 1e-6 * (rng.uniform() - 0.5));
            else if (special == 2)
                for (int d = 0; d < dim; ++d) y[d] *= 1e-6;

            double m = gradient_ineq_margin(p, c, x, y);
            if (m < local_min) {
                local_min = m;
                for (int d = 0; d < std::min(dim, 3); ++d) { ax[d] = x[d]; ay[d] = y[d]; }
            }
            double axn = norm_of(x), ayn = norm_of(y);
            double minterm = (p < 2.0)
                ? std::min(std::pow(ayn, p), pow_pm2(axn, p) * ayn * ayn)
                : std::pow(ayn, p);
            if (minterm > 1e-12) local_ratio = std::min(local_ratio, m / minterm);
            if (p >= 2.0 && axn > 0.0) {
                std::vector<double> sxy(dim);
                for (int d = 0; d < dim; ++d) sxy[d] = x[d] + y[d];
                double w3 = omega_scalar(3, p, axn, norm_of(sxy), c.c3);
                double ref = c.c3 * pow_pm2(axn, p);
                double denom = std::max(pow_pm2(axn, p), 1e-300);
                local_om3 = std::min(local_om3, (w3 - ref) / denom);
            }
        }
        std::lock_guard<std::mutex> lk(merge_mtx);
        if (local_min < res.min_margin) {
            res.min_margin = local_min;
            res.argmin_x = ax;
            res.argmin_y = ay;
        }
        res.min_margin_over_minterm = std::min(res.min_margin_over_minterm, local_ratio);
        res.omega3_min_rel = std::min(res.omega3_min_rel, local_om3);
    });
    if (p < 2.0) res.omega3_min_rel = 0.0;
    return res;
}

ScalarFuzzResult fuzz_scalar_ineq(double pstar, const ScalarIneqConstants& c,
                                  std::uint64_t samples, std::uint64_t seed) {
    ScalarFuzzResult res;
    res.constants = c;
    res.samples = samples;
    res.min_margin = std::numeric_limits<double>::infinity();
    std::mutex merge_mtx;
    run_fuzz_chunks(samples, [&](int chunk, std::uint64_t lo, std::uint64_t hi) {
        Rng rng(Rng::mix(seed ^ 0x5CA1AB1EULL, chunk));
        double local_min = std::numeric_limits<double>::infinity();
        double la = 0.0, lb = 0.0;
        for (std::uint64_t k = lo; k < hi; ++k) {
            double a = rng.log_uniform(1e-3, 1e3) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            double b = rng.log_uniform(1e-3, 1e3) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
            int special = static_cast<int>(rng.uniform() * 16.0);
            if (special == 0) a = 0.0;
            else if (special == 1) b = -a * (1.0 + 1e-6 * (rng.uniform() - 0.5));
            else if (special == 2) b *= 1e-6;
            double m = scalar_ineq_margin(pstar, c, a, b);
            if (m < local_min) { local_min = m; la = a; lb = b; }
        }
        std::lock_guard<std::mutex> lk(merge_mtx);
        if (local_min < res.min_margin) {
            res.min_margin = local_min;
            res.argmin_a = la;
            res.argmin_b = lb;
        }
    });
    return res;
}

} // namespace soblab
