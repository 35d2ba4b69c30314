#include "taildep/normal.hpp"

#include <cmath>
#include <limits>

#include "taildep/errors.hpp"

namespace taildep {

namespace {
constexpr double kLn2Pi = 1.8378770664093454836;
constexpr double kInvSqrt2 = 0.70710678118654752440;
} // namespace

double norm_pdf(double x) { return std::exp(-0.5 * x * x - 0.5 * kLn2Pi); }

double norm_log_pdf(double x) { return -0.5 * x * x - 0.5 * kLn2Pi; }

double norm_cdf(double x) { return 0.5 * std::erfc(-x * kInvSqrt2); }

double norm_log_cdf(double x) {
    if (x > -20.0) {
        // erfc carries full relative accuracy here
        return std::log(0.5 * std::erfc(-x * kInvSqrt2));
    }
    // Abramowitz-Stegun 26.2.12: Phi(x) = phi(x)/|x| * [1 - 1/x^2 + 3/x^4 - ...]
    const double inv2 = 1.0 / (x * x);
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k <= 12; ++k) {
        term *= -(2.0 * k - 1.0) * inv2;
        sum += term;
        if (std::abs(term) < 1e-17 * sum) break;
    }
    return norm_log_pdf(x) - std::log(-x) + std::log(sum);
}

double norm_log_sf(double x) { return norm_log_cdf(-x); }

double norm_quantile(double p) {
    // Wichura, Algorithm AS241 (PPND16)
    if (!(p > 0.0 && p < 1.0)) {
        if (p == 0.0) return -std::numeric_limits<double>::infinity();
        if (p == 1.0) return std::numeric_limits<double>::infinity();
        throw DomainError("norm_quantile: p must lie in [0,1]");
    }
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) *
                        r +
                    4.5921953931549871457e4) *
                       r +
                   1.3731693765509461125e4) *
                      r +
                  1.9715909503065514427e3) *
                     r +
                 1.3314166789178437745e2) *
                    r +
                3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) *
                        r +
                    2.1213794301586595867e4) *
                       r +
                   5.3941960214247511077e3) *
                      r +
                  6.8718700749205790830e2) *
                     r +
                 4.2313330701600911252e1) *
                    r +
                1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) *
                       r +
                   1.27045825245236838258e0) *
                      r +
                  3.64784832476320460504e0) *
                     r +
                 5.76949722146069140550e0) *
                    r +
                4.63033784615654529590e0) *
                   r +
               1.42343711074968357734e0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) *
                       r +
                   1.48103976427480074590e-1) *
                      r +
                  6.89767334985100004550e-1) *
                     r +
                 1.67638483018380384940e0) *
                    r +
                2.05319162663775882187e0) *
                   r +
               1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) *
                       r +
                   2.65321895265761230930e-2) *
                      r +
                  2.96560571828504891230e-1) *
                     r +
                 1.78482653991729133580e0) *
                    r +
                5.46378491116411436990e0) *
                   r +
               6.65790464350110377720e0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) *
                       r +
                   7.86869131145613259100e-4) *
                      r +
                  1.48753612908506148525e-2) *
                     r +
                 1.36929880922735805310e-1) *
                    r +
                5.99832206555887937690e-1) *
                   r +
               1.0);
    }
    return (q < 0.0) ? -val : val;
}

double norm_quantile_from_log(double lnp) {
    if (!(lnp <= 0.0)) throw DomainError("norm_quantile_from_log: lnp must be <= 0");
    if (lnp == 0.0) return std::numeric_limits<double>::infinity();
    if (lnp > std::log(1e-300)) {
        double z = norm_quantile(std::exp(lnp));
        // one Newton polish in log space
        const double f = norm_log_cdf(z) - lnp;
        const double hazard = std::exp(norm_log_pdf(z) - norm_log_cdf(z));
        return z - f / hazard;
    }
    // seed from -ln Phi(z) ~ z^2/2 + ln(-z sqrt(2 pi))
    double z = -std::sqrt(-2.0 * lnp);
    for (int it = 0; it < 60; ++it) {
        const double f = norm_log_cdf(z) - lnp;
        const double hazard = std::exp(norm_log_pdf(z) - norm_log_cdf(z)); // phi/Phi
        const double step = f / hazard;
        z -= step;
        if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) break;
    }
    return z;
}

} // namespace taildep
