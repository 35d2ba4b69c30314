#pragma once

#include <functional>

#include "taildep/matrix.hpp"

namespace taildep {

// ln P[X_1 <= z_1, ..., X_n <= z_n] for standard Gaussian X with correlation
// R, with certified relative accuracy on the probability (absolute accuracy
// on the log). Deterministic tail-adapted quadrature: the orthant is reduced
// by conditioning one coordinate at a time, each level integrated in log
// space around the peak of the (log-concave) integrand, so probabilities far
// below 1e-300 are representable through their logarithm.
double gaussian_tail_log_cdf(const CorrelationMatrix& R, const Vector& z,
                             double rel_accuracy = 1e-10);

// Convenience wrapper; underflows to 0 when the log is below ~-708.
double gaussian_tail_cdf(const CorrelationMatrix& R, const Vector& z,
                         double rel_accuracy = 1e-10);

namespace detail {

// ln of integral over [lo, hi] of exp(g(x)) dx for a unimodal g.
// Peak located by coarse scan + golden section, integration window clipped
// where g drops `drop` below the peak, composite Gauss-Legendre with panel
// doubling until the log changes by less than rel_tol. Throws
// AccuracyUnreachable if the doubling cap is hit.
double log_integrate(const std::function<double(double)>& g, double lo, double hi,
                     double rel_tol, double drop = 80.0);

} // namespace detail

} // namespace taildep
