#pragma once

#include <vector>

#include "taildep/copula.hpp"
#include "taildep/matrix.hpp"
#include "taildep/simplex_opt.hpp"

namespace taildep {

// Exponent vector of the weak tail dependence function; nonnegative with at
// least one positive entry.
struct LambdaVector {
    Vector lambda;
    void validate() const;
    double max() const { return lambda.maxCoeff(); }
};

// Regular-variation index of ln phi^{-1} at +infinity; alpha = 0 encodes the
// slowly varying case.
struct RegVarIndex {
    double alpha = 0.0;
};

enum class ChiMethod { ClosedForm, Empirical };

struct ChiDiagnostics {
    std::vector<double> log_u;  // ln u_k along the sequence
    std::vector<double> ratios; // finite-u ratios r(u_k)
    double raw_last = 0.0;
    double extrapolated = 0.0;  // fit value before clamping to [0,1]
};

struct ChiResult {
    double value = 0.0;
    ChiMethod method = ChiMethod::ClosedForm;
    ChiDiagnostics diagnostics;
};

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

// independence: max lambda / sum lambda
ChiResult chi_independence(const LambdaVector& lambda);

// Gaussian: max lambda * min over the simplex of w' Sigma w with
// Sigma_ij = R_ij / sqrt(lambda_i lambda_j). All lambda_i must be positive
// (ZeroLambda otherwise); the dispatcher below applies the marginalization
// convention for zero entries.
ChiResult chi_gaussian(const CorrelationMatrix& R, const LambdaVector& lambda,
                       double tol = 1e-12);

// Gaussian mean-variance mixture: max lambda * polytope minimum. When
// mu_tilde = 0 the simplex form with Sigma_ij = R_ij/(lambda_i lambda_j) is
// computed as well and agreement to 1e-6 is enforced.
ChiResult chi_gaussian_mixture(const MixtureParams& params, double tol = 1e-9);

// Archimedean: alpha > 0 -> max lambda / (sum lambda^{1/alpha})^alpha;
// alpha = 0 (slowly varying) -> 1.
ChiResult chi_archimedean(const RegVarIndex& alpha, const LambdaVector& lambda);

// Extreme-value copulas: -max lambda / ln C(e^{-lambda_1},...,e^{-lambda_n}).
ChiResult chi_extreme_value(const CopulaSpec& spec, const LambdaVector& lambda,
                            double accuracy = 1e-10);

// Family dispatcher. Coordinates with lambda_i = 0 are marginalized out
// first (u^0 = 1 pins the argument; for the Gaussian and mixture families
// this deletes the matching rows/columns of R).
ChiResult chi_closed_form(const CopulaSpec& spec, const LambdaVector& lambda);

// ---------------------------------------------------------------------------
// empirical estimator
// ---------------------------------------------------------------------------

// Family-appropriate default u sequence: 10^{-k}, k = 2..10 for closed-form
// evaluable families; e^{-10k} for the deep-tail Gaussian/mixture evaluators.
std::vector<double> default_u_sequence(const CopulaSpec& spec);

// Finite-u ratios r(u) = max_i lambda_i ln u / ln C(u^{lambda}) evaluated on
// the log scale, extrapolated to u -> 0 by a least-squares fit of 1/r
// against {1, sqrt(h), h, h ln(1/h)} in h = 1/ln(1/u). The basis covers the
// correction shapes of every family here: ln-prefactor corrections
// (Gaussian, mixture) give h ln(1/h), generator constants give h, and slowly
// converging Archimedean generators give sqrt(h). Throws
// SequenceNotConverging when dropping the deepest point moves the
// extrapolant by more than 10x accuracy.
ChiResult chi_empirical(const CopulaSpec& spec, const LambdaVector& lambda,
                        const std::vector<double>& u_sequence, double accuracy);

// Upper-tail version (chi-bar) through the survival copula.
ChiResult chi_upper_empirical(const CopulaSpec& spec, const LambdaVector& lambda,
                              const std::vector<double>& u_sequence, double accuracy);

// Strong lower tail dependence coefficient lim C(u,...,u)/u along the
// sequence; for Archimedean specs the generator-ratio form
// lim phi^{-1}(n t)/phi^{-1}(t) is also computed and agreement within 1e-3
// enforced. `n` is the copula dimension (0 = infer, default 2 for
// dimension-agnostic families).
double lambda_L(const CopulaSpec& spec, const std::vector<double>& u_sequence,
                std::size_t n = 0);

} // namespace taildep
