#pragma once

#include <cstdint>

#include "taildep/matrix.hpp"

namespace taildep {

struct SolveOptions {
    int max_iters = 100000;
    double kkt_tol = 1e-10;
};

// Nonnegative weights summing to one.
struct SimplexWeights {
    Vector w;
    void validate(double tol = 1e-12) const;
};

struct QpResult {
    double value = 0.0;
    SimplexWeights argmin;
    double kkt_residual = 0.0;
    int iterations = 0;
};

// Euclidean projection onto the probability simplex (sort-based, exact).
Vector project_to_simplex(const Vector& v);

// min_{w in simplex} w' Sigma w for positive definite Sigma. Projected
// gradient with exact line search; stops when the Frank-Wolfe duality gap
// (a certified suboptimality bound for convex problems) drops below
// min(tol, kkt_tol * scale). Throws NonPositiveDefinite / NoConvergence.
QpResult min_quadratic_on_simplex(const SymMatrix& sigma, double tol,
                                  const SolveOptions& opts = {});

// Exhaustive lattice minimum of w' Sigma w over simplex points with
// coordinates k/resolution. Test oracle; n <= 5 only.
double brute_force_simplex_min(const SymMatrix& sigma, int grid_resolution);

// max_{w in simplex} 2 theta / (sqrt(2 theta w'Bw + (mu'w)^2) - mu'w).
// Equivalently 2 theta / min of the denominator, which is convex.
double c_star_theta(const SymMatrix& B, const Vector& mu, double theta, double tol,
                    const SolveOptions& opts = {});

struct MixtureParams {
    SymMatrix R;       // correlation, nondegenerate
    Vector mu_tilde;   // normalized means mu_i / sigma_i
    double theta;      // mixing decay rate, > 0
    Vector lambda;     // exponents, all > 0
    void validate() const;
};

// min over {v >= 0, sum_i v_i lambda_i (sqrt(2 theta + mu_i^2) - mu_i) = 1}
// of sqrt(2 theta v'Rv + (mu'v)^2) - mu'v. The objective is positively
// homogeneous of degree one and vanishes only at v = 0, so the minimum of
// interest sits on the active budget face; substituting the budget turns the
// problem into a convex minimization over the simplex.
double mixture_polytope_min(const MixtureParams& params, double tol,
                            const SolveOptions& opts = {});

} // namespace taildep
