#include "taildep/simplex_opt.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

namespace taildep {

void SimplexWeights::validate(double tol) const {
    if (w.size() < 1) throw DomainError("SimplexWeights: empty vector");
    if (w.minCoeff() < -tol) throw DomainError("SimplexWeights: negative entry");
    if (std::abs(w.sum() - 1.0) > tol) throw DomainError("SimplexWeights: does not sum to 1");
}

void MixtureParams::validate() const {
    if (!(theta > 0.0)) throw DomainError("MixtureParams: theta must be positive");
    const auto n = static_cast<Eigen::Index>(R.dim());
    if (mu_tilde.size() != n || lambda.size() != n) {
        throw DomainError("MixtureParams: dimension mismatch");
    }
    if (lambda.minCoeff() <= 0.0) throw DomainError("MixtureParams: lambda entries must be > 0");
    R.require_positive_definite();
}

Vector project_to_simplex(const Vector& v) {
    // Held-Wolfe-Crowder / Duchi: sort, find the pivot, clip.
    const Eigen::Index n = v.size();
    std::vector<double> u(v.data(), v.data() + n);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0;
    double tau = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        css += u[static_cast<std::size_t>(i)];
        const double t = (css - 1.0) / static_cast<double>(i + 1);
        if (u[static_cast<std::size_t>(i)] > t) tau = t;
    }
    return (v.array() - tau).max(0.0).matrix();
}

namespace {

struct InnerResult {
    double value = 0.0;
    Vector w;
    double gap = 0.0;
    int iterations = 0;
};

// Exact minimizer of w'Sw + b'w on the face {w_i = 0 off support, sum = 1}:
// stationarity 2 S_SS x + b_S = nu 1 plus the budget row. Accepted only when
// primal and dual feasibility check out, making the Frank-Wolfe gap of the
// full problem machine zero.
bool try_face_polish(const Matrix& S, const Vector& b, Vector& w) {
    const Eigen::Index n = S.rows();
    std::vector<Eigen::Index> supp;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) > 1e-10) supp.push_back(i);
    }
    if (supp.empty()) return false;
    const auto m = static_cast<Eigen::Index>(supp.size());
    Matrix Sub(m, m);
    Vector bs(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        bs(a) = b(supp[static_cast<std::size_t>(a)]);
        for (Eigen::Index c = 0; c < m; ++c) {
            Sub(a, c) = S(supp[static_cast<std::size_t>(a)], supp[static_cast<std::size_t>(c)]);
        }
    }
    Eigen::LLT<Matrix> llt(Sub);
    if (llt.info() != Eigen::Success) return false;
    const Vector u = llt.solve(Vector::Ones(m));
    const Vector v = llt.solve(bs);
    const double usum = u.sum();
    if (!(usum > 0.0)) return false;
    const double nu = (2.0 + v.sum()) / usum;
    Vector x = 0.5 * (nu * u - v);
    if (x.minCoeff() < -1e-12) return false;
    Vector cand = Vector::Zero(n);
    for (Eigen::Index a = 0; a < m; ++a) {
        cand(supp[static_cast<std::size_t>(a)]) = std::max(x(a), 0.0);
    }
    cand /= cand.sum();
    // dual feasibility off the support
    const Vector g = 2.0 * (S * cand) + b;
    double mu = std::numeric_limits<double>::infinity();
    for (Eigen::Index a = 0; a < m; ++a) {
        mu = std::min(mu, g(supp[static_cast<std::size_t>(a)]));
    }
    const double slack = 1e-11 * std::max(1.0, g.cwiseAbs().maxCoeff());
    if (g.minCoeff() < mu - slack) return false;
    w = cand;
    return true;
}

// min over the simplex of w'Sw + b'w (S positive definite): projected
// gradient with analytic exact line search, Frank-Wolfe vertex fallback,
// and active-set polish once the face settles.
InnerResult minimize_quadratic_simplex(const Matrix& S, const Vector& b, double stop_gap,
                                       int max_iters, const Vector* warm = nullptr) {
    const Eigen::Index n = S.rows();
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    const double step = 1.0 / (2.0 * es.eigenvalues().maxCoeff());

    Vector w = warm ? *warm : Vector::Constant(n, 1.0 / static_cast<double>(n));
    auto fval = [&](const Vector& x) { return x.dot(S * x) + b.dot(x); };
    double fw = fval(w);
    double gap = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iters; ++it) {
        const Vector g = 2.0 * (S * w) + b;
        gap = g.dot(w) - g.minCoeff();
        if (gap <= stop_gap) break;
        if (gap < 1e-4 * std::max(1.0, std::abs(fw)) || (it & 63) == 63) {
            if (try_face_polish(S, b, w)) {
                const Vector gp = 2.0 * (S * w) + b;
                gap = std::max(gp.dot(w) - gp.minCoeff(), 0.0);
                fw = fval(w);
                break;
            }
        }
        Vector d = project_to_simplex(w - step * g) - w;
        double slope = g.dot(d);
        if (slope >= 0.0) {
            Eigen::Index best = 0;
            g.minCoeff(&best);
            d = -w;
            d(best) += 1.0;
            slope = g.dot(d); // equals -gap < 0
        }
        const double curv = d.dot(S * d);
        const double t = curv > 0.0 ? std::clamp(-slope / (2.0 * curv), 0.0, 1.0) : 1.0;
        if (!(t > 0.0)) break;
        w += t * d;
        w = w.cwiseMax(0.0);
        w /= w.sum();
        fw = fval(w);
    }
    return {fw, w, gap, it};
}

// Exact minimizer of h(w) = sqrt(w'Qw) - mu'w on the face spanned by the
// support of w: the stationarity system Q_SS x = beta (mu_S + nu 1) with
// beta = sqrt(x'Q x) collapses to one scalar quadratic in the multiplier,
//   nu^2 (1'Q^{-1}1) + 2 nu (1'Q^{-1}mu) + mu'Q^{-1}mu - 1 = 0,
// after which x = beta Q_SS^{-1}(mu_S + nu 1) and beta normalizes the sum.
// Accepted only when primal and dual feasibility hold.
bool norm_face_polish(const Matrix& Q, const Vector& mu, Vector& w) {
    const Eigen::Index n = Q.rows();
    std::vector<Eigen::Index> supp;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (w(i) > 1e-10) supp.push_back(i);
    }
    if (supp.empty()) return false;
    const auto m = static_cast<Eigen::Index>(supp.size());
    Matrix Sub(m, m);
    Vector mus(m);
    for (Eigen::Index a = 0; a < m; ++a) {
        mus(a) = mu(supp[static_cast<std::size_t>(a)]);
        for (Eigen::Index c = 0; c < m; ++c) {
            Sub(a, c) = Q(supp[static_cast<std::size_t>(a)], supp[static_cast<std::size_t>(c)]);
        }
    }
    Eigen::LLT<Matrix> llt(Sub);
    if (llt.info() != Eigen::Success) return false;
    const Vector qi1 = llt.solve(Vector::Ones(m));
    const Vector qim = llt.solve(mus);
    const double b = qi1.sum();
    const double a = qim.sum();
    const double c = mus.dot(qim);
    const double disc = a * a - b * (c - 1.0);
    if (!(b > 0.0) || disc < 0.0) return false;
    const double nu = (-a + std::sqrt(disc)) / b; // root with a + nu b = sqrt(disc) > 0
    const double beta = 1.0 / (a + nu * b);
    if (!(beta > 0.0)) return false;
    Vector x = beta * (qim + nu * qi1);
    if (x.minCoeff() < -1e-12) return false;
    Vector cand = Vector::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
        cand(supp[static_cast<std::size_t>(i)]) = std::max(x(i), 0.0);
    }
    cand /= cand.sum();
    // dual feasibility: gradient coordinates off the support must not drop
    // below the face multiplier
    const Vector qw = Q * cand;
    const Vector g = qw / std::sqrt(cand.dot(qw)) - mu;
    double mu_face = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
        mu_face = std::min(mu_face, g(supp[static_cast<std::size_t>(i)]));
    }
    const double slack = 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff());
    if (g.minCoeff() < mu_face - slack) return false;
    w = cand;
    return true;
}

// min over the simplex of h(w) = sqrt(w'Qw) - mu'w by majorize-minimize:
// sqrt(q) <= (q/q0 + q0)/2 at q0 = sqrt(w_k'Q w_k), so each step solves the
// simplex QP  min w'Qw - 2 q0 mu'w, which the quadratic solver finishes to
// machine precision. The MM fixed point identifies the active face; the
// closed-form face polish then lands on the exact KKT point.
InnerResult minimize_norm_simplex(const Matrix& Q, const Vector& mu, int max_iters) {
    const Eigen::Index n = Q.rows();
    auto h = [&](const Vector& w) { return std::sqrt(w.dot(Q * w)) - mu.dot(w); };
    auto fw_gap = [&](const Vector& w) {
        const Vector qw = Q * w;
        const Vector g = qw / std::sqrt(w.dot(qw)) - mu;
        return std::max(g.dot(w) - g.minCoeff(), 0.0);
    };
    Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
    double hw = h(w);
    int total_iters = 0;
    int stalled = 0;
    for (int mm = 0; mm < 300 && stalled < 3; ++mm) {
        const double q0 = std::sqrt(w.dot(Q * w));
        const Vector b = (-2.0 * q0) * mu;
        const auto sub = minimize_quadratic_simplex(Q, b, 1e-15 * std::max(1.0, q0 * q0),
                                                    max_iters, &w);
        total_iters += sub.iterations + 1;
        const double hn = h(sub.w);
        if (hn < hw - 1e-16 * std::max(1.0, std::abs(hw))) {
            stalled = 0;
        } else {
            ++stalled; // value converged; the face should be settled
        }
        if (hn < hw) {
            w = sub.w;
            hw = hn;
        }
        Vector polished = w;
        if (norm_face_polish(Q, mu, polished)) {
            const double hp = h(polished);
            if (hp <= hw + 1e-12 * std::max(1.0, std::abs(hw))) {
                w = polished;
                hw = hp;
                break;
            }
        }
        if (mu.cwiseAbs().maxCoeff() == 0.0) break; // single QP is already exact
    }
    return {hw, w, fw_gap(w), total_iters};
}

} // namespace

QpResult min_quadratic_on_simplex(const SymMatrix& sigma, double tol, const SolveOptions& opts) {
    if (!(tol > 0.0)) throw DomainError("min_quadratic_on_simplex: tol must be > 0");
    sigma.require_positive_definite();
    const Matrix& S = sigma.mat();
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    const double stop = std::max(std::min(tol, opts.kkt_tol * scale), 1e-15 * scale);
    const auto inner =
        minimize_quadratic_simplex(S, Vector::Zero(S.rows()), stop, opts.max_iters);
    if (inner.gap > std::max(stop, std::min(tol, 1e-8 * scale))) {
        throw NoConvergence("min_quadratic_on_simplex: residual gap " +
                            std::to_string(inner.gap));
    }
    QpResult res;
    res.value = inner.value;
    res.argmin.w = inner.w;
    res.kkt_residual = inner.gap;
    res.iterations = inner.iterations;
    res.argmin.validate(1e-9);
    return res;
}

double brute_force_simplex_min(const SymMatrix& sigma, int grid_resolution) {
    const std::size_t n = sigma.dim();
    if (n > 5) throw DimensionTooLarge("brute_force_simplex_min: n > 5");
    if (grid_resolution < 2) throw DomainError("brute_force_simplex_min: resolution must be >= 2");
    const Matrix& S = sigma.mat();
    const double inv = 1.0 / static_cast<double>(grid_resolution);

    double best = std::numeric_limits<double>::infinity();
    std::vector<double> w(n, 0.0);
    // enumerate compositions of grid_resolution into n parts
    std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int remaining) {
        if (idx == n - 1) {
            w[idx] = remaining * inv;
            double q = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                double row = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    row += S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * w[j];
                }
                q += w[i] * row;
            }
            best = std::min(best, q);
            return;
        }
        for (int c = 0; c <= remaining; ++c) {
            w[idx] = c * inv;
            rec(idx + 1, remaining - c);
        }
    };
    rec(0, grid_resolution);
    return best;
}

double c_star_theta(const SymMatrix& B, const Vector& mu, double theta, double tol,
                    const SolveOptions& opts) {
    if (!(theta > 0.0)) throw DomainError("c_star_theta: theta must be > 0");
    if (!(tol > 0.0)) throw DomainError("c_star_theta: tol must be > 0");
    if (mu.size() != static_cast<Eigen::Index>(B.dim())) {
        throw DomainError("c_star_theta: dimension mismatch");
    }
    B.require_positive_definite();
    // denominator h(w) = sqrt(w'Qw) - mu'w with Q = 2 theta B + mu mu' is a
    // norm minus a linear term, hence convex; c* = 2 theta / min h.
    const Matrix Q = 2.0 * theta * B.mat() + mu * mu.transpose();
    const auto inner = minimize_norm_simplex(Q, mu, opts.max_iters);
    // FW gap bounds the suboptimality of h; translate to the c* scale
    const double cstar = 2.0 * theta / inner.value;
    if (inner.gap * cstar / inner.value > std::max(tol, 1e-9 * cstar)) {
        throw NoConvergence("c_star_theta: residual gap " + std::to_string(inner.gap));
    }
    return cstar;
}

double mixture_polytope_min(const MixtureParams& params, double tol, const SolveOptions& opts) {
    params.validate();
    if (!(tol > 0.0)) throw DomainError("mixture_polytope_min: tol must be > 0");
    const auto n = static_cast<Eigen::Index>(params.R.dim());
    const double theta = params.theta;
    const Vector& mu = params.mu_tilde;

    // budget coefficients a_i = lambda_i (sqrt(2 theta + mu_i^2) - mu_i) > 0
    Vector a(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i) = params.lambda(i) * (std::sqrt(2.0 * theta + mu(i) * mu(i)) - mu(i));
    }
    // substitute z_i = a_i v_i: the budget face becomes the simplex
    const Matrix Q = 2.0 * theta * params.R.mat() + mu * mu.transpose();
    const Vector ainv = a.cwiseInverse();
    const Matrix Qs = ainv.asDiagonal() * Q * ainv.asDiagonal();
    const Vector mus = mu.cwiseProduct(ainv);

    const auto inner = minimize_norm_simplex(Qs, mus, opts.max_iters);
    if (inner.gap > std::max(tol, 1e-10 * std::max(1.0, std::abs(inner.value)))) {
        throw NoConvergence("mixture_polytope_min: residual gap " + std::to_string(inner.gap));
    }
    return inner.value;
}

} // namespace taildep
