#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "taildep/simplex_opt.hpp"

using namespace taildep;

namespace {

// random correlation matrix: normalize A A' + d I to unit diagonal
CorrelationMatrix random_correlation(std::mt19937_64& rng, int n, double ridge = 0.5) {
    std::normal_distribution<double> nd;
    Matrix A(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) A(i, j) = nd(rng);
    }
    Matrix S = A * A.transpose() + ridge * Matrix::Identity(n, n);
    const Vector d = S.diagonal().cwiseSqrt();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) S(i, j) /= d(i) * d(j);
    }
    return make_correlation(std::move(S));
}

// independent oracle for the dual side: min over x >= 1 of x' M x by
// clamp-projected gradient descent
double box_constrained_min(const Matrix& M, int iters = 400000) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    const double step = 1.0 / (2.0 * es.eigenvalues().maxCoeff());
    Vector x = Vector::Constant(M.rows(), 1.5);
    for (int it = 0; it < iters; ++it) {
        x = (x - step * 2.0 * (M * x)).cwiseMax(1.0);
    }
    return x.dot(M * x);
}

} // namespace

TEST_CASE("simplex projection") {
    Vector v(3);
    v << 0.3, 0.3, 0.3;
    const Vector p = project_to_simplex(v);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(p(0) == doctest::Approx(1.0 / 3.0));

    Vector w(2);
    w << 5.0, -1.0;
    const Vector q = project_to_simplex(w);
    CHECK(q(0) == doctest::Approx(1.0));
    CHECK(q(1) == doctest::Approx(0.0));
}

TEST_CASE("quadratic minimum on the simplex: closed-form cases") {
    auto id2 = sym_identity(2);
    auto r = min_quadratic_on_simplex(id2, 1e-12);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(r.argmin.w(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(r.argmin.w(1) == doctest::Approx(0.5).epsilon(1e-6));

    // 2x2 with correlation rho: minimum (1+rho)/2 at w = (1/2, 1/2)
    auto rp = min_quadratic_on_simplex(correlation2(0.5), 1e-12);
    CHECK(rp.value == doctest::Approx(0.75).epsilon(1e-10));
    CHECK(rp.argmin.w(0) == doctest::Approx(0.5).epsilon(1e-6));

    auto rn = min_quadratic_on_simplex(correlation2(-0.5), 1e-12);
    CHECK(rn.value == doctest::Approx(0.25).epsilon(1e-10));
}

TEST_CASE("quadratic minimum rejects bad inputs") {
    Matrix bad(2, 2);
    bad << 1.0, 1.2, 1.2, 1.0; // eigenvalue -0.2
    CHECK_THROWS_AS(min_quadratic_on_simplex(SymMatrix(bad), 1e-10), NonPositiveDefinite);

    CHECK_THROWS_AS(min_quadratic_on_simplex(sym_identity(2), -1.0), DomainError);

    SolveOptions tiny;
    tiny.max_iters = 0;
    CHECK_THROWS_AS(min_quadratic_on_simplex(correlation2(0.3), 1e-12, tiny), NoConvergence);
}

TEST_CASE("grid oracle") {
    CHECK(brute_force_simplex_min(sym_identity(2), 2) == doctest::Approx(0.5));
    CHECK(brute_force_simplex_min(sym_identity(3), 3) == doctest::Approx(1.0 / 3.0));
    CHECK(brute_force_simplex_min(correlation2(0.5), 200) == doctest::Approx(0.75).epsilon(2e-4));
    CHECK_THROWS_AS(brute_force_simplex_min(sym_identity(6), 10), DimensionTooLarge);
    CHECK_THROWS_AS(brute_force_simplex_min(sym_identity(2), 1), DomainError);
}

TEST_CASE("solver agrees with the grid oracle on random instances") {
    std::mt19937_64 rng(20240601);
    for (int n : {2, 3, 4}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto R = random_correlation(rng, n);
            const double solved = min_quadratic_on_simplex(R, 1e-10).value;
            const double grid = brute_force_simplex_min(R, 200);
            CHECK(std::abs(solved - grid) <= 1e-3);
            CHECK(solved <= grid + 1e-12); // lattice value can only overshoot
        }
    }
}

TEST_CASE("scale covariance and bounds") {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 5; ++rep) {
        const auto R = random_correlation(rng, 3);
        SolveOptions hard;
        hard.kkt_tol = 1e-14;
        const double base = min_quadratic_on_simplex(R, 1e-13, hard).value;
        for (double c : {0.25, 3.0, 40.0}) {
            const double scaled =
                min_quadratic_on_simplex(SymMatrix(Matrix(c * R.mat())), 1e-13, hard).value;
            CHECK(scaled == doctest::Approx(c * base).epsilon(1e-12));
        }
        // lambda_min / n <= value <= 1 for correlation matrices
        CHECK(base >= R.min_eigenvalue() / 3.0 - 1e-12);
        CHECK(base <= 1.0 + 1e-12);
    }
}

TEST_CASE("duality: min_{x>=1} x'S^{-1}x times min_simplex w'Sw equals 1") {
    std::mt19937_64 rng(99);
    for (int n : {2, 3}) {
        for (int rep = 0; rep < 3; ++rep) {
            const auto R = random_correlation(rng, n);
            const Matrix inv = R.mat().inverse();
            const double left = box_constrained_min(inv);
            const double right = min_quadratic_on_simplex(R, 1e-12).value;
            CHECK(left * right == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("c_star_theta") {
    // single variable, zero mean: 2 theta / sqrt(2 theta sigma^2)
    Matrix one(1, 1);
    one << 1.0;
    Vector mu0(1);
    mu0 << 0.0;
    CHECK(c_star_theta(SymMatrix(one), mu0, 0.5, 1e-10) == doctest::Approx(1.0).epsilon(1e-9));

    // two iid components halve the variance at the symmetric point
    Vector mu2 = Vector::Zero(2);
    CHECK(c_star_theta(sym_identity(2), mu2, 0.5, 1e-10) ==
          doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));

    // general univariate slope formula 2 theta/(sqrt(2 theta s^2 + m^2) - m)
    for (double s : {0.5, 1.0, 2.0}) {
        for (double m : {-1.0, 0.3, 2.0}) {
            for (double theta : {0.25, 1.0, 3.0}) {
                Matrix b(1, 1);
                b << s * s;
                Vector mv(1);
                mv << m;
                const double expect =
                    2.0 * theta / (std::sqrt(2.0 * theta * s * s + m * m) - m);
                CHECK(c_star_theta(SymMatrix(b), mv, theta, 1e-10) ==
                      doctest::Approx(expect).epsilon(1e-8));
            }
        }
    }
}

TEST_CASE("c_star_theta equals its min-max form") {
    // the same constant written as min over t >= 0 of max over the simplex of
    // theta t + (1 + t mu'w)^2 / (2 w'Bw t); checked by direct 2-D search
    Matrix B(2, 2);
    B << 1.0, 0.3, 0.3, 2.0;
    Vector mu(2);
    mu << -0.4, 0.6;
    const double theta = 0.8;
    const double direct = c_star_theta(SymMatrix(B), mu, theta, 1e-10);

    auto inner_max = [&](double t) {
        double best = -1e300;
        for (int i = 0; i <= 4000; ++i) {
            const double s = i / 4000.0;
            Vector w(2);
            w << s, 1.0 - s;
            const double q = w.dot(B * w);
            const double m = mu.dot(w);
            best = std::max(best, theta * t + (1.0 + t * m) * (1.0 + t * m) / (2.0 * q * t));
        }
        return best;
    };
    double minmax = 1e300;
    for (int j = 1; j <= 6000; ++j) {
        minmax = std::min(minmax, inner_max(6.0 * j / 6000.0));
    }
    CHECK(direct == doctest::Approx(minmax).epsilon(2e-4));
}

TEST_CASE("mixture polytope minimum") {
    // mu = 0, lambda = (1,1), R = I, theta = 1/2: budget face is the simplex
    // and the minimum is sqrt(1/2)
    MixtureParams p{sym_identity(2), Vector::Zero(2), 0.5, Vector::Constant(2, 1.0)};
    CHECK(mixture_polytope_min(p, 1e-9) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));

    // mu = 0, lambda = (1,1): chi = sqrt((1+rho)/2) for any theta
    for (double rho : {-0.6, 0.0, 0.4, 0.8}) {
        for (double theta : {0.3, 1.0, 2.5}) {
            MixtureParams q{correlation2(rho), Vector::Zero(2), theta, Vector::Constant(2, 1.0)};
            CHECK(mixture_polytope_min(q, 1e-9) ==
                  doctest::Approx(std::sqrt((1.0 + rho) / 2.0)).epsilon(1e-7));
        }
    }

    // univariate: budget saturation makes max lambda * minimum equal 1
    Matrix one(1, 1);
    one << 1.0;
    Vector lam1(1);
    lam1 << 2.5;
    Vector mu1(1);
    mu1 << -0.7;
    MixtureParams u{SymMatrix(one), mu1, 1.3, lam1};
    CHECK(lam1(0) * mixture_polytope_min(u, 1e-10) == doctest::Approx(1.0).epsilon(1e-8));

    MixtureParams bad{sym_identity(2), Vector::Zero(2), -1.0, Vector::Constant(2, 1.0)};
    CHECK_THROWS_AS(mixture_polytope_min(bad, 1e-9), DomainError);
}
