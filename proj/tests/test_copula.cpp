#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "taildep/copula.hpp"
#include "taildep/normal.hpp"

using namespace taildep;

namespace {

Vector vec2(double a, double b) {
    Vector v(2);
    v << a, b;
    return v;
}

Vector vec3(double a, double b, double c) {
    Vector v(3);
    v << a, b, c;
    return v;
}

// closed-form oracle for the CustomSlow forward generator, solved by hand
// from exp(-(ln(1+s)+1/2)^2+1/4) = u
double custom_slow_phi_oracle(double u) {
    return std::exp(std::sqrt(0.25 - std::log(u)) - 0.5) - 1.0;
}

} // namespace

TEST_CASE("generator basics") {
    ArchimedeanGenerator g1{GeneratorFamily::Gumbel, 1.0};
    CHECK(generator_phi(g1, 0.25) == doctest::Approx(-std::log(0.25)).epsilon(1e-14));
    CHECK(generator_phi_inv(g1, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));

    ArchimedeanGenerator c1{GeneratorFamily::Clayton, 1.0};
    CHECK(generator_phi_inv(c1, 2.0 * generator_phi(c1, 0.5)) ==
          doctest::Approx(1.0 / 3.0).epsilon(1e-13));

    ArchimedeanGenerator cs{GeneratorFamily::CustomSlow, 0.0};
    CHECK(generator_phi_inv(cs, 0.0) == doctest::Approx(1.0).epsilon(1e-14));

    CHECK_THROWS_AS(generator_phi(g1, 0.0), DomainError);
    CHECK_THROWS_AS(generator_phi(g1, -0.2), DomainError);
    CHECK_THROWS_AS(generator_phi_inv(g1, -1.0), DomainError);
    CHECK_THROWS_AS(generator_phi(ArchimedeanGenerator{GeneratorFamily::Gumbel, 0.5}, 0.5),
                    DomainError);
    CHECK_THROWS_AS(generator_phi(ArchimedeanGenerator{GeneratorFamily::Clayton, -1.0}, 0.5),
                    DomainError);
}

TEST_CASE("generator round trips and the CustomSlow bisection") {
    for (auto gen : {ArchimedeanGenerator{GeneratorFamily::Gumbel, 2.0},
                     ArchimedeanGenerator{GeneratorFamily::Clayton, 0.7},
                     ArchimedeanGenerator{GeneratorFamily::CustomSlow, 0.0}}) {
        for (double u : {1e-12, 1e-8, 1e-3, 0.3, 0.9, 1.0}) {
            const double rt = generator_phi_inv(gen, generator_phi(gen, u));
            CHECK(rt == doctest::Approx(u).epsilon(1e-10));
        }
    }
    ArchimedeanGenerator cs{GeneratorFamily::CustomSlow, 0.0};
    for (double u : {1e-10, 1e-5, 0.2, 0.8}) {
        CHECK(generator_phi(cs, u) ==
              doctest::Approx(custom_slow_phi_oracle(u)).epsilon(1e-9));
    }
}

TEST_CASE("copula cdf closed forms") {
    CHECK(copula_cdf(IndependenceCopula{}, vec2(0.3, 0.5)) == doctest::Approx(0.15).epsilon(1e-14));
    CHECK(copula_cdf(ComonotoneCopula{}, vec2(0.3, 0.5)) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(copula_cdf(GaussianCopula{correlation2(0.0)}, vec2(0.2, 0.7), 1e-11) ==
          doctest::Approx(0.14).epsilon(1e-9));
    // Gumbel theta=2 at (1/2, 1/2): exp(-sqrt(2) ln 2), 40-digit value
    const CopulaSpec gum2 = ArchimedeanCopula{{GeneratorFamily::Gumbel, 2.0}};
    CHECK(copula_cdf(gum2, vec2(0.5, 0.5)) ==
          doctest::Approx(0.37521422724648177).epsilon(1e-13));

    // groundedness and uniform margins
    CHECK(copula_cdf(gum2, vec2(0.0, 0.5)) == 0.0);
    CHECK(copula_cdf(gum2, vec2(1.0, 0.37)) == doctest::Approx(0.37).epsilon(1e-13));
    CHECK(copula_cdf(GaussianCopula{correlation2(0.6)}, vec2(0.41, 1.0), 1e-10) ==
          doctest::Approx(0.41).epsilon(1e-9));

    CHECK_THROWS_AS(copula_cdf(gum2, vec2(0.5, 1.2)), DomainError);
    CHECK_THROWS_AS(copula_cdf(gum2, vec2(0.5, 0.5), -1.0), DomainError);
}

TEST_CASE("Frechet-Hoeffding bound and monotonicity on random points") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> ud(0.01, 0.99);
    const std::vector<CopulaSpec> specs = {
        IndependenceCopula{},
        ComonotoneCopula{},
        GaussianCopula{correlation2(0.5)},
        ArchimedeanCopula{{GeneratorFamily::Clayton, 1.5}},
        ArchimedeanCopula{{GeneratorFamily::Gumbel, 2.0}},
        GumbelEvCopula{1.7},
        GaussianMixtureCopula{correlation2(0.3), 1.0},
    };
    for (const auto& spec : specs) {
        for (int rep = 0; rep < 4; ++rep) {
            Vector u = vec2(ud(rng), ud(rng));
            const double c = copula_cdf(spec, u, 1e-8);
            CHECK(c <= std::min(u(0), u(1)) + 1e-8);
            CHECK(c >= 0.0);
            // nondecreasing in each coordinate
            Vector up = u;
            up(0) = std::min(1.0, u(0) + 0.13);
            CHECK(copula_cdf(spec, up, 1e-8) >= c - 1e-8);
            up = u;
            up(1) = std::min(1.0, u(1) + 0.21);
            CHECK(copula_cdf(spec, up, 1e-8) >= c - 1e-8);
        }
    }
}

TEST_CASE("extreme value max-stability") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> ud(0.05, 0.95);
    const CopulaSpec ev = GumbelEvCopula{2.5};
    for (int rep = 0; rep < 5; ++rep) {
        const Vector u = vec2(ud(rng), ud(rng));
        const double base = copula_cdf(ev, u);
        for (int m : {2, 3, 5}) {
            Vector um(2);
            um << std::pow(u(0), 1.0 / m), std::pow(u(1), 1.0 / m);
            CHECK(std::pow(copula_cdf(ev, um), m) == doctest::Approx(base).epsilon(1e-10));
        }
    }
}

TEST_CASE("archimedean associativity at n = 2, 3") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ud(0.05, 0.95);
    for (auto gen : {ArchimedeanGenerator{GeneratorFamily::Gumbel, 1.8},
                     ArchimedeanGenerator{GeneratorFamily::Clayton, 0.9}}) {
        const CopulaSpec spec = ArchimedeanCopula{gen};
        for (int rep = 0; rep < 5; ++rep) {
            const double u1 = ud(rng), u2 = ud(rng), u3 = ud(rng);
            const double inner = copula_cdf(spec, vec2(u2, u3));
            const double nested = copula_cdf(spec, vec2(u1, inner));
            const double direct = copula_cdf(spec, vec3(u1, u2, u3));
            CHECK(nested == doctest::Approx(direct).epsilon(1e-10));
        }
    }
}

TEST_CASE("CustomSlow is restricted to dimension 2") {
    const CopulaSpec cs = ArchimedeanCopula{{GeneratorFamily::CustomSlow, 0.0}};
    CHECK(copula_cdf(cs, vec2(0.4, 0.6)) > 0.0);
    CHECK_THROWS_AS(copula_cdf(cs, vec3(0.4, 0.6, 0.5)), DimensionTooLarge);
}

TEST_CASE("survival copula") {
    CHECK(survival_copula_cdf(IndependenceCopula{}, vec2(0.3, 0.5)) ==
          doctest::Approx(0.15).epsilon(1e-13));
    CHECK(survival_copula_cdf(ComonotoneCopula{}, vec2(0.3, 0.5)) ==
          doctest::Approx(0.3).epsilon(1e-13));
    // radial symmetry of the Gaussian: survival equals lower copula at (u0,u0)
    const CopulaSpec gz = GaussianCopula{correlation2(0.45)};
    for (double u0 : {0.1, 0.37}) {
        CHECK(survival_copula_cdf(gz, vec2(u0, u0), 1e-10) ==
              doctest::Approx(copula_cdf(gz, vec2(u0, u0), 1e-10)).epsilon(1e-9));
    }
    // the symmetry shortcut agrees with the raw inclusion-exclusion identity
    // at asymmetric arguments too
    for (auto [u1, u2] : {std::pair{0.3, 0.6}, std::pair{0.15, 0.85}}) {
        const double ie = u1 + u2 - 1.0 + copula_cdf(gz, vec2(1.0 - u1, 1.0 - u2), 1e-11);
        CHECK(survival_copula_cdf(gz, vec2(u1, u2), 1e-11) ==
              doctest::Approx(ie).epsilon(1e-8));
    }
    // inclusion-exclusion path against the bivariate identity
    // Cbar(u1,u2) = u1 + u2 - 1 + C(1-u1, 1-u2)
    const CopulaSpec cl = ArchimedeanCopula{{GeneratorFamily::Clayton, 2.0}};
    for (double u1 : {0.2, 0.6}) {
        for (double u2 : {0.3, 0.8}) {
            const double direct = u1 + u2 - 1.0 + copula_cdf(cl, vec2(1.0 - u1, 1.0 - u2));
            CHECK(survival_copula_cdf(cl, vec2(u1, u2)) ==
                  doctest::Approx(direct).epsilon(1e-11));
        }
    }
    // dimension cap for the inclusion-exclusion route
    Vector big = Vector::Constant(13, 0.5);
    CHECK_THROWS_AS(survival_copula_cdf(cl, big), DimensionTooLarge);

    // deep arguments cancel in the inclusion-exclusion sum; only radially
    // symmetric families support deep-tail survival evaluation
    CHECK_THROWS_AS(survival_copula_log_cdf(cl, vec2(-60.0, -60.0)), AccuracyUnreachable);
}

TEST_CASE("log-scale evaluation agrees with the linear scale") {
    const std::vector<CopulaSpec> specs = {
        IndependenceCopula{},
        GaussianCopula{correlation2(0.5)},
        ArchimedeanCopula{{GeneratorFamily::Gumbel, 2.0}},
        ArchimedeanCopula{{GeneratorFamily::Clayton, 1.0}},
        GumbelEvCopula{2.0},
        GaussianMixtureCopula{correlation2(0.5), 0.5},
    };
    for (const auto& spec : specs) {
        const Vector u = vec2(0.05, 0.2);
        const Vector lu = u.array().log().matrix();
        CHECK(copula_log_cdf(spec, lu, 1e-9) ==
              doctest::Approx(std::log(copula_cdf(spec, u, 1e-9))).epsilon(1e-8));
    }
    // far below linear-scale representability: Gumbel has the exact form
    // ln C(u^1, u^1) = -2^{1/theta} ln(1/u)
    const CopulaSpec gum = ArchimedeanCopula{{GeneratorFamily::Gumbel, 2.0}};
    Vector lu = vec2(-400.0, -400.0);
    CHECK(copula_log_cdf(gum, lu) == doctest::Approx(-std::sqrt(2.0) * 400.0).epsilon(1e-13));
}

TEST_CASE("gaussian mixture marginal") {
    const double theta = 0.5;
    // slope of ln H(x) approaches -sqrt(2 theta) x as x -> -infinity
    const double s1 = gaussian_mixture_marginal_log_cdf(theta, -30.0, 1e-10) / -30.0;
    const double s2 = gaussian_mixture_marginal_log_cdf(theta, -60.0, 1e-10) / -60.0;
    const double target = std::sqrt(2.0 * theta);
    CHECK(std::abs(s2 - target) < std::abs(s1 - target));
    CHECK(s2 == doctest::Approx(target).epsilon(0.06));

    // quantile inverts the marginal
    for (double lp : {-0.7, -5.0, -40.0}) {
        const double x = gaussian_mixture_marginal_quantile_log(theta, lp, 1e-10);
        CHECK(gaussian_mixture_marginal_log_cdf(theta, x, 1e-10) ==
              doctest::Approx(lp).epsilon(1e-8));
    }
}

TEST_CASE("copula JSON round trip") {
    const std::vector<CopulaSpec> specs = {
        IndependenceCopula{},
        ComonotoneCopula{},
        GaussianCopula{correlation2(-0.35)},
        ArchimedeanCopula{{GeneratorFamily::Gumbel, 3.5}},
        ArchimedeanCopula{{GeneratorFamily::Clayton, 0.4}},
        ArchimedeanCopula{{GeneratorFamily::CustomSlow, 0.0}},
        GumbelEvCopula{1.25},
        GaussianMixtureCopula{correlation2(0.8), 2.0},
    };
    for (const auto& spec : specs) {
        const auto j = copula_to_json(spec);
        const auto back = copula_from_json(j);
        CHECK(family_name(back) == family_name(spec));
        CHECK(copula_to_json(back) == j);
        const Vector u = vec2(0.21, 0.63);
        CHECK(copula_cdf(back, u, 1e-8) == doctest::Approx(copula_cdf(spec, u, 1e-8)));
    }
    CHECK_THROWS_AS(copula_from_json(nlohmann::json{{"family", "studentt"}}), DomainError);
}
