#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "taildep/gaussian_tail.hpp"
#include "taildep/normal.hpp"
#include "taildep/simplex_opt.hpp"

using namespace taildep;

TEST_CASE("normal cdf and quantile") {
    CHECK(norm_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(norm_cdf(-1.959964) == doctest::Approx(0.025).epsilon(1e-6));
    CHECK(norm_quantile(0.975) == doctest::Approx(1.959964).epsilon(1e-6));

    // quantile/cdf round trip across the body and the tails
    for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-10}) {
        CHECK(norm_cdf(norm_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("log cdf deep tail") {
    // erfc region against the direct formula
    for (double x : {-1.0, -5.0, -10.0, -19.9}) {
        CHECK(norm_log_cdf(x) == doctest::Approx(std::log(norm_cdf(x))).epsilon(1e-12));
    }
    // both sides of the series switch at x = -20 against 40-digit references
    CHECK(norm_log_cdf(-19.9999999) == doctest::Approx(-203.91715336612196).epsilon(1e-13));
    CHECK(norm_log_cdf(-20.0000001) == doctest::Approx(-203.91715737607258).epsilon(1e-13));
    // asymptotic region sanity: ln Phi(-40) ~ -40^2/2 - ln(40 sqrt(2 pi))
    const double approx40 = -800.0 - std::log(40.0 * std::sqrt(2.0 * M_PI));
    CHECK(norm_log_cdf(-40.0) == doctest::Approx(approx40).epsilon(1e-3));

    // log-quantile inverts the log-cdf far below double underflow of p
    for (double lnp : {-3.0, -40.0, -150.0, -800.0, -5000.0}) {
        const double z = norm_quantile_from_log(lnp);
        CHECK(norm_log_cdf(z) == doctest::Approx(lnp).epsilon(1e-11));
    }
}

TEST_CASE("bivariate tail against high-precision references") {
    // reference logs computed with 40-digit quadrature
    struct Case {
        double z1, z2, rho, ln;
    };
    const Case cases[] = {
        {-1.0, -1.0, 0.5, -2.7723632323099251},
        {-2.5, -1.3, -0.3, -9.4638721770549877},
        {-10.0, -10.0, 0.5, -72.197267171540266},
        {-15.0, -12.0, -0.3, -269.80058342161679},
        {-20.0, -20.0, 0.7, -241.74339491053932},
        {-18.8, -18.8, 0.5, -242.38998437851180},
    };
    for (const auto& c : cases) {
        Vector z(2);
        z << c.z1, c.z2;
        CHECK(gaussian_tail_log_cdf(correlation2(c.rho), z, 1e-10) ==
              doctest::Approx(c.ln).epsilon(1e-9));
    }
}

TEST_CASE("trivariate tail against high-precision references") {
    Matrix R(3, 3);
    R << 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0;
    const auto C = make_correlation(R);
    struct Case {
        double z1, z2, z3, ln;
    };
    const Case cases[] = {
        {-1.0, -1.0, -1.0, -3.3873835525250619},
        {-5.0, -5.0, -5.0, -24.256740140059020},
        {-8.0, -6.0, -7.0, -44.889926383243185},
    };
    for (const auto& c : cases) {
        Vector z(3);
        z << c.z1, c.z2, c.z3;
        CHECK(gaussian_tail_log_cdf(C, z, 1e-9) == doctest::Approx(c.ln).epsilon(1e-8));
    }

    Matrix R2(3, 3);
    R2 << 1.0, 0.3, -0.2, 0.3, 1.0, 0.4, -0.2, 0.4, 1.0;
    const auto C2 = make_correlation(R2);
    Vector za(3);
    za << -2.0, -3.0, -1.5;
    CHECK(gaussian_tail_log_cdf(C2, za, 1e-9) == doctest::Approx(-10.088279420775674).epsilon(1e-8));
    Vector zb(3);
    zb << -9.0, -9.0, -9.0;
    CHECK(gaussian_tail_log_cdf(C2, zb, 1e-9) == doctest::Approx(-110.19094708877867).epsilon(1e-8));
}

TEST_CASE("independence and comonotone-limit structure") {
    // rho = 0 factorizes
    Vector z(2);
    z << -3.0, -1.2;
    CHECK(gaussian_tail_log_cdf(correlation2(0.0), z, 1e-11) ==
          doctest::Approx(norm_log_cdf(-3.0) + norm_log_cdf(-1.2)).epsilon(1e-10));

    // rho -> 1: joint probability approaches Phi(min z)
    Vector ze = Vector::Constant(2, -4.0);
    const double near = gaussian_tail_log_cdf(correlation2(1.0 - 1e-7), ze, 1e-8);
    CHECK(near == doctest::Approx(norm_log_cdf(-4.0)).epsilon(1e-3));

    // n = 1 falls back to the marginal
    Vector z1(1);
    z1 << -1.959964;
    Matrix one(1, 1);
    one << 1.0;
    CHECK(gaussian_tail_cdf(SymMatrix(one), z1) == doctest::Approx(0.025).epsilon(1e-6));
}

TEST_CASE("log-scale tail matches the simplex quadratic form") {
    // ln P[X <= z 1] / (-z^2/2) -> 1 / min w'Rw, with the deviation of the
    // ratio shrinking as z goes deeper
    for (double rho : {0.5, -0.3}) {
        const auto R = correlation2(rho);
        const double m = min_quadratic_on_simplex(R, 1e-12).value;
        double prev_dev = 1e9;
        for (double zv : {-10.0, -15.0, -20.0}) {
            Vector z = Vector::Constant(2, zv);
            const double ratio = gaussian_tail_log_cdf(R, z, 1e-10) / (-zv * zv / 2.0);
            const double dev = std::abs(ratio - 1.0 / m);
            CHECK(dev < prev_dev);
            prev_dev = dev;
        }
        CHECK(prev_dev < 0.05 / m);
    }
    // trivariate spot check
    Matrix R3(3, 3);
    R3 << 1.0, 0.5, 0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 1.0;
    const auto C3 = make_correlation(R3);
    const double m3 = min_quadratic_on_simplex(C3, 1e-12).value; // (1+2*0.5)/3 = 2/3
    CHECK(m3 == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    Vector z15 = Vector::Constant(3, -15.0);
    const double ratio3 = gaussian_tail_log_cdf(C3, z15, 1e-8) / (-112.5);
    CHECK(ratio3 == doctest::Approx(1.0 / m3).epsilon(0.05));
}

TEST_CASE("gaussian tail input validation") {
    Vector z(2);
    z << -1.0, -1.0;
    Matrix bad(2, 2);
    bad << 1.0, 1.0, 1.0, 1.0;
    CHECK_THROWS_AS(gaussian_tail_log_cdf(SymMatrix(bad), z, 1e-8), NonPositiveDefinite);
    CHECK_THROWS_AS(gaussian_tail_log_cdf(correlation2(0.5), z, -1.0), DomainError);
    Vector z3(3);
    z3 << -1.0, -1.0, -1.0;
    CHECK_THROWS_AS(gaussian_tail_log_cdf(correlation2(0.5), z3, 1e-8), DomainError);
}
