#include "taildep/bs_portfolio.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>

#include "taildep/errors.hpp"
#include "taildep/normal.hpp"
#include "taildep/simplex_opt.hpp"

namespace taildep {

void PortfolioSpec::validate() const {
    if (legs.empty()) throw DomainError("PortfolioSpec: at least one leg required");
    if (!(T > 0.0)) throw DomainError("PortfolioSpec: horizon T must be > 0");
    if (B.dim() != legs.size() || mu.size() != static_cast<Eigen::Index>(legs.size())) {
        throw DomainError("PortfolioSpec: B, mu and legs must have matching dimension");
    }
    B.require_positive_definite();
    for (std::size_t i = 0; i < legs.size(); ++i) {
        if (!(legs[i].maturity > T)) {
            throw DomainError("PortfolioSpec: every maturity must exceed the horizon T");
        }
    }
}

nlohmann::json portfolio_to_json(const PortfolioSpec& spec) {
    nlohmann::json j;
    nlohmann::json B = nlohmann::json::array();
    for (Eigen::Index i = 0; i < spec.B.mat().rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < spec.B.mat().cols(); ++k) row.push_back(spec.B.mat()(i, k));
        B.push_back(std::move(row));
    }
    j["B"] = std::move(B);
    j["mu"] = std::vector<double>(spec.mu.data(), spec.mu.data() + spec.mu.size());
    j["T"] = spec.T;
    nlohmann::json legs = nlohmann::json::array();
    for (const auto& l : spec.legs) legs.push_back({{"k", l.log_strike}, {"maturity", l.maturity}});
    j["legs"] = std::move(legs);
    return j;
}

PortfolioSpec portfolio_from_json(const nlohmann::json& j) {
    PortfolioSpec spec;
    const auto& B = j.at("B");
    const auto n = B.size();
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = B[i][k].get<double>();
        }
    }
    spec.B = SymMatrix(std::move(m));
    const auto mu = j.at("mu").get<std::vector<double>>();
    spec.mu = Eigen::Map<const Vector>(mu.data(), static_cast<Eigen::Index>(mu.size()));
    spec.T = j.at("T").get<double>();
    for (const auto& l : j.at("legs")) {
        spec.legs.push_back({l.at("k").get<double>(), l.at("maturity").get<double>()});
    }
    spec.validate();
    return spec;
}

double bs_call_price(double x, double k, double sigma, double tau) {
    if (!(sigma > 0.0)) throw DomainError("bs_call_price: sigma must be > 0");
    if (!(tau > 0.0)) throw DomainError("bs_call_price: tau must be > 0");
    const double sq = sigma * std::sqrt(tau);
    const double dm = (x - k) / sq - sq / 2.0;
    const double dp = dm + sq;
    return std::exp(x) * norm_cdf(dp) - std::exp(k) * norm_cdf(dm);
}

double leg_price_std(const PortfolioSpec& spec, std::size_t i, double x) {
    const double s = spec.sigma(i);
    return bs_call_price(spec.mu(static_cast<Eigen::Index>(i)) * spec.T + x * s * std::sqrt(spec.T),
                         spec.legs[i].log_strike, s, spec.tau(i));
}

namespace {

// d_-(x) = a x + b in the standardized-return variable
void leg_dm_coeffs(const PortfolioSpec& spec, std::size_t i, double& a, double& b) {
    const double s = spec.sigma(i);
    const double tau = spec.tau(i);
    const double sq = s * std::sqrt(tau);
    a = std::sqrt(spec.T / tau);
    b = (spec.mu(static_cast<Eigen::Index>(i)) * spec.T - spec.legs[i].log_strike) / sq - sq / 2.0;
}

} // namespace

double price_tail_equivalent(const PortfolioSpec& spec, std::size_t i, double x) {
    double a, b;
    leg_dm_coeffs(spec, i, a, b);
    const double dm = a * x + b;
    const double s = spec.sigma(i);
    const double tau = spec.tau(i);
    return s * std::pow(tau, 1.5) / (x * x * spec.T * std::sqrt(2.0 * M_PI)) *
           std::exp(spec.legs[i].log_strike - dm * dm / 2.0);
}

double leg_log_price_leading(const PortfolioSpec& spec, std::size_t i, double x) {
    return -x * x * spec.T / (2.0 * spec.tau(i));
}

double leg_price_inverse(const PortfolioSpec& spec, std::size_t i, double price) {
    if (!(price > 0.0)) throw DomainError("leg_price_inverse: price must be > 0");
    double lo = -1.0, hi = 1.0;
    while (leg_price_std(spec, i, hi) < price) {
        hi *= 2.0;
        if (hi > 1e6) throw DomainError("leg_price_inverse: price above attainable range");
    }
    while (leg_price_std(spec, i, lo) > price) {
        lo *= 2.0;
        if (lo < -1e7) break; // price underflowed to 0 in double; lo is deep enough
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (leg_price_std(spec, i, mid) < price) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double leg_log_cdf(const PortfolioSpec& spec, std::size_t i, double z) {
    return norm_log_cdf(leg_price_inverse(spec, i, z));
}

SymMatrix portfolio_sigma_matrix(const PortfolioSpec& spec) {
    spec.validate();
    const auto n = static_cast<Eigen::Index>(spec.n());
    Matrix sig(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            sig(i, j) = spec.B(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) * spec.T /
                        (spec.sigma(static_cast<std::size_t>(i)) *
                         spec.sigma(static_cast<std::size_t>(j)) *
                         std::sqrt(spec.tau(static_cast<std::size_t>(i)) *
                                   spec.tau(static_cast<std::size_t>(j))));
        }
    }
    return SymMatrix(std::move(sig));
}

double predicted_portfolio_slope(const PortfolioSpec& spec) {
    const auto qp = min_quadratic_on_simplex(portfolio_sigma_matrix(spec), 1e-12);
    return 1.0 / qp.value;
}

JointSampler portfolio_price_sampler(const PortfolioSpec& spec) {
    spec.validate();
    const auto n = static_cast<int>(spec.n());
    const Matrix L = Eigen::LLT<Matrix>((spec.B.mat() * spec.T).eval()).matrixL();
    const Vector mean = spec.mu * spec.T;
    std::vector<double> sig(spec.n()), tau(spec.n()), strike(spec.n());
    for (std::size_t i = 0; i < spec.n(); ++i) {
        sig[i] = spec.sigma(i);
        tau[i] = spec.tau(i);
        strike[i] = spec.legs[i].log_strike;
    }
    JointSampler s;
    s.dim = n;
    s.draw = [n, L, mean, sig, tau, strike](Rng& rng, Vector& out) {
        Vector z(n);
        for (int i = 0; i < n; ++i) z(i) = rng.normal();
        const Vector x = mean + L * z;
        for (int i = 0; i < n; ++i) {
            out(i) = bs_call_price(x(i), strike[static_cast<std::size_t>(i)],
                                   sig[static_cast<std::size_t>(i)],
                                   tau[static_cast<std::size_t>(i)]);
        }
    };
    return s;
}

TailCurve portfolio_tail_curve(const PortfolioSpec& spec, const std::vector<double>& thresholds,
                               std::uint64_t samples, std::uint64_t seed, int workers) {
    auto curve = mc_tail_curve(portfolio_price_sampler(spec), FunctionalRegion::sum_below(),
                               thresholds, samples, seed, workers);
    std::ostringstream meta;
    meta << "portfolio n=" << spec.n() << " T=" << spec.T << " factorization=cholesky";
    curve.metadata = meta.str();
    return curve;
}

// ---------------------------------------------------------------------------
// hidden regular variation, two identical legs
// ---------------------------------------------------------------------------

HrvQuantities hrv_quantities(const PortfolioSpec& spec) {
    spec.validate();
    if (spec.n() != 2) throw NotIdenticalLegs("hrv_quantities: exactly two legs required");
    const double tol = 1e-12;
    if (std::abs(spec.sigma(0) - spec.sigma(1)) > tol ||
        std::abs(spec.mu(0) - spec.mu(1)) > tol ||
        std::abs(spec.legs[0].log_strike - spec.legs[1].log_strike) > tol ||
        std::abs(spec.legs[0].maturity - spec.legs[1].maturity) > tol) {
        throw NotIdenticalLegs("hrv_quantities: the two legs must be identical");
    }

    const double rho = spec.B(0, 1) / (spec.sigma(0) * spec.sigma(1));
    const double T = spec.T;
    const double tau = spec.tau(0);
    const double sig = spec.sigma(0);
    const double k = spec.legs[0].log_strike;

    HrvQuantities q;
    q.eta = (1.0 + rho) / 2.0;
    q.gamma_tilde = tau / T;
    q.gamma = q.gamma_tilde / (2.0 * q.eta);

    double a, b;
    leg_dm_coeffs(spec, 0, a, b);
    q.c_const = b;
    q.C_const = 2.0 * T * std::sqrt(2.0 * M_PI) / (sig * std::pow(tau, 1.5)) *
                std::exp(-k + b * b / 2.0) * std::pow(4.0 * M_PI, -a * a / 2.0);

    // nu0(A) for A = {x,y > 0 : 1/x + 1/y <= 1} under the product measure
    // with rectangle mass (x y)^{-gamma}: Gamma(1+gamma)^2 / Gamma(1+2 gamma)
    q.nu0_A = std::exp(2.0 * std::lgamma(1.0 + q.gamma) - std::lgamma(1.0 + 2.0 * q.gamma));

    const double eta = q.eta;
    q.L0 = [rho, eta](double t) {
        if (!(t > 1.0)) throw DomainError("L0 is defined for t > 1");
        return std::pow(1.0 + rho, 1.5) * std::pow(1.0 - rho, -0.5) *
               std::pow(4.0 * M_PI * std::log(t), -rho / (1.0 + rho));
    };
    const double gt = q.gamma_tilde;
    const double C = q.C_const;
    q.L_tilde = [gt, C, b](double t) {
        if (!(t > 1.0)) throw DomainError("L_tilde is defined for t > 1");
        const double lt = std::log(t);
        return std::pow(C, -gt) * std::pow(gt * lt, 0.5 - gt) *
               std::exp(gt * b * std::sqrt(2.0 * lt));
    };
    return q;
}

double hrv_sharp_asymptote(const HrvQuantities& q, double z) {
    if (!(z > 0.0 && z < 1.0)) throw DomainError("hrv_sharp_asymptote: z must lie in (0,1)");
    const double inv = 1.0 / z;
    return std::pow(z, q.gamma_tilde / q.eta) * q.nu0_A /
           (std::pow(q.L_tilde(inv), 1.0 / q.eta) * q.L0(std::pow(z, -q.gamma_tilde)));
}

std::string gnuplot_tail_script(const std::string& csv_path, double predicted_slope,
                                double anchor_z, double anchor_p) {
    std::ostringstream os;
    os.precision(17);
    os << "set logscale xy\n"
       << "set datafile separator ','\n"
       << "set xlabel 'z'\n"
       << "set ylabel 'P[P_1+...+P_n <= z]'\n"
       << "set key left top\n"
       << "ref(x) = " << anchor_p << " * (x / " << anchor_z << ")**" << predicted_slope << "\n"
       << "plot '" << csv_path << "' using 1:2 skip 1 with linespoints title 'Monte Carlo', \\\n"
       << "     ref(x) with lines dashtype 2 title 'slope " << predicted_slope << "'\n";
    return os.str();
}

} // namespace taildep
