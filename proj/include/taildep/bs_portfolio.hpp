#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "taildep/asymptotics.hpp"
#include "taildep/matrix.hpp"

namespace taildep {

struct OptionLeg {
    double log_strike = 0.0;
    double maturity = 0.0; // T_i, in years; must exceed the horizon T
};

// Multidimensional Black-Scholes market observed at horizon T with one call
// per asset. B is the annualized covariance of log-returns; the vector of
// log-returns over the horizon is N(mu*T, B*T).
struct PortfolioSpec {
    SymMatrix B{Matrix::Identity(1, 1)};
    Vector mu;
    double T = 0.0;
    std::vector<OptionLeg> legs;

    std::size_t n() const { return legs.size(); }
    double sigma(std::size_t i) const { return std::sqrt(B(i, i)); }
    double tau(std::size_t i) const { return legs[i].maturity - T; }
    void validate() const;
};

nlohmann::json portfolio_to_json(const PortfolioSpec& spec);
PortfolioSpec portfolio_from_json(const nlohmann::json& j);

// Black-Scholes call price with zero rate: e^x N(d+) - e^k N(d-),
// d+- = (x - k)/(sigma sqrt(tau)) +- sigma sqrt(tau)/2. Strictly inside
// (max(e^x - e^k, 0), e^x).
double bs_call_price(double x, double k, double sigma, double tau);

// Price of leg i as a function of the standardized log-return x
// (X_i = mu_i T + sigma_i sqrt(T) x).
double leg_price_std(const PortfolioSpec& spec, std::size_t i, double x);

// Deep-out-of-the-money equivalent of leg_price_std as x -> -infinity:
//   sigma_i tau_i^{3/2} / (x^2 T sqrt(2 pi)) * exp(k_i - d_-(x)^2 / 2)
// with d_-(x) = x sqrt(T/tau_i) + (mu_i T - k_i)/(sigma_i sqrt(tau_i))
//               - sigma_i sqrt(tau_i)/2.
double price_tail_equivalent(const PortfolioSpec& spec, std::size_t i, double x);

// Leading log form of the same equivalent: -x^2 T / (2 tau_i).
double leg_log_price_leading(const PortfolioSpec& spec, std::size_t i, double x);

// Inverse of leg_price_std in x (prices are strictly increasing in x).
double leg_price_inverse(const PortfolioSpec& spec, std::size_t i, double price);

// Exact marginal ln P[P_i <= z] = ln Phi(f_i^{-1}(z)).
double leg_log_cdf(const PortfolioSpec& spec, std::size_t i, double z);

// Sigma_ij = B_ij T / (sigma_i sigma_j sqrt(tau_i tau_j)); the quadratic
// form whose simplex minimum drives the portfolio tail slope.
SymMatrix portfolio_sigma_matrix(const PortfolioSpec& spec);

// Predicted d ln P[P_1+...+P_n <= z] / d ln z as z -> 0:
// 1 / min over the simplex of w' Sigma w.
double predicted_portfolio_slope(const PortfolioSpec& spec);

// Sampler emitting the vector of leg prices (for reuse with mc_tail_curve).
JointSampler portfolio_price_sampler(const PortfolioSpec& spec);

// Monte Carlo curve of P[P_1+...+P_n <= z] over the given thresholds on one
// shared sample stream; deterministic per (seed, samples, workers).
TailCurve portfolio_tail_curve(const PortfolioSpec& spec, const std::vector<double>& thresholds,
                               std::uint64_t samples, std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// Hidden-regular-variation comparison for two identical legs
// ---------------------------------------------------------------------------

struct HrvQuantities {
    double eta = 0.0;         // (1+rho)/2
    double gamma_tilde = 0.0; // (T1-T)/T, the marginal tail exponent
    double gamma = 0.0;       // gamma_tilde / (2 eta)
    double nu0_A = 0.0;       // limit measure of A = {1/x + 1/y <= 1}
    double C_const = 0.0;     // multiplicative constant of g~^{-1}
    double c_const = 0.0;     // exponential-drift constant of g~^{-1}
    std::function<double(double)> L0;      // slowly varying part of U
    std::function<double(double)> L_tilde; // slowly varying part of g~
};

// Requires exactly two legs with equal volatilities, drifts, strikes and
// maturities (NotIdenticalLegs otherwise).
HrvQuantities hrv_quantities(const PortfolioSpec& spec);

// Sharp asymptotic of P[P_1 + P_2 <= z]:
//   z^{gamma_tilde/eta} nu0(A) / (L~(1/z)^{1/eta} L0(z^{-gamma_tilde})).
double hrv_sharp_asymptote(const HrvQuantities& q, double z);

// gnuplot script reproducing the log-log tail plot: empirical curve from the
// CSV plus a straight reference line with the predicted slope.
std::string gnuplot_tail_script(const std::string& csv_path, double predicted_slope,
                                double anchor_z, double anchor_p);

} // namespace taildep
