#pragma once

#include <string>
#include <variant>

#include <json.hpp>

#include "taildep/matrix.hpp"

namespace taildep {

// ---------------------------------------------------------------------------
// Archimedean generators
// ---------------------------------------------------------------------------

enum class GeneratorFamily { Gumbel, Clayton, CustomSlow };

// phi: [0,1] -> [0,inf], continuous, strictly decreasing, phi(1) = 0, with a
// completely monotone inverse (guaranteed by the per-family parameter range).
// CustomSlow is the rapidly-varying inverse generator
//   phi^{-1}(s) = exp(-(ln(1+s) + 1/2)^2 + 1/4),
// valid in dimension 2, whose forward phi is computed by bisection.
struct ArchimedeanGenerator {
    GeneratorFamily family = GeneratorFamily::Gumbel;
    double theta = 1.0;
    void validate() const;
    std::size_t max_dim() const; // CustomSlow: 2; others unbounded
};

double generator_phi(const ArchimedeanGenerator& gen, double u);
double generator_phi_inv(const ArchimedeanGenerator& gen, double s);
// log-scale companions used by the deep-tail evaluators
double generator_phi_from_log(const ArchimedeanGenerator& gen, double log_u);
double generator_log_phi_inv(const ArchimedeanGenerator& gen, double s);

// ---------------------------------------------------------------------------
// Copula families
// ---------------------------------------------------------------------------

struct IndependenceCopula {};
struct ComonotoneCopula {};
struct GaussianCopula {
    CorrelationMatrix R;
};
struct ArchimedeanCopula {
    ArchimedeanGenerator gen;
};
// Gumbel extreme-value copula (max-stable); coincides with the Gumbel
// Archimedean family but is tagged separately for the extreme-value formulas.
struct GumbelEvCopula {
    double theta = 1.0;
};
// Copula of sqrt(Z) Y with Y ~ N(0, R) and Z exponential(theta), the
// canonical representative of mixing densities with decay rate theta.
struct GaussianMixtureCopula {
    CorrelationMatrix R;
    double theta = 1.0;
};

using CopulaSpec = std::variant<IndependenceCopula, ComonotoneCopula, GaussianCopula,
                                ArchimedeanCopula, GumbelEvCopula, GaussianMixtureCopula>;

// 0 when the family accepts any dimension.
std::size_t copula_dim(const CopulaSpec& spec);
// Families whose survival copula equals the copula itself (radially
// symmetric underlying laws).
bool is_radially_symmetric(const CopulaSpec& spec);
std::string family_name(const CopulaSpec& spec);
void validate(const CopulaSpec& spec);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

// C(u_1,...,u_n). `accuracy` bounds the quadrature error for the Gaussian /
// mixture families; closed-form families are exact up to floating point.
double copula_cdf(const CopulaSpec& spec, const Vector& u, double accuracy = 1e-10);

// ln C evaluated from log-coordinates, usable far below double underflow of
// the u_i themselves. This is what the empirical chi estimator consumes.
double copula_log_cdf(const CopulaSpec& spec, const Vector& log_u, double accuracy = 1e-10);

// Survival copula C-bar(u) = P[1-U_i <= u_i for all i]. Radially symmetric
// families reuse C directly; the rest go through inclusion-exclusion
// (2^n terms, n <= 12).
double survival_copula_cdf(const CopulaSpec& spec, const Vector& u, double accuracy = 1e-10);
double survival_copula_log_cdf(const CopulaSpec& spec, const Vector& log_u,
                               double accuracy = 1e-10);

// Marginal CDF of one component of sqrt(Z) Y (standard normal component,
// Z ~ exponential(theta)) on the log scale, plus its inverse.
double gaussian_mixture_marginal_log_cdf(double theta, double x, double accuracy = 1e-10);
double gaussian_mixture_marginal_quantile_log(double theta, double log_p,
                                              double accuracy = 1e-10);

// ---------------------------------------------------------------------------
// JSON serialization: {"family": string, "params": {...}}
// ---------------------------------------------------------------------------

nlohmann::json copula_to_json(const CopulaSpec& spec);
CopulaSpec copula_from_json(const nlohmann::json& j);

} // namespace taildep
