#include "taildep/copula.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "taildep/errors.hpp"
#include "taildep/gaussian_tail.hpp"
#include "taildep/normal.hpp"

namespace taildep {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

void ArchimedeanGenerator::validate() const {
    switch (family) {
    case GeneratorFamily::Gumbel:
        if (!(theta >= 1.0)) throw DomainError("Gumbel generator requires theta >= 1");
        break;
    case GeneratorFamily::Clayton:
        if (!(theta > 0.0)) throw DomainError("Clayton generator requires theta > 0");
        break;
    case GeneratorFamily::CustomSlow:
        break;
    }
}

std::size_t ArchimedeanGenerator::max_dim() const {
    return family == GeneratorFamily::CustomSlow ? 2 : std::numeric_limits<std::size_t>::max();
}

namespace {

double custom_slow_log_phi_inv(double s) {
    const double t = std::log1p(s) + 0.5;
    return -t * t + 0.25;
}

// forward generator of CustomSlow by bisection on the decreasing
// log phi^{-1}; bracket [0, 1e30]
double custom_slow_phi_from_log(double log_u) {
    if (log_u > 0.0) throw DomainError("generator argument above 1");
    if (log_u == 0.0) return 0.0;
    double lo = 0.0, hi = 1e30;
    if (custom_slow_log_phi_inv(hi) > log_u) {
        throw DomainError("CustomSlow generator: argument below representable range");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (custom_slow_log_phi_inv(mid) > log_u) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-12 * (1.0 + lo)) break;
    }
    return 0.5 * (lo + hi);
}

} // namespace

double generator_phi_from_log(const ArchimedeanGenerator& gen, double log_u) {
    gen.validate();
    if (log_u > 0.0) throw DomainError("generator_phi: u must lie in (0,1]");
    switch (gen.family) {
    case GeneratorFamily::Gumbel:
        return std::pow(-log_u, gen.theta);
    case GeneratorFamily::Clayton:
        // (u^{-theta} - 1)/theta
        return std::expm1(-gen.theta * log_u) / gen.theta;
    case GeneratorFamily::CustomSlow:
        return custom_slow_phi_from_log(log_u);
    }
    throw DomainError("unknown generator family");
}

double generator_phi(const ArchimedeanGenerator& gen, double u) {
    if (!(u > 0.0) || u > 1.0) throw DomainError("generator_phi: u must lie in (0,1]");
    return generator_phi_from_log(gen, std::log(u));
}

double generator_log_phi_inv(const ArchimedeanGenerator& gen, double s) {
    gen.validate();
    if (s < 0.0) throw DomainError("generator_phi_inv: s must be >= 0");
    switch (gen.family) {
    case GeneratorFamily::Gumbel:
        return -std::pow(s, 1.0 / gen.theta);
    case GeneratorFamily::Clayton:
        return -std::log1p(gen.theta * s) / gen.theta;
    case GeneratorFamily::CustomSlow:
        return custom_slow_log_phi_inv(s);
    }
    throw DomainError("unknown generator family");
}

double generator_phi_inv(const ArchimedeanGenerator& gen, double s) {
    return std::exp(generator_log_phi_inv(gen, s));
}

// ---------------------------------------------------------------------------
// spec plumbing
// ---------------------------------------------------------------------------

std::size_t copula_dim(const CopulaSpec& spec) {
    if (const auto* g = std::get_if<GaussianCopula>(&spec)) return g->R.dim();
    if (const auto* m = std::get_if<GaussianMixtureCopula>(&spec)) return m->R.dim();
    return 0;
}

bool is_radially_symmetric(const CopulaSpec& spec) {
    return std::holds_alternative<IndependenceCopula>(spec) ||
           std::holds_alternative<ComonotoneCopula>(spec) ||
           std::holds_alternative<GaussianCopula>(spec) ||
           std::holds_alternative<GaussianMixtureCopula>(spec);
}

std::string family_name(const CopulaSpec& spec) {
    struct V {
        std::string operator()(const IndependenceCopula&) { return "independence"; }
        std::string operator()(const ComonotoneCopula&) { return "comonotone"; }
        std::string operator()(const GaussianCopula&) { return "gaussian"; }
        std::string operator()(const ArchimedeanCopula& a) {
            switch (a.gen.family) {
            case GeneratorFamily::Gumbel: return "gumbel";
            case GeneratorFamily::Clayton: return "clayton";
            case GeneratorFamily::CustomSlow: return "customslow";
            }
            return "archimedean";
        }
        std::string operator()(const GumbelEvCopula&) { return "gumbel-ev"; }
        std::string operator()(const GaussianMixtureCopula&) { return "gaussian-mixture"; }
    };
    return std::visit(V{}, spec);
}

void validate(const CopulaSpec& spec) {
    if (const auto* g = std::get_if<GaussianCopula>(&spec)) {
        g->R.require_positive_definite();
        if (!g->R.has_unit_diagonal()) throw DomainError("Gaussian copula: R must be a correlation matrix");
    } else if (const auto* a = std::get_if<ArchimedeanCopula>(&spec)) {
        a->gen.validate();
    } else if (const auto* e = std::get_if<GumbelEvCopula>(&spec)) {
        if (!(e->theta >= 1.0)) throw DomainError("Gumbel EV copula requires theta >= 1");
    } else if (const auto* m = std::get_if<GaussianMixtureCopula>(&spec)) {
        m->R.require_positive_definite();
        if (!m->R.has_unit_diagonal()) throw DomainError("mixture copula: R must be a correlation matrix");
        if (!(m->theta > 0.0)) throw DomainError("mixture copula requires theta > 0");
    }
}

// ---------------------------------------------------------------------------
// Gaussian mixture marginal
// ---------------------------------------------------------------------------

double gaussian_mixture_marginal_log_cdf(double theta, double x, double accuracy) {
    if (!(theta > 0.0)) throw DomainError("mixture marginal: theta must be > 0");
    // ln integral over s in (0,inf) of theta e^{-theta s} Phi(x / sqrt(s));
    // substituted s = e^v
    auto g = [&](double v) {
        const double s = std::exp(v);
        return std::log(theta) - theta * s + norm_log_cdf(x * std::exp(-0.5 * v)) + v;
    };
    const double vc = std::log(std::max(std::abs(x), 1.0) / std::sqrt(2.0 * theta) + 0.5 / theta);
    // keep x/sqrt(s) in the well-conditioned range of the normal log-CDF;
    // the clipped region is smaller than exp(-1e10) relative
    const double lo = std::max(vc - 45.0, 2.0 * std::log(std::max(std::abs(x), 1.0) / 1e5));
    return detail::log_integrate(g, lo, vc + 20.0, accuracy);
}

double gaussian_mixture_marginal_quantile_log(double theta, double log_p, double accuracy) {
    if (!(log_p < 0.0)) {
        if (log_p == 0.0) return kInf;
        throw DomainError("mixture marginal quantile: log_p must be <= 0");
    }
    // bisection on the increasing marginal log-CDF
    double hi = 1.0;
    while (gaussian_mixture_marginal_log_cdf(theta, hi, accuracy) < log_p && hi < 1e6) hi *= 2.0;
    double lo = -1.0 - 1.5 * std::abs(log_p) / std::sqrt(2.0 * theta);
    while (gaussian_mixture_marginal_log_cdf(theta, lo, accuracy) > log_p) lo *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (gaussian_mixture_marginal_log_cdf(theta, mid, accuracy) < log_p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-11 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// log CDF per family
// ---------------------------------------------------------------------------

namespace {

double logsumexp(const std::vector<double>& xs) {
    double m = kNegInf;
    for (double x : xs) m = std::max(m, x);
    if (m == kNegInf) return kNegInf;
    double s = 0.0;
    for (double x : xs) s += std::exp(x - m);
    return m + std::log(s);
}

// drop coordinates pinned at 1 (log_u = 0): uniform margins make them inert
std::vector<Eigen::Index> active_coords(const Vector& log_u) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < log_u.size(); ++i) {
        if (log_u(i) > 0.0 || std::isnan(log_u(i))) {
            throw DomainError("copula argument outside the unit cube");
        }
        if (log_u(i) < 0.0) idx.push_back(i);
    }
    return idx;
}

double gaussian_log_cdf_impl(const CorrelationMatrix& R, const Vector& log_u, double accuracy) {
    if (log_u.size() != static_cast<Eigen::Index>(R.dim())) {
        throw DomainError("gaussian copula: dimension mismatch");
    }
    const auto idx = active_coords(log_u);
    if (idx.empty()) return 0.0;
    Vector z(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        z(static_cast<Eigen::Index>(k)) = norm_quantile_from_log(log_u(idx[k]));
    }
    if (idx.size() == 1) return log_u(idx[0]);
    Matrix sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = R(
                static_cast<std::size_t>(idx[a]), static_cast<std::size_t>(idx[b]));
        }
    }
    return gaussian_tail_log_cdf(make_correlation(std::move(sub)), z, accuracy);
}

double archimedean_log_cdf_impl(const ArchimedeanGenerator& gen, const Vector& log_u) {
    const auto idx = active_coords(log_u);
    if (idx.empty()) return 0.0;
    if (idx.size() > gen.max_dim()) {
        throw DimensionTooLarge("generator valid only up to dimension " +
                                std::to_string(gen.max_dim()));
    }
    switch (gen.family) {
    case GeneratorFamily::Gumbel: {
        double s = 0.0;
        for (auto i : idx) s += std::pow(-log_u(i), gen.theta);
        return -std::pow(s, 1.0 / gen.theta);
    }
    case GeneratorFamily::Clayton: {
        // ln C = -(1/theta) ln( sum u_i^{-theta} - (n-1) ), via log-sum-exp
        std::vector<double> ms;
        ms.reserve(idx.size());
        for (auto i : idx) ms.push_back(-gen.theta * log_u(i));
        const double lse = logsumexp(ms);
        const double corr = std::log1p(-static_cast<double>(idx.size() - 1) * std::exp(-lse));
        return -(lse + corr) / gen.theta;
    }
    case GeneratorFamily::CustomSlow: {
        double s = 0.0;
        for (auto i : idx) s += custom_slow_phi_from_log(log_u(i));
        return custom_slow_log_phi_inv(s);
    }
    }
    throw DomainError("unknown generator family");
}

double mixture_log_cdf_impl(const GaussianMixtureCopula& mix, const Vector& log_u,
                            double accuracy) {
    if (log_u.size() != static_cast<Eigen::Index>(mix.R.dim())) {
        throw DomainError("mixture copula: dimension mismatch");
    }
    const auto idx = active_coords(log_u);
    if (idx.empty()) return 0.0;
    if (idx.size() == 1) return log_u(idx[0]);

    Vector x(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) {
        x(static_cast<Eigen::Index>(k)) =
            gaussian_mixture_marginal_quantile_log(mix.theta, log_u(idx[k]), accuracy * 1e-2);
    }
    Matrix sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = mix.R(
                static_cast<std::size_t>(idx[a]), static_cast<std::size_t>(idx[b]));
        }
    }
    const CorrelationMatrix Rsub = make_correlation(std::move(sub));
    const double theta = mix.theta;
    // the inner orthant evaluations must be materially quieter than the
    // outer quadrature's convergence test or the panel doubling never settles
    const double inner_acc = accuracy * 1e-3;
    auto g = [&](double v) {
        const double s = std::exp(v);
        const Vector zc = x * std::exp(-0.5 * v);
        return std::log(theta) - theta * s + v + gaussian_tail_log_cdf(Rsub, zc, inner_acc);
    };
    const double xmax = x.cwiseAbs().maxCoeff();
    const double vc = std::log(std::max(xmax, 1.0) / std::sqrt(2.0 * theta) + 0.5 / theta);
    // same conditioning guard as the marginal: scaled thresholds beyond ~1e5
    // turn the orthant quadrature into a float staircase while contributing
    // less than exp(-1e9) of the mass
    const double lo = std::max(vc - 45.0, 2.0 * std::log(std::max(xmax, 1.0) / 1e5));
    return detail::log_integrate(g, lo, vc + 20.0, accuracy);
}

} // namespace

double copula_log_cdf(const CopulaSpec& spec, const Vector& log_u, double accuracy) {
    if (!(accuracy > 0.0)) throw DomainError("copula_log_cdf: accuracy must be > 0");
    if (log_u.size() < 1) throw DomainError("copula_log_cdf: empty argument");
    for (Eigen::Index i = 0; i < log_u.size(); ++i) {
        if (log_u(i) == kNegInf) return kNegInf; // some u_i = 0
    }
    struct V {
        const Vector& lu;
        double acc;
        double operator()(const IndependenceCopula&) const { return lu.sum(); }
        double operator()(const ComonotoneCopula&) const { return lu.minCoeff(); }
        double operator()(const GaussianCopula& g) const {
            return gaussian_log_cdf_impl(g.R, lu, acc);
        }
        double operator()(const ArchimedeanCopula& a) const {
            return archimedean_log_cdf_impl(a.gen, lu);
        }
        double operator()(const GumbelEvCopula& e) const {
            ArchimedeanGenerator gen{GeneratorFamily::Gumbel, e.theta};
            return archimedean_log_cdf_impl(gen, lu);
        }
        double operator()(const GaussianMixtureCopula& m) const {
            return mixture_log_cdf_impl(m, lu, acc);
        }
    };
    return std::visit(V{log_u, accuracy}, spec);
}

double copula_cdf(const CopulaSpec& spec, const Vector& u, double accuracy) {
    Vector log_u(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (!(u(i) >= 0.0) || u(i) > 1.0) throw DomainError("copula argument outside unit cube");
        log_u(i) = (u(i) == 0.0) ? kNegInf : std::log(u(i));
    }
    return std::exp(copula_log_cdf(spec, log_u, accuracy));
}

// ---------------------------------------------------------------------------
// survival copula
// ---------------------------------------------------------------------------

double survival_copula_cdf(const CopulaSpec& spec, const Vector& u, double accuracy) {
    if (is_radially_symmetric(spec)) return copula_cdf(spec, u, accuracy);
    const Eigen::Index n = u.size();
    if (n > 12) throw DimensionTooLarge("survival copula: inclusion-exclusion limited to n <= 12");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!(u(i) >= 0.0) || u(i) > 1.0) throw DomainError("copula argument outside unit cube");
    }
    // P[U_i > 1-u_i for all i] = sum over subsets S of (-1)^|S| C(a^(S)),
    // a_i = 1-u_i on S and 1 elsewhere
    double pos = 0.0, neg = 0.0;
    Vector arg(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        int bits = 0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool in = (mask >> i) & 1u;
            arg(i) = in ? 1.0 - u(i) : 1.0;
            bits += in;
        }
        const double term = copula_cdf(spec, arg, accuracy);
        if (bits % 2 == 0) {
            pos += term;
        } else {
            neg += term;
        }
    }
    const double val = pos - neg;
    if (val < -accuracy - 1e-12 * pos) {
        throw AccuracyUnreachable("survival copula: inclusion-exclusion cancellation");
    }
    return std::max(val, 0.0);
}

double survival_copula_log_cdf(const CopulaSpec& spec, const Vector& log_u, double accuracy) {
    if (is_radially_symmetric(spec)) return copula_log_cdf(spec, log_u, accuracy);
    Vector u(log_u.size());
    for (Eigen::Index i = 0; i < log_u.size(); ++i) u(i) = std::exp(log_u(i));
    const double v = survival_copula_cdf(spec, u, accuracy);
    if (v <= 0.0) {
        throw AccuracyUnreachable(
            "survival copula: value lost to cancellation at this depth; only radially "
            "symmetric families support deep-tail survival evaluation");
    }
    return std::log(v);
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

nlohmann::json matrix_to_json(const Matrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const nlohmann::json& j) {
    const auto n = j.size();
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (j[i].size() != n) throw DomainError("matrix JSON must be square");
        for (std::size_t k = 0; k < n; ++k) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
        }
    }
    return m;
}

} // namespace

nlohmann::json copula_to_json(const CopulaSpec& spec) {
    nlohmann::json j;
    j["family"] = family_name(spec);
    nlohmann::json p = nlohmann::json::object();
    if (const auto* g = std::get_if<GaussianCopula>(&spec)) {
        p["R"] = matrix_to_json(g->R.mat());
    } else if (const auto* a = std::get_if<ArchimedeanCopula>(&spec)) {
        if (a->gen.family != GeneratorFamily::CustomSlow) p["theta"] = a->gen.theta;
    } else if (const auto* e = std::get_if<GumbelEvCopula>(&spec)) {
        p["theta"] = e->theta;
    } else if (const auto* m = std::get_if<GaussianMixtureCopula>(&spec)) {
        p["R"] = matrix_to_json(m->R.mat());
        p["theta"] = m->theta;
    }
    j["params"] = std::move(p);
    return j;
}

CopulaSpec copula_from_json(const nlohmann::json& j) {
    const std::string fam = j.at("family").get<std::string>();
    const nlohmann::json p = j.value("params", nlohmann::json::object());
    if (fam == "independence") return IndependenceCopula{};
    if (fam == "comonotone") return ComonotoneCopula{};
    if (fam == "gaussian") return GaussianCopula{make_correlation(matrix_from_json(p.at("R")))};
    if (fam == "gumbel") {
        return ArchimedeanCopula{{GeneratorFamily::Gumbel, p.at("theta").get<double>()}};
    }
    if (fam == "clayton") {
        return ArchimedeanCopula{{GeneratorFamily::Clayton, p.at("theta").get<double>()}};
    }
    if (fam == "customslow") return ArchimedeanCopula{{GeneratorFamily::CustomSlow, 0.0}};
    if (fam == "gumbel-ev") return GumbelEvCopula{p.at("theta").get<double>()};
    if (fam == "gaussian-mixture") {
        return GaussianMixtureCopula{make_correlation(matrix_from_json(p.at("R"))),
                                     p.at("theta").get<double>()};
    }
    throw DomainError("unknown copula family: " + fam);
}

} // namespace taildep
