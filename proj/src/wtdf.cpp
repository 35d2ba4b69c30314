#include "taildep/wtdf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "taildep/errors.hpp"

namespace taildep {

void LambdaVector::validate() const {
    if (lambda.size() < 1) throw DomainError("LambdaVector: empty");
    if (lambda.minCoeff() < 0.0) throw DomainError("LambdaVector: negative entry");
    if (!(lambda.maxCoeff() > 0.0)) throw DomainError("LambdaVector: all entries zero");
}

namespace {

ChiResult closed(double value) {
    ChiResult r;
    r.value = value;
    r.method = ChiMethod::ClosedForm;
    return r;
}

Matrix submatrix(const SymMatrix& R, const std::vector<Eigen::Index>& idx) {
    Matrix sub(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            sub(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                R(static_cast<std::size_t>(idx[a]), static_cast<std::size_t>(idx[b]));
        }
    }
    return sub;
}

std::vector<Eigen::Index> positive_coords(const Vector& lambda) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) > 0.0) idx.push_back(i);
    }
    return idx;
}

} // namespace

ChiResult chi_independence(const LambdaVector& lambda) {
    lambda.validate();
    return closed(lambda.max() / lambda.lambda.sum());
}

ChiResult chi_gaussian(const CorrelationMatrix& R, const LambdaVector& lambda, double tol) {
    lambda.validate();
    if (lambda.lambda.size() != static_cast<Eigen::Index>(R.dim())) {
        throw DomainError("chi_gaussian: dimension mismatch");
    }
    if (lambda.lambda.minCoeff() <= 0.0) {
        throw ZeroLambda("chi_gaussian requires all lambda_i > 0; marginalize zero "
                         "coordinates first (see chi_closed_form)");
    }
    const Eigen::Index n = lambda.lambda.size();
    Matrix sigma(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            sigma(i, j) = R.mat()(i, j) / std::sqrt(lambda.lambda(i) * lambda.lambda(j));
        }
    }
    const auto qp = min_quadratic_on_simplex(SymMatrix(std::move(sigma)), tol);
    return closed(lambda.max() * qp.value);
}

ChiResult chi_gaussian_mixture(const MixtureParams& params, double tol) {
    params.validate();
    const double value = params.lambda.maxCoeff() * mixture_polytope_min(params, tol);
    if (params.mu_tilde.cwiseAbs().maxCoeff() == 0.0) {
        // symmetric case: cross-check against the simplex form with
        // Sigma_ij = R_ij/(lambda_i lambda_j)
        const Eigen::Index n = params.lambda.size();
        Matrix sigma(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                sigma(i, j) = params.R.mat()(i, j) / (params.lambda(i) * params.lambda(j));
            }
        }
        const auto qp = min_quadratic_on_simplex(SymMatrix(std::move(sigma)), tol * tol);
        const double alt = params.lambda.maxCoeff() * std::sqrt(qp.value);
        if (std::abs(alt - value) > 1e-6) {
            throw NoConvergence("chi_gaussian_mixture: polytope and simplex routes disagree by " +
                                std::to_string(std::abs(alt - value)));
        }
    }
    return closed(value);
}

ChiResult chi_archimedean(const RegVarIndex& alpha, const LambdaVector& lambda) {
    lambda.validate();
    if (alpha.alpha < 0.0) throw DomainError("chi_archimedean: alpha must be >= 0");
    if (alpha.alpha == 0.0) return closed(1.0);
    double s = 0.0;
    for (Eigen::Index i = 0; i < lambda.lambda.size(); ++i) {
        s += std::pow(lambda.lambda(i), 1.0 / alpha.alpha);
    }
    return closed(lambda.max() / std::pow(s, alpha.alpha));
}

ChiResult chi_extreme_value(const CopulaSpec& spec, const LambdaVector& lambda, double accuracy) {
    lambda.validate();
    const bool ev = std::holds_alternative<GumbelEvCopula>(spec) ||
                    std::holds_alternative<IndependenceCopula>(spec) ||
                    std::holds_alternative<ComonotoneCopula>(spec);
    if (!ev) throw DomainError("chi_extreme_value: spec is not an extreme-value family");
    // ln C(e^{-lambda_1},...,e^{-lambda_n}); zero entries pin the argument at 1
    const double lnC = copula_log_cdf(spec, -lambda.lambda, accuracy);
    return closed(-lambda.max() / lnC);
}

ChiResult chi_closed_form(const CopulaSpec& spec, const LambdaVector& lambda) {
    lambda.validate();
    const auto idx = positive_coords(lambda.lambda);
    Vector lpos(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) lpos(static_cast<Eigen::Index>(k)) = lambda.lambda(idx[k]);

    struct V {
        const std::vector<Eigen::Index>& idx;
        const Vector& lpos;
        ChiResult operator()(const IndependenceCopula&) const {
            return chi_independence({lpos});
        }
        ChiResult operator()(const ComonotoneCopula&) const { return closed(1.0); }
        ChiResult operator()(const GaussianCopula& g) const {
            if (idx.size() == 1) return closed(1.0);
            return chi_gaussian(make_correlation(submatrix(g.R, idx)), {lpos});
        }
        ChiResult operator()(const ArchimedeanCopula& a) const {
            switch (a.gen.family) {
            case GeneratorFamily::Gumbel:
                // ln phi^{-1}(s) = -s^{1/theta}: regularly varying, alpha = 1/theta
                return chi_archimedean({1.0 / a.gen.theta}, {lpos});
            case GeneratorFamily::Clayton:
            case GeneratorFamily::CustomSlow:
                // ln phi^{-1} slowly varying in both cases
                return chi_archimedean({0.0}, {lpos});
            }
            throw DomainError("unknown generator family");
        }
        ChiResult operator()(const GumbelEvCopula& e) const {
            CopulaSpec s = e;
            return chi_extreme_value(s, {lpos});
        }
        ChiResult operator()(const GaussianMixtureCopula& m) const {
            if (idx.size() == 1) return closed(1.0);
            MixtureParams params{make_correlation(submatrix(m.R, idx)),
                                 Vector::Zero(static_cast<Eigen::Index>(idx.size())), m.theta,
                                 lpos};
            return chi_gaussian_mixture(params);
        }
    };
    return std::visit(V{idx, lpos}, spec);
}

// ---------------------------------------------------------------------------
// empirical estimator
// ---------------------------------------------------------------------------

std::vector<double> default_u_sequence(const CopulaSpec& spec) {
    std::vector<double> us;
    if (std::holds_alternative<GaussianCopula>(spec)) {
        for (int k = 1; k <= 15; ++k) us.push_back(std::exp(-10.0 * k));
    } else if (std::holds_alternative<GaussianMixtureCopula>(spec)) {
        for (int k = 1; k <= 12; ++k) us.push_back(std::exp(-10.0 * k));
    } else {
        for (int k = 2; k <= 10; ++k) us.push_back(std::pow(10.0, -k));
    }
    return us;
}

namespace {

void check_sequence(const std::vector<double>& us) {
    if (us.size() < 3) throw DomainError("u sequence needs at least 3 points");
    for (std::size_t i = 0; i < us.size(); ++i) {
        if (!(us[i] > 0.0 && us[i] < 1.0)) throw DomainError("u sequence must lie in (0,1)");
        if (i > 0 && !(us[i] < us[i - 1])) throw DomainError("u sequence must be decreasing");
    }
}

// Candidate correction shapes for 1/r(h), h = 1/ln(1/u). Everything this
// library evaluates expands as 1/chi plus combinations of h, h ln(1/h)
// (log prefactors of Gaussian-type tails) and sqrt(h) / h^{3/2} (slowly
// converging Archimedean generators).
constexpr int kNumBases = 5;
const std::array<std::vector<int>, kNumBases> kBasisSets = {{
    {0, 2},       // 1, h
    {0, 2, 3},    // 1, h, h ln(1/h)
    {0, 1, 2},    // 1, sqrt(h), h
    {0, 1, 2, 4}, // 1, sqrt(h), h, h^{3/2}
    {0, 1, 2, 3}, // 1, sqrt(h), h, h ln(1/h)
}};

double basis_fn(int id, double h) {
    switch (id) {
    case 0: return 1.0;
    case 1: return std::sqrt(h);
    case 2: return h;
    case 3: return h * std::log(1.0 / h);
    case 4: return h * std::sqrt(h);
    }
    return 0.0;
}

double ls_intercept(const std::vector<double>& hs, const std::vector<double>& rinv,
                    const std::vector<int>& basis, std::size_t m) {
    Matrix A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(basis.size()));
    Vector b(static_cast<Eigen::Index>(m));
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t c = 0; c < basis.size(); ++c) {
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                basis_fn(basis[c], hs[i]);
        }
        b(static_cast<Eigen::Index>(i)) = rinv[i];
    }
    const Vector coef = A.colPivHouseholderQr().solve(b);
    return coef(0);
}

// Extrapolate 1/r(h) -> h = 0 by fitting every candidate basis, scoring each
// by how much its intercept moves when the deepest point is dropped, and
// taking the median over the models whose sensitivity is within 3x of the
// best. The drop-one score directly measures extrapolation reliability on
// noiseless sequences, and the band median keeps one narrowly-winning but
// misspecified shape from dominating.
double extrapolate_chi(const std::vector<double>& hs, const std::vector<double>& rinv,
                       double* unclamped = nullptr) {
    const std::size_t m = hs.size();
    struct Cand {
        double sens, chi_raw;
    };
    std::vector<Cand> cands;
    for (const auto& basis : kBasisSets) {
        if (m < basis.size() + 1) continue;
        const double a_full = ls_intercept(hs, rinv, basis, m);
        const double a_drop = ls_intercept(hs, rinv, basis, m - 1);
        cands.push_back({std::abs(1.0 / a_full - 1.0 / a_drop), 1.0 / a_full});
    }
    if (cands.empty()) throw DomainError("chi extrapolation needs at least 3 points");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : cands) best = std::min(best, c.sens);
    std::vector<double> clamped, raw;
    for (const auto& c : cands) {
        if (c.sens <= 3.0 * best + 1e-12) {
            clamped.push_back(std::clamp(c.chi_raw, 0.0, 1.0));
            raw.push_back(c.chi_raw);
        }
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t k = v.size();
        return (k % 2 == 1) ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
    };
    if (unclamped) *unclamped = median(raw);
    return median(clamped);
}

using LogEvaluator = double (*)(const CopulaSpec&, const Vector&, double);

ChiResult empirical_impl(const CopulaSpec& spec, const LambdaVector& lambda,
                         const std::vector<double>& us, double accuracy, LogEvaluator eval) {
    lambda.validate();
    validate(spec);
    check_sequence(us);
    if (!(accuracy > 0.0)) throw DomainError("chi_empirical: accuracy must be > 0");

    const double lmax = lambda.max();
    ChiResult res;
    res.method = ChiMethod::Empirical;
    std::vector<double> hs;
    for (double u : us) {
        const double lnu = std::log(u);
        const Vector log_u = lambda.lambda * lnu;
        const double lnC = eval(spec, log_u, accuracy * 1e-3);
        if (!(lnC < 0.0)) throw SequenceNotConverging("empirical chi: ln C not negative");
        const double r = lmax * lnu / lnC;
        res.diagnostics.log_u.push_back(lnu);
        res.diagnostics.ratios.push_back(r);
        hs.push_back(-1.0 / lnu);
    }
    // fit on the deepest points; keep at most 10
    const std::size_t keep = std::min<std::size_t>(hs.size(), 10);
    std::vector<double> hfit(hs.end() - static_cast<std::ptrdiff_t>(keep), hs.end());
    std::vector<double> rinv;
    for (std::size_t i = res.diagnostics.ratios.size() - keep; i < res.diagnostics.ratios.size();
         ++i) {
        rinv.push_back(1.0 / res.diagnostics.ratios[i]);
    }
    double raw_ext = 0.0;
    const double ext = extrapolate_chi(hfit, rinv, &raw_ext);
    // successive-extrapolant stability: redo the whole selection without the
    // deepest point
    std::vector<double> h2(hfit.begin(), hfit.end() - 1);
    std::vector<double> r2(rinv.begin(), rinv.end() - 1);
    const double ext2 = extrapolate_chi(h2, r2);
    if (std::abs(ext - ext2) > 10.0 * accuracy) {
        throw SequenceNotConverging("empirical chi: extrapolants differ by " +
                                    std::to_string(std::abs(ext - ext2)));
    }
    res.diagnostics.raw_last = res.diagnostics.ratios.back();
    res.diagnostics.extrapolated = raw_ext;
    res.value = std::clamp(ext, 0.0, 1.0);
    return res;
}

} // namespace

ChiResult chi_empirical(const CopulaSpec& spec, const LambdaVector& lambda,
                        const std::vector<double>& u_sequence, double accuracy) {
    return empirical_impl(spec, lambda, u_sequence, accuracy,
                          [](const CopulaSpec& s, const Vector& lu, double acc) {
                              return copula_log_cdf(s, lu, acc);
                          });
}

ChiResult chi_upper_empirical(const CopulaSpec& spec, const LambdaVector& lambda,
                              const std::vector<double>& u_sequence, double accuracy) {
    return empirical_impl(spec, lambda, u_sequence, accuracy,
                          [](const CopulaSpec& s, const Vector& lu, double acc) {
                              return survival_copula_log_cdf(s, lu, acc);
                          });
}

double lambda_L(const CopulaSpec& spec, const std::vector<double>& u_sequence, std::size_t n) {
    validate(spec);
    check_sequence(u_sequence);
    if (n == 0) n = copula_dim(spec);
    if (n == 0) n = 2;

    double prev = std::numeric_limits<double>::quiet_NaN();
    double last = 0.0;
    for (double u : u_sequence) {
        const double lnu = std::log(u);
        const Vector log_u = Vector::Constant(static_cast<Eigen::Index>(n), lnu);
        prev = last;
        last = std::exp(copula_log_cdf(spec, log_u, 1e-10) - lnu);
    }
    if (std::abs(last - prev) > 1e-2) {
        throw SequenceNotConverging("lambda_L: sequence still moving by " +
                                    std::to_string(std::abs(last - prev)));
    }
    // Archimedean cross-check: lambda_L = lim phi^{-1}(n t)/phi^{-1}(t)
    if (const auto* a = std::get_if<ArchimedeanCopula>(&spec)) {
        const double t = generator_phi_from_log(a->gen, std::log(u_sequence.back()));
        const double ratio = std::exp(generator_log_phi_inv(a->gen, static_cast<double>(n) * t) -
                                      generator_log_phi_inv(a->gen, t));
        if (std::abs(ratio - last) > 1e-3) {
            throw SequenceNotConverging("lambda_L: generator-ratio form disagrees (" +
                                        std::to_string(ratio) + " vs " + std::to_string(last) +
                                        ")");
        }
    }
    return last;
}

} // namespace taildep
