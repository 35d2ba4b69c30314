#include "taildep/asymptotics.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <thread>

#include "taildep/errors.hpp"
#include "taildep/normal.hpp"

namespace taildep {

// ---------------------------------------------------------------------------
// Rng
// ---------------------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t worker)
    : engine_(splitmix64(splitmix64(seed) ^ splitmix64(worker * 0x9e3779b97f4a7c15ull + 1))) {}

double Rng::uniform() {
    // 53-bit mantissa, strictly inside (0,1)
    const std::uint64_t r = engine_();
    return (static_cast<double>(r >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::exponential(double rate) { return -std::log(uniform()) / rate; }

double Rng::gamma(double shape) {
    if (shape < 1.0) {
        // boost to shape+1 and scale back
        const double u = uniform();
        return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double Rng::positive_stable(double alpha) {
    // Chambers-Mallows-Stuck for one-sided stable, Laplace transform e^{-t^alpha}
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("positive_stable: alpha in (0,1)");
    const double w = M_PI * uniform(); // Uniform(0, pi)
    const double e = exponential();
    const double s = std::sin(alpha * w) / std::pow(std::sin(w), 1.0 / alpha) *
                     std::pow(std::sin((1.0 - alpha) * w) / e, (1.0 - alpha) / alpha);
    return s;
}

// ---------------------------------------------------------------------------
// margins
// ---------------------------------------------------------------------------

MarginSpec uniform_margin() {
    MarginSpec m;
    m.name = "uniform";
    m.log_cdf = [](double x) {
        if (x <= 0.0) return -std::numeric_limits<double>::infinity();
        return x >= 1.0 ? 0.0 : std::log(x);
    };
    m.log_survival = [](double x) {
        if (x >= 1.0) return -std::numeric_limits<double>::infinity();
        return x <= 0.0 ? 0.0 : std::log1p(-x);
    };
    m.quantile = [](double u) { return u; };
    m.lambda_slope = 1.0;
    m.slow_varying = true; // ln F(x) = ln x is slowly varying at zero
    return m;
}

MarginSpec exponential_margin(double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential_margin: rate must be > 0");
    MarginSpec m;
    m.name = "exponential";
    m.log_cdf = [rate](double x) {
        if (x <= 0.0) return -std::numeric_limits<double>::infinity();
        return std::log(-std::expm1(-rate * x));
    };
    m.log_survival = [rate](double x) { return x <= 0.0 ? 0.0 : -rate * x; };
    m.quantile = [rate](double u) { return -std::log1p(-u) / rate; };
    m.lambda_slope = 1.0;
    m.slow_varying = false; // exponential upper tail is not slowly varying
    return m;
}

// ---------------------------------------------------------------------------
// samplers
// ---------------------------------------------------------------------------

JointSampler independence_sampler(int dim) {
    JointSampler s;
    s.dim = dim;
    s.draw = [dim](Rng& rng, Vector& out) {
        for (int i = 0; i < dim; ++i) out(i) = rng.uniform();
    };
    return s;
}

JointSampler comonotone_sampler(int dim) {
    JointSampler s;
    s.dim = dim;
    s.draw = [dim](Rng& rng, Vector& out) {
        const double u = rng.uniform();
        for (int i = 0; i < dim; ++i) out(i) = u;
    };
    return s;
}

JointSampler gaussian_copula_sampler(const CorrelationMatrix& R) {
    R.require_positive_definite();
    const Matrix L = Eigen::LLT<Matrix>(R.mat()).matrixL();
    const int dim = static_cast<int>(R.dim());
    JointSampler s;
    s.dim = dim;
    s.draw = [L, dim](Rng& rng, Vector& out) {
        Vector z(dim);
        for (int i = 0; i < dim; ++i) z(i) = rng.normal();
        const Vector x = L * z;
        for (int i = 0; i < dim; ++i) out(i) = norm_cdf(x(i));
    };
    return s;
}

JointSampler clayton_sampler(double theta, int dim) {
    if (!(theta > 0.0)) throw DomainError("clayton_sampler: theta must be > 0");
    JointSampler s;
    s.dim = dim;
    s.draw = [theta, dim](Rng& rng, Vector& out) {
        const double v = rng.gamma(1.0 / theta);
        for (int i = 0; i < dim; ++i) {
            const double e = rng.exponential();
            out(i) = std::pow(1.0 + e / v, -1.0 / theta);
        }
    };
    return s;
}

JointSampler gumbel_sampler(double theta, int dim) {
    if (!(theta >= 1.0)) throw DomainError("gumbel_sampler: theta must be >= 1");
    JointSampler s;
    s.dim = dim;
    if (theta == 1.0) return independence_sampler(dim);
    s.draw = [theta, dim](Rng& rng, Vector& out) {
        const double v = rng.positive_stable(1.0 / theta);
        for (int i = 0; i < dim; ++i) {
            const double e = rng.exponential();
            out(i) = std::exp(-std::pow(e / v, 1.0 / theta));
        }
    };
    return s;
}

JointSampler gaussian_mixture_sampler(const CorrelationMatrix& R, double theta) {
    if (!(theta > 0.0)) throw DomainError("gaussian_mixture_sampler: theta must be > 0");
    R.require_positive_definite();
    const Matrix L = Eigen::LLT<Matrix>(R.mat()).matrixL();
    const int dim = static_cast<int>(R.dim());
    JointSampler s;
    s.dim = dim;
    s.draw = [L, dim, theta](Rng& rng, Vector& out) {
        const double z = rng.exponential(theta);
        Vector g(dim);
        for (int i = 0; i < dim; ++i) g(i) = rng.normal();
        const Vector x = std::sqrt(z) * (L * g);
        for (int i = 0; i < dim; ++i) {
            out(i) = std::exp(gaussian_mixture_marginal_log_cdf(theta, x(i), 1e-8));
        }
    };
    return s;
}

JointSampler sampler_for(const CopulaSpec& spec, int dim) {
    struct V {
        int dim;
        JointSampler operator()(const IndependenceCopula&) const {
            return independence_sampler(dim);
        }
        JointSampler operator()(const ComonotoneCopula&) const { return comonotone_sampler(dim); }
        JointSampler operator()(const GaussianCopula& g) const {
            return gaussian_copula_sampler(g.R);
        }
        JointSampler operator()(const ArchimedeanCopula& a) const {
            switch (a.gen.family) {
            case GeneratorFamily::Gumbel: return gumbel_sampler(a.gen.theta, dim);
            case GeneratorFamily::Clayton: return clayton_sampler(a.gen.theta, dim);
            case GeneratorFamily::CustomSlow:
                throw DomainError("no sampler for the CustomSlow generator");
            }
            throw DomainError("unknown generator family");
        }
        JointSampler operator()(const GumbelEvCopula& e) const {
            return gumbel_sampler(e.theta, dim);
        }
        JointSampler operator()(const GaussianMixtureCopula& m) const {
            return gaussian_mixture_sampler(m.R, m.theta);
        }
    };
    const std::size_t fixed = copula_dim(spec);
    if (fixed != 0) dim = static_cast<int>(fixed);
    if (dim < 1) throw DomainError("sampler_for: dimension required");
    return std::visit(V{dim}, spec);
}

JointSampler with_margins(const JointSampler& copula_sampler,
                          const std::vector<MarginSpec>& margins) {
    if (static_cast<int>(margins.size()) != copula_sampler.dim) {
        throw DomainError("with_margins: one margin per coordinate required");
    }
    std::vector<std::function<double(double)>> qs;
    qs.reserve(margins.size());
    for (const auto& m : margins) qs.push_back(m.quantile);
    JointSampler s;
    s.dim = copula_sampler.dim;
    const auto base = copula_sampler.draw;
    s.draw = [base, qs](Rng& rng, Vector& out) {
        base(rng, out);
        for (std::size_t i = 0; i < qs.size(); ++i) {
            out(static_cast<Eigen::Index>(i)) = qs[i](out(static_cast<Eigen::Index>(i)));
        }
    };
    return s;
}

// ---------------------------------------------------------------------------
// functionals
// ---------------------------------------------------------------------------

FunctionalRegion FunctionalRegion::min_above() {
    FunctionalRegion f;
    f.kind = Kind::MinAbove;
    return f;
}
FunctionalRegion FunctionalRegion::max_below() {
    FunctionalRegion f;
    f.kind = Kind::MaxBelow;
    return f;
}
FunctionalRegion FunctionalRegion::sum_below() {
    FunctionalRegion f;
    f.kind = Kind::SumBelow;
    return f;
}
FunctionalRegion FunctionalRegion::region_lower(std::function<bool(const Vector&)> contains,
                                                double inner_k, double outer_K) {
    if (!(inner_k > 0.0 && outer_K > inner_k)) {
        throw DomainError("region_lower: need 0 < k < K");
    }
    FunctionalRegion f;
    f.kind = Kind::RegionLower;
    f.contains = std::move(contains);
    f.inner_k = inner_k;
    f.outer_K = outer_K;
    return f;
}

FunctionalRegion FunctionalRegion::region_upper(std::function<bool(const Vector&)> contains,
                                                double inner_k, double outer_K) {
    if (!(inner_k > 0.0 && outer_K > inner_k)) {
        throw DomainError("region_upper: need 0 < k < K");
    }
    FunctionalRegion f;
    f.kind = Kind::RegionUpper;
    f.contains = std::move(contains);
    f.inner_k = inner_k;
    f.outer_K = outer_K;
    return f;
}

bool region_indicator(const FunctionalRegion& f, const Vector& x, double t) {
    switch (f.kind) {
    case FunctionalRegion::Kind::MinAbove: return x.minCoeff() >= t;
    case FunctionalRegion::Kind::MaxBelow: return x.maxCoeff() <= t;
    case FunctionalRegion::Kind::SumBelow: return x.sum() <= t;
    case FunctionalRegion::Kind::RegionLower:
    case FunctionalRegion::Kind::RegionUpper: return f.contains(x / t);
    }
    return false;
}

// ---------------------------------------------------------------------------
// tail curves
// ---------------------------------------------------------------------------

std::string TailCurve::to_csv() const {
    std::string out = "threshold,p_hat,stderr,hits,samples\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%llu,%llu\n", r.threshold, r.p_hat,
                      r.stderr_, static_cast<unsigned long long>(r.hits),
                      static_cast<unsigned long long>(r.samples));
        out += buf;
    }
    return out;
}

TailCurve mc_tail_curve(const JointSampler& sampler, const FunctionalRegion& functional,
                        const std::vector<double>& thresholds, std::uint64_t samples,
                        std::uint64_t seed, int workers) {
    if (thresholds.empty()) throw DomainError("mc_tail_curve: no thresholds");
    if (samples < 10000) throw DomainError("mc_tail_curve: at least 1e4 samples required");
    if (workers < 1) throw DomainError("mc_tail_curve: workers must be >= 1");
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        const bool ok = functional.threshold_decreases() ? thresholds[i] < thresholds[i - 1]
                                                         : thresholds[i] > thresholds[i - 1];
        if (!ok) throw DomainError("mc_tail_curve: thresholds must move into the tail");
    }

    const std::size_t nt = thresholds.size();
    std::vector<std::vector<std::uint64_t>> counts(static_cast<std::size_t>(workers),
                                                   std::vector<std::uint64_t>(nt, 0));
    auto run_worker = [&](int w) {
        Rng rng(seed, static_cast<std::uint64_t>(w));
        const std::uint64_t lo = samples * static_cast<std::uint64_t>(w) /
                                 static_cast<std::uint64_t>(workers);
        const std::uint64_t hi = samples * static_cast<std::uint64_t>(w + 1) /
                                 static_cast<std::uint64_t>(workers);
        Vector x(sampler.dim);
        auto& c = counts[static_cast<std::size_t>(w)];
        for (std::uint64_t i = lo; i < hi; ++i) {
            sampler.draw(rng, x);
            switch (functional.kind) {
            case FunctionalRegion::Kind::MinAbove: {
                const double v = x.minCoeff();
                for (std::size_t t = 0; t < nt; ++t) {
                    if (v >= thresholds[t]) {
                        ++c[t];
                    } else {
                        break; // thresholds increase; deeper ones also fail
                    }
                }
                break;
            }
            case FunctionalRegion::Kind::MaxBelow:
            case FunctionalRegion::Kind::SumBelow: {
                const double v = functional.kind == FunctionalRegion::Kind::MaxBelow
                                     ? x.maxCoeff()
                                     : x.sum();
                for (std::size_t t = 0; t < nt; ++t) {
                    if (v <= thresholds[t]) {
                        ++c[t];
                    } else {
                        break;
                    }
                }
                break;
            }
            case FunctionalRegion::Kind::RegionLower:
            case FunctionalRegion::Kind::RegionUpper: {
                for (std::size_t t = 0; t < nt; ++t) {
                    if (functional.contains(x / thresholds[t])) ++c[t];
                }
                break;
            }
            }
        }
    };

    if (workers == 1) {
        run_worker(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker, w);
        for (auto& t : pool) t.join();
    }

    TailCurve curve;
    curve.seed = seed;
    curve.samples = samples;
    curve.workers = workers;
    curve.rows.resize(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        std::uint64_t h = 0;
        for (int w = 0; w < workers; ++w) h += counts[static_cast<std::size_t>(w)][t];
        auto& r = curve.rows[t];
        r.threshold = thresholds[t];
        r.hits = h;
        r.samples = samples;
        r.p_hat = static_cast<double>(h) / static_cast<double>(samples);
        r.stderr_ = std::sqrt(r.p_hat * (1.0 - r.p_hat) / static_cast<double>(samples));
    }
    return curve;
}

// ---------------------------------------------------------------------------
// fits
// ---------------------------------------------------------------------------

namespace {

SlopeFit ols(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    if (n < 3) throw InsufficientData("slope fit needs at least 3 usable rows");
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw InsufficientData("slope fit: degenerate abscissae");
    SlopeFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
    f.rows_used = n;
    return f;
}

} // namespace

SlopeFit fit_log_slope(const TailCurve& curve, std::uint64_t min_hits) {
    std::vector<double> xs, ys;
    for (const auto& r : curve.rows) {
        if (r.hits >= min_hits && r.threshold > 0.0) {
            xs.push_back(std::log(r.threshold));
            ys.push_back(std::log(r.p_hat));
        }
    }
    return ols(xs, ys);
}

SlopeFit fit_log_slope_vs(const TailCurve& curve, const std::vector<double>& xs,
                          std::uint64_t min_hits) {
    if (xs.size() != curve.rows.size()) {
        throw DomainError("fit_log_slope_vs: one abscissa per curve row required");
    }
    std::vector<double> fx, fy;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (curve.rows[i].hits >= min_hits) {
            fx.push_back(xs[i]);
            fy.push_back(std::log(curve.rows[i].p_hat));
        }
    }
    return ols(fx, fy);
}

double predicted_inverse_chi(const ChiResult& chi) {
    if (chi.value == 0.0) return std::numeric_limits<double>::infinity();
    if (!(chi.value > 0.0)) throw DomainError("predicted_inverse_chi: chi must be >= 0");
    return 1.0 / chi.value;
}

// ---------------------------------------------------------------------------
// theorem check
// ---------------------------------------------------------------------------

TheoremReport theorem_check(const CopulaSpec& spec, const std::vector<MarginSpec>& margins,
                            const FunctionalRegion& functional, const McConfig& config) {
    if (margins.empty()) throw DomainError("theorem_check: margins required");
    const bool upper = functional.kind == FunctionalRegion::Kind::MinAbove ||
                       functional.kind == FunctionalRegion::Kind::RegionUpper;
    if (upper && !is_radially_symmetric(spec)) {
        // the prediction for upper-tail functionals is 1/chi-bar of the
        // survival copula, which only coincides with the lower-tail closed
        // form under radial symmetry
        throw DomainError("theorem_check: upper-tail functionals require a radially "
                          "symmetric copula family");
    }
    if (functional.kind != FunctionalRegion::Kind::MinAbove &&
        functional.kind != FunctionalRegion::Kind::MaxBelow) {
        // Sum / Region variants additionally need slowly varying log-margins
        for (const auto& m : margins) {
            if (!m.slow_varying) {
                throw DomainError("theorem_check: sum/region functionals require slowly "
                                  "varying log-margins");
            }
        }
    }

    Vector lam(static_cast<Eigen::Index>(margins.size()));
    for (std::size_t i = 0; i < margins.size(); ++i) {
        lam(static_cast<Eigen::Index>(i)) = margins[i].lambda_slope;
    }
    LambdaVector lambda{lam};

    TheoremReport rep;
    // chi of the survival copula for upper-tail functionals; all built-in
    // families here are radially symmetric or the caller passes lower
    // functionals, so the closed form applies to both tails.
    rep.chi = chi_closed_form(spec, lambda);
    rep.predicted = predicted_inverse_chi(rep.chi);

    auto sampler = with_margins(sampler_for(spec, static_cast<int>(margins.size())), margins);
    rep.curve = mc_tail_curve(sampler, functional, config.thresholds, config.samples, config.seed,
                              config.workers);
    std::ostringstream meta;
    meta << "copula=" << family_name(spec) << " margins=";
    for (std::size_t i = 0; i < margins.size(); ++i) meta << (i ? "," : "") << margins[i].name;
    rep.curve.metadata = meta.str();

    // abscissa: min_i ln P[X_i in tail at t]
    std::vector<double> xs;
    xs.reserve(config.thresholds.size());
    for (double t : config.thresholds) {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& mg : margins) {
            const double lp = upper ? mg.log_survival(t) : mg.log_cdf(t);
            m = std::min(m, lp);
        }
        xs.push_back(m);
    }
    rep.fitted = fit_log_slope_vs(rep.curve, xs, config.min_hits);
    rep.agreement = rep.fitted.slope / rep.predicted;
    return rep;
}

} // namespace taildep
