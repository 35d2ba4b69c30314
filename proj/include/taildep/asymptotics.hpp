#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "taildep/copula.hpp"
#include "taildep/matrix.hpp"
#include "taildep/wtdf.hpp"

namespace taildep {

// ---------------------------------------------------------------------------
// deterministic RNG
// ---------------------------------------------------------------------------

// mt19937_64 stream with inverse-CDF normals so draws are reproducible
// bit-for-bit for a fixed (seed, worker) pair regardless of the standard
// library's distribution implementations.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t worker = 0);
    double uniform();           // (0,1)
    double normal();            // inverse-CDF
    double exponential(double rate = 1.0);
    double gamma(double shape); // Marsaglia-Tsang
    // positive stable with index alpha in (0,1), Laplace transform e^{-t^alpha}
    double positive_stable(double alpha);

  private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// margins and samplers
// ---------------------------------------------------------------------------

// Marginal law described through its log-CDF / log-survival (for the slope
// denominators of the limit theorems) and quantile (for sampling).
struct MarginSpec {
    std::string name;
    std::function<double(double)> log_cdf;
    std::function<double(double)> log_survival;
    std::function<double(double)> quantile; // u in (0,1) -> x
    double lambda_slope = 1.0;              // lambda_k with ln F_k ~ lambda_k ln F_0
    bool slow_varying = true;               // ln F_k slowly varying at the relevant end
};

MarginSpec uniform_margin();
MarginSpec exponential_margin(double rate = 1.0);

// Joint sampler producing one vector per call; dim fixed.
struct JointSampler {
    int dim = 0;
    std::function<void(Rng&, Vector&)> draw;
};

// Built-in copula samplers (uniform marginals).
JointSampler independence_sampler(int dim);
JointSampler comonotone_sampler(int dim);
JointSampler gaussian_copula_sampler(const CorrelationMatrix& R);
// Marshall-Olkin frailty sampling: V ~ Gamma(1/theta) for Clayton,
// positive stable(1/theta) for Gumbel; U_i = psi(E_i / V).
JointSampler clayton_sampler(double theta, int dim);
JointSampler gumbel_sampler(double theta, int dim);
// sqrt(Z) Y with Z ~ exponential(theta), mapped to uniforms by the mixture
// marginal CDF.
JointSampler gaussian_mixture_sampler(const CorrelationMatrix& R, double theta);
JointSampler sampler_for(const CopulaSpec& spec, int dim);

// Compose a copula sampler with marginal quantiles.
JointSampler with_margins(const JointSampler& copula_sampler,
                          const std::vector<MarginSpec>& margins);

// ---------------------------------------------------------------------------
// functionals and tail curves
// ---------------------------------------------------------------------------

struct FunctionalRegion {
    enum class Kind { MinAbove, MaxBelow, SumBelow, RegionLower, RegionUpper };
    Kind kind = Kind::MaxBelow;
    // Region variants: membership test for A plus the sandwich box bounds,
    // [0,k]^n subset A subset [0,K]^n (lower) or [K,inf)^n subset A subset
    // [k,inf)^n (upper)
    std::function<bool(const Vector&)> contains;
    double inner_k = 0.0;
    double outer_K = 0.0;

    static FunctionalRegion min_above();
    static FunctionalRegion max_below();
    static FunctionalRegion sum_below();
    static FunctionalRegion region_lower(std::function<bool(const Vector&)> contains,
                                         double inner_k, double outer_K);
    static FunctionalRegion region_upper(std::function<bool(const Vector&)> contains,
                                         double inner_k, double outer_K);
    // tail direction: true if smaller thresholds are deeper in the tail
    bool threshold_decreases() const {
        return kind != Kind::MinAbove && kind != Kind::RegionUpper;
    }
};

// x in t*A (RegionLower) or the corresponding comparison for min/max/sum.
bool region_indicator(const FunctionalRegion& f, const Vector& x, double t);

struct TailCurveRow {
    double threshold = 0.0;
    double p_hat = 0.0;
    double stderr_ = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t samples = 0;
};

struct TailCurve {
    std::vector<TailCurveRow> rows;
    std::uint64_t seed = 0;
    std::uint64_t samples = 0;
    int workers = 1;
    std::string metadata;

    // CSV: header threshold,p_hat,stderr,hits,samples; 17 significant digits
    std::string to_csv() const;
};

// Estimate P[functional passes threshold] for every threshold on one shared
// sample stream. Deterministic for fixed (seed, samples, workers): worker w
// draws its own substream seeded from (seed, w) over a fixed index range and
// counts are merged in worker order.
TailCurve mc_tail_curve(const JointSampler& sampler, const FunctionalRegion& functional,
                        const std::vector<double>& thresholds, std::uint64_t samples,
                        std::uint64_t seed, int workers = 1);

// ---------------------------------------------------------------------------
// slope fitting and the limit-theorem check
// ---------------------------------------------------------------------------

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    std::size_t rows_used = 0;
};

// OLS of ln p_hat against ln t over rows with hits >= min_hits.
SlopeFit fit_log_slope(const TailCurve& curve, std::uint64_t min_hits = 20);
// OLS of ln p_hat against caller-supplied abscissae (e.g. the marginal
// log-probabilities the limit theorems divide by).
SlopeFit fit_log_slope_vs(const TailCurve& curve, const std::vector<double>& xs,
                          std::uint64_t min_hits = 20);

// 1 / chi; +infinity when chi = 0 (the distinguished-divergence case).
double predicted_inverse_chi(const ChiResult& chi);

struct TheoremReport {
    ChiResult chi;
    double predicted = 0.0; // 1/chi
    SlopeFit fitted;
    double agreement = 0.0; // fitted.slope / predicted
    TailCurve curve;
};

struct McConfig {
    std::vector<double> thresholds;
    std::uint64_t samples = 1000000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::uint64_t min_hits = 20;
};

// Run the Monte Carlo tail curve for the functional under the given copula
// and margins, fit ln p_hat against min_i ln P[X_i in tail], and compare the
// slope with the predicted 1/chi (chi-bar for upper-tail functionals).
TheoremReport theorem_check(const CopulaSpec& spec, const std::vector<MarginSpec>& margins,
                            const FunctionalRegion& functional, const McConfig& config);

} // namespace taildep
