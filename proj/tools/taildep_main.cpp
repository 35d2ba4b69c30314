// taildep command-line front end: closed-form and empirical weak tail
// dependence, simplex/polytope optimizations, Monte Carlo tail curves with
// slope fits, and the Black-Scholes option-portfolio study.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include "taildep/asymptotics.hpp"
#include "taildep/bs_portfolio.hpp"
#include "taildep/copula.hpp"
#include "taildep/simplex_opt.hpp"
#include "taildep/wtdf.hpp"

using nlohmann::json;
using namespace taildep;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw DomainError("expected a comma-separated list of numbers");
    return out;
}

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open matrix file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        for (char& c : line) {
            if (c == ';' || c == '\t' || c == ' ') c = ',';
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) row.push_back(std::stod(tok));
        }
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DomainError("matrix file is empty: " + path);
    const auto n = rows.size();
    Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw DomainError("matrix file must be square");
        for (std::size_t j = 0; j < n; ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::ios_base::failure("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::ios_base::failure("cannot open output file: " + path);
    out << content;
    if (!out) throw std::ios_base::failure("failed writing: " + path);
}

// Copula selection shared by `chi` and `tail-mc`: either a JSON spec file or
// family flags; flags override the file's parameters when both are given.
struct CopulaCliOptions {
    std::string config_path;
    std::string family;
    double rho = std::numeric_limits<double>::quiet_NaN();
    double theta = std::numeric_limits<double>::quiet_NaN();
    std::string corr_file;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "JSON file with {\"family\":..., \"params\":...}");
        cmd->add_option("--family", family,
                        "independence|comonotone|gaussian|gumbel|clayton|customslow|"
                        "gumbel-ev|gaussian-mixture");
        cmd->add_option("--rho", rho, "bivariate correlation (gaussian / gaussian-mixture)");
        cmd->add_option("--theta", theta, "family parameter");
        cmd->add_option("--corr-file", corr_file, "CSV correlation matrix (gaussian families)");
    }

    CopulaSpec resolve() const {
        json j;
        if (!config_path.empty()) j = read_json_file(config_path);
        if (!family.empty()) j["family"] = family;
        if (!j.contains("params")) j["params"] = json::object();
        if (!std::isnan(theta)) j["params"]["theta"] = theta;
        if (!corr_file.empty()) {
            const Matrix m = read_matrix_csv(corr_file);
            json rows = json::array();
            for (Eigen::Index i = 0; i < m.rows(); ++i) {
                json row = json::array();
                for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
                rows.push_back(std::move(row));
            }
            j["params"]["R"] = std::move(rows);
        } else if (!std::isnan(rho) && !j["params"].contains("R")) {
            j["params"]["R"] = {{1.0, rho}, {rho, 1.0}};
        }
        if (!j.contains("family")) throw DomainError("no copula family given (--family/--config)");
        auto spec = copula_from_json(j);
        validate(spec);
        return spec;
    }
};

int run_chi(const CopulaCliOptions& cop, const std::string& lambda_csv, const std::string& method,
            const std::string& useq_csv, double accuracy, bool as_json) {
    const auto spec = cop.resolve();
    LambdaVector lambda{to_vector(parse_list(lambda_csv))};
    lambda.validate();

    std::optional<ChiResult> closed, empirical;
    if (method == "closed" || method == "both") closed = chi_closed_form(spec, lambda);
    if (method == "empirical" || method == "both") {
        const auto useq = useq_csv.empty() ? default_u_sequence(spec) : parse_list(useq_csv);
        empirical = chi_empirical(spec, lambda, useq, accuracy);
    }
    if (!closed && !empirical) throw DomainError("--method must be closed, empirical or both");

    if (as_json) {
        json out;
        out["family"] = family_name(spec);
        out["lambda"] = std::vector<double>(lambda.lambda.data(),
                                            lambda.lambda.data() + lambda.lambda.size());
        if (closed) out["closed"] = closed->value;
        if (empirical) {
            out["empirical"] = empirical->value;
            out["raw_last"] = empirical->diagnostics.raw_last;
            out["extrapolated"] = empirical->diagnostics.extrapolated;
            out["ratios"] = empirical->diagnostics.ratios;
            out["log_u"] = empirical->diagnostics.log_u;
        }
        if (closed && empirical) out["discrepancy"] = std::abs(closed->value - empirical->value);
        std::printf("%s\n", out.dump(2).c_str());
        return 0;
    }
    std::printf("family: %s\n", family_name(spec).c_str());
    if (closed) std::printf("chi (closed form)  = %.12g\n", closed->value);
    if (empirical) {
        std::printf("chi (empirical)    = %.12g\n", empirical->value);
        std::printf("  raw last ratio   = %.12g\n", empirical->diagnostics.raw_last);
        std::printf("  extrapolated     = %.12g\n", empirical->diagnostics.extrapolated);
        std::printf("  sequence         =");
        for (std::size_t i = 0; i < empirical->diagnostics.ratios.size(); ++i) {
            std::printf(" r(e^%.4g)=%.6g", empirical->diagnostics.log_u[i],
                        empirical->diagnostics.ratios[i]);
        }
        std::printf("\n");
    }
    if (closed && empirical) {
        std::printf("discrepancy        = %.3g\n", std::abs(closed->value - empirical->value));
    }
    return 0;
}

int run_optimize(const std::string& matrix_path, double rho, const std::string& kind, double tol,
                 double theta, const std::string& mu_csv, const std::string& lambda_csv,
                 bool oracle, int resolution, bool as_json) {
    Matrix m;
    if (!matrix_path.empty()) {
        m = read_matrix_csv(matrix_path);
    } else {
        m = correlation2(rho).mat();
    }
    const SymMatrix S(m);
    json out;
    if (kind == "simplex-qp") {
        const auto res = min_quadratic_on_simplex(S, tol);
        out["value"] = res.value;
        out["argmin"] = std::vector<double>(res.argmin.w.data(),
                                            res.argmin.w.data() + res.argmin.w.size());
        out["kkt_residual"] = res.kkt_residual;
        out["iterations"] = res.iterations;
        if (oracle) out["oracle_value"] = brute_force_simplex_min(S, resolution);
    } else if (kind == "cstar") {
        const Vector mu = mu_csv.empty() ? Vector(Vector::Zero(m.rows()))
                                         : to_vector(parse_list(mu_csv));
        out["value"] = c_star_theta(S, mu, theta, tol);
    } else if (kind == "mixture") {
        const Vector mu = mu_csv.empty() ? Vector(Vector::Zero(m.rows()))
                                         : to_vector(parse_list(mu_csv));
        const Vector lam = lambda_csv.empty() ? Vector(Vector::Ones(m.rows()))
                                              : to_vector(parse_list(lambda_csv));
        MixtureParams params{S, mu, theta, lam};
        out["value"] = mixture_polytope_min(params, tol);
        out["chi"] = lam.maxCoeff() * out["value"].get<double>();
    } else {
        throw DomainError("--kind must be simplex-qp, cstar or mixture");
    }
    if (as_json) {
        std::printf("%s\n", out.dump(2).c_str());
        return 0;
    }
    std::printf("kind          = %s\n", kind.c_str());
    std::printf("value         = %.15g\n", out["value"].get<double>());
    if (out.contains("argmin")) {
        std::printf("argmin        =");
        for (double w : out["argmin"].get<std::vector<double>>()) std::printf(" %.12g", w);
        std::printf("\n");
        std::printf("kkt residual  = %.3g\n", out["kkt_residual"].get<double>());
    }
    if (out.contains("oracle_value")) {
        std::printf("grid oracle   = %.15g\n", out["oracle_value"].get<double>());
        std::printf("difference    = %.3g\n",
                    std::abs(out["oracle_value"].get<double>() - out["value"].get<double>()));
    }
    if (out.contains("chi")) std::printf("chi           = %.15g\n", out["chi"].get<double>());
    return 0;
}

std::vector<double> threshold_grid(const std::string& csv, double from, double to, int count,
                                   bool decreasing) {
    std::vector<double> ts;
    if (!csv.empty()) {
        ts = parse_list(csv);
    } else {
        for (int i = 0; i < count; ++i) {
            ts.push_back(from * std::pow(to / from, static_cast<double>(i) / (count - 1)));
        }
    }
    std::sort(ts.begin(), ts.end());
    if (decreasing) std::reverse(ts.begin(), ts.end());
    return ts;
}

int run_tail_mc(const CopulaCliOptions& cop, const std::string& margins_csv,
                const std::string& functional, const std::string& thresholds_csv, double t_from,
                double t_to, int t_count, std::uint64_t samples, std::uint64_t seed, int workers,
                std::uint64_t min_hits, const std::string& out_path) {
    const auto spec = cop.resolve();

    FunctionalRegion func;
    if (functional == "min") {
        func = FunctionalRegion::min_above();
    } else if (functional == "max") {
        func = FunctionalRegion::max_below();
    } else if (functional == "sum") {
        func = FunctionalRegion::sum_below();
    } else {
        throw DomainError("--functional must be min, max or sum");
    }

    std::vector<MarginSpec> margins;
    {
        std::stringstream ss(margins_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok == "uniform") {
                margins.push_back(uniform_margin());
            } else if (tok == "exponential") {
                margins.push_back(exponential_margin());
            } else {
                throw DomainError("unknown margin: " + tok);
            }
        }
    }
    if (margins.size() == 1) margins.push_back(margins.front());
    if (margins.empty()) throw DomainError("--margins required");

    McConfig cfg;
    cfg.thresholds = threshold_grid(thresholds_csv, t_from, t_to, t_count,
                                    func.threshold_decreases());
    cfg.samples = samples;
    cfg.seed = seed;
    cfg.workers = workers;
    cfg.min_hits = min_hits;

    const auto rep = theorem_check(spec, margins, func, cfg);
    if (!out_path.empty()) write_file(out_path, rep.curve.to_csv());

    std::printf("chi (closed form)   = %.12g\n", rep.chi.value);
    std::printf("predicted 1/chi     = %.12g\n", rep.predicted);
    std::printf("fitted slope        = %.12g (r^2 = %.6f, rows %zu)\n", rep.fitted.slope,
                rep.fitted.r_squared, rep.fitted.rows_used);
    std::printf("agreement ratio     = %.6f\n", rep.agreement);
    if (!out_path.empty()) std::printf("curve written to    = %s\n", out_path.c_str());
    return 0;
}

int run_bs_portfolio(const std::string& config_path, const std::string& thresholds_csv,
                     double z_from, double z_to, int z_count, std::uint64_t samples,
                     std::uint64_t seed, int workers, std::uint64_t min_hits, bool hrv,
                     const std::string& out_prefix) {
    const auto spec = portfolio_from_json(read_json_file(config_path));
    const double predicted = predicted_portfolio_slope(spec);

    const auto zs = threshold_grid(thresholds_csv, z_from, z_to, z_count, true);
    const auto curve = portfolio_tail_curve(spec, zs, samples, seed, workers);
    const auto fit = fit_log_slope(curve, min_hits);

    std::printf("predicted slope = %.12g\n", predicted);
    std::printf("fitted slope    = %.12g (r^2 = %.6f, rows %zu)\n", fit.slope, fit.r_squared,
                fit.rows_used);

    if (!out_prefix.empty()) {
        write_file(out_prefix + ".csv", curve.to_csv());
        // anchor the reference line at the deepest usable row
        double az = zs.front(), ap = curve.rows.front().p_hat;
        for (std::size_t i = 0; i < curve.rows.size(); ++i) {
            if (curve.rows[i].hits >= min_hits) {
                az = curve.rows[i].threshold;
                ap = curve.rows[i].p_hat;
            }
        }
        write_file(out_prefix + ".gp", gnuplot_tail_script(out_prefix + ".csv", predicted, az, ap));
        std::printf("curve written   = %s.csv\n", out_prefix.c_str());
        std::printf("plot script     = %s.gp\n", out_prefix.c_str());
    }

    if (hrv) {
        const auto q = hrv_quantities(spec);
        std::printf("hrv eta         = %.12g\n", q.eta);
        std::printf("hrv gamma       = %.12g\n", q.gamma);
        std::printf("hrv nu0(A)      = %.12g\n", q.nu0_A);
        std::string csv = "threshold,sharp_asymptote\n";
        char buf[80];
        for (double z : zs) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", z, hrv_sharp_asymptote(q, z));
            csv += buf;
        }
        if (!out_prefix.empty()) {
            write_file(out_prefix + "_hrv.csv", csv);
            std::printf("hrv curve       = %s_hrv.csv\n", out_prefix.c_str());
        }
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak tail dependence of copulas: closed forms, deep-tail numerics, "
                 "Monte Carlo verification, and a Black-Scholes option-portfolio study"};
    app.require_subcommand(1);

    // chi
    auto* chi = app.add_subcommand("chi", "compute the weak tail dependence function");
    CopulaCliOptions chi_cop;
    chi_cop.attach(chi);
    std::string chi_lambda = "1,1";
    std::string chi_method = "closed";
    std::string chi_useq;
    double chi_accuracy = 1e-3;
    bool chi_json = false;
    chi->add_option("--lambda", chi_lambda, "exponent vector, comma separated");
    chi->add_option("--method", chi_method, "closed|empirical|both");
    chi->add_option("--u-seq", chi_useq, "decreasing u sequence for the empirical estimator");
    chi->add_option("--accuracy", chi_accuracy, "empirical estimator accuracy");
    chi->add_flag("--json", chi_json, "JSON output");

    // optimize
    auto* opt = app.add_subcommand("optimize", "simplex / polytope minimizations");
    std::string opt_matrix;
    double opt_rho = 0.0;
    std::string opt_kind = "simplex-qp";
    double opt_tol = 1e-10;
    double opt_theta = 1.0;
    std::string opt_mu, opt_lambda;
    bool opt_oracle = false;
    int opt_resolution = 200;
    bool opt_json = false;
    opt->add_option("--matrix", opt_matrix, "CSV matrix file");
    opt->add_option("--rho", opt_rho, "2x2 correlation shortcut");
    opt->add_option("--kind", opt_kind, "simplex-qp|cstar|mixture");
    opt->add_option("--tol", opt_tol, "value tolerance");
    opt->add_option("--theta", opt_theta, "mixing decay rate (cstar/mixture)");
    opt->add_option("--mu", opt_mu, "mean vector, comma separated");
    opt->add_option("--lambda", opt_lambda, "exponent vector (mixture)");
    opt->add_flag("--oracle", opt_oracle, "also run the lattice oracle");
    opt->add_option("--resolution", opt_resolution, "oracle lattice resolution");
    opt->add_flag("--json", opt_json, "JSON output");

    // tail-mc
    auto* mc = app.add_subcommand("tail-mc", "Monte Carlo tail curve and slope fit");
    CopulaCliOptions mc_cop;
    mc_cop.attach(mc);
    std::string mc_margins = "uniform";
    std::string mc_functional = "max";
    std::string mc_thresholds;
    double mc_t_from = 1e-3, mc_t_to = 1e-1;
    int mc_t_count = 12;
    std::uint64_t mc_samples = 1000000;
    std::uint64_t mc_seed = 0;
    int mc_workers = 1;
    std::uint64_t mc_min_hits = 20;
    std::string mc_out;
    mc->add_option("--margins", mc_margins, "uniform|exponential (single name or comma list)");
    mc->add_option("--functional", mc_functional, "min|max|sum");
    mc->add_option("--thresholds", mc_thresholds, "explicit thresholds, comma separated");
    mc->add_option("--t-from", mc_t_from, "threshold grid start");
    mc->add_option("--t-to", mc_t_to, "threshold grid end");
    mc->add_option("--t-count", mc_t_count, "threshold grid size (log spaced)");
    mc->add_option("--samples", mc_samples, "Monte Carlo sample count");
    mc->add_option("--seed", mc_seed, "RNG seed")->required();
    mc->add_option("--workers", mc_workers, "worker threads");
    mc->add_option("--min-hits", mc_min_hits, "minimum hits for a row to enter the fit");
    mc->add_option("--out", mc_out, "output CSV path");

    // bs-portfolio
    auto* bs = app.add_subcommand("bs-portfolio", "option-portfolio tail study");
    std::string bs_config;
    std::string bs_thresholds;
    double bs_z_from = 1e-4, bs_z_to = 1e-1;
    int bs_z_count = 25;
    std::uint64_t bs_samples = 10000000;
    std::uint64_t bs_seed = 0;
    int bs_workers = 1;
    std::uint64_t bs_min_hits = 20;
    bool bs_hrv = false;
    std::string bs_out;
    bs->add_option("--portfolio-config", bs_config, "portfolio JSON file")->required();
    bs->add_option("--thresholds", bs_thresholds, "explicit z grid, comma separated");
    bs->add_option("--z-from", bs_z_from, "z grid start");
    bs->add_option("--z-to", bs_z_to, "z grid end");
    bs->add_option("--z-count", bs_z_count, "z grid size (log spaced)");
    bs->add_option("--samples", bs_samples, "Monte Carlo sample count");
    bs->add_option("--seed", bs_seed, "RNG seed")->required();
    bs->add_option("--workers", bs_workers, "worker threads");
    bs->add_option("--min-hits", bs_min_hits, "minimum hits for a row to enter the fit");
    bs->add_flag("--hrv", bs_hrv, "two identical legs: print eta/gamma/nu0 and asymptote curve");
    bs->add_option("--out", bs_out, "output path prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (chi->parsed()) {
            return run_chi(chi_cop, chi_lambda, chi_method, chi_useq, chi_accuracy, chi_json);
        }
        if (opt->parsed()) {
            return run_optimize(opt_matrix, opt_rho, opt_kind, opt_tol, opt_theta, opt_mu,
                                opt_lambda, opt_oracle, opt_resolution, opt_json);
        }
        if (mc->parsed()) {
            return run_tail_mc(mc_cop, mc_margins, mc_functional, mc_thresholds, mc_t_from,
                               mc_t_to, mc_t_count, mc_samples, mc_seed, mc_workers, mc_min_hits,
                               mc_out);
        }
        if (bs->parsed()) {
            return run_bs_portfolio(bs_config, bs_thresholds, bs_z_from, bs_z_to, bs_z_count,
                                    bs_samples, bs_seed, bs_workers, bs_min_hits, bs_hrv, bs_out);
        }
    } catch (const NoConvergence& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConvergence;
    } catch (const SequenceNotConverging& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConvergence;
    } catch (const AccuracyUnreachable& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConvergence;
    } catch (const std::ios_base::failure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitIo;
    } catch (const json::exception& e) {
        std::fprintf(stderr, "error: invalid config: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    }
    return kExitValidation;
}
