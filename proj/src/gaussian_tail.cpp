#include "taildep/gaussian_tail.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "taildep/errors.hpp"
#include "taildep/normal.hpp"

namespace taildep {

namespace detail {

namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1]
constexpr int kGl = 16;
constexpr double kGlX[kGl] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318, -0.7554044083550030,
    -0.6178762444026438, -0.4580167776572274, -0.2816035507792589, -0.0950125098376374,
    0.0950125098376374,  0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,  0.9894009349916499};
constexpr double kGlW[kGl] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928, 0.1246289712555339,
    0.1495959888165767, 0.1691565193950025, 0.1826034150449236, 0.1894506104550685,
    0.1894506104550685, 0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479, 0.0271524594117541};

// one composite pass; also reports the largest integrand log seen so the
// caller can re-center if the scan under-estimated the peak
double panel_sum(const std::function<double(double)>& g, double lo, double hi, int panels,
                 double gmax, double& seen_max) {
    const double w = (hi - lo) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double a = lo + p * w;
        const double mid = a + w / 2.0;
        const double half = w / 2.0;
        double s = 0.0;
        for (int i = 0; i < kGl; ++i) {
            const double gx = g(mid + half * kGlX[i]);
            seen_max = std::max(seen_max, gx);
            if (gx - gmax > -745.0 && gx - gmax < 700.0) s += kGlW[i] * std::exp(gx - gmax);
        }
        total += s * half;
    }
    return total;
}

} // namespace

double log_integrate(const std::function<double(double)>& g, double lo, double hi,
                     double rel_tol, double drop) {
    if (!(hi > lo)) throw DomainError("log_integrate: empty interval");

    // coarse scan for the peak
    const int kScan = 64;
    double best_x = lo;
    double best_g = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= kScan; ++i) {
        const double x = lo + (hi - lo) * i / kScan;
        const double gx = g(x);
        if (gx > best_g) {
            best_g = gx;
            best_x = x;
        }
    }
    if (best_g == -std::numeric_limits<double>::infinity()) {
        return best_g; // integrand vanishes everywhere probed
    }
    // golden-section refinement in the scan cell around the best point;
    // the location only drives exp-centering and windowing
    {
        const double h = (hi - lo) / kScan;
        double a = std::max(lo, best_x - h);
        double b = std::min(hi, best_x + h);
        const double gr = 0.6180339887498949;
        double c = b - gr * (b - a);
        double d = a + gr * (b - a);
        double gc = g(c);
        double gd = g(d);
        for (int it = 0; it < 48; ++it) {
            if (gc > gd) {
                b = d;
                d = c;
                gd = gc;
                c = b - gr * (b - a);
                gc = g(c);
            } else {
                a = c;
                c = d;
                gc = gd;
                d = a + gr * (b - a);
                gd = g(d);
            }
        }
        const double xm = (a + b) / 2.0;
        const double gm = g(xm);
        if (gm > best_g) {
            best_g = gm;
            best_x = xm;
        }
    }

    // clip the window where the integrand has dropped `drop` below the peak;
    // bisection on the *value* of g so narrow spikes at large abscissae are
    // boxed correctly regardless of the coordinate scale
    auto edge = [&](double from, double to) {
        if (g(to) >= best_g - drop) return to;
        double a = from, b = to;
        for (int it = 0; it < 240; ++it) {
            const double m = 0.5 * (a + b);
            if (m == a || m == b) break; // at float resolution
            const double gm = g(m);
            if (gm >= best_g - drop) {
                a = m;
            } else {
                b = m;
                if (gm >= best_g - drop - 2.0 * drop) break; // close enough outside
            }
        }
        return b;
    };
    const double le = edge(best_x, lo);
    const double re = edge(best_x, hi);
    if (!(re > le)) return best_g; // window collapsed to a point at float resolution

    int panels = 8;
    double prev = std::numeric_limits<double>::quiet_NaN();
    for (; panels <= 4096;) {
        double seen = best_g;
        const double s = panel_sum(g, le, re, panels, best_g, seen);
        if (seen > best_g + 1.0) {
            // the scan missed the true peak; re-center and restart doubling
            best_g = seen;
            prev = std::numeric_limits<double>::quiet_NaN();
            continue;
        }
        const double cur = best_g + std::log(s);
        if (!std::isnan(prev) && std::abs(cur - prev) < std::max(rel_tol / 2.0, 5e-15)) {
            return cur;
        }
        prev = cur;
        panels *= 2;
    }
    throw AccuracyUnreachable("log_integrate: panel doubling cap reached");
}

} // namespace detail

namespace {

// Fixed conditioning ladder: variables ordered once by decreasing threshold,
// then level k conditions on the k-th variable. All Schur complements are
// computed up front; only thresholds move during the quadrature recursion.
class OrthantTail {
  public:
    OrthantTail(const Matrix& R, const Vector& y, double tol) : tol_(tol) {
        const Eigen::Index n = y.size();
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](Eigen::Index a, Eigen::Index b) { return y(a) > y(b); });
        Matrix Rp(n, n);
        y0_.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y0_(i) = y(order[static_cast<std::size_t>(i)]);
            for (Eigen::Index j = 0; j < n; ++j) {
                Rp(i, j) = R(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
            }
        }
        Matrix cur = Rp;
        for (Eigen::Index lvl = 0; lvl + 1 < n; ++lvl) {
            const Eigen::Index m = cur.rows();
            Level L;
            L.r = cur.block(1, 0, m - 1, 1);
            L.s = (1.0 - L.r.array().square()).sqrt().matrix();
            if (L.s.minCoeff() < 1e-8) {
                throw NonPositiveDefinite("gaussian tail: near-degenerate conditional");
            }
            Matrix next(m - 1, m - 1);
            for (Eigen::Index i = 0; i < m - 1; ++i) {
                for (Eigen::Index j = 0; j < m - 1; ++j) {
                    next(i, j) = (cur(i + 1, j + 1) - L.r(i) * L.r(j)) / (L.s(i) * L.s(j));
                }
            }
            levels_.push_back(std::move(L));
            cur = std::move(next);
        }
    }

    double log_value() const { return recurse(0, y0_); }

  private:
    struct Level {
        Vector r, s;
    };

    double recurse(std::size_t level, const Vector& t) const {
        if (t.size() == 1) return norm_log_sf(t(0));
        const Level& L = levels_[level];
        const double a = t(0);
        auto g = [&](double x) {
            Vector tc(t.size() - 1);
            for (Eigen::Index i = 0; i + 1 < t.size(); ++i) {
                tc(i) = (t(i + 1) - L.r(i) * x) / L.s(i);
            }
            return norm_log_pdf(x) + recurse(level + 1, tc);
        };
        // the Gaussian factor confines the mass to [a, max(a,0)+42]
        const double hi = std::max(a + 8.0, 42.0);
        return detail::log_integrate(g, a, hi, tol_ / static_cast<double>(2 * (levels_.size() + 1)));
    }

    double tol_;
    Vector y0_;
    std::vector<Level> levels_;
};

} // namespace

double gaussian_tail_log_cdf(const CorrelationMatrix& R, const Vector& z, double rel_accuracy) {
    if (!(rel_accuracy > 0.0)) throw DomainError("gaussian_tail_log_cdf: accuracy must be > 0");
    if (z.size() != static_cast<Eigen::Index>(R.dim())) {
        throw DomainError("gaussian_tail_log_cdf: dimension mismatch");
    }
    if (z.size() == 1) return norm_log_cdf(z(0));
    R.require_positive_definite();
    // P[X <= z] = P[-X >= -z] and -X has the same law
    OrthantTail ot(R.mat(), -z, rel_accuracy);
    return ot.log_value();
}

double gaussian_tail_cdf(const CorrelationMatrix& R, const Vector& z, double rel_accuracy) {
    const double lv = gaussian_tail_log_cdf(R, z, rel_accuracy);
    return std::exp(lv);
}

} // namespace taildep
