#pragma once

namespace taildep {

double norm_pdf(double x);
double norm_log_pdf(double x);

// Standard normal CDF via erfc; full double accuracy over the whole line.
double norm_cdf(double x);

// ln Phi(x), accurate in the deep left tail (|x| up to ~40 and beyond):
// erfc-based in the body, asymptotic series for x <= -20 where erfc underflows
// or loses relative accuracy.
double norm_log_cdf(double x);

// ln(1 - Phi(x)) = ln Phi(-x)
double norm_log_sf(double x);

// Inverse CDF (Wichura AS241, ~1e-16 relative).
double norm_quantile(double p);

// Solve ln Phi(z) = lnp for z; valid for arbitrarily small log-probabilities
// (Newton on norm_log_cdf seeded from the tail expansion).
double norm_quantile_from_log(double lnp);

} // namespace taildep
