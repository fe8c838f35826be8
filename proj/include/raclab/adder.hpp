#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace raclab {

/// Entropy and varentropy of Binom(n, 1/2), nats and nats^2.
struct BinomialStats {
    unsigned n = 0;
    double H = 0.0;
    double V = 0.0;
};

/// Exact sums over the pmf, 1 <= n <= 1e5.
BinomialStats binom_stats_exact(unsigned n);

/// ln(C(n,k) 2^-n); exact integer binomials for n <= 50, lgamma above.
double log_binom_half(unsigned n, unsigned k);

enum class AdderMode { exact, approx };

struct AdderStats {
    double I = 0.0;  // nats
    double V = 0.0;  // nats^2
};

/// I_k and V_k of the adder-erasure channel under Bernoulli(1/2) inputs.
AdderStats adder_stats(unsigned k, double delta, AdderMode mode);

struct AdderFigureRow {
    unsigned k = 0;
    double I_exact = 0.0, I_approx = 0.0, V_exact = 0.0, V_approx = 0.0;
};

std::vector<AdderFigureRow> emit_figure_data(double delta, unsigned k_max);

// Stirling-series approximation of the Binom(n, 1/2) pmf.
double stirling_f(double x, double n);
double stirling_g(double x, double n);
double ptilde(double k, double n);

/// Integer points of [n/2 - (A/2) sqrt(n ln n), n/2 + (A/2) sqrt(n ln n)].
std::pair<unsigned, unsigned> central_interval(unsigned n, double A);

}  // namespace raclab
