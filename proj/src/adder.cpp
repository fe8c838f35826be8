#include "raclab/adder.hpp"

#include <algorithm>
#include <cmath>

#include "raclab/common.hpp"
#include "raclab/multiset.hpp"

namespace raclab {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

double log_binom_half(unsigned n, unsigned k)
{
    require(k <= n, "k exceeds n");
    if (n <= 50) return std::log(static_cast<double>(binomial(n, k))) - n * kLn2;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * kLn2;
}

BinomialStats binom_stats_exact(unsigned n)
{
    require(n >= 1 && n <= 100000, "n must lie in [1, 1e5]");
    std::vector<double> lp(n + 1);
    for (unsigned k = 0; k <= n; ++k) lp[k] = log_binom_half(n, k);
    BinomialStats s;
    s.n = n;
    for (unsigned k = 0; k <= n; ++k) s.H -= std::exp(lp[k]) * lp[k];
    for (unsigned k = 0; k <= n; ++k) {
        const double d = -lp[k] - s.H;
        s.V += std::exp(lp[k]) * d * d;
    }
    return s;
}

AdderStats adder_stats(unsigned k, double delta, AdderMode mode)
{
    require(k >= 1, "k must be at least 1");
    require(delta >= 0.0 && delta <= 1.0, "erasure probability outside [0,1]");
    AdderStats r;
    if (mode == AdderMode::exact) {
        const auto b = binom_stats_exact(k);
        r.I = (1.0 - delta) * b.H;
        r.V = (1.0 - delta) * (b.V + delta * b.H * b.H);
        return r;
    }
    const double kk = k;
    const double L = std::log(kPi * std::exp(1.0) * kk / 2.0);
    r.I = (1.0 - delta) * (0.5 * L - 1.0 / (12.0 * kk * kk));
    r.V = (1.0 - delta) *
          (delta / 4.0 * L * L + 0.5 - 1.0 / (2.0 * kk) - (0.5 + delta * L / 12.0) / (kk * kk));
    return r;
}

std::vector<AdderFigureRow> emit_figure_data(double delta, unsigned k_max)
{
    require(k_max >= 1 && k_max <= 10000, "k_max must lie in [1, 1e4]");
    std::vector<AdderFigureRow> rows;
    for (unsigned k = 1; k <= k_max; ++k) {
        const auto e = adder_stats(k, delta, AdderMode::exact);
        const auto a = adder_stats(k, delta, AdderMode::approx);
        rows.push_back({k, e.I, a.I, e.V, a.V});
    }
    return rows;
}

double stirling_f(double x, double n)
{
    const double u = 2.0 * x - n;
    const double u2 = u * u;
    return -u2 * u2 / (12.0 * n * n) + 0.5 * u2 / n - 0.25;
}

double stirling_g(double x, double n)
{
    const double u2 = (2.0 * x - n) * (2.0 * x - n);
    const double u4 = u2 * u2;
    return u4 * u4 / (288.0 * std::pow(n, 4)) - 3.0 / 40.0 * u4 * u2 / std::pow(n, 3) +
           19.0 / 48.0 * u4 / (n * n) - 11.0 / 24.0 * u2 / n + 1.0 / 32.0;
}

double ptilde(double k, double n)
{
    const double c = k - n / 2.0;
    return std::exp(-c * c / (n / 2.0)) / std::sqrt(kPi * n / 2.0) *
           (1.0 + stirling_f(k, n) / n + stirling_g(k, n) / (n * n));
}

std::pair<unsigned, unsigned> central_interval(unsigned n, double A)
{
    const double half = 0.5 * A * std::sqrt(n * std::log(static_cast<double>(n)));
    const double lo = std::max(0.0, std::ceil(n / 2.0 - half));
    const double hi = std::min(static_cast<double>(n), std::floor(n / 2.0 + half));
    return {static_cast<unsigned>(lo), static_cast<unsigned>(hi)};
}

}  // namespace raclab
