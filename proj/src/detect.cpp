#include "raclab/detect.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>

#include "raclab/common.hpp"
#include "raclab/design.hpp"
#include "raclab/io.hpp"
#include "raclab/parallel.hpp"
#include "raclab/rng.hpp"

namespace raclab {

std::string to_string(TestKind kind)
{
    switch (kind) {
    case TestKind::hoeffding: return "hoeffding";
    case TestKind::ks: return "ks";
    case TestKind::llr: return "llr";
    }
    return "?";
}

TestKind parse_test_kind(const std::string& name)
{
    if (name == "hoeffding") return TestKind::hoeffding;
    if (name == "ks") return TestKind::ks;
    if (name == "llr") return TestKind::llr;
    throw InvalidArgument("unknown test kind: " + name);
}

double divergence(std::span<const double> p, std::span<const double> q)
{
    require(p.size() == q.size(), "divergence: pmfs differ in length");
    double d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        if (q[i] <= 0.0) return kInf;
        d += p[i] * std::log(p[i] / q[i]);
    }
    return std::max(d, 0.0);
}

double ks_distance(std::span<const double> p, std::span<const double> q)
{
    require(p.size() == q.size(), "ks_distance: pmfs differ in length");
    double fp = 0.0, fq = 0.0, d = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        fp += p[i];
        fq += q[i];
        d = std::max(d, std::abs(fp - fq));
    }
    return d;
}

namespace {

std::vector<std::uint32_t> tally(std::span<const std::size_t> samples, std::size_t size)
{
    require(!samples.empty(), "empty sample");
    std::vector<std::uint32_t> c(size, 0);
    for (std::size_t y : samples) {
        require(y < size, "sample outside the output alphabet");
        ++c[y];
    }
    return c;
}

}  // namespace

double hoeffding_statistic_counts(std::span<const std::uint32_t> counts, std::size_t n, std::span<const double> null)
{
    require(n > 0, "empty sample");
    double d = 0.0;
    for (std::size_t y = 0; y < counts.size(); ++y) {
        if (counts[y] == 0) continue;
        if (null[y] <= 0.0) return kInf;
        const double f = static_cast<double>(counts[y]) / static_cast<double>(n);
        d += f * std::log(f / null[y]);
    }
    return std::max(d, 0.0);
}

double hoeffding_statistic(std::span<const std::size_t> samples, std::span<const double> null)
{
    const auto c = tally(samples, null.size());
    return hoeffding_statistic_counts(c, samples.size(), null);
}

double ks_statistic(std::span<const double> samples, const std::function<double(double)>& F0,
                    const std::function<double(double)>& left)
{
    require(!samples.empty(), "empty sample");
    std::vector<double> x(samples.begin(), samples.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    std::size_t i = 0;
    while (i < x.size()) {
        std::size_t j = i;
        while (j + 1 < x.size() && x[j + 1] == x[i]) ++j;
        const double below = static_cast<double>(i) / n;      // F_hat(x-)
        const double at = static_cast<double>(j + 1) / n;     // F_hat(x)
        const double f = F0(x[i]);
        const double fl = left ? left(x[i]) : f;
        d = std::max({d, std::abs(at - f), std::abs(below - fl)});
        i = j + 1;
    }
    return d;
}

double ks_statistic_counts(std::span<const std::uint32_t> counts, std::size_t n, std::span<const double> null)
{
    require(n > 0, "empty sample");
    double fe = 0.0, f0 = 0.0, d = 0.0;
    std::size_t acc = 0;
    for (std::size_t y = 0; y < counts.size(); ++y) {
        acc += counts[y];
        fe = static_cast<double>(acc) / static_cast<double>(n);
        f0 += null[y];
        d = std::max(d, std::abs(fe - f0));
    }
    return d;
}

double ks_statistic(std::span<const std::size_t> samples, std::span<const double> null)
{
    const auto c = tally(samples, null.size());
    return ks_statistic_counts(c, samples.size(), null);
}

double threshold(TestKind kind, std::size_t n, double eps0, std::size_t alphabet_size, bool bits)
{
    require(n >= 1, "test length must be at least 1");
    const double nn = static_cast<double>(n);
    switch (kind) {
    case TestKind::hoeffding: {
        const double l = bits ? std::log2(nn) : std::log(nn);
        return static_cast<double>(alphabet_size) * l / nn;
    }
    case TestKind::ks:
        require(eps0 > 0.0, "eps0 must be positive");
        if (eps0 >= 2.0) return 0.0;
        return std::sqrt(std::log(2.0 / eps0) / (2.0 * nn));
    case TestKind::llr: break;
    }
    throw InvalidArgument("the LLR test has a vector threshold; use llr_thresholds");
}

bool TestSpec::accepts_null(std::span<const std::uint32_t> counts, std::size_t n) const
{
    switch (kind) {
    case TestKind::hoeffding: return hoeffding_statistic_counts(counts, n, null) <= gamma0;
    case TestKind::ks: return ks_statistic_counts(counts, n, null) <= gamma0;
    case TestKind::llr:
        for (std::size_t k = 0; k < alternatives.size(); ++k) {
            double h = 0.0;
            for (std::size_t y = 0; y < counts.size(); ++y) {
                if (counts[y] == 0) continue;
                const double l = log_ratio(null[y], alternatives[k][y]);
                if (null[y] <= 0.0) return false;  // impossible under H0
                h += counts[y] * l;
            }
            if (h < tau[k]) return false;
        }
        return true;
    }
    return false;
}

void TestSpec::validate() const
{
    require(!null.empty(), "test has no null distribution");
    if (kind == TestKind::llr) {
        require(!alternatives.empty(), "LLR test needs alternatives");
        require(tau.size() == alternatives.size(), "LLR threshold vector must match the alternatives");
        for (const auto& a : alternatives) {
            require(a.size() == null.size(), "alternative pmf has the wrong length");
            require(std::isfinite(divergence(null, a)), "LLR alternative does not dominate the null");
        }
    } else {
        require(gamma0 >= 0.0, "test threshold must be nonnegative");
    }
}

nlohmann::json TestSpec::to_json() const
{
    nlohmann::json doc{{"kind", to_string(kind)}};
    if (kind == TestKind::llr)
        doc["tau"] = json_numbers(tau);
    else
        doc["gamma0"] = json_number(gamma0);
    return doc;
}

TestSpec make_test(TestKind kind, std::span<const double> null, std::size_t n0, double eps0,
                   std::size_t alphabet_size)
{
    TestSpec t;
    t.kind = kind;
    t.null.assign(null.begin(), null.end());
    t.gamma0 = threshold(kind, n0, eps0, alphabet_size);
    return t;
}

void wilson_interval(std::size_t x, std::size_t n, double z, double& lo, double& hi)
{
    if (n == 0) {
        lo = 0.0;
        hi = 1.0;
        return;
    }
    const double nn = static_cast<double>(n);
    const double p = static_cast<double>(x) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double centre = (p + z2 / (2.0 * nn)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
    lo = std::max(0.0, centre - half);
    hi = std::min(1.0, centre + half);
}

std::size_t count_null_decisions(const TestSpec& test, std::span<const double> law, std::size_t n,
                                 std::size_t trials, std::uint64_t seed, std::uint64_t stream)
{
    require(n >= 1, "test length must be at least 1");
    const DiscreteSampler sample(law);
    std::atomic<std::size_t> accepted{0};
    parallel_chunks(trials, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<std::uint32_t> counts(law.size());
        std::size_t local = 0;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(seed, {stream, i});
            std::fill(counts.begin(), counts.end(), 0u);
            for (std::size_t j = 0; j < n; ++j) ++counts[sample(rng)];
            if (test.accepts_null(counts, n)) ++local;
        }
        accepted += local;
    });
    return accepted.load();
}

TestErrorEstimate estimate_test_errors(const ChannelFamily& ch, const InputDistribution& px, const TestSpec& test,
                                       std::size_t n0, std::size_t trials, std::uint64_t seed)
{
    require(n0 >= 1, "n0 must be at least 1");
    require(trials >= 10000, "at least 1e4 trials are required");
    test.validate();
    require(test.null.size() == ch.output_size(), "test null does not match the channel outputs");

    const DensityTables tab(ch, px);
    TestErrorEstimate est;
    est.kind = test.kind;
    est.n0 = n0;
    est.trials = trials;
    est.seed = seed;
    const double nt = static_cast<double>(trials);

    const std::size_t a = trials - count_null_decisions(test, tab.output(0), n0, trials, seed, 0);
    est.alpha = a / nt;
    est.alpha_se = std::sqrt(est.alpha * (1.0 - est.alpha) / nt);
    wilson_interval(a, trials, 1.96, est.alpha_lo, est.alpha_hi);

    for (unsigned k = 1; k <= ch.max_users(); ++k) {
        const std::size_t b = count_null_decisions(test, tab.output(k), n0, trials, seed, k);
        const double p = b / nt;
        double lo = 0.0, hi = 0.0;
        wilson_interval(b, trials, 1.96, lo, hi);
        est.beta.push_back(p);
        est.beta_se.push_back(std::sqrt(p * (1.0 - p) / nt));
        est.beta_lo.push_back(lo);
        est.beta_hi.push_back(hi);
    }
    return est;
}

nlohmann::json TestErrorEstimate::to_json() const
{
    return {{"test", to_string(kind)},
            {"n0", n0},
            {"trials", trials},
            {"seed", seed},
            {"alpha", json_number(alpha)},
            {"alpha_se", json_number(alpha_se)},
            {"alpha_ci", {json_number(alpha_lo), json_number(alpha_hi)}},
            {"beta", json_numbers(beta)},
            {"beta_se", json_numbers(beta_se)},
            {"beta_ci_lo", json_numbers(beta_lo)},
            {"beta_ci_hi", json_numbers(beta_hi)}};
}

double hoeffding_log_accept_probability(std::span<const double> null, std::span<const double> law, std::size_t n,
                                        double gamma0)
{
    require(null.size() == law.size(), "pmfs differ in length");
    require(n >= 1, "n must be at least 1");
    std::vector<std::size_t> support;
    for (std::size_t y = 0; y < null.size(); ++y)
        if (null[y] > 0.0) support.push_back(y);
    const std::size_t m = support.size();
    const double types = std::exp(std::lgamma(static_cast<double>(n + m)) - std::lgamma(static_cast<double>(n + 1)) -
                                  std::lgamma(static_cast<double>(m)));
    if (types > 5e7) throw TableOverflow("too many types for exact enumeration");

    const double nn = static_cast<double>(n);
    const double lfact_n = std::lgamma(nn + 1.0);
    std::vector<std::size_t> c(m, 0);
    // Log-sum-exp accumulator with a running maximum.
    double lmax = -kInf, acc = 0.0;
    auto visit = [&]() {
        double d = 0.0, lp = lfact_n;
        for (std::size_t i = 0; i < m; ++i) {
            if (c[i] == 0) continue;
            const double f = static_cast<double>(c[i]) / nn;
            d += f * std::log(f / null[support[i]]);
            const double q = law[support[i]];
            if (q <= 0.0) return;
            lp += static_cast<double>(c[i]) * std::log(q) - std::lgamma(static_cast<double>(c[i]) + 1.0);
        }
        if (d > gamma0) return;
        if (lp > lmax) {
            acc = acc * std::exp(lmax - lp) + 1.0;
            lmax = lp;
        } else {
            acc += std::exp(lp - lmax);
        }
    };
    // Compositions of n into m parts.
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t left) {
        if (i + 1 == m) {
            c[i] = left;
            visit();
            return;
        }
        for (std::size_t v = 0; v <= left; ++v) {
            c[i] = v;
            rec(i + 1, left - v);
        }
    };
    if (m == 0) return -kInf;
    rec(0, n);
    return lmax == -kInf ? -kInf : lmax + std::log(acc);
}

void llr_moments(std::span<const double> null, const std::vector<std::vector<double>>& alternatives,
                 std::vector<double>& D, std::vector<std::vector<double>>& V)
{
    const std::size_t K = alternatives.size();
    D.assign(K, 0.0);
    V.assign(K, std::vector<double>(K, 0.0));
    std::vector<std::vector<double>> h(K, std::vector<double>(null.size(), 0.0));
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t y = 0; y < null.size(); ++y) {
            if (null[y] <= 0.0) continue;
            h[k][y] = log_ratio(null[y], alternatives[k][y]);
            D[k] += null[y] * h[k][y];
        }
    }
    for (std::size_t a = 0; a < K; ++a)
        for (std::size_t b = 0; b < K; ++b)
            for (std::size_t y = 0; y < null.size(); ++y)
                if (null[y] > 0.0) V[a][b] += null[y] * (h[a][y] - D[a]) * (h[b][y] - D[b]);
}

namespace {

// Lower-triangular L with L L^T = V. In strict mode a pivot below the
// tolerance means V is singular and nullopt is returned; otherwise the
// column is zeroed, giving a factor of a semidefinite V.
std::optional<std::vector<std::vector<double>>> cholesky(const std::vector<std::vector<double>>& V, bool strict)
{
    const std::size_t d = V.size();
    double scale = 0.0;
    for (std::size_t i = 0; i < d; ++i) scale = std::max(scale, V[i][i]);
    const double tol = 1e-12 * std::max(scale, 1e-300);
    std::vector<std::vector<double>> L(d, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < d; ++j) {
        double s = V[j][j];
        for (std::size_t k = 0; k < j; ++k) s -= L[j][k] * L[j][k];
        if (s <= tol) {
            if (strict) return std::nullopt;
            continue;
        }
        L[j][j] = std::sqrt(s);
        for (std::size_t i = j + 1; i < d; ++i) {
            double t = V[i][j];
            for (std::size_t k = 0; k < j; ++k) t -= L[i][k] * L[j][k];
            L[i][j] = t / L[j][j];
        }
    }
    return L;
}

// Solves P[Z <= c 1] = 1 - eps0 for Z = L g, g standard normal, by bisection
// on c against a fixed set of antithetic MC draws.
double solve_quantile(const std::vector<std::vector<double>>& L, double eps0, std::size_t mc_trials,
                      std::uint64_t seed)
{
    const std::size_t d = L.size();
    const std::size_t pairs = std::max<std::size_t>(mc_trials / 2, 1);
    std::vector<double> maxima(2 * pairs);
    parallel_chunks(pairs, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::vector<double> g(d);
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(seed, {0x6d6d, i});
            for (auto& v : g) v = rng.normal();
            double mp = -kInf, mm = -kInf;
            for (std::size_t r = 0; r < d; ++r) {
                double z = 0.0;
                for (std::size_t c = 0; c <= r; ++c) z += L[r][c] * g[c];
                mp = std::max(mp, z);
                mm = std::max(mm, -z);
            }
            maxima[2 * i] = mp;
            maxima[2 * i + 1] = mm;
        }
    });
    const double target = 1.0 - eps0;
    const double total = static_cast<double>(maxima.size());
    std::sort(maxima.begin(), maxima.end());
    auto cdf = [&](double c) {
        return static_cast<double>(std::upper_bound(maxima.begin(), maxima.end(), c) - maxima.begin()) / total;
    };
    double lo = maxima.front() - 1.0, hi = maxima.back() + 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = cdf(mid);
        if (std::abs(p - target) <= 1e-3 && hi - lo < 1e-9) break;
        if (p < target)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

MinimaxResult minimax_quantile(std::span<const double> null, const std::vector<std::vector<double>>& alternatives,
                               double eps0, std::size_t mc_trials, std::uint64_t seed)
{
    require(eps0 > 0.0 && eps0 < 1.0, "eps0 must lie in (0,1)");
    require(!alternatives.empty(), "no alternatives given");
    std::vector<double> D;
    std::vector<std::vector<double>> V;
    for (const auto& a : alternatives) {
        require(a.size() == null.size(), "alternative pmf has the wrong length");
        const double d = divergence(null, a);
        require(std::isfinite(d), "null is not absolutely continuous w.r.t. an alternative");
        require(d > 0.0, "an alternative equals the null");
    }
    llr_moments(null, alternatives, D, V);

    MinimaxResult res;
    res.D_min = *std::min_element(D.begin(), D.end());
    const double tie = 1e-12 * std::max(1.0, res.D_min);
    for (unsigned k = 0; k < D.size(); ++k)
        if (D[k] <= res.D_min + tie) res.I_min.push_back(k + 1);

    for (unsigned k : res.I_min) {
        bool dup = false;
        for (unsigned u : res.I_used) {
            const auto& p = alternatives[k - 1];
            const auto& q = alternatives[u - 1];
            dup = std::equal(p.begin(), p.end(), q.begin(), [](double x, double y) { return std::abs(x - y) <= 1e-15; });
            if (dup) break;
        }
        if (!dup) res.I_used.push_back(k);
    }
    for (unsigned a : res.I_used) {
        std::vector<double> row;
        for (unsigned b : res.I_used) row.push_back(V[a - 1][b - 1]);
        res.V_min.push_back(row);
    }

    if (res.I_used.size() == 1) {
        const double var = res.V_min[0][0];
        if (var <= 1e-300) {
            res.singular = true;
            return res;
        }
        res.b = std::sqrt(var) * q_inv(eps0);
        return res;
    }
    const auto L = cholesky(res.V_min, true);
    if (!L) {
        res.singular = true;
        return res;
    }
    res.b = solve_quantile(*L, eps0, mc_trials, seed);
    return res;
}

nlohmann::json MinimaxResult::to_json() const
{
    nlohmann::json doc{{"D_min", json_number(D_min)}, {"I_min", I_min}, {"I_used", I_used}, {"singular", singular}};
    auto v = nlohmann::json::array();
    for (const auto& r : V_min) v.push_back(json_numbers(r));
    doc["V_min"] = v;
    doc["b"] = b ? json_number(*b) : nlohmann::json(nullptr);
    return doc;
}

std::vector<double> llr_thresholds(std::span<const double> null, const std::vector<std::vector<double>>& alternatives,
                                   std::size_t n, double eps0, std::size_t mc_trials, std::uint64_t seed)
{
    require(n >= 1, "n must be at least 1");
    require(eps0 > 0.0 && eps0 < 1.0, "eps0 must lie in (0,1)");
    std::vector<double> D;
    std::vector<std::vector<double>> V;
    llr_moments(null, alternatives, D, V);
    double b = 0.0;
    if (D.size() == 1)
        b = std::sqrt(V[0][0]) * q_inv(eps0);
    else
        b = solve_quantile(*cholesky(V, false), eps0, mc_trials, seed);
    const double nn = static_cast<double>(n);
    std::vector<double> tau(D.size());
    for (std::size_t k = 0; k < D.size(); ++k) tau[k] = nn * D[k] - std::sqrt(nn) * b;
    return tau;
}

std::size_t n0_expansion(double D_min, double b, std::size_t n1)
{
    require(D_min > 0.0, "D_min must be positive");
    require(n1 >= 3, "n1 must be at least 3");
    const double l = std::log(static_cast<double>(n1));
    const double v = l / (2.0 * D_min) + b * std::sqrt(l) / std::sqrt(2.0 * D_min * D_min * D_min) -
                     std::log(l) / (2.0 * D_min);
    return static_cast<std::size_t>(std::max(1.0, std::ceil(v)));
}

}  // namespace raclab
