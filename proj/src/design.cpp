#include "raclab/design.hpp"

#include <algorithm>
#include <cmath>

#include "raclab/common.hpp"
#include "raclab/io.hpp"
#include "raclab/parallel.hpp"

namespace raclab {

double q_func(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double q_inv(double eps)
{
    require(eps > 0.0 && eps < 1.0, "q_inv: eps must lie in (0,1)");
    // Bisection to a good bracket, then Newton on Q(x) - eps.
    double lo = -40.0, hi = 40.0;
    for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (q_func(mid) > eps)
            lo = mid;
        else
            hi = mid;
    }
    double x = 0.5 * (lo + hi);
    for (int i = 0; i < 50; ++i) {
        const double err = q_func(x) - eps;
        if (std::abs(err) <= 1e-15 * std::max(eps, 1e-3)) break;
        const double phi = std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
        if (phi <= 0.0) break;
        const double step = err / phi;
        x += step;
        if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(x))) break;
    }
    return x;
}

std::size_t solve_blocklength(double I_bits, double V_bits, unsigned k, double logM_bits, double eps)
{
    require(k >= 1, "k must be at least 1");
    require(logM_bits > 0.0, "log M must be positive");
    require(V_bits >= 0.0, "dispersion must be nonnegative");
    if (!(I_bits > 0.0)) throw Infeasible("I_k <= 0: no blocklength supports a positive rate");
    const double q = q_inv(eps);
    const double target = static_cast<double>(k) * logM_bits;
    auto f = [&](double n) { return n * I_bits - std::sqrt(n * V_bits) * q - 0.5 * std::log2(n); };
    auto ok = [&](std::size_t n) { return f(static_cast<double>(n)) >= target; };

    if (ok(1)) return 1;
    // f decreases up to u*^2 and increases afterwards (u = sqrt(n)); the
    // first crossing lies beyond the minimizer.
    const double a = q * std::sqrt(V_bits) / 2.0;
    const double b = 1.0 / (2.0 * kLn2);
    const double u = (a + std::sqrt(a * a + 4.0 * I_bits * b)) / (2.0 * I_bits);
    std::size_t lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(u * u)));
    std::size_t hi = std::max<std::size_t>(lo + 1, 2);
    while (!ok(hi)) {
        lo = hi;
        if (hi > (std::size_t{1} << 60)) throw Infeasible("blocklength exceeds 2^60");
        hi *= 2;
    }
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (ok(mid))
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

double solve_message_size(double I_bits, double V_bits, std::size_t n1, double eps)
{
    require(n1 >= 2, "n1 must be at least 2");
    require(V_bits >= 0.0, "dispersion must be nonnegative");
    const double n = static_cast<double>(n1);
    const double logM = n * I_bits - std::sqrt(n * V_bits) * q_inv(eps) - 0.5 * std::log2(n);
    if (!(logM > 0.0)) throw Infeasible("n1 too short: log M would be " + format_number(logM) + " bits");
    return logM;
}

double log_choose_messages(const CodeDesign& d, unsigned k, unsigned s)
{
    if (s == 0) return 0.0;
    double acc = -std::lgamma(static_cast<double>(s) + 1.0);
    if (d.logM_bits <= 53.0) {
        for (unsigned i = 0; i < s; ++i) {
            const double f = d.M - static_cast<double>(k) - static_cast<double>(i);
            if (f <= 0.0) return -kInf;
            acc += std::log(f);
        }
        return acc;
    }
    // M - k - i agrees with M to within a relative 2^-53 or better.
    const double lnM = bits_to_nats(d.logM_bits);
    for (unsigned i = 0; i < s; ++i)
        acc += lnM + std::log1p(-(static_cast<double>(k) + i) * std::exp(-lnM));
    return acc;
}

CodeDesign choose_parameters(const ChannelStatistics& st, double logM_bits, const std::vector<double>& eps,
                             const std::vector<std::size_t>& n, const DesignOptions& opt)
{
    const unsigned K = st.K;
    require(logM_bits >= 0.0, "log M must be nonnegative");
    require(eps.size() == K + 1, "eps must list eps_0..eps_K");
    require(n.size() == K + 1, "n must list n_0..n_K");
    for (double e : eps) require(e > 0.0 && e < 1.0, "error targets must lie in (0,1)");
    require(n[1] >= 1, "n_1 must be positive");
    for (unsigned k = 2; k <= K; ++k) require(n[k] > n[k - 1], "blocklengths must increase strictly in k");

    CodeDesign d;
    d.K = K;
    d.logM_bits = logM_bits;
    d.M = std::exp2(logM_bits);
    d.n = n;
    d.eps = eps;
    d.tau.assign(K + 1, 0.0);
    d.log_gamma.assign(K + 1, 0.0);
    d.zero_test = opt.zero_test;
    d.tau_mode = opt.tau_mode;

    for (unsigned k = 1; k <= K; ++k) {
        const double nk = static_cast<double>(n[k]);
        if (opt.tau_mode == TauMode::berry_esseen) {
            const double C = k < opt.C.size() ? opt.C[k] : 0.0;
            const double arg = eps[k] - (st.B[k] + C) / std::sqrt(nk);
            if (!(arg > 0.0))
                throw Infeasible("blocklength too small for Berry-Esseen slack at k=" + std::to_string(k));
            d.tau[k] = q_inv(arg);
        } else {
            d.tau[k] = q_inv(eps[k]);
        }
        d.log_gamma[k] = nk * st.I[k] - d.tau[k] * std::sqrt(nk * st.V[k]);
    }

    d.lambda.resize(K + 1);
    for (unsigned k = 0; k <= K; ++k) {
        d.lambda[k].resize(k + 1);
        for (unsigned t = 0; t <= k; ++t) {
            d.lambda[k][t].assign(t + 1, 0.0);
            for (unsigned s = 1; s < t; ++s)
                d.lambda[k][t][s] = 0.5 * static_cast<double>(n[t]) *
                                    (st.cond_mi[t][s] - static_cast<double>(s) / t * st.I[t]);
        }
    }

    const std::size_t nY = st.output_pmf[0].size();
    if (opt.n0) {
        d.n[0] = *opt.n0;
    } else {
        double C = kInf;
        for (unsigned k = 1; k <= K; ++k) {
            if (opt.zero_test == TestKind::ks) {
                const double delta = ks_distance(st.output_pmf[k], st.output_pmf[0]);
                C = std::min(C, 2.0 * delta * delta);
            } else {
                C = std::min(C, divergence(st.output_pmf[0], st.output_pmf[k]));
            }
        }
        if (!(C > 0.0)) throw Infeasible("output distributions do not separate from P_Y0; zero test impossible");
        const double v = std::isinf(C) ? 1.0 : std::ceil(std::log(static_cast<double>(n[1])) / (2.0 * C));
        d.n[0] = static_cast<std::size_t>(std::max(1.0, v));
    }
    require(d.n[0] >= 1, "n0 must be at least 1");
    if (K >= 1 && d.n[0] > n[1]) throw Infeasible("n0 exceeds n1");

    if (opt.gamma0) {
        d.gamma0 = *opt.gamma0;
    } else if (opt.zero_test == TestKind::llr) {
        throw InvalidArgument("the code design supports hoeffding or ks zero tests");
    } else {
        d.gamma0 = threshold(opt.zero_test, d.n[0], eps[0], nY, opt.hoeffding_bits);
    }
    return d;
}

std::vector<std::size_t> blocklengths(const ChannelStatistics& st, double logM_bits, const std::vector<double>& eps)
{
    require(eps.size() == st.K + 1, "eps must list eps_0..eps_K");
    std::vector<std::size_t> n(st.K + 1, 0);
    for (unsigned k = 1; k <= st.K; ++k)
        n[k] = solve_blocklength(nats_to_bits(st.I[k]), nats_to_bits(nats_to_bits(st.V[k])), k, logM_bits, eps[k]);
    return n;
}

nlohmann::json CodeDesign::to_json() const
{
    nlohmann::json doc;
    doc["K"] = K;
    doc["M"] = json_number(M);
    doc["logM_bits"] = json_number(logM_bits);
    doc["n"] = n;
    doc["eps"] = json_numbers(eps);
    doc["tau"] = json_numbers(tau);
    doc["log_gamma_nats"] = json_numbers(log_gamma);
    auto lam = nlohmann::json::array();
    for (unsigned k = 1; k <= K; ++k)
        for (unsigned t = 1; t <= k; ++t)
            for (unsigned s = 1; s <= t; ++s)
                lam.push_back({{"s", s}, {"t", t}, {"k", k}, {"lambda_nats", json_number(lambda[k][t][s])}});
    doc["lambda"] = lam;
    doc["zero_test"] = to_string(zero_test);
    doc["gamma0"] = json_number(gamma0);
    doc["tau_mode"] = tau_mode == TauMode::normal ? "normal" : "berry_esseen";
    return doc;
}

std::vector<double> make_p_grid(double step)
{
    require(step > 0.0 && step < 0.5, "grid step must lie in (0, 0.5)");
    const long N = std::lround(1.0 / step);
    std::vector<double> grid;
    for (long i = 1; i < N; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(N));
    return grid;
}

void mark_dominant(RegionResult& r)
{
    r.dominant.clear();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        auto& a = r.rows[i];
        a.dominant = false;
        if (!a.feasible) continue;
        bool beaten = false;
        for (std::size_t j = 0; j < r.rows.size() && !beaten; ++j) {
            if (j == i || !r.rows[j].feasible) continue;
            const auto& b = r.rows[j];
            if (b.R1 >= a.R1 && b.R2 >= a.R2 && (b.R1 > a.R1 || b.R2 > a.R2 || j < i)) beaten = true;
        }
        if (!beaten) {
            a.dominant = true;
            r.dominant.push_back(i);
        }
    }
}

RegionResult sweep_rate_region(const ChannelFamily& ch, double logM_bits, double eps, const std::vector<double>& p_grid)
{
    require(ch.max_users() == 2, "rate-region sweeps need K = 2");
    require(ch.input_size() == 2, "rate-region sweeps need binary inputs");
    RegionResult res;
    res.rows.resize(p_grid.size());
    parallel_chunks(p_grid.size(), [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) {
            auto& row = res.rows[i];
            row.p = p_grid[i];
            require(row.p > 0.0 && row.p < 1.0, "grid points must lie in (0,1)");
            const auto px = InputDistribution::bernoulli(row.p);
            const auto rep = check_assumptions(ch, px);
            if (!rep.all()) {
                row.note = "assumption check failed";
                continue;
            }
            try {
                const auto st = statistics(ch, px);
                const auto n = blocklengths(st, logM_bits, {eps, eps, eps});
                row.n1 = n[1];
                row.n2 = n[2];
                row.R1 = logM_bits / static_cast<double>(n[1]);
                row.R2 = logM_bits / static_cast<double>(n[2]);
                row.feasible = true;
            } catch (const Infeasible& e) {
                row.note = e.what();
            }
        }
    });
    mark_dominant(res);
    return res;
}

nlohmann::json RegionResult::to_json() const
{
    auto rows_json = nlohmann::json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"p", r.p},
                             {"feasible", r.feasible},
                             {"note", r.note},
                             {"n1", r.n1},
                             {"n2", r.n2},
                             {"R1", json_number(r.R1)},
                             {"R2", json_number(r.R2)},
                             {"dominant", r.dominant}});
    auto dom = nlohmann::json::array();
    for (std::size_t i : dominant)
        dom.push_back({{"p", rows[i].p}, {"R1", rows[i].R1}, {"R2", rows[i].R2}});
    return {{"rows", rows_json}, {"dominant", dom}};
}

std::vector<RateCurveRow> per_user_rate_curve(const ChannelStatistics& st, std::size_t n1, double eps, unsigned K)
{
    require(K >= 1 && K <= st.K, "K outside the available statistics");
    const double logM = solve_message_size(nats_to_bits(st.I[1]), nats_to_bits(nats_to_bits(st.V[1])), n1, eps);
    std::vector<RateCurveRow> rows;
    for (unsigned k = 1; k <= K; ++k) {
        RateCurveRow r;
        r.k = k;
        r.n = k == 1 ? n1
                     : solve_blocklength(nats_to_bits(st.I[k]), nats_to_bits(nats_to_bits(st.V[k])), k, logM, eps);
        r.R = logM / static_cast<double>(r.n);
        r.capacity = nats_to_bits(st.I[k]) / k;
        rows.push_back(r);
    }
    return rows;
}

}  // namespace raclab
