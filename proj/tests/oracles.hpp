// Brute-force reference computations. Everything here works on ordered input
// vectors and raw kernel rows, never on the library's multiset tables.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "raclab/bound.hpp"
#include "raclab/channel.hpp"
#include "raclab/common.hpp"

namespace oracle {

using raclab::ChannelFamily;
using raclab::InputDistribution;

inline std::vector<std::vector<unsigned>> ordered_inputs(unsigned nX, unsigned k)
{
    std::vector<std::vector<unsigned>> all{{}};
    for (unsigned i = 0; i < k; ++i) {
        std::vector<std::vector<unsigned>> next;
        for (const auto& v : all)
            for (unsigned x = 0; x < nX; ++x) {
                auto w = v;
                w.push_back(x);
                next.push_back(w);
            }
        all = std::move(next);
    }
    return all;
}

inline double weight(const InputDistribution& px, const std::vector<unsigned>& x)
{
    double w = 1.0;
    for (unsigned s : x) w *= px.pmf[s];
    return w;
}

inline std::vector<unsigned> concat(const std::vector<unsigned>& a, const std::vector<unsigned>& b)
{
    auto r = a;
    r.insert(r.end(), b.begin(), b.end());
    return r;
}

// P_{Y_t | first |fixed| inputs = fixed}, the rest i.i.d. px.
inline std::vector<double> cond_output(const ChannelFamily& ch, const InputDistribution& px, unsigned t,
                                       const std::vector<unsigned>& fixed)
{
    std::vector<double> q(ch.output_size(), 0.0);
    const auto rest_len = static_cast<unsigned>(t - fixed.size());
    for (const auto& rest : ordered_inputs(ch.input_size(), rest_len)) {
        const double w = weight(px, rest);
        const auto x = concat(fixed, rest);
        const auto row = ch.row_for(t, x);
        for (std::size_t y = 0; y < q.size(); ++y) q[y] += w * row[y];
    }
    return q;
}

inline std::vector<double> output_pmf(const ChannelFamily& ch, const InputDistribution& px, unsigned t)
{
    return cond_output(ch, px, t, {});
}

inline double lr(double a, double b) { return raclab::log_ratio(a, b); }

struct SumRate {
    double I = 0.0, V = 0.0, T = 0.0;
};

inline SumRate sum_rate(const ChannelFamily& ch, const InputDistribution& px, unsigned k)
{
    const auto py = output_pmf(ch, px, k);
    std::vector<std::pair<double, double>> atoms;
    for (const auto& x : ordered_inputs(ch.input_size(), k)) {
        const double w = weight(px, x);
        const auto row = ch.row_for(k, x);
        for (std::size_t y = 0; y < py.size(); ++y)
            if (w * row[y] > 0.0) atoms.emplace_back(std::log(row[y] / py[y]), w * row[y]);
    }
    SumRate r;
    for (auto [v, p] : atoms) r.I += p * v;
    for (auto [v, p] : atoms) {
        r.V += p * (v - r.I) * (v - r.I);
        r.T += p * std::abs(v - r.I) * std::abs(v - r.I) * std::abs(v - r.I);
    }
    return r;
}

// I_k(X_[s]; Y_k | X_[s+1:k]).
inline double cond_mi(const ChannelFamily& ch, const InputDistribution& px, unsigned k, unsigned s)
{
    double acc = 0.0;
    for (const auto& tail : ordered_inputs(ch.input_size(), k - s)) {
        const auto den = cond_output(ch, px, k, tail);
        for (const auto& head : ordered_inputs(ch.input_size(), s)) {
            const double w = weight(px, head) * weight(px, tail);
            const auto row = ch.row_for(k, concat(tail, head));
            for (std::size_t y = 0; y < row.size(); ++y)
                if (w * row[y] > 0.0) acc += w * row[y] * std::log(row[y] / den[y]);
        }
    }
    return acc;
}

// A finite law with a separate mass at -inf.
struct Atoms {
    std::vector<std::pair<double, double>> v;
    double neg_inf = 0.0;

    void add(double value, double p)
    {
        if (p <= 0.0) return;
        if (value == -raclab::kInf)
            neg_inf += p;
        else
            v.emplace_back(value, p);
    }
    void merge()
    {
        std::sort(v.begin(), v.end());
        std::vector<std::pair<double, double>> out;
        for (auto a : v) {
            if (!out.empty() && std::abs(a.first - out.back().first) <= 1e-11 * (1.0 + std::abs(a.first)))
                out.back().second += a.second;
            else
                out.push_back(a);
        }
        v = std::move(out);
    }
};

// Single-letter law of a bound term, drawn under the k-user channel with the
// true inputs of users 1..k and an independent codeword for the confused set.
inline Atoms term_law(const ChannelFamily& ch, const InputDistribution& px, raclab::TermKind kind, unsigned k,
                      unsigned t, unsigned s)
{
    using raclab::TermKind;
    const unsigned nX = ch.input_size();
    const auto pyt = output_pmf(ch, px, t);
    const auto pyk = output_pmf(ch, px, k);
    Atoms a;
    for (const auto& x : ordered_inputs(nX, k)) {
        const double w = weight(px, x);
        if (w == 0.0) continue;
        const auto row = ch.row_for(k, x);
        for (std::size_t y = 0; y < row.size(); ++y) {
            const double p = w * row[y];
            if (p == 0.0) continue;
            switch (kind) {
            case TermKind::dominating: a.add(lr(row[y], pyk[y]), p); break;
            case TermKind::wrong_time: {
                const std::vector<unsigned> xt(x.begin(), x.begin() + t);
                a.add(ch.in_output(t, y) ? lr(ch.row_for(t, xt)[y], pyt[y]) : 0.0, p);
                break;
            }
            case TermKind::confuse_self: {
                const std::vector<unsigned> xj(x.begin(), x.begin() + (t - s));
                a.add(ch.in_output(t, y) ? lr(cond_output(ch, px, t, xj)[y], pyt[y]) : 0.0, p);
                break;
            }
            case TermKind::confuse_other: {
                const std::vector<unsigned> xj(x.begin(), x.begin() + (t - s));
                const auto den = cond_output(ch, px, t, xj);
                for (const auto& xb : ordered_inputs(nX, s)) {
                    const double wb = weight(px, xb);
                    if (wb == 0.0) continue;
                    const double num = ch.row_for(t, concat(xj, xb))[y];
                    a.add(ch.in_output(t, y) ? lr(num, den[y]) : 0.0, p * wb);
                }
                break;
            }
            default: break;
            }
        }
    }
    a.merge();
    return a;
}

// Exact law of Z_1 + .. + Z_n; -inf absorbs.
inline Atoms convolve(const Atoms& one, std::size_t n)
{
    Atoms acc;
    acc.v = {{0.0, 1.0}};
    for (std::size_t i = 0; i < n; ++i) {
        Atoms next;
        next.neg_inf = acc.neg_inf + (1.0 - acc.neg_inf) * one.neg_inf;
        for (auto [va, pa] : acc.v)
            for (auto [vb, pb] : one.v) next.v.emplace_back(va + vb, pa * pb);
        next.merge();
        acc = std::move(next);
    }
    return acc;
}

// P[S > thr] (upper) or P[S <= thr], returned as the interval spanned by
// atoms within `tol` of the threshold (floating ties go either way).
inline std::pair<double, double> tail(const Atoms& sum, double thr, bool upper, double tol = 1e-9)
{
    double lo = 0.0, hi = 0.0;
    if (!upper) lo = hi = sum.neg_inf;
    for (auto [v, p] : sum.v) {
        const bool in_strict = upper ? v > thr + tol : v <= thr - tol;
        const bool in_loose = upper ? v > thr - tol : v <= thr + tol;
        if (in_strict) lo += p;
        if (in_loose) hi += p;
    }
    return {lo, hi};
}

// Q(x) by composite Simpson integration of the normal density over the tail.
inline double q_integral(double x)
{
    if (x < 0.0) return 1.0 - q_integral(-x);
    const double a = x, b = x + 12.0;
    const int m = 20000;
    const double h = (b - a) / m;
    auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * 3.14159265358979323846); };
    double s = phi(a) + phi(b);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * phi(a + i * h);
    return s * h / 3.0;
}

inline double bisect(const std::function<double(double)>& f, double lo, double hi, double target, bool decreasing)
{
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const bool above = f(mid) > target;
        if (above == decreasing)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

inline double q_inv(double eps)
{
    // Q(x) < 1e-18 beyond 9, where the tail integral loses relative accuracy.
    return bisect(q_integral, -9.0, 9.0, eps, true);
}

// P[Z_1 <= c, Z_2 <= c] for a centered bivariate normal, by quadrature over Z_1.
inline double bivariate_cdf(double c, double v11, double v12, double v22)
{
    const double s1 = std::sqrt(v11);
    const double rho_s = v12 / v11;
    const double s_cond = std::sqrt(std::max(v22 - v12 * v12 / v11, 0.0));
    const int m = 4000;
    const double lo = -10.0 * s1, hi = std::min(c, 10.0 * s1);
    if (hi <= lo) return 0.0;
    const double h = (hi - lo) / m;
    auto f = [&](double z) {
        const double dens = std::exp(-0.5 * z * z / v11) / (s1 * std::sqrt(2.0 * 3.14159265358979323846));
        const double mu = rho_s * z;
        const double p = s_cond > 0.0 ? 0.5 * std::erfc(-(c - mu) / (s_cond * std::sqrt(2.0))) : (mu <= c ? 1.0 : 0.0);
        return dens * p;
    };
    double s = f(lo) + f(hi);
    for (int i = 1; i < m; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
    return s * h / 3.0;
}

}  // namespace oracle
