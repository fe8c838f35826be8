#include "raclab/infodensity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "raclab/common.hpp"
#include "raclab/io.hpp"

namespace raclab {

namespace {

// Expectation accumulator honoring 0 * (-inf) = 0.
struct Mean {
    double sum = 0.0;
    bool neg_inf = false;

    void add(double p, double v)
    {
        if (p <= 0.0) return;
        if (v == -kInf)
            neg_inf = true;
        else
            sum += p * v;
    }
    double value() const { return neg_inf ? -kInf : sum; }
};

}  // namespace

DensityTables::DensityTables(const ChannelFamily& ch, const InputDistribution& px) : ch_(&ch), px_(px.pmf)
{
    require(px_.size() == ch.input_size(), "input distribution size does not match the input alphabet");
    require_enumerable(ch);
    const unsigned K = ch.max_users();
    const std::size_t nY = ch.output_size();

    weights_.resize(K + 1);
    for (unsigned j = 0; j <= K; ++j) {
        const auto& sp = ch.space(j);
        weights_[j].resize(sp.count());
        for (std::size_t r = 0; r < sp.count(); ++r) weights_[j][r] = sp.probability(r, px_);
    }

    tables_.resize(K + 1);
    for (unsigned t = 0; t <= K; ++t) {
        tables_[t].resize(t + 1);
        for (unsigned j = 0; j <= t; ++j) {
            const auto& fixed = ch.space(j);
            const auto& free = ch.space(t - j);
            auto& tab = tables_[t][j];
            tab.assign(fixed.count() * nY, 0.0);
            for (std::size_t r = 0; r < fixed.count(); ++r) {
                for (std::size_t r2 = 0; r2 < free.count(); ++r2) {
                    const double w = weights_[t - j][r2];
                    if (w == 0.0) continue;
                    const auto row = ch.row(t, rank_union(j, r, t - j, r2));
                    for (std::size_t y = 0; y < nY; ++y) tab[r * nY + y] += w * row[y];
                }
            }
        }
    }
}

std::size_t DensityTables::rank_union(unsigned j1, std::size_t r1, unsigned j2, std::size_t r2) const
{
    const auto a = ch_->space(j1).counts(r1);
    const auto b = ch_->space(j2).counts(r2);
    unsigned c[16];
    std::vector<unsigned> big;
    unsigned* out = c;
    if (a.size() > 16) {
        big.resize(a.size());
        out = big.data();
    }
    for (std::size_t x = 0; x < a.size(); ++x) out[x] = a[x] + b[x];
    return ch_->space(j1 + j2).rank_of_counts({out, a.size()});
}

double density(const DensityTables& tab, unsigned t, std::span<const unsigned> A, std::span<const unsigned> B,
               std::span<const unsigned> x_A, std::span<const unsigned> x_B, std::size_t y)
{
    const auto& ch = tab.channel();
    require(t >= 1 && t <= ch.max_users(), "candidate count t outside 1..K");
    require(A.size() == x_A.size() && B.size() == x_B.size(), "index sets and symbol vectors differ in length");
    require(y < ch.output_size(), "output index out of range");
    std::vector<char> used(t + 1, 0);
    for (unsigned i : A) {
        require(i >= 1 && i <= t, "index in A outside 1..t");
        require(!used[i], "repeated index in A");
        used[i] = 1;
    }
    for (unsigned i : B) {
        require(i >= 1 && i <= t, "index in B outside 1..t");
        require(!used[i], "index sets A and B overlap");
        used[i] = 1;
    }
    const unsigned nb = static_cast<unsigned>(B.size());
    const std::size_t rb = ch.space(nb).rank_of_symbols(x_B);
    const std::size_t ra = ch.space(static_cast<unsigned>(A.size())).rank_of_symbols(x_A);
    if (A.empty() || !ch.in_output(t, y)) return 0.0;

    const auto num = tab.conditional(t, static_cast<unsigned>(A.size()) + nb,
                                     tab.rank_union(static_cast<unsigned>(A.size()), ra, nb, rb));
    const auto den = tab.conditional(t, nb, rb);
    return log_ratio(num[y], den[y]);
}

double density(const ChannelFamily& ch, const InputDistribution& px, unsigned t, std::span<const unsigned> A,
               std::span<const unsigned> B, std::span<const unsigned> x_A, std::span<const unsigned> x_B,
               std::size_t y)
{
    return density(DensityTables(ch, px), t, A, B, x_A, x_B, y);
}

void DensityPmf::add(double value, double prob)
{
    if (prob <= 0.0) return;
    values.push_back(value);
    probs.push_back(prob);
}

void DensityPmf::finalize()
{
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> v;
    std::vector<double> p;
    for (std::size_t i : order) {
        if (!v.empty() && v.back() == values[i])
            p.back() += probs[i];
        else {
            v.push_back(values[i]);
            p.push_back(probs[i]);
        }
    }
    values = std::move(v);
    probs = std::move(p);
}

double DensityPmf::total() const { return std::accumulate(probs.begin(), probs.end(), 0.0); }

double DensityPmf::mean() const
{
    Mean m;
    for (std::size_t i = 0; i < values.size(); ++i) m.add(probs[i], values[i]);
    return m.value();
}

double DensityPmf::variance() const
{
    const double mu = mean();
    if (!std::isfinite(mu)) return kInf;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += probs[i] * (values[i] - mu) * (values[i] - mu);
    return acc;
}

double DensityPmf::third_abs_moment() const
{
    const double mu = mean();
    if (!std::isfinite(mu)) return kInf;
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) acc += probs[i] * std::pow(std::abs(values[i] - mu), 3.0);
    return acc;
}

double DensityPmf::prob_finite() const
{
    double acc = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] > -kInf) acc += probs[i];
    return acc;
}

DensityPmf sum_rate_density(const DensityTables& tab, unsigned k)
{
    const auto& ch = tab.channel();
    const auto py = tab.output(k);
    DensityPmf pmf;
    for (std::size_t r = 0; r < ch.space(k).count(); ++r) {
        const double w = tab.weight(k, r);
        const auto row = ch.row(k, r);
        for (std::size_t y = 0; y < ch.output_size(); ++y) pmf.add(log_ratio(row[y], py[y]), w * row[y]);
    }
    pmf.finalize();
    return pmf;
}

ChannelStatistics statistics(const DensityTables& tab)
{
    const auto& ch = tab.channel();
    const unsigned K = ch.max_users();
    const std::size_t nY = ch.output_size();
    const auto px = tab.px();

    ChannelStatistics st;
    st.K = K;
    st.I.assign(K + 1, 0.0);
    st.V.assign(K + 1, 0.0);
    st.T.assign(K + 1, 0.0);
    st.B.assign(K + 1, 0.0);
    st.cond_mi.resize(K + 1);
    st.silenced_mi.resize(K + 1);
    st.chain.resize(K + 1);
    st.cross.resize(K + 1);
    st.output_pmf.resize(K + 1);

    std::vector<unsigned> c(ch.input_size());
    for (unsigned k = 0; k <= K; ++k) {
        const auto out = tab.output(k);
        st.output_pmf[k].assign(out.begin(), out.end());
        st.cond_mi[k].assign(k + 1, 0.0);
        st.silenced_mi[k].assign(k + 1, 0.0);
        st.chain[k].assign(k + 1, 0.0);
        st.cross[k].resize(k + 1);
        for (unsigned t = 0; t <= k; ++t) st.cross[k][t].assign(t + 1, 0.0);
        if (k == 0) continue;

        const auto pmf = sum_rate_density(tab, k);
        st.I[k] = pmf.mean();
        st.V[k] = pmf.variance();
        st.T[k] = pmf.third_abs_moment();
        st.B[k] = st.V[k] > 0.0 ? 6.0 * st.T[k] / std::pow(st.V[k], 1.5) : kInf;

        for (unsigned s = 1; s <= k; ++s) {
            // I_k(X_[s]; Y_k | X_[s+1:k])
            Mean cm;
            for (std::size_t r1 = 0; r1 < ch.space(s).count(); ++r1) {
                for (std::size_t r2 = 0; r2 < ch.space(k - s).count(); ++r2) {
                    const double w = tab.weight(s, r1) * tab.weight(k - s, r2);
                    if (w == 0.0) continue;
                    const auto row = ch.row(k, tab.rank_union(s, r1, k - s, r2));
                    const auto den = tab.conditional(k, k - s, r2);
                    for (std::size_t y = 0; y < nY; ++y) cm.add(w * row[y], log_ratio(row[y], den[y]));
                }
            }
            st.cond_mi[k][s] = cm.value();

            // Same with the other k - s inputs pinned to silence.
            std::vector<double> q(nY, 0.0);
            std::vector<std::size_t> ranks(ch.space(s).count());
            for (std::size_t r = 0; r < ch.space(s).count(); ++r) {
                const auto cs = ch.space(s).counts(r);
                std::copy(cs.begin(), cs.end(), c.begin());
                c[0] += k - s;
                ranks[r] = ch.space(k).rank_of_counts(c);
                const auto row = ch.row(k, ranks[r]);
                for (std::size_t y = 0; y < nY; ++y) q[y] += tab.weight(s, r) * row[y];
            }
            Mean sm;
            for (std::size_t r = 0; r < ch.space(s).count(); ++r) {
                const auto row = ch.row(k, ranks[r]);
                for (std::size_t y = 0; y < nY; ++y) sm.add(tab.weight(s, r) * row[y], log_ratio(row[y], q[y]));
            }
            st.silenced_mi[k][s] = sm.value();
        }

        // Chain-rule terms I_k(X_i; Y_k | X_[i-1]).
        for (unsigned i = 1; i <= k; ++i) {
            Mean m;
            for (std::size_t r1 = 0; r1 < ch.space(i - 1).count(); ++r1) {
                const auto den = tab.conditional(k, i - 1, r1);
                for (unsigned x = 0; x < ch.input_size(); ++x) {
                    const double w = tab.weight(i - 1, r1) * px[x];
                    if (w == 0.0) continue;
                    const std::size_t single = x;  // rank of {x} in the size-1 space
                    const auto num = tab.conditional(k, i, tab.rank_union(i - 1, r1, 1, single));
                    for (std::size_t y = 0; y < nY; ++y) m.add(w * num[y], log_ratio(num[y], den[y]));
                }
            }
            st.chain[k][i] = m.value();
        }

        // Cross expectations E[ı_t(X_[s]; Y_k)].
        for (unsigned t = 1; t <= k; ++t) {
            const auto pyt = tab.output(t);
            for (unsigned s = 1; s <= t; ++s) {
                Mean m;
                for (std::size_t r = 0; r < ch.space(s).count(); ++r) {
                    const double w = tab.weight(s, r);
                    if (w == 0.0) continue;
                    const auto joint = tab.conditional(k, s, r);
                    const auto num = tab.conditional(t, s, r);
                    for (std::size_t y = 0; y < nY; ++y) {
                        const double v = ch.in_output(t, y) ? log_ratio(num[y], pyt[y]) : 0.0;
                        m.add(w * joint[y], v);
                    }
                }
                st.cross[k][t][s] = m.value();
            }
        }
    }
    return st;
}

ChannelStatistics statistics(const ChannelFamily& ch, const InputDistribution& px)
{
    return statistics(DensityTables(ch, px));
}

nlohmann::json ChannelStatistics::to_json() const
{
    nlohmann::json doc;
    doc["K"] = K;
    doc["units"] = "nats";
    auto per_k = nlohmann::json::array();
    for (unsigned k = 1; k <= K; ++k) {
        nlohmann::json e;
        e["k"] = k;
        e["I"] = json_number(I[k]);
        e["V"] = json_number(V[k]);
        e["T"] = json_number(T[k]);
        e["B"] = json_number(B[k]);
        e["cond_mi"] = json_numbers(cond_mi[k]);
        e["silenced_mi"] = json_numbers(silenced_mi[k]);
        e["chain"] = json_numbers(chain[k]);
        auto cr = nlohmann::json::array();
        for (const auto& row : cross[k]) cr.push_back(json_numbers(row));
        e["cross"] = cr;
        per_k.push_back(e);
    }
    doc["per_k"] = per_k;
    auto outs = nlohmann::json::array();
    for (const auto& p : output_pmf) outs.push_back(json_numbers(p));
    doc["output_pmf"] = outs;
    return doc;
}

bool LemmaReport::lemma_pass(int lemma) const
{
    for (const auto& c : checks)
        if (c.lemma == lemma && !c.pass) return false;
    return true;
}

bool LemmaReport::all() const
{
    return std::all_of(checks.begin(), checks.end(), [](const LemmaCheck& c) { return c.pass; });
}

double LemmaReport::min_margin(int lemma) const
{
    double m = kInf;
    for (const auto& c : checks)
        if (c.lemma == lemma && c.strict) m = std::min(m, c.rhs - c.lhs);
    return m;
}

nlohmann::json LemmaReport::to_json() const
{
    auto arr = nlohmann::json::array();
    for (const auto& c : checks)
        arr.push_back({{"lemma", c.lemma},
                       {"detail", c.detail},
                       {"lhs", json_number(c.lhs)},
                       {"rhs", json_number(c.rhs)},
                       {"strict", c.strict},
                       {"pass", c.pass}});
    return {{"checks", arr},
            {"lemma1", lemma_pass(1)},
            {"lemma2", lemma_pass(2)},
            {"lemma3", lemma_pass(3)},
            {"lemma4", lemma_pass(4)},
            {"all", all()}};
}

LemmaReport verify_orderings(const ChannelStatistics& st)
{
    LemmaReport rep;
    auto strict = [&](int lemma, std::string detail, double lhs, double rhs) {
        rep.checks.push_back({lemma, std::move(detail), lhs, rhs, true, rhs - lhs > kLemmaMargin});
    };
    auto weak = [&](int lemma, std::string detail, double lhs, double rhs) {
        rep.checks.push_back({lemma, std::move(detail), lhs, rhs, false, lhs <= rhs + kKernelTol});
    };
    const auto str = [](unsigned v) { return std::to_string(v); };

    for (unsigned k = 2; k <= st.K; ++k) {
        for (unsigned s = 1; s < k; ++s) {
            strict(1, "I_" + str(k) + "/" + str(k) + " < I_" + str(s) + "/" + str(s), st.I[k] / k, st.I[s] / s);
            strict(2, "I_" + str(k) + "/" + str(k) + " < I_" + str(k) + "(X_[" + str(s) + "];Y|rest)/" + str(s),
                   st.I[k] / k, st.cond_mi[k][s] / s);
        }
        for (unsigned t = 1; t < k; ++t) {
            for (unsigned s = 1; s <= t; ++s) {
                const std::string tag = "(s=" + str(s) + ",t=" + str(t) + ",k=" + str(k) + ")";
                weak(3, "E[i_t(X_[s];Y_k)] <= I_k(X_[s];Y_k) " + tag, st.cross[k][t][s], st.cross[k][k][s]);
                strict(3, "I_k(X_[s];Y_k) < I_t(X_[s];Y_t) " + tag, st.cross[k][k][s], st.cross[t][t][s]);
            }
        }
        for (unsigned i = 1; i < k; ++i)
            strict(4, "I_" + str(k) + "(X_i;Y|X_[i-1]) increasing at i=" + str(i), st.chain[k][i],
                   st.chain[k][i + 1]);
    }
    return rep;
}

LemmaReport verify_orderings(const ChannelFamily& ch, const InputDistribution& px)
{
    return verify_orderings(statistics(ch, px));
}

}  // namespace raclab
