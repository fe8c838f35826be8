#include "raclab/bound.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "raclab/common.hpp"
#include "raclab/io.hpp"
#include "raclab/parallel.hpp"
#include "raclab/rng.hpp"

namespace raclab {

double repetition_probability(double M, unsigned k)
{
    require(k >= 1, "k must be at least 1");
    require(M >= static_cast<double>(k), "k exceeds M");
    double acc = 0.0;
    for (unsigned i = 1; i < k; ++i) acc += std::log1p(-static_cast<double>(i) / M);
    return -std::expm1(acc);
}

std::string to_string(TermKind kind)
{
    switch (kind) {
    case TermKind::dominating: return "dominating";
    case TermKind::zero_test: return "zero_test";
    case TermKind::repetition: return "repetition";
    case TermKind::wrong_time: return "wrong_time";
    case TermKind::confuse_self: return "confuse_self";
    case TermKind::confuse_other: return "confuse_other";
    }
    return "?";
}

DensityPmf term_pmf(const DensityTables& tab, TermKind kind, unsigned k, unsigned t, unsigned s)
{
    const auto& ch = tab.channel();
    const std::size_t nY = ch.output_size();
    require(k >= 1 && k <= ch.max_users(), "k outside 1..K");
    if (kind == TermKind::dominating) return sum_rate_density(tab, k);
    require(t >= 1 && t <= k, "t outside 1..k");

    DensityPmf pmf;
    const auto pyt = tab.output(t);
    switch (kind) {
    case TermKind::wrong_time: s = 0; [[fallthrough]];
    case TermKind::confuse_self: {
        require(s < t, "confuse_self needs s < t");
        const unsigned j = t - s;
        for (std::size_t r = 0; r < ch.space(j).count(); ++r) {
            const double w = tab.weight(j, r);
            if (w == 0.0) continue;
            const auto joint = tab.conditional(k, j, r);
            const auto num = tab.conditional(t, j, r);
            for (std::size_t y = 0; y < nY; ++y)
                pmf.add(ch.in_output(t, y) ? log_ratio(num[y], pyt[y]) : 0.0, w * joint[y]);
        }
        break;
    }
    case TermKind::confuse_other: {
        require(s >= 1 && s <= t, "confuse_other needs 1 <= s <= t");
        const unsigned j = t - s;
        for (std::size_t rb = 0; rb < ch.space(s).count(); ++rb) {
            const double wb = tab.weight(s, rb);
            if (wb == 0.0) continue;
            for (std::size_t r = 0; r < ch.space(j).count(); ++r) {
                const double w = wb * tab.weight(j, r);
                if (w == 0.0) continue;
                const auto joint = tab.conditional(k, j, r);
                const auto den = tab.conditional(t, j, r);
                const auto num = tab.conditional(t, t, tab.rank_union(s, rb, j, r));
                for (std::size_t y = 0; y < nY; ++y)
                    pmf.add(ch.in_output(t, y) ? log_ratio(num[y], den[y]) : 0.0, w * joint[y]);
            }
        }
        break;
    }
    default: throw InvalidArgument("term has no density law");
    }
    pmf.finalize();
    return pmf;
}

TailEstimate mc_tail(const DensityPmf& pmf, std::size_t n, double thr, bool upper, std::size_t trials,
                     std::uint64_t seed)
{
    require(n >= 1, "sum length must be at least 1");
    require(trials >= 1, "need at least one trial");
    const DiscreteSampler sample(pmf.probs);
    const auto& v = pmf.values;
    std::atomic<std::size_t> hits{0};
    parallel_chunks(trials, [&](std::size_t begin, std::size_t end, std::size_t) {
        std::size_t local = 0;
        for (std::size_t i = begin; i < end; ++i) {
            Rng rng(seed, {i});
            double sum = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double z = v[sample(rng)];
                if (z == -kInf) {
                    sum = -kInf;
                    break;
                }
                sum += z;
            }
            if (upper ? sum > thr : sum <= thr) ++local;
        }
        hits += local;
    });
    TailEstimate e;
    e.hits = hits.load();
    e.p = static_cast<double>(e.hits) / static_cast<double>(trials);
    e.se = std::sqrt(e.p * (1.0 - e.p) / static_cast<double>(trials));
    return e;
}

TestSpec design_zero_test(const CodeDesign& d, const DensityTables& tab)
{
    TestSpec t;
    t.kind = d.zero_test;
    t.gamma0 = d.gamma0;
    const auto p0 = tab.output(0);
    t.null.assign(p0.begin(), p0.end());
    return t;
}

namespace {

double log_choose(unsigned n, unsigned r)
{
    if (r > n) return -kInf;
    return std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0);
}

void finish(TermEstimate& e)
{
    if (e.log_prefactor == -kInf || e.probability == 0.0) {
        e.value = 0.0;
        e.value_se = e.log_prefactor == -kInf ? 0.0 : std::exp(e.log_prefactor) * e.probability_se;
        return;
    }
    const double f = std::exp(e.log_prefactor);
    e.value = f * e.probability;
    e.value_se = f * e.probability_se;
}

}  // namespace

ErrorBoundReport evaluate_bound(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design,
                                unsigned k, std::size_t trials, std::uint64_t seed)
{
    require(trials >= 10000, "at least 1e4 trials are required");
    require(design.K == ch.max_users(), "design and channel disagree on K");
    require(k <= ch.max_users(), "k exceeds K");
    const DensityTables tab(ch, px);
    const auto st = statistics(tab);
    const auto zero = design_zero_test(design, tab);

    ErrorBoundReport rep;
    rep.k = k;
    rep.trials = trials;
    rep.seed = seed;
    const double nt = static_cast<double>(trials);
    auto term_seed = [&](TermKind kind, unsigned t, unsigned s) {
        return derive_seed(seed, {k, static_cast<std::uint64_t>(kind), t, s});
    };

    // Zero test: type-I for k = 0, type-II otherwise.
    {
        TermEstimate e;
        e.kind = TermKind::zero_test;
        e.n = design.n[0];
        e.threshold = design.gamma0;
        bool done = false;
        if (zero.kind == TestKind::hoeffding) {
            // Exact over types when the count is manageable.
            try {
                const double la = hoeffding_log_accept_probability(zero.null, tab.output(k), e.n, zero.gamma0);
                e.probability = k == 0 ? -std::expm1(la) : std::exp(la);
                e.exact = true;
                done = true;
            } catch (const TableOverflow&) {
            }
        }
        if (!done) {
            const std::size_t acc = count_null_decisions(zero, tab.output(k), design.n[0], trials,
                                                         term_seed(TermKind::zero_test, 0, 0), 0);
            const std::size_t ev = k == 0 ? trials - acc : acc;
            e.probability = ev / nt;
            e.probability_se = std::sqrt(e.probability * (1.0 - e.probability) / nt);
            e.below_resolution = ev == 0;
        }
        finish(e);
        rep.terms.push_back(e);
    }

    if (k >= 1) {
        TermEstimate e;
        e.kind = TermKind::dominating;
        e.t = k;
        e.s = k;
        e.n = design.n[k];
        e.threshold = design.log_gamma[k];
        const auto est = mc_tail(term_pmf(tab, TermKind::dominating, k, k, k), e.n, e.threshold, false, trials,
                                 term_seed(TermKind::dominating, k, k));
        e.probability = est.p;
        e.probability_se = est.se;
        e.below_resolution = est.hits == 0;
        finish(e);
        rep.terms.push_back(e);

        TermEstimate r;
        r.kind = TermKind::repetition;
        r.exact = true;
        r.probability = repetition_probability(design.M, k);
        finish(r);
        rep.terms.push_back(r);
    }

    for (unsigned t = 1; t < k; ++t) {
        TermEstimate e;
        e.kind = TermKind::wrong_time;
        e.t = t;
        e.n = design.n[t];
        e.threshold = design.log_gamma[t];
        e.log_prefactor = log_choose(k, t);
        const auto est = mc_tail(term_pmf(tab, TermKind::wrong_time, k, t, 0), e.n, e.threshold, true, trials,
                                 term_seed(TermKind::wrong_time, t, 0));
        e.probability = est.p;
        e.probability_se = est.se;
        e.below_resolution = est.hits == 0;
        finish(e);
        rep.terms.push_back(e);
    }

    for (unsigned t = 1; t <= k; ++t) {
        const double nt_len = static_cast<double>(design.n[t]);
        for (unsigned s = 1; s < t; ++s) {
            TermEstimate e;
            e.kind = TermKind::confuse_self;
            e.t = t;
            e.s = s;
            e.n = design.n[t];
            e.log_prefactor = log_choose(k, t - s);
            const double E = st.cross[k][t][t - s];
            const auto pmf = term_pmf(tab, TermKind::confuse_self, k, t, s);
            if (E == -kInf) {
                // Threshold is -inf: the event is "no -inf summand".
                e.threshold = -kInf;
                e.exact = true;
                e.probability = std::pow(pmf.prob_finite(), nt_len);
            } else {
                e.threshold = nt_len * E + design.lambda_at(s, t, k);
                const auto est = mc_tail(pmf, e.n, e.threshold, true, trials, term_seed(TermKind::confuse_self, t, s));
                e.probability = est.p;
                e.probability_se = est.se;
                e.below_resolution = est.hits == 0;
            }
            finish(e);
            rep.terms.push_back(e);
        }
        for (unsigned s = 1; s <= t; ++s) {
            TermEstimate e;
            e.kind = TermKind::confuse_other;
            e.t = t;
            e.s = s;
            e.n = design.n[t];
            e.log_prefactor = log_choose(k, t - s) + log_choose_messages(design, k, s);
            const double E = t == s ? 0.0 : st.cross[k][t][t - s];
            if (E == -kInf) {
                e.threshold = kInf;
                e.exact = true;
                e.probability = 0.0;
            } else if (e.log_prefactor == -kInf) {
                e.threshold = design.log_gamma[t] - nt_len * E - design.lambda_at(s, t, k);
                e.exact = true;
                e.probability = 0.0;
            } else {
                e.threshold = design.log_gamma[t] - nt_len * E - design.lambda_at(s, t, k);
                const auto est = mc_tail(term_pmf(tab, TermKind::confuse_other, k, t, s), e.n, e.threshold, true,
                                         trials, term_seed(TermKind::confuse_other, t, s));
                e.probability = est.p;
                e.probability_se = est.se;
                e.below_resolution = est.hits == 0;
            }
            finish(e);
            rep.terms.push_back(e);
        }
    }

    double var = 0.0;
    for (const auto& e : rep.terms) {
        var += e.value_se * e.value_se;
        rep.total_raw += e.value;
        switch (e.kind) {
        case TermKind::dominating:
            rep.term_dominating += e.value;
            rep.se_dominating = std::hypot(rep.se_dominating, e.value_se);
            break;
        case TermKind::zero_test:
            rep.term_zero_test += e.value;
            rep.se_zero_test = std::hypot(rep.se_zero_test, e.value_se);
            break;
        case TermKind::repetition: rep.term_repetition += e.value; break;
        case TermKind::wrong_time:
            rep.term_wrong_time += e.value;
            rep.se_wrong_time = std::hypot(rep.se_wrong_time, e.value_se);
            break;
        case TermKind::confuse_self:
            rep.term_confuse_self += e.value;
            rep.se_confuse_self = std::hypot(rep.se_confuse_self, e.value_se);
            break;
        case TermKind::confuse_other:
            rep.term_confuse_other += e.value;
            rep.se_confuse_other = std::hypot(rep.se_confuse_other, e.value_se);
            break;
        }
    }
    rep.total_se = std::sqrt(var);
    rep.total = std::clamp(rep.total_raw, 0.0, 1.0);
    return rep;
}

nlohmann::json ErrorBoundReport::to_json() const
{
    auto terms_json = nlohmann::json::array();
    for (const auto& e : terms)
        terms_json.push_back({{"term", to_string(e.kind)},
                              {"t", e.t},
                              {"s", e.s},
                              {"n", e.n},
                              {"threshold", json_number(e.threshold)},
                              {"log_prefactor", json_number(e.log_prefactor)},
                              {"probability", json_number(e.probability)},
                              {"probability_se", json_number(e.probability_se)},
                              {"exact", e.exact},
                              {"below_mc_resolution", e.below_resolution},
                              {"value", json_number(e.value)},
                              {"value_clamped", json_number(std::clamp(e.value, 0.0, 1.0))},
                              {"value_se", json_number(e.value_se)}});
    return {{"k", k},
            {"trials", trials},
            {"seed", seed},
            {"term_dominating", json_number(term_dominating)},
            {"se_dominating", json_number(se_dominating)},
            {"term_zero_test", json_number(term_zero_test)},
            {"se_zero_test", json_number(se_zero_test)},
            {"term_repetition", json_number(term_repetition)},
            {"term_wrong_time", json_number(term_wrong_time)},
            {"se_wrong_time", json_number(se_wrong_time)},
            {"term_confuse_self", json_number(term_confuse_self)},
            {"se_confuse_self", json_number(se_confuse_self)},
            {"term_confuse_other", json_number(term_confuse_other)},
            {"se_confuse_other", json_number(se_confuse_other)},
            {"total_raw", json_number(total_raw)},
            {"total", json_number(total)},
            {"total_se", json_number(total_se)},
            {"terms", terms_json}};
}

}  // namespace raclab
