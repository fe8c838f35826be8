#include "raclab/sim.hpp"

#include <algorithm>
#include <cmath>

#include "raclab/common.hpp"
#include "raclab/infodensity.hpp"
#include "raclab/io.hpp"
#include "raclab/multiset.hpp"
#include "raclab/parallel.hpp"

namespace raclab {

Codebook::Codebook(std::size_t M, std::size_t n, const InputDistribution& px, std::uint64_t seed)
    : M_(M), n_(n), seed_(seed), symbols_(M * n)
{
    require(M >= 1, "codebook needs at least one message");
    require(px.size() <= 256, "input alphabet too large for the codebook");
    const DiscreteSampler sample(px.view());
    Rng rng(seed);
    for (auto& s : symbols_) s = static_cast<std::uint8_t>(sample(rng));
}

std::string to_string(ErrorCategory c)
{
    switch (c) {
    case ErrorCategory::none: return "correct";
    case ErrorCategory::zero_false_stop: return "zero_false_stop";
    case ErrorCategory::outage: return "outage";
    case ErrorCategory::early_decode: return "early_decode";
    case ErrorCategory::confusion: return "confusion";
    case ErrorCategory::repetition: return "repetition";
    case ErrorCategory::false_alarm: return "false_alarm";
    }
    return "?";
}

Decoder::Decoder(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design)
    : ch_(&ch), design_(&design), nX_(ch.input_size()), nY_(ch.output_size())
{
    const unsigned K = ch.max_users();
    require(design.K == K, "design and channel disagree on K");
    require(K <= 3, "exhaustive decoding supports K <= 3");
    require(std::isfinite(design.M) && design.M >= 1.0 && design.M <= 64.0 && design.M == std::floor(design.M),
            "exhaustive decoding needs an integer M <= 64");
    require(nX_ <= 256, "input alphabet too large");
    require(design.n.size() == K + 1, "design blocklengths incomplete");
    M_ = static_cast<std::size_t>(design.M);

    const DensityTables tab(ch, px);
    zero_.kind = design.zero_test;
    zero_.gamma0 = design.gamma0;
    zero_.null.assign(tab.output(0).begin(), tab.output(0).end());

    code_rank_.resize(K + 1);
    std::vector<unsigned> c(nX_);
    for (unsigned t = 0; t <= K; ++t) {
        std::size_t codes = 1;
        for (unsigned j = 0; j < t; ++j) codes *= nX_;
        code_rank_[t].resize(codes);
        for (std::size_t code = 0; code < codes; ++code) {
            std::fill(c.begin(), c.end(), 0u);
            std::size_t v = code;
            for (unsigned j = 0; j < t; ++j) {
                ++c[v % nX_];
                v /= nX_;
            }
            code_rank_[t][code] = static_cast<std::uint32_t>(ch.space(t).rank_of_counts(c));
        }
    }

    score_.resize(K + 1);
    for (unsigned t = 1; t <= K; ++t) {
        const auto pyt = tab.output(t);
        score_[t].resize(code_rank_[t].size() * nY_);
        for (std::size_t code = 0; code < code_rank_[t].size(); ++code) {
            const auto row = ch.row(t, code_rank_[t][code]);
            for (std::size_t y = 0; y < nY_; ++y)
                score_[t][code * nY_ + y] = ch.in_output(t, y) ? log_ratio(row[y], pyt[y]) : 0.0;
        }
    }

    out_.resize(K + 1);
    for (unsigned k = 0; k <= K; ++k)
        for (std::size_t r = 0; r < ch.space(k).count(); ++r) out_[k].emplace_back(ch.row(k, r));
}

EpochOutcome Decoder::run(const Codebook& cb, unsigned k, const std::vector<std::size_t>& messages,
                          std::uint64_t seed) const
{
    const CodeDesign& d = *design_;
    const unsigned K = d.K;
    require(k <= K, "k exceeds K");
    require(messages.size() == k, "need exactly k messages");
    require(cb.size() == M_, "codebook size differs from M");
    require(cb.length() >= d.n[K], "codebook shorter than n_K");
    for (std::size_t m : messages) require(m < M_, "message index out of range");

    EpochOutcome out;
    out.true_k = k;

    // All n_K outputs up front; decisions read prefixes.
    Rng rng(seed);
    const std::size_t nK = d.n[K];
    std::vector<std::uint32_t> y(nK);
    for (std::size_t i = 0; i < nK; ++i) {
        std::size_t code = 0, scale = 1;
        for (std::size_t m : messages) {
            code += cb.symbol(m, i) * scale;
            scale *= nX_;
        }
        y[i] = static_cast<std::uint32_t>(out_[k][code_rank_[k][code]](rng));
    }

    const std::size_t n0 = std::min(d.n[0], nK);
    std::vector<std::uint32_t> counts(nY_, 0);
    for (std::size_t i = 0; i < n0; ++i) ++counts[y[i]];
    bool stopped = zero_.accepts_null(counts, n0);

    if (stopped) {
        out.decoded_at = 0;
    } else {
        Rng tie(seed, {0x7e});
        std::vector<std::size_t> w;
        std::vector<std::vector<std::size_t>> hits;
        for (unsigned t = 1; t <= K && !out.decoded_at; ++t) {
            if (binomial(static_cast<unsigned>(M_), t) > kTupleBudget)
                throw BudgetExceeded("C(M," + std::to_string(t) + ") exceeds the tuple budget");
            if (M_ < t) continue;
            const std::size_t nt = d.n[t];
            const double thr = d.log_gamma[t];
            const auto& sc = score_[t];
            hits.clear();
            w.resize(t);
            for (unsigned j = 0; j < t; ++j) w[j] = j;
            while (true) {
                double s = 0.0;
                for (std::size_t i = 0; i < nt; ++i) {
                    std::size_t code = 0, scale = 1;
                    for (unsigned j = 0; j < t; ++j) {
                        code += cb.symbol(w[j], i) * scale;
                        scale *= nX_;
                    }
                    const double v = sc[code * nY_ + y[i]];
                    if (v == -kInf) {
                        s = -kInf;
                        break;
                    }
                    s += v;
                }
                if (s > thr) hits.push_back(w);
                // Next combination in lexicographic order.
                int j = static_cast<int>(t) - 1;
                while (j >= 0 && w[static_cast<std::size_t>(j)] == M_ - t + static_cast<std::size_t>(j)) --j;
                if (j < 0) break;
                ++w[static_cast<std::size_t>(j)];
                for (std::size_t i = static_cast<std::size_t>(j) + 1; i < t; ++i) w[i] = w[i - 1] + 1;
            }
            if (!hits.empty()) {
                out.decoded_at = t;
                out.hits = hits.size();
                out.decoded_messages = hits[hits.size() == 1 ? 0 : tie.below(hits.size())];
            }
        }
    }
    out.feedback_bits = out.decoded_at ? *out.decoded_at + 1 : K + 1;

    std::vector<std::size_t> sent(messages);
    std::sort(sent.begin(), sent.end());
    const bool repeated = std::adjacent_find(sent.begin(), sent.end()) != sent.end();

    if (k == 0) {
        out.correct = stopped;
        out.category = stopped ? ErrorCategory::none : ErrorCategory::false_alarm;
    } else if (repeated) {
        out.category = ErrorCategory::repetition;
    } else if (stopped) {
        out.category = ErrorCategory::zero_false_stop;
    } else if (!out.decoded_at || *out.decoded_at > k) {
        out.category = ErrorCategory::outage;
    } else if (*out.decoded_at < k) {
        out.category = ErrorCategory::early_decode;
    } else if (out.hits > 1 || out.decoded_messages != sent) {
        out.category = ErrorCategory::confusion;
    } else {
        out.correct = true;
    }
    return out;
}

EpochOutcome run_epoch(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design,
                       const Codebook& codebook, unsigned k, const std::vector<std::size_t>& messages,
                       std::uint64_t seed)
{
    return Decoder(ch, px, design).run(codebook, k, messages, seed);
}

SimulationResult estimate_error_rates(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design,
                                      unsigned k, std::size_t trials, std::uint64_t seed,
                                      const SimulationOptions& opt)
{
    require(trials >= 1000, "at least 1e3 epochs are required");
    const Decoder dec(ch, px, design);
    const std::size_t M = static_cast<std::size_t>(design.M);
    const std::size_t nK = design.n[design.K];
    std::optional<Codebook> frozen;
    if (opt.freeze_codebook) frozen.emplace(M, nK, px, derive_seed(seed, {0xC0DEB00C}));

    std::vector<EpochOutcome> outcomes(trials);
    parallel_chunks(trials, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t e = begin; e < end; ++e) {
            Rng mr(seed, {k, e, 2});
            std::vector<std::size_t> msgs(k);
            for (auto& m : msgs) m = mr.below(M);
            const std::uint64_t cs = derive_seed(seed, {k, e, 3});
            if (frozen) {
                outcomes[e] = dec.run(*frozen, k, msgs, cs);
            } else {
                const Codebook cb(M, nK, px, derive_seed(seed, {k, e, 1}));
                outcomes[e] = dec.run(cb, k, msgs, cs);
            }
        }
    });

    SimulationResult res;
    res.k = k;
    res.trials = trials;
    res.seed = seed;
    res.decode_time_counts.assign(design.K + 2, 0);
    double fb = 0.0;
    for (const auto& o : outcomes) {
        ++res.counts[static_cast<std::size_t>(o.category)];
        ++res.decode_time_counts[o.decoded_at ? *o.decoded_at : design.K + 1];
        fb += o.feedback_bits;
    }
    res.errors = trials - res.counts[static_cast<std::size_t>(ErrorCategory::none)];
    const double nt = static_cast<double>(trials);
    res.eps_hat = res.errors / nt;
    res.se = std::sqrt(res.eps_hat * (1.0 - res.eps_hat) / nt);
    wilson_interval(res.errors, trials, 1.96, res.wilson_lo, res.wilson_hi);
    res.mean_feedback_bits = fb / nt;
    return res;
}

nlohmann::json SimulationResult::to_json() const
{
    nlohmann::json cats;
    for (std::size_t c = 0; c < kCategoryCount; ++c) cats[to_string(static_cast<ErrorCategory>(c))] = counts[c];
    return {{"k", k},
            {"trials", trials},
            {"seed", seed},
            {"counts", cats},
            {"errors", errors},
            {"eps_hat", json_number(eps_hat)},
            {"se", json_number(se)},
            {"wilson", {json_number(wilson_lo), json_number(wilson_hi)}},
            {"decode_time_counts", decode_time_counts},
            {"mean_feedback_bits", json_number(mean_feedback_bits)}};
}

}  // namespace raclab
