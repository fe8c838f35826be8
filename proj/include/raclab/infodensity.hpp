#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "raclab/channel.hpp"

namespace raclab {

/// Conditional output laws of every t-user channel with j of the t inputs
/// fixed (as a multiset) and the other t - j drawn i.i.d. from P_X:
///
///   conditional(t, j, m)(y) = P_{Y_t | X_[j]}(y | m).
///
/// j = t gives the kernel itself and j = 0 the output marginal P_{Y_t}.
/// Every information density of the family is a log ratio of two entries.
/// Holds a reference to the channel, which must outlive it.
class DensityTables {
public:
    DensityTables(const ChannelFamily& ch, const InputDistribution& px);

    const ChannelFamily& channel() const { return *ch_; }
    std::span<const double> px() const { return px_; }
    unsigned max_users() const { return ch_->max_users(); }
    std::size_t output_size() const { return ch_->output_size(); }

    std::span<const double> conditional(unsigned t, unsigned j, std::size_t rank) const
    {
        return {tables_[t][j].data() + rank * ch_->output_size(), ch_->output_size()};
    }
    std::span<const double> output(unsigned t) const { return conditional(t, 0, 0); }

    /// Probability of multiset `rank` of size j under j i.i.d. draws.
    double weight(unsigned j, std::size_t rank) const { return weights_[j][rank]; }

    /// Rank (in the size j1 + j2 space) of the union of two multisets.
    std::size_t rank_union(unsigned j1, std::size_t r1, unsigned j2, std::size_t r2) const;

private:
    const ChannelFamily* ch_;
    std::vector<double> px_;
    std::vector<std::vector<double>> weights_;
    std::vector<std::vector<std::vector<double>>> tables_;  // [t][j][rank * nY + y]
};

/// ı_t(x_A; y | x_B) in nats. A and B are disjoint sets of positions in
/// 1..t; x_A, x_B the symbols at those positions. Zero when y lies outside
/// Y_t or A is empty, -inf when the numerator vanishes. An outcome that is
/// impossible even given x_B alone (0/0) also yields 0.
double density(const DensityTables& tab, unsigned t, std::span<const unsigned> A, std::span<const unsigned> B,
               std::span<const unsigned> x_A, std::span<const unsigned> x_B, std::size_t y);

double density(const ChannelFamily& ch, const InputDistribution& px, unsigned t, std::span<const unsigned> A,
               std::span<const unsigned> B, std::span<const unsigned> x_A, std::span<const unsigned> x_B,
               std::size_t y);

/// Finite-support law of a single-letter information density. Values may be
/// -inf; atoms with zero probability are dropped and equal values merged.
struct DensityPmf {
    std::vector<double> values;  // ascending
    std::vector<double> probs;

    void add(double value, double prob);
    void finalize();

    double total() const;
    /// Mean with the 0 * (-inf) = 0 convention; -inf if a -inf atom has mass.
    double mean() const;
    double variance() const;              // E[(Z - EZ)^2], finite atoms only
    double third_abs_moment() const;      // E|Z - EZ|^3
    double prob_finite() const;           // P[Z > -inf]
};

struct ChannelStatistics {
    unsigned K = 0;
    // Indexed by k = 0..K; entry 0 is zero.
    std::vector<double> I;  // nats
    std::vector<double> V;  // nats^2
    std::vector<double> T;  // E|ı - I|^3, nats^3
    std::vector<double> B;  // 6 T / V^1.5, +inf when V = 0

    // cond_mi[k][s] = I_k(X_[s]; Y_k | X_[s+1:k]), s = 0..k
    std::vector<std::vector<double>> cond_mi;
    // silenced_mi[k][s] = I_k(X_[s]; Y_k | X_[s+1:k] = 0^{k-s})
    std::vector<std::vector<double>> silenced_mi;
    // chain[k][i] = I_k(X_i; Y_k | X_[i-1]), i = 1..k (entry 0 unused)
    std::vector<std::vector<double>> chain;
    // cross[k][t][s] = E[ı_t(X_[s]; Y_k)], 0 <= s <= t <= k; may be -inf
    std::vector<std::vector<std::vector<double>>> cross;
    // output_pmf[k] = P_{Y_k} over the global output index
    std::vector<std::vector<double>> output_pmf;

    nlohmann::json to_json() const;
};

ChannelStatistics statistics(const DensityTables& tab);
ChannelStatistics statistics(const ChannelFamily& ch, const InputDistribution& px);

/// Law of ı_k(X_[k]; Y_k) under the k-user channel.
DensityPmf sum_rate_density(const DensityTables& tab, unsigned k);

struct LemmaCheck {
    int lemma = 0;
    std::string detail;
    double lhs = 0.0;
    double rhs = 0.0;
    bool strict = true;
    bool pass = false;
};

struct LemmaReport {
    std::vector<LemmaCheck> checks;
    bool lemma_pass(int lemma) const;
    bool all() const;
    double min_margin(int lemma) const;
    nlohmann::json to_json() const;
};

/// Strict-margin threshold for the ordering lemmas (nats).
inline constexpr double kLemmaMargin = 1e-9;

LemmaReport verify_orderings(const ChannelStatistics& st);
LemmaReport verify_orderings(const ChannelFamily& ch, const InputDistribution& px);

}  // namespace raclab
