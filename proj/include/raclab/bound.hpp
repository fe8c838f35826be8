#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "raclab/channel.hpp"
#include "raclab/design.hpp"
#include "raclab/detect.hpp"
#include "raclab/infodensity.hpp"

namespace raclab {

/// 1 - prod_{i<k} (M - i)/M, exact in log domain.
double repetition_probability(double M, unsigned k);

enum class TermKind { dominating, zero_test, repetition, wrong_time, confuse_self, confuse_other };

std::string to_string(TermKind kind);

/// Single-letter law of the density summed in a bound term, drawn under the
/// k-user channel:
///   dominating     ı_k(X_[k]; Y_k)                      (t, s ignored)
///   wrong_time     ı_t(X_[t]; Y_k)                      (s ignored)
///   confuse_self   ı_t(X_[s+1:t]; Y_k)
///   confuse_other  ı_t(Xbar_[s]; Y_k | X_[s+1:t])       Xbar independent of Y_k
DensityPmf term_pmf(const DensityTables& tab, TermKind kind, unsigned k, unsigned t, unsigned s);

struct TailEstimate {
    double p = 0.0;
    double se = 0.0;
    std::size_t hits = 0;
};

/// P[Z_1 + .. + Z_n > thr] (upper) or P[.. <= thr] by Monte Carlo; a -inf
/// draw ends the sum at -inf.
TailEstimate mc_tail(const DensityPmf& pmf, std::size_t n, double thr, bool upper, std::size_t trials,
                     std::uint64_t seed);

struct TermEstimate {
    TermKind kind = TermKind::dominating;
    unsigned t = 0;
    unsigned s = 0;
    std::size_t n = 0;
    double threshold = 0.0;      // nats (zero test: gamma0)
    double log_prefactor = 0.0;  // ln of the combinatorial factor
    double probability = 0.0;
    double probability_se = 0.0;
    bool exact = false;
    bool below_resolution = false;  // MC saw no event
    double value = 0.0;             // prefactor * probability
    double value_se = 0.0;
};

struct ErrorBoundReport {
    unsigned k = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double term_dominating = 0.0, se_dominating = 0.0;
    double term_zero_test = 0.0, se_zero_test = 0.0;
    double term_repetition = 0.0;
    double term_wrong_time = 0.0, se_wrong_time = 0.0;
    double term_confuse_self = 0.0, se_confuse_self = 0.0;
    double term_confuse_other = 0.0, se_confuse_other = 0.0;
    double total_raw = 0.0;  // unclamped sum
    double total = 0.0;      // clamped to [0, 1]
    double total_se = 0.0;
    std::vector<TermEstimate> terms;

    nlohmann::json to_json() const;
};

/// The zero test implied by a design (kind, gamma0, null P_{Y_0}).
TestSpec design_zero_test(const CodeDesign& d, const DensityTables& tab);

ErrorBoundReport evaluate_bound(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design,
                                unsigned k, std::size_t trials, std::uint64_t seed);

}  // namespace raclab
