#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "raclab/channel.hpp"
#include "raclab/design.hpp"
#include "raclab/detect.hpp"
#include "raclab/rng.hpp"

namespace raclab {

/// M codewords of n symbols drawn i.i.d. from P_X. Messages are 0-based.
class Codebook {
public:
    Codebook(std::size_t M, std::size_t n, const InputDistribution& px, std::uint64_t seed);

    std::size_t size() const { return M_; }
    std::size_t length() const { return n_; }
    std::uint64_t seed() const { return seed_; }
    unsigned symbol(std::size_t message, std::size_t i) const { return symbols_[message * n_ + i]; }

private:
    std::size_t M_;
    std::size_t n_;
    std::uint64_t seed_;
    std::vector<std::uint8_t> symbols_;
};

enum class ErrorCategory { none, zero_false_stop, outage, early_decode, confusion, repetition, false_alarm };
inline constexpr std::size_t kCategoryCount = 7;

std::string to_string(ErrorCategory c);

struct EpochOutcome {
    unsigned true_k = 0;
    std::optional<unsigned> decoded_at;   // 0 = stopped by the zero test at n0
    std::vector<std::size_t> decoded_messages;
    std::size_t hits = 0;                 // tuples above threshold at the decision time
    bool correct = false;
    ErrorCategory category = ErrorCategory::none;
    unsigned feedback_bits = 0;
};

/// Tuple searches above this many candidates per decoding time are refused.
inline constexpr std::uint64_t kTupleBudget = 50000;

/// Precomputed decoding tables for one (channel, P_X, design).
class Decoder {
public:
    Decoder(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design);

    EpochOutcome run(const Codebook& cb, unsigned k, const std::vector<std::size_t>& messages,
                     std::uint64_t seed) const;

private:
    const ChannelFamily* ch_;
    const CodeDesign* design_;
    TestSpec zero_;
    std::size_t nX_;
    std::size_t nY_;
    std::size_t M_;
    // Ordered input vector (base-|X| code) to multiset rank, per user count.
    std::vector<std::vector<std::uint32_t>> code_rank_;
    // score_[t][code * nY + y] = ı_t(x_[t]; y)
    std::vector<std::vector<double>> score_;
    std::vector<std::vector<DiscreteSampler>> out_;  // out_[k][rank]
};

EpochOutcome run_epoch(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design,
                       const Codebook& codebook, unsigned k, const std::vector<std::size_t>& messages,
                       std::uint64_t seed);

struct SimulationOptions {
    bool freeze_codebook = false;  // default: a fresh codebook per epoch
};

struct SimulationResult {
    unsigned k = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    std::array<std::size_t, kCategoryCount> counts{};  // indexed by ErrorCategory
    std::size_t errors = 0;
    double eps_hat = 0.0;
    double se = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    std::vector<std::size_t> decode_time_counts;  // index t = 0..K, plus never at K+1
    double mean_feedback_bits = 0.0;

    nlohmann::json to_json() const;
};

SimulationResult estimate_error_rates(const ChannelFamily& ch, const InputDistribution& px, const CodeDesign& design,
                                      unsigned k, std::size_t trials, std::uint64_t seed,
                                      const SimulationOptions& opt = {});

}  // namespace raclab
