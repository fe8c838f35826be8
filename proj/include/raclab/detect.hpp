#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "raclab/channel.hpp"

namespace raclab {

enum class TestKind { hoeffding, ks, llr };

std::string to_string(TestKind kind);
TestKind parse_test_kind(const std::string& name);

/// D(p || q) in nats; +inf when p is not absolutely continuous w.r.t. q.
double divergence(std::span<const double> p, std::span<const double> q);

/// sup_x |F_p(x) - F_q(x)| with outputs embedded at their global index.
double ks_distance(std::span<const double> p, std::span<const double> q);

/// D(P_hat || null) from output samples (global indices).
double hoeffding_statistic(std::span<const std::size_t> samples, std::span<const double> null);
double hoeffding_statistic_counts(std::span<const std::uint32_t> counts, std::size_t n, std::span<const double> null);

/// KS statistic against a general CDF. `left` gives F0(x-); when empty F0 is
/// taken to be continuous. The supremum is evaluated at the sample points
/// and their left limits.
double ks_statistic(std::span<const double> samples, const std::function<double(double)>& F0,
                    const std::function<double(double)>& left = {});

/// KS statistic of output samples against a pmf on the index embedding.
double ks_statistic(std::span<const std::size_t> samples, std::span<const double> null);
double ks_statistic_counts(std::span<const std::uint32_t> counts, std::size_t n, std::span<const double> null);

/// Hoeffding: |Y| ln(n)/n (log2 in bits mode). KS: sqrt(ln(2/eps0)/(2n)),
/// which is 0 once eps0 >= 2.
double threshold(TestKind kind, std::size_t n, double eps0, std::size_t alphabet_size, bool bits = false);

struct TestSpec {
    TestKind kind = TestKind::hoeffding;
    double gamma0 = 0.0;                            // hoeffding, ks
    std::vector<double> tau;                        // llr, one entry per alternative
    std::vector<double> null;                       // P_{Y_0}
    std::vector<std::vector<double>> alternatives;  // P_{Y_1..Y_K}, llr only

    /// True when the test decides "no transmitter active" on this type.
    bool accepts_null(std::span<const std::uint32_t> counts, std::size_t n) const;
    void validate() const;
    nlohmann::json to_json() const;
};

/// Hoeffding or KS test with the standard threshold at n0.
TestSpec make_test(TestKind kind, std::span<const double> null, std::size_t n0, double eps0,
                   std::size_t alphabet_size);

struct TestErrorEstimate {
    TestKind kind = TestKind::hoeffding;
    std::size_t n0 = 0;
    std::size_t trials = 0;
    std::uint64_t seed = 0;
    double alpha = 0.0;
    double alpha_se = 0.0;
    double alpha_lo = 0.0;
    double alpha_hi = 0.0;
    std::vector<double> beta;  // k = 1..K at index k-1
    std::vector<double> beta_se;
    std::vector<double> beta_lo;
    std::vector<double> beta_hi;

    nlohmann::json to_json() const;
};

/// Number of trials (n i.i.d. draws from `law` each) on which the test
/// accepts the null. Trial i uses the stream (seed, stream, i).
std::size_t count_null_decisions(const TestSpec& test, std::span<const double> law, std::size_t n,
                                 std::size_t trials, std::uint64_t seed, std::uint64_t stream);

/// Monte Carlo type-I error under P_{Y_0} and type-II errors under each
/// P_{Y_k}. With i.i.d. inputs the k-user outputs are i.i.d. P_{Y_k}, so
/// samples are drawn from the marginal directly.
TestErrorEstimate estimate_test_errors(const ChannelFamily& ch, const InputDistribution& px, const TestSpec& test,
                                       std::size_t n0, std::size_t trials, std::uint64_t seed);

/// Exact ln P[D(P_hat || null) <= gamma0] for n i.i.d. draws from `law`, by
/// enumerating the types supported on supp(null). Throws TableOverflow when
/// there are more than 5e7 types.
double hoeffding_log_accept_probability(std::span<const double> null, std::span<const double> law, std::size_t n,
                                        double gamma0);

struct MinimaxResult {
    double D_min = 0.0;
    std::vector<unsigned> I_min;  // 1-based alternative indices attaining D_min
    std::vector<unsigned> I_used; // after removing duplicate alternatives
    std::vector<std::vector<double>> V_min;
    bool singular = false;
    std::optional<double> b;

    nlohmann::json to_json() const;
};

/// Mean D and covariance V of the LLR vector log(P0/Pk)(Y), Y ~ P0.
void llr_moments(std::span<const double> null, const std::vector<std::vector<double>>& alternatives,
                 std::vector<double>& D, std::vector<std::vector<double>>& V);

MinimaxResult minimax_quantile(std::span<const double> null, const std::vector<std::vector<double>>& alternatives,
                               double eps0, std::size_t mc_trials, std::uint64_t seed = 1);

/// LLR thresholds tau = n D - sqrt(n) b 1, with b solved on the full LLR
/// covariance (a positive semidefinite factor is used when it is singular).
std::vector<double> llr_thresholds(std::span<const double> null, const std::vector<std::vector<double>>& alternatives,
                                   std::size_t n, double eps0, std::size_t mc_trials, std::uint64_t seed = 1);

std::size_t n0_expansion(double D_min, double b, std::size_t n1);

/// Wilson score interval for x successes in n trials.
void wilson_interval(std::size_t x, std::size_t n, double z, double& lo, double& hi);

}  // namespace raclab
