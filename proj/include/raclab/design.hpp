#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "raclab/channel.hpp"
#include "raclab/detect.hpp"
#include "raclab/infodensity.hpp"

namespace raclab {

/// Gaussian tail Q(x) = P[N(0,1) > x].
double q_func(double x);

/// Inverse of Q on (0,1): |Q(q_inv(eps)) - eps| <= 1e-12.
double q_inv(double eps);

/// Smallest n with k*logM <= n I - sqrt(n V) Q^{-1}(eps) - log2(n)/2.
/// I, V in bits and bits^2. Throws Infeasible when I <= 0.
std::size_t solve_blocklength(double I_bits, double V_bits, unsigned k, double logM_bits, double eps);

/// logM = n1 I - sqrt(n1 V) Q^{-1}(eps) - log2(n1)/2 in bits; Infeasible if negative.
double solve_message_size(double I_bits, double V_bits, std::size_t n1, double eps);

enum class TauMode { normal, berry_esseen };

struct DesignOptions {
    TauMode tau_mode = TauMode::normal;
    std::vector<double> C;                 // Berry-Esseen slack constants C_k (k = 0..K); default 0
    TestKind zero_test = TestKind::hoeffding;
    bool hoeffding_bits = false;           // threshold |Y| log2(n)/n instead of ln
    std::optional<std::size_t> n0;         // override the n0 rule
    std::optional<double> gamma0;          // override the zero-test threshold
};

struct CodeDesign {
    unsigned K = 0;
    double M = 0.0;          // message count (exact below 2^53; may be +inf when huge)
    double logM_bits = 0.0;
    std::vector<std::size_t> n;        // n_0..n_K
    std::vector<double> eps;           // eps_0..eps_K
    std::vector<double> tau;           // tau_1..tau_K at index k (index 0 unused)
    std::vector<double> log_gamma;     // nats, index k (index 0 unused)
    // lambda[k][t][s] for 1 <= s <= t <= k, nats
    std::vector<std::vector<std::vector<double>>> lambda;
    TestKind zero_test = TestKind::hoeffding;
    double gamma0 = 0.0;
    TauMode tau_mode = TauMode::normal;

    double lambda_at(unsigned s, unsigned t, unsigned k) const { return lambda[k][t][s]; }
    nlohmann::json to_json() const;
};

/// ln C(M - k, s) for real M, exact when M is below 2^53.
double log_choose_messages(const CodeDesign& d, unsigned k, unsigned s);

/// Parameters of the code construction for M messages (log2 M bits),
/// targets eps_0..eps_K and blocklengths n_1..n_K (n[0] is ignored and
/// recomputed unless options.n0 is given).
CodeDesign choose_parameters(const ChannelStatistics& st, double logM_bits, const std::vector<double>& eps,
                             const std::vector<std::size_t>& n, const DesignOptions& opt = {});

/// Blocklengths n_1..n_K from solve_blocklength for every k.
std::vector<std::size_t> blocklengths(const ChannelStatistics& st, double logM_bits, const std::vector<double>& eps);

struct RegionRow {
    double p = 0.0;
    bool feasible = false;
    std::string note;
    std::size_t n1 = 0, n2 = 0;
    double R1 = 0.0, R2 = 0.0;
    bool dominant = false;
};

struct RegionResult {
    std::vector<RegionRow> rows;
    std::vector<std::size_t> dominant;  // indices into rows

    nlohmann::json to_json() const;
};

/// p grid {i/N : 0 < i < N}, N = round(1/step).
std::vector<double> make_p_grid(double step);

/// Marks points not componentwise dominated by another point; among equal
/// points the first (smallest p) wins.
void mark_dominant(RegionResult& r);

RegionResult sweep_rate_region(const ChannelFamily& ch, double logM_bits, double eps, const std::vector<double>& p_grid);

struct RateCurveRow {
    unsigned k = 0;
    std::size_t n = 0;
    double R = 0.0;          // bits per channel use per user
    double capacity = 0.0;   // I_k / k in bits
};

std::vector<RateCurveRow> per_user_rate_curve(const ChannelStatistics& st, std::size_t n1, double eps, unsigned K);

}  // namespace raclab
