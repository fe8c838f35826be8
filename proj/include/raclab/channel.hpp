#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "raclab/multiset.hpp"

namespace raclab {

/// Single-letter input pmf P_X over the common input alphabet; symbol 0 is silence.
struct InputDistribution {
    std::vector<double> pmf;

    explicit InputDistribution(std::vector<double> p);

    static InputDistribution bernoulli(double p);

    std::size_t size() const { return pmf.size(); }
    std::span<const double> view() const { return pmf; }
};

/// A random access channel: the family of k-user MACs, k = 0..K, over finite
/// alphabets. Kernels are keyed by input multiset (see MultisetSpace), so
/// permutation invariance holds by construction. Outputs live in one global
/// index space (the labels of Y_K); Y_k is a subset of it and every kernel row
/// is a pmf over the global indices with zeros outside Y_k.
///
/// Immutable after construction. The constructor enforces row sums, nesting
/// Y_s in Y_k, and reducibility to within kKernelTol.
class ChannelFamily {
public:
    /// kernels[k] is a flat array of multiset rows: kernels[k][rank * |Y_K| + y].
    ChannelFamily(unsigned max_users, std::vector<std::string> input_labels,
                  std::vector<std::vector<std::string>> outputs_per_k, std::vector<std::vector<double>> kernels);

    unsigned max_users() const { return K_; }
    unsigned input_size() const { return static_cast<unsigned>(inputs_.size()); }
    std::size_t output_size() const { return outputs_.size(); }

    const std::vector<std::string>& input_labels() const { return inputs_; }
    const std::vector<std::string>& output_labels() const { return outputs_; }

    bool in_output(unsigned k, std::size_t y) const { return member_[k][y] != 0; }
    std::size_t output_count(unsigned k) const;

    const MultisetSpace& space(unsigned k) const { return spaces_[k]; }

    std::span<const double> row(unsigned k, std::size_t rank) const
    {
        return {kernels_[k].data() + rank * outputs_.size(), outputs_.size()};
    }

    /// Kernel row for an input vector in any order.
    std::span<const double> row_for(unsigned k, std::span<const unsigned> inputs) const;

    /// P_{Y_0}: the output law with every transmitter silent.
    std::span<const double> silence_output() const { return row(0, 0); }

    /// Position of each output on the real line (used by the KS test). Outputs
    /// are embedded by global index; builders put the erasure symbol last, so
    /// it sits above every numeric output.
    double position(std::size_t y) const { return static_cast<double>(y); }

    nlohmann::json to_json() const;
    static ChannelFamily from_json(const nlohmann::json& doc);

private:
    unsigned K_;
    std::vector<std::string> inputs_;
    std::vector<std::string> outputs_;
    std::vector<std::vector<char>> member_;
    std::vector<MultisetSpace> spaces_;
    std::vector<std::vector<double>> kernels_;
};

/// Y_k = sum of binary inputs w.p. 1 - delta, erasure "e" w.p. delta.
ChannelFamily make_adder_erasure(unsigned K, double delta);

/// The K = 2 binary channel: columns 00, 01/10, 11 are (1-b, b), (b, 1-b),
/// (1-a, a); k = 1 reduces to BSC(b).
ChannelFamily make_binary_example(double a, double b);

/// Outputs drawn from `output_pmf` regardless of the inputs. Transmitters do
/// not interfere, so this family violates the interference assumption.
ChannelFamily make_inputless(unsigned K, std::vector<double> output_pmf);

struct AssumptionReport {
    bool friendliness = false;
    double friendliness_margin = 0.0;  // min over (s,k) of silenced minus conditional MI
    bool interference = false;
    double interference_margin = 0.0;  // min over (s,t,k) of I(X_[s]; X_[s+1:t] | Y_k)
    bool output_separation = false;
    double delta0 = 0.0;               // min_k sup_x |F_k(x) - F_0(x)|
    bool positive_dispersion = false;
    double min_dispersion = 0.0;       // min_k V_k, nats^2

    bool all() const { return friendliness && interference && output_separation && positive_dispersion; }
    nlohmann::json to_json() const;
};

/// Maximum table size accepted by exact enumeration (|X|^K * |Y_K|).
inline constexpr double kMaxTableEntries = 1e7;

/// Throws TableOverflow when exact enumeration would exceed kMaxTableEntries.
void require_enumerable(const ChannelFamily& ch);

AssumptionReport check_assumptions(const ChannelFamily& ch, const InputDistribution& px);

}  // namespace raclab
