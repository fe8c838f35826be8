#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace raclab {

/// Exact binomial coefficient; throws TableOverflow past 2^63.
std::uint64_t binomial(unsigned n, unsigned r);

/// All multisets of `size` symbols drawn from {0, .., alphabet-1}, indexed
/// by their colex combinadic rank: the sorted symbols x_1 <= .. <= x_j map
/// to the strictly increasing z_i = x_i + i - 1, and rank = sum C(z_i, i).
/// Any permutation of an input vector therefore lands on the same rank.
class MultisetSpace {
public:
    MultisetSpace(unsigned alphabet, unsigned size);

    unsigned alphabet() const { return alphabet_; }
    unsigned multiset_size() const { return size_; }
    std::size_t count() const { return counts_.size() / (alphabet_ == 0 ? 1 : alphabet_); }

    /// Symbol counts (length = alphabet) of the multiset with this rank.
    std::span<const unsigned> counts(std::size_t rank) const
    {
        return {counts_.data() + rank * alphabet_, alphabet_};
    }

    std::size_t rank_of_counts(std::span<const unsigned> counts) const;
    std::size_t rank_of_symbols(std::span<const unsigned> symbols) const;

    /// Probability that `size` i.i.d. draws from pmf form this multiset.
    double probability(std::size_t rank, std::span<const double> pmf) const;

    /// Number of ordered vectors with these counts.
    double multiplicity(std::size_t rank) const;

private:
    unsigned alphabet_;
    unsigned size_;
    std::vector<unsigned> counts_;
};

}  // namespace raclab
