#include "raclab/multiset.hpp"

#include <cmath>
#include <limits>

#include "raclab/common.hpp"

namespace raclab {

std::uint64_t binomial(unsigned n, unsigned r)
{
    if (r > n) return 0;
    if (r > n - r) r = n - r;
    unsigned __int128 acc = 1;
    for (unsigned i = 1; i <= r; ++i) {
        acc = acc * (n - r + i) / i;
        if (acc > static_cast<unsigned __int128>(std::numeric_limits<std::int64_t>::max()))
            throw TableOverflow("binomial coefficient exceeds 64-bit range");
    }
    return static_cast<std::uint64_t>(acc);
}

MultisetSpace::MultisetSpace(unsigned alphabet, unsigned size) : alphabet_(alphabet), size_(size)
{
    require(alphabet >= 1, "multiset alphabet must be nonempty");
    const std::uint64_t n = binomial(alphabet + size - 1, size);
    counts_.assign(static_cast<std::size_t>(n) * alphabet, 0);

    // Walk all nondecreasing sequences and drop each at its rank.
    std::vector<unsigned> seq(size, 0);
    std::vector<unsigned> c(alphabet, 0);
    while (true) {
        std::fill(c.begin(), c.end(), 0u);
        for (unsigned x : seq) ++c[x];
        const std::size_t r = rank_of_counts(c);
        std::copy(c.begin(), c.end(), counts_.begin() + static_cast<std::ptrdiff_t>(r * alphabet));
        // Next nondecreasing sequence.
        int i = static_cast<int>(size) - 1;
        while (i >= 0 && seq[static_cast<std::size_t>(i)] == alphabet - 1) --i;
        if (i < 0) break;
        const unsigned v = seq[static_cast<std::size_t>(i)] + 1;
        for (std::size_t j = static_cast<std::size_t>(i); j < size; ++j) seq[j] = v;
    }
}

std::size_t MultisetSpace::rank_of_counts(std::span<const unsigned> counts) const
{
    std::size_t rank = 0;
    unsigned i = 1;
    for (unsigned x = 0; x < alphabet_; ++x) {
        for (unsigned c = 0; c < counts[x]; ++c, ++i) rank += binomial(x + i - 1, i);
    }
    return rank;
}

std::size_t MultisetSpace::rank_of_symbols(std::span<const unsigned> symbols) const
{
    std::vector<unsigned> c(alphabet_, 0);
    for (unsigned x : symbols) {
        require(x < alphabet_, "input symbol out of alphabet");
        ++c[x];
    }
    return rank_of_counts(c);
}

double MultisetSpace::multiplicity(std::size_t rank) const
{
    const auto c = counts(rank);
    double lw = std::lgamma(static_cast<double>(size_) + 1.0);
    for (unsigned x = 0; x < alphabet_; ++x) lw -= std::lgamma(static_cast<double>(c[x]) + 1.0);
    return std::round(std::exp(lw));
}

double MultisetSpace::probability(std::size_t rank, std::span<const double> pmf) const
{
    const auto c = counts(rank);
    double p = multiplicity(rank);
    for (unsigned x = 0; x < alphabet_; ++x)
        if (c[x] > 0) p *= std::pow(pmf[x], static_cast<double>(c[x]));
    return p;
}

}  // namespace raclab
