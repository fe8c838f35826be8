#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace raclab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kLn2 = 0.69314718055994530942;

/// Absolute tolerance for structural identities of channel kernels.
inline constexpr double kKernelTol = 1e-12;

/// Bad input: malformed channel, out-of-range parameter, unknown option.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A well-formed request that has no numerical solution (e.g. I_k <= 0).
class Infeasible : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact enumeration would exceed the table-size limit.
class TableOverflow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exhaustive tuple search exceeds the configured budget.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what)
{
    if (!cond) throw InvalidArgument(what);
}

inline double nats_to_bits(double x) { return x / kLn2; }
inline double bits_to_nats(double x) { return x * kLn2; }

/// log(a/b) with the conventions used for information densities:
/// a == 0 < b gives -inf; a == b == 0 gives 0 (outcome outside the support).
inline double log_ratio(double a, double b)
{
    if (b <= 0.0) return 0.0;
    if (a <= 0.0) return -kInf;
    return std::log(a / b);
}

}  // namespace raclab
