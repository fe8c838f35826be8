#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "raclab/bound.hpp"

using namespace raclab;

namespace {

oracle::Atoms to_atoms(const DensityPmf& pmf)
{
    oracle::Atoms a;
    for (std::size_t i = 0; i < pmf.values.size(); ++i) a.add(pmf.values[i], pmf.probs[i]);
    a.merge();
    return a;
}

bool same_law(const oracle::Atoms& a, const oracle::Atoms& b)
{
    if (std::abs(a.neg_inf - b.neg_inf) > 1e-12) return false;
    if (a.v.size() != b.v.size()) return false;
    for (std::size_t i = 0; i < a.v.size(); ++i)
        if (std::abs(a.v[i].first - b.v[i].first) > 1e-9 || std::abs(a.v[i].second - b.v[i].second) > 1e-12) return false;
    return true;
}

CodeDesign small_design(const ChannelStatistics& st)
{
    DesignOptions opt;
    opt.n0 = 5;
    opt.gamma0 = 0.25;
    return choose_parameters(st, 4.0, {0.02, 0.02, 0.02}, {0, 30, 80}, opt);
}

double term_sum(const ErrorBoundReport& r, TermKind kind)
{
    double v = 0.0;
    for (const auto& e : r.terms)
        if (e.kind == kind) v += e.value;
    return v;
}

}  // namespace

TEST_CASE("repetition probability")
{
    CHECK(repetition_probability(16.0, 1) == 0.0);
    CHECK(repetition_probability(4.0, 2) == doctest::Approx(0.25));
    CHECK(repetition_probability(1024.0, 3) == doctest::Approx(1.0 - (1.0 - 1.0 / 1024) * (1.0 - 2.0 / 1024)).epsilon(1e-12));
    CHECK(repetition_probability(3.0, 3) == doctest::Approx(1.0 - 2.0 / 9.0));
    CHECK_THROWS_AS(repetition_probability(2.0, 3), InvalidArgument);
}

TEST_CASE("single-letter term laws match the oracle")
{
    const InputDistribution px({0.4, 0.6});
    for (const auto& ch : {make_adder_erasure(3, 0.2), make_binary_example(0.7, 0.11), make_adder_erasure(3, 0.0)}) {
        const DensityTables tab(ch, px);
        const unsigned K = ch.max_users();
        for (unsigned k = 1; k <= K; ++k) {
            CHECK(same_law(to_atoms(term_pmf(tab, TermKind::dominating, k, k, k)),
                           oracle::term_law(ch, px, TermKind::dominating, k, k, k)));
            for (unsigned t = 1; t <= k; ++t) {
                if (t < k)
                    CHECK(same_law(to_atoms(term_pmf(tab, TermKind::wrong_time, k, t, 0)),
                                   oracle::term_law(ch, px, TermKind::wrong_time, k, t, 0)));
                for (unsigned s = 1; s <= t; ++s) {
                    if (s < t)
                        CHECK_MESSAGE(same_law(to_atoms(term_pmf(tab, TermKind::confuse_self, k, t, s)),
                                               oracle::term_law(ch, px, TermKind::confuse_self, k, t, s)),
                                      "confuse_self k=" << k << " t=" << t << " s=" << s);
                    CHECK_MESSAGE(same_law(to_atoms(term_pmf(tab, TermKind::confuse_other, k, t, s)),
                                           oracle::term_law(ch, px, TermKind::confuse_other, k, t, s)),
                                  "confuse_other k=" << k << " t=" << t << " s=" << s);
                }
            }
        }
    }
}

TEST_CASE("Monte Carlo tails agree with exact convolution")
{
    const InputDistribution px({0.4, 0.6});
    const auto ch = make_adder_erasure(3, 0.2);
    const DensityTables tab(ch, px);
    const std::size_t trials = 40000;
    for (unsigned k = 1; k <= 3; ++k)
        for (std::size_t n : {1u, 3u, 6u}) {
            const auto pmf = term_pmf(tab, TermKind::confuse_other, k, k, 1);
            const auto exact = oracle::convolve(oracle::term_law(ch, px, TermKind::confuse_other, k, k, 1), n);
            for (double thr : {-0.5, 0.3 * n, 0.7 * n})
                for (bool upper : {true, false}) {
                    const auto mc = mc_tail(pmf, n, thr, upper, trials, 100 + n);
                    const auto [lo, hi] = oracle::tail(exact, thr, upper);
                    const double se = std::max(mc.se, 1.0 / trials);
                    CHECK(mc.p >= lo - 4 * se);
                    CHECK(mc.p <= hi + 4 * se);
                }
        }
}

TEST_CASE("bound report structure")
{
    const auto ch = make_adder_erasure(2, 0.2);
    const auto half = InputDistribution::bernoulli(0.5);
    const auto d = small_design(statistics(ch, half));
    CHECK_THROWS_AS(evaluate_bound(ch, half, d, 1, 9999, 1), InvalidArgument);

    const auto r1 = evaluate_bound(ch, half, d, 1, 10000, 1);
    for (const auto& e : r1.terms) {
        CHECK(e.kind != TermKind::wrong_time);
        CHECK(e.kind != TermKind::confuse_self);
    }
    CHECK(r1.term_repetition == 0.0);

    const auto r0 = evaluate_bound(ch, half, d, 0, 10000, 1);
    REQUIRE(r0.terms.size() == 1);
    CHECK(r0.terms[0].kind == TermKind::zero_test);
    CHECK(r0.terms[0].exact);

    const auto r2 = evaluate_bound(ch, half, d, 2, 10000, 1);
    CHECK(r2.term_repetition == doctest::Approx(1.0 / 16.0));
    CHECK(r2.total >= 0.0);
    CHECK(r2.total <= 1.0);
    CHECK(r2.total == doctest::Approx(std::min(1.0, r2.total_raw)));
    CHECK(evaluate_bound(ch, half, d, 2, 10000, 1).to_json() == r2.to_json());
}

TEST_CASE("k = 1 bound against an exact evaluation")
{
    const auto ch = make_adder_erasure(2, 0.2);
    const auto half = InputDistribution::bernoulli(0.5);
    const auto st = statistics(ch, half);
    const auto d = small_design(st);
    const auto rep = evaluate_bound(ch, half, d, 1, 100000, 3);

    // zero test: accept types of Bernoulli draws under P_{Y_1}
    const DensityTables tab(ch, half);
    const double zero = std::exp(hoeffding_log_accept_probability(tab.output(0), tab.output(1), 5, 0.25));
    CHECK(rep.term_zero_test == doctest::Approx(zero).epsilon(1e-12));
    CHECK(zero == doctest::Approx(0.06144).epsilon(1e-3));

    const auto dom = oracle::tail(oracle::convolve(oracle::term_law(ch, half, TermKind::dominating, 1, 1, 1), 30),
                                  d.log_gamma[1], false);
    const auto oth = oracle::tail(oracle::convolve(oracle::term_law(ch, half, TermKind::confuse_other, 1, 1, 1), 30),
                                  d.log_gamma[1], true);
    CHECK(rep.term_dominating >= dom.first - 4 * rep.se_dominating - 1e-5);
    CHECK(rep.term_dominating <= dom.second + 4 * rep.se_dominating + 1e-5);
    CHECK(rep.term_confuse_other >= 15.0 * oth.first - 4 * rep.se_confuse_other - 1e-4);
    CHECK(rep.term_confuse_other <= 15.0 * oth.second + 4 * rep.se_confuse_other + 1e-4);
}

TEST_CASE("raising gamma trades the dominating term against confusion")
{
    const auto ch = make_adder_erasure(2, 0.2);
    const auto half = InputDistribution::bernoulli(0.5);
    auto d = small_design(statistics(ch, half));
    double prev_dom = -1.0, prev_conf = 2.0;
    const double base = d.log_gamma[1];
    for (double shift : {-4.0, -2.0, 0.0, 2.0, 4.0}) {
        d.log_gamma[1] = base + shift;
        const auto r = evaluate_bound(ch, half, d, 1, 20000, 8);
        CHECK(r.term_dominating >= prev_dom);
        CHECK(term_sum(r, TermKind::confuse_other) <= prev_conf);
        prev_dom = r.term_dominating;
        prev_conf = term_sum(r, TermKind::confuse_other);
    }
}

TEST_CASE("standard errors shrink with more trials")
{
    const auto ch = make_adder_erasure(2, 0.2);
    const auto half = InputDistribution::bernoulli(0.5);
    const auto d = small_design(statistics(ch, half));
    const auto a = evaluate_bound(ch, half, d, 2, 40000, 5);
    const auto b = evaluate_bound(ch, half, d, 2, 80000, 5);
    REQUIRE(a.se_dominating > 0.0);
    CHECK(b.se_dominating / a.se_dominating == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.15));
}

TEST_CASE("confusion terms with a -inf expectation")
{
    const auto ch = make_adder_erasure(3, 0.0);
    const auto half = InputDistribution::bernoulli(0.5);
    const auto st = statistics(ch, half);
    DesignOptions opt;
    opt.n0 = 4;
    const auto d = choose_parameters(st, 3.0, {0.1, 0.1, 0.1, 0.1}, {0, 10, 20, 30}, opt);
    const DensityTables tab(ch, half);
    int seen = 0;
    for (unsigned k = 2; k <= 3; ++k) {
        const auto r = evaluate_bound(ch, half, d, k, 10000, 2);
        for (const auto& e : r.terms) {
            if (e.kind != TermKind::confuse_self || e.threshold != -kInf) continue;
            ++seen;
            CHECK(e.exact);
            const auto pmf = term_pmf(tab, TermKind::confuse_self, k, e.t, e.s);
            CHECK(e.probability == doctest::Approx(std::pow(pmf.prob_finite(), static_cast<double>(e.n))));
        }
    }
    CHECK(seen > 0);
}
