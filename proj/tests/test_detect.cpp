#include <doctest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "raclab/design.hpp"
#include "raclab/detect.hpp"
#include "raclab/infodensity.hpp"
#include "raclab/rng.hpp"

using namespace raclab;

namespace {

std::vector<std::size_t> draw(const std::vector<double>& pmf, std::size_t n, Rng& rng)
{
    DiscreteSampler s(pmf);
    std::vector<std::size_t> out(n);
    for (auto& y : out) y = s(rng);
    return out;
}

struct Laws {
    std::vector<double> null;
    std::vector<std::vector<double>> alts;
};

Laws laws(const ChannelFamily& ch)
{
    const auto st = statistics(ch, InputDistribution::bernoulli(0.5));
    Laws L{st.output_pmf[0], {}};
    for (unsigned k = 1; k <= ch.max_users(); ++k) L.alts.push_back(st.output_pmf[k]);
    return L;
}

}  // namespace

TEST_CASE("Hoeffding statistic")
{
    const std::vector<double> null{0.8, 0.0, 0.0, 0.2};
    const std::vector<std::size_t> zeros(10, 0);
    CHECK(hoeffding_statistic(zeros, std::vector<double>{1.0, 0.0, 0.0, 0.0}) == 0.0);
    CHECK(hoeffding_statistic(std::vector<std::size_t>{0, 1, 3}, null) == kInf);
    // exact type match
    CHECK(hoeffding_statistic(std::vector<std::size_t>{0, 0, 0, 0, 3}, null) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK_THROWS_AS(hoeffding_statistic(std::vector<std::size_t>{}, null), InvalidArgument);

    Rng rng(3);
    const std::vector<double> q{0.1, 0.6, 0.3};
    for (int i = 0; i < 200; ++i) CHECK(hoeffding_statistic(draw(q, 7, rng), q) >= 0.0);

    // adder: P_{Y_2} puts mass outside supp P_{Y_0}
    const auto L = laws(make_adder_erasure(2, 0.2));
    CHECK(hoeffding_statistic(draw(L.alts[1], 100, rng), L.null) == kInf);
    CHECK(divergence(L.alts[1], L.null) == kInf);

    // full-support case: concentrates near D(P_Y2 || P_Y0)
    const auto B = laws(make_binary_example(0.7, 0.11));
    const double D = divergence(B.alts[1], B.null);
    double mean = 0.0;
    for (int i = 0; i < 200; ++i) mean += hoeffding_statistic(draw(B.alts[1], 2000, rng), B.null) / 200.0;
    CHECK(std::abs(mean - D) < 0.02);
}

TEST_CASE("KS statistic")
{
    const std::function<double(double)> uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
    CHECK(ks_statistic(std::vector<double>{0.5}, uniform) == doctest::Approx(0.5));
    for (std::size_t n : {1u, 4u, 25u}) {
        std::vector<double> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = (i + 0.5) / n;
        CHECK(ks_statistic(q, uniform) == doctest::Approx(0.5 / n));
    }
    CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, uniform), InvalidArgument);

    const auto L = laws(make_adder_erasure(2, 0.2));
    const double sup = ks_distance(L.alts[1], L.null);
    Rng rng(11);
    int above = 0;
    for (int i = 0; i < 1000; ++i) above += ks_statistic(draw(L.alts[1], 200, rng), L.null) > sup - 0.1;
    CHECK(above >= 990);
}

TEST_CASE("thresholds")
{
    CHECK(threshold(TestKind::ks, 200, 0.05, 4) == doctest::Approx(std::sqrt(std::log(40.0) / 400.0)));
    CHECK(threshold(TestKind::ks, 200, 0.05, 4) == doctest::Approx(0.09603).epsilon(1e-4));
    CHECK(threshold(TestKind::hoeffding, 100, 0.05, 4, true) == doctest::Approx(4.0 * std::log2(100.0) / 100.0));
    CHECK(threshold(TestKind::hoeffding, 100, 0.05, 4) == doctest::Approx(4.0 * std::log(100.0) / 100.0));
    CHECK(threshold(TestKind::ks, 200, 2.0, 4) == 0.0);
}

TEST_CASE("divergence and KS distance relation")
{
    for (const auto& ch : {make_adder_erasure(3, 0.2), make_binary_example(0.7, 0.11), make_binary_example(0.11, 0.11)}) {
        const auto L = laws(ch);
        for (const auto& a : L.alts) {
            const double d = ks_distance(a, L.null);
            CHECK(divergence(L.null, a) >= 2 * d * d + 4.0 / 9.0 * d * d * d * d);
        }
    }
}

TEST_CASE("test error estimation")
{
    const auto ch = make_adder_erasure(2, 0.2);
    const auto half = InputDistribution::bernoulli(0.5);
    const auto null = laws(ch).null;
    for (std::size_t n : {50u, 200u, 800u}) {
        const auto spec = make_test(TestKind::ks, null, n, 0.05, ch.output_size());
        const auto e = estimate_test_errors(ch, half, spec, n, 20000, 9);
        CHECK(e.alpha <= 0.05 + 3 * e.alpha_se);
        CHECK(e.alpha <= 2 * std::exp(-2.0 * n * spec.gamma0 * spec.gamma0) + 4 * e.alpha_se);
        CHECK(e.alpha_lo <= e.alpha);
        CHECK(e.alpha <= e.alpha_hi);
    }
    const auto spec = make_test(TestKind::ks, null, 10, 0.05, ch.output_size());
    CHECK_THROWS_AS(estimate_test_errors(ch, half, spec, 10, 9999, 1), InvalidArgument);
    CHECK_THROWS_AS(estimate_test_errors(ch, half, spec, 0, 10000, 1), InvalidArgument);

    const auto a = estimate_test_errors(ch, half, spec, 10, 10000, 4);
    const auto b = estimate_test_errors(ch, half, spec, 10, 10000, 4);
    CHECK(a.to_json() == b.to_json());
}

TEST_CASE("exact Hoeffding acceptance probability")
{
    const std::vector<double> null{0.8, 0.0, 0.0, 0.2};
    const std::vector<double> alt{0.4, 0.4, 0.0, 0.2};
    // n = 5, gamma0 = 0.25 accepts types (5,0), (4,1), (3,2) on {0, e}
    const double want = std::pow(0.4, 5) + 5 * std::pow(0.4, 4) * 0.2 + 10 * std::pow(0.4, 3) * 0.04;
    CHECK(std::exp(hoeffding_log_accept_probability(null, alt, 5, 0.25)) == doctest::Approx(want).epsilon(1e-12));

    // against Monte Carlo on a full-support law
    const std::vector<double> p0{0.5, 0.3, 0.2}, p1{0.3, 0.3, 0.4};
    TestSpec t;
    t.kind = TestKind::hoeffding;
    t.gamma0 = 0.08;
    t.null = p0;
    const std::size_t trials = 200000;
    const double mc = count_null_decisions(t, p1, 30, trials, 17, 0) / double(trials);
    const double ex = std::exp(hoeffding_log_accept_probability(p0, p1, 30, 0.08));
    CHECK(std::abs(mc - ex) < 4 * std::sqrt(ex * (1 - ex) / trials));
    CHECK(std::exp(hoeffding_log_accept_probability(p0, p0, 30, kInf)) == doctest::Approx(1.0));
}

TEST_CASE("minimax quantile")
{
    const auto L = laws(make_adder_erasure(2, 0.2));
    const auto one = minimax_quantile(L.null, {L.alts[0]}, 0.05, 100000);
    REQUIRE(one.b);
    std::vector<double> D;
    std::vector<std::vector<double>> V;
    llr_moments(L.null, {L.alts[0]}, D, V);
    CHECK(*one.b == doctest::Approx(std::sqrt(V[0][0]) * oracle::q_inv(0.05)).epsilon(1e-3));
    CHECK(one.D_min == doctest::Approx(0.8 * std::log(2.0)));

    const auto both = minimax_quantile(L.null, L.alts, 0.05, 100000);
    REQUIRE(both.b);
    CHECK(both.I_min == std::vector<unsigned>{1});
    CHECK(std::abs(*both.b - std::sqrt(V[0][0]) * oracle::q_inv(0.05)) < 2e-2);

    const auto dup = minimax_quantile(L.null, {L.alts[0], L.alts[0]}, 0.05, 100000);
    REQUIRE(dup.b);
    CHECK(dup.I_min.size() == 2);
    CHECK(dup.I_used.size() == 1);
    CHECK(*dup.b == doctest::Approx(*one.b));

    // two alternatives at the same divergence: bivariate quantile
    const std::vector<double> p0{0.5, 0.25, 0.25};
    const std::vector<std::vector<double>> alts{{0.3, 0.5, 0.2}, {0.3, 0.2, 0.5}};
    const auto two = minimax_quantile(p0, alts, 0.05, 200000, 3);
    REQUIRE(two.I_used.size() == 2);
    REQUIRE(two.b);
    const auto& Vm = two.V_min;
    const double ref = oracle::bisect([&](double c) { return oracle::bivariate_cdf(c, Vm[0][0], Vm[0][1], Vm[1][1]); },
                                      0.0, 5.0, 0.95, false);
    CHECK(std::abs(*two.b - ref) < 2e-2);

    // null supported on two outputs: the two LLRs are perfectly anticorrelated
    const std::vector<std::vector<double>> mirror{{0.25, 0.5, 0.25}, {0.5, 0.25, 0.25}};
    const auto sing = minimax_quantile(std::vector<double>{0.5, 0.5, 0.0}, mirror, 0.05, 1000);
    CHECK(sing.I_used.size() == 2);
    CHECK(sing.singular);
    CHECK_FALSE(sing.b);
}

TEST_CASE("LLR test")
{
    const auto ch = make_adder_erasure(2, 0.2);
    const auto L = laws(ch);
    TestSpec t;
    t.kind = TestKind::llr;
    t.null = L.null;
    t.alternatives = L.alts;
    t.tau = llr_thresholds(L.null, L.alts, 100, 0.05, 100000);
    t.validate();
    const auto e = estimate_test_errors(ch, InputDistribution::bernoulli(0.5), t, 100, 20000, 5);
    CHECK(e.alpha < 0.1);
    for (double b : e.beta) CHECK(b < 1e-3);

    TestSpec bad = t;
    bad.alternatives[0] = {1.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("n0 expansion")
{
    const double l = std::log(1000.0);
    CHECK(n0_expansion(0.5, 0.0, 1000) == static_cast<std::size_t>(std::ceil(l / 1.0 - std::log(l) / 1.0)));
    CHECK(n0_expansion(1e6, 1.0, 1000) == 1);
    const auto L = laws(make_adder_erasure(2, 0.2));
    const auto mm = minimax_quantile(L.null, L.alts, 0.05, 10000);
    const auto n0 = n0_expansion(mm.D_min, *mm.b, 2290);
    CHECK(n0 >= 1);
    CHECK(n0 < 23);
}
