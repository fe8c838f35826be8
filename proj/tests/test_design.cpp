#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "raclab/adder.hpp"
#include "raclab/design.hpp"
#include "raclab/rng.hpp"

using namespace raclab;

namespace {

bool meets(double I, double V, unsigned k, double logM, double eps, std::size_t n)
{
    const double nn = static_cast<double>(n);
    return k * logM <= nn * I - std::sqrt(nn * V) * oracle::q_inv(eps) - 0.5 * std::log2(nn);
}

ChannelStatistics adder_st(unsigned K, double delta)
{
    return statistics(make_adder_erasure(K, delta), InputDistribution::bernoulli(0.5));
}

}  // namespace

TEST_CASE("q_inv against the quadrature oracle")
{
    CHECK(q_inv(0.5) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(q_inv(1e-3) == doctest::Approx(3.0902).epsilon(1e-4));
    CHECK(q_inv(1e-6) == doctest::Approx(4.7534).epsilon(1e-4));
    for (double e : {1e-9, 1e-6, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.7, 0.99}) {
        CHECK(std::abs(q_func(q_inv(e)) - e) <= 1e-12);
        CHECK(q_inv(e) == doctest::Approx(oracle::q_inv(e)).epsilon(1e-9));
    }
    CHECK(q_inv(0.2) == doctest::Approx(-q_inv(0.8)));
    CHECK_THROWS_AS(q_inv(0.0), InvalidArgument);
    CHECK_THROWS_AS(q_inv(1.0), InvalidArgument);
}

TEST_CASE("blocklengths of the two-user binary example")
{
    const auto half = statistics(make_binary_example(0.11, 0.11), InputDistribution::bernoulli(0.5));
    auto n = blocklengths(half, 1000.0, {1e-3, 1e-3, 1e-3});
    CHECK(n[1] == 2290);
    CHECK(n[2] == 4399);

    const auto skew = statistics(make_binary_example(0.7, 0.11), InputDistribution::bernoulli(0.35));
    n = blocklengths(skew, 1000.0, {1e-3, 1e-3, 1e-3});
    CHECK(n[1] == 2501);
    CHECK(n[2] == 4904);
}

TEST_CASE("solve_blocklength returns the smallest feasible n")
{
    Rng rng(5);
    for (int i = 0; i < 40; ++i) {
        const double I = 0.05 + rng.uniform();
        const double V = i % 5 == 0 ? 0.0 : 2.0 * rng.uniform();
        const unsigned k = 1 + static_cast<unsigned>(rng.below(3));
        const double logM = 1.0 + 200.0 * rng.uniform();
        const double eps = 1e-4 + 0.3 * rng.uniform();
        const auto n = solve_blocklength(I, V, k, logM, eps);
        CHECK(meets(I, V, k, logM, eps, n));
        if (n > 1) CHECK_FALSE(meets(I, V, k, logM, eps, n - 1));
    }
    CHECK_THROWS_AS(solve_blocklength(0.0, 1.0, 1, 10.0, 0.1), Infeasible);
}

TEST_CASE("solve_message_size")
{
    CHECK(solve_message_size(0.5, 0.0, 64, 1e-3) == doctest::Approx(64 * 0.5 - 3.0));
    CHECK(solve_message_size(0.5, 0.7, 64, 0.5) == doctest::Approx(64 * 0.5 - 3.0));
    CHECK_THROWS_AS(solve_message_size(0.01, 1.0, 10, 1e-6), Infeasible);

    const auto a = adder_stats(1, 0.2, AdderMode::exact);
    const double I = nats_to_bits(a.I), V = nats_to_bits(nats_to_bits(a.V));
    const double lm = solve_message_size(I, V, 100, 1e-6);
    const auto back = solve_blocklength(I, V, 1, lm, 1e-6);
    CHECK((back == 100 || back == 101));
}

TEST_CASE("code parameters")
{
    const auto st = adder_st(2, 0.2);
    const auto d = choose_parameters(st, 4.0, {1e-3, 1e-3, 1e-3}, {0, 30, 80});
    for (unsigned k = 1; k <= 2; ++k) {
        CHECK(d.lambda_at(k, k, 2) == 0.0);
        CHECK(d.log_gamma[k] ==
              doctest::Approx(d.n[k] * st.I[k] - 3.0902 * std::sqrt(d.n[k] * st.V[k])).epsilon(1e-4));
    }
    CHECK(d.lambda_at(1, 2, 2) > 0.0);
    CHECK(d.lambda_at(1, 2, 2) == doctest::Approx(40.0 * (st.cond_mi[2][1] - 0.5 * st.I[2])));
    CHECK(d.M == doctest::Approx(16.0));

    // n0 from the Hoeffding exponent
    double Dmin = kInf;
    for (unsigned k = 1; k <= 2; ++k) Dmin = std::min(Dmin, divergence(st.output_pmf[0], st.output_pmf[k]));
    CHECK(d.n[0] == static_cast<std::size_t>(std::ceil(std::log(30.0) / (2.0 * Dmin))));
    CHECK(d.n[0] <= d.n[1]);
    CHECK(d.gamma0 == doctest::Approx(threshold(TestKind::hoeffding, d.n[0], 1e-3, 4)));

    DesignOptions ks;
    ks.zero_test = TestKind::ks;
    const auto dk = choose_parameters(st, 4.0, {0.05, 1e-3, 1e-3}, {0, 30, 80}, ks);
    CHECK(dk.gamma0 == doctest::Approx(std::sqrt(std::log(2.0 / 0.05) / (2.0 * dk.n[0]))));

    DesignOptions be;
    be.tau_mode = TauMode::berry_esseen;
    CHECK_THROWS_AS(choose_parameters(st, 4.0, {1e-3, 1e-3, 1e-3}, {0, 30, 80}, be), Infeasible);
    const auto dbe = choose_parameters(st, 4.0, {0.5, 0.9, 0.9}, {0, 2000, 4000}, be);
    CHECK(dbe.tau[1] == doctest::Approx(q_inv(0.9 - st.B[1] / std::sqrt(2000.0))));

    CHECK_THROWS_AS(choose_parameters(st, 4.0, {1e-3, 1e-3, 1e-3}, {0, 30, 30}), InvalidArgument);
}

TEST_CASE("blocklengths increase with k")
{
    for (double d : {0.0, 0.2, 0.5}) {
        const auto st = adder_st(3, d);
        if (st.V[1] == 0.0) continue;
        const auto n = blocklengths(st, 100.0, {1e-3, 1e-3, 1e-3, 1e-3});
        CHECK(n[1] < n[2]);
        CHECK(n[2] < n[3]);
    }
}

TEST_CASE("rate region dominant points")
{
    const auto grid = make_p_grid(0.005);
    CHECK(grid.size() == 199);

    const auto sym = sweep_rate_region(make_binary_example(0.11, 0.11), 1000.0, 1e-3, grid);
    REQUIRE(sym.dominant.size() == 1);
    const auto& top = sym.rows[sym.dominant[0]];
    CHECK(top.p == doctest::Approx(0.5));
    CHECK(std::round(top.R1 * 1000) == 437);
    CHECK(std::round(top.R2 * 1000) == 227);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto& a = sym.rows[i];
        const auto& b = sym.rows[grid.size() - 1 - i];
        CHECK(a.n1 == b.n1);
        CHECK(a.n2 == b.n2);
    }

    const auto skew = sweep_rate_region(make_binary_example(0.7, 0.11), 1000.0, 1e-3, grid);
    bool found = false;
    for (std::size_t i : skew.dominant)
        if (std::abs(skew.rows[i].p - 0.35) < 1e-9) {
            found = true;
            CHECK(std::round(skew.rows[i].R1 * 1000) == 400);
            CHECK(std::round(skew.rows[i].R2 * 1000) == 204);
            CHECK(skew.rows[i].n1 == 2501);
            CHECK(skew.rows[i].n2 == 4904);
        }
    CHECK(found);
}

TEST_CASE("dominant set is unchanged by adding dominated points")
{
    RegionResult r;
    auto add = [&](double R1, double R2) {
        RegionRow row;
        row.feasible = true;
        row.R1 = R1;
        row.R2 = R2;
        row.p = static_cast<double>(r.rows.size());
        r.rows.push_back(row);
    };
    add(0.4, 0.1);
    add(0.3, 0.2);
    add(0.1, 0.3);
    mark_dominant(r);
    const auto before = r.dominant;
    add(0.2, 0.1);
    add(0.05, 0.25);
    add(0.3, 0.2);  // duplicate: the earlier point wins
    mark_dominant(r);
    CHECK(r.dominant == before);
}

TEST_CASE("rates in bits equal the nats path divided by ln 2")
{
    const auto st = statistics(make_binary_example(0.7, 0.11), InputDistribution::bernoulli(0.35));
    const double I = nats_to_bits(st.I[1]);
    CHECK(std::abs(I - st.I[1] / std::log(2.0)) < 1e-12);
    const double V = nats_to_bits(nats_to_bits(st.V[1]));
    CHECK(std::abs(V - st.V[1] / (std::log(2.0) * std::log(2.0))) < 1e-12);
}

TEST_CASE("per-user rate curves")
{
    ChannelStatistics st;
    const unsigned K = 60;
    st.K = K;
    st.I.assign(K + 1, 0.0);
    st.V.assign(K + 1, 0.0);
    for (unsigned k = 1; k <= K; ++k) {
        const auto a = adder_stats(k, 0.2, AdderMode::exact);
        st.I[k] = a.I;
        st.V[k] = a.V;
    }
    std::vector<double> gap_prev(K + 1, kInf);
    for (std::size_t n1 : {20u, 100u, 500u, 2500u}) {
        const auto rows = per_user_rate_curve(st, n1, 1e-6, K);
        REQUIRE(rows.size() == K);
        CHECK(rows[0].n == n1);
        const double logM = solve_message_size(nats_to_bits(st.I[1]), nats_to_bits(nats_to_bits(st.V[1])), n1, 1e-6);
        CHECK(rows[0].R == doctest::Approx(logM / n1));
        for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].R < rows[i - 1].R);
        for (const auto& r : rows) {
            const double cap = 0.8 * nats_to_bits(binom_stats_exact(r.k).H) / r.k;
            CHECK(r.capacity == doctest::Approx(cap));
            CHECK(cap - r.R > 0.0);
            CHECK(cap - r.R < gap_prev[r.k]);
            gap_prev[r.k] = cap - r.R;
        }
    }
}
