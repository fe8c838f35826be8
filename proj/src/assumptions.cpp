#include <algorithm>
#include <cmath>

#include "raclab/channel.hpp"
#include "raclab/common.hpp"
#include "raclab/detect.hpp"
#include "raclab/infodensity.hpp"

namespace raclab {

namespace {

// I(X_[s]; X_[s+1:t] | Y_k) with the remaining k - t inputs averaged out.
double interference_mi(const DensityTables& tab, unsigned s, unsigned t, unsigned k)
{
    const auto& ch = tab.channel();
    const auto py = tab.output(k);
    double acc = 0.0;
    for (std::size_t r1 = 0; r1 < ch.space(s).count(); ++r1) {
        const double w1 = tab.weight(s, r1);
        if (w1 == 0.0) continue;
        const auto c1 = tab.conditional(k, s, r1);
        for (std::size_t r2 = 0; r2 < ch.space(t - s).count(); ++r2) {
            const double w2 = tab.weight(t - s, r2);
            if (w2 == 0.0) continue;
            const auto c2 = tab.conditional(k, t - s, r2);
            const auto joint = tab.conditional(k, t, tab.rank_union(s, r1, t - s, r2));
            for (std::size_t y = 0; y < ch.output_size(); ++y) {
                const double p = w1 * w2 * joint[y];
                if (p <= 0.0) continue;
                acc += p * std::log(joint[y] * py[y] / (c1[y] * c2[y]));
            }
        }
    }
    return acc;
}

}  // namespace

AssumptionReport check_assumptions(const ChannelFamily& ch, const InputDistribution& px)
{
    const DensityTables tab(ch, px);
    const auto st = statistics(tab);
    const unsigned K = ch.max_users();

    AssumptionReport rep;
    rep.friendliness_margin = kInf;
    for (unsigned k = 1; k <= K; ++k)
        for (unsigned s = 1; s <= k; ++s)
            rep.friendliness_margin = std::min(rep.friendliness_margin, st.silenced_mi[k][s] - st.cond_mi[k][s]);
    rep.friendliness = rep.friendliness_margin >= -kKernelTol;

    rep.interference_margin = kInf;
    for (unsigned k = 2; k <= K; ++k)
        for (unsigned t = 2; t <= k; ++t)
            for (unsigned s = 1; s < t; ++s)
                rep.interference_margin = std::min(rep.interference_margin, interference_mi(tab, s, t, k));
    // With K = 1 there is no pair of users and the condition holds vacuously.
    rep.interference = rep.interference_margin > kKernelTol;

    rep.delta0 = kInf;
    for (unsigned k = 1; k <= K; ++k)
        rep.delta0 = std::min(rep.delta0, ks_distance(st.output_pmf[k], st.output_pmf[0]));
    rep.output_separation = rep.delta0 > kKernelTol;

    rep.min_dispersion = kInf;
    for (unsigned k = 1; k <= K; ++k) rep.min_dispersion = std::min(rep.min_dispersion, st.V[k]);
    rep.positive_dispersion = rep.min_dispersion > kKernelTol;
    return rep;
}

}  // namespace raclab
