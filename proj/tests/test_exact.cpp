#include <gtest/gtest.h>

#include <cmath>

#include "peierls/exact.hpp"

using namespace peierls;

namespace {

const ContourCatalog& catalog8() {
    static const ContourCatalog cat(8);
    return cat;
}

}  // namespace

TEST(Exact, SingleContourVolume) {
    const double beta = 0.7, q = std::exp(-4 * beta);
    const auto d = exact_gibbs(Volume::box({0, 0}, 1, 1), catalog8(), beta);
    ASSERT_EQ(d.support.size(), 2u);
    EXPECT_TRUE(d.support[0].empty());
    EXPECT_NEAR(d.weights[0], 1 / (1 + q), 1e-15);
    EXPECT_NEAR(d.Z, 1 + q, 1e-15);
}

TEST(Exact, MatchesSubsetEnumeration) {
    // Oracle: all 2^m subsets of the admissible contours, kept when pairwise
    // compatible (geometric contours, not the instance cache).
    const double beta = 0.9;
    const auto volume = Volume::box({0, 0}, 3, 3);
    const auto d = exact_gibbs(volume, catalog8(), beta, 6);
    const auto adm = volume.admissible(catalog8(), 6);
    std::vector<Contour> geo;
    for (const auto& g : adm) geo.push_back(catalog8().contour(g));
    const std::size_t m = geo.size();
    ASSERT_LE(m, 24u);
    long count = 0;
    double Z = 0.0, occ0 = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
        bool ok = true;
        int energy = 0;
        for (std::size_t i = 0; i < m && ok; ++i) {
            if (!(mask >> i & 1)) continue;
            energy += geo[i].length();
            for (std::size_t j = i + 1; j < m && ok; ++j)
                if ((mask >> j & 1) && incompatible(geo[i], geo[j])) ok = false;
        }
        if (!ok) continue;
        ++count;
        Z += std::exp(-beta * energy);
        if (mask & 1) occ0 += std::exp(-beta * energy);
    }
    EXPECT_EQ(static_cast<long>(d.support.size()), count);
    EXPECT_NEAR(d.Z, Z, 1e-12 * Z);
    EXPECT_NEAR(d.occupation(adm[0]), occ0 / Z, 1e-12);
}

TEST(Exact, SupportCapIsEnforced) {
    EXPECT_THROW(exact_gibbs(Volume::box({0, 0}, 4, 4), catalog8(), 1.0, 6, 1024), SupportTooLarge);
    EXPECT_LE(exact_gibbs(Volume::box({0, 0}, 4, 3), catalog8(), 1.0, 6, 1024).support.size(), 1024u);
}

TEST(Exact, DetailedBalanceHolds) {
    const auto d = exact_gibbs(Volume::box({0, 0}, 4, 3), catalog8(), 1.3, 6);
    EXPECT_LT(detailed_balance_defect(d), 1e-12);
}

TEST(Exact, DetailedBalanceDetectsAPerturbation) {
    auto d = exact_gibbs(Volume::box({0, 0}, 2, 2), catalog8(), 1.0, 6);
    d.weights[1] *= 1.1;
    EXPECT_GT(detailed_balance_defect(d), 0.05);
}

TEST(Exact, MarginalsAreNormalized) {
    const auto d = exact_gibbs(Volume::box({0, 0}, 3, 3), catalog8(), 1.0, 6);
    double total = 0.0;
    for (double w : d.weights) total += w;
    EXPECT_NEAR(total, 1.0, 1e-12);
    const auto m = d.marginal([](const Instance& g) { return g.shift.x == 0; });
    double mt = 0.0;
    for (const auto& [c, p] : m) mt += p;
    EXPECT_NEAR(mt, 1.0, 1e-12);
}

TEST(Exact, TvOfExactFrequenciesIsSmall) {
    const auto d = exact_gibbs(Volume::box({0, 0}, 2, 1), catalog8(), 0.5);
    std::map<Configuration, long> hist;
    for (std::size_t i = 0; i < d.support.size(); ++i) hist[d.support[i]] = std::lround(d.weights[i] * 1e6);
    const auto tv = tv_distance(hist, d.as_map());
    EXPECT_LT(tv.tv, 1e-5);
    EXPECT_GT(tv.half_width, 0.0);
    EXPECT_THROW(tv_distance(std::map<Configuration, long>{}, d.as_map()), std::invalid_argument);
}
