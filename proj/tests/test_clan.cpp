#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "peierls/clan.hpp"
#include "peierls/stats.hpp"

using namespace peierls;

namespace {

const ContourCatalog& catalog8() {
    static const ContourCatalog cat(8);
    return cat;
}

FieldRealization make_field(double beta, std::uint64_t seed) {
    FieldParams p;
    p.beta = beta;
    p.seed = seed;
    return FieldRealization(catalog8(), p);
}

std::vector<Plaquette> box_plaquettes(Point corner, int w, int h) {
    const auto v = Volume::box(corner, w, h);
    return {v.plaquettes().begin(), v.plaquettes().end()};
}

}  // namespace

TEST(Clan, StructuralInvariants) {
    auto f = make_field(1.1, 17);
    const auto window = make_window(box_plaquettes({0, 0}, 3, 3));
    const auto& geo = f.geometry();
    long links = 0;
    for (int r = 0; r < 200; ++r) {
        auto field = make_field(1.1, replica_seed(17, r));
        const auto clan = explore_clan(window, field);
        ASSERT_EQ(clan.ancestors.size(), clan.members.size());
        for (std::size_t k = 0; k < clan.members.size(); ++k) {
            const auto& m = clan.members[k];
            if (m.generation == 0) {
                EXPECT_TRUE(m.cylinder.alive_at(0.0));
                EXPECT_TRUE(detail::basis_meets_window(geo, m.cylinder.basis, *window));
            }
            links += static_cast<long>(clan.ancestors[k].size());
            for (auto a : clan.ancestors[k]) {
                const auto& anc = clan.members[a].cylinder;
                EXPECT_LT(anc.birth, m.cylinder.birth);
                EXPECT_GE(anc.death, m.cylinder.birth);
                EXPECT_TRUE(geo.incompatible(anc.basis, m.cylinder.basis));
                EXPECT_LE(clan.members[a].generation, m.generation + 1);
            }
        }
        auto ids = clan.ids();
        EXPECT_TRUE(std::adjacent_find(ids.begin(), ids.end()) == ids.end());
    }
    EXPECT_GT(links, 0);
}

TEST(Clan, AncestorSearchIsComplete) {
    // Brute force: every cylinder born in [b - W, b) touching a member and
    // alive at its birth must be in the clan.
    const auto window = make_window(box_plaquettes({0, 0}, 4, 4));
    long members = 0;
    for (int r = 0; r < 40; ++r) {
        auto field = make_field(1.0, replica_seed(23, r));
        const auto clan = explore_clan(window, field);
        const auto ids = clan.ids();
        members += static_cast<long>(ids.size());
        const auto& geo = field.geometry();
        for (const auto& m : clan.members) {
            field.for_each({-30, -30}, {30, 30}, m.cylinder.birth - HorizonPolicy{}.lookback, m.cylinder.birth,
                           [&](const Cylinder& c) {
                               if (c.death >= m.cylinder.birth && geo.incompatible(c.basis, m.cylinder.basis)) {
                                   EXPECT_TRUE(std::binary_search(ids.begin(), ids.end(), c.id));
                               }
                           });
        }
    }
    EXPECT_GT(members, 40);
}

TEST(Clan, DoesNotDependOnInitialHorizon) {
    const auto window = make_window(box_plaquettes({0, 0}, 2, 2));
    for (int r = 0; r < 20; ++r) {
        auto a = make_field(1.0, replica_seed(31, r));
        auto b = make_field(1.0, replica_seed(31, r));
        ClanPolicy small, big;
        small.horizon.initial = 1.0;
        big.horizon.initial = 256.0;
        EXPECT_EQ(explore_clan(window, a, small).ids(), explore_clan(window, b, big).ids());
    }
}

TEST(PerfectSample, KeptSectionIsCompatible) {
    const auto window = make_window(box_plaquettes({0, 0}, 4, 4));
    for (int r = 0; r < 100; ++r) {
        auto field = make_field(1.0, replica_seed(41, r));
        const auto s = perfect_sample(window, field);
        EXPECT_TRUE(is_compatible(field.geometry(), s.state));
    }
}

TEST(PerfectSample, ProjectiveConsistency) {
    // The sample of a small window is the restriction of the sample of a
    // larger window on the same realization.
    const auto small = make_window(box_plaquettes({1, 1}, 1, 1));
    const auto large = make_window(box_plaquettes({0, 0}, 3, 3));
    for (int r = 0; r < 200; ++r) {
        auto field = make_field(1.0, replica_seed(43, r));
        const auto a = perfect_sample(small, field).state;
        const auto b = perfect_sample(large, field).state;
        Configuration restricted;
        for (const auto& g : b)
            if (detail::basis_meets_window(field.geometry(), g, *small)) restricted.push_back(g);
        EXPECT_EQ(a, restricted) << "replica " << r;
    }
}

TEST(PerfectSample, FiniteVolumeSingleContourLaw) {
    const double beta = 0.3;
    const double q = std::exp(-4 * beta), pi = q / (1 + q);
    const auto volume = Volume::box({0, 0}, 1, 1);
    const auto window = make_window(box_plaquettes({0, 0}, 1, 1));
    Proportion on;
    for (int r = 0; r < 10000; ++r) {
        auto field = make_field(beta, replica_seed(47, r));
        on.hits += !perfect_sample(window, field, {}, &volume).state.empty();
        ++on.n;
    }
    EXPECT_NEAR(on.p(), pi, 4 * std::sqrt(pi * (1 - pi) / on.n));
}

TEST(PerfectSample, FiniteVolumeThreeContourLaw) {
    const double beta = 0.3;
    const double q4 = std::exp(-4 * beta), q6 = std::exp(-6 * beta), Z = 1 + 2 * q4 + q6;
    const auto volume = Volume::box({0, 0}, 2, 1);
    const auto window = make_window(box_plaquettes({0, 0}, 2, 1));
    long empty = 0, rect = 0;
    const int n = 10000;
    for (int r = 0; r < n; ++r) {
        auto field = make_field(beta, replica_seed(53, r));
        const auto s = perfect_sample(window, field, {}, &volume).state;
        ASSERT_LE(s.size(), 1u);
        empty += s.empty();
        rect += s.size() == 1 && catalog8().at(s[0].cls).length == 6;
    }
    EXPECT_NEAR(double(empty) / n, 1 / Z, 4 * std::sqrt((1 / Z) * (1 - 1 / Z) / n));
    EXPECT_NEAR(double(rect) / n, q6 / Z, 4 * std::sqrt((q6 / Z) * (1 - q6 / Z) / n));
}

TEST(PerfectSample, UnitSquareDensityBelowActivity) {
    const double beta = 1.0;
    const auto window = make_window(box_plaquettes({0, 0}, 1, 1));
    Proportion on;
    for (int r = 0; r < 20000; ++r) {
        auto field = make_field(beta, replica_seed(59, r));
        const auto s = perfect_sample(window, field).state;
        on.hits += std::binary_search(s.begin(), s.end(), Instance{0, {0, 0}});
        ++on.n;
    }
    const double b = std::exp(-4 * beta);
    EXPECT_LE(on.p(), b + 3 * std::sqrt(b * (1 - b) / on.n));
    EXPECT_GT(on.p(), 0.0);
}

TEST(ClanStatistics, EmptyClanIsZero) {
    const Clan c;
    const auto s = clan_statistics(c, InstanceGeometry(catalog8()));
    EXPECT_EQ(s.size, 0);
    EXPECT_EQ(s.space_width, 0);
    EXPECT_EQ(s.time_length, 0.0);
}

TEST(ClanStatistics, WidthCountsDistinctPlaquettesAndSites) {
    Clan c;
    Cylinder a, b;
    a.basis = {0, {0, 0}};
    a.birth = -1.0;
    a.death = 1.0;
    b.basis = {0, {1, 0}};
    b.birth = -2.5;
    b.death = -0.5;
    b.id.index = 1;
    c.members = {{a, 0, true}, {b, 1, false}};
    const InstanceGeometry geo(catalog8());
    const auto s = clan_statistics(c, geo);
    EXPECT_EQ(s.space_width, 7);  // two unit squares sharing an edge
    EXPECT_EQ(s.time_length, 2.5);
    EXPECT_EQ(s.depth, 1);
    EXPECT_EQ(clan_statistics(c, geo, WidthMode::Sites).space_width, 6);
}

TEST(Clan, GuardsAndWarnings) {
    auto f1 = make_field(1.0, 1);
    auto f2 = make_field(1.0, 1);
    EXPECT_THROW(mixing_probe(box_plaquettes({0, 0}, 1, 1), box_plaquettes({5, 0}, 1, 1), f1, f2), std::invalid_argument);
    EXPECT_THROW(finite_volume_clan(box_plaquettes({5, 5}, 1, 1), Volume::box({0, 0}, 2, 2), f1), std::invalid_argument);
    const auto clan = explore_clan(box_plaquettes({0, 0}, 1, 1), f1);
    EXPECT_TRUE(clan.truncation.certified);
    EXPECT_GT(clan.truncation.neglected_intensity, 0.0);
    EXPECT_LT(clan.lookback_residual, 1e-5);
    ClanPolicy tiny;
    tiny.member_cap = 0;
    auto hot = make_field(0.5, 2);
    EXPECT_THROW(explore_clan(box_plaquettes({0, 0}, 6, 6), hot, tiny), HorizonExploded);
}

TEST(Clan, WriteClanFormat) {
    auto f = make_field(1.2, 5);
    auto clan = explore_clan(box_plaquettes({0, 0}, 2, 2), f);
    classify_kept(clan, f.geometry());
    std::ostringstream os;
    write_clan(os, clan);
    std::istringstream is(os.str());
    std::string line;
    std::size_t rows = 0;
    while (std::getline(is, line))
        if (!line.empty() && line[0] != '#') ++rows;
    EXPECT_EQ(rows, clan.size());
}
