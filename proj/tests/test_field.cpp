#include <gtest/gtest.h>

#include <cmath>

#include "peierls/poisson_field.hpp"
#include "peierls/stats.hpp"

using namespace peierls;

namespace {

const ContourCatalog& catalog8() {
    static const ContourCatalog cat(8);
    return cat;
}

FieldRealization make_field(double beta, std::uint64_t seed, int tile = 0) {
    FieldParams p;
    p.beta = beta;
    p.seed = seed;
    p.tile = tile;
    return FieldRealization(catalog8(), p);
}

}  // namespace

TEST(Field, RatePerTranslationIsSumOverClasses) {
    auto f = make_field(1.0, 1);
    double expect = 0.0;
    for (const auto& c : catalog8().classes()) expect += std::exp(-1.0 * c.length);
    EXPECT_NEAR(f.rate_per_translation(), expect, 1e-12);
}

TEST(Field, RealizationIsAPureFunctionOfSeed) {
    auto a = make_field(1.0, 42);
    auto b = make_field(1.0, 42);
    std::vector<Cylinder> xa, xb;
    // Different query orders must see the same cylinders.
    a.for_each({0, 0}, {30, 30}, 0.0, 5.0, [&](const Cylinder& c) { xa.push_back(c); });
    b.for_each({15, 15}, {30, 30}, 2.0, 5.0, [](const Cylinder&) {});
    b.for_each({0, 0}, {30, 30}, 0.0, 5.0, [&](const Cylinder& c) { xb.push_back(c); });
    std::sort(xa.begin(), xa.end(), birth_order);
    std::sort(xb.begin(), xb.end(), birth_order);
    ASSERT_EQ(xa.size(), xb.size());
    for (std::size_t i = 0; i < xa.size(); ++i) {
        EXPECT_EQ(xa[i].id, xb[i].id);
        EXPECT_EQ(xa[i].birth, xb[i].birth);
        EXPECT_EQ(xa[i].death, xb[i].death);
    }
    auto c = make_field(1.0, 43);
    std::size_t nc = 0;
    c.for_each({0, 0}, {30, 30}, 0.0, 5.0, [&](const Cylinder&) { ++nc; });
    EXPECT_NE(nc, 0u);
}

TEST(Field, CountsPerTranslateArePoisson) {
    // Births of the unit-square class per translate on [0, 4): Poisson with
    // mean 4 e^{-4 beta}.  Compare mean and dispersion over 40 x 40 translates.
    const double beta = 0.25, T = 4.0;
    auto f = make_field(beta, 7);
    const int side = 40;
    std::vector<long> counts(side * side, 0);
    f.for_each({0, 0}, {side - 1, side - 1}, 0.0, T, [&](const Cylinder& c) {
        if (c.basis.cls == 0) ++counts[c.basis.shift.x * side + c.basis.shift.y];
    });
    Moments m;
    for (long k : counts) m.add(static_cast<double>(k));
    const double lambda = T * std::exp(-4.0 * beta);
    const auto s = m.summary();
    EXPECT_NEAR(s.mean, lambda, 4.0 * std::sqrt(lambda / counts.size()));
    // Variance of the sample variance of Poisson: (lambda + 2 lambda^2 n/(n-1)) / n.
    EXPECT_NEAR(s.variance, lambda, 4.0 * std::sqrt((lambda + 2 * lambda * lambda) / counts.size()));
}

TEST(Field, ClassFrequenciesFollowTheirRates) {
    const double beta = 0.3;
    auto f = make_field(beta, 11);
    std::vector<long> per_class(catalog8().size(), 0);
    long total = 0;
    f.for_each({0, 0}, {59, 59}, 0.0, 2.0, [&](const Cylinder& c) {
        ++per_class[c.basis.cls];
        ++total;
    });
    for (std::uint32_t k = 0; k < catalog8().size(); ++k) {
        const double p = std::exp(-beta * catalog8().at(k).length) / f.rate_per_translation();
        EXPECT_NEAR(static_cast<double>(per_class[k]) / total, p, 4.0 * std::sqrt(p * (1 - p) / total)) << "class " << k;
    }
}

TEST(Field, LifetimesAreUnitExponential) {
    auto f = make_field(0.3, 5);
    std::vector<double> life;
    f.for_each({0, 0}, {49, 49}, 0.0, 1.0, [&](const Cylinder& c) { life.push_back(c.lifetime()); });
    ASSERT_GT(life.size(), 1000u);
    const auto ks = ks_test(life, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); });
    EXPECT_GT(ks.p_value, 1e-3) << "D=" << ks.statistic;
}

TEST(Field, BirthTimesAreUniformAcrossCells) {
    auto f = make_field(0.3, 9);
    std::vector<double> births;
    f.for_each({0, 0}, {29, 29}, -3.0, 2.0, [&](const Cylinder& c) { births.push_back(c.birth); });
    const auto ks = ks_test(births, [](double x) { return std::clamp((x + 3.0) / 5.0, 0.0, 1.0); });
    EXPECT_GT(ks.p_value, 1e-3) << "D=" << ks.statistic;
}

TEST(Field, WindowQueriesAreHalfOpen) {
    auto f = make_field(0.5, 3);
    long a = 0, b = 0, ab = 0;
    f.for_each({0, 0}, {9, 9}, 0.0, 1.5, [&](const Cylinder&) { ++a; });
    f.for_each({0, 0}, {9, 9}, 1.5, 3.0, [&](const Cylinder&) { ++b; });
    f.for_each({0, 0}, {9, 9}, 0.0, 3.0, [&](const Cylinder&) { ++ab; });
    EXPECT_EQ(a + b, ab);
}

TEST(Field, MaxLengthSilencesLongClasses) {
    FieldParams p;
    p.beta = 0.3;
    p.max_length = 4;
    FieldRealization f(catalog8(), p);
    f.for_each({0, 0}, {19, 19}, 0.0, 2.0, [&](const Cylinder& c) { EXPECT_EQ(c.basis.cls, 0u); });
}

TEST(Field, RejectsBadParameters) {
    FieldParams p;
    p.cell_width = 0.0;
    EXPECT_THROW(FieldRealization(catalog8(), p), std::invalid_argument);
    p.cell_width = 1.0;
    p.tile = -1;
    EXPECT_THROW(FieldRealization(catalog8(), p), std::invalid_argument);
}

TEST(Field, FreeNetworkMeanMatchesInfiniteServerQueue) {
    // Empty start: E[count at t] = e^{-4 beta} (1 - e^{-t}).
    const double beta = 0.2, t = 1.5;
    const Instance g{0, {0, 0}};
    const std::vector<Instance> region{g};
    Moments m;
    for (int r = 0; r < 4000; ++r) {
        auto f = make_field(beta, replica_seed(99, r));
        m.add(free_state(f, {}, InitialLifetimes(r), t, region)[0]);
    }
    const double mean = std::exp(-4 * beta) * (1 - std::exp(-t));
    EXPECT_NEAR(m.summary().mean, mean, 4.0 * std::sqrt(mean / 4000));
}

TEST(Field, InitialLifetimesAreReproducible) {
    InitialLifetimes a(5), b(5);
    const Instance g{1, {2, 3}};
    EXPECT_EQ(a.lifetime(g), b.lifetime(g));
    EXPECT_NE(a.lifetime(g, 0), a.lifetime(g, 1));
    const std::vector<Instance> config{g, g};
    const auto cyl = a.cylinders(config, 1.0);
    EXPECT_EQ(cyl.size(), 2u);
    EXPECT_NE(cyl[0].id, cyl[1].id);
    EXPECT_EQ(cyl[0].birth, 1.0);
}
