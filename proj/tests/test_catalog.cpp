#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "peierls/catalog.hpp"
#include "brute_force_contours.hpp"

using namespace peierls;

using testing_oracle::brute_force;

class CatalogVsBruteForce : public ::testing::TestWithParam<int> {};

TEST_P(CatalogVsBruteForce, PerLengthCountsAgree) {
    const int L = GetParam();
    const ContourCatalog cat(L);
    const auto brute = brute_force(L);
    const auto classes = cat.classes_per_length();
    const auto kx = cat.through_plaquette_counts();
    const auto kv = cat.through_vertex_counts();
    for (int n = 4; n <= L; n += 2) {
        EXPECT_EQ(classes[n], brute.classes.count(n) ? brute.classes.at(n) : 0) << "n=" << n;
        EXPECT_EQ(kx[n], brute.through_x.count(n) ? brute.through_x.at(n) : 0) << "n=" << n;
        EXPECT_EQ(kv[n], brute.through_vertex.count(n) ? brute.through_vertex.at(n) : 0) << "n=" << n;
    }
}

INSTANTIATE_TEST_SUITE_P(Lengths, CatalogVsBruteForce, ::testing::Values(4, 6, 8, 10));

TEST(Catalog, RejectsOddOrTinyCaps) {
    EXPECT_THROW(ContourCatalog(2), std::invalid_argument);
    EXPECT_THROW(ContourCatalog(7), std::invalid_argument);
}

TEST(Catalog, UnitSquareIsTheOnlyLengthFourClass) {
    const ContourCatalog cat(4);
    ASSERT_EQ(cat.size(), 1u);
    EXPECT_EQ(cat.at(0).representative, unit_square());
    EXPECT_EQ(cat.at(0).x_plaquettes, 2);
    EXPECT_EQ(cat.at(0).vertex_count, 4);
}

TEST(Catalog, ThroughPlaquetteCountsSplitByAxis) {
    // Horizontal and vertical counts agree by the diagonal reflection.
    const ContourCatalog cat(10);
    long x = 0, y = 0;
    for (const auto& c : cat.classes()) x += c.x_plaquettes, y += c.y_plaquettes;
    EXPECT_EQ(x, y);
}

TEST(Catalog, InstanceRoundTrip) {
    const ContourCatalog cat(8);
    const auto g = rectangle({3, -2}, 2, 1);
    const auto inst = cat.instance_of(g);
    EXPECT_EQ(cat.contour(inst), g);
    EXPECT_EQ(cat.class_of(rectangle({0, 0}, 5, 5)), -1);
}

TEST(Catalog, WriteReadRoundTrip) {
    const ContourCatalog cat(8);
    std::stringstream ss;
    cat.write(ss);
    const auto back = ContourCatalog::read(ss);
    EXPECT_EQ(back.size(), cat.size());
    EXPECT_EQ(back.through_plaquette_counts(), cat.through_plaquette_counts());
}

TEST(Catalog, NodeBudgetIsEnforced) {
    EXPECT_THROW(ContourCatalog(12, 1000), BudgetExceeded);
}

TEST(Catalog, TailModelsBoundTheExactCounts) {
    const ContourCatalog cat(12);
    const auto kx = cat.through_plaquette_counts();
    const auto kv = cat.through_vertex_counts();
    for (int n = 4; n <= 12; n += 2) {
        EXPECT_LE(kx[n], cat.tail_count(n, TailModel::Eulerian, Face::Plaquette));
        EXPECT_LE(kv[n], cat.tail_count(n, TailModel::Eulerian, Face::Vertex));
        EXPECT_LE(kx[n], cat.tail_count(n, TailModel::Walk, Face::Plaquette));
    }
}

TEST(Catalog, TailSumMatchesGeometricSeries) {
    const ContourCatalog cat(8);
    const double beta = 2.0;
    // Eulerian vertex tail from n = 10 on: sum 4 * 3^(n-2) e^(-beta n).
    double direct = 0.0;
    for (int n = 10; n <= 400; n += 2) direct += 4.0 * std::pow(3.0, n - 2) * std::exp(-beta * n);
    EXPECT_NEAR(tail_sum(cat, beta, TailModel::Eulerian, Face::Vertex), direct, 1e-12 * direct + 1e-300);
    EXPECT_EQ(tail_sum(cat, beta, TailModel::None, Face::Vertex), 0.0);
    EXPECT_TRUE(std::isinf(tail_sum(cat, 0.5, TailModel::Eulerian, Face::Vertex)));
}
