#include <gtest/gtest.h>

#include "peierls/geometry.hpp"

using namespace peierls;

TEST(Geometry, UnitSquareHasFourPlaquettesAndFourEndpoints) {
    const auto g = unit_square({2, -1});
    EXPECT_EQ(g.length(), 4);
    EXPECT_EQ(g.vertices().size(), 4u);
    EXPECT_EQ(g.min_corner(), (Point{2, -1}));
    EXPECT_EQ(g.max_corner(), (Point{3, 0}));
}

TEST(Geometry, RectangleLengthIsPerimeter) {
    for (int w = 1; w <= 4; ++w)
        for (int h = 1; h <= 4; ++h) EXPECT_EQ(rectangle({0, 0}, w, h).length(), 2 * (w + h));
}

TEST(Geometry, ValidateAcceptsClosedConnectedSets) {
    const auto sq = unit_square();
    const auto g = validate_contour({sq.plaquettes().begin(), sq.plaquettes().end()});
    EXPECT_EQ(g, sq);
}

TEST(Geometry, ValidateRejectsOpenPath) {
    try {
        validate_contour({{{0, 0}, Axis::X}, {{1, 0}, Axis::X}});
        FAIL();
    } catch (const ContourError& e) {
        EXPECT_EQ(e.kind(), ContourError::Kind::NotClosed);
    }
}

TEST(Geometry, ValidateRejectsTwoSeparateSquares) {
    const auto a = unit_square({0, 0}), b = unit_square({5, 0});
    std::vector<Plaquette> ps(a.plaquettes().begin(), a.plaquettes().end());
    ps.insert(ps.end(), b.plaquettes().begin(), b.plaquettes().end());
    try {
        validate_contour(ps);
        FAIL();
    } catch (const ContourError& e) {
        EXPECT_EQ(e.kind(), ContourError::Kind::NotConnected);
    }
}

TEST(Geometry, ValidateRejectsEmpty) {
    EXPECT_THROW(validate_contour({}), ContourError);
}

TEST(Geometry, SquaresMeetingAtACornerFormOneContour) {
    const auto a = unit_square({0, 0}), b = unit_square({1, 1});
    std::vector<Plaquette> ps(a.plaquettes().begin(), a.plaquettes().end());
    ps.insert(ps.end(), b.plaquettes().begin(), b.plaquettes().end());
    const auto g = validate_contour(ps);
    EXPECT_EQ(g.length(), 8);
    EXPECT_EQ(g.vertices().size(), 7u);
}

TEST(Geometry, IncompatibleIffSharedEndpoint) {
    const auto a = unit_square({0, 0});
    EXPECT_TRUE(incompatible(a, unit_square({1, 0})));   // shared edge
    EXPECT_TRUE(incompatible(a, unit_square({1, 1})));   // shared corner
    EXPECT_FALSE(incompatible(a, unit_square({2, 0})));  // one column apart
    EXPECT_TRUE(incompatible(a, a));
}

TEST(Geometry, IncompatibilityMatchesVertexIntersection) {
    const auto a = rectangle({0, 0}, 2, 1);
    for (int dx = -4; dx <= 4; ++dx)
        for (int dy = -3; dy <= 3; ++dy) {
            const auto b = rectangle({dx, dy}, 1, 2);
            bool shared = false;
            for (auto v : a.vertices())
                for (auto u : b.vertices()) shared = shared || v == u;
            EXPECT_EQ(incompatible(a, b), shared) << dx << "," << dy;
        }
}

TEST(Geometry, TranslationShiftsEverything) {
    const auto g = rectangle({0, 0}, 2, 3);
    const auto t = g.translated({5, -2});
    EXPECT_EQ(t.min_corner(), (Point{5, -2}));
    EXPECT_EQ(t.length(), g.length());
    EXPECT_EQ(canonical_offset(t), canonical_offset(g) + Point({5, -2}));
}

TEST(Geometry, PlaquetteEndpoints) {
    const Plaquette x{{1, 2}, Axis::X}, y{{1, 2}, Axis::Y};
    EXPECT_EQ(x.head(), (Point{2, 2}));
    EXPECT_EQ(y.head(), (Point{1, 3}));
    EXPECT_EQ(manhattan({0, 0}, {3, -4}), 7);
}
