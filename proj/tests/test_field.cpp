#include <gtest/gtest.h>

#include <sstream>

#include "discl/field.hpp"
#include "discl/potential.hpp"

using namespace discl;

TEST(Potential, DefaultWellsAndValues) {
    const auto w = make_default_potential();
    EXPECT_EQ(w(0.0), 0.0);
    EXPECT_EQ(w(2.0), 0.0);
    EXPECT_DOUBLE_EQ(w(1.0), 0.5);
    EXPECT_DOUBLE_EQ(w(3.0), 0.9);
    EXPECT_EQ(w.well_outer, 2.0);
}

TEST(Potential, DerivativeMatchesDifferences) {
    for (const auto& w : {make_default_potential(), make_min_quadratic_potential()}) {
        for (double x = 0.05; x < 8.0; x += 0.173) {
            if (w.name == "min_quadratic" && std::abs(x - 1.0) < 1e-3) continue;
            const double h = 1e-6;
            EXPECT_NEAR(w.derivative(x), (w(x + h) - w(x - h)) / (2 * h), 1e-6 * (1 + std::abs(x))) << w.name << " x=" << x;
        }
    }
}

TEST(Potential, ZeroSetIsTheTwoWells) {
    const auto w = make_default_potential();
    double best = 1e300;
    for (int s = 0; s <= 10000; ++s) {
        const double x = 10.0 * s / 10000;
        const double v = w(x);
        EXPECT_GE(v, 0.0);
        if (v < 1e-12) {
            EXPECT_TRUE(std::abs(x) < 1e-8 || std::abs(x - 2.0) < 1e-8) << x;
        }
        best = std::min(best, v);
    }
    EXPECT_EQ(best, 0.0);
}

TEST(Potential, QuadraticGrowth) {
    for (const auto& w : {make_default_potential(), make_min_quadratic_potential()}) {
        const double c = 10.0;
        for (double x = 0.0; x < 100.0; x += 0.37) {
            EXPECT_LE(w(x), c * (1 + x * x));
            EXPECT_GE(w(x), x * x / c - c);
        }
    }
}

TEST(Potential, ByName) {
    EXPECT_EQ(potential_by_name("rational").name, "rational");
    EXPECT_EQ(potential_by_name("min_quadratic").name, "min_quadratic");
    EXPECT_THROW(potential_by_name("nope"), Error);
}

TEST(Grid, SpacingsAndCounts) {
    const Grid2 g = Grid2::square(8, 4);
    EXPECT_DOUBLE_EQ(g.hx(), 0.25);
    EXPECT_DOUBLE_EQ(g.hy(), 0.5);
    EXPECT_EQ(VectorField(g).data.size(), 2u * 9 * 5);
    EXPECT_EQ(TensorField(g).data.size(), 4u * 8 * 4);
    EXPECT_THROW(Grid2::make(0, 4, -1, 1, -1, 1), Error);
    EXPECT_THROW(Grid2::make(4, 4, 1, -1, -1, 1), Error);
}

TEST(Sampling, ConstantFields) {
    const Grid2 g = Grid2::square(8, 8);
    const auto k = sample_field(g, VectorFn([](double, double) { return Vec2{1, 0}; }));
    for (int j = 0; j <= 8; ++j)
        for (int i = 0; i <= 8; ++i) {
            EXPECT_EQ(k.at(i, j).x, 1.0);
            EXPECT_EQ(k.at(i, j).y, 0.0);
        }
    const auto b = sample_field(g, TensorFn([](double, double) { return Mat2{}; }));
    for (double v : b.data) EXPECT_EQ(v, 0.0);
}

TEST(Sampling, OffsetAvoidsTheCore) {
    const Grid2 g = Grid2::square(16, 16);
    const Vec2 off = core_offset(g);
    EXPECT_GT(off.x, 0.0);
    double rmin = 1e300;
    const auto k = sample_field(g, VectorFn([&](double x, double y) {
                                    const double t = std::atan2(y - off.y, x - off.x);
                                    rmin = std::min(rmin, std::hypot(x - off.x, y - off.y));
                                    return Vec2{std::cos(t / 2), std::sin(t / 2)};
                                }));
    EXPECT_GT(rmin, 0.25 * g.hx());
    for (double v : k.data) EXPECT_TRUE(std::isfinite(v));
    EXPECT_EQ(core_offset(Grid2::square(15, 15)).x, 0.0);
}

TEST(Sampling, RejectsNonFinite) {
    const Grid2 g = Grid2::square(4, 4);
    try {
        sample_field(g, VectorFn([](double x, double y) { return Vec2{1.0 / (x * x + y * y), 0}; }));
        FAIL();
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.x, 0.0);
        EXPECT_EQ(e.y, 0.0);
    }
}

TEST(Sampling, ReadBackIsExact) {
    const Grid2 g = Grid2::make(7, 5, -1, 1, -0.5, 0.5);
    auto f = [](double x, double y) { return Vec2{std::sin(3 * x) + y, std::exp(x * y)}; };
    const auto k = sample_field(g, VectorFn(f));
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const Vec2 v = f(g.node_x(i), g.node_y(j));
            EXPECT_EQ(k.at(i, j).x, v.x);
            EXPECT_EQ(k.at(i, j).y, v.y);
        }
}

TEST(Layer, RejectsLayersOutsideTheDomain) {
    EXPECT_THROW(LayerGeometry::make(1.0, 1.0), Error);
    EXPECT_THROW(LayerGeometry::make(4.0, 0.5), Error);
    EXPECT_THROW(LayerGeometry::make(-1.0, 0.5), Error);
    EXPECT_NO_THROW(LayerGeometry::make(1.0, 0.5));
}

TEST(Layer, MembershipExamples) {
    const auto geom = LayerGeometry::make(1.0, 0.5);
    EXPECT_TRUE(geom.contains(0.0, 0.0));
    EXPECT_FALSE(geom.contains(-0.9, 0.0));
    EXPECT_TRUE(geom.contains(-0.5, -0.25));   // closed lower edges
    EXPECT_FALSE(geom.contains(1.0, 0.0));     // open right edge
    EXPECT_FALSE(geom.contains(0.0, 0.25));    // open upper edge
}

TEST(Layer, MaskAreaWithinOneRow) {
    const Grid2 g = Grid2::square(64, 64);
    for (double eps : {0.5, 1.0, 1.5}) {
        const auto geom = LayerGeometry::make(eps, 0.5);
        const auto m = layer_mask(g, geom);
        const double area = m.count() * g.cell_area();
        EXPECT_NEAR(area, geom.area(), (1 + geom.xi) * g.hy() + 2 * geom.height() * g.hx()) << eps;
    }
}

TEST(Layer, MaskIdempotentAndMonotone) {
    const Grid2 g = Grid2::square(96, 96);
    const auto m1 = layer_mask(g, LayerGeometry::make(0.5, 0.5));
    const auto m1b = layer_mask(g, LayerGeometry::make(0.5, 0.5));
    const auto m2 = layer_mask(g, LayerGeometry::make(0.9, 0.5));
    EXPECT_EQ(m1.inside, m1b.inside);
    for (std::size_t c = 0; c < m1.inside.size(); ++c) EXPECT_LE(m1.inside[c], m2.inside[c]);
}

TEST(Layer, RejectsUnresolvedLayer) {
    const Grid2 g = Grid2::square(16, 16);  // hy = 0.125
    EXPECT_THROW(layer_mask(g, LayerGeometry::make(0.5, 0.5)), Error);  // height 0.25: 2 rows
    EXPECT_NO_THROW(layer_mask(g, LayerGeometry::make(1.0, 0.5)));     // height 0.5: 4 rows
}

TEST(Dump, RoundTrip) {
    const Grid2 g = Grid2::make(5, 3, -0.25, 1.0, -0.125, 0.125);
    VectorField k(g);
    TensorField b(g);
    for (std::size_t n = 0; n < k.data.size(); ++n) k.data[n] = std::sin(1.0 + n) / 3.0;
    for (std::size_t n = 0; n < b.data.size(); ++n) b.data[n] = std::cos(2.0 + n) * 1e-7;
    std::stringstream sk, sb;
    write_field(sk, k);
    write_field(sb, b);
    std::string header;
    std::getline(sk, header);
    EXPECT_EQ(header.rfind("FIELD v1 vector_node 5 3 ", 0), 0u) << header;
    sk.seekg(0);
    const auto k2 = read_vector_field(sk);
    const auto b2 = read_tensor_field(sb);
    EXPECT_EQ(k2.grid, g);
    EXPECT_EQ(k2.data, k.data);
    EXPECT_EQ(b2.data, b.data);
    std::stringstream bad("FIELD v1 tensor_cell 5 3 0 1 0 1\n1 2 3");
    EXPECT_THROW(read_vector_field(bad), Error);
}
