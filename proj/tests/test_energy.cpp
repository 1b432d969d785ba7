#include <gtest/gtest.h>

#include <random>

#include "discl/energy.hpp"
#include "test_util.hpp"

using namespace discl;
using namespace discl::testing;

namespace {

ModelParams params(double eps, double xi) {
    ModelParams p;
    p.eps = eps;
    p.xi = xi;
    return p;
}

VectorField constant_k(const Grid2& g, Vec2 v) {
    return sample_field(g, VectorFn([&](double, double) { return v; }));
}

TensorField constant_b(const Grid2& g, Mat2 m) {
    return sample_field(g, TensorFn([&](double, double) { return m; }));
}

// Central-difference directional derivative of the total energy.
double fd_directional(const VectorField& k, const TensorField& b, const VectorField& dk, const TensorField& db,
                      const ModelParams& p, double h) {
    VectorField kp = k, km = k;
    TensorField bp = b, bm = b;
    axpy(h, dk.data, kp.data);
    axpy(-h, dk.data, km.data);
    axpy(h, db.data, bp.data);
    axpy(-h, db.data, bm.data);
    return (energy(kp, bp, p).total - energy(km, bm, p).total) / (2 * h);
}

}  // namespace

TEST(Energy, GlobalMinimumIsZero) {
    const Grid2 g = Grid2::square(8, 8);
    const auto r = energy(constant_k(g, {1, 0}), TensorField(g), params(1, 1));
    EXPECT_EQ(r.total, 0.0);
    EXPECT_EQ(r.unit_penalty, 0.0);
}

TEST(Energy, UnitPenaltyOfDoubledDirector) {
    const Grid2 g = Grid2::square(8, 8);
    const auto r = energy(constant_k(g, {2, 0}), TensorField(g), params(1, 1));
    EXPECT_NEAR(r.unit_penalty, 4.0, 1e-12);
    EXPECT_EQ(r.elastic + r.curl_term + r.well_term, 0.0);
}

TEST(Energy, OuterWellCostsOnlyElastic) {
    const Grid2 g = Grid2::square(8, 8);
    const auto r = energy(constant_k(g, {1, 0}), constant_b(g, Mat2::from(2, 0, 0, 0)), params(1, 1));
    EXPECT_NEAR(r.well_term, 0.0, 1e-15);
    EXPECT_NEAR(r.elastic, 16.0, 1e-12);
    EXPECT_NEAR(r.curl_term, 0.0, 1e-15);
    EXPECT_NEAR(r.total, r.unit_penalty + r.elastic + r.curl_term + r.well_term, 1e-12 * r.total);
}

TEST(Energy, TermsNonNegativeAndSignFlipInvariant) {
    std::mt19937_64 rng(7);
    const Grid2 g = Grid2::square(32, 32);
    auto p = params(0.5, 0.5);
    p.div_penalty = true;
    const auto mask = layer_mask(g, p.layer());
    for (int t = 0; t < 5; ++t) {
        auto k = random_vector_field(g, rng);
        auto b = random_tensor_field(g, rng, 3.0);
        const auto r = energy(k, b, p, mask);
        for (double v : {r.unit_penalty, r.elastic, r.curl_term, r.well_term, r.div_term, r.bulk, r.layer})
            EXPECT_GE(v, 0.0);
        EXPECT_NEAR(r.bulk + r.layer, r.total, 1e-12 * r.total);
        EXPECT_NEAR(r.total, r.unit_penalty + r.elastic + r.curl_term + r.well_term + r.div_term, 1e-12 * r.total);
        for (double& v : k.data) v = -v;
        for (double& v : b.data) v = -v;
        const auto f = energy(k, b, p, mask);
        EXPECT_NEAR(f.total, r.total, 1e-12 * r.total);
        EXPECT_NEAR(f.layer, r.layer, 1e-12 * r.total);
    }
}

TEST(Energy, LayerSupportedFieldsPutCurlInTheLayer) {
    const Grid2 g = Grid2::square(32, 32);
    const auto p = params(0.5, 0.5);
    const auto mask = layer_mask(g, p.layer());
    TensorField b(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (mask(i, j)) b.set(i, j, Mat2::from(0, 1, 0, 0));
    const auto k = constant_k(g, {1, 0});
    const auto r = energy(k, b, p, mask);
    EXPECT_NEAR(r.bulk, 0.0, 1e-14);
    EXPECT_NEAR(r.layer, r.total, 1e-12);
}

TEST(Energy, NonFiniteInputReportsTermAndLocation) {
    const Grid2 g = Grid2::square(4, 4);
    auto k = constant_k(g, {1, 0});
    k.set(2, 2, {std::nan(""), 0});
    try {
        energy(k, TensorField(g), params(1, 1));
        FAIL();
    } catch (const NonFiniteError& e) {
        EXPECT_EQ(e.term, "unit_penalty");
    }
}

TEST(Energy, CsvRowMatchesHeader) {
    const Grid2 g = Grid2::square(8, 8);
    const auto r = energy(constant_k(g, {2, 0}), TensorField(g), params(1, 1));
    std::ostringstream os;
    write_energy_csv(os, r);
    const std::string h = energy_csv_header();
    const std::string row = os.str();
    EXPECT_EQ(std::count(h.begin(), h.end(), ','), std::count(row.begin(), row.end(), ','));
}

TEST(Gradient, ZeroAtGlobalMinimum) {
    const Grid2 g = Grid2::square(8, 8);
    const auto gr = energy_gradient(constant_k(g, {0, 1}), TensorField(g), params(0.7, 0.4));
    EXPECT_LT(max_abs(gr.dk.data), 1e-12);
    EXPECT_LT(max_abs(gr.db.data), 1e-12);
}

TEST(Gradient, WellTermVanishesInTheOuterWell) {
    const Grid2 g = Grid2::square(8, 8);
    const auto p = params(1, 1);
    const Mat2 m = Mat2::from(0, 2, 0, 0);
    // with k such that grad k == B, only the well term could contribute to dE/dB
    const auto k = sample_field(g, VectorFn([](double, double y) { return Vec2{1 + 2 * y, 0}; }));
    const auto gr = energy_gradient(k, constant_b(g, m), p);
    EXPECT_LT(max_abs(gr.db.data), 1e-12);
}

TEST(Gradient, MatchesFiniteDifferences) {
    std::mt19937_64 rng(2024);
    const Grid2 g = Grid2::square(8, 8);
    for (int variant = 0; variant < 3; ++variant) {
        auto p = params(0.7, 0.6);
        if (variant == 1) p.div_penalty = true;
        if (variant == 2) p.potential = make_min_quadratic_potential();
        for (int t = 0; t < 4; ++t) {
            const auto k = random_vector_field(g, rng);
            const auto b = random_tensor_field(g, rng, 1.5);
            const auto gr = energy_gradient(k, b, p);
            for (int d = 0; d < 5; ++d) {
                const auto dk = random_vector_field(g, rng);
                const auto db = random_tensor_field(g, rng);
                const double an = dot(gr.dk.data, dk.data) + dot(gr.db.data, db.data);
                const double fd = fd_directional(k, b, dk, db, p, 1e-6);
                EXPECT_LT(std::abs(an - fd), 1e-6 * std::max(std::abs(fd), 1.0)) << variant << ' ' << t << ' ' << d;
            }
        }
    }
}

TEST(HelmholtzForm, ZeroDistortion) {
    std::mt19937_64 rng(8);
    const Grid2 g = Grid2::square(16, 16);
    const auto k = smooth_vector_field(g, rng, 0.5);
    const auto h = helmholtz_form(k, TensorField(g), params(1, 1));
    EXPECT_LT(max_abs(h.p.data), 1e-14);
    EXPECT_LT(max_abs(h.z.data), 1e-14);
    const auto r = energy(k, TensorField(g), params(1, 1));
    EXPECT_NEAR(h.value, r.unit_penalty + r.elastic, 1e-12 * (1 + r.total));
}

TEST(HelmholtzForm, GradientDistortion) {
    std::mt19937_64 rng(9);
    const Grid2 g = Grid2::square(16, 16);
    const auto k = smooth_vector_field(g, rng, 0.5);
    const auto z0 = smooth_vector_field(g, rng, 0.5);
    const auto h = helmholtz_form(k, grad(z0), params(1, 1));
    EXPECT_LT(std::sqrt(inner(h.p, h.p)), 1e-8);
}

TEST(HelmholtzForm, RandomSmoothPairs) {
    std::mt19937_64 rng(10);
    const Grid2 g = Grid2::square(32, 32);
    for (int t = 0; t < 4; ++t) {
        const auto k = smooth_vector_field(g, rng, 0.6);
        const auto b = smooth_tensor_field(g, rng, 0.6);
        const auto h = helmholtz_form(k, b, params(1, 1));
        EXPECT_LT(std::abs(h.value - h.energy) / (1 + h.energy), 1e-8);
    }
}

TEST(HelmholtzForm, RequiresUnitParameters) {
    const Grid2 g = Grid2::square(8, 8);
    EXPECT_THROW(helmholtz_form(VectorField(g), TensorField(g), params(0.5, 1)), Error);
}

TEST(RescaledLayer, ZeroForUnitConstant) {
    const double xi = 0.5;
    const Grid2 g = Grid2::make(30, 8, -xi, 1, -xi / 2, xi / 2);
    const auto r = rescaled_layer_energy(constant_k(g, {0, 1}), TensorField(g), params(0.25, xi));
    EXPECT_NEAR(r.total, 0.0, 1e-15);
}

TEST(RescaledLayer, LinearProfileInTheOuterWell) {
    const double xi = 0.5, eps = 0.25;
    const Grid2 g = Grid2::make(30, 8, -xi, 1, -xi / 2, xi / 2);
    // xi |B~| = 2 and d2 k~ / eps = B~ / eps
    const auto k = sample_field(g, VectorFn([&](double, double y) { return Vec2{2 * y / xi, 1}; }));
    const auto b = constant_b(g, Mat2::from(0, 2 / xi, 0, 0));
    const auto r = rescaled_layer_energy(k, b, params(eps, xi));
    EXPECT_NEAR(r.well_term, 0.0, 1e-14);
    EXPECT_NEAR(r.elastic, 0.0, 1e-12);
    // only the edge effect at x1 = -xi remains, where B~ meets the zero extension
    const VectorField c = layer_curl(b, eps);
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 1; i <= g.nx; ++i) EXPECT_NEAR(norm(c.at(i, j)), 0.0, 1e-12);
    double edge = 0.0;
    for (int j = 0; j <= g.ny; ++j) edge += xi * xi * g.cell_area() * dot(c.at(0, j), c.at(0, j));
    EXPECT_NEAR(r.curl_term, edge, 1e-12 * edge);
}

TEST(RescaledLayer, RejectsWrongGrid) {
    const Grid2 g = Grid2::square(8, 8);
    EXPECT_THROW(rescaled_layer_energy(VectorField(g), TensorField(g), params(0.5, 0.5)), Error);
}
