/// @file random_fields.hpp
/// @brief Seeded random fields for self-checks: i.i.d. Gaussian node and cell
/// data, and smooth fields built from a few random low modes.
#pragma once

#include <cmath>
#include <random>

#include "field.hpp"

namespace discl {

inline VectorField random_vector_field(const Grid2& g, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    VectorField f(g);
    for (double& v : f.data) v = n(rng);
    return f;
}

inline TensorField random_tensor_field(const Grid2& g, std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    TensorField f(g);
    for (double& v : f.data) v = n(rng);
    return f;
}

inline Mat2 random_matrix(std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    return Mat2::from(n(rng), n(rng), n(rng), n(rng));
}

// Smooth random fields: a few low Fourier modes with random amplitudes.
struct SmoothModes {
    double a[4][3];
    explicit SmoothModes(std::mt19937_64& rng, double amp = 1.0) {
        std::uniform_real_distribution<double> u(-amp, amp);
        for (auto& row : a)
            for (double& v : row) v = u(rng);
    }
    double operator()(double x, double y) const {
        return a[0][0] + a[0][1] * std::sin(1.3 * x + 0.4) + a[0][2] * std::cos(0.9 * y - 0.2) +
               a[1][0] * std::sin(x * y) + a[1][1] * std::cos(2.1 * x - 1.1 * y) + a[1][2] * x * y +
               a[2][0] * std::sin(0.7 * x + 1.9 * y) + a[2][1] * y * y + a[2][2] * std::cos(3.0 * x);
    }
};

inline VectorField smooth_vector_field(const Grid2& g, std::mt19937_64& rng, double amp = 1.0) {
    SmoothModes f0(rng, amp), f1(rng, amp);
    return sample_field(g, VectorFn([&](double x, double y) { return Vec2{f0(x, y), f1(x, y)}; }));
}

inline TensorField smooth_tensor_field(const Grid2& g, std::mt19937_64& rng, double amp = 1.0) {
    SmoothModes f0(rng, amp), f1(rng, amp), f2(rng, amp), f3(rng, amp);
    return sample_field(g, TensorFn([&](double x, double y) {
                            return Mat2::from(f0(x, y), f1(x, y), f2(x, y), f3(x, y));
                        }));
}

}  // namespace discl
