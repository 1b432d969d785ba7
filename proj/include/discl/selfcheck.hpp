/// @file selfcheck.hpp
/// @brief Seeded invariant checks shared by the command-line `check` command
/// and the acceptance driver: gradient vs finite differences, the Helmholtz
/// identity, envelope certificates, defect-free collapse, charge quantization,
/// stencil identities and the curl-measure identity.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "diffops.hpp"
#include "energy.hpp"
#include "envelope.hpp"
#include "helmholtz.hpp"
#include "minimize.hpp"
#include "random_fields.hpp"

namespace discl {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace detail {

template <class F>
CheckResult timed_check(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    r.name = name;
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

inline std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(3) << v;
    return os.str();
}

inline Vec2 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec2 v{n(rng), n(rng)};
    return (1.0 / norm(v)) * v;
}

// Uniform sample of the ball of radius r_max in R^4 (2x2 matrices).
inline Mat2 random_matrix_in_ball(std::mt19937_64& rng, double r_max) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat2 m = Mat2::from(n(rng), n(rng), n(rng), n(rng));
    const double r = r_max * std::pow(u(rng), 0.25);
    return (r / frob(m)) * m;
}

// Independent extended-precision evaluation of the discrete energy with the
// default rational well, used as the finite-difference oracle: in double the
// central difference of a total of size E carries rounding of order
// 1e-16 E / h, which swamps small directional derivatives.
inline long double reference_energy(const Grid2& g, const std::vector<long double>& k,
                                    const std::vector<long double>& b, long double eps, long double xi) {
    using L = long double;
    const L hx = g.hx(), hy = g.hy(), a = hx * hy;
    const L ex2 = eps * xi * xi, exi = eps * xi;
    auto kn = [&](int i, int j, int r) { return k[2 * g.node(i, j) + r]; };
    auto bc = [&](int i, int j, int r, int c) { return b[4 * g.cell(i, j) + 2 * r + c]; };
    auto well = [](L x) {
        const L q = x * (x - 2);
        return q * q / (1 + x * x);
    };
    L total = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            L kb[2], n2 = 0, e2 = 0, b2 = 0;
            for (int r = 0; r < 2; ++r) {
                kb[r] = (kn(i, j, r) + kn(i + 1, j, r) + kn(i, j + 1, r) + kn(i + 1, j + 1, r)) / 4;
                n2 += kb[r] * kb[r];
                const L d1 = ((kn(i + 1, j, r) + kn(i + 1, j + 1, r)) - (kn(i, j, r) + kn(i, j + 1, r))) / (2 * hx);
                const L d2 = ((kn(i, j + 1, r) + kn(i + 1, j + 1, r)) - (kn(i, j, r) + kn(i + 1, j, r))) / (2 * hy);
                e2 += (d1 - bc(i, j, r, 0)) * (d1 - bc(i, j, r, 0)) + (d2 - bc(i, j, r, 1)) * (d2 - bc(i, j, r, 1));
                b2 += bc(i, j, r, 0) * bc(i, j, r, 0) + bc(i, j, r, 1) * bc(i, j, r, 1);
            }
            const L u = std::sqrt(n2) - 1;
            total += a * (u * u / ex2 + e2 + well(exi * std::sqrt(b2)) / ex2);
        }
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i)
            for (int r = 0; r < 2; ++r) {
                auto dx = [&](int c) {
                    return ((bc(i, j - 1, r, c) + bc(i, j, r, c)) - (bc(i - 1, j - 1, r, c) + bc(i - 1, j, r, c))) /
                           (2 * hx);
                };
                auto dy = [&](int c) {
                    return ((bc(i - 1, j, r, c) + bc(i, j, r, c)) - (bc(i - 1, j - 1, r, c) + bc(i, j - 1, r, c))) /
                           (2 * hy);
                };
                const L cr = dx(1) - dy(0);
                total += a * ex2 * cr * cr;
            }
    return total;
}

}  // namespace detail

/// Analytic gradient against central differences (step 1e-6) on random
/// (k, B) pairs on an 8x8 grid.
inline CheckResult check_gradient(std::uint64_t seed, int pairs = 20, int directions = 5) {
    return detail::timed_check("gradient matches finite differences", [&](CheckResult& r) {
        std::mt19937_64 rng(seed);
        const Grid2 g = Grid2::square(8, 8);
        ModelParams p;
        p.eps = 0.7;
        p.xi = 0.6;
        const double h = 1e-6;
        double worst = 0.0, ref_gap = 0.0;
        for (int t = 0; t < pairs; ++t) {
            const auto k = random_vector_field(g, rng);
            const auto b = random_tensor_field(g, rng, 1.5);
            const auto gr = energy_gradient(k, b, p);
            for (int d = 0; d < directions; ++d) {
                const auto dk = random_vector_field(g, rng);
                const auto db = random_tensor_field(g, rng);
                // central difference of the extended-precision reference
                std::vector<long double> kp(k.data.size()), km(k.data.size()), bp(b.data.size()), bm(b.data.size());
                long double an = 0.0L;
                for (std::size_t m = 0; m < kp.size(); ++m) {
                    kp[m] = k.data[m] + h * static_cast<long double>(dk.data[m]);
                    km[m] = k.data[m] - h * static_cast<long double>(dk.data[m]);
                    an += static_cast<long double>(gr.dk.data[m]) * dk.data[m];
                }
                for (std::size_t m = 0; m < bp.size(); ++m) {
                    bp[m] = b.data[m] + h * static_cast<long double>(db.data[m]);
                    bm[m] = b.data[m] - h * static_cast<long double>(db.data[m]);
                    an += static_cast<long double>(gr.db.data[m]) * db.data[m];
                }
                const long double fd = (detail::reference_energy(g, kp, bp, p.eps, p.xi) -
                                        detail::reference_energy(g, km, bm, p.eps, p.xi)) /
                                       (2 * h);
                // the reference must be the same functional as energy()
                std::vector<long double> k0(k.data.begin(), k.data.end()), b0(b.data.begin(), b.data.end());
                const double e0 = energy(k, b, p).total;
                ref_gap = std::max(ref_gap, std::abs(static_cast<double>(detail::reference_energy(g, k0, b0, p.eps, p.xi)) - e0) / e0);
                worst = std::max(worst, static_cast<double>(std::abs(an - fd) / std::abs(fd)));
            }
        }
        r.passed = worst < 1e-6 && ref_gap < 1e-13;
        r.detail = "max relative error " + detail::fmt(worst) + " over " + std::to_string(pairs * directions) +
                   " directions (reference energy gap " + detail::fmt(ref_gap) + ")";
    });
}

/// Helmholtz identity E_{1,1}[k, B] = I[k - z, z, p], div p = 0 and
/// orthogonality of p to gradients, on random smooth pairs (32x32).
inline CheckResult check_helmholtz(std::uint64_t seed, int pairs = 10, int probes = 10) {
    return detail::timed_check("Helmholtz identity", [&](CheckResult& r) {
        std::mt19937_64 rng(seed);
        const Grid2 g = Grid2::square(32, 32);
        ModelParams p;
        double ident = 0.0, divr = 0.0, orth = 0.0;
        for (int t = 0; t < pairs; ++t) {
            const auto k = smooth_vector_field(g, rng, 0.6);
            const auto b = smooth_tensor_field(g, rng, 0.6);
            double rel = 0.0;
            try {
                const auto f = helmholtz_form(k, b, p);
                rel = std::abs(f.value - f.energy) / (1.0 + f.energy);
            } catch (const IdentityError& e) {
                rel = std::abs(e.helmholtz_value - e.energy_value) / (1.0 + e.energy_value);
            }
            ident = std::max(ident, rel);
            const auto h = helmholtz(b, p.tolerances.cg_relative);
            divr = std::max(divr, h.div_residual);
            for (int q = 0; q < probes; ++q) {
                const auto gw = grad(random_vector_field(g, rng));
                const double s = std::abs(inner(h.p, gw)) / std::sqrt(inner(h.p, h.p) * inner(gw, gw));
                orth = std::max(orth, s);
            }
        }
        r.passed = ident < 1e-8 && divr < 1e-8 && orth < 1e-8;
        r.detail = "identity " + detail::fmt(ident) + ", div residual " + detail::fmt(divr) + ", orthogonality " +
                   detail::fmt(orth);
    });
}

/// Lamination upper bound vanishes on |p| <= 2 with certified
/// recombination; bracket ordering lower <= upper <= W(|p|) on |p| <= 6.
inline CheckResult check_envelope(std::uint64_t seed, const WellPotential& w = make_default_potential(),
                                  int samples = 1000) {
    return detail::timed_check("envelope vanishes in the ball of radius 2", [&](CheckResult& r) {
        std::mt19937_64 rng(seed);
        const EnvelopeOracle oracle(w);
        double max_upper = 0.0, max_cert = 0.0, order = -std::numeric_limits<double>::infinity();
        bool certified = true;
        for (int s = 0; s < samples; ++s) {
            const Mat2 m = detail::random_matrix_in_ball(rng, w.well_outer);
            const auto br = oracle.bracket(m);
            max_upper = std::max(max_upper, br.upper);
            if (!br.certificate) {
                certified = false;
                continue;
            }
            max_cert = std::max(max_cert, br.certificate->recombination_residual);
        }
        for (int s = 0; s < samples; ++s) {
            const Mat2 m = detail::random_matrix_in_ball(rng, 6.0);
            const auto br = oracle.bracket(m);
            const double wv = w.value(br.argument_norm);
            order = std::max({order, br.lower - br.upper, br.upper - (wv + 1e-12)});
        }
        r.passed = certified && max_upper == 0.0 && max_cert < 1e-12 && order <= 0.0;
        r.detail = "max upper in ball " + detail::fmt(max_upper) + ", certificate residual " + detail::fmt(max_cert) +
                   (certified ? "" : " (missing certificate)") + ", worst ordering slack " + detail::fmt(order);
    });
}

/// Relaxed energy of a smooth unit field with B = grad k and
/// eps = 2 / (xi max|grad k| + 1) stays at quadrature level.
inline CheckResult check_defect_free(int n = 128) {
    return detail::timed_check("defect-free collapse", [&](CheckResult& r) {
        const Grid2 g = Grid2::square(n, n);
        const auto k = sample_field(g, VectorFn([](double x, double y) {
                                        const double ph = 1.5 * x - y;
                                        return Vec2{std::cos(ph), std::sin(ph)};
                                    }));
        const auto b = grad(k);
        double gmax = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) gmax = std::max(gmax, frob(b.at(i, j)));
        ModelParams p;
        p.xi = 0.5;
        p.eps = 2.0 / (p.xi * gmax + 1.0);
        const EnvelopeOracle oracle(p.potential);
        const auto e = relaxed_energy(k, b, p, [&](const Mat2& m) { return oracle.upper(m); });
        r.passed = gmax <= 4.0 && e.total < 1e-6 * g.area();
        r.detail = "relaxed energy " + detail::fmt(e.total) + " (|grad k| max " + detail::fmt(gmax) + ")";
    });
}

/// Ansatz charge on 64^2, 128^2, 256^2 with a layer height that is not a
/// multiple of the cell height, so the discretization error is visible.
inline CheckResult check_charge(double eps = 0.66, double xi = 0.5) {
    return detail::timed_check("charge quantization", [&](CheckResult& r) {
        ModelParams p;
        p.eps = eps;
        p.xi = xi;
        std::vector<double> err;
        double stokes = 0.0;
        for (int n : {64, 128, 256}) {
            const auto a = disclination_ansatz(Grid2::square(n, n), p, 1);
            const Vec2 q = charge(a.b), c = boundary_circulation(a.b);
            err.push_back(std::abs(norm(q) - 2.0));
            stokes = std::max(stokes, norm(q - c) / (1.0 + norm(c)));
        }
        const bool decreasing = err[1] < err[0] && err[2] < err[1];
        r.passed = decreasing && err[2] < 0.05 && stokes < 1e-13;
        r.detail = "| |charge| - 2 | = " + detail::fmt(err[0]) + ", " + detail::fmt(err[1]) + ", " +
                   detail::fmt(err[2]) + "; circulation mismatch " + detail::fmt(stokes);
    });
}

/// curl(grad k) = 0 and <B, grad w> = -<div B, w>_interior + boundary trace,
/// at three resolutions.
inline CheckResult check_stencils(std::uint64_t seed) {
    return detail::timed_check("stencil identities", [&](CheckResult& r) {
        std::mt19937_64 rng(seed);
        const double tol = 64 * std::numeric_limits<double>::epsilon();
        double curl_rel = 0.0, adj_rel = 0.0;
        for (int n : {8, 33, 64}) {
            const Grid2 g = Grid2::make(n, n + 1, -1, 1, -1, 1);
            const auto k = random_vector_field(g, rng);
            const double scale = max_abs(k.data) / (g.hx() * g.hy());
            curl_rel = std::max(curl_rel, max_abs(curl_rowwise(grad(k)).data) / scale);

            const auto b = random_tensor_field(g, rng);
            const auto w = random_vector_field(g, rng);
            const auto gw = grad(w);
            const double lhs = inner(b, gw);
            const auto t = normal_trace(b);
            double boundary = 0.0;
            for (int j = 0; j <= g.ny; ++j)
                for (int i = 0; i <= g.nx; ++i)
                    if (!g.interior_node(i, j)) boundary += dot(t.at(i, j), w.at(i, j));
            const double rhs = -inner_interior(div_rowwise(b), w) + boundary;
            adj_rel = std::max(adj_rel, std::abs(lhs - rhs) / std::sqrt(inner(b, b) * inner(gw, gw)));
        }
        r.passed = curl_rel < tol && adj_rel < tol;
        r.detail = "curl(grad) " + detail::fmt(curl_rel) + ", adjoint " + detail::fmt(adj_rel) + " (relative)";
    });
}

/// Prescribed-jump field k = +-g(x1)/2 e1 off the layer (linear across it)
/// plus an x1-only smooth part: both sides of the curl-measure identity agree.
inline VectorField prescribed_jump_field(const Grid2& g, const LayerGeometry& geom, double slope) {
    return sample_field(g, VectorFn([&](double x, double y) {
        const double gx = slope * (x + geom.xi);
        const double s = std::clamp(y / geom.y_hi(), -1.0, 1.0);
        return Vec2{0.5 * gx * s + std::sin(2 * x), std::cos(x)};
    }));
}

inline CheckResult check_curl_measure(int n = 256) {
    return detail::timed_check("curl-measure identity", [&](CheckResult& r) {
        ModelParams p;
        p.eps = 0.5;
        p.xi = 0.25;
        const Grid2 g = Grid2::square(n, n);
        const auto k = prescribed_jump_field(g, p.layer(), 1.6);
        const auto rl = rescale_to_layer(k, TensorField(g), p);
        const auto res = curl_measure_check(jump_profile(rl.k), k, p.layer());
        r.passed = res.lhs.size() == 8 && res.max_discrepancy < 1e-4;
        r.detail = "max discrepancy " + detail::fmt(res.max_discrepancy) + " over " + std::to_string(res.lhs.size()) +
                   " test functions";
    });
}

/// The full self-check battery.
inline std::vector<CheckResult> run_self_checks(std::uint64_t seed) {
    return {check_gradient(seed),   check_helmholtz(seed + 1), check_envelope(seed + 2), check_defect_free(),
            check_charge(),         check_stencils(seed + 3),  check_curl_measure()};
}

}  // namespace discl
