/// @file helmholtz.hpp
/// @brief Row-wise discrete Helmholtz decomposition B = p + grad z.
///
/// Each row of B is split by solving the Neumann problem G^T G z = G^T b with
/// conjugate gradients, G the node->cell gradient. The right-hand side lies in
/// the range of G^T, so the system is always consistent and p = b - G z
/// satisfies G^T p = 0: zero divergence at interior nodes and zero Neumann
/// data on the boundary.
#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "diffops.hpp"
#include "field.hpp"

namespace discl {

class SolverError : public Error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : Error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

struct HelmholtzResult {
    TensorField p;       ///< divergence-free part
    VectorField z;       ///< potential, zero mean per component
    TensorField grad_z;
    double residual = 0.0;       ///< max |B - p - grad z|
    double div_residual = 0.0;   ///< max |G^T p| relative to max |G^T B|
    int iterations = 0;
};

namespace detail {

// Scalar node field -> cell gradient pairs, and its transpose.
struct ScalarGrad {
    const Grid2& g;
    void apply(const std::vector<double>& z, std::vector<double>& gx, std::vector<double>& gy) const {
        const double ax = 1.0 / (2.0 * g.hx()), ay = 1.0 / (2.0 * g.hy());
        const int w = g.nx + 1;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t n = static_cast<std::size_t>(j) * w + i;
                const double z00 = z[n], z10 = z[n + 1], z01 = z[n + w], z11 = z[n + w + 1];
                const std::size_t c = g.cell(i, j);
                gx[c] = ax * ((z10 + z11) - (z00 + z01));
                gy[c] = ay * ((z01 + z11) - (z00 + z10));
            }
    }
    void transpose(const std::vector<double>& gx, const std::vector<double>& gy, std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        const double ax = 1.0 / (2.0 * g.hx()), ay = 1.0 / (2.0 * g.hy());
        const int w = g.nx + 1;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const std::size_t c = g.cell(i, j);
                const double a = ax * gx[c], b = ay * gy[c];
                const std::size_t n = static_cast<std::size_t>(j) * w + i;
                out[n] += -a - b;
                out[n + 1] += a - b;
                out[n + w] += -a + b;
                out[n + w + 1] += a + b;
            }
    }
};

inline void remove_mean(std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(v.size());
    for (double& x : v) x -= s;
}

}  // namespace detail

/// Solves G^T G z = rhs (rhs with zero sum) by CG with a zero-mean projection.
/// Returns the iteration count; throws SolverError on non-convergence.
inline int solve_neumann(const Grid2& g, const std::vector<double>& rhs, std::vector<double>& z,
                         double tol, int max_iter = 0) {
    const std::size_t n = g.node_count();
    if (max_iter <= 0) max_iter = 20 * (g.nx + g.ny) + 1000;
    detail::ScalarGrad op{g};
    std::vector<double> gx(g.cell_count()), gy(g.cell_count());
    auto apply_laplacian = [&](const std::vector<double>& x, std::vector<double>& y) {
        op.apply(x, gx, gy);
        op.transpose(gx, gy, y);
    };

    z.assign(n, 0.0);
    std::vector<double> r = rhs;
    detail::remove_mean(r);
    const double rhs_norm = std::sqrt(dot(r, r));
    std::vector<double> history{rhs_norm};
    if (rhs_norm == 0.0) return 0;

    std::vector<double> p = r, ap(n);
    double rr = dot(r, r);
    for (int it = 1; it <= max_iter; ++it) {
        apply_laplacian(p, ap);
        const double pap = dot(p, ap);
        if (!(pap > 0.0)) break;
        const double alpha = rr / pap;
        axpy(alpha, p, z);
        axpy(-alpha, ap, r);
        detail::remove_mean(r);
        const double rr_new = dot(r, r);
        history.push_back(std::sqrt(rr_new));
        if (std::sqrt(rr_new) <= tol * rhs_norm) return it;
        const double beta = rr_new / rr;
        for (std::size_t m = 0; m < n; ++m) p[m] = r[m] + beta * p[m];
        detail::remove_mean(p);
        rr = rr_new;
    }
    std::ostringstream os;
    os << "Neumann CG did not converge: relative residual " << history.back() / rhs_norm
       << " after " << history.size() - 1 << " iterations";
    throw SolverError(os.str(), std::move(history));
}

inline HelmholtzResult helmholtz(const TensorField& b, double tol = 1e-10, int max_iter = 0) {
    if (!(tol > 0.0)) throw Error("helmholtz: tolerance must be positive");
    const Grid2& g = b.grid;
    detail::ScalarGrad op{g};
    const std::size_t nn = g.node_count(), nc = g.cell_count();

    HelmholtzResult res{TensorField(g), VectorField(g), TensorField(g)};
    std::vector<double> bx(nc), by(nc), rhs(nn), z, gx(nc), gy(nc), check(nn), rhs_all;
    double rhs_max = 0.0, div_max = 0.0;
    for (int row = 0; row < 2; ++row) {
        for (std::size_t c = 0; c < nc; ++c) {
            bx[c] = b.data[4 * c + 2 * row];
            by[c] = b.data[4 * c + 2 * row + 1];
        }
        op.transpose(bx, by, rhs);
        res.iterations = std::max(res.iterations, solve_neumann(g, rhs, z, tol, max_iter));

        // zero trapezoid mean
        double mean = 0.0;
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) mean += g.node_weight(i, j) * z[g.node(i, j)];
        mean /= g.area();
        for (double& v : z) v -= mean;

        op.apply(z, gx, gy);
        for (std::size_t m = 0; m < nn; ++m) res.z.data[2 * m + row] = z[m];
        for (std::size_t c = 0; c < nc; ++c) {
            res.grad_z.data[4 * c + 2 * row] = gx[c];
            res.grad_z.data[4 * c + 2 * row + 1] = gy[c];
            res.p.data[4 * c + 2 * row] = bx[c] - gx[c];
            res.p.data[4 * c + 2 * row + 1] = by[c] - gy[c];
            bx[c] -= gx[c];
            by[c] -= gy[c];
        }
        op.transpose(bx, by, check);
        rhs_max = std::max(rhs_max, max_abs(rhs));
        div_max = std::max(div_max, max_abs(check));
    }
    double rec = 0.0;
    for (std::size_t m = 0; m < b.data.size(); ++m)
        rec = std::max(rec, std::abs(b.data[m] - res.p.data[m] - res.grad_z.data[m]));
    res.residual = rec;
    res.div_residual = rhs_max > 0.0 ? div_max / rhs_max : div_max;
    return res;
}

/// Ratio |p|_h1 / (|p| + |curl p|) for a divergence-free p: the discrete
/// constant in the div+curl bound on this grid.
inline double div_curl_ratio(const TensorField& p) {
    const VectorField c = curl_rowwise(p);
    const double denom = std::sqrt(inner(p, p)) + std::sqrt(inner_interior(c, c));
    return denom > 0.0 ? h1_seminorm(p) / denom : 0.0;
}

}  // namespace discl
