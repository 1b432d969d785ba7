/// @file diffops.hpp
/// @brief Staggered grid operators: node->cell gradient, cell->node row-wise
/// curl and divergence, their exact adjoints, and the discrete Stokes pieces.
///
/// The gradient is the gradient of the bilinear interpolant at the cell
/// center. Curl and div at an interior node use the four surrounding cells
/// with the transposed averaging, so curl(grad k) == 0 up to rounding and
/// the cell-area-weighted sum of curl telescopes to a trapezoid circulation
/// along the outermost cell centers.
#pragma once

#include <cmath>
#include <vector>

#include "field.hpp"

namespace discl {

namespace detail {

// Four cells around interior node (i, j): SW, SE, NW, NE.
struct NodeStencil {
    Mat2 sw, se, nw, ne;
};
inline NodeStencil around(const TensorField& b, int i, int j) {
    return {b.at(i - 1, j - 1), b.at(i, j - 1), b.at(i - 1, j), b.at(i, j)};
}

// Row r of d/dx1 of column c and d/dx2 of column c at a node from its cells.
inline double dx_at(const NodeStencil& s, int r, int c, double hx) {
    return ((s.se(r, c) + s.ne(r, c)) - (s.sw(r, c) + s.nw(r, c))) / (2.0 * hx);
}
inline double dy_at(const NodeStencil& s, int r, int c, double hy) {
    return ((s.nw(r, c) + s.ne(r, c)) - (s.sw(r, c) + s.se(r, c))) / (2.0 * hy);
}

inline int clamp_index(int v, int lo, int hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace detail

/// (grad k)_{rc} = d k_r / d x_c at cell centers; d/dx2 is scaled by 1/eps.
inline TensorField scaled_grad(const VectorField& k, double eps) {
    if (!(eps > 0.0)) throw Error("scaled_grad: eps must be positive");
    const Grid2& g = k.grid;
    TensorField out(g);
    const double ax = 1.0 / (2.0 * g.hx()), ay = 1.0 / (2.0 * g.hy() * eps);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 k00 = k.at(i, j), k10 = k.at(i + 1, j), k01 = k.at(i, j + 1), k11 = k.at(i + 1, j + 1);
            const Vec2 d1 = ax * ((k10 + k11) - (k00 + k01));
            const Vec2 d2 = ay * ((k01 + k11) - (k00 + k10));
            out.set(i, j, Mat2::from(d1.x, d2.x, d1.y, d2.y));
        }
    return out;
}

inline TensorField grad(const VectorField& k) { return scaled_grad(k, 1.0); }

/// Row-wise curl_eps g = d1 g_2 - (1/eps) d2 g_1 at interior nodes (0 on the boundary).
inline VectorField scaled_curl(const TensorField& b, double eps) {
    if (!(eps > 0.0)) throw Error("scaled_curl: eps must be positive");
    const Grid2& g = b.grid;
    VectorField out(g);
    const double hx = g.hx(), hy = g.hy() * eps;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const auto s = detail::around(b, i, j);
            out.set(i, j, {detail::dx_at(s, 0, 1, hx) - detail::dy_at(s, 0, 0, hy),
                           detail::dx_at(s, 1, 1, hx) - detail::dy_at(s, 1, 0, hy)});
        }
    return out;
}

inline VectorField curl_rowwise(const TensorField& b) { return scaled_curl(b, 1.0); }

/// Row-wise divergence d1 g_1 + d2 g_2 at nodes. Boundary nodes reuse the
/// stencil of the nearest interior node (one-sided in the normal direction).
inline VectorField div_rowwise(const TensorField& b) {
    const Grid2& g = b.grid;
    VectorField out(g);
    if (g.nx < 2 || g.ny < 2) return out;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const int ii = detail::clamp_index(i, 1, g.nx - 1);
            const int jj = detail::clamp_index(j, 1, g.ny - 1);
            const auto s = detail::around(b, ii, jj);
            out.set(i, j, {detail::dx_at(s, 0, 0, g.hx()) + detail::dy_at(s, 0, 1, g.hy()),
                           detail::dx_at(s, 1, 0, g.hx()) + detail::dy_at(s, 1, 1, g.hy())});
        }
    return out;
}

/// Transpose of grad with respect to plain sums: returns the node field
/// G^T B with sum_cells B:grad(w) == sum_nodes (G^T B) . w exactly.
inline VectorField grad_transpose(const TensorField& b) {
    const Grid2& g = b.grid;
    VectorField out(g);
    const double ax = 1.0 / (2.0 * g.hx()), ay = 1.0 / (2.0 * g.hy());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Mat2 m = b.at(i, j);
            const Vec2 c1{m(0, 0) * ax, m(1, 0) * ax};  // coefficient of d1
            const Vec2 c2{m(0, 1) * ay, m(1, 1) * ay};  // coefficient of d2
            out.add(i, j, -c1 - c2);
            out.add(i + 1, j, c1 - c2);
            out.add(i, j + 1, -c1 + c2);
            out.add(i + 1, j + 1, c1 + c2);
        }
    return out;
}

/// Transpose of scaled_curl (restricted to interior nodes) with respect to plain sums.
inline TensorField scaled_curl_transpose(const VectorField& v, double eps) {
    const Grid2& g = v.grid;
    TensorField out(g);
    const double ax = 1.0 / (2.0 * g.hx()), ay = 1.0 / (2.0 * g.hy() * eps);
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const Vec2 w = v.at(i, j);
            // curl_r = ax*(B_r2[SE]+B_r2[NE]-B_r2[SW]-B_r2[NW]) - ay*(B_r1[NW]+B_r1[NE]-B_r1[SW]-B_r1[SE])
            for (int r = 0; r < 2; ++r) {
                const double wr = w[r];
                const std::size_t sw = 4 * g.cell(i - 1, j - 1), se = 4 * g.cell(i, j - 1);
                const std::size_t nw = 4 * g.cell(i - 1, j), ne = 4 * g.cell(i, j);
                const std::size_t c1 = 2 * r, c2 = 2 * r + 1;
                out.data[se + c2] += ax * wr;
                out.data[ne + c2] += ax * wr;
                out.data[sw + c2] -= ax * wr;
                out.data[nw + c2] -= ax * wr;
                out.data[nw + c1] -= ay * wr;
                out.data[ne + c1] -= ay * wr;
                out.data[sw + c1] += ay * wr;
                out.data[se + c1] += ay * wr;
            }
        }
    return out;
}

/// Transpose of the interior-node divergence with respect to plain sums.
inline TensorField div_interior_transpose(const VectorField& v) {
    const Grid2& g = v.grid;
    TensorField out(g);
    const double ax = 1.0 / (2.0 * g.hx()), ay = 1.0 / (2.0 * g.hy());
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const Vec2 w = v.at(i, j);
            for (int r = 0; r < 2; ++r) {
                const double wr = w[r];
                const std::size_t sw = 4 * g.cell(i - 1, j - 1), se = 4 * g.cell(i, j - 1);
                const std::size_t nw = 4 * g.cell(i - 1, j), ne = 4 * g.cell(i, j);
                const std::size_t c1 = 2 * r, c2 = 2 * r + 1;
                out.data[se + c1] += ax * wr;
                out.data[ne + c1] += ax * wr;
                out.data[sw + c1] -= ax * wr;
                out.data[nw + c1] -= ax * wr;
                out.data[nw + c2] += ay * wr;
                out.data[ne + c2] += ay * wr;
                out.data[sw + c2] -= ay * wr;
                out.data[se + c2] -= ay * wr;
            }
        }
    return out;
}

/// Discrete Neumann data of B on boundary nodes: cell_area * (G^T B) there,
/// which is the trapezoid normal flux plus a half-cell divergence. Interior
/// nodes hold 0. With it the summation-by-parts identity reads
///   <B, grad w> = -<div B, w>_interior + sum_boundary trace . w.
inline VectorField normal_trace(const TensorField& b) {
    const Grid2& g = b.grid;
    VectorField gt = grad_transpose(b);
    const double a = g.cell_area();
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            if (g.interior_node(i, j)) gt.set(i, j, {});
            else gt.set(i, j, a * gt.at(i, j));
        }
    return gt;
}

/// Cell inner product: cell_area * sum B:C.
inline double inner(const TensorField& b, const TensorField& c) {
    require_same_grid(b.grid, c.grid, "inner");
    return b.grid.cell_area() * dot(b.data, c.data);
}

/// Interior-node inner product: cell_area * sum over interior nodes u . w.
inline double inner_interior(const VectorField& u, const VectorField& w) {
    require_same_grid(u.grid, w.grid, "inner_interior");
    const Grid2& g = u.grid;
    double s = 0.0;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) s += dot(u.at(i, j), w.at(i, j));
    return g.cell_area() * s;
}

/// Sum over interior nodes of cell_area * curl B.
inline Vec2 integrate_interior(const VectorField& v) {
    const Grid2& g = v.grid;
    Vec2 s;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) s += v.at(i, j);
    return g.cell_area() * s;
}

/// Counter-clockwise trapezoid circulation of each row of B along the
/// rectangle through the outermost cell centers.
inline Vec2 boundary_circulation(const TensorField& b) {
    const Grid2& g = b.grid;
    const int nx = g.nx, ny = g.ny;
    Vec2 q;
    if (nx < 2 || ny < 2) return q;
    for (int r = 0; r < 2; ++r) {
        double s = 0.0;
        // bottom (left to right) and top (right to left): tangential column 1
        for (int i = 0; i + 1 < nx; ++i) {
            s += 0.5 * g.hx() * (b.at(i, 0)(r, 0) + b.at(i + 1, 0)(r, 0));
            s -= 0.5 * g.hx() * (b.at(i, ny - 1)(r, 0) + b.at(i + 1, ny - 1)(r, 0));
        }
        // right (bottom to top) and left (top to bottom): tangential column 2
        for (int j = 0; j + 1 < ny; ++j) {
            s += 0.5 * g.hy() * (b.at(nx - 1, j)(r, 1) + b.at(nx - 1, j + 1)(r, 1));
            s -= 0.5 * g.hy() * (b.at(0, j)(r, 1) + b.at(0, j + 1)(r, 1));
        }
        if (r == 0) q.x = s;
        else q.y = s;
    }
    return q;
}

/// Discrete h1 seminorm of a cell tensor (differences between neighbouring cells).
inline double h1_seminorm(const TensorField& p) {
    const Grid2& g = p.grid;
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (i + 1 < g.nx) {
                const Mat2 d = (1.0 / g.hx()) * (p.at(i + 1, j) - p.at(i, j));
                s += frob_dot(d, d);
            }
            if (j + 1 < g.ny) {
                const Mat2 d = (1.0 / g.hy()) * (p.at(i, j + 1) - p.at(i, j));
                s += frob_dot(d, d);
            }
        }
    return std::sqrt(g.cell_area() * s);
}

}  // namespace discl

namespace discl {

/// Total topological charge: cell-area-weighted sum of the row-wise curl over
/// interior nodes. Equal to boundary_circulation(b) up to rounding.
inline Vec2 charge(const TensorField& b) { return integrate_interior(curl_rowwise(b)); }

}  // namespace discl

namespace discl {

/// curl_eps of a layer field at every node, with B extended by zero across
/// the left, bottom and top edges and constantly across the right edge (the
/// layer ends on the domain boundary there). Summing cell_area * curl over
/// all nodes gives the full distributional curl of the zero-extended field.
inline VectorField layer_curl(const TensorField& b, double eps) {
    if (!(eps > 0.0)) throw Error("layer_curl: eps must be positive");
    const Grid2& g = b.grid;
    VectorField out(g);
    auto at = [&](int i, int j) {
        if (j < 0 || j >= g.ny || i < 0) return Mat2{};
        return b.at(std::min(i, g.nx - 1), j);
    };
    const double hx = g.hx(), hy = g.hy() * eps;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const detail::NodeStencil s{at(i - 1, j - 1), at(i, j - 1), at(i - 1, j), at(i, j)};
            out.set(i, j, {detail::dx_at(s, 0, 1, hx) - detail::dy_at(s, 0, 0, hy),
                           detail::dx_at(s, 1, 1, hx) - detail::dy_at(s, 1, 0, hy)});
        }
    return out;
}

/// Sum over all nodes of cell_area * v.
inline Vec2 integrate_all(const VectorField& v) {
    const Grid2& g = v.grid;
    Vec2 s;
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) s += v.at(i, j);
    return g.cell_area() * s;
}

}  // namespace discl
