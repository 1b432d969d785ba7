/// @file field.hpp
/// @brief Uniform grids, node/cell sampled fields, layer geometry and the
/// plain-text field dump format.
///
/// Staggering used throughout the library:
///   - director fields k live on grid nodes, (nx+1)*(ny+1) samples;
///   - tensors (grad k, B, Helmholtz parts) live on cell centers, nx*ny samples;
///   - curl and div of a cell tensor live on nodes, boundary nodes hold 0 for
///     curl and a one-sided value for div.
/// Storage is row-major: the fastest index runs along x.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace discl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GridMismatch : public Error {
public:
    explicit GridMismatch(const std::string& where)
        : Error(where + ": fields are defined on different grids") {}
};

class NonFiniteError : public Error {
public:
    NonFiniteError(std::string what_term, double x_, double y_)
        : Error(describe(what_term, x_, y_)), term(std::move(what_term)), x(x_), y(y_) {}
    std::string term;
    double x, y;

private:
    static std::string describe(const std::string& t, double x, double y) {
        std::ostringstream os;
        os << "non-finite value in " << t << " at (" << x << ", " << y << ")";
        return os.str();
    }
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
    Vec2& operator*=(double s) { x *= s; y *= s; return *this; }
    friend Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
    friend Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
    friend Vec2 operator*(double s, Vec2 a) { return a *= s; }
    friend Vec2 operator*(Vec2 a, double s) { return a *= s; }
    friend Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
    double operator[](int c) const { return c == 0 ? x : y; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

/// 2x2 matrix, entry (r, c) = row r, column c. For B and grad k, row r is the
/// vector component and column c the derivative direction.
struct Mat2 {
    std::array<double, 4> a{0.0, 0.0, 0.0, 0.0};

    static Mat2 from(double a11, double a12, double a21, double a22) {
        Mat2 m;
        m.a = {a11, a12, a21, a22};
        return m;
    }
    static Mat2 outer(const Vec2& u, const Vec2& v) {
        return from(u.x * v.x, u.x * v.y, u.y * v.x, u.y * v.y);
    }
    double operator()(int r, int c) const { return a[2 * r + c]; }
    double& operator()(int r, int c) { return a[2 * r + c]; }

    Mat2& operator+=(const Mat2& o) { for (int i = 0; i < 4; ++i) a[i] += o.a[i]; return *this; }
    Mat2& operator-=(const Mat2& o) { for (int i = 0; i < 4; ++i) a[i] -= o.a[i]; return *this; }
    Mat2& operator*=(double s) { for (auto& v : a) v *= s; return *this; }
    friend Mat2 operator+(Mat2 x, const Mat2& y) { return x += y; }
    friend Mat2 operator-(Mat2 x, const Mat2& y) { return x -= y; }
    friend Mat2 operator*(double s, Mat2 x) { return x *= s; }
    friend Mat2 operator*(Mat2 x, double s) { return x *= s; }

    Mat2 operator*(const Mat2& o) const {
        const auto& m = *this;
        return from(m(0, 0) * o(0, 0) + m(0, 1) * o(1, 0), m(0, 0) * o(0, 1) + m(0, 1) * o(1, 1),
                    m(1, 0) * o(0, 0) + m(1, 1) * o(1, 0), m(1, 0) * o(0, 1) + m(1, 1) * o(1, 1));
    }
};

inline double frob_dot(const Mat2& x, const Mat2& y) {
    return x.a[0] * y.a[0] + x.a[1] * y.a[1] + x.a[2] * y.a[2] + x.a[3] * y.a[3];
}
inline double frob(const Mat2& x) { return std::sqrt(frob_dot(x, x)); }

inline Mat2 rotation(double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return Mat2::from(c, -s, s, c);
}

/// Uniform rectangular grid of nx by ny cells.
struct Grid2 {
    int nx = 1;
    int ny = 1;
    double x_min = -1.0;
    double x_max = 1.0;
    double y_min = -1.0;
    double y_max = 1.0;

    static Grid2 make(int nx, int ny, double x_min, double x_max, double y_min, double y_max) {
        if (nx < 1 || ny < 1) throw Error("Grid2: cell counts must be positive");
        if (!(x_max > x_min) || !(y_max > y_min)) throw Error("Grid2: empty extent");
        return Grid2{nx, ny, x_min, x_max, y_min, y_max};
    }
    /// Grid over the model domain (-1,1)^2.
    static Grid2 square(int nx, int ny) { return make(nx, ny, -1.0, 1.0, -1.0, 1.0); }

    double hx() const { return (x_max - x_min) / nx; }
    double hy() const { return (y_max - y_min) / ny; }
    double cell_area() const { return hx() * hy(); }
    double area() const { return (x_max - x_min) * (y_max - y_min); }

    int nodes_x() const { return nx + 1; }
    int nodes_y() const { return ny + 1; }
    std::size_t node_count() const { return static_cast<std::size_t>(nx + 1) * (ny + 1); }
    std::size_t cell_count() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t node(int i, int j) const { return static_cast<std::size_t>(j) * (nx + 1) + i; }
    std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    double node_x(int i) const { return x_min + i * hx(); }
    double node_y(int j) const { return y_min + j * hy(); }
    double cell_x(int i) const { return x_min + (i + 0.5) * hx(); }
    double cell_y(int j) const { return y_min + (j + 0.5) * hy(); }

    bool interior_node(int i, int j) const { return i > 0 && i < nx && j > 0 && j < ny; }

    /// Trapezoid weight of a node (cell area, halved on edges, quartered at corners).
    double node_weight(int i, int j) const {
        double w = cell_area();
        if (i == 0 || i == nx) w *= 0.5;
        if (j == 0 || j == ny) w *= 0.5;
        return w;
    }

    friend bool operator==(const Grid2& a, const Grid2& b) {
        return a.nx == b.nx && a.ny == b.ny && a.x_min == b.x_min && a.x_max == b.x_max &&
               a.y_min == b.y_min && a.y_max == b.y_max;
    }
    friend bool operator!=(const Grid2& a, const Grid2& b) { return !(a == b); }
};

/// Node-sampled R^2 field.
struct VectorField {
    Grid2 grid;
    std::vector<double> data;

    VectorField() = default;
    explicit VectorField(const Grid2& g) : grid(g), data(2 * g.node_count(), 0.0) {}

    Vec2 at(int i, int j) const {
        const std::size_t n = 2 * grid.node(i, j);
        return {data[n], data[n + 1]};
    }
    void set(int i, int j, const Vec2& v) {
        const std::size_t n = 2 * grid.node(i, j);
        data[n] = v.x;
        data[n + 1] = v.y;
    }
    void add(int i, int j, const Vec2& v) {
        const std::size_t n = 2 * grid.node(i, j);
        data[n] += v.x;
        data[n + 1] += v.y;
    }
    /// Average of the four corner nodes of cell (i, j).
    Vec2 cell_average(int i, int j) const {
        return 0.25 * (at(i, j) + at(i + 1, j) + at(i, j + 1) + at(i + 1, j + 1));
    }
};

/// Cell-centered R^{2x2} field.
struct TensorField {
    Grid2 grid;
    std::vector<double> data;

    TensorField() = default;
    explicit TensorField(const Grid2& g) : grid(g), data(4 * g.cell_count(), 0.0) {}

    Mat2 at(int i, int j) const {
        const std::size_t n = 4 * grid.cell(i, j);
        Mat2 m;
        std::copy_n(data.begin() + static_cast<std::ptrdiff_t>(n), 4, m.a.begin());
        return m;
    }
    void set(int i, int j, const Mat2& m) {
        const std::size_t n = 4 * grid.cell(i, j);
        std::copy(m.a.begin(), m.a.end(), data.begin() + static_cast<std::ptrdiff_t>(n));
    }
    void add(int i, int j, const Mat2& m) {
        const std::size_t n = 4 * grid.cell(i, j);
        for (int c = 0; c < 4; ++c) data[n + c] += m.a[c];
    }
};

/// Cell indicator (1 inside, 0 outside).
struct CellMask {
    Grid2 grid;
    std::vector<std::uint8_t> inside;

    bool operator()(int i, int j) const { return inside[grid.cell(i, j)] != 0; }
    std::size_t count() const {
        return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
    }
};

inline void require_same_grid(const Grid2& a, const Grid2& b, const char* where) {
    if (a != b) throw GridMismatch(where);
}

// Elementwise helpers used by the solvers and the minimizer.
inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}
inline void axpy(double s, const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += s * x[i];
}

// ---------------------------------------------------------------------------
// Layer geometry

/// The layer L_{eps,xi} = (-xi, 1) x (-eps*xi/2, eps*xi/2) that supports B.
struct LayerGeometry {
    double eps = 1.0;
    double xi = 0.5;

    static LayerGeometry make(double eps, double xi) {
        if (!(eps > 0.0) || !(xi > 0.0)) throw Error("LayerGeometry: eps and xi must be positive");
        if (!(xi < 1.0)) throw Error("LayerGeometry: layer leaves the domain (need xi < 1)");
        if (!(eps * xi < 2.0)) throw Error("LayerGeometry: layer leaves the domain (need eps*xi < 2)");
        return LayerGeometry{eps, xi};
    }

    double x_lo() const { return -xi; }
    double x_hi() const { return 1.0; }
    double height() const { return eps * xi; }
    double y_lo() const { return -0.5 * eps * xi; }
    double y_hi() const { return 0.5 * eps * xi; }
    double area() const { return (1.0 + xi) * eps * xi; }

    /// Half-open membership test [-xi, 1) x [-eps xi/2, eps xi/2).
    bool contains(double x, double y) const {
        return x >= x_lo() && x < x_hi() && y >= y_lo() && y < y_hi();
    }
};

/// Cell rows [first, last] whose centers lie in the layer band.
struct RowRange {
    int first = 0;
    int last = -1;
    int count() const { return last - first + 1; }
};

inline RowRange layer_rows(const Grid2& g, const LayerGeometry& geom) {
    RowRange r{g.ny, -1};
    for (int j = 0; j < g.ny; ++j) {
        const double y = g.cell_y(j);
        if (y >= geom.y_lo() && y < geom.y_hi()) {
            r.first = std::min(r.first, j);
            r.last = std::max(r.last, j);
        }
    }
    if (r.last < r.first) r = RowRange{0, -1};
    return r;
}

inline constexpr int kMinLayerRows = 4;

/// Throws unless the grid holds the layer and resolves it with kMinLayerRows rows.
inline void require_resolved(const Grid2& g, const LayerGeometry& geom) {
    if (geom.x_lo() < g.x_min || geom.x_hi() > g.x_max || geom.y_lo() < g.y_min ||
        geom.y_hi() > g.y_max)
        throw Error("layer exceeds the grid domain");
    const int rows = layer_rows(g, geom).count();
    if (rows < kMinLayerRows) {
        std::ostringstream os;
        os << "layer of height " << geom.height() << " is resolved by " << rows
           << " cell rows; at least " << kMinLayerRows << " are required";
        throw Error(os.str());
    }
}

/// Indicator of cell centers inside L_{eps,xi}.
inline CellMask layer_mask(const Grid2& g, const LayerGeometry& geom) {
    require_resolved(g, geom);
    CellMask m{g, std::vector<std::uint8_t>(g.cell_count(), 0)};
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            m.inside[g.cell(i, j)] = geom.contains(g.cell_x(i), g.cell_y(j)) ? 1 : 0;
    return m;
}

// ---------------------------------------------------------------------------
// Sampling

using VectorFn = std::function<Vec2(double, double)>;
using TensorFn = std::function<Mat2(double, double)>;

inline VectorField sample_field(const Grid2& g, const VectorFn& f) {
    VectorField out(g);
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const double x = g.node_x(i), y = g.node_y(j);
            const Vec2 v = f(x, y);
            if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw NonFiniteError("sample_field", x, y);
            out.set(i, j, v);
        }
    return out;
}

inline TensorField sample_field(const Grid2& g, const TensorFn& f) {
    TensorField out(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.cell_x(i), y = g.cell_y(j);
            const Mat2 m = f(x, y);
            for (double v : m.a)
                if (!std::isfinite(v)) throw NonFiniteError("sample_field", x, y);
            out.set(i, j, m);
        }
    return out;
}

/// Shift applied to node coordinates before evaluating a field that is
/// singular at the origin. Nonzero only when the origin is itself a node.
inline Vec2 core_offset(const Grid2& g) {
    const double fi = (0.0 - g.x_min) / g.hx();
    const double fj = (0.0 - g.y_min) / g.hy();
    const bool on_x = std::abs(fi - std::round(fi)) < 1e-9;
    const bool on_y = std::abs(fj - std::round(fj)) < 1e-9;
    if (on_x && on_y) return {0.5 * g.hx(), 0.5 * g.hy()};
    return {};
}

// ---------------------------------------------------------------------------
// Field dump format:
//   FIELD v1 <kind> <nx> <ny> <x_min> <x_max> <y_min> <y_max>
// followed by one line per sample row (fixed y index), components interleaved.

namespace detail {
inline void write_header(std::ostream& os, const char* kind, const Grid2& g) {
    os << std::setprecision(17) << "FIELD v1 " << kind << ' ' << g.nx << ' ' << g.ny << ' '
       << g.x_min << ' ' << g.x_max << ' ' << g.y_min << ' ' << g.y_max << '\n';
}
inline Grid2 read_header(std::istream& is, const std::string& expected_kind) {
    std::string tag, version, kind;
    Grid2 g;
    if (!(is >> tag >> version >> kind >> g.nx >> g.ny >> g.x_min >> g.x_max >> g.y_min >> g.y_max))
        throw Error("field dump: malformed header");
    if (tag != "FIELD" || version != "v1") throw Error("field dump: unknown format " + tag + " " + version);
    if (kind != expected_kind) throw Error("field dump: expected " + expected_kind + ", found " + kind);
    return Grid2::make(g.nx, g.ny, g.x_min, g.x_max, g.y_min, g.y_max);
}
inline void write_rows(std::ostream& os, const std::vector<double>& data, std::size_t per_row) {
    os << std::setprecision(17);
    for (std::size_t n = 0; n < data.size(); ++n) {
        os << data[n];
        os << (((n + 1) % per_row == 0) ? '\n' : ' ');
    }
}
inline void read_values(std::istream& is, std::vector<double>& data) {
    for (auto& v : data)
        if (!(is >> v)) throw Error("field dump: truncated sample data");
}
}  // namespace detail

inline void write_field(std::ostream& os, const VectorField& f) {
    detail::write_header(os, "vector_node", f.grid);
    detail::write_rows(os, f.data, 2 * static_cast<std::size_t>(f.grid.nodes_x()));
}
inline void write_field(std::ostream& os, const TensorField& f) {
    detail::write_header(os, "tensor_cell", f.grid);
    detail::write_rows(os, f.data, 4 * static_cast<std::size_t>(f.grid.nx));
}
inline VectorField read_vector_field(std::istream& is) {
    VectorField f(detail::read_header(is, "vector_node"));
    detail::read_values(is, f.data);
    return f;
}
inline TensorField read_tensor_field(std::istream& is) {
    TensorField f(detail::read_header(is, "tensor_cell"));
    detail::read_values(is, f.data);
    return f;
}

}  // namespace discl
