/// @file analysis.hpp
/// @brief Layer-frame diagnostics: rescaling to L_xi, the vertical jump
/// profile [k~], its compatibility with curl_eps B~, trace coincidence, the
/// curl-measure identity, and the eps -> 0 scaling-study driver.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "diffops.hpp"
#include "energy.hpp"
#include "envelope.hpp"
#include "field.hpp"
#include "minimize.hpp"
#include "potential.hpp"

namespace discl {

struct RescaledLayer {
    VectorField k;  ///< k~(X1, X2) = k(X1, eps X2)
    TensorField b;  ///< B~(X1, X2) = eps B(X1, eps X2)
};

namespace detail {

// Bilinear interpolation of node data at a physical point, clamped to the grid.
inline Vec2 interpolate_nodes(const VectorField& k, double x, double y) {
    const Grid2& g = k.grid;
    const double fx = std::clamp((x - g.x_min) / g.hx(), 0.0, static_cast<double>(g.nx));
    const double fy = std::clamp((y - g.y_min) / g.hy(), 0.0, static_cast<double>(g.ny));
    const int i = std::min(static_cast<int>(std::floor(fx)), g.nx - 1);
    const int j = std::min(static_cast<int>(std::floor(fy)), g.ny - 1);
    const double tx = fx - i, ty = fy - j;
    return ((1 - tx) * (1 - ty)) * k.at(i, j) + (tx * (1 - ty)) * k.at(i + 1, j) + ((1 - tx) * ty) * k.at(i, j + 1) +
           (tx * ty) * k.at(i + 1, j + 1);
}

// Bilinear interpolation of cell-centered data, with cell indices clamped to
// the columns [0, nx) and the rows [row_lo, row_hi].
inline Mat2 interpolate_cells(const TensorField& b, double x, double y, int row_lo, int row_hi) {
    const Grid2& g = b.grid;
    const double fx = (x - g.x_min) / g.hx() - 0.5;
    const double fy = (y - g.y_min) / g.hy() - 0.5;
    const int i0 = static_cast<int>(std::floor(fx)), j0 = static_cast<int>(std::floor(fy));
    const double tx = fx - i0, ty = fy - j0;
    auto cell = [&](int i, int j) { return b.at(std::clamp(i, 0, g.nx - 1), std::clamp(j, row_lo, row_hi)); };
    return ((1 - tx) * (1 - ty)) * cell(i0, j0) + (tx * (1 - ty)) * cell(i0 + 1, j0) +
           ((1 - tx) * ty) * cell(i0, j0 + 1) + (tx * ty) * cell(i0 + 1, j0 + 1);
}

}  // namespace detail

/// Grid over L_xi = (-xi, 1) x (-xi/2, xi/2) matching the physical spacing:
/// round((1+xi)/hx) columns and as many rows as the physical layer has.
inline Grid2 layer_frame_grid(const Grid2& g, const ModelParams& params) {
    const LayerGeometry geom = params.layer();
    require_resolved(g, geom);
    const int nx = std::max(1, static_cast<int>(std::lround((1.0 + params.xi) / g.hx())));
    const int ny = std::max(kMinLayerRows, layer_rows(g, geom).count());
    return Grid2::make(nx, ny, -params.xi, 1.0, -0.5 * params.xi, 0.5 * params.xi);
}

/// k~(X) = k(X1, eps X2) and B~(X) = eps B(X1, eps X2) by bilinear
/// resampling; B is interpolated among layer cells only.
inline RescaledLayer rescale_to_layer(const VectorField& k, const TensorField& b, const ModelParams& params) {
    params.validate();
    require_same_grid(k.grid, b.grid, "rescale_to_layer");
    const Grid2& g = k.grid;
    const Grid2 lg = layer_frame_grid(g, params);
    const RowRange rows = layer_rows(g, params.layer());
    RescaledLayer out{VectorField(lg), TensorField(lg)};
    for (int j = 0; j <= lg.ny; ++j)
        for (int i = 0; i <= lg.nx; ++i)
            out.k.set(i, j, detail::interpolate_nodes(k, lg.node_x(i), params.eps * lg.node_y(j)));
    for (int j = 0; j < lg.ny; ++j)
        for (int i = 0; i < lg.nx; ++i)
            out.b.set(i, j, params.eps * detail::interpolate_cells(b, lg.cell_x(i), params.eps * lg.cell_y(j),
                                                                   rows.first, rows.last));
    return out;
}

// ---------------------------------------------------------------------------

struct JumpProfile {
    std::vector<double> x;
    std::vector<Vec2> jump;        ///< [k~](x1)
    std::vector<Vec2> derivative;  ///< d[k~]/dx1

    Vec2 at(double x1) const {
        if (x.empty()) return {};
        if (x1 <= x.front()) return jump.front();
        if (x1 >= x.back()) return jump.back();
        const auto it = std::upper_bound(x.begin(), x.end(), x1);
        const std::size_t s = static_cast<std::size_t>(it - x.begin()) - 1;
        const double t = (x1 - x[s]) / (x[s + 1] - x[s]);
        return (1 - t) * jump[s] + t * jump[s + 1];
    }
};

/// [k~](x1) per node column as the sum over the column of hy * (d2 k~), which
/// telescopes to k~(x1, top) - k~(x1, bottom); derivative by centered
/// differences (one-sided at the ends).
inline JumpProfile jump_profile(const VectorField& kt) {
    const Grid2& g = kt.grid;
    JumpProfile p;
    for (int i = 0; i <= g.nx; ++i) {
        Vec2 s;
        for (int j = 0; j < g.ny; ++j) s += g.hy() * ((1.0 / g.hy()) * (kt.at(i, j + 1) - kt.at(i, j)));
        p.x.push_back(g.node_x(i));
        p.jump.push_back(s);
    }
    const int n = g.nx;
    p.derivative.resize(p.jump.size());
    for (int i = 0; i <= n; ++i) {
        const int lo = std::max(0, i - 1), hi = std::min(n, i + 1);
        p.derivative[i] = (1.0 / (p.x[hi] - p.x[lo])) * (p.jump[hi] - p.jump[lo]);
    }
    return p;
}

inline void write_profile_csv(std::ostream& os, const JumpProfile& p) {
    os << "x1,jump1,jump2,derivative1,derivative2\n" << std::setprecision(17);
    for (std::size_t i = 0; i < p.x.size(); ++i)
        os << p.x[i] << ',' << p.jump[i].x << ',' << p.jump[i].y << ',' << p.derivative[i].x << ','
           << p.derivative[i].y << '\n';
}

/// Cumulative integral of alpha over (-xi, x_i) x (-xi/2, xi/2) at every node
/// column: full weight for earlier columns, half weight for column i, full
/// weight at the right end.
inline std::vector<Vec2> cumulative_alpha(const VectorField& alpha) {
    const Grid2& g = alpha.grid;
    std::vector<Vec2> col(g.nx + 1), out(g.nx + 1);
    for (int i = 0; i <= g.nx; ++i)
        for (int j = 0; j <= g.ny; ++j) col[i] += g.cell_area() * alpha.at(i, j);
    Vec2 run;
    for (int i = 0; i <= g.nx; ++i) {
        out[i] = i == g.nx ? run + col[i] : run + 0.5 * col[i];
        run += col[i];
    }
    return out;
}

struct CompatibilityResult {
    double residual = 0.0;        ///< sup_s |[k~](s) - int int alpha|
    double endpoint_check = 0.0;  ///< | |[k~](1)| - |int alpha over L_xi| |
    std::vector<Vec2> integral;   ///< cumulative integral per profile sample
};

/// Compares the jump profile with the cumulative integral of alpha (node field
/// on the same L_xi grid, typically layer_curl(B~, eps)).
inline CompatibilityResult compatibility_residual(const JumpProfile& p, const VectorField& alpha) {
    if (p.x.size() != static_cast<std::size_t>(alpha.grid.nx + 1))
        throw GridMismatch("compatibility_residual");
    CompatibilityResult r;
    r.integral = cumulative_alpha(alpha);
    for (std::size_t i = 0; i < p.x.size(); ++i) {
        if (std::abs(p.x[i] - alpha.grid.node_x(static_cast<int>(i))) > 1e-9 * (1 + std::abs(p.x[i])))
            throw GridMismatch("compatibility_residual");
        r.residual = std::max(r.residual, norm(p.jump[i] - r.integral[i]));
    }
    r.endpoint_check = std::abs(norm(p.jump.back()) - norm(r.integral.back()));
    return r;
}

/// Node rows used for the one-sided traces: one row beyond each layer edge.
struct TraceRows {
    int below = 0;
    int above = 0;
};

inline TraceRows trace_rows(const Grid2& g, const LayerGeometry& geom) {
    const RowRange rows = layer_rows(g, geom);
    TraceRows t{rows.first - 1, rows.last + 2};
    if (rows.count() <= 0 || t.below < 0 || t.above > g.ny)
        throw Error("trace extraction: the layer touches the domain boundary");
    return t;
}

/// sup over profile samples of |[[k]](x1) - [k~](x1)|, where [[k]] is k one
/// node row above the layer minus k one node row below it.
inline double trace_coincidence_residual(const VectorField& k, const JumpProfile& p, const LayerGeometry& geom) {
    const Grid2& g = k.grid;
    const TraceRows t = trace_rows(g, geom);
    double r = 0.0;
    for (std::size_t s = 0; s < p.x.size(); ++s) {
        const double x1 = p.x[s];
        const Vec2 above = detail::interpolate_nodes(k, x1, g.node_y(t.above));
        const Vec2 below = detail::interpolate_nodes(k, x1, g.node_y(t.below));
        r = std::max(r, norm((above - below) - p.jump[s]));
    }
    return r;
}

/// Cosine of the angle between the traces of k above and below the layer at
/// the node column nearest x1; -1 for a full pi flip.
inline double flip_indicator(const VectorField& k, const LayerGeometry& geom, double x1 = 0.5) {
    const Grid2& g = k.grid;
    const TraceRows t = trace_rows(g, geom);
    const int i = std::clamp(static_cast<int>(std::lround((x1 - g.x_min) / g.hx())), 0, g.nx);
    const Vec2 a = k.at(i, t.above), b = k.at(i, t.below);
    const double n = norm(a) * norm(b);
    return n > 0.0 ? dot(a, b) / n : 0.0;
}

// ---------------------------------------------------------------------------
// Curl-measure identity

struct BumpFunction {
    double center = 0.0;       ///< x1 center
    double radius = 0.1;       ///< x1 half-width of the support
    double plateau = 0.05;     ///< phi(., x2) = 1 for |x2| <= plateau
    double taper = 0.25;       ///< decay length beyond the plateau

    static double smooth_step(double t) {  // 0 for t <= 0, 1 for t >= 1, C-infinity
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
        return a / (a + b);
    }
    static double smooth_step_derivative(double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
        const double da = a / (t * t), db = -b / ((1.0 - t) * (1.0 - t));
        return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
    }
    double bx(double x) const {
        const double u = (x - center) / radius;
        return std::abs(u) < 1.0 ? std::exp(-1.0 / (1.0 - u * u)) : 0.0;
    }
    double dbx(double x) const {
        const double u = (x - center) / radius;
        if (std::abs(u) >= 1.0) return 0.0;
        const double q = 1.0 - u * u;
        return std::exp(-1.0 / q) * (-2.0 * u / (q * q)) / radius;
    }
    double by(double y) const { return 1.0 - smooth_step((std::abs(y) - plateau) / taper); }
    double dby(double y) const {
        const double s = y < 0.0 ? -1.0 : 1.0;
        return -smooth_step_derivative((std::abs(y) - plateau) / taper) * s / taper;
    }
    double operator()(double x, double y) const { return bx(x) * by(y); }
};

/// Eight bumps centered along (-xi, 1), each supported away from the core
/// point (-xi, 0) and from the boundary, equal to a function of x1 alone
/// across the layer band and two grid rows beyond it.
inline std::vector<BumpFunction> curl_test_functions(const Grid2& g, const LayerGeometry& geom) {
    const double len = 1.0 + geom.xi;
    const double r = len / 8.0;
    std::vector<BumpFunction> out;
    for (int m = 0; m < 8; ++m) {
        BumpFunction f;
        f.radius = r;
        f.center = -geom.xi + r + (len - 2 * r) * (m + 0.5) / 8.0;
        f.plateau = 0.5 * geom.height() + 2.0 * g.hy();
        f.taper = 0.25;
        out.push_back(f);
    }
    return out;
}

struct CurlMeasureResult {
    std::vector<Vec2> lhs;  ///< <curl grad k_ac, phi>
    std::vector<Vec2> rhs;  ///< -int d[[k]]/dx1 phi(x1, 0) dx1
    double max_discrepancy = 0.0;
};

/// Compares <curl grad k_ac, phi> = -int (G_.2 d1 phi - G_.1 d2 phi), with G
/// the cell gradient of k on the cells outside the layer band, against
/// -int d[[k]]/dx1 phi(x1, 0) dx1 from the jump profile (trapezoid rule).
inline CurlMeasureResult curl_measure_check(const JumpProfile& p, const VectorField& k, const LayerGeometry& geom) {
    const Grid2& g = k.grid;
    const RowRange rows = layer_rows(g, geom);
    const TensorField gk = grad(k);
    CurlMeasureResult res;
    for (const auto& phi : curl_test_functions(g, geom)) {
        Vec2 lhs;
        for (int j = 0; j < g.ny; ++j) {
            if (j >= rows.first && j <= rows.last) continue;
            const double y = g.cell_y(j);
            for (int i = 0; i < g.nx; ++i) {
                const double x = g.cell_x(i);
                const double d1 = phi.dbx(x) * phi.by(y), d2 = phi.bx(x) * phi.dby(y);
                if (d1 == 0.0 && d2 == 0.0) continue;
                const Mat2 m = gk.at(i, j);
                lhs += -g.cell_area() * Vec2{m(0, 1) * d1 - m(0, 0) * d2, m(1, 1) * d1 - m(1, 0) * d2};
            }
        }
        Vec2 rhs;
        for (std::size_t s = 0; s + 1 < p.x.size(); ++s) {
            const double h = p.x[s + 1] - p.x[s];
            rhs += -0.5 * h * (phi(p.x[s], 0.0) * p.derivative[s] + phi(p.x[s + 1], 0.0) * p.derivative[s + 1]);
        }
        res.lhs.push_back(lhs);
        res.rhs.push_back(rhs);
        res.max_discrepancy = std::max(res.max_discrepancy, norm(lhs - rhs));
    }
    return res;
}

// ---------------------------------------------------------------------------
// Scaling study

/// Conjectured layer energy int [xi |d[[k]]/dx1|^2 + (1/xi) QW([[k]] (x) e2)] dx1
/// on the profile (trapezoid rule).
inline double modica_mortola_probe(const JumpProfile& p, double xi, const EnvelopeOracle& qw) {
    double s = 0.0;
    auto f = [&](std::size_t i) {
        const Vec2 d = p.derivative[i];
        return xi * dot(d, d) + qw.upper_radial(norm(p.jump[i])) / xi;
    };
    for (std::size_t i = 0; i + 1 < p.x.size(); ++i) s += 0.5 * (p.x[i + 1] - p.x[i]) * (f(i) + f(i + 1));
    return s;
}

/// Integrals of alpha over a fixed coarse box partition of L_xi
/// (boxes_x by boxes_y), each node assigned to the box containing it.
inline std::vector<Vec2> coarse_alpha(const VectorField& alpha, double xi, int boxes_x = 10, int boxes_y = 2) {
    const Grid2& g = alpha.grid;
    std::vector<Vec2> out(static_cast<std::size_t>(boxes_x) * boxes_y);
    for (int j = 0; j <= g.ny; ++j)
        for (int i = 0; i <= g.nx; ++i) {
            const double fx = (g.node_x(i) + xi) / (1.0 + xi), fy = (g.node_y(j) + 0.5 * xi) / xi;
            const int bi = std::clamp(static_cast<int>(fx * boxes_x), 0, boxes_x - 1);
            const int bj = std::clamp(static_cast<int>(fy * boxes_y), 0, boxes_y - 1);
            out[static_cast<std::size_t>(bj) * boxes_x + bi] += g.cell_area() * alpha.at(i, j);
        }
    return out;
}

struct ScalingRecord {
    double eps = 0.0;
    int nx = 0, ny = 0;
    EnergyReport report;        ///< physical energy with the bulk/layer split
    EnergyReport layer_report;  ///< rescaled layer energy
    Vec2 charge;
    double jump_endpoint = 0.0;  ///< |[k~](1)|
    double jump_start = 0.0;     ///< |[k~](-xi)|
    double compatibility = 0.0;
    double endpoint_check = 0.0;
    double trace_residual = 0.0;
    double flip = 0.0;
    double curl_measure = 0.0;
    double modica_mortola = 0.0;
    std::optional<double> alpha_cauchy;  ///< coarse difference to the previous eps
    int iterations = 0;
    bool converged = false;
    JumpProfile profile;
    VectorField k;
    TensorField b;
};

inline const char* scaling_csv_header() {
    return "eps,nx,ny,total,bulk,layer,rescaled_layer,charge_x,charge_y,charge_residual,jump_endpoint,jump_start,"
           "compatibility,endpoint_check,trace_residual,flip,curl_measure,modica_mortola,alpha_cauchy,iterations,"
           "converged";
}

inline void write_scaling_csv(std::ostream& os, const std::vector<ScalingRecord>& recs) {
    os << scaling_csv_header() << '\n' << std::setprecision(17);
    for (const auto& r : recs) {
        os << r.eps << ',' << r.nx << ',' << r.ny << ',' << r.report.total << ',' << r.report.bulk << ','
           << r.report.layer << ',' << r.layer_report.total << ',' << r.charge.x << ',' << r.charge.y << ','
           << r.report.charge_residual << ',' << r.jump_endpoint << ',' << r.jump_start << ',' << r.compatibility
           << ',' << r.endpoint_check << ',' << r.trace_residual << ',' << r.flip << ',' << r.curl_measure << ','
           << r.modica_mortola << ',';
        if (r.alpha_cauchy) os << *r.alpha_cauchy;
        os << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << '\n';
    }
}

struct ScalingConfig {
    int nx = 128;
    int ny = 128;  ///< base rows; doubled per eps until the layer has kMinLayerRows rows
    int max_ny = 4096;
    MinimizeConfig minimize;
    double energy_ratio_cap = 100.0;
    bool parallel = false;
    int sign = 1;
};

class ScalingError : public Error {
public:
    ScalingError(const std::string& what, std::vector<ScalingRecord> partial)
        : Error(what), records(std::move(partial)) {}
    std::vector<ScalingRecord> records;
};

/// Rows needed so that the layer for this eps is resolved, starting from base.
inline int resolved_rows(const ScalingConfig& cfg, const ModelParams& params) {
    int ny = cfg.ny;
    const LayerGeometry geom = params.layer();
    while (layer_rows(Grid2::square(cfg.nx, ny), geom).count() < kMinLayerRows) {
        ny *= 2;
        if (ny > cfg.max_ny) throw Error("scaling_study: layer cannot be resolved within max_ny rows");
    }
    return ny;
}

/// Ansatz, minimization and all layer diagnostics for a single eps.
inline ScalingRecord run_scaling_point(const ModelParams& params, const ScalingConfig& cfg) {
    ScalingRecord rec;
    rec.eps = params.eps;
    rec.nx = cfg.nx;
    rec.ny = resolved_rows(cfg, params);
    const Grid2 g = Grid2::square(rec.nx, rec.ny);
    const LayerGeometry geom = params.layer();
    const Ansatz a = disclination_ansatz(g, params, cfg.sign);
    const MinimizeTrace tr = minimize(a.k, a.b, params, cfg.minimize);
    rec.iterations = tr.iterations;
    rec.converged = tr.converged;
    rec.k = tr.k;
    rec.b = tr.b;
    rec.report = energy(tr.k, tr.b, params, layer_mask(g, geom));
    rec.charge = rec.report.charge;

    const RescaledLayer rl = rescale_to_layer(tr.k, tr.b, params);
    rec.layer_report = rescaled_layer_energy(rl.k, rl.b, params);
    rec.profile = jump_profile(rl.k);
    rec.jump_endpoint = norm(rec.profile.jump.back());
    rec.jump_start = norm(rec.profile.jump.front());
    const VectorField alpha = layer_curl(rl.b, params.eps);
    const CompatibilityResult cr = compatibility_residual(rec.profile, alpha);
    rec.compatibility = cr.residual;
    rec.endpoint_check = cr.endpoint_check;
    rec.trace_residual = trace_coincidence_residual(tr.k, rec.profile, geom);
    rec.flip = flip_indicator(tr.k, geom, 0.5);
    rec.curl_measure = curl_measure_check(rec.profile, tr.k, geom).max_discrepancy;
    rec.modica_mortola = modica_mortola_probe(rec.profile, params.xi, EnvelopeOracle(params.potential));
    return rec;
}

/// Runs the eps sweep (decreasing eps) and checks uniform energy bounds:
/// max/min total energy must stay below cfg.energy_ratio_cap. Any failure
/// raises ScalingError carrying the records completed so far.
inline std::vector<ScalingRecord> scaling_study(const ModelParams& base, const std::vector<double>& eps_list,
                                                const ScalingConfig& cfg) {
    if (eps_list.empty()) throw Error("scaling_study: empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw Error("scaling_study: eps list must be decreasing");
    std::vector<ModelParams> ps;
    for (double e : eps_list) {
        ModelParams p = base;
        p.eps = e;
        p.validate();
        p.layer();
        ps.push_back(p);
    }

    std::vector<ScalingRecord> recs;
    if (cfg.parallel) {
        std::vector<std::future<ScalingRecord>> jobs;
        for (const auto& p : ps) jobs.push_back(std::async(std::launch::async, run_scaling_point, p, cfg));
        std::string first_error;
        for (auto& j : jobs) {
            try {
                recs.push_back(j.get());
            } catch (const std::exception& e) {
                if (first_error.empty()) first_error = e.what();
            }
        }
        if (!first_error.empty()) throw ScalingError("scaling_study: " + first_error, recs);
    } else {
        for (const auto& p : ps) {
            try {
                recs.push_back(run_scaling_point(p, cfg));
            } catch (const std::exception& e) {
                throw ScalingError("scaling_study: eps = " + std::to_string(p.eps) + ": " + e.what(), recs);
            }
        }
    }

    for (std::size_t i = 1; i < recs.size(); ++i) {
        const VectorField a0 = layer_curl(rescale_to_layer(recs[i - 1].k, recs[i - 1].b, ps[i - 1]).b, ps[i - 1].eps);
        const VectorField a1 = layer_curl(rescale_to_layer(recs[i].k, recs[i].b, ps[i]).b, ps[i].eps);
        const auto c0 = coarse_alpha(a0, base.xi), c1 = coarse_alpha(a1, base.xi);
        double d = 0.0;
        for (std::size_t m = 0; m < c0.size(); ++m) d += dot(c1[m] - c0[m], c1[m] - c0[m]);
        recs[i].alpha_cauchy = std::sqrt(d);
    }

    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : recs) {
        lo = std::min(lo, r.report.total);
        hi = std::max(hi, r.report.total);
    }
    if (lo > 0.0 && hi / lo > cfg.energy_ratio_cap)
        throw ScalingError("scaling_study: energy ratio " + std::to_string(hi / lo) + " exceeds the cap", recs);
    return recs;
}

}  // namespace discl
