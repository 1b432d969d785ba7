/// @file energy.hpp
/// @brief Discrete regularized disclination energy, its relaxation, the
/// Helmholtz-form functional, exact gradients, and the rescaled layer energy.
///
/// Densities and their quadrature (cell area A):
///   unit     (|kbar_c| - 1)^2 / (eps xi^2)            per cell, kbar_c = mean of 4 nodes
///   elastic  |grad k - B|^2                            per cell
///   curl     eps xi^2 |curl B|^2                       per interior node
///   well     W(eps xi |B|) / (eps xi^2)                per cell
///   div      eps^3 |div B|^2 (optional)                per interior node
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

#include "diffops.hpp"
#include "field.hpp"
#include "helmholtz.hpp"
#include "potential.hpp"

namespace discl {

struct EnergyReport {
    double unit_penalty = 0.0;
    double elastic = 0.0;
    double curl_term = 0.0;
    double well_term = 0.0;
    double div_term = 0.0;
    double total = 0.0;
    double bulk = 0.0;
    double layer = 0.0;
    bool has_split = false;
    Vec2 charge;
    double charge_residual = 0.0;  ///< | |charge| - 2 |
    std::optional<double> relaxed_well_term;
};

inline const char* energy_csv_header() {
    return "unit_penalty,elastic,curl_term,well_term,div_term,total,bulk,layer,charge_x,charge_y,"
           "charge_residual,relaxed_well_term";
}

inline void write_energy_csv(std::ostream& os, const EnergyReport& r) {
    os << std::setprecision(17) << r.unit_penalty << ',' << r.elastic << ',' << r.curl_term << ','
       << r.well_term << ',' << r.div_term << ',' << r.total << ',';
    if (r.has_split) os << r.bulk << ',' << r.layer << ',';
    else os << ",,";
    os << r.charge.x << ',' << r.charge.y << ',' << r.charge_residual << ',';
    if (r.relaxed_well_term) os << *r.relaxed_well_term;
}

/// A radial well density f(|M|) with derivative, evaluated at the scaled
/// argument eps xi B.
struct RadialWell {
    std::function<double(double)> value;
    std::function<double(double)> derivative;

    static RadialWell from(const WellPotential& w) { return {w.value, w.derivative}; }
};

using MatrixWell = std::function<double(const Mat2&)>;

/// Smoothing floor used inside gradient formulas only.
inline constexpr double kNormFloor = 1e-12;
inline double smoothed_norm(double sq) { return std::sqrt(sq + kNormFloor * kNormFloor); }

namespace detail {

inline bool node_touches_mask(const CellMask& m, int i, int j) {
    return m(i - 1, j - 1) || m(i, j - 1) || m(i - 1, j) || m(i, j);
}

inline EnergyReport assemble_energy(const VectorField& k, const TensorField& b, const ModelParams& params,
                                    const MatrixWell& well, const CellMask* mask) {
    params.validate();
    require_same_grid(k.grid, b.grid, "energy");
    if (mask) require_same_grid(mask->grid, b.grid, "energy");
    const Grid2& g = k.grid;
    const double a = g.cell_area();
    const double ex2 = params.eps * params.xi * params.xi;
    const double exi = params.eps * params.xi;

    EnergyReport rep;
    rep.has_split = mask != nullptr;
    const TensorField gk = grad(k);
    auto check = [](double v, const char* term, double x, double y) {
        if (!std::isfinite(v)) throw NonFiniteError(term, x, y);
        return v;
    };
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double x = g.cell_x(i), y = g.cell_y(j);
            const Vec2 kb = k.cell_average(i, j);
            const Mat2 bij = b.at(i, j);
            const Mat2 e = gk.at(i, j) - bij;
            const double u = check((norm(kb) - 1.0) * (norm(kb) - 1.0) / ex2, "unit_penalty", x, y);
            const double el = check(frob_dot(e, e), "elastic", x, y);
            const double w = check(well(exi * bij) / ex2, "well_term", x, y);
            rep.unit_penalty += a * u;
            rep.elastic += a * el;
            rep.well_term += a * w;
            if (mask && !(*mask)(i, j)) rep.bulk += a * (u + el + w);
        }
    const VectorField c = curl_rowwise(b);
    std::optional<VectorField> d;
    if (params.div_penalty) d = div_rowwise(b);
    const double eps3 = params.eps * params.eps * params.eps;
    for (int j = 1; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
            const Vec2 cv = c.at(i, j);
            const double ct = check(ex2 * dot(cv, cv), "curl_term", g.node_x(i), g.node_y(j));
            double dt = 0.0;
            if (d) {
                const Vec2 dv = d->at(i, j);
                dt = check(eps3 * dot(dv, dv), "div_term", g.node_x(i), g.node_y(j));
            }
            rep.curl_term += a * ct;
            rep.div_term += a * dt;
            if (mask && !node_touches_mask(*mask, i, j)) rep.bulk += a * (ct + dt);
        }
    rep.total = rep.unit_penalty + rep.elastic + rep.curl_term + rep.well_term + rep.div_term;
    if (mask) rep.layer = rep.total - rep.bulk;
    rep.charge = integrate_interior(c);
    rep.charge_residual = std::abs(norm(rep.charge) - 2.0);
    return rep;
}

}  // namespace detail

inline MatrixWell original_well(const WellPotential& w) {
    return [w](const Mat2& m) { return w.value(frob(m)); };
}

/// E_{eps,xi}[k, B].
inline EnergyReport energy(const VectorField& k, const TensorField& b, const ModelParams& params) {
    return detail::assemble_energy(k, b, params, original_well(params.potential), nullptr);
}

/// E_{eps,xi}[k, B] with the bulk/layer split over the given layer mask.
inline EnergyReport energy(const VectorField& k, const TensorField& b, const ModelParams& params,
                           const CellMask& layer) {
    return detail::assemble_energy(k, b, params, original_well(params.potential), &layer);
}

/// Relaxed energy: the well density W(|.|) is replaced by the envelope
/// oracle qw, evaluated at eps xi B.
inline EnergyReport relaxed_energy(const VectorField& k, const TensorField& b, const ModelParams& params,
                                   const MatrixWell& qw, const CellMask* layer = nullptr) {
    EnergyReport rep = detail::assemble_energy(k, b, params, qw, layer);
    rep.relaxed_well_term = rep.well_term;
    return rep;
}

// ---------------------------------------------------------------------------

class IdentityError : public Error {
public:
    IdentityError(double i_value, double e_value)
        : Error(describe(i_value, e_value)), helmholtz_value(i_value), energy_value(e_value) {}
    double helmholtz_value, energy_value;

private:
    static std::string describe(double i, double e) {
        std::ostringstream os;
        os << std::setprecision(17) << "Helmholtz-form identity violated: I = " << i << ", E = " << e;
        return os.str();
    }
};

struct HelmholtzForm {
    double value = 0.0;   ///< I[k - z, z, p]
    double energy = 0.0;  ///< E_{1,1}[k, B]
    VectorField k_tilde;  ///< k - z
    VectorField z;
    TensorField p;
    TensorField grad_z;
};

/// Evaluates I[k~, z, p] = int (|k~ + z| - 1)^2 + |grad k~|^2 + |p|^2 + |curl p|^2 + W(|grad z + p|)
/// for the Helmholtz split of B, and checks it against E_{1,1}[k, B].
inline HelmholtzForm helmholtz_form(const VectorField& k, const TensorField& b, const ModelParams& params) {
    params.validate();
    if (params.eps != 1.0 || params.xi != 1.0)
        throw Error("helmholtz_form: requires eps = xi = 1");
    if (params.div_penalty) throw Error("helmholtz_form: the div penalty has no Helmholtz-form counterpart");
    require_same_grid(k.grid, b.grid, "helmholtz_form");
    const Grid2& g = k.grid;
    const HelmholtzResult h = helmholtz(b, params.tolerances.cg_relative);

    HelmholtzForm out;
    out.z = h.z;
    out.p = h.p;
    out.grad_z = h.grad_z;
    out.k_tilde = k;
    axpy(-1.0, h.z.data, out.k_tilde.data);

    const TensorField gkt = grad(out.k_tilde);
    const double a = g.cell_area();
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 sum = out.k_tilde.cell_average(i, j) + h.z.cell_average(i, j);
            const double u = norm(sum) - 1.0;
            const Mat2 gt = gkt.at(i, j), pij = h.p.at(i, j);
            s += a * (u * u + frob_dot(gt, gt) + frob_dot(pij, pij) +
                      params.potential.value(frob(h.grad_z.at(i, j) + pij)));
        }
    const VectorField cp = curl_rowwise(h.p);
    s += inner_interior(cp, cp);
    out.value = s;
    out.energy = energy(k, b, params).total;
    if (std::abs(out.value - out.energy) > params.tolerances.identity * (1.0 + out.energy))
        throw IdentityError(out.value, out.energy);
    return out;
}

// ---------------------------------------------------------------------------

struct EnergyGradient {
    VectorField dk;
    TensorField db;
};

/// Exact gradient of the discrete energy (the quadrature sum) with respect to
/// every node value of k and every cell value of B. `well` overrides the
/// radial well density (for the relaxed energy); by default W is used.
inline EnergyGradient energy_gradient(const VectorField& k, const TensorField& b, const ModelParams& params,
                                      const RadialWell* well = nullptr) {
    params.validate();
    require_same_grid(k.grid, b.grid, "energy_gradient");
    const Grid2& g = k.grid;
    const RadialWell w = well ? *well : RadialWell::from(params.potential);
    const double a = g.cell_area();
    const double ex2 = params.eps * params.xi * params.xi;
    const double exi = params.eps * params.xi;

    EnergyGradient out{VectorField(g), TensorField(g)};
    const TensorField gk = grad(k);
    TensorField de(g);  // d/d(grad k) of the elastic term
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 kb = k.cell_average(i, j);
            const double nk = smoothed_norm(dot(kb, kb));
            const Vec2 du = (2.0 * a / ex2 * (nk - 1.0) / nk) * kb;
            const Vec2 q = 0.25 * du;
            out.dk.add(i, j, q);
            out.dk.add(i + 1, j, q);
            out.dk.add(i, j + 1, q);
            out.dk.add(i + 1, j + 1, q);

            const Mat2 bij = b.at(i, j);
            const Mat2 e = (2.0 * a) * (gk.at(i, j) - bij);
            de.set(i, j, e);
            const double nb = smoothed_norm(frob_dot(bij, bij));
            const double wd = a / params.xi * w.derivative(exi * frob(bij)) / nb;
            out.db.set(i, j, wd * bij - e);
        }
    axpy(1.0, grad_transpose(de).data, out.dk.data);

    VectorField c = curl_rowwise(b);
    for (double& v : c.data) v *= 2.0 * a * ex2;
    axpy(1.0, scaled_curl_transpose(c, 1.0).data, out.db.data);
    if (params.div_penalty) {
        VectorField d = div_rowwise(b);
        const double eps3 = params.eps * params.eps * params.eps;
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i)
                d.set(i, j, g.interior_node(i, j) ? (2.0 * a * eps3) * d.at(i, j) : Vec2{});
        axpy(1.0, div_interior_transpose(d).data, out.db.data);
    }
    return out;
}

// ---------------------------------------------------------------------------

/// Energy of rescaled layer fields on L_xi = (-xi, 1) x (-xi/2, xi/2):
///   (|k~| - 1)^2 / xi^2 + eps |grad_eps k~ - B~/eps|^2 + xi^2 |curl_eps B~|^2 + W(xi |B~|) / xi^2.
inline EnergyReport rescaled_layer_energy(const VectorField& kt, const TensorField& bt, const ModelParams& params) {
    params.validate();
    require_same_grid(kt.grid, bt.grid, "rescaled_layer_energy");
    const Grid2& g = kt.grid;
    const double xi = params.xi, eps = params.eps;
    const double tol = 1e-9;
    if (std::abs(g.x_min + xi) > tol || std::abs(g.x_max - 1.0) > tol || std::abs(g.y_min + 0.5 * xi) > tol ||
        std::abs(g.y_max - 0.5 * xi) > tol)
        throw Error("rescaled_layer_energy: grid does not cover L_xi = (-xi,1) x (-xi/2, xi/2)");
    const double a = g.cell_area();
    const TensorField ge = scaled_grad(kt, eps);
    EnergyReport rep;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const Vec2 kb = kt.cell_average(i, j);
            const Mat2 bij = bt.at(i, j);
            const Mat2 e = ge.at(i, j) - (1.0 / eps) * bij;
            const double u = (norm(kb) - 1.0) * (norm(kb) - 1.0) / (xi * xi);
            const double el = eps * frob_dot(e, e);
            const double w = params.potential.value(xi * frob(bij)) / (xi * xi);
            if (!std::isfinite(u + el + w)) throw NonFiniteError("rescaled_layer_energy", g.cell_x(i), g.cell_y(j));
            rep.unit_penalty += a * u;
            rep.elastic += a * el;
            rep.well_term += a * w;
        }
    // B~ vanishes outside L_xi, so the curl at the upper, lower and left
    // edges belongs to the layer
    const VectorField c = layer_curl(bt, eps);
    double cs = 0.0;
    for (double v : c.data) cs += v * v;
    rep.curl_term = xi * xi * a * cs;
    rep.total = rep.unit_penalty + rep.elastic + rep.curl_term + rep.well_term;
    rep.layer = rep.total;
    rep.has_split = true;
    rep.charge = integrate_all(c);
    rep.charge_residual = std::abs(norm(rep.charge) - 2.0);
    return rep;
}

}  // namespace discl
