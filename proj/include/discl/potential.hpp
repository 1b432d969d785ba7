/// @file potential.hpp
/// @brief Double-well profiles W on [0, inf) with wells at 0 and 2, and the
/// model parameters that carry them.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "field.hpp"

namespace discl {

struct WellPotential {
    std::string name;
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    double well_outer = 2.0;

    double operator()(double x) const { return value(x); }
};

/// W(x) = x^2 (x-2)^2 / (1 + x^2).
inline WellPotential make_default_potential() {
    WellPotential w;
    w.name = "rational";
    w.value = [](double x) {
        const double q = x * (x - 2.0);
        return q * q / (1.0 + x * x);
    };
    w.derivative = [](double x) {
        const double q = x * (x - 2.0);
        const double d = 1.0 + x * x;
        const double dq2 = 4.0 * x * (x - 2.0) * (x - 1.0);  // d/dx of q^2
        return (dq2 * d - q * q * 2.0 * x) / (d * d);
    };
    return w;
}

/// W(x) = min(x^2, (x-2)^2), the piecewise-quadratic alternative.
inline WellPotential make_min_quadratic_potential() {
    WellPotential w;
    w.name = "min_quadratic";
    w.value = [](double x) { return std::min(x * x, (x - 2.0) * (x - 2.0)); };
    w.derivative = [](double x) { return x < 1.0 ? 2.0 * x : 2.0 * (x - 2.0); };
    return w;
}

inline WellPotential potential_by_name(const std::string& name) {
    if (name == "rational" || name == "default") return make_default_potential();
    if (name == "min_quadratic") return make_min_quadratic_potential();
    throw Error("unknown potential '" + name + "'");
}

/// Upper bound of |W''| on [0, r_max], estimated from differences of W'.
inline double curvature_bound(const WellPotential& w, double r_max = 6.0, int samples = 600) {
    double best = 0.0;
    const double h = r_max / samples;
    for (int s = 0; s < samples; ++s) {
        const double x0 = s * h, x1 = (s + 1) * h;
        best = std::max(best, std::abs(w.derivative(x1) - w.derivative(x0)) / h);
    }
    return best;
}

struct Tolerances {
    double cg_relative = 1e-10;  ///< Neumann-Poisson CG stopping tolerance
    double identity = 1e-8;      ///< structural identities (Helmholtz form)
};

struct ModelParams {
    double eps = 1.0;
    double xi = 1.0;
    WellPotential potential = make_default_potential();
    double charge_penalty_weight = 0.0;
    bool div_penalty = false;  ///< adds eps^3 |div B|^2
    Tolerances tolerances;

    void validate() const {
        if (!(eps > 0.0) || !(xi > 0.0)) throw Error("ModelParams: eps and xi must be positive");
        if (!(charge_penalty_weight >= 0.0)) throw Error("ModelParams: charge penalty weight must be >= 0");
        if (!potential.value || !potential.derivative) throw Error("ModelParams: potential not set");
    }
    LayerGeometry layer() const { return LayerGeometry::make(eps, xi); }
};

}  // namespace discl
