/// @file minimize.hpp
/// @brief Disclination ansatz and projected descent on the penalized energy
///   F(k, B) = E(k, B) + mu (|charge(B)| - 2)^2 [+ rho |kbar(x*) - k*|^2]
/// with B kept inside the layer by exact projection.
#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "diffops.hpp"
#include "energy.hpp"
#include "envelope.hpp"
#include "field.hpp"
#include "potential.hpp"

namespace discl {

struct Ansatz {
    VectorField k;
    TensorField b;
};

/// k0 = (cos(s theta/2), sin(s theta/2)) with theta in [0, 2pi) about the
/// (offset) core, so k0 flips by pi across the positive x1 axis.
/// B0 = (2/(eps xi)) tau(x1) n(x1) (x) e2 in the layer, where n is k0 at the
/// upper layer edge and tau ramps from 0 at x1 = -xi to 1 at x1 = 0.
inline Ansatz disclination_ansatz(const Grid2& g, const ModelParams& params, int sign = 1) {
    params.validate();
    if (sign != 1 && sign != -1) throw Error("disclination_ansatz: sign must be +1 or -1");
    const LayerGeometry geom = params.layer();
    require_resolved(g, geom);
    const Vec2 c = core_offset(g);
    const double two_pi = 2.0 * std::acos(-1.0);
    auto director = [&](double x, double y) {
        double th = std::atan2(y - c.y, x - c.x);
        if (th < 0.0) th += two_pi;
        return Vec2{std::cos(sign * th / 2), std::sin(sign * th / 2)};
    };
    Ansatz a{sample_field(g, VectorFn(director)), TensorField(g)};
    const CellMask mask = layer_mask(g, geom);
    const double amp = 2.0 / geom.height();
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!mask(i, j)) continue;
            const double x = g.cell_x(i);
            const double tau = std::clamp((x + params.xi) / params.xi, 0.0, 1.0);
            const Vec2 n = director(x, geom.y_hi());
            a.b.set(i, j, (amp * tau) * Mat2::outer(n, {0.0, 1.0}));
        }
    return a;
}

/// Zeroes B at cell centers outside L_{eps,xi}.
inline TensorField project_layer(const TensorField& b, const LayerGeometry& geom) {
    TensorField out = b;
    const Grid2& g = b.grid;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (!geom.contains(g.cell_x(i), g.cell_y(j))) out.set(i, j, Mat2{});
    return out;
}

// ---------------------------------------------------------------------------

enum class StepRule { fixed, armijo };

struct MinimizeConfig {
    int max_iters = 2000;  ///< per penalty stage
    StepRule step_rule = StepRule::armijo;
    double fixed_step = 1.0;  ///< step length for StepRule::fixed (preconditioned units)
    double grad_tol = 1e-4;   ///< on the L2-scaled gradient norm
    std::vector<double> mu_schedule{10.0, 100.0, 1000.0};
    bool anchor = false;
    Vec2 anchor_point{-0.9, -0.9};
    Vec2 anchor_value{1.0, 0.0};
    double anchor_weight = 10.0;
    bool use_relaxed = false;
    bool alternating = false;
    bool precondition = true;
    double noise = 0.0;  ///< std dev of the initial Gaussian perturbation
    std::uint64_t seed = 0;
    double armijo_c = 1e-4;
    int max_halvings = 50;

    void validate() const {
        if (max_iters < 1) throw Error("MinimizeConfig: max_iters must be >= 1");
        if (mu_schedule.empty()) throw Error("MinimizeConfig: empty penalty schedule");
        for (std::size_t s = 0; s < mu_schedule.size(); ++s) {
            if (!(mu_schedule[s] >= 0.0)) throw Error("MinimizeConfig: penalty weights must be >= 0");
            if (s > 0 && mu_schedule[s] < mu_schedule[s - 1])
                throw Error("MinimizeConfig: penalty schedule must be nondecreasing");
        }
        if (!(grad_tol >= 0.0)) throw Error("MinimizeConfig: grad_tol must be >= 0");
        if (!(fixed_step > 0.0)) throw Error("MinimizeConfig: fixed_step must be positive");
        if (!(noise >= 0.0)) throw Error("MinimizeConfig: noise must be >= 0");
        if (!(anchor_weight >= 0.0)) throw Error("MinimizeConfig: anchor_weight must be >= 0");
    }
};

struct TraceRow {
    int iteration = 0;
    int stage = 0;
    double mu = 0.0;
    double objective = 0.0;
    double charge_penalty = 0.0;
    double anchor_penalty = 0.0;
    double grad_norm = 0.0;
    double step = 0.0;
    EnergyReport report;
};

struct MinimizeTrace {
    std::vector<TraceRow> rows;
    VectorField k;
    TensorField b;
    int iterations = 0;
    bool converged = false;  ///< final stage reached grad_tol
    std::vector<int> stage_iterations;
};

inline const char* trace_csv_header() {
    return "iteration,stage,mu,objective,total,unit_penalty,elastic,curl_term,well_term,div_term,"
           "charge_penalty,anchor_penalty,charge_x,charge_y,charge_residual,grad_norm,step";
}

inline void write_trace_csv(std::ostream& os, const MinimizeTrace& t) {
    os << trace_csv_header() << '\n' << std::setprecision(17);
    for (const auto& r : t.rows) {
        const auto& e = r.report;
        os << r.iteration << ',' << r.stage << ',' << r.mu << ',' << r.objective << ',' << e.total << ','
           << e.unit_penalty << ',' << e.elastic << ',' << e.curl_term << ',' << e.well_term << ',' << e.div_term
           << ',' << r.charge_penalty << ',' << r.anchor_penalty << ',' << e.charge.x << ',' << e.charge.y << ','
           << e.charge_residual << ',' << r.grad_norm << ',' << r.step << '\n';
    }
}

class LineSearchError : public Error {
public:
    LineSearchError(const std::string& what, MinimizeTrace t) : Error(what), trace(std::move(t)) {}
    MinimizeTrace trace;
};

namespace detail {

// Radial relaxed well: the envelope upper bound tabulated on [0, r_max],
// W itself beyond.
struct RelaxedWell {
    PiecewiseLinear table;
    WellPotential w;
    double value(double r) const { return r < table.x.back() ? table(r) : w.value(r); }
    double derivative(double r) const { return r < table.x.back() ? table.slope(r) : w.derivative(r); }
};

class PenalizedObjective {
public:
    PenalizedObjective(const ModelParams& params, const MinimizeConfig& cfg, const Grid2& g)
        : params_(params), cfg_(cfg), grid_(g) {
        // d charge / dB: area * curl^T applied to the all-ones interior field
        VectorField ones(g);
        for (int j = 1; j < g.ny; ++j)
            for (int i = 1; i < g.nx; ++i) ones.set(i, j, {1.0, 1.0});
        charge_coeff_ = scaled_curl_transpose(ones, 1.0);
        for (double& v : charge_coeff_.data) v *= g.cell_area();
        if (cfg.anchor) {
            const double fi = (cfg.anchor_point.x - g.x_min) / g.hx();
            const double fj = (cfg.anchor_point.y - g.y_min) / g.hy();
            anchor_i_ = std::clamp(static_cast<int>(std::floor(fi)), 0, g.nx - 1);
            anchor_j_ = std::clamp(static_cast<int>(std::floor(fj)), 0, g.ny - 1);
        }
        if (cfg.use_relaxed) {
            EnvelopeOracle oracle(params.potential);
            relaxed_ = std::make_shared<RelaxedWell>(RelaxedWell{relaxed_well_table(oracle), params.potential});
        }
    }

    void set_mu(double mu) { mu_ = mu; }
    double mu() const { return mu_; }

    struct Value {
        EnergyReport report;
        double charge_penalty = 0.0;
        double anchor_penalty = 0.0;
        double total() const { return report.total + charge_penalty + anchor_penalty; }
    };

    Value value(const VectorField& k, const TensorField& b) const {
        Value v;
        if (relaxed_) {
            auto rw = relaxed_;
            v.report = relaxed_energy(k, b, params_, [rw](const Mat2& m) { return rw->value(frob(m)); });
        } else {
            v.report = energy(k, b, params_);
        }
        const double q = norm(v.report.charge);
        v.charge_penalty = mu_ * (q - 2.0) * (q - 2.0);
        if (cfg_.anchor) {
            const Vec2 d = k.cell_average(anchor_i_, anchor_j_) - cfg_.anchor_value;
            v.anchor_penalty = cfg_.anchor_weight * dot(d, d);
        }
        return v;
    }

    EnergyGradient gradient(const VectorField& k, const TensorField& b) const {
        EnergyGradient gr;
        if (relaxed_) {
            auto rw = relaxed_;
            const RadialWell well{[rw](double r) { return rw->value(r); }, [rw](double r) { return rw->derivative(r); }};
            gr = energy_gradient(k, b, params_, &well);
        } else {
            gr = energy_gradient(k, b, params_);
        }
        const Vec2 q = charge(b);
        const double nq = smoothed_norm(dot(q, q));
        const double f = 2.0 * mu_ * (nq - 2.0) / nq;
        for (std::size_t c = 0; c < grid_.cell_count(); ++c)
            for (int r = 0; r < 2; ++r)
                for (int col = 0; col < 2; ++col) {
                    const std::size_t m = 4 * c + 2 * r + col;
                    gr.db.data[m] += f * q[r] * charge_coeff_.data[m];
                }
        if (cfg_.anchor) {
            const Vec2 d = k.cell_average(anchor_i_, anchor_j_) - cfg_.anchor_value;
            const Vec2 gq = (0.5 * cfg_.anchor_weight) * d;  // 2 rho d / 4 per corner
            gr.dk.add(anchor_i_, anchor_j_, gq);
            gr.dk.add(anchor_i_ + 1, anchor_j_, gq);
            gr.dk.add(anchor_i_, anchor_j_ + 1, gq);
            gr.dk.add(anchor_i_ + 1, anchor_j_ + 1, gq);
        }
        return gr;
    }

    const TensorField& charge_coefficients() const { return charge_coeff_; }

    // Diagonal Hessian estimates used as a Jacobi preconditioner.
    void diagonal(VectorField& dk, TensorField& db) const {
        const Grid2& g = grid_;
        const double a = g.cell_area(), hx = g.hx(), hy = g.hy();
        const double eps = params_.eps, xi = params_.xi, ex2 = eps * xi * xi;
        const double w2 = curvature_bound(params_.potential, 6.0, 600);
        dk = VectorField(g);
        db = TensorField(g);
        for (int j = 0; j <= g.ny; ++j)
            for (int i = 0; i <= g.nx; ++i) {
                int cells = 0;
                for (int dj = -1; dj <= 0; ++dj)
                    for (int di = -1; di <= 0; ++di)
                        if (i + di >= 0 && i + di < g.nx && j + dj >= 0 && j + dj < g.ny) ++cells;
                const double d = cells * (0.5 * a * (1.0 / (hx * hx) + 1.0 / (hy * hy)) + a / (8.0 * ex2));
                dk.set(i, j, {d, d});
            }
        if (cfg_.anchor) {
            const double d = 0.125 * cfg_.anchor_weight;
            dk.add(anchor_i_, anchor_j_, {d, d});
            dk.add(anchor_i_ + 1, anchor_j_, {d, d});
            dk.add(anchor_i_, anchor_j_ + 1, {d, d});
            dk.add(anchor_i_ + 1, anchor_j_ + 1, {d, d});
        }
        const double eps3 = eps * eps * eps;
        const double base1 = 2 * a + 2 * ex2 * a / (hy * hy) + a * eps * w2 + (params_.div_penalty ? 2 * eps3 * a / (hx * hx) : 0.0);
        const double base2 = 2 * a + 2 * ex2 * a / (hx * hx) + a * eps * w2 + (params_.div_penalty ? 2 * eps3 * a / (hy * hy) : 0.0);
        for (std::size_t c = 0; c < g.cell_count(); ++c)
            for (int r = 0; r < 2; ++r) {
                const double c1 = charge_coeff_.data[4 * c + 2 * r], c2 = charge_coeff_.data[4 * c + 2 * r + 1];
                db.data[4 * c + 2 * r] = base1 + 2 * mu_ * c1 * c1;
                db.data[4 * c + 2 * r + 1] = base2 + 2 * mu_ * c2 * c2;
            }
    }

private:
    ModelParams params_;
    MinimizeConfig cfg_;
    Grid2 grid_;
    TensorField charge_coeff_;
    int anchor_i_ = 0, anchor_j_ = 0;
    double mu_ = 0.0;
    std::shared_ptr<RelaxedWell> relaxed_;
};

}  // namespace detail

/// Projected, diagonally preconditioned gradient descent with
/// Barzilai-Borwein trial steps and Armijo backtracking, run once per entry of
/// the penalty schedule. B is projected onto the layer before the first step
/// and its search direction is masked to the layer, so every iterate is
/// layer-supported.
inline MinimizeTrace minimize(const VectorField& k0, const TensorField& b0, const ModelParams& params,
                              const MinimizeConfig& cfg) {
    params.validate();
    cfg.validate();
    require_same_grid(k0.grid, b0.grid, "minimize");
    const Grid2& g = k0.grid;
    const LayerGeometry geom = params.layer();
    const CellMask mask = layer_mask(g, geom);

    MinimizeTrace trace;
    trace.k = k0;
    trace.b = project_layer(b0, geom);
    if (cfg.noise > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> n(0.0, cfg.noise);
        for (double& v : trace.k.data) v += n(rng);
        for (std::size_t c = 0; c < g.cell_count(); ++c)
            if (mask.inside[c])
                for (int q = 0; q < 4; ++q) trace.b.data[4 * c + q] += n(rng);
    }

    detail::PenalizedObjective obj(params, cfg, g);
    const double area = g.cell_area();
    const std::size_t nk = trace.k.data.size(), nb = trace.b.data.size();
    std::vector<double> bmask(nb, 0.0);
    for (std::size_t c = 0; c < g.cell_count(); ++c)
        if (mask.inside[c])
            for (int q = 0; q < 4; ++q) bmask[4 * c + q] = 1.0;

    auto fail = [&](const std::string& what) { throw LineSearchError(what, trace); };

    int global_it = 0;
    for (std::size_t stage = 0; stage < cfg.mu_schedule.size(); ++stage) {
        obj.set_mu(cfg.mu_schedule[stage]);
        VectorField pk(g);
        TensorField pb(g);
        if (cfg.precondition) obj.diagonal(pk, pb);
        else {
            std::fill(pk.data.begin(), pk.data.end(), area);
            std::fill(pb.data.begin(), pb.data.end(), area);
        }

        auto val = obj.value(trace.k, trace.b);
        auto gr = obj.gradient(trace.k, trace.b);
        for (std::size_t m = 0; m < nb; ++m) gr.db.data[m] *= bmask[m];
        double step = 1.0;
        std::vector<double> prev_x, prev_g;
        int it = 0;
        bool done = false;
        while (true) {
            // update only k on even, only B on odd iterations when alternating
            const bool move_k = !cfg.alternating || it % 2 == 0;
            const bool move_b = !cfg.alternating || it % 2 == 1;
            double gn2 = 0.0;
            for (double v : gr.dk.data) gn2 += v * v;
            for (double v : gr.db.data) gn2 += v * v;
            const double grad_norm = std::sqrt(gn2 / area);
            TraceRow row;
            row.iteration = global_it;
            row.stage = static_cast<int>(stage);
            row.mu = obj.mu();
            row.objective = val.total();
            row.charge_penalty = val.charge_penalty;
            row.anchor_penalty = val.anchor_penalty;
            row.grad_norm = grad_norm;
            row.report = val.report;
            if (!std::isfinite(row.objective) || !std::isfinite(grad_norm))
                throw NonFiniteError("minimize objective", 0.0, 0.0);
            if (grad_norm <= cfg.grad_tol) {
                done = true;
                trace.rows.push_back(row);
                break;
            }
            if (it >= cfg.max_iters) {
                trace.rows.push_back(row);
                break;
            }

            // preconditioned direction
            std::vector<double> dir(nk + nb, 0.0);
            double slope = 0.0;
            for (std::size_t m = 0; m < nk; ++m)
                if (move_k) {
                    dir[m] = -gr.dk.data[m] / pk.data[m];
                    slope += gr.dk.data[m] * dir[m];
                }
            for (std::size_t m = 0; m < nb; ++m)
                if (move_b) {
                    dir[nk + m] = -gr.db.data[m] * bmask[m] / pb.data[m];
                    slope += gr.db.data[m] * dir[nk + m];
                }

            // Barzilai-Borwein trial step in the preconditioned metric
            double alpha = cfg.step_rule == StepRule::fixed ? cfg.fixed_step : step;
            std::vector<double> x(nk + nb), gcur(nk + nb);
            std::copy(trace.k.data.begin(), trace.k.data.end(), x.begin());
            std::copy(trace.b.data.begin(), trace.b.data.end(), x.begin() + nk);
            std::copy(gr.dk.data.begin(), gr.dk.data.end(), gcur.begin());
            std::copy(gr.db.data.begin(), gr.db.data.end(), gcur.begin() + nk);
            if (cfg.step_rule == StepRule::armijo && !prev_x.empty() && !cfg.alternating) {
                double sps = 0.0, sy = 0.0;
                for (std::size_t m = 0; m < nk + nb; ++m) {
                    const double s = x[m] - prev_x[m];
                    const double p = m < nk ? pk.data[m] : pb.data[m - nk];
                    sps += s * p * s;
                    sy += s * (gcur[m] - prev_g[m]);
                }
                if (sy > 0.0 && sps > 0.0) alpha = std::clamp(sps / sy, 1e-6, 1e3);
            }
            prev_x = x;
            prev_g = gcur;

            VectorField kt(g);
            TensorField bt(g);
            detail::PenalizedObjective::Value trial;
            int halvings = 0;
            while (true) {
                for (std::size_t m = 0; m < nk; ++m) kt.data[m] = x[m] + alpha * dir[m];
                for (std::size_t m = 0; m < nb; ++m) bt.data[m] = x[nk + m] + alpha * dir[nk + m];
                bool ok = true;
                try {
                    trial = obj.value(kt, bt);
                } catch (const NonFiniteError&) {
                    ok = false;
                }
                if (cfg.step_rule == StepRule::fixed) {
                    if (!ok) throw NonFiniteError("minimize trial step", 0.0, 0.0);
                    break;
                }
                if (ok && trial.total() <= val.total() + cfg.armijo_c * alpha * slope) break;
                if (++halvings > cfg.max_halvings) fail("Armijo line search failed after " +
                                                        std::to_string(cfg.max_halvings) + " halvings");
                alpha *= 0.5;
            }
            row.step = alpha;
            trace.rows.push_back(row);
            trace.k = std::move(kt);
            trace.b = std::move(bt);
            val = trial;
            gr = obj.gradient(trace.k, trace.b);
            for (std::size_t m = 0; m < nb; ++m) gr.db.data[m] *= bmask[m];
            step = alpha;
            ++it;
            ++global_it;
        }
        trace.stage_iterations.push_back(it);
        trace.converged = done;
    }
    trace.iterations = global_it;
    return trace;
}

}  // namespace discl
