/// @file envelope.hpp
/// @brief Brackets for the quasiconvex envelope Q(W(|.|)) on 2x2 matrices.
///
/// lower: the 1D convex envelope W** of the even extension of W, evaluated
///        at |p| (capped by W itself).
/// upper: 0 inside the closed ball |p| <= 2 by a single rank-one lamination
///        between two points of the outer well sphere; outside the ball a
///        depth-limited recursive lamination over a grid of rank-one
///        directions, capped by W(|p|).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "field.hpp"
#include "potential.hpp"

namespace discl {

/// Piecewise-linear function on increasing knots, extended linearly.
struct PiecewiseLinear {
    std::vector<double> x;
    std::vector<double> y;

    std::size_t segment(double r) const {
        const auto it = std::upper_bound(x.begin(), x.end(), r);
        std::size_t s = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
        return std::min(s, x.size() - 2);
    }
    double slope(double r) const {
        const std::size_t s = segment(r);
        return (y[s + 1] - y[s]) / (x[s + 1] - x[s]);
    }
    double operator()(double r) const {
        const std::size_t s = segment(r);
        return y[s] + (r - x[s]) * (y[s + 1] - y[s]) / (x[s + 1] - x[s]);
    }
};

/// Lower convex envelope of {(r_i, W(r_i))} over the even extension to
/// [-r_max, r_max], restricted to r >= 0. The wells 0 and well_outer are
/// always among the samples.
inline PiecewiseLinear convex_envelope_profile(const WellPotential& w, double r_max = 16.0, int n = 4096) {
    if (n < 64) throw Error("convex_envelope_profile: need at least 64 samples");
    if (!(r_max >= 4.0)) throw Error("convex_envelope_profile: r_max must be at least 4");
    std::vector<double> r;
    r.reserve(n + 2);
    for (int i = 0; i <= n; ++i) r.push_back(r_max * i / n);
    r.push_back(w.well_outer);
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());

    std::vector<std::pair<double, double>> pts;
    pts.reserve(2 * r.size());
    for (auto it = r.rbegin(); it != r.rend(); ++it)
        if (*it > 0.0) pts.emplace_back(-*it, w.value(*it));
    for (double v : r) pts.emplace_back(v, w.value(v));

    // Andrew monotone chain, lower part
    std::vector<std::pair<double, double>> hull;
    auto cross = [](const auto& o, const auto& a, const auto& b) {
        return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
    };
    for (const auto& p : pts) {
        while (hull.size() >= 2 && cross(hull[hull.size() - 2], hull.back(), p) <= 0.0) hull.pop_back();
        hull.push_back(p);
    }
    PiecewiseLinear out;
    for (std::size_t m = 0; m < hull.size(); ++m) {
        if (hull[m].first < 0.0) {
            // segment crossing r = 0 from the mirrored half
            if (m + 1 < hull.size() && hull[m + 1].first > 0.0) {
                const auto& a = hull[m];
                const auto& b = hull[m + 1];
                out.x.push_back(0.0);
                out.y.push_back(a.second + (0.0 - a.first) * (b.second - a.second) / (b.first - a.first));
            }
            continue;
        }
        out.x.push_back(hull[m].first);
        out.y.push_back(hull[m].second);
    }
    return out;
}

// ---------------------------------------------------------------------------

/// Result of laminating p along the rank-one direction D = a (x) b between the
/// two points p +- lambda_{+-} D on the sphere of radius well_outer.
struct LaminationStep {
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    double t = 0.5;
    double value = 0.0;
    Mat2 p_plus, p_minus;
    double recombination_residual = 0.0;  ///< |t p+ + (1-t) p- - p|
    double sphere_residual = 0.0;         ///< max | |p+-| - well_outer |
};

/// Returns nullopt when p lies outside the closed ball of radius
/// well_outer (no pair of nonnegative roots exists there).
inline std::optional<LaminationStep> lamination_step(const Mat2& p, const Vec2& a, const Vec2& b,
                                                     const WellPotential& w) {
    const double na = norm(a), nb = norm(b);
    if (std::abs(na - 1.0) > 1e-12 || std::abs(nb - 1.0) > 1e-12)
        throw Error("lamination_step: a and b must be unit vectors");
    const Mat2 d = Mat2::outer(a, b);
    const double c = frob_dot(p, d);
    const double rho = w.well_outer;
    const double disc = c * c + rho * rho - frob_dot(p, p);
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    LaminationStep s;
    s.lambda_plus = -c + sq;
    s.lambda_minus = c + sq;
    if (s.lambda_plus < 0.0 || s.lambda_minus < 0.0) return std::nullopt;
    const double sum = s.lambda_plus + s.lambda_minus;
    s.t = sum > 0.0 ? s.lambda_minus / sum : 0.5;
    s.p_plus = p + s.lambda_plus * d;
    s.p_minus = p - s.lambda_minus * d;
    // both end points sit in the outer well, so the convex combination of
    // the well values is exact
    s.value = s.t * w.value(rho) + (1.0 - s.t) * w.value(rho);
    s.recombination_residual = frob(s.t * s.p_plus + (1.0 - s.t) * s.p_minus - p);
    s.sphere_residual = std::max(std::abs(frob(s.p_plus) - rho), std::abs(frob(s.p_minus) - rho));
    return s;
}

struct EnvelopeBracket {
    double lower = 0.0;
    double upper = 0.0;
    double argument_norm = 0.0;
    std::optional<LaminationStep> certificate;  ///< set when |p| <= well_outer

    double width() const { return upper - lower; }
};

/// The 16 rank-one directions a(theta) (x) b(phi), theta, phi in {0, pi/4, pi/2, 3pi/4}.
inline std::vector<std::pair<Vec2, Vec2>> lamination_directions() {
    std::vector<std::pair<Vec2, Vec2>> dirs;
    const double pi = std::acos(-1.0);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            const double th = i * pi / 4, ph = j * pi / 4;
            dirs.push_back({{std::cos(th), std::sin(th)}, {std::cos(ph), std::sin(ph)}});
        }
    return dirs;
}

/// Bracket oracle for Q(W(|.|)). Thread-safe: the recursion memo is guarded,
/// and concurrent calls return identical values.
class EnvelopeOracle {
public:
    explicit EnvelopeOracle(WellPotential w, int depth = 3, double r_max = 16.0, int samples = 4096)
        : w_(std::move(w)), depth_(depth), hull_(convex_envelope_profile(w_, r_max, samples)) {
        if (depth_ < 1) throw Error("EnvelopeOracle: depth must be >= 1");
        for (const auto& [a, b] : lamination_directions()) {
            // on the canonical representative r e1 (x) e1 only <e1 (x) e1, D> matters
            const double c = a.x * b.x;
            bool seen = false;
            for (double v : classes_) seen = seen || std::abs(std::abs(v) - std::abs(c)) < 1e-12;
            if (!seen) classes_.push_back(std::abs(c));
        }
    }

    const WellPotential& potential() const { return w_; }
    int depth() const { return depth_; }
    const PiecewiseLinear& hull() const { return hull_; }

    double lower(double r) const { return std::max(0.0, std::min(hull_(r), w_.value(r))); }

    double upper(const Mat2& p) const { return upper_radial(frob(p)); }

    /// Upper bound as a function of |p|.
    double upper_radial(double r) const {
        if (r <= w_.well_outer) return 0.0;
        return std::min(w_.value(r), recurse(r, depth_));
    }

    EnvelopeBracket bracket(const Mat2& p) const {
        EnvelopeBracket br;
        br.argument_norm = frob(p);
        br.lower = lower(br.argument_norm);
        if (br.argument_norm <= w_.well_outer) {
            br.certificate = lamination_step(p, {1, 0}, {1, 0}, w_);
            br.upper = br.certificate ? br.certificate->value : 0.0;
        } else {
            br.upper = upper_radial(br.argument_norm);
        }
        br.lower = std::min(br.lower, br.upper);  // both are certified; keep the order exact under rounding
        return br;
    }

    std::size_t memo_size() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return memo_.size();
    }

private:
    static std::int64_t quantize(double r) { return static_cast<std::int64_t>(std::llround(r * 1e12)); }

    // U_d on the canonical representative r e1 (x) e1. A split P = t P1 + (1-t) P2
    // along D with P1 - P2 rank one costs t U_{d-1}(|P1|) + (1-t) U_{d-1}(|P2|).
    double recurse(double r, int d) const {
        if (r <= w_.well_outer) return 0.0;
        const double base = w_.value(r);
        if (d == 0) return base;
        const auto key = std::make_pair(quantize(r), d);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            const auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
        }
        double best = base;
        const double rho = w_.well_outer;
        for (double c : classes_) {
            // |P + s D|^2 = r^2 + 2 s r c + s^2
            std::vector<double> shifts{-0.5 * r, 0.5 * r};
            const double disc = r * r * c * c - (r * r - rho * rho);
            if (disc >= 0.0) {
                shifts.push_back(-r * c + std::sqrt(disc));
                shifts.push_back(-r * c - std::sqrt(disc));
            }
            if (c != 0.0) shifts.push_back(-r * c);
            for (double s1 : shifts) {
                if (!(s1 < 0.0)) continue;
                for (double s2 : shifts) {
                    if (!(s2 > 0.0)) continue;
                    const double t = -s1 / (s2 - s1);  // weight of the s2 end point
                    const double r1 = std::sqrt(std::max(0.0, r * r + 2 * s1 * r * c + s1 * s1));
                    const double r2 = std::sqrt(std::max(0.0, r * r + 2 * s2 * r * c + s2 * s2));
                    const double v = t * recurse(r2, d - 1) + (1.0 - t) * recurse(r1, d - 1);
                    best = std::min(best, v);
                }
            }
        }
        std::lock_guard<std::mutex> lock(mutex_);
        memo_.emplace(key, best);
        return best;
    }

    WellPotential w_;
    int depth_;
    PiecewiseLinear hull_;
    std::vector<double> classes_;
    mutable std::mutex mutex_;
    mutable std::map<std::pair<std::int64_t, int>, double> memo_;
};

/// One-shot bracket with a fresh oracle.
inline EnvelopeBracket qw_bracket(const Mat2& p, const WellPotential& w, int depth = 3) {
    return EnvelopeOracle(w, depth).bracket(p);
}

/// Radial table of the working value of QW (the upper bound), linear
/// between knots, used where a differentiable relaxed well is needed.
inline PiecewiseLinear relaxed_well_table(const EnvelopeOracle& oracle, double r_max = 12.0, int n = 2400) {
    PiecewiseLinear t;
    for (int i = 0; i <= n; ++i) {
        const double r = r_max * i / n;
        t.x.push_back(r);
        t.y.push_back(oracle.upper_radial(r));
    }
    return t;
}

inline const char* bracket_csv_header() { return "r,lower,upper,width,W"; }

}  // namespace discl
