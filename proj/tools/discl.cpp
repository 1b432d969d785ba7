// Command-line driver: minimize, envelope, scaling and check.
//
// Exit status: 0 on success, 1 on a module error (or a failed check),
// 2 on a command-line or configuration error.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "discl/analysis.hpp"
#include "discl/envelope.hpp"
#include "discl/minimize.hpp"
#include "discl/run_config.hpp"
#include "discl/selfcheck.hpp"

namespace fs = std::filesystem;
using namespace discl;

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

RunConfig effective_config(const Options& o, bool config_required) {
    RunConfig c;
    if (!o.config.empty()) c = load_config(o.config);
    else if (config_required) throw ConfigError("missing --config");
    if (!o.out.empty()) c.out = o.out;
    if (o.seed) c.seed = *o.seed;
    validate(c);
    return c;
}

fs::path prepare_out(const RunConfig& c) {
    const fs::path dir(c.out);
    fs::create_directories(dir);
    const fs::path probe = dir / ".write_probe";
    {
        std::ofstream f(probe);
        if (!f) throw Error("output directory '" + c.out + "' is not writable");
    }
    fs::remove(probe);
    return dir;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw Error("cannot write '" + p.string() + "'");
    return f;
}

void write_manifest(const fs::path& dir, const RunConfig& c, const std::string& command) {
    auto f = open_out(dir / "manifest.txt");
    f << "tool = discl\n"
      << "version = " << kVersion << '\n'
      << "command = " << command << '\n'
      << "config_hash = " << std::hex << std::setw(16) << std::setfill('0') << config_hash(c) << std::dec << '\n'
      << "potential = " << c.model().potential.name << '\n'
      << "seed = " << c.seed << '\n'
      << "[config]\n"
      << c.canonical();
}

void write_report(std::ostream& os, const char* prefix, const EnergyReport& r) {
    os << prefix << "total = " << r.total << '\n'
       << prefix << "unit_penalty = " << r.unit_penalty << '\n'
       << prefix << "elastic = " << r.elastic << '\n'
       << prefix << "curl_term = " << r.curl_term << '\n'
       << prefix << "well_term = " << r.well_term << '\n'
       << prefix << "div_term = " << r.div_term << '\n';
    if (r.has_split) os << prefix << "bulk = " << r.bulk << '\n' << prefix << "layer = " << r.layer << '\n';
    os << prefix << "charge = " << r.charge.x << ' ' << r.charge.y << '\n'
       << prefix << "charge_residual = " << r.charge_residual << '\n';
}

int cmd_minimize(const Options& o) {
    const RunConfig c = effective_config(o, true);
    const ModelParams p = c.model();
    const fs::path dir = prepare_out(c);
    const Grid2 g = Grid2::square(c.nx, c.ny);
    const Ansatz a = disclination_ansatz(g, p, c.sign);
    const MinimizeTrace t = minimize(a.k, a.b, p, c.minimizer());

    {
        auto f = open_out(dir / "trace.csv");
        write_trace_csv(f, t);
    }
    {
        auto f = open_out(dir / "k_final.field");
        write_field(f, t.k);
    }
    {
        auto f = open_out(dir / "B_final.field");
        write_field(f, t.b);
    }
    const LayerGeometry geom = p.layer();
    const EnergyReport rep = energy(t.k, t.b, p, layer_mask(g, geom));
    const RescaledLayer rl = rescale_to_layer(t.k, t.b, p);
    const EnergyReport lrep = rescaled_layer_energy(rl.k, rl.b, p);
    const JumpProfile prof = jump_profile(rl.k);
    const CompatibilityResult cr = compatibility_residual(prof, layer_curl(rl.b, p.eps));
    {
        auto f = open_out(dir / "summary.txt");
        f << std::setprecision(17);
        f << "grid = " << c.nx << " x " << c.ny << '\n'
          << "eps = " << p.eps << '\n'
          << "xi = " << p.xi << '\n'
          << "iterations = " << t.iterations << '\n'
          << "converged = " << (t.converged ? "true" : "false") << '\n';
        write_report(f, "energy.", rep);
        write_report(f, "layer_energy.", lrep);
        f << "jump_start = " << norm(prof.jump.front()) << '\n'
          << "jump_endpoint = " << norm(prof.jump.back()) << '\n'
          << "compatibility_residual = " << cr.residual << '\n'
          << "endpoint_check = " << cr.endpoint_check << '\n'
          << "trace_residual = " << trace_coincidence_residual(t.k, prof, geom) << '\n'
          << "flip_indicator = " << flip_indicator(t.k, geom, 0.5) << '\n'
          << "curl_measure_discrepancy = " << curl_measure_check(prof, t.k, geom).max_discrepancy << '\n';
    }
    write_manifest(dir, c, "minimize");
    std::cout << "minimize: " << t.iterations << " iterations, energy " << rep.total << ", |charge| "
              << norm(rep.charge) << ", output in " << dir.string() << '\n';
    return 0;
}

int cmd_envelope(const Options& o) {
    const RunConfig c = effective_config(o, false);
    const ModelParams p = c.model();
    const fs::path dir = prepare_out(c);
    const EnvelopeOracle oracle(p.potential, c.envelope_depth);
    auto f = open_out(dir / "envelope.csv");
    f << bracket_csv_header() << '\n' << std::setprecision(17);
    const int n = static_cast<int>(std::floor((c.r_max - c.r_min) / c.r_step + 1e-9));
    double inside = 0.0;
    for (int s = 0; s <= n; ++s) {
        const double r = c.r_min + s * c.r_step;
        const auto br = oracle.bracket(r * Mat2::outer({1, 0}, {1, 0}));
        if (r <= p.potential.well_outer) inside = std::max(inside, br.upper);
        f << r << ',' << br.lower << ',' << br.upper << ',' << br.width() << ',' << p.potential.value(r) << '\n';
    }
    write_manifest(dir, c, "envelope");
    std::cout << "envelope: " << n + 1 << " radii, max upper bound inside the well ball " << inside << '\n';
    return 0;
}

int cmd_scaling(const Options& o) {
    const RunConfig c = effective_config(o, true);
    const ModelParams p = c.model();
    const fs::path dir = prepare_out(c);
    auto dump = [&](const std::vector<ScalingRecord>& recs) {
        auto f = open_out(dir / "scaling.csv");
        write_scaling_csv(f, recs);
        for (std::size_t m = 0; m < recs.size(); ++m) {
            auto pf = open_out(dir / ("profile_" + std::to_string(m) + ".csv"));
            write_profile_csv(pf, recs[m].profile);
        }
        write_manifest(dir, c, "scaling");
    };
    try {
        const auto recs = scaling_study(p, c.eps_list, c.scaling());
        dump(recs);
        std::cout << "scaling: " << recs.size() << " records, output in " << dir.string() << '\n';
    } catch (const ScalingError& e) {
        dump(e.records);
        throw;
    }
    return 0;
}

int cmd_check(const Options& o) {
    const RunConfig c = effective_config(o, false);
    bool ok = true;
    for (const auto& r : run_self_checks(c.seed)) {
        std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name << ": " << r.detail << '\n';
        ok = ok && r.passed;
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Regularized disclination energy: minimization, envelope sweeps, scaling studies, self-checks"};
    app.require_subcommand(1);
    Options opts;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", opts.config, "key = value configuration file");
        if (config_required) opt->required();
        sub->add_option("--out", opts.out, "output directory (overrides the config)");
        sub->add_option("--seed", seed, "random seed (overrides the config)");
    };
    auto* m = app.add_subcommand("minimize", "ansatz, minimization and layer diagnostics");
    auto* e = app.add_subcommand("envelope", "radial sweep of the envelope bracket");
    auto* s = app.add_subcommand("scaling", "eps -> 0 scaling study");
    auto* k = app.add_subcommand("check", "invariant and self-test battery");
    add_common(m, true);
    add_common(e, false);
    add_common(s, true);
    add_common(k, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : 2;
    }
    for (auto* sub : {m, e, s, k})
        if (sub->parsed() && sub->count("--seed")) opts.seed = seed;

    try {
        if (m->parsed()) return cmd_minimize(opts);
        if (e->parsed()) return cmd_envelope(opts);
        if (s->parsed()) return cmd_scaling(opts);
        return cmd_check(opts);
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}
