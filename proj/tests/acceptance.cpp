// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "discl/analysis.hpp"
#include "discl/selfcheck.hpp"

#ifndef DISCL_CLI_PATH
#error "DISCL_CLI_PATH must name the command-line driver"
#endif

namespace fs = std::filesystem;
using namespace discl;

namespace {

struct Line {
    int id;
    std::string title;
    bool passed;
    std::string detail;
    double seconds;
    double budget;
};

std::vector<Line> lines;

void report(int id, const std::string& title, const CheckResult& r, double budget) {
    const bool ok = r.passed && r.seconds < budget;
    lines.push_back({id, title, ok, r.detail, r.seconds, budget});
    std::printf("[%s] %d %s: %s (%.2f s, limit %.0f s)\n", ok ? "PASS" : "FAIL", id, title.c_str(), r.detail.c_str(),
                r.seconds, budget);
    std::fflush(stdout);
}

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

CheckResult end_to_end() {
    return detail::timed_check("end-to-end", [](CheckResult& r) {
        ModelParams base;
        base.xi = 0.25;
        ScalingConfig cfg;
        cfg.nx = 128;
        cfg.ny = 128;
        cfg.minimize.max_iters = 3000;
        cfg.minimize.mu_schedule = {10.0, 100.0, 1000.0};
        cfg.parallel = true;
        const std::vector<double> eps{0.5, 0.25, 0.125};
        std::vector<ScalingRecord> recs;
        std::string note;
        try {
            recs = scaling_study(base, eps, cfg);
        } catch (const ScalingError& e) {
            recs = e.records;
            note = std::string("; ") + e.what();
        }
        if (recs.size() != eps.size()) {
            r.passed = false;
            r.detail = "only " + std::to_string(recs.size()) + " runs finished" + note;
            return;
        }
        bool charge_ok = true, flip_ok = true, compat_ok = true;
        std::string charges, flips, compat, grids;
        for (std::size_t m = 0; m < recs.size(); ++m) {
            const auto& q = recs[m];
            charge_ok = charge_ok && q.report.charge_residual < 0.05;
            flip_ok = flip_ok && q.flip < -0.9;
            if (m > 0) compat_ok = compat_ok && q.compatibility <= recs[m - 1].compatibility;
            const std::string sep = m ? "/" : "";
            charges += sep + fmt(q.report.charge_residual);
            flips += sep + fmt(q.flip);
            compat += sep + fmt(q.compatibility);
            grids += sep + std::to_string(q.nx) + "x" + std::to_string(q.ny);
        }
        const auto& last = recs.back();
        const bool jump_ok = std::abs(last.jump_endpoint - 2.0) < 0.1;
        const bool trace_ok = last.trace_residual < 0.1;
        r.passed = note.empty() && charge_ok && flip_ok && compat_ok && jump_ok && trace_ok;
        r.detail = "grids " + grids + "; charge residual " + charges + (charge_ok ? " ok" : " FAIL") +
                   "; flip " + flips + (flip_ok ? " ok" : " FAIL") + "; |[k~](1)| " + fmt(last.jump_endpoint) +
                   (jump_ok ? " ok" : " FAIL") + "; compatibility " + compat + (compat_ok ? " ok" : " FAIL") +
                   "; trace residual " + fmt(last.trace_residual) + (trace_ok ? " ok" : " FAIL") + note;
    });
}

CheckResult determinism() {
    return detail::timed_check("determinism", [](CheckResult& r) {
        const fs::path root = fs::temp_directory_path() / ("discl_acceptance_" + std::to_string(::getpid()));
        fs::remove_all(root);
        fs::create_directories(root);
        const fs::path cfg = root / "run.cfg";
        {
            std::ofstream f(cfg);
            f << "nx = 48\nny = 48\neps = 0.5\nxi = 0.5\nmax_iters = 60\nnoise = 0.01\nanchor = true\n";
        }
        auto run = [&](const std::string& out) {
            const std::string cmd = std::string("\"") + DISCL_CLI_PATH + "\" minimize --config \"" + cfg.string() +
                                    "\" --out \"" + (root / out).string() + "\" --seed 1234 > /dev/null";
            return std::system(cmd.c_str());
        };
        const int s1 = run("a"), s2 = run("b");
        bool same = s1 == 0 && s2 == 0;
        std::string which;
        for (const char* f : {"trace.csv", "k_final.field", "B_final.field", "summary.txt"}) {
            const std::string a = slurp(root / "a" / f), b = slurp(root / "b" / f);
            if (a.empty() || a != b) {
                same = false;
                which += std::string(" ") + f;
            }
        }
        fs::remove_all(root);
        r.passed = same;
        r.detail = same ? "two seeded runs produced byte-identical outputs"
                        : "exit " + std::to_string(s1) + "/" + std::to_string(s2) + ", differing:" + which;
    });
}

}  // namespace

int main() {
    std::printf("acceptance criteria\n");
    report(1, "gradient correctness", check_gradient(2024), 10);
    report(2, "Helmholtz identity", check_helmholtz(7), 30);
    report(3, "envelope vanishing", check_envelope(11), 10);
    report(4, "defect-free collapse", check_defect_free(), 5);
    report(5, "charge quantization", check_charge(), 20);
    report(6, "stencil identities", check_stencils(13), 5);
    report(7, "end-to-end minimization with diagnostics", end_to_end(), 900);
    report(8, "curl-measure identity", check_curl_measure(), 5);
    report(9, "determinism", determinism(), 300);
    int failed = 0;
    for (const auto& l : lines) failed += l.passed ? 0 : 1;
    std::printf("%d of %zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
    return failed == 0 ? 0 : 1;
}
