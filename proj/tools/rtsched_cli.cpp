// rtsched: command-line front end.
//
//   rtsched run    --config sys.conf [--out DIR] [--seed N] [--strict]
//   rtsched sweep  --config sweep.conf [--out DIR] [--jobs N] [--seed N] [--strict]
//   rtsched region --config region.conf [--out DIR] [--jobs N]
//   rtsched selftest
//
// Exit codes: 0 ok, 1 constraint failure (with --strict), failed selftest or
// interrupted sweep, 2 usage or configuration error.

#include "rtsched/capacity_probe.hpp"
#include "rtsched/config_io.hpp"
#include "rtsched/experiments.hpp"
#include "rtsched/math_kernels.hpp"
#include "rtsched/schedulers.hpp"
#include "rtsched/sim_engine.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using namespace rtsched;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_interrupted{false};

extern "C" void on_sigint(int) { g_interrupted.store(true); }

struct Options {
    std::string config;
    std::string out;
    std::size_t jobs = 0;
    std::optional<std::uint64_t> seed;
    bool strict = false;
};

ConfigSource load(const Options& o) {
    ConfigSource src = o.config.empty() ? ConfigSource{} : load_config_file(o.config);
    apply_env_overrides(src);
    check_known_keys(src);
    return src;
}

std::ofstream open_out(const Options& o, const std::string& name) {
    fs::create_directories(o.out);
    const fs::path p = fs::path(o.out) / name;
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    return f;
}

std::size_t job_count(const Options& o) {
    if (o.jobs > 0) return o.jobs;
    return std::max(1u, std::thread::hardware_concurrency());
}

int cmd_run(const Options& o) {
    SystemConfig c = system_config_from(load(o));
    if (o.seed) c.seed = *o.seed;
    const RunReport r = run(c);
    c.resolve();
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    const std::string json = report_json(r, c);
    if (o.out.empty()) {
        std::cout << json << '\n';
    } else {
        open_out(o, "report.json") << json << '\n';
        auto trace = open_out(o, "trace.csv");
        write_trace_csv(trace, r);
        if (c.record_decisions) {
            auto dec = open_out(o, "decisions.csv");
            write_decisions_csv(dec, r, c.n_rt, c.n_nrt);
        }
        std::cerr << "wrote " << o.out << "/report.json\n";
    }
    if (o.strict && !(r.constraints_ok() && r.invariants_ok())) {
        std::cerr << "constraint check failed: power_ok=" << r.power_ok << " qos_ok=" << r.qos_ok
                  << " stability_ok=" << r.stability_ok << " invariants_ok=" << r.invariants_ok() << '\n';
        return kFailure;
    }
    return kOk;
}

int cmd_sweep(const Options& o) {
    SweepSpec spec = sweep_spec_from(load(o));
    if (o.seed) spec.seeds = {*o.seed};
    std::signal(SIGINT, on_sigint);
    const auto rows = run_sweep(spec, job_count(o), &g_interrupted);
    if (o.out.empty()) {
        write_sweep_csv(std::cout, spec.axis, rows);
    } else {
        auto f = open_out(o, "sweep.csv");
        write_sweep_csv(f, spec.axis, rows);
        std::cerr << "wrote " << o.out << "/sweep.csv\n";
    }
    if (g_interrupted.load()) {
        std::cerr << "interrupted: partial results written\n";
        return kFailure;
    }
    if (o.strict)
        for (const auto& r : rows)
            if (r && !(r->power_ok && r->qos_ok && r->stability_ok)) return kFailure;
    return kOk;
}

int cmd_region(const Options& o) {
    const ConfigSource src = load(o);
    const RegionQuery q = region_query_from(src);
    std::size_t rays = 9;
    double rel_tol = 0.01;
    if (auto it = src.values.find("region.rays"); it != src.values.end()) {
        const auto v = parse_number_list(it->second);
        if (v.size() != 1 || v[0] < 1 || v[0] != std::floor(v[0]))
            throw ConfigError("region.rays", "expected a positive integer", src.where("region.rays"));
        rays = static_cast<std::size_t>(v[0]);
    }
    if (auto it = src.values.find("region.rel_tol"); it != src.values.end()) {
        const auto v = parse_number_list(it->second);
        if (v.size() != 1 || !(v[0] > 0.0 && v[0] < 1.0))
            throw ConfigError("region.rel_tol", "expected a value in (0,1)", src.where("region.rel_tol"));
        rel_tol = v[0];
    }
    const auto boundary = run_region_sweep(q, region_rays(q, rays), rel_tol, job_count(o));
    const RegionResult point = in_lambert_region(q);
    if (o.out.empty()) {
        write_region_csv(std::cout, q, boundary, &point);
    } else {
        auto f = open_out(o, "region.csv");
        write_region_csv(f, q, boundary, &point);
        std::cerr << "wrote " << o.out << "/region.csv\n";
    }
    return kOk;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

bool report_check(const char* name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << "  " << detail << '\n';
    return ok;
}

int cmd_selftest() {
    bool ok = true;
    {
        double worst = 0.0;
        for (double z : {-0.36, -0.2, 0.0, 0.5, 1.0, 10.0, 1e3, 1e8}) {
            const double w = lambert_w0(z);
            worst = std::max(worst, std::abs(w * std::exp(w) - z) / std::max(1.0, std::abs(z)));
        }
        ok &= report_check("lambert_w0", worst <= 1e-12, "max relative residual " + num(worst));
    }
    {
        PowerPolicyInput in{10.0, 2.0, 1.0, 20.0, 1.0, 1.0};
        const double p = waterfilling_power(in);
        const double psi = psi_nr_star(in);
        ok &= report_check("waterfilling", std::abs(p - 4.0) < 1e-12 && std::abs(psi - (10 * std::log(5.0) - 8)) < 1e-12,
                           "P=" + num(p) + " psi=" + num(psi));
    }
    {
        RandomStream rng(7, StreamDomain::Scheduler, 99);
        double worst = 0.0;
        for (int i = 0; i < 2000; ++i) {
            const double pt = 0.01 + 50.0 * rng.uniform();
            const double g = 0.05 + 5.0 * rng.uniform();
            const double p = lambert_rt_power(pt, g, 1e9);
            if (p > 0.0) worst = std::max(worst, std::abs(lambert_fixed_point_residual(p, pt, g)));
        }
        ok &= report_check("lambert_fixed_point", worst <= 1e-8, "max residual " + num(worst));
    }
    {
        RandomStream gen(11, StreamDomain::Scheduler, 5);
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            EligibleSlotView v;
            v.x = 0.5 + 20.0 * gen.uniform();
            for (std::size_t i = 0; i < 6; ++i)
                if (gen.uniform() < 0.7) v.rt.push_back({i, 100.0 * gen.uniform(), 1.0, 1.0});
            for (std::size_t i = 0; i < 3; ++i) v.nrt.push_back({i, 200.0 * gen.uniform(), 1.0, 0, 1.0});
            RandomStream a(1, StreamDomain::Scheduler, t), b(1, StreamDomain::Scheduler, t);
            const double x = schedule_onoff(v, a).objective;
            const double y = schedule_exhaustive(v, b).objective;
            worst = std::max(worst, std::abs(x - y) / std::max(1.0, std::abs(y)));
        }
        ok &= report_check("onoff_vs_exhaustive", worst <= 1e-9, "max relative gap " + num(worst));
    }
    {
        SystemConfig c;
        c.horizon = 3000;
        const RunReport a = run(c), b = run(c);
        ok &= report_check("determinism", a.sum_throughput == b.sum_throughput && a.avg_power == b.avg_power,
                           "sum throughput " + num(a.sum_throughput));
        ok &= report_check("slot_invariants", a.invariants_ok(),
                           "budget " + std::to_string(a.invariants.budget_violations) + ", deadline " +
                               std::to_string(a.invariants.deadline_violations));
    }
    {
        RegionQuery q;
        q.lambda_nrt = {1.0};
        const BoundaryPoint b = boundary_along_ray(q, {1.0});
        const double exact = std::log(21.0);
        ok &= report_check("region_single_state", std::abs(b.scale - exact) <= 0.01 * exact,
                           "boundary " + num(b.scale) + " vs " + num(exact));
    }
    return ok ? kOk : kFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint RT/NRT scheduling and power allocation simulator"};
    app.require_subcommand(1);
    Options o;
    auto add_common = [&](CLI::App* sub, bool jobs, bool seed, bool strict) {
        sub->add_option("--config", o.config, "config file (key = value or JSON)");
        sub->add_option("--out", o.out, "output directory");
        if (jobs) sub->add_option("--jobs", o.jobs, "worker threads (default: hardware concurrency)");
        if (seed) sub->add_option("--seed", o.seed, "override the seed");
        if (strict) sub->add_flag("--strict", o.strict, "exit 1 when a constraint flag fails");
    };
    auto* run_cmd = app.add_subcommand("run", "single simulation run");
    add_common(run_cmd, false, true, true);
    auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep to CSV");
    add_common(sweep_cmd, true, true, true);
    auto* region_cmd = app.add_subcommand("region", "capacity region boundary to CSV");
    add_common(region_cmd, true, false, false);
    app.add_subcommand("selftest", "quick numerical self checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (run_cmd->parsed()) return cmd_run(o);
        if (sweep_cmd->parsed()) return cmd_sweep(o);
        if (region_cmd->parsed()) return cmd_region(o);
        return cmd_selftest();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kUsage;
    } catch (const RegionGuardError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
}
