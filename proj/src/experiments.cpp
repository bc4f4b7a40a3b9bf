#include "rtsched/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

namespace rtsched {

std::string_view to_string(SweepAxis a) {
    switch (a) {
    case SweepAxis::PAvg: return "p_avg";
    case SweepAxis::Q: return "q";
    case SweepAxis::NUsers: return "n_users";
    case SweepAxis::NRtComplexity: return "n_rt_complexity";
    }
    return "unknown";
}

SweepAxis sweep_axis_from_string(std::string_view name) {
    if (name == "p_avg") return SweepAxis::PAvg;
    if (name == "q") return SweepAxis::Q;
    if (name == "n_users") return SweepAxis::NUsers;
    if (name == "n_rt_complexity") return SweepAxis::NRtComplexity;
    throw std::invalid_argument("unknown sweep axis '" + std::string(name) +
                                "' (expected p_avg, q, n_users or n_rt_complexity)");
}

void SweepSpec::validate() const {
    if (values.empty()) throw ConfigError("sweep.values", "must be non-empty");
    if (seeds.empty()) throw ConfigError("sweep.seeds", "must be non-empty");
    if (schedulers.empty()) throw ConfigError("sweep.schedulers", "must be non-empty");
    for (double v : values) {
        if (axis == SweepAxis::NUsers && (v != std::floor(v) || v < static_cast<double>(n_nrt_fixed)))
            throw ConfigError("sweep.values", "n_users values must be integers >= sweep.n_nrt");
        if (axis == SweepAxis::NRtComplexity && (v != std::floor(v) || v < 0.0))
            throw ConfigError("sweep.values", "n_rt_complexity values must be non-negative integers");
    }
    for (const auto& cell : sweep_cells(*this)) cell_config(*this, cell).validate();
}

std::vector<SweepCell> sweep_cells(const SweepSpec& spec) {
    std::vector<SweepCell> cells;
    cells.reserve(spec.cells());
    for (std::size_t v = 0; v < spec.values.size(); ++v)
        for (std::size_t s = 0; s < spec.seeds.size(); ++s)
            for (std::size_t k = 0; k < spec.schedulers.size(); ++k) cells.push_back({v, s, k});
    return cells;
}

SystemConfig cell_config(const SweepSpec& spec, const SweepCell& cell) {
    SystemConfig c = spec.base;
    const double v = spec.values.at(cell.value_index);
    switch (spec.axis) {
    case SweepAxis::PAvg: c.p_avg = v; break;
    case SweepAxis::Q: c.q = {v}; break;
    case SweepAxis::NUsers:
        c.n_nrt = spec.n_nrt_fixed;
        c.n_rt = static_cast<std::size_t>(v) - spec.n_nrt_fixed;
        break;
    case SweepAxis::NRtComplexity: c.n_rt = static_cast<std::size_t>(v); break;
    }
    // Per-user lists of the base config no longer match a changed user count.
    if (spec.axis == SweepAxis::NUsers || spec.axis == SweepAxis::NRtComplexity) {
        if (c.lambda_rt.size() > 1) c.lambda_rt.resize(1);
        if (c.q.size() > 1) c.q.resize(1);
        if (c.lambda_nrt.size() > 1) c.lambda_nrt.resize(1);
    }
    c.seed = spec.seeds.at(cell.seed_index);
    c.scheduler = spec.schedulers.at(cell.scheduler_index);
    c.record_decisions = false;
    c.resolve();
    return c;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f,
                  const std::atomic<bool>* cancel) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            if (cancel && cancel->load()) return;
            {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (error) return;
            }
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (error) std::rethrow_exception(error);
}

std::vector<std::optional<SweepRow>> run_sweep(const SweepSpec& spec, std::size_t jobs,
                                               const std::atomic<bool>* cancel) {
    spec.validate();
    const auto cells = sweep_cells(spec);
    std::vector<std::optional<SweepRow>> rows(cells.size());
    parallel_for(
        cells.size(), jobs,
        [&](std::size_t i) {
            const SystemConfig c = cell_config(spec, cells[i]);
            const RunReport r = run(c);
            SweepRow row;
            row.axis_value = spec.values[cells[i].value_index];
            row.seed = c.seed;
            row.scheduler = c.scheduler;
            row.sum_throughput = r.sum_throughput;
            row.avg_power = r.avg_power;
            row.min_delivery = r.min_delivery;
            row.mean_sets_evaluated = r.mean_sets_evaluated;
            row.power_ok = r.power_ok;
            row.qos_ok = r.qos_ok;
            row.stability_ok = r.stability_ok;
            row.elapsed_seconds = r.elapsed_seconds;
            rows[i] = row;
        },
        cancel);
    return rows;
}

void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<std::optional<SweepRow>>& rows) {
    os << "axis,axis_value,seed,scheduler,sum_throughput,avg_power,min_delivery,mean_sets_evaluated,"
          "power_ok,qos_ok,stability_ok,elapsed_s\n";
    os << std::setprecision(12);
    for (const auto& r : rows) {
        if (!r) continue;
        os << to_string(axis) << ',' << r->axis_value << ',' << r->seed << ',' << to_string(r->scheduler) << ','
           << r->sum_throughput << ',' << r->avg_power << ',' << r->min_delivery << ',' << r->mean_sets_evaluated
           << ',' << r->power_ok << ',' << r->qos_ok << ',' << r->stability_ok << ',' << r->elapsed_seconds
           << '\n';
    }
    os.flush();
}

SweepSpec sweep_spec_from(const ConfigSource& src) {
    SweepSpec spec;
    spec.base = system_config_from(src);
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        auto it = src.values.find(key);
        if (it == src.values.end()) return std::nullopt;
        return it->second;
    };
    auto fail = [&](const std::string& key, const std::string& msg) -> void {
        throw ConfigError(key, msg, src.where(key));
    };
    if (auto a = get("sweep.axis")) {
        try {
            spec.axis = sweep_axis_from_string(*a);
        } catch (const std::invalid_argument& e) {
            fail("sweep.axis", e.what());
        }
    } else {
        fail("sweep.axis", "missing");
    }
    try {
        if (auto v = get("sweep.values")) spec.values = parse_number_list(*v);
    } catch (const std::invalid_argument& e) {
        fail("sweep.values", e.what());
    }
    if (auto v = get("sweep.seeds")) {
        std::vector<double> seeds;
        try {
            seeds = parse_number_list(*v);
        } catch (const std::invalid_argument& e) {
            fail("sweep.seeds", e.what());
        }
        spec.seeds.clear();
        for (double s : seeds) {
            if (s < 0.0 || s != std::floor(s)) fail("sweep.seeds", "seeds must be non-negative integers");
            spec.seeds.push_back(static_cast<std::uint64_t>(s));
        }
    }
    if (auto v = get("sweep.schedulers")) {
        spec.schedulers.clear();
        std::stringstream ss(*v);
        std::string name;
        while (std::getline(ss, name, ',')) {
            name.erase(std::remove_if(name.begin(), name.end(), [](unsigned char c) { return std::isspace(c); }),
                       name.end());
            if (name.empty()) continue;
            try {
                spec.schedulers.push_back(scheduler_from_string(name));
            } catch (const std::invalid_argument& e) {
                fail("sweep.schedulers", e.what());
            }
        }
    }
    if (auto v = get("sweep.n_nrt")) {
        try {
            const auto n = parse_number_list(*v);
            if (n.size() != 1 || n[0] < 0.0 || n[0] != std::floor(n[0])) throw std::invalid_argument("expected an integer");
            spec.n_nrt_fixed = static_cast<std::size_t>(n[0]);
        } catch (const std::invalid_argument& e) {
            fail("sweep.n_nrt", e.what());
        }
    }
    try {
        spec.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(e.field(), e.message(), src.where(e.field()));
    }
    return spec;
}

std::vector<std::vector<double>> region_rays(const RegionQuery& query, std::size_t rays) {
    std::vector<std::vector<double>> out;
    if (query.lambda_nrt.size() == 2 && rays >= 2) {
        for (std::size_t r = 0; r < rays; ++r) {
            const double theta = 0.5 * std::numbers::pi * static_cast<double>(r) / static_cast<double>(rays - 1);
            double c = std::cos(theta), s = std::sin(theta);
            if (std::abs(c) < 1e-15) c = 0.0;
            if (std::abs(s) < 1e-15) s = 0.0;
            out.push_back({c, s});
        }
    } else {
        out.push_back(query.lambda_nrt);
    }
    return out;
}

std::vector<BoundaryPoint> run_region_sweep(const RegionQuery& query, const std::vector<std::vector<double>>& rays,
                                            double rel_tol, std::size_t jobs) {
    std::vector<BoundaryPoint> out(rays.size());
    parallel_for(rays.size(), jobs, [&](std::size_t i) { out[i] = boundary_along_ray(query, rays[i], rel_tol); });
    return out;
}

void write_region_csv(std::ostream& os, const RegionQuery& query, const std::vector<BoundaryPoint>& boundary,
                      const RegionResult* point) {
    const std::size_t n = query.lambda_nrt.size();
    os << "kind,ray";
    for (std::size_t i = 0; i < n; ++i) os << ",lambda_" << i;
    os << ",scale,lp_scale,inside,margin\n" << std::setprecision(12);
    for (std::size_t r = 0; r < boundary.size(); ++r) {
        const auto& b = boundary[r];
        os << "boundary," << r;
        for (double v : b.lambda) os << ',' << v;
        os << ',' << b.scale << ',' << b.lp_scale << ",1,0\n";
    }
    if (point) {
        os << "point,-1";
        for (double v : query.lambda_nrt) os << ',' << v;
        os << ',' << point->scale << ',' << point->scale << ',' << point->inside << ',' << point->margin << '\n';
    }
    os.flush();
}

}  // namespace rtsched
