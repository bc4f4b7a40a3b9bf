#pragma once

// Parameter sweeps over system configurations and capacity-region boundary
// sweeps. Cells run in a worker pool; results come back in cell order.

#include "rtsched/capacity_probe.hpp"
#include "rtsched/config_io.hpp"
#include "rtsched/sim_engine.hpp"

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rtsched {

enum class SweepAxis { PAvg, Q, NUsers, NRtComplexity };

std::string_view to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(std::string_view name);

struct SweepSpec {
    SystemConfig base;
    SweepAxis axis = SweepAxis::PAvg;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds{1};
    std::vector<SchedulerKind> schedulers{SchedulerKind::OnOff, SchedulerKind::FixedP};
    /// NUsers axis: the NRT count stays fixed and N - n_nrt users are RT.
    std::size_t n_nrt_fixed = 10;

    /// Throws ConfigError.
    void validate() const;
    std::size_t cells() const { return values.size() * seeds.size() * schedulers.size(); }
};

struct SweepCell {
    std::size_t value_index = 0;
    std::size_t seed_index = 0;
    std::size_t scheduler_index = 0;
};

struct SweepRow {
    double axis_value = 0.0;
    std::uint64_t seed = 0;
    SchedulerKind scheduler = SchedulerKind::OnOff;
    double sum_throughput = 0.0;
    double avg_power = 0.0;
    double min_delivery = 0.0;
    double mean_sets_evaluated = 0.0;
    bool power_ok = false;
    bool qos_ok = false;
    bool stability_ok = false;
    double elapsed_seconds = 0.0;
};

/// The configuration of one sweep cell. Cells that differ only in the
/// scheduler share the seed and therefore every arrival and gain draw.
SystemConfig cell_config(const SweepSpec& spec, const SweepCell& cell);
/// Cells in row order: value-major, then seed, then scheduler.
std::vector<SweepCell> sweep_cells(const SweepSpec& spec);

/// Runs every cell with `jobs` workers. When `cancel` becomes true no new
/// cell starts; unfinished cells stay empty. Results are in row order.
std::vector<std::optional<SweepRow>> run_sweep(const SweepSpec& spec, std::size_t jobs,
                                               const std::atomic<bool>* cancel = nullptr);

/// Header: axis,axis_value,seed,scheduler,sum_throughput,avg_power,min_delivery,
///         mean_sets_evaluated,power_ok,qos_ok,stability_ok,elapsed_s
void write_sweep_csv(std::ostream& os, SweepAxis axis, const std::vector<std::optional<SweepRow>>& rows);

SweepSpec sweep_spec_from(const ConfigSource& src);

/// Ray directions for a region sweep: `rays` directions spread over the
/// positive quadrant for two NRT users, the configured direction otherwise.
std::vector<std::vector<double>> region_rays(const RegionQuery& query, std::size_t rays);

/// One boundary point per ray, computed with `jobs` workers.
std::vector<BoundaryPoint> run_region_sweep(const RegionQuery& query, const std::vector<std::vector<double>>& rays,
                                            double rel_tol, std::size_t jobs);

/// Header: kind,ray,lambda_<i>...,scale,lp_scale,inside,margin
/// kind is "boundary" for ray results and "point" for the configured lambda.
void write_region_csv(std::ostream& os, const RegionQuery& query, const std::vector<BoundaryPoint>& boundary,
                      const RegionResult* point);

/// Runs f(i) for i in [0, n) on `jobs` threads; stops handing out work once
/// `cancel` is set. Exceptions from f are rethrown after all workers join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& f,
                  const std::atomic<bool>* cancel = nullptr);

}  // namespace rtsched
