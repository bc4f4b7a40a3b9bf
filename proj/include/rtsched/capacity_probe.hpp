#pragma once

// Membership test for the capacity region over discrete fading states.
// Powers are restricted to a finite grid, which makes the joint time-share
// problem linear; "inside" is therefore certain while "outside" holds only at
// the chosen grid resolution.

#include "rtsched/schedulers.hpp"
#include "rtsched/sim_engine.hpp"
#include "rtsched/traffic_channel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace rtsched {

class RegionGuardError : public std::length_error {
public:
    using std::length_error::length_error;
};

struct RegionQuery {
    std::vector<double> lambda_nrt;  ///< packets/slot per NRT user
    std::vector<double> lambda_rt;   ///< per RT user
    std::vector<double> q;           ///< per RT user
    double packet_bits = 1.0;
    double slot_len = 1.0;
    double p_avg = 20.0;
    double p_max = 20.0;
    /// Per-user fading, i.i.d. across users. Must be Discrete (or OnOff).
    ChannelModel channel = ChannelModel::discrete({1.0}, {1.0});
    std::size_t grid_levels = 64;
    std::size_t max_joint_states = 10000;

    /// Throws std::invalid_argument.
    void validate() const;
    /// 0, grid_levels-1 log-spaced levels in [Pmax/1000, Pmax], and Pavg when inside (0, Pmax).
    std::vector<double> power_grid() const;
    /// Number of joint (fading, RT arrival) states.
    std::size_t joint_states() const;
};

struct StateAllocation {
    double prob = 0.0;
    std::vector<double> gains;     ///< RT users first, then NRT users
    std::vector<int> rt_arrivals;
    std::vector<double> time;      ///< seconds per user (same order as gains)
    std::vector<double> energy;    ///< joules per user
    std::vector<double> bits;      ///< bits delivered per user
};

struct RegionCertificate {
    std::vector<StateAllocation> states;
    double budget_slack = 0.0;     ///< min over states of Ts - sum time
    std::vector<double> nrt_slack; ///< delivered packets/slot minus lambda
    std::vector<double> rt_slack;  ///< delivered packets/slot minus q*lambda
    double power_slack = 0.0;      ///< Pavg minus average power

    double min_slack() const;
};

struct RegionResult {
    bool inside = false;
    bool rt_feasible = false;  ///< RT targets and power budget can be met at all
    double scale = 0.0;        ///< largest s with s*lambda inside (capped at 1e6)
    double margin = 0.0;       ///< scale - 1
    std::optional<RegionCertificate> certificate;
};

/// Throws RegionGuardError when the joint state space exceeds the guard.
RegionResult in_lambert_region(const RegionQuery& query);

/// Recomputes every constraint of a certificate from its raw allocations.
/// Returns the smallest slack (negative means violated).
double verify_certificate(const RegionQuery& query, const RegionCertificate& cert);

struct BoundaryPoint {
    std::vector<double> direction;
    double scale = 0.0;     ///< inside/outside transition found by bisection
    double lp_scale = 0.0;  ///< direct maximum-scale solve
    std::vector<double> lambda;  ///< scale * direction
    std::size_t probes = 0;
};

/// Bisects the membership transition along `direction` to `rel_tol` relative.
/// The returned scale is the largest probed scale certified inside.
BoundaryPoint boundary_along_ray(RegionQuery query, const std::vector<double>& direction,
                                 double rel_tol = 0.01);

enum class StabilityVerdict { Stable, Unstable };

struct StabilityResult {
    StabilityVerdict verdict = StabilityVerdict::Stable;
    double max_slope = 0.0;  ///< bits per slot
    RunReport report;
};

/// Runs the simulator with every arrival admitted and fits the slope of each
/// NRT queue over the last half of the horizon. Stable iff every slope is at
/// most slope_tol * L per slot.
StabilityResult stress_stability(const RegionQuery& query, SchedulerKind scheduler, std::size_t horizon,
                                 std::uint64_t seed = 1, double slope_tol = 1e-3);

}  // namespace rtsched
