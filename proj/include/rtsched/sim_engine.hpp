#pragma once

// The slot loop: draw arrivals and gains, ask a scheduler for a decision,
// serve, admit, update every queue and accumulate metrics.

#include "rtsched/queues.hpp"
#include "rtsched/schedulers.hpp"
#include "rtsched/traffic_channel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rtsched {

/// Invalid configuration; `field()` names the offending key. `location` is an
/// optional "file:line: " prefix.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, std::string message, const std::string& location = {})
        : std::invalid_argument(location + field + ": " + message),
          field_(std::move(field)),
          message_(std::move(message)) {}
    const std::string& field() const { return field_; }
    const std::string& message() const { return message_; }

private:
    std::string field_;
    std::string message_;
};

/// A NaN or infinity appeared in a decision.
class NumericFault : public std::runtime_error {
public:
    NumericFault(std::size_t slot, const std::string& what)
        : std::runtime_error("numeric fault at slot " + std::to_string(slot) + ": " + what), slot_(slot) {}
    std::size_t slot() const { return slot_; }

private:
    std::size_t slot_;
};

struct SystemConfig {
    std::size_t n_rt = 10;
    std::size_t n_nrt = 10;
    /// Per-user arrival rates and delivery targets. A single value is
    /// broadcast to every user of the class by resolve().
    std::vector<double> lambda_rt{1.0};
    std::vector<double> lambda_nrt{1.0};
    std::vector<double> q{0.3};
    PacketLengthModel rt_packets;
    PacketLengthModel nrt_packets;
    double slot_len = 1.0;
    double p_avg = 10.0;
    double p_max = 20.0;
    double b_max = 1e4;
    ChannelModel channel;
    SchedulerKind scheduler = SchedulerKind::OnOff;
    std::size_t horizon = 200000;
    std::uint64_t seed = 1;
    std::size_t burn_in = 0;
    bool heavy_traffic = false;
    bool admit_all = false;
    std::optional<double> fixedp_rt_bias;  ///< FixedP coin; defaults to the mean of q
    bool fixedp_power_gate = true;
    std::size_t trace_interval = 1000;
    bool record_decisions = false;

    /// Broadcasts scalar per-user fields. Throws ConfigError on size mismatch.
    void resolve();
    /// Throws ConfigError naming the field. Returns warnings that do not stop a run.
    std::vector<std::string> validate() const;
};

struct TraceSample {
    std::size_t slot = 0;  ///< slots completed
    double sum_throughput = 0.0;
    double avg_power = 0.0;
    double min_delivery = 1.0;
    double x = 0.0;
    double max_y = 0.0;
    double max_queue = 0.0;
    double lyapunov = 0.0;  ///< (sum Q^2 + sum Y^2 + X^2)/2
};

struct DecisionRecord {
    std::size_t slot = 0;
    std::uint64_t rt_mask = 0;
    long nrt_pick = -1;
    double phi = 0.0;
    double objective = 0.0;
    std::size_t sets_evaluated = 0;
    std::vector<double> rt_power, rt_duration;    ///< per RT user, 0 when idle
    std::vector<double> nrt_power, nrt_duration;  ///< per NRT user
};

struct InvariantCounters {
    std::size_t budget_violations = 0;    ///< sum mu > Ts + 1e-9
    std::size_t deadline_violations = 0;  ///< |mu R - L| > 1e-9 L for a served RT packet
    std::size_t power_violations = 0;     ///< P outside [0, Pmax]
    std::size_t objective_mismatches = 0; ///< scheduler objective disagrees with per_slot_objective
};

struct RunReport {
    std::string scheduler;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;

    std::vector<double> admitted_avg;  ///< per NRT user
    std::vector<double> served_rate;
    std::vector<double> mean_queue;
    std::vector<double> final_queue;
    std::vector<double> queue_slope;   ///< least-squares slope of Q over the last half
    std::vector<double> delivery_ratio;  ///< per RT user
    std::vector<double> y_over_k;

    double sum_throughput = 0.0;
    double avg_power = 0.0;
    double min_delivery = 1.0;
    double x_over_k = 0.0;
    double max_y_over_k = 0.0;

    bool power_ok = false;
    bool qos_ok = false;
    bool stability_ok = false;

    double gap_constant = 0.0;
    double gap_bound = 0.0;  ///< C/(L*Bmax)
    double mean_sets_evaluated = 0.0;
    std::size_t max_sets_evaluated = 0;
    std::size_t idle_slots = 0;
    std::size_t fell_through = 0;
    InvariantCounters invariants;
    double elapsed_seconds = 0.0;
    std::vector<std::string> warnings;

    std::vector<TraceSample> trace;
    std::vector<DecisionRecord> decisions;

    bool constraints_ok() const { return power_ok && qos_ok && stability_ok; }
    bool invariants_ok() const {
        return invariants.budget_violations == 0 && invariants.deadline_violations == 0 &&
               invariants.power_violations == 0;
    }
};

/// Tolerances of the constraint flags.
inline constexpr double kPowerSlack = 0.02;     ///< avg power <= Pavg (1 + 2%)
inline constexpr double kDeliverySlack = 0.02;  ///< delivery >= q - 0.02
inline constexpr double kStabilityLimit = 1e-3; ///< X/K and Y/K

/// Runs one simulation. The config is resolved and validated first.
RunReport run(SystemConfig config);

/// C = [sum_RT (q^2+1) + Pmax^2 + Pavg^2 + N_NR (L^2 + Ts^2 Rmax^2)] / 2.
double gap_constant(const SystemConfig& config);

}  // namespace rtsched
