#pragma once

// Data queues, virtual queues, admission control and running averages.

#include <cstddef>
#include <span>
#include <vector>

namespace rtsched {

/// Q_i(k+1) = (Q_i(k) + admitted - served)^+
double update_data_queue(double q, double admitted_bits, double served_bits);

/// Y_i(k+1) = (Y_i(k) + a_i(k) q_i - 1{scheduled})^+
double update_virtual_y(double y, int arrival, double q_target, int served_indicator);

/// X(k+1) = (X(k) + energy/Ts - Pavg)^+
double update_virtual_x(double x, double slot_energy, double slot_len, double p_avg);

/// Admission rule: admit the arrival iff the backlog is below Bmax.
int admit(double q, int arrival, double b_max);

/// Final value over horizon, the empirical mean-rate-stability proxy.
double stability_statistic(std::span<const double> trace);

struct QueueState {
    std::vector<double> data_q;  ///< per NRT user, bits
    std::vector<double> y_q;     ///< per RT user
    double x_q = 0.0;

    QueueState() = default;
    QueueState(std::size_t n_rt, std::size_t n_nrt) : data_q(n_nrt, 0.0), y_q(n_rt, 0.0) {}
};

/// Running time averages collected by the simulator. Slots before `burn_in`
/// update the queues but are excluded from the averages.
class MetricsTrace {
public:
    MetricsTrace() = default;
    MetricsTrace(std::size_t n_rt, std::size_t n_nrt, double packet_bits, double slot_len,
                 std::size_t burn_in = 0);

    struct NrtSlot {
        int admitted = 0;
        double served_bits = 0.0;
        double queue_after = 0.0;
    };
    struct RtSlot {
        int arrived = 0;
        int served = 0;
    };

    /// Record slot `k` (0-based) after queue updates.
    void record(std::size_t k, std::span<const NrtSlot> nrt, std::span<const RtSlot> rt,
                double slot_energy, const QueueState& after);

    std::size_t slots_counted() const { return counted_; }
    std::size_t slots_seen() const { return seen_; }

    double admitted_avg(std::size_t nrt) const;
    /// mean of mu*R/(L*Ts)
    double served_rate(std::size_t nrt) const;
    double sum_throughput() const;
    /// served / arrived; 1 when nothing arrived
    double delivery_ratio(std::size_t rt) const;
    double min_delivery_ratio() const;
    double avg_power() const;
    double mean_queue(std::size_t nrt) const;

    /// Y_i(K)/K
    double y_over_k(std::size_t rt) const;
    double max_y_over_k() const;
    /// X(K)/K
    double x_over_k() const;

    std::size_t n_rt() const { return rt_arrived_.size(); }
    std::size_t n_nrt() const { return admitted_.size(); }

private:
    double packet_bits_ = 1.0;
    double slot_len_ = 1.0;
    std::size_t burn_in_ = 0;
    std::size_t seen_ = 0;
    std::size_t counted_ = 0;

    std::vector<double> admitted_;
    std::vector<double> served_bits_;
    std::vector<double> queue_sum_;
    std::vector<double> rt_arrived_;
    std::vector<double> rt_served_;
    double energy_ = 0.0;
    QueueState last_;
};

}  // namespace rtsched
