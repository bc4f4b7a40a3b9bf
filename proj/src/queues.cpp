#include "rtsched/queues.hpp"

#include <algorithm>
#include <stdexcept>

namespace rtsched {

double update_data_queue(double q, double admitted_bits, double served_bits) {
    return std::max(0.0, q + admitted_bits - served_bits);
}

double update_virtual_y(double y, int arrival, double q_target, int served_indicator) {
    return std::max(0.0, y + arrival * q_target - served_indicator);
}

double update_virtual_x(double x, double slot_energy, double slot_len, double p_avg) {
    return std::max(0.0, x + slot_energy / slot_len - p_avg);
}

int admit(double q, int arrival, double b_max) { return (arrival != 0 && q < b_max) ? 1 : 0; }

double stability_statistic(std::span<const double> trace) {
    if (trace.empty()) throw std::invalid_argument("stability_statistic: empty trace");
    return trace.back() / static_cast<double>(trace.size());
}

MetricsTrace::MetricsTrace(std::size_t n_rt, std::size_t n_nrt, double packet_bits,
                           double slot_len, std::size_t burn_in)
    : packet_bits_(packet_bits),
      slot_len_(slot_len),
      burn_in_(burn_in),
      admitted_(n_nrt, 0.0),
      served_bits_(n_nrt, 0.0),
      queue_sum_(n_nrt, 0.0),
      rt_arrived_(n_rt, 0.0),
      rt_served_(n_rt, 0.0),
      last_(n_rt, n_nrt) {}

void MetricsTrace::record(std::size_t k, std::span<const NrtSlot> nrt, std::span<const RtSlot> rt,
                          double slot_energy, const QueueState& after) {
    ++seen_;
    last_ = after;
    if (k < burn_in_) return;
    ++counted_;
    for (std::size_t i = 0; i < nrt.size(); ++i) {
        admitted_[i] += nrt[i].admitted;
        served_bits_[i] += nrt[i].served_bits;
        queue_sum_[i] += nrt[i].queue_after;
    }
    for (std::size_t i = 0; i < rt.size(); ++i) {
        rt_arrived_[i] += rt[i].arrived;
        rt_served_[i] += rt[i].served;
    }
    energy_ += slot_energy;
}

namespace {
double mean(double sum, std::size_t n) { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
}  // namespace

double MetricsTrace::admitted_avg(std::size_t i) const { return mean(admitted_.at(i), counted_); }

double MetricsTrace::served_rate(std::size_t i) const {
    return mean(served_bits_.at(i), counted_) / (packet_bits_ * slot_len_);
}

double MetricsTrace::sum_throughput() const {
    double s = 0.0;
    for (std::size_t i = 0; i < admitted_.size(); ++i) s += served_rate(i);
    return s;
}

double MetricsTrace::delivery_ratio(std::size_t i) const {
    const double arrived = rt_arrived_.at(i);
    return arrived > 0.0 ? rt_served_[i] / arrived : 1.0;
}

double MetricsTrace::min_delivery_ratio() const {
    double m = 1.0;
    for (std::size_t i = 0; i < rt_arrived_.size(); ++i) m = std::min(m, delivery_ratio(i));
    return m;
}

double MetricsTrace::avg_power() const { return mean(energy_, counted_) / slot_len_; }

double MetricsTrace::mean_queue(std::size_t i) const { return mean(queue_sum_.at(i), counted_); }

double MetricsTrace::y_over_k(std::size_t i) const { return mean(last_.y_q.at(i), seen_); }

double MetricsTrace::max_y_over_k() const {
    double m = 0.0;
    for (std::size_t i = 0; i < last_.y_q.size(); ++i) m = std::max(m, y_over_k(i));
    return m;
}

double MetricsTrace::x_over_k() const { return mean(last_.x_q, seen_); }

}  // namespace rtsched
