#include "rtsched/sim_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace rtsched {

namespace {

void broadcast(std::vector<double>& v, std::size_t n, const char* field) {
    if (v.size() == 1 && n != 1) v.assign(n, v.front());
    else if (v.empty() && n > 0) throw ConfigError(field, "missing values");
    if (v.size() != n && n > 0)
        throw ConfigError(field, "expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    if (n == 0) v.clear();
}

void check(bool ok, const char* field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

bool finite(double v) { return std::isfinite(v); }

// Online least-squares slope of a series against the slot index.
struct SlopeFit {
    double n = 0, sk = 0, skk = 0, sv = 0, skv = 0;
    void add(double k, double v) {
        n += 1;
        sk += k;
        skk += k * k;
        sv += v;
        skv += k * v;
    }
    double slope() const {
        const double den = n * skk - sk * sk;
        return den > 0.0 ? (n * skv - sk * sv) / den : 0.0;
    }
};

}  // namespace

void SystemConfig::resolve() {
    broadcast(lambda_rt, n_rt, "lambda_rt");
    broadcast(q, n_rt, "q");
    broadcast(lambda_nrt, n_nrt, "lambda_nrt");
}

std::vector<std::string> SystemConfig::validate() const {
    std::vector<std::string> warnings;
    check(lambda_rt.size() == n_rt, "lambda_rt", "size must equal n_rt");
    check(lambda_nrt.size() == n_nrt, "lambda_nrt", "size must equal n_nrt");
    check(q.size() == n_rt, "q", "size must equal n_rt");
    for (double l : lambda_rt) check(l >= 0.0 && l <= 1.0, "lambda_rt", "must lie in [0,1]");
    for (double l : lambda_nrt) check(l >= 0.0 && l <= 1.0, "lambda_nrt", "must lie in [0,1]");
    for (double v : q) check(v >= 0.0 && v <= 1.0, "q", "must lie in [0,1]");
    check(finite(slot_len) && slot_len > 0.0, "slot_len", "must be > 0");
    check(finite(p_max) && p_max > 0.0, "p_max", "must be > 0");
    check(finite(p_avg) && p_avg >= 0.0, "p_avg", "must be >= 0");
    check(finite(b_max) && b_max > 0.0, "b_max", "must be > 0");
    check(horizon >= 1, "horizon", "must be >= 1");
    check(burn_in < horizon, "burn_in", "must be smaller than horizon");
    if (fixedp_rt_bias)
        check(*fixedp_rt_bias >= 0.0 && *fixedp_rt_bias <= 1.0, "fixedp.rt_bias", "must lie in [0,1]");
    check(trace_interval >= 1, "trace_interval", "must be >= 1");
    try {
        rt_packets.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("rt_packets", e.what());
    }
    try {
        nrt_packets.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("nrt_packets", e.what());
    }
    try {
        channel.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("channel", e.what());
    }
    if (scheduler == SchedulerKind::OnOff && channel.kind != ChannelModel::Kind::OnOff)
        throw ConfigError("scheduler", "onoff requires the on-off channel model");
    if (scheduler == SchedulerKind::Exhaustive && n_rt > kExhaustiveLimit)
        throw ConfigError("scheduler", "exhaustive supports at most 20 RT users");
    if (p_avg >= p_max) warnings.push_back("p_avg >= p_max: the average power constraint never binds");
    return warnings;
}

double gap_constant(const SystemConfig& config) {
    double rt = 0.0;
    for (std::size_t i = 0; i < config.n_rt; ++i) {
        const double qi = i < config.q.size() ? config.q[i] : config.q.empty() ? 0.0 : config.q.back();
        rt += qi * qi + 1.0;
    }
    const double r_max = std::log1p(config.p_max * config.channel.max_gain());
    const double l = config.nrt_packets.mean_bits();
    const double ts = config.slot_len;
    const double nrt = static_cast<double>(config.n_nrt) * (l * l + ts * ts * r_max * r_max);
    return 0.5 * (rt + config.p_max * config.p_max + config.p_avg * config.p_avg + nrt);
}

RunReport run(SystemConfig config) {
    config.resolve();
    RunReport rep;
    rep.warnings = config.validate();
    const auto start = std::chrono::steady_clock::now();

    const std::size_t nr = config.n_rt;
    const std::size_t nn = config.n_nrt;
    const double ts = config.slot_len;

    SlotSource source(config.seed, TrafficModel{config.lambda_rt, config.rt_packets},
                      TrafficModel{config.lambda_nrt, config.nrt_packets}, config.channel);
    RandomStream sched_rng(config.seed, StreamDomain::Scheduler, 0);

    QueueState state(nr, nn);
    MetricsTrace metrics(nr, nn, config.nrt_packets.mean_bits(), ts, config.burn_in);
    SlotRealization slot;
    std::vector<MetricsTrace::NrtSlot> nrt_slot(nn);
    std::vector<MetricsTrace::RtSlot> rt_slot(nr);
    std::vector<SlopeFit> slopes(nn);
    const std::size_t slope_from = config.horizon / 2;
    double sets_sum = 0.0;
    const double coin = config.fixedp_rt_bias.value_or(
        nr == 0 ? 0.0 : std::accumulate(config.q.begin(), config.q.end(), 0.0) / static_cast<double>(nr));

    for (std::size_t k = 0; k < config.horizon; ++k) {
        source.next(slot);
        EligibleSlotView view =
            make_view(state.y_q, slot.rt_arrivals, slot.rt_gains, slot.rt_bits, state.data_q,
                      slot.nrt_arrivals, slot.nrt_gains, slot.nrt_bits, state.x_q, ts, config.p_max,
                      config.b_max);
        view.admit_all = config.admit_all;
        view.fixedp_rt_bias = coin;
        view.fixedp_power_gate = config.fixedp_power_gate;

        const SlotDecision d = schedule(config.scheduler, view, sched_rng);

        if (!finite(d.objective) || !finite(d.phi)) throw NumericFault(k, "non-finite objective or multiplier");
        auto check_alloc = [&](const UserAllocation& a) {
            if (!finite(a.power) || !finite(a.duration)) throw NumericFault(k, "non-finite power or duration");
            if (a.power < 0.0 || a.power > config.p_max * (1.0 + 1e-12) || a.duration < 0.0)
                ++rep.invariants.power_violations;
        };
        for (const auto& a : d.rt) check_alloc(a);
        if (d.nrt) check_alloc(*d.nrt);
        if (d.total_duration() > ts + 1e-9) ++rep.invariants.budget_violations;
        const double obj = per_slot_objective(d, view);
        if (std::abs(obj - d.objective) > 1e-9 * std::max(1.0, std::abs(obj)))
            ++rep.invariants.objective_mismatches;

        std::fill(rt_slot.begin(), rt_slot.end(), MetricsTrace::RtSlot{});
        for (std::size_t i = 0; i < nr; ++i) rt_slot[i].arrived = slot.rt_arrivals[i];
        for (const auto& a : d.rt) {
            const double delivered = a.duration * rate(a.power, slot.rt_gains[a.user]);
            const double bits = slot.rt_bits[a.user];
            if (std::abs(delivered - bits) > 1e-9 * bits) ++rep.invariants.deadline_violations;
            rt_slot[a.user].served = 1;
        }

        for (std::size_t i = 0; i < nn; ++i) {
            const double q0 = state.data_q[i];
            const double in_bits = d.admissions[i] * slot.nrt_bits[i];
            double capacity = 0.0;
            if (d.nrt && d.nrt->user == i) capacity = d.nrt->duration * rate(d.nrt->power, slot.nrt_gains[i]);
            const double q1 = update_data_queue(q0, in_bits, capacity);
            state.data_q[i] = q1;
            nrt_slot[i].admitted = d.admissions[i];
            nrt_slot[i].served_bits = config.heavy_traffic ? capacity : q0 + in_bits - q1;
            nrt_slot[i].queue_after = q1;
            if (k >= slope_from) slopes[i].add(static_cast<double>(k), q1);
        }
        for (std::size_t i = 0; i < nr; ++i)
            state.y_q[i] = update_virtual_y(state.y_q[i], slot.rt_arrivals[i], config.q[i], rt_slot[i].served);
        const double energy = d.energy();
        state.x_q = update_virtual_x(state.x_q, energy, ts, config.p_avg);

        metrics.record(k, nrt_slot, rt_slot, energy, state);
        sets_sum += static_cast<double>(d.sets_evaluated);
        rep.max_sets_evaluated = std::max(rep.max_sets_evaluated, d.sets_evaluated);
        if (d.idle()) ++rep.idle_slots;
        if (d.fell_through) ++rep.fell_through;

        if (config.record_decisions) {
            DecisionRecord r;
            r.slot = k;
            r.rt_mask = d.rt_mask();
            r.nrt_pick = d.nrt ? static_cast<long>(d.nrt->user) : -1;
            r.phi = d.phi;
            r.objective = d.objective;
            r.sets_evaluated = d.sets_evaluated;
            r.rt_power.assign(nr, 0.0);
            r.rt_duration.assign(nr, 0.0);
            r.nrt_power.assign(nn, 0.0);
            r.nrt_duration.assign(nn, 0.0);
            for (const auto& a : d.rt) {
                r.rt_power[a.user] = a.power;
                r.rt_duration[a.user] = a.duration;
            }
            if (d.nrt) {
                r.nrt_power[d.nrt->user] = d.nrt->power;
                r.nrt_duration[d.nrt->user] = d.nrt->duration;
            }
            rep.decisions.push_back(std::move(r));
        }

        const std::size_t done = k + 1;
        if (done % config.trace_interval == 0 || done == config.horizon) {
            TraceSample s;
            s.slot = done;
            s.sum_throughput = metrics.sum_throughput();
            s.avg_power = metrics.avg_power();
            s.min_delivery = metrics.min_delivery_ratio();
            s.x = state.x_q;
            double lyap = state.x_q * state.x_q;
            for (double y : state.y_q) {
                s.max_y = std::max(s.max_y, y);
                lyap += y * y;
            }
            for (double qv : state.data_q) {
                s.max_queue = std::max(s.max_queue, qv);
                lyap += qv * qv;
            }
            s.lyapunov = 0.5 * lyap;
            rep.trace.push_back(s);
        }
    }

    rep.scheduler = std::string(to_string(config.scheduler));
    rep.horizon = config.horizon;
    rep.seed = config.seed;
    for (std::size_t i = 0; i < nn; ++i) {
        rep.admitted_avg.push_back(metrics.admitted_avg(i));
        rep.served_rate.push_back(metrics.served_rate(i));
        rep.mean_queue.push_back(metrics.mean_queue(i));
        rep.final_queue.push_back(state.data_q[i]);
        rep.queue_slope.push_back(slopes[i].slope());
    }
    for (std::size_t i = 0; i < nr; ++i) {
        rep.delivery_ratio.push_back(metrics.delivery_ratio(i));
        rep.y_over_k.push_back(metrics.y_over_k(i));
    }
    rep.sum_throughput = metrics.sum_throughput();
    rep.avg_power = metrics.avg_power();
    rep.min_delivery = metrics.min_delivery_ratio();
    rep.x_over_k = metrics.x_over_k();
    rep.max_y_over_k = metrics.max_y_over_k();

    rep.power_ok = rep.avg_power <= config.p_avg * (1.0 + kPowerSlack) + 1e-12;
    rep.qos_ok = true;
    for (std::size_t i = 0; i < nr; ++i)
        if (rep.delivery_ratio[i] < config.q[i] - kDeliverySlack) rep.qos_ok = false;
    rep.stability_ok = rep.x_over_k <= kStabilityLimit && rep.max_y_over_k <= kStabilityLimit;

    rep.gap_constant = gap_constant(config);
    rep.gap_bound = rep.gap_constant / (config.nrt_packets.mean_bits() * config.b_max);
    rep.mean_sets_evaluated = sets_sum / static_cast<double>(config.horizon);
    rep.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

}  // namespace rtsched
