#include "rtsched/capacity_probe.hpp"

#include "rtsched/linear_program.hpp"
#include "rtsched/math_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtsched {

namespace {

constexpr double kScaleCap = 1e6;

struct Outcome {
    double value;
    double prob;
};

std::vector<Outcome> gain_outcomes(const ChannelModel& ch) {
    if (ch.kind == ChannelModel::Kind::OnOff) return {{0.0, 1.0 - ch.p_on}, {1.0, ch.p_on}};
    std::vector<Outcome> out;
    for (std::size_t i = 0; i < ch.states.size(); ++i) out.push_back({ch.states[i], ch.probs[i]});
    return out;
}

std::vector<Outcome> arrival_outcomes(double lambda) {
    if (lambda <= 0.0) return {{0.0, 1.0}};
    if (lambda >= 1.0) return {{1.0, 1.0}};
    return {{0.0, 1.0 - lambda}, {1.0, lambda}};
}

struct JointState {
    double prob = 1.0;
    std::vector<double> gains;
    std::vector<int> arrivals;
};

// Mixed-radix enumeration of (per-user gain, per-RT arrival) outcomes.
std::vector<JointState> enumerate_states(const RegionQuery& q) {
    const std::size_t nr = q.lambda_rt.size();
    const std::size_t nn = q.lambda_nrt.size();
    const auto g = gain_outcomes(q.channel);
    std::vector<std::vector<Outcome>> digits;
    for (std::size_t i = 0; i < nr + nn; ++i) digits.push_back(g);
    for (std::size_t i = 0; i < nr; ++i) digits.push_back(arrival_outcomes(q.lambda_rt[i]));

    std::vector<JointState> out;
    std::vector<std::size_t> idx(digits.size(), 0);
    while (true) {
        JointState s;
        s.gains.resize(nr + nn);
        s.arrivals.resize(nr);
        for (std::size_t d = 0; d < digits.size(); ++d) {
            const Outcome& o = digits[d][idx[d]];
            s.prob *= o.prob;
            if (d < nr + nn) s.gains[d] = o.value;
            else s.arrivals[d - nr - nn] = static_cast<int>(o.value);
        }
        if (s.prob > 0.0) out.push_back(std::move(s));
        std::size_t d = 0;
        while (d < digits.size() && ++idx[d] == digits[d].size()) idx[d++] = 0;
        if (d == digits.size()) break;
    }
    return out;
}

struct Var {
    std::size_t state, user, level;
};

double compute_slacks(const RegionQuery& query, RegionCertificate& cert);

}  // namespace

void RegionQuery::validate() const {
    auto req = [](bool ok, const char* msg) {
        if (!ok) throw std::invalid_argument(msg);
    };
    req(lambda_rt.size() == q.size(), "region: lambda_rt and q differ in length");
    for (double l : lambda_nrt) req(std::isfinite(l) && l >= 0.0, "region: lambda_nrt must be >= 0");
    for (double l : lambda_rt) req(l >= 0.0 && l <= 1.0, "region: lambda_rt must lie in [0,1]");
    for (double v : q) req(v >= 0.0 && v <= 1.0, "region: q must lie in [0,1]");
    req(packet_bits > 0.0 && slot_len > 0.0, "region: packet_bits and slot_len must be > 0");
    req(p_max > 0.0 && p_avg >= 0.0, "region: need p_max > 0 and p_avg >= 0");
    req(grid_levels >= 2, "region: grid_levels must be >= 2");
    req(channel.kind != ChannelModel::Kind::Rayleigh, "region: fading must be discrete");
    channel.validate();
}

std::vector<double> RegionQuery::power_grid() const {
    std::vector<double> grid{0.0};
    const std::size_t n = grid_levels - 1;
    const double lo = p_max * 1e-3;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = n == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        grid.push_back(lo * std::pow(p_max / lo, f));
    }
    grid.back() = p_max;
    if (p_avg > 0.0 && p_avg < p_max) grid.push_back(p_avg);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    return grid;
}

std::size_t RegionQuery::joint_states() const {
    const std::size_t per_user = channel.kind == ChannelModel::Kind::OnOff ? 2 : channel.states.size();
    double count = 1.0;
    for (std::size_t i = 0; i < lambda_rt.size() + lambda_nrt.size(); ++i) count *= static_cast<double>(per_user);
    for (double l : lambda_rt)
        if (l > 0.0 && l < 1.0) count *= 2.0;
    return count > 1e18 ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(count);
}

double RegionCertificate::min_slack() const {
    double m = std::min(budget_slack, power_slack);
    for (double s : nrt_slack) m = std::min(m, s);
    for (double s : rt_slack) m = std::min(m, s);
    return m;
}

RegionResult in_lambert_region(const RegionQuery& query) {
    query.validate();
    if (query.joint_states() > query.max_joint_states)
        throw RegionGuardError("region: " + std::to_string(query.joint_states()) +
                               " joint states exceed the guard of " + std::to_string(query.max_joint_states));
    const std::size_t nr = query.lambda_rt.size();
    const std::size_t nn = query.lambda_nrt.size();
    const auto states = enumerate_states(query);
    const auto grid = query.power_grid();
    const double L = query.packet_bits;
    const double ts = query.slot_len;

    std::vector<Var> vars;
    for (std::size_t m = 0; m < states.size(); ++m)
        for (std::size_t u = 0; u < nr + nn; ++u) {
            if (states[m].gains[u] <= 0.0) continue;
            if (u < nr && states[m].arrivals[u] == 0) continue;
            for (std::size_t g = 0; g < grid.size(); ++g)
                if (grid[g] > 0.0) vars.push_back({m, u, g});
        }
    const std::size_t s_var = vars.size();
    LinearProgram lp(vars.size() + 1);
    lp.objective[s_var] = 1.0;

    auto bits_per_sec = [&](const Var& v) { return rate(grid[v.level], states[v.state].gains[v.user]); };

    std::vector<LpRow> budget(states.size());
    std::vector<LpRow> rt_cap(states.size() * nr);
    std::vector<LpRow> rt_rate(nr), nrt_rate(nn);
    LpRow power;
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const Var& v = vars[j];
        const double pi = states[v.state].prob;
        const double pkts = bits_per_sec(v) / L;
        budget[v.state].terms.push_back({j, 1.0});
        power.terms.push_back({j, pi * grid[v.level] / ts});
        if (v.user < nr) {
            rt_cap[v.state * nr + v.user].terms.push_back({j, pkts});
            rt_rate[v.user].terms.push_back({j, pi * pkts});
        } else {
            nrt_rate[v.user - nr].terms.push_back({j, pi * pkts});
        }
    }
    for (auto& r : budget) {
        r.sense = RowSense::LessEqual;
        r.rhs = ts;
        if (!r.terms.empty()) lp.add_row(std::move(r));
    }
    for (auto& r : rt_cap) {
        r.sense = RowSense::LessEqual;
        r.rhs = 1.0;
        if (!r.terms.empty()) lp.add_row(std::move(r));
    }
    for (std::size_t i = 0; i < nr; ++i) {
        LpRow r = std::move(rt_rate[i]);
        r.sense = RowSense::GreaterEqual;
        r.rhs = query.q[i] * query.lambda_rt[i];
        lp.add_row(std::move(r));
    }
    for (std::size_t i = 0; i < nn; ++i) {
        LpRow r = std::move(nrt_rate[i]);
        r.terms.push_back({s_var, -query.lambda_nrt[i]});
        r.sense = RowSense::GreaterEqual;
        r.rhs = 0.0;
        lp.add_row(std::move(r));
    }
    power.sense = RowSense::LessEqual;
    power.rhs = query.p_avg;
    if (!power.terms.empty()) lp.add_row(std::move(power));
    lp.add_row({{{s_var, 1.0}}, RowSense::LessEqual, kScaleCap});

    const LpResult sol = solve_lp(lp);
    RegionResult res;
    if (sol.status == LpStatus::Infeasible) return res;
    if (sol.status != LpStatus::Optimal) throw std::runtime_error("region: LP solve did not converge");
    res.rt_feasible = true;
    res.scale = sol.x[s_var];
    res.margin = res.scale - 1.0;
    res.inside = res.scale >= 1.0 - 1e-12;
    if (!res.inside) return res;

    RegionCertificate cert;
    cert.states.resize(states.size());
    for (std::size_t m = 0; m < states.size(); ++m) {
        auto& a = cert.states[m];
        a.prob = states[m].prob;
        a.gains = states[m].gains;
        a.rt_arrivals = states[m].arrivals;
        a.time.assign(nr + nn, 0.0);
        a.energy.assign(nr + nn, 0.0);
        a.bits.assign(nr + nn, 0.0);
    }
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const Var& v = vars[j];
        const double t = sol.x[j];
        if (t <= 0.0) continue;
        auto& a = cert.states[v.state];
        a.time[v.user] += t;
        a.energy[v.user] += t * grid[v.level];
        a.bits[v.user] += t * bits_per_sec(v);
    }
    compute_slacks(query, cert);
    res.certificate = std::move(cert);
    return res;
}

namespace {

// Recomputes the stored slacks of `cert`; returns the smallest slack including
// the physical consistency checks.
double compute_slacks(const RegionQuery& query, RegionCertificate& cert) {
    const std::size_t nr = query.lambda_rt.size();
    const std::size_t nn = query.lambda_nrt.size();
    const double L = query.packet_bits;
    const double ts = query.slot_len;

    cert.budget_slack = ts;
    cert.nrt_slack.assign(nn, 0.0);
    cert.rt_slack.assign(nr, 0.0);
    double avg_power = 0.0;
    double physical = 0.0;  // worst of: mixed powers within [0, Pmax], bits <= time * rate(mean power)
    for (const auto& a : cert.states) {
        double used = 0.0;
        for (std::size_t u = 0; u < nr + nn; ++u) {
            used += a.time[u];
            avg_power += a.prob * a.energy[u] / ts;
            if (u < nr) {
                cert.rt_slack[u] += a.prob * a.bits[u] / L;
                physical = std::min(physical, 1.0 - a.bits[u] / L);
                if (a.rt_arrivals[u] == 0 && a.bits[u] > 0.0) physical = std::min(physical, -a.bits[u]);
            } else {
                cert.nrt_slack[u - nr] += a.prob * a.bits[u] / L;
            }
            if (a.time[u] > 0.0) {
                const double p = a.energy[u] / a.time[u];
                physical = std::min(physical, query.p_max * (1.0 + 1e-12) - p);
                physical = std::min(physical, a.time[u] * rate(p, a.gains[u]) - a.bits[u] + 1e-12);
            } else if (a.bits[u] > 0.0) {
                physical = std::min(physical, -a.bits[u]);
            }
        }
        cert.budget_slack = std::min(cert.budget_slack, ts - used);
    }
    for (std::size_t i = 0; i < nn; ++i) cert.nrt_slack[i] -= query.lambda_nrt[i];
    for (std::size_t i = 0; i < nr; ++i) cert.rt_slack[i] -= query.q[i] * query.lambda_rt[i];
    cert.power_slack = query.p_avg - avg_power;
    return std::min(cert.min_slack(), physical);
}

}  // namespace

double verify_certificate(const RegionQuery& query, const RegionCertificate& cert) {
    RegionCertificate copy = cert;
    return compute_slacks(query, copy);
}

BoundaryPoint boundary_along_ray(RegionQuery query, const std::vector<double>& direction, double rel_tol) {
    if (direction.size() != query.lambda_nrt.size())
        throw std::invalid_argument("boundary_along_ray: direction size must equal the NRT user count");
    BoundaryPoint bp;
    bp.direction = direction;
    query.lambda_nrt = direction;
    const RegionResult direct = in_lambert_region(query);
    ++bp.probes;
    bp.lp_scale = direct.rt_feasible ? direct.scale : 0.0;

    auto inside = [&](double s) {
        for (std::size_t i = 0; i < direction.size(); ++i) query.lambda_nrt[i] = s * direction[i];
        ++bp.probes;
        return in_lambert_region(query).inside;
    };

    double lo = 0.0, hi = 1.0;
    if (bp.lp_scale > 0.0) {
        std::size_t doublings = 0;
        while (inside(hi) && doublings++ < 60) {
            lo = hi;
            hi *= 2.0;
        }
        while (hi - lo > rel_tol * hi) {
            const double mid = 0.5 * (lo + hi);
            if (inside(mid)) lo = mid;
            else hi = mid;
        }
    }
    bp.scale = lo;
    bp.lambda = direction;
    for (auto& v : bp.lambda) v *= lo;
    return bp;
}

StabilityResult stress_stability(const RegionQuery& query, SchedulerKind scheduler, std::size_t horizon,
                                 std::uint64_t seed, double slope_tol) {
    query.validate();
    if (scheduler != SchedulerKind::LambertStrict && scheduler != SchedulerKind::OnOff)
        throw std::invalid_argument("stress_stability: scheduler must be lambert_strict or onoff");
    for (double l : query.lambda_nrt)
        if (l > 1.0) throw std::invalid_argument("stress_stability: Bernoulli arrivals need lambda <= 1");

    SystemConfig c;
    c.n_rt = query.lambda_rt.size();
    c.n_nrt = query.lambda_nrt.size();
    c.lambda_rt = query.lambda_rt;
    c.lambda_nrt = query.lambda_nrt;
    c.q = query.q;
    c.rt_packets.bits = query.packet_bits;
    c.nrt_packets.bits = query.packet_bits;
    c.slot_len = query.slot_len;
    c.p_avg = query.p_avg;
    c.p_max = query.p_max;
    c.channel = query.channel;
    if (scheduler == SchedulerKind::OnOff && c.channel.kind == ChannelModel::Kind::Discrete) {
        double p_on = 0.0;
        for (std::size_t i = 0; i < c.channel.states.size(); ++i) {
            if (c.channel.states[i] == 1.0) p_on += c.channel.probs[i];
            else if (c.channel.states[i] != 0.0)
                throw std::invalid_argument("stress_stability: onoff needs gains in {0,1}");
        }
        c.channel = ChannelModel::on_off(p_on);
    }
    c.scheduler = scheduler;
    c.horizon = horizon;
    c.seed = seed;
    c.admit_all = true;
    c.trace_interval = horizon;

    StabilityResult res;
    res.report = run(c);
    for (double s : res.report.queue_slope) res.max_slope = std::max(res.max_slope, s);
    res.verdict = res.max_slope <= slope_tol * query.packet_bits ? StabilityVerdict::Stable
                                                                 : StabilityVerdict::Unstable;
    return res;
}

}  // namespace rtsched
