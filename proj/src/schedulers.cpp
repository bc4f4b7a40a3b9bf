#include "rtsched/schedulers.hpp"

#include "rtsched/queues.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rtsched {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Strictly better set: larger objective, then fewer members, then the
// lexicographically smaller list of users.
bool better(double obj_a, const std::vector<std::size_t>& a, double obj_b,
            const std::vector<std::size_t>& b) {
    if (obj_a != obj_b) return obj_a > obj_b;
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

struct Best {
    bool found = false;
    double objective = -kInf;
    std::vector<std::size_t> members;
    SetValue value;

    void offer(std::vector<std::size_t> m, SetValue v) {
        if (!v.feasible) return;
        if (!found || better(v.objective, m, objective, members)) {
            found = true;
            objective = v.objective;
            members = std::move(m);
            value = std::move(v);
        }
    }
};

double phi_tilde_at_zero(const EligibleSlotView& view, double psi) {
    if (view.x <= 0.0) return kInf;
    return psi * view.slot_len / view.x;
}

double set_objective(const EligibleSlotView& view, std::span<const std::size_t> members,
                     const std::vector<double>& powers, const std::vector<double>& durations,
                     double psi, double* nrt_time) {
    double obj = 0.0;
    double used = 0.0;
    for (std::size_t j = 0; j < members.size(); ++j) {
        obj += view.rt[members[j]].y - view.x * powers[j] * durations[j] / view.slot_len;
        used += durations[j];
    }
    const double left = std::max(0.0, view.slot_len - used);
    if (nrt_time) *nrt_time = left;
    return obj + psi * left;
}

SlotDecision build_decision(const EligibleSlotView& view, const NrtChoice& nrt, const Best& best,
                            std::size_t evaluated) {
    SlotDecision d;
    d.sets_evaluated = evaluated;
    if (!best.found) throw std::logic_error("scheduler found no feasible set");
    const SetValue& v = best.value;
    for (std::size_t j = 0; j < best.members.size(); ++j)
        d.rt.push_back({view.rt[best.members[j]].user, v.powers[j], v.durations[j]});
    std::sort(d.rt.begin(), d.rt.end(),
              [](const UserAllocation& a, const UserAllocation& b) { return a.user < b.user; });
    d.phi = v.phi;
    d.objective = v.objective;
    if (nrt.index && v.nrt_time > 1e-12 * view.slot_len) {
        d.nrt = UserAllocation{view.nrt[*nrt.index].user, nrt.power, v.nrt_time};
        d.psi_nr = nrt.psi;
    }
    apply_admissions(view, d);
    return d;
}

}  // namespace

std::string_view to_string(SchedulerKind k) {
    switch (k) {
    case SchedulerKind::OnOff: return "onoff";
    case SchedulerKind::LambertStrict: return "lambert_strict";
    case SchedulerKind::Exhaustive: return "exhaustive";
    case SchedulerKind::FixedP: return "fixedp";
    case SchedulerKind::HeteroHeuristic: return "hetero_heuristic";
    }
    return "unknown";
}

SchedulerKind scheduler_from_string(std::string_view name) {
    const std::string n = lower(name);
    if (n == "onoff" || n == "on_off") return SchedulerKind::OnOff;
    if (n == "lambert_strict" || n == "lambert") return SchedulerKind::LambertStrict;
    if (n == "exhaustive") return SchedulerKind::Exhaustive;
    if (n == "fixedp" || n == "fixed_p") return SchedulerKind::FixedP;
    if (n == "hetero_heuristic" || n == "hetero") return SchedulerKind::HeteroHeuristic;
    throw std::invalid_argument("unknown scheduler '" + std::string(name) + "'");
}

EligibleSlotView make_view(std::span<const double> y, std::span<const int> rt_arrivals,
                           std::span<const double> rt_gains, std::span<const double> rt_bits,
                           std::span<const double> queues, std::span<const int> nrt_arrivals,
                           std::span<const double> nrt_gains, std::span<const double> nrt_bits,
                           double x, double slot_len, double p_max, double b_max) {
    const std::size_t nr = y.size();
    const std::size_t nn = queues.size();
    if (rt_arrivals.size() != nr || rt_gains.size() != nr || rt_bits.size() != nr)
        throw std::invalid_argument("make_view: RT inputs differ in length");
    if (nrt_arrivals.size() != nn || nrt_gains.size() != nn || nrt_bits.size() != nn)
        throw std::invalid_argument("make_view: NRT inputs differ in length");
    EligibleSlotView v;
    v.x = x;
    v.slot_len = slot_len;
    v.p_max = p_max;
    v.b_max = b_max;
    for (std::size_t i = 0; i < nr; ++i)
        if (rt_arrivals[i] != 0 && rt_gains[i] > 0.0) v.rt.push_back({i, y[i], rt_gains[i], rt_bits[i]});
    v.nrt.reserve(nn);
    for (std::size_t i = 0; i < nn; ++i)
        v.nrt.push_back({i, queues[i], nrt_gains[i], nrt_arrivals[i], nrt_bits[i]});
    return v;
}

double SlotDecision::total_duration() const {
    double t = 0.0;
    for (const auto& a : rt) t += a.duration;
    if (nrt) t += nrt->duration;
    return t;
}

double SlotDecision::energy() const {
    double e = 0.0;
    for (const auto& a : rt) e += a.power * a.duration;
    if (nrt) e += nrt->power * nrt->duration;
    return e;
}

std::uint64_t SlotDecision::rt_mask() const {
    std::uint64_t m = 0;
    for (const auto& a : rt)
        if (a.user < 64) m |= std::uint64_t{1} << a.user;
    return m;
}

NrtChoice select_nrt(const EligibleSlotView& view, RandomStream& rng) {
    std::vector<double> psi(view.nrt.size(), 0.0);
    std::vector<double> power(view.nrt.size(), 0.0);
    double best = 0.0;
    for (std::size_t i = 0; i < view.nrt.size(); ++i) {
        const auto& c = view.nrt[i];
        if (c.queue <= 0.0 || c.gain <= 0.0) continue;
        PowerPolicyInput in{c.queue, view.x, c.gain, view.p_max, view.slot_len, c.packet_bits};
        power[i] = waterfilling_power(in);
        psi[i] = psi_nr_star(in);
        best = std::max(best, psi[i]);
    }
    NrtChoice out;
    if (!(best > 0.0)) return out;
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < psi.size(); ++i)
        if (psi[i] > 0.0 && psi[i] >= best * (1.0 - 1e-12)) ties.push_back(i);
    const std::size_t pick = ties.size() == 1 ? ties[0] : ties[rng.below(ties.size())];
    out.index = pick;
    out.power = power[pick];
    out.psi = psi[pick];
    return out;
}

std::vector<std::size_t> order_by_y(const EligibleSlotView& view) {
    std::vector<std::size_t> order(view.rt.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return view.rt[a].y > view.rt[b].y; });
    return order;
}

std::vector<std::size_t> heterogeneous_order(const EligibleSlotView& view) {
    std::vector<std::size_t> order(view.rt.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) { return view.rt[i].y * view.rt[i].gain / view.rt[i].packet_bits; };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) > key(b); });
    return order;
}

std::vector<std::vector<std::size_t>> candidate_prefixes(std::span<const std::size_t> order) {
    std::vector<std::vector<std::size_t>> out;
    out.reserve(order.size() + 1);
    out.emplace_back();
    for (std::size_t k = 1; k <= order.size(); ++k) out.emplace_back(order.begin(), order.begin() + k);
    return out;
}

// Swapping j for i keeps j's airtime and needs less power only if i's packet is no longer.
bool dominates(const RtCandidate& i, const RtCandidate& j) {
    return i.y > j.y && i.gain > j.gain && i.packet_bits <= j.packet_bits;
}

bool dominated_set(const EligibleSlotView& view, std::span<const std::size_t> members) {
    std::vector<char> in(view.rt.size(), 0);
    for (auto m : members) in.at(m) = 1;
    for (auto j : members)
        for (std::size_t i = 0; i < view.rt.size(); ++i)
            if (!in[i] && dominates(view.rt[i], view.rt[j])) return true;
    return false;
}

SetEvaluator::SetEvaluator(const EligibleSlotView& view, const NrtChoice& nrt)
    : view_(view), psi_(nrt.index ? nrt.psi : 0.0) {
    const double pt = phi_tilde_at_zero(view, psi_);
    power0_.resize(view.rt.size());
    duration0_.resize(view.rt.size());
    for (std::size_t i = 0; i < view.rt.size(); ++i) {
        const auto& c = view.rt[i];
        power0_[i] = lambert_rt_power(pt, c.gain, view.p_max);
        const double r = rate(power0_[i], c.gain);
        duration0_[i] = r > 0.0 ? c.packet_bits / r : kInf;
    }
}

SetValue SetEvaluator::evaluate(std::span<const std::size_t> members) const {
    SetValue v;
    const std::size_t n = members.size();
    v.powers.resize(n);
    v.durations.resize(n);
    double used = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        v.powers[j] = power0_[members[j]];
        v.durations[j] = duration0_[members[j]];
        used += v.durations[j];
    }
    if (used > view_.slot_len) {
        std::vector<RtLink> links(n);
        for (std::size_t j = 0; j < n; ++j)
            links[j] = {view_.rt[members[j]].gain, view_.rt[members[j]].packet_bits};
        auto sol = try_solve_phi(links, view_.x, psi_, view_.slot_len, view_.p_max);
        if (!sol) return v;
        v.phi = sol->phi;
        v.powers = std::move(sol->powers);
        v.durations = std::move(sol->durations);
    }
    v.feasible = true;
    v.objective = set_objective(view_, members, v.powers, v.durations, psi_, &v.nrt_time);
    return v;
}

SetValue evaluate_onoff_set(const EligibleSlotView& view, const NrtChoice& nrt,
                            std::span<const std::size_t> members) {
    SetValue v;
    const std::size_t n = members.size();
    const double psi = nrt.index ? nrt.psi : 0.0;
    v.powers.assign(n, 0.0);
    v.durations.assign(n, 0.0);
    if (n == 0) {
        v.feasible = true;
        v.objective = set_objective(view, members, v.powers, v.durations, psi, &v.nrt_time);
        return v;
    }
    double bits = 0.0;
    for (auto m : members) bits += view.rt[m].packet_bits;

    double p = lambert_rt_power(phi_tilde_at_zero(view, psi), 1.0, view.p_max);
    double r = rate(p, 1.0);
    if (!(r > 0.0 && bits / r <= view.slot_len)) {
        p = rt_only_power_bits(bits, view.slot_len);
        if (p > view.p_max * (1.0 + 1e-12)) return v;
        p = std::min(p, view.p_max);
        r = rate(p, 1.0);
        // Multiplier at which the Lambert rule reproduces p.
        if (view.x > 0.0) {
            const double u = 1.0 + p;
            const double pt = (std::log(u) - 1.0) * u + 1.0;
            v.phi = std::max(0.0, pt * view.x / view.slot_len - psi);
        }
    }
    for (std::size_t j = 0; j < n; ++j) {
        v.powers[j] = p;
        v.durations[j] = view.rt[members[j]].packet_bits / r;
    }
    v.feasible = true;
    v.objective = set_objective(view, members, v.powers, v.durations, psi, &v.nrt_time);
    return v;
}

SlotDecision schedule_onoff(const EligibleSlotView& view, RandomStream& rng) {
    for (const auto& c : view.rt)
        if (c.gain != 1.0) throw std::invalid_argument("schedule_onoff: RT gains must be 1");
    const NrtChoice nrt = select_nrt(view, rng);
    Best best;
    std::size_t evaluated = 0;
    for (auto& prefix : candidate_prefixes(order_by_y(view))) {
        ++evaluated;
        std::sort(prefix.begin(), prefix.end());
        SetValue v = evaluate_onoff_set(view, nrt, prefix);
        best.offer(std::move(prefix), std::move(v));
    }
    return build_decision(view, nrt, best, evaluated);
}

SlotDecision schedule_lambert_strict(const EligibleSlotView& view, RandomStream& rng) {
    const NrtChoice nrt = select_nrt(view, rng);
    const SetEvaluator eval(view, nrt);
    const std::size_t n = view.rt.size();

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (view.rt[a].y != view.rt[b].y) return view.rt[a].y > view.rt[b].y;
        return view.rt[a].gain > view.rt[b].gain;
    });
    // Dominators of every user; they always precede it in `order`.
    std::vector<std::vector<std::size_t>> dominators(n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i)
            if (dominates(view.rt[i], view.rt[j])) dominators[j].push_back(i);

    Best best;
    std::size_t evaluated = 0;
    std::vector<char> in(n, 0);
    auto visit = [&](auto&& self, std::size_t t) -> void {
        if (t == n) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i)
                if (in[i]) members.push_back(i);
            ++evaluated;
            SetValue v = eval.evaluate(members);
            best.offer(std::move(members), std::move(v));
            return;
        }
        const std::size_t u = order[t];
        self(self, t + 1);
        for (auto d : dominators[u])
            if (!in[d]) return;
        in[u] = 1;
        self(self, t + 1);
        in[u] = 0;
    };
    visit(visit, 0);
    return build_decision(view, nrt, best, evaluated);
}

SlotDecision schedule_exhaustive(const EligibleSlotView& view, RandomStream& rng) {
    const std::size_t n = view.rt.size();
    if (n > kExhaustiveLimit)
        throw std::invalid_argument("schedule_exhaustive: at most 20 eligible RT users supported");
    const NrtChoice nrt = select_nrt(view, rng);
    const SetEvaluator eval(view, nrt);
    Best best;
    const std::uint64_t count = std::uint64_t{1} << n;
    std::vector<std::size_t> members;
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        members.clear();
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1U) members.push_back(i);
        SetValue v = eval.evaluate(members);
        best.offer(members, std::move(v));
    }
    return build_decision(view, nrt, best, static_cast<std::size_t>(count));
}

SlotDecision schedule_hetero_heuristic(const EligibleSlotView& view, RandomStream& rng) {
    const NrtChoice nrt = select_nrt(view, rng);
    const SetEvaluator eval(view, nrt);
    Best best;
    std::size_t evaluated = 0;
    for (auto& prefix : candidate_prefixes(heterogeneous_order(view))) {
        ++evaluated;
        std::sort(prefix.begin(), prefix.end());
        SetValue v = eval.evaluate(prefix);
        best.offer(std::move(prefix), std::move(v));
    }
    return build_decision(view, nrt, best, evaluated);
}

SlotDecision schedule_fixedp(const EligibleSlotView& view, RandomStream& rng) {
    SlotDecision d;
    const bool rt_branch = rng.uniform() < view.fixedp_rt_bias;
    // Exactly one more draw per slot, so coin sequences line up across user counts.
    std::uint64_t tie_state = rng.next();
    auto tie_below = [&](std::size_t n) {
        tie_state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = tie_state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<std::size_t>((z ^ (z >> 31)) % n);
    };
    const bool gated = view.fixedp_power_gate && view.x > 0.0;

    auto serve_rt = [&]() {
        // Random order first so the stable Y sort breaks ties uniformly.
        std::vector<std::size_t> order(view.rt.size());
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[tie_below(k)]);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return view.rt[a].y > view.rt[b].y; });
        double used = 0.0;
        for (auto i : order) {
            const auto& c = view.rt[i];
            const double mu = c.packet_bits / rate(view.p_max, c.gain);
            if (used + mu > view.slot_len * (1.0 + 1e-12)) break;
            used += mu;
            d.rt.push_back({c.user, view.p_max, mu});
        }
        std::sort(d.rt.begin(), d.rt.end(),
                  [](const UserAllocation& a, const UserAllocation& b) { return a.user < b.user; });
        return !d.rt.empty();
    };
    auto serve_nrt = [&]() {
        std::optional<std::size_t> pick;
        for (std::size_t i = 0; i < view.nrt.size(); ++i) {
            const auto& c = view.nrt[i];
            if (c.queue <= 0.0 || c.gain <= 0.0) continue;
            if (!pick || c.queue > view.nrt[*pick].queue) pick = i;
        }
        if (!pick) return false;
        const auto& c = view.nrt[*pick];
        d.nrt = UserAllocation{c.user, view.p_max, view.slot_len};
        d.psi_nr = c.queue * rate(view.p_max, c.gain) - view.x * view.p_max / view.slot_len;
        return true;
    };

    if (!gated) {
        // A branch the coin can never pick is never used as a fallback.
        if (rt_branch) {
            if (!serve_rt() && view.fixedp_rt_bias < 1.0) d.fell_through = serve_nrt();
        } else if (!serve_nrt() && view.fixedp_rt_bias > 0.0) {
            d.fell_through = serve_rt();
        }
    }
    d.sets_evaluated = 1;
    d.objective = per_slot_objective(d, view);
    apply_admissions(view, d);
    return d;
}

SlotDecision schedule(SchedulerKind kind, const EligibleSlotView& view, RandomStream& rng) {
    switch (kind) {
    case SchedulerKind::OnOff: return schedule_onoff(view, rng);
    case SchedulerKind::LambertStrict: return schedule_lambert_strict(view, rng);
    case SchedulerKind::Exhaustive: return schedule_exhaustive(view, rng);
    case SchedulerKind::FixedP: return schedule_fixedp(view, rng);
    case SchedulerKind::HeteroHeuristic: return schedule_hetero_heuristic(view, rng);
    }
    throw std::invalid_argument("unknown scheduler kind");
}

void apply_admissions(const EligibleSlotView& view, SlotDecision& decision) {
    decision.admissions.resize(view.nrt.size());
    for (std::size_t i = 0; i < view.nrt.size(); ++i) {
        const auto& c = view.nrt[i];
        decision.admissions[i] = view.admit_all ? (c.arrival != 0 ? 1 : 0) : admit(c.queue, c.arrival, view.b_max);
    }
}

double per_slot_objective(const SlotDecision& decision, const EligibleSlotView& view) {
    double obj = 0.0;
    for (const auto& a : decision.rt) {
        auto it = std::find_if(view.rt.begin(), view.rt.end(),
                               [&](const RtCandidate& c) { return c.user == a.user; });
        if (it == view.rt.end())
            throw std::invalid_argument("per_slot_objective: scheduled RT user is not eligible");
        obj += it->y - view.x * a.power * a.duration / view.slot_len;
    }
    if (decision.nrt) {
        auto it = std::find_if(view.nrt.begin(), view.nrt.end(),
                               [&](const NrtCandidate& c) { return c.user == decision.nrt->user; });
        if (it == view.nrt.end()) throw std::invalid_argument("per_slot_objective: unknown NRT user");
        const double value = it->queue * rate(decision.nrt->power, it->gain) -
                             view.x * decision.nrt->power / view.slot_len;
        obj += value * decision.nrt->duration;
    }
    return obj;
}

}  // namespace rtsched
