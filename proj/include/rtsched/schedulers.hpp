#pragma once

// Per-slot decision makers. Each scheduler maps an EligibleSlotView (the
// queues, gains and arrivals observed at the start of a slot) to a
// SlotDecision: which RT users are served, which NRT user takes the leftover
// time, and the powers and durations of all of them.

#include "rtsched/math_kernels.hpp"
#include "rtsched/traffic_channel.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rtsched {

enum class SchedulerKind { OnOff, LambertStrict, Exhaustive, FixedP, HeteroHeuristic };

std::string_view to_string(SchedulerKind k);
/// Throws std::invalid_argument for unknown names.
SchedulerKind scheduler_from_string(std::string_view name);

struct RtCandidate {
    std::size_t user = 0;  ///< RT user index
    double y = 0.0;
    double gain = 1.0;
    double packet_bits = 1.0;
};

struct NrtCandidate {
    std::size_t user = 0;  ///< NRT user index
    double queue = 0.0;
    double gain = 0.0;
    int arrival = 0;
    double packet_bits = 1.0;
};

/// Slot-level inputs to a scheduler. `rt` holds only eligible RT users
/// (arrived and gain > 0), ordered by user index; `nrt` holds every NRT user.
struct EligibleSlotView {
    std::vector<RtCandidate> rt;
    std::vector<NrtCandidate> nrt;
    double x = 0.0;
    double slot_len = 1.0;
    double p_max = 20.0;
    double b_max = 1e4;
    bool admit_all = false;
    double fixedp_rt_bias = 0.3;    ///< FixedP coin: P(serve RT)
    bool fixedp_power_gate = true;  ///< FixedP idles while X(k) > 0
};

/// Builds a view from full per-user state, applying the eligibility filter.
EligibleSlotView make_view(std::span<const double> y, std::span<const int> rt_arrivals,
                           std::span<const double> rt_gains, std::span<const double> rt_bits,
                           std::span<const double> queues, std::span<const int> nrt_arrivals,
                           std::span<const double> nrt_gains, std::span<const double> nrt_bits,
                           double x, double slot_len, double p_max, double b_max);

struct UserAllocation {
    std::size_t user = 0;
    double power = 0.0;
    double duration = 0.0;
};

struct SlotDecision {
    std::vector<UserAllocation> rt;       ///< scheduled RT users, by user index
    std::optional<UserAllocation> nrt;    ///< the NRT user i* and its share
    std::vector<int> admissions;          ///< r_i(k), one per NRT user
    double phi = 0.0;
    double psi_nr = 0.0;                  ///< value per second of i*, 0 if none
    double objective = 0.0;
    std::size_t sets_evaluated = 0;
    bool fell_through = false;            ///< FixedP switched branch for lack of users

    double total_duration() const;
    double energy() const;
    /// Bit i set when RT user i is scheduled (users >= 64 are not represented).
    std::uint64_t rt_mask() const;
    bool idle() const { return rt.empty() && !nrt; }
};

struct NrtChoice {
    std::optional<std::size_t> index;  ///< position in view.nrt
    double power = 0.0;
    double psi = 0.0;
};

/// i* = argmax of the water-filling value over NRT users, ties broken
/// uniformly at random. No pick when every value is <= 0.
NrtChoice select_nrt(const EligibleSlotView& view, RandomStream& rng);

/// Positions in view.rt sorted by decreasing Y (stable in user index).
std::vector<std::size_t> order_by_y(const EligibleSlotView& view);

/// Positions in view.rt sorted by decreasing Y*gamma/L (stable in user index).
std::vector<std::size_t> heterogeneous_order(const EligibleSlotView& view);

/// The |order|+1 nested prefixes of `order`, starting with the empty set.
std::vector<std::vector<std::size_t>> candidate_prefixes(std::span<const std::size_t> order);

/// i has larger Y, larger gain and a packet no longer than j's.
bool dominates(const RtCandidate& i, const RtCandidate& j);

/// True when some user outside `members` dominates a member.
bool dominated_set(const EligibleSlotView& view, std::span<const std::size_t> members);

/// Objective and allocation of one RT set (positions into view.rt, ascending).
struct SetValue {
    bool feasible = false;
    double objective = 0.0;
    double phi = 0.0;
    std::vector<double> powers;
    std::vector<double> durations;
    double nrt_time = 0.0;
};

/// Evaluates RT sets for one slot with general gains. Lambert powers at
/// phi = 0 do not depend on the set and are computed once.
class SetEvaluator {
public:
    SetEvaluator(const EligibleSlotView& view, const NrtChoice& nrt);

    SetValue evaluate(std::span<const std::size_t> members) const;
    double objective(std::span<const std::size_t> members) const { return evaluate(members).objective; }

private:
    const EligibleSlotView& view_;
    double psi_;
    std::vector<double> power0_;
    std::vector<double> duration0_;
};

/// Evaluates RT sets with the unit-gain closed forms: Lambert power at phi = 0
/// when it fits, otherwise the common RT-only power e^{sum L/Ts} - 1.
SetValue evaluate_onoff_set(const EligibleSlotView& view, const NrtChoice& nrt,
                            std::span<const std::size_t> members);

SlotDecision schedule_onoff(const EligibleSlotView& view, RandomStream& rng);
SlotDecision schedule_lambert_strict(const EligibleSlotView& view, RandomStream& rng);
/// Throws std::invalid_argument for more than kExhaustiveLimit eligible RT users.
SlotDecision schedule_exhaustive(const EligibleSlotView& view, RandomStream& rng);
SlotDecision schedule_fixedp(const EligibleSlotView& view, RandomStream& rng);
SlotDecision schedule_hetero_heuristic(const EligibleSlotView& view, RandomStream& rng);

SlotDecision schedule(SchedulerKind kind, const EligibleSlotView& view, RandomStream& rng);

inline constexpr std::size_t kExhaustiveLimit = 20;

/// Fills decision.admissions from the view's arrivals and the admission rule.
void apply_admissions(const EligibleSlotView& view, SlotDecision& decision);

/// Objective of the per-slot problem for any decision: the RT terms
/// Y - X*P*mu/Ts plus (Q*R - X*P/Ts)*mu for the NRT user.
double per_slot_objective(const SlotDecision& decision, const EligibleSlotView& view);

}  // namespace rtsched
