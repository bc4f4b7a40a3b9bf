#pragma once

// Numerical kernels for joint scheduling and power allocation: Lambert W0,
// rate and duration formulas, the water-filling (non-real-time) and Lambert
// (real-time) power policies, and the slot-budget multiplier search.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace rtsched {

/// Raised when a real-time set cannot be transmitted inside one slot even at
/// full power.
class InfeasibleSet : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs shared by the closed-form power rules.
struct PowerPolicyInput {
    double queue_weight = 0.0;  ///< Q_i(k) in bits (NRT backlog weight)
    double power_price = 0.0;   ///< X(k), the power virtual queue
    double gain = 0.0;          ///< channel power gain
    double p_max = 0.0;
    double slot_len = 1.0;      ///< Ts, seconds
    double packet_bits = 1.0;   ///< L

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Principal branch W0 of the Lambert W function on [-1/e, inf).
/// Throws std::domain_error for z < -1/e - 1e-12.
double lambert_w0(double z);

/// Achievable rate ln(1 + P*gamma), natural log.
double rate(double power, double gain);

/// Time needed to push `packet_bits` at `rate`. Throws std::domain_error when
/// rate <= 0.
double rt_duration(double packet_bits, double rate);

/// NRT water-filling power min((Ts*Q/X - 1/gamma)^+, Pmax).
/// X = 0 is the degenerate unpriced case and returns Pmax; gamma = 0 returns 0.
double waterfilling_power(const PowerPolicyInput& in);

/// True when the power price is zero, i.e. water-filling is clipped only by Pmax.
inline bool degenerate_price(const PowerPolicyInput& in) { return in.power_price <= 0.0; }

/// Per-second value Q*rate(P*) - X*P*/Ts of serving an NRT user at its
/// water-filling power.
double psi_nr_star(const PowerPolicyInput& in);

/// Lambert RT power for a given normalized multiplier phi_tilde:
///   min( (1/gamma) [ (phi_tilde*gamma - 1) / W0((phi_tilde*gamma - 1)/e) - 1 ], Pmax ).
/// At phi_tilde*gamma == 1 the analytic limit (e-1)/gamma is used. An infinite
/// phi_tilde (unpriced power) gives Pmax. phi_tilde*gamma <= 0 gives 0: the user
/// has no positive-rate stationary point.
double lambert_rt_power(double phi_tilde, double gain, double p_max);

/// Residual of the stationarity condition ln(1+P*gamma) = 1 + (phi_tilde*gamma-1)/(1+P*gamma).
double lambert_fixed_point_residual(double power, double phi_tilde, double gain);

/// Power of a single RT user that exactly fills the slot: min((e^{L/Ts}-1)/gamma, Pmax).
double single_rt_power(double packet_bits, double slot_len, double gain, double p_max);

/// Common power e^{n*L/Ts} - 1 when n unit-gain RT users share the whole slot.
/// Throws std::invalid_argument for n_scheduled == 0.
double rt_only_power(std::size_t n_scheduled, double packet_bits, double slot_len);

/// Variant with per-user packet lengths: e^{sum(L_i)/Ts} - 1.
double rt_only_power_bits(double total_bits, double slot_len);

struct RtLink {
    double gain = 1.0;
    double packet_bits = 1.0;
};

/// Result of the multiplier search for one RT set.
struct PhiSolution {
    double phi = 0.0;
    std::vector<double> powers;
    std::vector<double> durations;
    double residual = 0.0;  ///< Ts minus the RT durations, i.e. the time left for the NRT user
    std::size_t iterations = 0;
};

/// Settings for the multiplier search. `tolerance` is relative to Ts.
struct PhiSearchOptions {
    double tolerance = 1e-13;
    std::size_t max_iterations = 400;
};

/// Upper end of the multiplier bracket for a unit-gain set of `n_users`
/// equal-length packets:  -Psi + e^{nL/Ts} nL X Pmax / (Ts (e^{nL/Ts} - 1)).
double phi_bracket_bound(std::size_t n_users, double packet_bits, double slot_len,
                         double power_price, double psi_nr_star_val, double p_max);

/// Finds the multiplier phi >= 0 for the RT set `users`.
/// phi = 0 when the Lambert powers at phi = 0 already fit in Ts; otherwise the
/// slot-budget equation sum L_i / rate_i = Ts is solved by bisection in phi.
/// Returns std::nullopt when the set cannot fit even at Pmax.
std::optional<PhiSolution> try_solve_phi(std::span<const RtLink> users, double power_price,
                                         double psi_nr_star_val, double slot_len, double p_max,
                                         const PhiSearchOptions& opts = {});

/// Throwing wrapper around try_solve_phi. Throws InfeasibleSet.
PhiSolution solve_phi(std::span<const RtLink> users, double power_price,
                      double psi_nr_star_val, double slot_len, double p_max,
                      const PhiSearchOptions& opts = {});

}  // namespace rtsched
