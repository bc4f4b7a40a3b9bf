#include "rtsched/math_kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace rtsched {

namespace {

constexpr double kE = std::numbers::e;
constexpr double kInvE = 1.0 / std::numbers::e;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
}

// Series of W0 about the branch point in p = sqrt(2(e z + 1)).
double branch_series(double z) {
    const double p = std::sqrt(std::max(0.0, 2.0 * (kE * z + 1.0)));
    return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0)))));
}

}  // namespace

void PowerPolicyInput::validate() const {
    require(std::isfinite(queue_weight) && queue_weight >= 0.0, "queue_weight must be finite and >= 0");
    require(std::isfinite(power_price) && power_price >= 0.0, "power_price must be finite and >= 0");
    require(std::isfinite(gain) && gain >= 0.0, "gain must be finite and >= 0");
    require(std::isfinite(p_max) && p_max > 0.0, "p_max must be finite and > 0");
    require(std::isfinite(slot_len) && slot_len > 0.0, "slot_len must be finite and > 0");
    require(std::isfinite(packet_bits) && packet_bits > 0.0, "packet_bits must be finite and > 0");
}

double lambert_w0(double z) {
    if (std::isnan(z)) throw std::domain_error("lambert_w0: NaN argument");
    if (z < -kInvE - 1e-12) throw std::domain_error("lambert_w0: argument below -1/e");
    if (z <= -kInvE) return -1.0;
    if (z == 0.0) return 0.0;
    if (std::isinf(z)) return kInf;

    if (z > 100.0) {
        // Newton on w + ln w = ln z; avoids e^w overflow for huge z.
        const double lz = std::log(z);
        double w = lz - std::log(lz);
        for (int it = 0; it < 50; ++it) {
            const double f = w + std::log(w) - lz;
            const double dw = f / (1.0 + 1.0 / w);
            w -= dw;
            if (std::abs(dw) <= 1e-16 * w) break;
        }
        return w;
    }

    double w;
    if (z < -0.32) {
        w = branch_series(z);
    } else {
        const double l = std::log1p(z);
        w = l * (1.0 - std::log1p(l) / (2.0 + l));
    }

    for (int it = 0; it < 50; ++it) {
        const double ew = std::exp(w);
        const double f = w * ew - z;
        const double wp1 = w + 1.0;
        if (std::abs(wp1) < 1e-10) break;
        const double dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= dw;
        if (std::abs(dw) <= 1e-15 * (1.0 + std::abs(w))) break;
    }
    return std::max(w, -1.0);
}

double rate(double power, double gain) { return std::log1p(power * gain); }

double rt_duration(double packet_bits, double r) {
    if (!(r > 0.0)) throw std::domain_error("rt_duration: rate must be positive");
    return packet_bits / r;
}

double waterfilling_power(const PowerPolicyInput& in) {
    in.validate();
    if (in.gain <= 0.0) return 0.0;
    if (degenerate_price(in)) return in.p_max;
    const double p = in.slot_len * in.queue_weight / in.power_price - 1.0 / in.gain;
    return std::clamp(p, 0.0, in.p_max);
}

double psi_nr_star(const PowerPolicyInput& in) {
    const double p = waterfilling_power(in);
    if (in.gain <= 0.0 || p <= 0.0) return 0.0;
    return in.queue_weight * rate(p, in.gain) - in.power_price * p / in.slot_len;
}

double lambert_rt_power(double phi_tilde, double gain, double p_max) {
    require(p_max > 0.0, "lambert_rt_power: p_max must be > 0");
    if (!(gain > 0.0)) return 0.0;
    if (std::isinf(phi_tilde) && phi_tilde > 0.0) return p_max;
    const double s = phi_tilde * gain;
    if (!(s > 0.0)) return 0.0;
    if (std::isinf(s)) return p_max;

    const double z = s - 1.0;
    double u;  // 1 + P*gamma
    if (std::abs(z) < 1e-6) {
        const double x = z / kE;
        u = kE * (1.0 + x * (1.0 + x * (-0.5 + x * (2.0 / 3.0))));
    } else {
        u = z / lambert_w0(z / kE);
    }
    return std::clamp((u - 1.0) / gain, 0.0, p_max);
}

double lambert_fixed_point_residual(double power, double phi_tilde, double gain) {
    const double u = 1.0 + power * gain;
    return std::log(u) - 1.0 - (phi_tilde * gain - 1.0) / u;
}

double single_rt_power(double packet_bits, double slot_len, double gain, double p_max) {
    require(gain > 0.0, "single_rt_power: gain must be > 0");
    if (std::isinf(gain)) return 0.0;
    return std::min(std::expm1(packet_bits / slot_len) / gain, p_max);
}

double rt_only_power(std::size_t n_scheduled, double packet_bits, double slot_len) {
    require(n_scheduled > 0, "rt_only_power: at least one user must be scheduled");
    return std::expm1(static_cast<double>(n_scheduled) * packet_bits / slot_len);
}

double rt_only_power_bits(double total_bits, double slot_len) {
    require(total_bits > 0.0, "rt_only_power_bits: total bits must be > 0");
    return std::expm1(total_bits / slot_len);
}

double phi_bracket_bound(std::size_t n_users, double packet_bits, double slot_len,
                         double power_price, double psi_nr_star_val, double p_max) {
    const double nl = static_cast<double>(n_users) * packet_bits;
    const double c = nl / slot_len;
    return -psi_nr_star_val + std::exp(c) * nl * power_price * p_max / (slot_len * std::expm1(c));
}

namespace {

struct SetEval {
    std::vector<double> powers;
    std::vector<double> durations;
    double total = 0.0;
};

void evaluate_at(std::span<const RtLink> users, double phi_tilde, double p_max, SetEval& out) {
    out.total = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        const double p = lambert_rt_power(phi_tilde, users[i].gain, p_max);
        const double r = rate(p, users[i].gain);
        const double d = r > 0.0 ? users[i].packet_bits / r : kInf;
        out.powers[i] = p;
        out.durations[i] = d;
        out.total += d;
    }
}

// Normalized multiplier above which every user of the set sits at Pmax.
double clip_phi_tilde(std::span<const RtLink> users, double p_max) {
    double best = 0.0;
    for (const auto& u : users) {
        const double v = 1.0 + p_max * u.gain;
        best = std::max(best, ((std::log(v) - 1.0) * v + 1.0) / u.gain);
    }
    return best;
}

PhiSolution finish(double phi, SetEval&& e, double slot_len, std::size_t iterations) {
    PhiSolution s;
    s.phi = phi;
    s.powers = std::move(e.powers);
    s.durations = std::move(e.durations);
    s.residual = slot_len - e.total;
    s.iterations = iterations;
    return s;
}

}  // namespace

std::optional<PhiSolution> try_solve_phi(std::span<const RtLink> users, double power_price,
                                         double psi_nr_star_val, double slot_len, double p_max,
                                         const PhiSearchOptions& opts) {
    require(!users.empty(), "solve_phi: RT set must be non-empty");
    require(slot_len > 0.0 && p_max > 0.0, "solve_phi: slot_len and p_max must be > 0");
    require(power_price >= 0.0, "solve_phi: power_price must be >= 0");
    for (const auto& u : users) {
        require(u.gain > 0.0, "solve_phi: RT gains must be > 0");
        require(u.packet_bits > 0.0, "solve_phi: packet_bits must be > 0");
    }
    const double psi = std::max(0.0, psi_nr_star_val);
    const std::size_t n = users.size();

    SetEval cur{std::vector<double>(n), std::vector<double>(n), 0.0};

    if (power_price <= 0.0) {
        evaluate_at(users, kInf, p_max, cur);
        if (cur.total > slot_len) return std::nullopt;
        return finish(0.0, std::move(cur), slot_len, 0);
    }

    const auto phi_tilde = [&](double phi) { return (psi + phi) * slot_len / power_price; };

    evaluate_at(users, phi_tilde(0.0), p_max, cur);
    if (cur.total <= slot_len) return finish(0.0, std::move(cur), slot_len, 0);

    double min_total = 0.0;
    double total_bits = 0.0;
    for (const auto& u : users) {
        min_total += u.packet_bits / rate(p_max, u.gain);
        total_bits += u.packet_bits;
    }
    if (min_total > slot_len) return std::nullopt;

    // Bracket: the closed-form bound for unit gains, widened to the all-clipped
    // multiplier when gains are heterogeneous.
    const double mean_bits = total_bits / static_cast<double>(n);
    double hi = std::max(0.0, phi_bracket_bound(n, mean_bits, slot_len, power_price, psi, p_max));
    SetEval at_hi{std::vector<double>(n), std::vector<double>(n), 0.0};
    evaluate_at(users, phi_tilde(hi), p_max, at_hi);
    if (!(at_hi.total <= slot_len)) {
        const double clip = clip_phi_tilde(users, p_max) * (1.0 + 1e-9) * power_price / slot_len - psi;
        hi = std::max(hi, clip);
        evaluate_at(users, phi_tilde(hi), p_max, at_hi);
        if (!(at_hi.total <= slot_len)) return std::nullopt;
    }

    double lo = 0.0;
    std::size_t it = 0;
    const double target = slot_len * (1.0 - opts.tolerance);
    while (it < opts.max_iterations && at_hi.total < target) {
        ++it;
        const double mid = 0.5 * (lo + hi);
        if (!(mid > lo && mid < hi)) break;
        evaluate_at(users, phi_tilde(mid), p_max, cur);
        if (cur.total <= slot_len) {
            hi = mid;
            std::swap(at_hi, cur);
        } else {
            lo = mid;
        }
    }
    return finish(hi, std::move(at_hi), slot_len, it);
}

PhiSolution solve_phi(std::span<const RtLink> users, double power_price, double psi_nr_star_val,
                      double slot_len, double p_max, const PhiSearchOptions& opts) {
    auto s = try_solve_phi(users, power_price, psi_nr_star_val, slot_len, p_max, opts);
    if (!s) throw InfeasibleSet("RT set cannot be transmitted within one slot at Pmax");
    return std::move(*s);
}

}  // namespace rtsched
