#include "doctest.h"

#include "rtsched/math_kernels.hpp"
#include "rtsched/traffic_channel.hpp"

#include <cmath>
#include <numbers>
#include <vector>

using namespace rtsched;

namespace {

constexpr double e = std::numbers::e;

// Dense grid maximum of Q*ln(1+P*g) - X*P/Ts over [0, Pmax].
double grid_waterfilling(double q, double x, double g, double pmax, double ts) {
    double best_p = 0.0, best_v = -1e300;
    const int n = 200000;
    for (int i = 0; i <= n; ++i) {
        const double p = pmax * i / n;
        const double v = q * std::log1p(p * g) - x * p / ts;
        if (v > best_v) {
            best_v = v;
            best_p = p;
        }
    }
    return best_p;
}

// Root of ln(1+Pg) - 1 - (c-1)/(1+Pg) by bisection, c = phi_tilde * g.
double root_lambert(double phi_tilde, double g) {
    const double c = phi_tilde * g;
    auto f = [&](double p) { return std::log1p(p * g) - 1.0 - (c - 1.0) / (1.0 + p * g); };
    double lo = 0.0, hi = 1.0;
    if (f(lo) >= 0.0) return 0.0;
    while (f(hi) < 0.0) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("lambert_w0 special values") {
    CHECK(lambert_w0(0.0) == 0.0);
    CHECK(lambert_w0(e) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(lambert_w0(-1.0 / e) == doctest::Approx(-1.0).epsilon(1e-7));
    CHECK_THROWS_AS(lambert_w0(-0.5), std::domain_error);
}

TEST_CASE("lambert_w0 residual over a wide range") {
    double worst = 0.0;
    for (double z = -0.3678; z < 1e6; z = z < 1.0 ? z + 0.0137 : z * 1.37) {
        const double w = lambert_w0(z);
        worst = std::max(worst, std::abs(w * std::exp(w) - z) / std::max(1.0, std::abs(z)));
    }
    CHECK(worst <= 1e-12);
    CHECK(lambert_w0(1e300) > 0.0);
}

TEST_CASE("rate and duration") {
    CHECK(rate(0.0, 1.0) == 0.0);
    CHECK(rate(e - 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(rate(14.0, 1.0) == doctest::Approx(2.7080502011).epsilon(1e-10));
    CHECK(rt_duration(1.0, 2.0) == 0.5);
    CHECK(rt_duration(1.0, 1.0) == 1.0);
    CHECK(rt_duration(1.0, std::log(15.0)) == doctest::Approx(0.3692693).epsilon(1e-6));
    CHECK_THROWS_AS(rt_duration(1.0, 0.0), std::domain_error);
}

TEST_CASE("water-filling examples and grid oracle") {
    PowerPolicyInput in{15.0, 1.0, 1.0, 20.0, 1.0, 1.0};
    CHECK(waterfilling_power(in) == doctest::Approx(14.0));
    in.gain = 0.05;
    CHECK(waterfilling_power(in) == 0.0);
    in = {100.0, 1.0, 1.0, 20.0, 1.0, 1.0};
    CHECK(waterfilling_power(in) == 20.0);
    in.power_price = 0.0;
    CHECK(waterfilling_power(in) == 20.0);
    in.gain = 0.0;
    CHECK(waterfilling_power(in) == 0.0);

    RandomStream rng(3, StreamDomain::Scheduler, 0);
    for (int t = 0; t < 40; ++t) {
        PowerPolicyInput r{30.0 * rng.uniform(), 0.2 + 5.0 * rng.uniform(), 0.05 + 3.0 * rng.uniform(), 20.0,
                           0.5 + rng.uniform(), 1.0};
        const double oracle = grid_waterfilling(r.queue_weight, r.power_price, r.gain, r.p_max, r.slot_len);
        CHECK(waterfilling_power(r) == doctest::Approx(oracle).epsilon(1e-3).scale(1.0));
    }
}

TEST_CASE("psi_nr_star") {
    PowerPolicyInput in{15.0, 1.0, 1.0, 20.0, 1.0, 1.0};
    CHECK(psi_nr_star(in) == doctest::Approx(15.0 * std::log(15.0) - 14.0).epsilon(1e-12));
    CHECK(psi_nr_star(in) == doctest::Approx(26.6208).epsilon(1e-5));
    in.queue_weight = 0.0;
    CHECK(psi_nr_star(in) == 0.0);
    in = {15.0, 1.0, 0.0, 20.0, 1.0, 1.0};
    CHECK(psi_nr_star(in) == 0.0);
}

TEST_CASE("lambert RT power") {
    CHECK(lambert_rt_power(1.0 + e * e, 1.0, 20.0) == doctest::Approx(e * e - 1.0).epsilon(1e-12));
    CHECK(lambert_rt_power(1.0, 1.0, 20.0) == doctest::Approx(e - 1.0).epsilon(1e-12));
    CHECK(lambert_rt_power(1.0 + 1e-9, 1.0, 20.0) == doctest::Approx(e - 1.0).epsilon(1e-8));
    CHECK(lambert_rt_power(1.0 - 1e-9, 1.0, 20.0) == doctest::Approx(e - 1.0).epsilon(1e-8));
    CHECK(lambert_rt_power(1e6, 1.0, 20.0) == 20.0);
    CHECK(lambert_rt_power(0.0, 1.0, 20.0) == 0.0);
    CHECK(lambert_rt_power(INFINITY, 1.0, 20.0) == 20.0);

    RandomStream rng(5, StreamDomain::Scheduler, 0);
    for (int t = 0; t < 500; ++t) {
        const double pt = 0.05 + 40.0 * rng.uniform();
        const double g = 0.05 + 4.0 * rng.uniform();
        const double oracle = std::min(root_lambert(pt, g), 1e9);
        CHECK(lambert_rt_power(pt, g, 1e9) == doctest::Approx(oracle).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("single RT and RT-only powers") {
    CHECK(single_rt_power(1.0, 1.0, 1.0, 20.0) == doctest::Approx(e - 1.0));
    CHECK(single_rt_power(1.0, 1.0, 2.0, 20.0) == doctest::Approx((e - 1.0) / 2.0));
    CHECK(single_rt_power(1.0, 1.0, 1e12, 20.0) < 1e-11);
    CHECK(single_rt_power(5.0, 1.0, 1.0, 20.0) == 20.0);
    CHECK(rt_only_power(1, 1.0, 1.0) == doctest::Approx(e - 1.0));
    CHECK(rt_only_power(2, 1.0, 1.0) == doctest::Approx(e * e - 1.0));
    CHECK(rt_only_power(3, 1.0, 2.0) == doctest::Approx(std::exp(1.5) - 1.0));
    CHECK(rt_only_power(3, 1.0, 2.0) == doctest::Approx(3.48169).epsilon(1e-5));
    CHECK(rt_only_power_bits(2.0, 1.0) == doctest::Approx(e * e - 1.0));
    CHECK_THROWS_AS(rt_only_power(0, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("solve_phi: single user fits at phi = 0") {
    const std::vector<RtLink> users{{1.0, 1.0}};
    const double psi = 15.0 * std::log(15.0) - 14.0;
    const PhiSolution s = solve_phi(users, 1.0, psi, 1.0, 20.0);
    CHECK(s.phi == 0.0);
    CHECK(s.powers[0] == doctest::Approx(14.0).epsilon(1e-6));
    CHECK(s.durations[0] == doctest::Approx(0.3693).epsilon(1e-4));
    CHECK(s.residual > 0.0);
    CHECK(s.residual == doctest::Approx(1.0 - s.durations[0]));
}

TEST_CASE("solve_phi: identical users share the slot") {
    const std::vector<RtLink> users{{1.0, 1.0}, {1.0, 1.0}};
    const PhiSolution s = solve_phi(users, 1.0, 0.0, 1.0, 20.0);
    CHECK(s.phi > 0.0);
    CHECK(s.powers[0] == doctest::Approx(s.powers[1]).epsilon(1e-12));
    CHECK(s.powers[0] == doctest::Approx(e * e - 1.0).epsilon(1e-9));
    CHECK(s.durations[0] + s.durations[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("solve_phi: heterogeneous gains fill the slot exactly") {
    RandomStream rng(9, StreamDomain::Scheduler, 1);
    for (int t = 0; t < 200; ++t) {
        std::vector<RtLink> users;
        const std::size_t n = 1 + rng.below(5);
        for (std::size_t i = 0; i < n; ++i) users.push_back({0.3 + 3.0 * rng.uniform(), 0.5 + rng.uniform()});
        const double x = 0.1 + 10.0 * rng.uniform();
        const double psi = 30.0 * rng.uniform();
        const auto s = try_solve_phi(users, x, psi, 1.0, 20.0);
        double at_pmax = 0.0;
        for (const auto& u : users) at_pmax += u.packet_bits / rate(20.0, u.gain);
        if (at_pmax > 1.0) {
            CHECK_FALSE(s.has_value());
            continue;
        }
        REQUIRE(s.has_value());
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(s->powers[i] >= 0.0);
            CHECK(s->powers[i] <= 20.0);
            CHECK(s->durations[i] * rate(s->powers[i], users[i].gain) ==
                  doctest::Approx(users[i].packet_bits).epsilon(1e-12));
            total += s->durations[i];
        }
        CHECK(total <= 1.0 + 1e-12);
        if (s->phi > 0.0) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("solve_phi: infeasible set throws") {
    const std::vector<RtLink> users{{1.0, 2.0}, {1.0, 2.0}};
    CHECK_FALSE(try_solve_phi(users, 1.0, 0.0, 1.0, 20.0).has_value());
    CHECK_THROWS_AS(solve_phi(users, 1.0, 0.0, 1.0, 20.0), InfeasibleSet);
}

TEST_CASE("property: Lambert power non-increasing and water-filling non-decreasing in gain") {
    RandomStream rng(13, StreamDomain::Scheduler, 2);
    for (int t = 0; t < 50; ++t) {
        const double pt = 0.5 + 30.0 * rng.uniform();
        PowerPolicyInput in{50.0 * rng.uniform(), 0.1 + 5.0 * rng.uniform(), 0.0, 20.0, 1.0, 1.0};
        double prev_rt = 1e300, prev_wf = -1.0;
        for (int i = 1; i <= 200; ++i) {
            const double g = 0.02 * i;
            const double prt = lambert_rt_power(pt, g, 20.0);
            CHECK(prt <= prev_rt * (1.0 + 1e-12));
            prev_rt = prt;
            in.gain = g;
            const double pwf = waterfilling_power(in);
            CHECK(pwf >= prev_wf);
            prev_wf = pwf;
        }
    }
}
