#include "doctest.h"

#include "rtsched/capacity_probe.hpp"
#include "rtsched/linear_program.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

using namespace rtsched;

namespace {

// Ergodic rate of one user over discrete states under an average power
// budget: water-filling with the level found by bisection.
double waterfill_capacity(const std::vector<double>& g, const std::vector<double>& pi, double p_avg, double p_max) {
    auto power_at = [&](double level, std::size_t m) {
        return std::clamp(level - 1.0 / g[m], 0.0, p_max);
    };
    auto used = [&](double level) {
        double s = 0.0;
        for (std::size_t m = 0; m < g.size(); ++m)
            if (g[m] > 0.0) s += pi[m] * power_at(level, m);
        return s;
    };
    double lo = 0.0, hi = 1e6;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (used(mid) <= p_avg ? lo : hi) = mid;
    }
    double r = 0.0;
    for (std::size_t m = 0; m < g.size(); ++m)
        if (g[m] > 0.0) r += pi[m] * std::log1p(power_at(lo, m) * g[m]);
    return r;
}

RegionQuery two_user(const std::vector<double>& states, const std::vector<double>& probs) {
    RegionQuery q;
    q.lambda_nrt = {0.3, 0.3};
    q.channel = ChannelModel::discrete(states, probs);
    q.p_avg = 5.0;
    q.grid_levels = 24;
    return q;
}

}  // namespace

TEST_CASE("linear program: small known optimum") {
    // max 3x + 2y  s.t. x + y <= 4, x + 3y <= 6, x <= 3
    LinearProgram lp(2);
    lp.objective = {3.0, 2.0};
    lp.add_row({{{0, 1.0}, {1, 1.0}}, RowSense::LessEqual, 4.0});
    lp.add_row({{{0, 1.0}, {1, 3.0}}, RowSense::LessEqual, 6.0});
    lp.add_row({{{0, 1.0}}, RowSense::LessEqual, 3.0});
    const auto r = solve_lp(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(11.0));
    CHECK(r.x[0] == doctest::Approx(3.0));
    CHECK(r.x[1] == doctest::Approx(1.0));
}

TEST_CASE("linear program: infeasible, unbounded and equality rows") {
    LinearProgram a(1);
    a.objective = {1.0};
    a.add_row({{{0, 1.0}}, RowSense::GreaterEqual, 2.0});
    a.add_row({{{0, 1.0}}, RowSense::LessEqual, 1.0});
    CHECK(solve_lp(a).status == LpStatus::Infeasible);

    LinearProgram b(2);
    b.objective = {1.0, 0.0};
    b.add_row({{{0, 1.0}, {1, -1.0}}, RowSense::LessEqual, 1.0});
    CHECK(solve_lp(b).status == LpStatus::Unbounded);

    LinearProgram c(3);
    c.objective = {-1.0, -1.0, -1.0};
    c.add_row({{{0, 1.0}, {1, 2.0}, {2, 1.0}}, RowSense::Equal, 4.0});
    c.add_row({{{0, 1.0}, {2, -1.0}}, RowSense::GreaterEqual, 1.0});
    const auto r = solve_lp(c);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(-2.5));
    CHECK(c.activity(0, r.x) == doctest::Approx(4.0));
}

TEST_CASE("linear program: random feasibility agrees with a planted point") {
    RandomStream gen(31, StreamDomain::Scheduler, 0);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + gen.below(6), m = 1 + gen.below(6);
        std::vector<double> x0(n);
        for (auto& v : x0) v = gen.uniform();
        LinearProgram lp(n);
        for (auto& c : lp.objective) c = gen.uniform() - 0.3;
        for (std::size_t i = 0; i < m; ++i) {
            LpRow row;
            double act = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                const double a = gen.uniform();
                row.terms.push_back({j, a});
                act += a * x0[j];
            }
            row.sense = RowSense::LessEqual;
            row.rhs = act + 0.1;
            lp.add_row(std::move(row));
        }
        const auto r = solve_lp(lp);
        REQUIRE(r.status == LpStatus::Optimal);
        double planted = 0.0;
        for (std::size_t j = 0; j < n; ++j) planted += lp.objective[j] * x0[j];
        CHECK(r.value >= planted - 1e-9);
        for (std::size_t i = 0; i < m; ++i) CHECK(lp.activity(i, r.x) <= lp.rows[i].rhs + 1e-9);
        for (double v : r.x) CHECK(v >= -1e-12);
    }
}

TEST_CASE("power grid") {
    RegionQuery q;
    q.p_avg = 5.0;
    const auto g = q.power_grid();
    CHECK(g.front() == 0.0);
    CHECK(g.back() == q.p_max);
    CHECK(g.size() == 65);
    CHECK(std::find(g.begin(), g.end(), 5.0) != g.end());
    CHECK(std::is_sorted(g.begin(), g.end()));
}

TEST_CASE("empty demand is inside with an all-zero certificate") {
    RegionQuery q;
    q.lambda_nrt = {0.0};
    const auto r = in_lambert_region(q);
    CHECK(r.inside);
    REQUIRE(r.certificate);
    for (const auto& s : r.certificate->states)
        for (double t : s.time) CHECK(t == 0.0);
}

TEST_CASE("single state closed form") {
    RegionQuery q;
    q.lambda_nrt = {3.2};
    auto r = in_lambert_region(q);
    CHECK_FALSE(r.inside);
    CHECK(r.scale * 3.2 == doctest::Approx(std::log(21.0)).epsilon(1e-9));

    q.lambda_nrt = {2.5};
    r = in_lambert_region(q);
    CHECK(r.inside);
    REQUIRE(r.certificate);
    CHECK(verify_certificate(q, *r.certificate) >= -1e-9);
    const auto& s = r.certificate->states.at(0);
    // Every grid mix on the concave rate curve needs at least the power of ln(1+P) = 2.5 at mu = Ts.
    CHECK(s.energy[0] >= std::expm1(2.5) * (1.0 - 1e-9));
    CHECK(s.energy[0] <= 20.0);

    const auto b = boundary_along_ray(q, {1.0});
    CHECK(b.scale == doctest::Approx(std::log(21.0)).epsilon(0.01));
    CHECK(b.lp_scale == doctest::Approx(std::log(21.0)).epsilon(1e-9));
}

TEST_CASE("zero power budget puts the boundary at the origin") {
    RegionQuery q;
    q.lambda_nrt = {1.0};
    q.p_avg = 0.0;
    const auto b = boundary_along_ray(q, {1.0});
    CHECK(b.scale == 0.0);
    CHECK_FALSE(in_lambert_region(q).inside);
}

TEST_CASE("two-state single user matches water-filling capacity") {
    RandomStream gen(37, StreamDomain::Scheduler, 1);
    for (int t = 0; t < 10; ++t) {
        const double g1 = 0.1 + 2.0 * gen.uniform(), g2 = 0.1 + 4.0 * gen.uniform();
        const double p1 = 0.2 + 0.6 * gen.uniform();
        const double pavg = 0.5 + 10.0 * gen.uniform();
        RegionQuery q;
        q.lambda_nrt = {1.0};
        q.channel = ChannelModel::discrete({g1, g2}, {p1, 1.0 - p1});
        q.p_avg = pavg;
        const double oracle = waterfill_capacity({g1, g2}, {p1, 1.0 - p1}, pavg, q.p_max);
        const auto r = in_lambert_region(q);
        // The grid can only lose rate, by a small amount.
        CHECK(r.scale <= oracle * (1.0 + 1e-9));
        CHECK(r.scale >= oracle * 0.99);
    }
}

TEST_CASE("RT demand shrinks the NRT region") {
    RegionQuery q;
    q.lambda_nrt = {1.0};
    const double alone = in_lambert_region(q).scale;
    q.lambda_rt = {1.0};
    q.q = {0.5};
    const auto r = in_lambert_region(q);
    CHECK(r.rt_feasible);
    CHECK(r.scale < alone);
    q.q = {1.0};
    q.packet_bits = 4.0;  // one packet needs ln(1+P) >= 4 > ln 21
    const auto bad = in_lambert_region(q);
    CHECK_FALSE(bad.rt_feasible);
    CHECK_FALSE(bad.inside);
}

TEST_CASE("property: monotone and symmetric membership") {
    RandomStream gen(41, StreamDomain::Scheduler, 2);
    for (int t = 0; t < 6; ++t) {
        const double s = 0.3 + 2.0 * gen.uniform();
        RegionQuery q = two_user({0.0, s, 2.0 * s}, {0.2, 0.5, 0.3});
        const double a = 0.2 + gen.uniform(), b = 0.2 + gen.uniform();
        q.lambda_nrt = {a, b};
        const auto r = in_lambert_region(q);
        q.lambda_nrt = {b, a};
        CHECK(in_lambert_region(q).scale == doctest::Approx(r.scale).epsilon(1e-7));

        q.lambda_nrt = {a * r.scale, b * r.scale};
        CHECK(in_lambert_region(q).inside);
        for (int k = 0; k < 4; ++k) {
            q.lambda_nrt = {a * r.scale * gen.uniform(), b * r.scale * gen.uniform()};
            const auto inner = in_lambert_region(q);
            CHECK(inner.inside);
            REQUIRE(inner.certificate);
            CHECK(verify_certificate(q, *inner.certificate) >= -1e-9);
        }
        q.lambda_nrt = {a * r.scale * 1.05, b * r.scale * 1.05};
        CHECK_FALSE(in_lambert_region(q).inside);
    }
}

TEST_CASE("tampered certificates fail verification") {
    RegionQuery q;
    q.lambda_nrt = {2.0};
    const auto r = in_lambert_region(q);
    REQUIRE(r.certificate);
    auto cert = *r.certificate;
    cert.states[0].bits[0] *= 1.5;
    CHECK(verify_certificate(q, cert) < 0.0);
    cert = *r.certificate;
    cert.states[0].time[0] += 1.0;
    CHECK(verify_certificate(q, cert) < 0.0);
}

TEST_CASE("state-space guard") {
    RegionQuery q;
    q.lambda_nrt.assign(14, 0.1);
    q.channel = ChannelModel::discrete({0.5, 1.0, 2.0}, {0.3, 0.4, 0.3});
    CHECK_THROWS_AS(in_lambert_region(q), RegionGuardError);
    q.channel = ChannelModel::rayleigh();
    q.lambda_nrt = {0.1};
    CHECK_THROWS_AS(in_lambert_region(q), std::invalid_argument);
}

TEST_CASE("stress stability: inside, outside and empty") {
    RegionQuery q;
    q.p_max = std::expm1(0.5);  // single-state boundary at 0.5 packets per slot
    q.p_avg = q.p_max;
    q.lambda_nrt = {0.0};
    CHECK(stress_stability(q, SchedulerKind::OnOff, 20000).verdict == StabilityVerdict::Stable);

    q.lambda_nrt = {0.4};
    CHECK(stress_stability(q, SchedulerKind::LambertStrict, 40000).verdict == StabilityVerdict::Stable);

    q.lambda_nrt = {0.6};
    const auto out = stress_stability(q, SchedulerKind::OnOff, 40000);
    CHECK(out.verdict == StabilityVerdict::Unstable);
    CHECK(out.max_slope == doctest::Approx(0.1).epsilon(0.1));

    CHECK_THROWS_AS(stress_stability(q, SchedulerKind::FixedP, 100), std::invalid_argument);
    q.lambda_nrt = {1.5};
    CHECK_THROWS_AS(stress_stability(q, SchedulerKind::OnOff, 100), std::invalid_argument);
}
