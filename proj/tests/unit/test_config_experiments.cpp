#include "doctest.h"

#include "rtsched/config_io.hpp"
#include "rtsched/experiments.hpp"

#include <json.hpp>

#include <atomic>
#include <map>
#include <sstream>
#include <stdexcept>

using namespace rtsched;

TEST_CASE("key = value parsing with sections and comments") {
    const auto src = parse_config_text("# system\nn_rt = 3\np_avg = 4.5  # watts\nscheduler = lambert_strict\n[channel]\nmodel = rayleigh\n",
                                       "sys.conf");
    CHECK(src.values.at("n_rt") == "3");
    CHECK(src.values.at("p_avg") == "4.5");
    CHECK(src.values.at("channel.model") == "rayleigh");
    CHECK(src.where("p_avg") == "sys.conf:3: ");
    const auto c = system_config_from(src);
    CHECK(c.n_rt == 3);
    CHECK(c.p_avg == 4.5);
    CHECK(c.channel.kind == ChannelModel::Kind::Rayleigh);
}

TEST_CASE("parse errors carry the line") {
    try {
        parse_config_text("n_rt = 1\nbroken line\n", "x.conf");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("x.conf:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_config_text("a = 1\na = 2\n"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("[open\n"), ConfigError);
}

TEST_CASE("validation errors name the field and its line") {
    const auto src = parse_config_text("n_rt = 2\nq = 1.5\n", "bad.conf");
    try {
        system_config_from(src);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.field() == "q");
        CHECK(std::string(e.what()).find("bad.conf:2") != std::string::npos);
    }
    CHECK_THROWS_AS(system_config_from(parse_config_text("p_avg = lots\n")), ConfigError);
    CHECK_THROWS_AS(system_config_from(parse_config_text("scheduler = magic\n")), ConfigError);
    CHECK_THROWS_AS(system_config_from(parse_config_text("channel.model = rayleigh\n")), ConfigError);
    CHECK_THROWS_AS(check_known_keys(parse_config_text("p_avgg = 1\n")), ConfigError);
    CHECK_THROWS_AS(system_config_from(parse_config_text("heavy_traffic = maybe\n")), ConfigError);
    CHECK_THROWS_AS(system_config_from(parse_config_text("seed = -4\n")), ConfigError);
}

TEST_CASE("JSON configs flatten to dotted keys") {
    const auto src = parse_config_text(
        R"({"n_rt": 2, "q": [0.2, 0.4], "channel": {"model": "discrete", "states": [0, 1], "probs": [0.5, 0.5]},
            "scheduler": "lambert_strict"})");
    const auto c = system_config_from(src);
    CHECK(c.n_rt == 2);
    CHECK(c.q == std::vector<double>{0.2, 0.4});
    CHECK(c.channel.kind == ChannelModel::Kind::Discrete);
    CHECK(c.channel.states == std::vector<double>{0.0, 1.0});
    CHECK(c.scheduler == SchedulerKind::LambertStrict);
    CHECK_THROWS_AS(parse_config_text("{\"n_rt\": }"), ConfigError);
}

TEST_CASE("environment overrides") {
    CHECK(env_name("p_avg") == "RTSCHED_P_AVG");
    CHECK(env_name("channel.model") == "RTSCHED_CHANNEL_MODEL");
    auto src = parse_config_text("p_avg = 4\n");
    const std::map<std::string, std::string> env{{"RTSCHED_P_AVG", "7"}, {"RTSCHED_SEED", "99"}};
    apply_env_overrides(src, [&](const std::string& n) -> std::optional<std::string> {
        auto it = env.find(n);
        if (it == env.end()) return std::nullopt;
        return it->second;
    });
    const auto c = system_config_from(src);
    CHECK(c.p_avg == 7.0);
    CHECK(c.seed == 99);
}

TEST_CASE("number lists") {
    CHECK(parse_number_list("1, 2.5,3") == std::vector<double>{1, 2.5, 3});
    CHECK(parse_number_list("[0.1,0.2]") == std::vector<double>{0.1, 0.2});
    CHECK(parse_number_list("").empty());
    CHECK_THROWS_AS(parse_number_list("1,x"), std::invalid_argument);
}

TEST_CASE("report JSON and trace CSV round trip") {
    SystemConfig c;
    c.n_rt = 2;
    c.n_nrt = 2;
    c.horizon = 3000;
    c.trace_interval = 1000;
    c.record_decisions = true;
    const auto r = run(c);
    c.resolve();
    const auto j = nlohmann::json::parse(report_json(r, c));
    CHECK(j["scheduler"] == "onoff");
    CHECK(j["sum_throughput"].get<double>() == doctest::Approx(r.sum_throughput));
    CHECK(j["rt"]["delivery_ratio"].size() == 2);
    CHECK(j["invariants"]["budget_violations"] == 0);

    std::stringstream ss;
    write_trace_csv(ss, r);
    const auto t = read_csv(ss);
    REQUIRE(t.rows.size() == 3);
    CHECK(std::stod(t.rows.back()[t.column("sum_throughput")]) == doctest::Approx(r.sum_throughput).epsilon(1e-10));
    CHECK_THROWS_AS(t.column("nope"), std::out_of_range);

    std::stringstream d;
    write_decisions_csv(d, r, 2, 2);
    const auto dt = read_csv(d);
    CHECK(dt.rows.size() == 3000);
    CHECK(dt.header.size() == 6 + 2 * 2 + 2 * 2);
}

TEST_CASE("sweep spec from config") {
    const auto src = parse_config_text(
        "horizon = 500\nn_rt = 3\nn_nrt = 3\n[sweep]\naxis = p_avg\nvalues = 2,4,6,8,10\nseeds = 1,2\n"
        "schedulers = onoff, fixedp\n");
    const auto spec = sweep_spec_from(src);
    CHECK(spec.axis == SweepAxis::PAvg);
    CHECK(spec.cells() == 2 * 5 * 2);
    CHECK(spec.seeds == std::vector<std::uint64_t>{1, 2});

    CHECK_THROWS_AS(sweep_spec_from(parse_config_text("[sweep]\nvalues = 1\n")), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from(parse_config_text("[sweep]\naxis = speed\nvalues = 1\n")), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from(parse_config_text("[sweep]\naxis = q\nvalues = 1.2\n")), ConfigError);
    CHECK_THROWS_AS(sweep_spec_from(parse_config_text("[sweep]\naxis = n_users\nvalues = 5\n")), ConfigError);
}

TEST_CASE("sweep rows, ordering and common random numbers") {
    SweepSpec spec;
    spec.base.n_rt = 3;
    spec.base.n_nrt = 3;
    spec.base.horizon = 400;
    spec.axis = SweepAxis::PAvg;
    spec.values = {2, 4, 6, 8, 10};
    spec.seeds = {1, 2};
    const auto rows = run_sweep(spec, 4);
    REQUIRE(rows.size() == 2 * 5 * 2);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(rows[i]);
        const auto cell = sweep_cells(spec)[i];
        CHECK(rows[i]->axis_value == spec.values[cell.value_index]);
        CHECK(rows[i]->scheduler == spec.schedulers[cell.scheduler_index]);
    }
    // Parallel and serial runs agree.
    const auto serial = run_sweep(spec, 1);
    for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i]->sum_throughput == serial[i]->sum_throughput);

    std::stringstream ss;
    write_sweep_csv(ss, spec.axis, rows);
    const auto t = read_csv(ss);
    CHECK(t.rows.size() == 20);
    CHECK(t.header.at(0) == "axis");
    CHECK(t.rows[0][t.column("scheduler")] == "onoff");
}

TEST_CASE("sweep cell configs") {
    SweepSpec spec;
    spec.axis = SweepAxis::NUsers;
    spec.values = {13, 20};
    spec.base.q = {0.3};
    auto c = cell_config(spec, {0, 0, 0});
    CHECK(c.n_rt == 3);
    CHECK(c.n_nrt == 10);
    CHECK(c.q.size() == 3);
    spec.axis = SweepAxis::Q;
    spec.values = {0.5};
    c = cell_config(spec, {0, 0, 1});
    CHECK(c.q == std::vector<double>(10, 0.5));
    CHECK(c.scheduler == SchedulerKind::FixedP);
}

TEST_CASE("cancelled sweep leaves rows empty") {
    SweepSpec spec;
    spec.base.horizon = 100;
    spec.values = {2, 4};
    std::atomic<bool> cancel{true};
    const auto rows = run_sweep(spec, 2, &cancel);
    for (const auto& r : rows) CHECK_FALSE(r);
}

TEST_CASE("parallel_for propagates exceptions") {
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
        if (i == 7) throw std::runtime_error("boom");
    }), std::runtime_error);
}

TEST_CASE("region config and CSV") {
    const auto src = parse_config_text("n_nrt = 2\np_avg = 5\n[region]\ngrid_levels = 16\n");
    const auto q = region_query_from(src);
    CHECK(q.lambda_nrt == std::vector<double>{1.0, 1.0});
    CHECK(q.grid_levels == 16);
    const auto rays = region_rays(q, 5);
    REQUIRE(rays.size() == 5);
    CHECK(rays.front() == std::vector<double>{1.0, 0.0});
    CHECK(rays.back() == std::vector<double>{0.0, 1.0});
    const auto boundary = run_region_sweep(q, rays, 0.01, 2);
    // Symmetric users give a symmetric boundary.
    CHECK(boundary.front().lp_scale == doctest::Approx(boundary.back().lp_scale).epsilon(1e-9));
    CHECK(boundary[1].lp_scale == doctest::Approx(boundary[3].lp_scale).epsilon(1e-7));
    const auto point = in_lambert_region(q);
    std::stringstream ss;
    write_region_csv(ss, q, boundary, &point);
    const auto t = read_csv(ss);
    CHECK(t.rows.size() == 6);
    CHECK(t.rows.back()[0] == "point");
    CHECK_THROWS_AS(region_query_from(parse_config_text("n_nrt = 2\nregion.direction = 1\n")), ConfigError);
}
