#include "rtsched/config_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rtsched {

namespace {

std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

void flatten(const nlohmann::json& j, const std::string& prefix, ConfigSource& out) {
    if (j.is_object()) {
        for (auto it = j.begin(); it != j.end(); ++it)
            flatten(it.value(), prefix.empty() ? it.key() : prefix + "." + it.key(), out);
        return;
    }
    std::string value;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) value += ",";
            value += j[i].is_string() ? j[i].get<std::string>() : j[i].dump();
        }
    } else if (j.is_string()) {
        value = j.get<std::string>();
    } else {
        value = j.dump();
    }
    out.values[prefix] = value;
    out.lines[prefix] = 0;
}

double parse_double(std::string_view text, bool& ok) {
    const std::string s = trim(text);
    ok = false;
    if (s.empty()) return 0.0;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    ok = end == s.c_str() + s.size() && errno == 0;
    return v;
}

class KeyReader {
public:
    explicit KeyReader(const ConfigSource& src) : src_(src) {}

    bool has(const std::string& key) const { return src_.values.count(key) != 0; }

    std::string str(const std::string& key, std::string def) const {
        auto it = src_.values.find(key);
        return it == src_.values.end() ? def : trim(it->second);
    }

    double num(const std::string& key, double def) const {
        auto it = src_.values.find(key);
        if (it == src_.values.end()) return def;
        bool ok = false;
        const double v = parse_double(it->second, ok);
        if (!ok || !std::isfinite(v)) fail(key, "expected a number, got '" + it->second + "'");
        return v;
    }

    std::size_t count(const std::string& key, std::size_t def) const {
        const double v = num(key, static_cast<double>(def));
        if (v < 0.0 || v != std::floor(v)) fail(key, "expected a non-negative integer");
        return static_cast<std::size_t>(v);
    }

    std::uint64_t u64(const std::string& key, std::uint64_t def) const {
        auto it = src_.values.find(key);
        if (it == src_.values.end()) return def;
        const std::string s = trim(it->second);
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || s[0] == '-' || end != s.c_str() + s.size() || errno != 0)
            fail(key, "expected an unsigned integer, got '" + s + "'");
        return v;
    }

    bool flag(const std::string& key, bool def) const {
        auto it = src_.values.find(key);
        if (it == src_.values.end()) return def;
        const std::string v = lower(trim(it->second));
        if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
        if (v == "false" || v == "0" || v == "no" || v == "off") return false;
        fail(key, "expected a boolean, got '" + it->second + "'");
    }

    std::vector<double> list(const std::string& key, std::vector<double> def) const {
        auto it = src_.values.find(key);
        if (it == src_.values.end()) return def;
        try {
            return parse_number_list(it->second);
        } catch (const std::invalid_argument& e) {
            fail(key, e.what());
        }
    }

    [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
        throw ConfigError(key, msg, src_.where(key));
    }

private:
    const ConfigSource& src_;
};

template <class F>
auto with_field(const std::string& field, const ConfigSource& src, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(field, e.what(), src.where(field));
    }
}

}  // namespace

std::string ConfigSource::where(const std::string& key) const {
    auto it = lines.find(key);
    if (it != lines.end() && it->second > 0) return origin + ":" + std::to_string(it->second) + ": ";
    return origin + ": ";
}

std::vector<double> parse_number_list(std::string_view text) {
    std::vector<double> out;
    std::string s(text);
    for (auto& c : s)
        if (c == '[' || c == ']') c = ' ';
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (trim(item).empty()) continue;
        bool ok = false;
        const double v = parse_double(item, ok);
        if (!ok) throw std::invalid_argument("expected a number list, got '" + std::string(text) + "'");
        out.push_back(v);
    }
    return out;
}

ConfigSource parse_config_text(std::string_view text, std::string_view origin) {
    ConfigSource src;
    src.origin = std::string(origin);
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::parse_error& e) {
            throw ConfigError("<json>", e.what(), src.origin + ": ");
        }
        flatten(j, "", src);
        return src;
    }
    std::stringstream ss{std::string(text)};
    std::string line, section;
    std::size_t n = 0;
    while (std::getline(ss, line)) {
        ++n;
        const auto hash = line.find('#');
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError("<section>", "unterminated section header", src.origin + ":" + std::to_string(n) + ": ");
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("<line>", "expected 'key = value', got '" + t + "'", src.origin + ":" + std::to_string(n) + ": ");
        std::string key = trim(t.substr(0, eq));
        if (key.empty()) throw ConfigError("<line>", "empty key", src.origin + ":" + std::to_string(n) + ": ");
        if (!section.empty()) key = section + "." + key;
        if (src.values.count(key))
            throw ConfigError(key, "duplicate key", src.origin + ":" + std::to_string(n) + ": ");
        src.values[key] = trim(t.substr(eq + 1));
        src.lines[key] = n;
    }
    return src;
}

ConfigSource load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string env_name(std::string_view key) {
    std::string out(kEnvPrefix);
    for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void apply_env_overrides(ConfigSource& src, const EnvLookup& lookup) {
    for (const auto& key : known_keys()) {
        const std::string name = env_name(key);
        std::optional<std::string> v;
        if (lookup) {
            v = lookup(name);
        } else if (const char* e = std::getenv(name.c_str())) {
            v = std::string(e);
        }
        if (v) {
            src.values[key] = *v;
            src.lines[key] = 0;
        }
    }
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "n_rt", "n_nrt", "lambda_rt", "lambda_nrt", "q",
        "packet.model", "packet.bits", "packet.min_bits", "packet.max_bits",
        "slot_len", "p_avg", "p_max", "b_max",
        "channel.model", "channel.p_on", "channel.mean_gain", "channel.gamma_max", "channel.states",
        "channel.probs",
        "scheduler", "horizon", "seed", "burn_in", "heavy_traffic", "admit_all",
        "fixedp.rt_bias", "fixedp.power_gate", "trace_interval", "record_decisions",
        "sweep.axis", "sweep.values", "sweep.seeds", "sweep.schedulers", "sweep.n_nrt",
        "region.direction", "region.rays", "region.grid_levels", "region.max_joint_states", "region.rel_tol",
    };
    return keys;
}

void check_known_keys(const ConfigSource& src) {
    const auto& keys = known_keys();
    for (const auto& [k, v] : src.values)
        if (std::find(keys.begin(), keys.end(), k) == keys.end())
            throw ConfigError(k, "unknown key", src.where(k));
}

namespace {

PacketLengthModel packets_from(const KeyReader& r) {
    PacketLengthModel p;
    const std::string model = lower(r.str("packet.model", "fixed"));
    if (model == "fixed") p.kind = PacketLengthModel::Kind::Fixed;
    else if (model == "homogeneous") p.kind = PacketLengthModel::Kind::HomogeneousRandom;
    else if (model == "heterogeneous") p.kind = PacketLengthModel::Kind::HeterogeneousRandom;
    else r.fail("packet.model", "expected fixed, homogeneous or heterogeneous");
    p.bits = r.num("packet.bits", 1.0);
    p.min_bits = r.num("packet.min_bits", 0.5 * p.bits);
    p.max_bits = r.num("packet.max_bits", 1.5 * p.bits);
    return p;
}

ChannelModel channel_from(const KeyReader& r) {
    const std::string model = lower(r.str("channel.model", "onoff"));
    if (model == "onoff" || model == "on_off") return ChannelModel::on_off(r.num("channel.p_on", 1.0));
    if (model == "rayleigh")
        return ChannelModel::rayleigh(r.num("channel.mean_gain", 1.0), r.num("channel.gamma_max", 50.0));
    if (model == "discrete") {
        auto states = r.list("channel.states", {});
        auto probs = r.list("channel.probs", {});
        if (probs.empty() && !states.empty()) probs.assign(states.size(), 1.0 / static_cast<double>(states.size()));
        return ChannelModel::discrete(std::move(states), std::move(probs));
    }
    r.fail("channel.model", "expected onoff, rayleigh or discrete");
}

}  // namespace

SystemConfig system_config_from(const ConfigSource& src) {
    const KeyReader r(src);
    SystemConfig c;
    c.n_rt = r.count("n_rt", c.n_rt);
    c.n_nrt = r.count("n_nrt", c.n_nrt);
    c.lambda_rt = r.list("lambda_rt", c.lambda_rt);
    c.lambda_nrt = r.list("lambda_nrt", c.lambda_nrt);
    c.q = r.list("q", c.q);
    c.rt_packets = packets_from(r);
    c.nrt_packets = c.rt_packets;
    c.slot_len = r.num("slot_len", c.slot_len);
    c.p_avg = r.num("p_avg", c.p_avg);
    c.p_max = r.num("p_max", c.p_max);
    c.b_max = r.num("b_max", c.b_max);
    c.channel = channel_from(r);
    if (r.has("scheduler"))
        c.scheduler = with_field("scheduler", src, [&] { return scheduler_from_string(r.str("scheduler", "")); });
    c.horizon = r.count("horizon", c.horizon);
    c.seed = r.u64("seed", c.seed);
    c.burn_in = r.count("burn_in", c.burn_in);
    c.heavy_traffic = r.flag("heavy_traffic", c.heavy_traffic);
    c.admit_all = r.flag("admit_all", c.admit_all);
    if (r.has("fixedp.rt_bias")) c.fixedp_rt_bias = r.num("fixedp.rt_bias", 0.0);
    c.fixedp_power_gate = r.flag("fixedp.power_gate", c.fixedp_power_gate);
    c.trace_interval = r.count("trace_interval", c.trace_interval);
    c.record_decisions = r.flag("record_decisions", c.record_decisions);

    // Re-throw validation errors with the source location of the field.
    try {
        c.resolve();
        c.validate();
    } catch (const ConfigError& e) {
        std::string key = e.field();
        if (key == "rt_packets" || key == "nrt_packets") key = "packet.model";
        else if (key == "channel") key = "channel.model";
        throw ConfigError(key, e.message(), src.where(key));
    }
    return c;
}

RegionQuery region_query_from(const ConfigSource& src) {
    const KeyReader r(src);
    SystemConfig sys;
    sys.n_rt = r.count("n_rt", 0);
    sys.n_nrt = r.count("n_nrt", 1);
    sys.lambda_rt = r.list("lambda_rt", {1.0});
    sys.q = r.list("q", {0.3});
    try {
        sys.resolve();
    } catch (const ConfigError& e) {
        throw ConfigError(e.field(), e.message(), src.where(e.field()));
    }
    RegionQuery q;
    q.lambda_rt = sys.lambda_rt;
    q.q = sys.q;
    q.lambda_nrt = r.list("region.direction", std::vector<double>(sys.n_nrt, 1.0));
    if (q.lambda_nrt.size() != sys.n_nrt) r.fail("region.direction", "needs one value per NRT user");
    q.packet_bits = r.num("packet.bits", 1.0);
    q.slot_len = r.num("slot_len", 1.0);
    q.p_max = r.num("p_max", 20.0);
    q.p_avg = r.num("p_avg", q.p_max);
    q.channel = r.has("channel.model") ? channel_from(r) : ChannelModel::discrete({1.0}, {1.0});
    q.grid_levels = r.count("region.grid_levels", q.grid_levels);
    q.max_joint_states = r.count("region.max_joint_states", q.max_joint_states);
    with_field("region", src, [&] {
        q.validate();
        return 0;
    });
    return q;
}

std::string report_json(const RunReport& r, const SystemConfig& c) {
    nlohmann::json j;
    j["scheduler"] = r.scheduler;
    j["horizon"] = r.horizon;
    j["seed"] = r.seed;
    j["config"] = {{"n_rt", c.n_rt},       {"n_nrt", c.n_nrt},     {"lambda_rt", c.lambda_rt},
                   {"lambda_nrt", c.lambda_nrt}, {"q", c.q},     {"packet_bits", c.nrt_packets.mean_bits()},
                   {"slot_len", c.slot_len}, {"p_avg", c.p_avg},   {"p_max", c.p_max},
                   {"b_max", c.b_max},     {"heavy_traffic", c.heavy_traffic}, {"admit_all", c.admit_all},
                   {"burn_in", c.burn_in}};
    j["sum_throughput"] = r.sum_throughput;
    j["avg_power"] = r.avg_power;
    j["min_delivery"] = r.min_delivery;
    j["x_over_k"] = r.x_over_k;
    j["max_y_over_k"] = r.max_y_over_k;
    j["flags"] = {{"power_ok", r.power_ok}, {"qos_ok", r.qos_ok}, {"stability_ok", r.stability_ok}};
    j["nrt"] = {{"admitted_avg", r.admitted_avg}, {"served_rate", r.served_rate}, {"mean_queue", r.mean_queue},
                {"final_queue", r.final_queue},   {"queue_slope", r.queue_slope}};
    j["rt"] = {{"delivery_ratio", r.delivery_ratio}, {"y_over_k", r.y_over_k}};
    j["gap_constant"] = r.gap_constant;
    j["gap_bound"] = r.gap_bound;
    j["mean_sets_evaluated"] = r.mean_sets_evaluated;
    j["max_sets_evaluated"] = r.max_sets_evaluated;
    j["idle_slots"] = r.idle_slots;
    j["fell_through"] = r.fell_through;
    j["invariants"] = {{"budget_violations", r.invariants.budget_violations},
                       {"deadline_violations", r.invariants.deadline_violations},
                       {"power_violations", r.invariants.power_violations},
                       {"objective_mismatches", r.invariants.objective_mismatches}};
    j["elapsed_seconds"] = r.elapsed_seconds;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

void write_trace_csv(std::ostream& os, const RunReport& r) {
    os << "slot,sum_throughput,avg_power,min_delivery,x,max_y,max_queue,lyapunov\n";
    os << std::setprecision(12);
    for (const auto& s : r.trace)
        os << s.slot << ',' << s.sum_throughput << ',' << s.avg_power << ',' << s.min_delivery << ',' << s.x
           << ',' << s.max_y << ',' << s.max_queue << ',' << s.lyapunov << '\n';
}

void write_decisions_csv(std::ostream& os, const RunReport& r, std::size_t n_rt, std::size_t n_nrt) {
    os << "slot,rt_mask,nrt_pick,phi,objective,sets_evaluated";
    for (std::size_t i = 0; i < n_rt; ++i) os << ",p_rt" << i;
    for (std::size_t i = 0; i < n_rt; ++i) os << ",mu_rt" << i;
    for (std::size_t i = 0; i < n_nrt; ++i) os << ",p_nrt" << i;
    for (std::size_t i = 0; i < n_nrt; ++i) os << ",mu_nrt" << i;
    os << '\n' << std::setprecision(12);
    for (const auto& d : r.decisions) {
        os << d.slot << ',' << d.rt_mask << ',' << d.nrt_pick << ',' << d.phi << ',' << d.objective << ','
           << d.sets_evaluated;
        for (double v : d.rt_power) os << ',' << v;
        for (double v : d.rt_duration) os << ',' << v;
        for (double v : d.nrt_power) os << ',' << v;
        for (double v : d.nrt_duration) os << ',' << v;
        os << '\n';
    }
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw std::out_of_range("no CSV column '" + std::string(name) + "'");
}

CsvTable read_csv(std::istream& is) {
    CsvTable t;
    std::string line;
    auto split = [](const std::string& l) {
        std::vector<std::string> cells;
        std::stringstream ss(l);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!l.empty() && l.back() == ',') cells.emplace_back();
        return cells;
    };
    if (std::getline(is, line)) t.header = split(line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != t.header.size())
            throw std::runtime_error("CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                                     std::to_string(t.header.size()));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

}  // namespace rtsched
