#pragma once

// Configuration files (flat dotted key = value, or JSON), environment
// overrides, and report/trace writers.
//
// Environment overrides: every key can be overridden by RTSCHED_<KEY> where
// the key is upper-cased and dots become underscores, e.g. RTSCHED_P_AVG=4 or
// RTSCHED_CHANNEL_MODEL=rayleigh.

#include "rtsched/capacity_probe.hpp"
#include "rtsched/sim_engine.hpp"

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rtsched {

struct ConfigSource {
    std::map<std::string, std::string> values;
    std::map<std::string, std::size_t> lines;  ///< 1-based source line, 0 for JSON/env
    std::string origin = "<string>";

    std::string where(const std::string& key) const;
};

/// Parses key = value text (# comments, [section] headers prefix later keys)
/// or a JSON object (nested objects flattened with dots). Throws ConfigError.
ConfigSource parse_config_text(std::string_view text, std::string_view origin = "<string>");
ConfigSource load_config_file(const std::string& path);

inline constexpr std::string_view kEnvPrefix = "RTSCHED_";
std::string env_name(std::string_view key);

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;
/// Applies RTSCHED_* overrides for every known key. Defaults to getenv.
void apply_env_overrides(ConfigSource& src, const EnvLookup& lookup = {});

/// Every key understood by the builders below.
const std::vector<std::string>& known_keys();

/// Builders throw ConfigError naming the key and its line. Unknown keys are
/// rejected by check_known_keys.
SystemConfig system_config_from(const ConfigSource& src);
RegionQuery region_query_from(const ConfigSource& src);
void check_known_keys(const ConfigSource& src);

std::string report_json(const RunReport& report, const SystemConfig& config);

/// Header: slot,sum_throughput,avg_power,min_delivery,x,max_y,max_queue,lyapunov
void write_trace_csv(std::ostream& os, const RunReport& report);
/// Header: slot,rt_mask,nrt_pick,phi,objective,sets_evaluated,p_rt<i>...,mu_rt<i>...,p_nrt<i>...,mu_nrt<i>...
void write_decisions_csv(std::ostream& os, const RunReport& report, std::size_t n_rt, std::size_t n_nrt);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(std::string_view name) const;  ///< throws std::out_of_range
};
CsvTable read_csv(std::istream& is);

/// Comma-separated numbers; throws std::invalid_argument.
std::vector<double> parse_number_list(std::string_view text);

}  // namespace rtsched
