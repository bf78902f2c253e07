#include "lbsq/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

namespace lbsq::cli {

geometry::GeometryConfig RunConfig::geometry(int k) const {
    geometry::GeometryConfig g;
    g.region = region;
    g.edge_rule = edge_rule;
    g.k = k;
    g.mmb_areas = mmb;
    if (dx_range || dy_range) {
        geometry::UniformTolerances u;
        const auto dxr = dx_range.value_or(std::pair{dx.front(), dx.front()});
        const auto dyr = dy_range.value_or(std::pair{dy.front(), dy.front()});
        u.dx_min = dxr.first;
        u.dx_max = dxr.second;
        u.dy_min = dyr.first;
        u.dy_max = dyr.second;
        g.tolerance_model = u;
    } else {
        geometry::FixedTolerances f;
        const std::size_t n = std::max(dx.size(), dy.size());
        for (std::size_t i = 0; i < n; ++i) f.tolerances.push_back({dx[i % dx.size()], dy[i % dy.size()]});
        g.tolerance_model = f;
    }
    return g;
}

desim::SimConfig RunConfig::sim_config() const {
    desim::SimConfig s;
    s.params = params;
    s.service_mode = mode;
    s.geometry = geometry(params.k);
    s.clique_window = window;
    s.retry = retry;
    s.horizon = horizon;
    s.warmup = warmup;
    s.replications = reps;
    s.seed = seed;
    s.trace = trace;
    s.allow_unstable = unstable;
    return s;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
    throw Error(ErrorKind::InvalidConfig, key + " = '" + value + "': " + why);
}

double to_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) bad_value(key, value, "trailing characters");
        if (!std::isfinite(v)) bad_value(key, value, "not finite");
        return v;
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, value, "expected a number");
    }
}

std::uint64_t to_count(const std::string& key, const std::string& value) {
    const double v = to_double(key, value);
    if (v < 0.0 || v != std::floor(v) || v > 1e18) bad_value(key, value, "expected a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

bool to_bool(const std::string& key, const std::string& value) {
    std::string v = value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
    if (v == "0" || v == "false" || v == "no" || v == "off") return false;
    bad_value(key, value, "expected a boolean");
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) bad_value(key, value, "empty list");
    return out;
}

std::pair<double, double> to_range(const std::string& key, const std::string& value) {
    const auto colon = value.find(':');
    if (colon == std::string::npos) bad_value(key, value, "expected lo:hi");
    const double lo = to_double(key, trim(value.substr(0, colon)));
    const double hi = to_double(key, trim(value.substr(colon + 1)));
    if (lo > hi) bad_value(key, value, "lo exceeds hi");
    return {lo, hi};
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"core.lambda", [](RunConfig& c, const auto& k, const auto& v) { c.params.lambda = to_double(k, v); }},
        {"core.mu", [](RunConfig& c, const auto& k, const auto& v) { c.params.mu = to_double(k, v); }},
        {"core.k",
         [](RunConfig& c, const auto& k, const auto& v) {
             const auto n = to_count(k, v);
             if (n > 1000) bad_value(k, v, "k is unreasonably large");
             c.params.k = static_cast<int>(n);
         }},
        {"core.r", [](RunConfig& c, const auto& k, const auto& v) { c.params.r = to_double(k, v); }},

        {"analytic.report_states",
         [](RunConfig& c, const auto& k, const auto& v) { c.report_states = to_count(k, v); }},
        {"analytic.head", [](RunConfig& c, const auto& k, const auto& v) { c.head = to_count(k, v); }},
        {"analytic.tolerance",
         [](RunConfig& c, const auto& k, const auto& v) { c.root_tolerance = to_double(k, v); }},
        {"analytic.mm1", [](RunConfig& c, const auto& k, const auto& v) { c.mm1 = to_bool(k, v); }},

        {"ctmc.truncation", [](RunConfig& c, const auto& k, const auto& v) { c.truncation = to_count(k, v); }},

        {"desim.horizon", [](RunConfig& c, const auto& k, const auto& v) { c.horizon = to_double(k, v); }},
        {"desim.warmup", [](RunConfig& c, const auto& k, const auto& v) { c.warmup = to_double(k, v); }},
        {"desim.reps", [](RunConfig& c, const auto& k, const auto& v) { c.reps = to_count(k, v); }},
        {"desim.mode",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "bernoulli") {
                 c.mode = desim::ServiceMode::Bernoulli;
             } else if (v == "geometric") {
                 c.mode = desim::ServiceMode::GeometricClique;
             } else {
                 bad_value(k, v, "expected bernoulli or geometric");
             }
         }},
        {"desim.retry",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "immediate") {
                 c.retry = desim::RetryPolicy::Immediate;
             } else if (v == "wait") {
                 c.retry = desim::RetryPolicy::WaitForArrival;
             } else {
                 bad_value(k, v, "expected immediate or wait");
             }
         }},
        {"desim.window", [](RunConfig& c, const auto& k, const auto& v) { c.window = to_count(k, v); }},
        {"desim.trace", [](RunConfig& c, const auto& k, const auto& v) { c.trace = to_bool(k, v); }},
        {"desim.trace_out", [](RunConfig& c, const auto&, const auto& v) { c.trace_out = v; }},
        {"desim.replay", [](RunConfig& c, const auto&, const auto& v) { c.replay = v; }},
        {"desim.unstable", [](RunConfig& c, const auto& k, const auto& v) { c.unstable = to_bool(k, v); }},
        {"desim.threads",
         [](RunConfig& c, const auto& k, const auto& v) { c.threads = static_cast<unsigned>(to_count(k, v)); }},

        {"geometry.width", [](RunConfig& c, const auto& k, const auto& v) { c.region.width = to_double(k, v); }},
        {"geometry.height", [](RunConfig& c, const auto& k, const auto& v) { c.region.height = to_double(k, v); }},
        {"geometry.edge_rule",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "containment") {
                 c.edge_rule = geometry::EdgeRule::MutualContainment;
             } else if (v == "avgdist") {
                 c.edge_rule = geometry::EdgeRule::AverageDistance;
             } else if (v == "mmb") {
                 c.edge_rule = geometry::EdgeRule::Mmb;
             } else {
                 bad_value(k, v, "expected containment, avgdist or mmb");
             }
         }},
        {"geometry.dx", [](RunConfig& c, const auto& k, const auto& v) { c.dx = to_list(k, v); }},
        {"geometry.dy", [](RunConfig& c, const auto& k, const auto& v) { c.dy = to_list(k, v); }},
        {"geometry.dx_range", [](RunConfig& c, const auto& k, const auto& v) { c.dx_range = to_range(k, v); }},
        {"geometry.dy_range", [](RunConfig& c, const auto& k, const auto& v) { c.dy_range = to_range(k, v); }},
        {"geometry.mmb", [](RunConfig& c, const auto& k, const auto& v) { c.mmb = to_list(k, v); }},
        {"geometry.samples", [](RunConfig& c, const auto& k, const auto& v) { c.samples = to_count(k, v); }},

        {"cli.seed", [](RunConfig& c, const auto& k, const auto& v) { c.seed = to_count(k, v); }},
        {"cli.format",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "csv") {
                 c.format = OutputFormat::Csv;
             } else if (v == "json") {
                 c.format = OutputFormat::Json;
             } else {
                 bad_value(k, v, "expected csv or json");
             }
         }},
        {"cli.out", [](RunConfig& c, const auto&, const auto& v) { c.out = v; }},
        {"cli.reference",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "ctmc") {
                 c.reference = Reference::Ctmc;
             } else if (v == "paper") {
                 c.reference = Reference::Paper;
             } else {
                 bad_value(k, v, "expected ctmc or paper");
             }
         }},
        {"cli.bound", [](RunConfig& c, const auto& k, const auto& v) { c.bound = to_double(k, v); }},
        {"cli.strict", [](RunConfig& c, const auto& k, const auto& v) { c.strict = to_bool(k, v); }},
        {"cli.variable",
         [](RunConfig& c, const auto& k, const auto& v) {
             if (v == "lambda") {
                 c.variable = SweepVariable::Lambda;
             } else if (v == "r") {
                 c.variable = SweepVariable::R;
             } else if (v == "k") {
                 c.variable = SweepVariable::K;
             } else {
                 bad_value(k, v, "expected lambda, r or k");
             }
         }},
        {"cli.values", [](RunConfig& c, const auto& k, const auto& v) { c.values = to_list(k, v); }},
        {"cli.with_sim", [](RunConfig& c, const auto& k, const auto& v) { c.with_sim = to_bool(k, v); }},
    };
    return table;
}

}  // namespace

void apply_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = table.find(key);
    if (it == table.end()) throw Error(ErrorKind::InvalidConfig, "unknown config key '" + key + "'");
    it->second(cfg, key, trim(value));
}

std::vector<std::pair<std::string, std::string>> parse_config(std::istream& in) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string t = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": bad section header");
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::InvalidConfig, "config line " + std::to_string(line_no) + ": expected key = value");
        }
        std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.find('.') == std::string::npos) {
            if (section.empty()) {
                throw Error(ErrorKind::InvalidConfig,
                            "config line " + std::to_string(line_no) + ": key outside any section");
            }
            key = section + "." + key;
        }
        out.emplace_back(std::move(key), value);
    }
    return out;
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open config file " + path);
    for (const auto& [key, value] : parse_config(in)) apply_key(cfg, key, value);
}

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, _] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

}  // namespace lbsq::cli
