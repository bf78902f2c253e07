#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lbsq/core.hpp"
#include "lbsq/desim.hpp"
#include "lbsq/geometry.hpp"
#include "lbsq/table.hpp"

namespace lbsq::cli {

/// Environment variable naming a default config file.
inline constexpr const char* kConfigEnv = "LBSQ_CONFIG";

enum class Reference { Ctmc, Paper };
enum class SweepVariable { Lambda, R, K };

/// Everything a subcommand may need. Defaults are the experimental defaults
/// lambda = 5, mu = 10, k = 3, r = 0.33.
struct RunConfig {
    RawParams params;

    // analytic
    std::size_t report_states = 200;
    std::size_t head = 20;
    double root_tolerance = 1e-10;
    bool mm1 = false;

    // ctmc
    std::size_t truncation = 300;

    // desim
    double horizon = 2e5;
    double warmup = 1e4;
    std::size_t reps = 20;
    desim::ServiceMode mode = desim::ServiceMode::Bernoulli;
    desim::RetryPolicy retry = desim::RetryPolicy::Immediate;
    std::size_t window = 0;
    bool trace = false;
    std::string trace_out;
    std::string replay;
    bool unstable = false;
    unsigned threads = 0;

    // geometry
    Region region;
    geometry::EdgeRule edge_rule = geometry::EdgeRule::MutualContainment;
    std::vector<double> dx{0.2};
    std::vector<double> dy{0.2};
    std::optional<std::pair<double, double>> dx_range;  // switches to iid-uniform tolerances
    std::optional<std::pair<double, double>> dy_range;
    std::vector<double> mmb;
    std::size_t samples = 100'000;

    // output / comparison
    std::uint64_t seed = 1;
    OutputFormat format = OutputFormat::Csv;
    std::string out;  // empty = stdout
    Reference reference = Reference::Ctmc;
    double bound = 0.02;
    bool strict = false;
    std::optional<SweepVariable> variable;
    std::vector<double> values;
    bool with_sim = false;

    /// Geometry section as a GeometryConfig with the given clique size.
    geometry::GeometryConfig geometry(int k) const;

    /// Simulation section merged with params and geometry.
    desim::SimConfig sim_config() const;
};

/// Sets one `section.key` to a textual value. Throws InvalidConfig for unknown
/// keys or unparsable values.
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Flat key-value text with `[section]` headers mirroring module names:
///
///     # comment
///     [core]
///     lambda = 5
///     [desim]
///     horizon = 2e5
///
/// Keys may also be written fully qualified (`core.lambda = 5`) anywhere.
/// Returns the keys in file order.
std::vector<std::pair<std::string, std::string>> parse_config(std::istream& in);

void load_config_file(RunConfig& cfg, const std::string& path);

/// Every recognised key, for help output and tests.
const std::vector<std::string>& known_keys();

}  // namespace lbsq::cli
