#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "lbsq/core.hpp"
#include "lbsq/geometry.hpp"

namespace lbsq::desim {

enum class ServiceMode { Bernoulli, GeometricClique };

/// What happens after a failed attempt. Immediate retry matches the Markov
/// chain (attempts recur at rate mu while n >= k); WaitForArrival holds the
/// server idle until the next arrival.
enum class RetryPolicy { Immediate, WaitForArrival };

struct AttemptOverride {
    double duration = 0.0;
    bool success = false;
};

/// Fixed arrival instants and attempt outcomes for deterministic replays.
/// A replay draws nothing from the random streams; once the attempt list is
/// exhausted no further attempts start.
struct ReplaySchedule {
    std::vector<double> arrivals;
    std::vector<AttemptOverride> attempts;
};

/// Reads the replay CSV: rows `arrival,<time>` and
/// `attempt,<duration>,<success|fail>`; `#` comments (whole-line or trailing) and a leading
/// `kind,...` header are ignored. Throws InvalidConfig / IoFailure.
ReplaySchedule parse_replay(std::istream& in);
ReplaySchedule load_replay(const std::string& path);

struct SimConfig {
    RawParams params;
    ServiceMode service_mode = ServiceMode::Bernoulli;
    geometry::GeometryConfig geometry;  // GeometricClique only; k is taken from params
    std::size_t clique_window = 0;      // 0 means 2k
    RetryPolicy retry = RetryPolicy::Immediate;
    double horizon = 2e5;  // seconds; 0 with a replay means "until the schedule is exhausted"
    double warmup = 1e4;
    std::size_t replications = 1;
    std::uint64_t seed = 1;
    bool trace = false;
    bool record_path = false;  // keep the queue-length step function and per-query records
    bool allow_unstable = false;
    std::optional<ReplaySchedule> replay;
};

/// Throws InvalidConfig (or the parameter errors) for an unusable config.
/// Returns the checked parameters.
SystemParams check_config(const SimConfig& cfg);

enum class EventKind { Arrival, AttemptStart, AttemptFail, Departure };

std::string_view to_string(EventKind kind);

struct TraceEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    std::size_t level_after = 0;
    std::optional<std::uint64_t> query_id;
};

/// Header `time,event_kind,queue_len_after,query_id`, one row per event,
/// times with 12 significant digits, `-` for events without a query.
void write_trace(std::ostream& out, const std::vector<TraceEvent>& events);

struct LevelStep {
    double time = 0.0;
    std::size_t level = 0;
};

struct QueryRecord {
    std::uint64_t id = 0;
    double arrival = 0.0;
    double departure = 0.0;
    double service_start = 0.0;  // start of the successful attempt

    double sojourn() const noexcept { return departure - arrival; }
};

struct SamplePath {
    std::vector<LevelStep> steps;       // record_path only; starts with (0, 0)
    std::vector<QueryRecord> served;    // record_path only
    std::vector<double> busy_periods;   // record_path only
    std::vector<double> idle_periods;   // record_path only
    std::vector<TraceEvent> trace;      // trace only
    std::uint64_t arrivals = 0;         // whole run
    std::uint64_t departures = 0;
    std::uint64_t attempts = 0;
    std::uint64_t failures = 0;
    std::size_t final_level = 0;
    double end_time = 0.0;
};

/// Statistics over the post-warmup window [warmup, end].
struct SimReport {
    MetricsReport metrics;  // provenance simulation
    double observed_time = 0.0;
    double area_under_curve = 0.0;
    double time_average_level = 0.0;  // area_under_curve / observed_time
    double mean_sojourn = 0.0;
    double p50_sojourn = 0.0;
    double p95_sojourn = 0.0;
    double utilization = 0.0;  // fraction of time an attempt is in progress
    double mean_busy_period = 0.0;
    double mean_idle_period = 0.0;
    double observed_arrival_rate = 0.0;
    double little_residual = 0.0;  // |L - lambda_obs W| / L
    std::uint64_t window_arrivals = 0;
    std::uint64_t window_attempts = 0;
    std::uint64_t window_successes = 0;
    std::uint64_t sojourn_samples = 0;
    std::vector<double> level_time;    // time spent at each level
    std::vector<std::uint64_t> level_seen_by_arrivals;
};

struct RunResult {
    SamplePath path;
    SimReport report;
};

/// One replication on the substreams of the given replication index.
RunResult run(const SimConfig& cfg, std::size_t replication = 0);

struct Interval {
    double mean = 0.0;
    double half_width = 0.0;  // 95% normal approximation
};

struct ReplicatedReport {
    std::vector<SimReport> replications;
    MetricsReport metrics;  // means across replications, provenance simulation
    Interval L;
    Interval Lq;
    Interval W;
    Interval Wq;
    Interval S;
    Interval p95_sojourn;
    Interval little_residual;
    Interval mean_busy_period;
    Interval mean_idle_period;
};

Interval summarize(const std::vector<double>& values);

/// Runs cfg.replications (>= 2) independent replications on disjoint
/// substreams, in parallel when threads > 1. Output does not depend on the
/// thread count.
ReplicatedReport replicate(const SimConfig& cfg, unsigned threads = 0);

struct Comparison {
    std::string metric;
    double simulated = 0.0;
    double reference = 0.0;
    double relative_error = 0.0;
};

/// |sim - ref| / |ref| for L, Lq, W, Wq, S. Throws ParameterMismatch when the
/// two reports were produced for different parameters.
std::vector<Comparison> compare(const MetricsReport& sim, const MetricsReport& reference);

}  // namespace lbsq::desim
