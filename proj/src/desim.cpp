#include "lbsq/desim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <thread>

#include "lbsq/random.hpp"

namespace lbsq::desim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
}

double parse_number(const std::string& text, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::InvalidConfig, "replay line " + std::to_string(line_no) + ": bad number '" + text + "'");
    }
}

}  // namespace

ReplaySchedule parse_replay(std::istream& in) {
    ReplaySchedule sched;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line.substr(0, line.find('#')));
        if (t.empty()) continue;
        const auto cells = split_csv(t);
        if (cells[0] == "kind") continue;
        if (cells[0] == "arrival" && cells.size() >= 2) {
            const double at = parse_number(cells[1], line_no);
            if (at < 0.0 || (!sched.arrivals.empty() && at < sched.arrivals.back())) {
                throw Error(ErrorKind::InvalidConfig,
                            "replay line " + std::to_string(line_no) + ": arrivals must be non-negative and sorted");
            }
            sched.arrivals.push_back(at);
        } else if (cells[0] == "attempt" && cells.size() >= 3) {
            AttemptOverride a;
            a.duration = parse_number(cells[1], line_no);
            if (!(a.duration > 0.0)) {
                throw Error(ErrorKind::InvalidConfig,
                            "replay line " + std::to_string(line_no) + ": attempt duration must be positive");
            }
            if (cells[2] == "success") {
                a.success = true;
            } else if (cells[2] == "fail") {
                a.success = false;
            } else {
                throw Error(ErrorKind::InvalidConfig,
                            "replay line " + std::to_string(line_no) + ": outcome must be success or fail");
            }
            sched.attempts.push_back(a);
        } else {
            throw Error(ErrorKind::InvalidConfig, "replay line " + std::to_string(line_no) + ": unrecognised row");
        }
    }
    return sched;
}

ReplaySchedule load_replay(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open replay file " + path);
    return parse_replay(in);
}

SystemParams check_config(const SimConfig& cfg) {
    const SystemParams p = cfg.allow_unstable ? admit_unstable(cfg.params) : validate_params(cfg.params);
    if (cfg.replications < 1) throw Error(ErrorKind::InvalidConfig, "replications must be at least 1");
    if (!(cfg.warmup >= 0.0)) throw Error(ErrorKind::InvalidConfig, "warmup must be non-negative");
    if (cfg.horizon == 0.0 && cfg.replay) {
        if (cfg.warmup != 0.0) throw Error(ErrorKind::InvalidConfig, "open-ended replay requires zero warmup");
    } else if (!(cfg.horizon > 0.0) || !std::isfinite(cfg.horizon)) {
        throw Error(ErrorKind::InvalidConfig, "horizon must be positive and finite");
    } else if (!(cfg.warmup < cfg.horizon)) {
        throw Error(ErrorKind::InvalidConfig, "warmup must be shorter than the horizon");
    }
    if (cfg.service_mode == ServiceMode::GeometricClique) {
        geometry::GeometryConfig g = cfg.geometry;
        g.k = p.k();
        geometry::check_config(g);
        if (cfg.clique_window != 0 && cfg.clique_window < static_cast<std::size_t>(p.k())) {
            throw Error(ErrorKind::InvalidConfig, "clique window must be at least k");
        }
    }
    return p;
}

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Arrival: return "arrival";
        case EventKind::AttemptStart: return "attempt_start";
        case EventKind::AttemptFail: return "attempt_fail";
        case EventKind::Departure: return "departure";
    }
    return "unknown";
}

void write_trace(std::ostream& out, const std::vector<TraceEvent>& events) {
    out << "time,event_kind,queue_len_after,query_id\n";
    char buf[64];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof buf, "%.12g", e.time);
        out << buf << ',' << to_string(e.kind) << ',' << e.level_after << ',';
        if (e.query_id) {
            out << *e.query_id;
        } else {
            out << '-';
        }
        out << '\n';
    }
}

namespace {

struct Waiting {
    std::uint64_t id;
    double arrival;
    LbsQuery geometry;
};

class Simulation {
public:
    Simulation(const SimConfig& cfg, const SystemParams& p, std::size_t replication)
        : cfg_(cfg),
          p_(p),
          k_(static_cast<std::size_t>(p.k())),
          window_(cfg.clique_window == 0 ? 2 * k_ : cfg.clique_window),
          arrivals_rng_(cfg.seed, substream_id(replication, StreamPurpose::Arrivals)),
          service_rng_(cfg.seed, substream_id(replication, StreamPurpose::ServiceTimes)),
          success_rng_(cfg.seed, substream_id(replication, StreamPurpose::Success)),
          position_rng_(cfg.seed, substream_id(replication, StreamPurpose::Positions)) {
        geometry_ = cfg.geometry;
        geometry_.k = p.k();
        if (cfg.record_path) path_.steps.push_back({0.0, 0});
    }

    RunResult execute() {
        const bool open_ended = cfg_.replay && cfg_.horizon == 0.0;
        const double horizon = open_ended ? kInf : cfg_.horizon;
        next_arrival_ = draw_next_arrival(0.0);

        while (true) {
            const double next = std::min(next_arrival_, attempt_end_);
            if (next == kInf || next > horizon) break;
            // Arrivals win ties with completions.
            if (next_arrival_ <= attempt_end_) {
                on_arrival(next_arrival_);
            } else {
                on_completion(attempt_end_);
            }
        }
        const double end = open_ended ? now_ : horizon;
        advance(end);
        path_.end_time = end;
        path_.final_level = queue_.size();
        return {std::move(path_), make_report(end)};
    }

private:
    double draw_next_arrival(double from) {
        if (cfg_.replay) {
            const auto& arr = cfg_.replay->arrivals;
            return replay_arrival_ < arr.size() ? arr[replay_arrival_++] : kInf;
        }
        return from + arrivals_rng_.exponential(p_.lambda());
    }

    void advance(double to) {
        const double lo = std::max(now_, cfg_.warmup);
        if (to > lo) {
            const double dur = to - lo;
            const std::size_t level = queue_.size();
            area_ += static_cast<double>(level) * dur;
            if (level_time_.size() <= level) level_time_.resize(level + 1, 0.0);
            level_time_[level] += dur;
            if (busy_) busy_time_ += dur;
        }
        now_ = std::max(now_, to);
    }

    void trace(EventKind kind, std::optional<std::uint64_t> id = std::nullopt) {
        if (cfg_.trace) path_.trace.push_back({now_, kind, queue_.size(), id});
    }

    void step() {
        if (cfg_.record_path) path_.steps.push_back({now_, queue_.size()});
    }

    void on_arrival(double t) {
        advance(t);
        const std::size_t level = queue_.size();
        if (t >= cfg_.warmup) {
            ++window_arrivals_;
            if (seen_.size() <= level) seen_.resize(level + 1, 0);
            ++seen_[level];
        }
        const std::uint64_t id = ++path_.arrivals;
        Waiting w{id, t, {}};
        if (cfg_.service_mode == ServiceMode::GeometricClique && !cfg_.replay) {
            w.geometry = geometry::sample_query(geometry_, static_cast<std::size_t>(id - 1), position_rng_);
            w.geometry.user_id = id;
            w.geometry.timestamp = t;
        }
        queue_.push_back(std::move(w));
        trace(EventKind::Arrival, id);
        step();
        blocked_ = false;
        next_arrival_ = draw_next_arrival(t);
        try_start();
    }

    void try_start() {
        if (busy_ || blocked_ || queue_.size() < k_) return;
        double duration = 0.0;
        if (cfg_.replay) {
            if (replay_attempt_ >= cfg_.replay->attempts.size()) return;
            duration = cfg_.replay->attempts[replay_attempt_].duration;
        } else {
            duration = service_rng_.exponential(p_.mu());
        }
        if (!in_busy_period_) {
            close_period(now_);
            in_busy_period_ = true;
            period_start_ = now_;
        }
        busy_ = true;
        attempt_start_ = now_;
        attempt_end_ = now_ + duration;
        trace(EventKind::AttemptStart);
    }

    bool draw_outcome(std::vector<std::size_t>& members) {
        members.clear();
        if (cfg_.replay) {
            const bool ok = cfg_.replay->attempts[replay_attempt_++].success;
            if (ok) {
                for (std::size_t i = 0; i < k_; ++i) members.push_back(i);
            }
            return ok;
        }
        if (cfg_.service_mode == ServiceMode::Bernoulli) {
            if (!success_rng_.bernoulli(p_.r())) return false;
            for (std::size_t i = 0; i < k_; ++i) members.push_back(i);
            return true;
        }
        const std::size_t span = std::min(queue_.size(), window_);
        std::vector<LbsQuery> nodes;
        nodes.reserve(span);
        for (std::size_t i = 0; i < span; ++i) nodes.push_back(queue_[i].geometry);
        const auto g = geometry::build_graph(std::move(nodes), geometry_.edge_rule);
        const auto clique = geometry::find_clique(g, p_.k());
        if (!clique) return false;
        members = *clique;
        return true;
    }

    void on_completion(double t) {
        advance(t);
        busy_ = false;
        attempt_end_ = kInf;
        ++path_.attempts;
        const bool counted = attempt_start_ >= cfg_.warmup;
        if (counted) ++window_attempts_;

        std::vector<std::size_t> members;
        if (draw_outcome(members)) {
            if (counted) ++window_successes_;
            // members are ascending; erase from the back so indices stay valid.
            std::vector<Waiting> leaving;
            for (auto it = members.rbegin(); it != members.rend(); ++it) {
                leaving.push_back(std::move(queue_[*it]));
                queue_.erase(queue_.begin() + static_cast<std::ptrdiff_t>(*it));
            }
            std::reverse(leaving.begin(), leaving.end());
            for (const auto& w : leaving) {
                ++path_.departures;
                if (w.arrival >= cfg_.warmup) {
                    sojourns_.push_back(t - w.arrival);
                    wait_sum_ += attempt_start_ - w.arrival;
                }
                if (cfg_.record_path) path_.served.push_back({w.id, w.arrival, t, attempt_start_});
                trace(EventKind::Departure, w.id);
            }
            step();
        } else {
            ++path_.failures;
            trace(EventKind::AttemptFail);
            if (cfg_.retry == RetryPolicy::WaitForArrival) blocked_ = true;
        }
        try_start();
        if (!busy_) close_period(t);
    }

    // Ends the current busy or idle period at t and opens the other kind.
    void close_period(double t) {
        const double len = t - period_start_;
        if (period_start_ >= cfg_.warmup && len > 0.0) {
            if (in_busy_period_) {
                busy_sum_ += len;
                ++busy_count_;
                if (cfg_.record_path) path_.busy_periods.push_back(len);
            } else {
                idle_sum_ += len;
                ++idle_count_;
                if (cfg_.record_path) path_.idle_periods.push_back(len);
            }
        }
        if (in_busy_period_) in_busy_period_ = false;
        period_start_ = t;
    }

    SimReport make_report(double end) {
        SimReport rep;
        rep.observed_time = std::max(0.0, end - cfg_.warmup);
        rep.area_under_curve = area_;
        rep.window_arrivals = window_arrivals_;
        rep.window_attempts = window_attempts_;
        rep.window_successes = window_successes_;
        rep.level_time = level_time_;
        rep.level_seen_by_arrivals = seen_;
        rep.sojourn_samples = sojourns_.size();
        if (rep.observed_time > 0.0) {
            rep.time_average_level = area_ / rep.observed_time;
            rep.utilization = busy_time_ / rep.observed_time;
            rep.observed_arrival_rate = static_cast<double>(window_arrivals_) / rep.observed_time;
        }
        double wq = 0.0;
        if (!sojourns_.empty()) {
            double sum = 0.0;
            for (double s : sojourns_) sum += s;
            const double n = static_cast<double>(sojourns_.size());
            rep.mean_sojourn = sum / n;
            wq = wait_sum_ / n;
            rep.p50_sojourn = percentile(0.50);
            rep.p95_sojourn = percentile(0.95);
        }
        if (busy_count_ > 0) rep.mean_busy_period = busy_sum_ / static_cast<double>(busy_count_);
        if (idle_count_ > 0) rep.mean_idle_period = idle_sum_ / static_cast<double>(idle_count_);

        auto& m = rep.metrics;
        m.provenance = Provenance::Simulation;
        m.params = cfg_.params;
        m.L = rep.time_average_level;
        m.W = rep.mean_sojourn;
        m.Wq = wq;
        m.Lq = rep.observed_arrival_rate * wq;
        m.S = rep.utilization;
        if (m.L > 0.0) rep.little_residual = std::abs(m.L - rep.observed_arrival_rate * m.W) / m.L;
        return rep;
    }

    double percentile(double q) {
        const auto idx = static_cast<std::size_t>(q * static_cast<double>(sojourns_.size() - 1));
        std::nth_element(sojourns_.begin(), sojourns_.begin() + static_cast<std::ptrdiff_t>(idx), sojourns_.end());
        return sojourns_[idx];
    }

    const SimConfig& cfg_;
    SystemParams p_;
    std::size_t k_;
    std::size_t window_;
    geometry::GeometryConfig geometry_;
    RandomStream arrivals_rng_;
    RandomStream service_rng_;
    RandomStream success_rng_;
    RandomStream position_rng_;

    std::deque<Waiting> queue_;
    double now_ = 0.0;
    double next_arrival_ = kInf;
    double attempt_end_ = kInf;
    double attempt_start_ = 0.0;
    bool busy_ = false;
    bool blocked_ = false;
    std::size_t replay_arrival_ = 0;
    std::size_t replay_attempt_ = 0;

    bool in_busy_period_ = false;
    double period_start_ = 0.0;
    double busy_sum_ = 0.0;
    double idle_sum_ = 0.0;
    std::uint64_t busy_count_ = 0;
    std::uint64_t idle_count_ = 0;

    double area_ = 0.0;
    double busy_time_ = 0.0;
    double wait_sum_ = 0.0;
    std::uint64_t window_arrivals_ = 0;
    std::uint64_t window_attempts_ = 0;
    std::uint64_t window_successes_ = 0;
    std::vector<double> level_time_;
    std::vector<std::uint64_t> seen_;
    std::vector<double> sojourns_;
    SamplePath path_;
};

}  // namespace

RunResult run(const SimConfig& cfg, std::size_t replication) {
    const SystemParams p = check_config(cfg);
    Simulation sim(cfg, p, replication);
    return sim.execute();
}

Interval summarize(const std::vector<double>& values) {
    Interval out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values) sum += v;
    out.mean = sum / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

ReplicatedReport replicate(const SimConfig& cfg, unsigned threads) {
    check_config(cfg);
    if (cfg.replications < 2) throw Error(ErrorKind::InvalidConfig, "replicate needs at least 2 replications");
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(cfg.replications));

    SimConfig per_rep = cfg;
    per_rep.trace = false;
    per_rep.record_path = false;

    ReplicatedReport out;
    out.replications.resize(cfg.replications);
    std::vector<std::exception_ptr> errors(cfg.replications);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.replications; i = next++) {
            try {
                out.replications[i] = run(per_rep, i).report;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    auto collect = [&](auto getter) {
        std::vector<double> v;
        v.reserve(out.replications.size());
        for (const auto& r : out.replications) v.push_back(getter(r));
        return summarize(v);
    };
    out.L = collect([](const SimReport& r) { return r.metrics.L; });
    out.Lq = collect([](const SimReport& r) { return r.metrics.Lq; });
    out.W = collect([](const SimReport& r) { return r.metrics.W; });
    out.Wq = collect([](const SimReport& r) { return r.metrics.Wq; });
    out.S = collect([](const SimReport& r) { return r.metrics.S; });
    out.p95_sojourn = collect([](const SimReport& r) { return r.p95_sojourn; });
    out.little_residual = collect([](const SimReport& r) { return r.little_residual; });
    out.mean_busy_period = collect([](const SimReport& r) { return r.mean_busy_period; });
    out.mean_idle_period = collect([](const SimReport& r) { return r.mean_idle_period; });

    out.metrics.provenance = Provenance::Simulation;
    out.metrics.params = cfg.params;
    out.metrics.L = out.L.mean;
    out.metrics.Lq = out.Lq.mean;
    out.metrics.W = out.W.mean;
    out.metrics.Wq = out.Wq.mean;
    out.metrics.S = out.S.mean;
    return out;
}

std::vector<Comparison> compare(const MetricsReport& sim, const MetricsReport& reference) {
    const auto& a = sim.params;
    const auto& b = reference.params;
    if (!(a.lambda == b.lambda && a.mu == b.mu && a.k == b.k && a.r == b.r)) {
        throw Error(ErrorKind::ParameterMismatch, "reports were produced for different parameters");
    }
    auto rel = [](double s, double r) {
        if (r == 0.0) return s == 0.0 ? 0.0 : kInf;
        return std::abs(s - r) / std::abs(r);
    };
    return {
        {"L", sim.L, reference.L, rel(sim.L, reference.L)},
        {"Lq", sim.Lq, reference.Lq, rel(sim.Lq, reference.Lq)},
        {"W", sim.W, reference.W, rel(sim.W, reference.W)},
        {"Wq", sim.Wq, reference.Wq, rel(sim.Wq, reference.Wq)},
        {"S", sim.S, reference.S, rel(sim.S, reference.S)},
    };
}

}  // namespace lbsq::desim
