#include "lbsq/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "lbsq/analytic.hpp"
#include "lbsq/ctmc.hpp"

namespace lbsq::cli {

namespace {

using std::int64_t;

void add_metrics(Table& t, const MetricsReport& m, const std::string& layer) {
    const std::pair<const char*, double> rows[] = {{"L", m.L}, {"Lq", m.Lq}, {"W", m.W}, {"Wq", m.Wq}, {"S", m.S}};
    for (const auto& [name, value] : rows) t.add({std::string(name), std::monostate{}, layer, value, std::string{}});
    for (const auto& w : m.warnings) t.add({std::string("warning"), std::monostate{}, layer, std::monostate{}, w});
}

}  // namespace

Table analyze_table(const RunConfig& cfg) {
    const SystemParams p = validate_params(cfg.params);
    Table t;
    t.columns = {"quantity", "index", "layer", "value", "note"};

    t.add({std::string("rho"), std::monostate{}, std::string("input"), p.rho(),
           std::string("lambda/mu; diagnostic only, stability is lambda < mu r k")});
    t.add({std::string("capacity"), std::monostate{}, std::string("input"), p.capacity(), std::string("mu r k")});

    const auto root = analytic::solve_z0(p, cfg.root_tolerance);
    t.add({std::string("z0"), std::monostate{}, std::string("analytic"), root.z0, std::string{}});
    t.add({std::string("z0_residual"), std::monostate{}, std::string("analytic"), root.residual, std::string{}});
    t.add({std::string("z0_identity_residual"), std::monostate{}, std::string("analytic"), root.identity_residual,
           std::string{}});

    const auto dist = analytic::analytic_distribution(p, root, cfg.report_states);
    const std::size_t head = std::min(cfg.head, dist.probabilities.size() - 1);
    for (std::size_t n = 0; n <= head; ++n) {
        t.add({std::string("P_n"), static_cast<int64_t>(n), std::string("analytic-piecewise"), dist.probabilities[n],
               std::string{}});
    }
    t.add({std::string("total_mass"), std::monostate{}, std::string("analytic-piecewise"), dist.total_mass(),
           std::string("states 0..") + std::to_string(cfg.report_states) + " plus geometric tail"});

    const auto paper = analytic::paper_metrics(p, root);
    const auto exact = analytic::distribution_metrics(p, root, cfg.report_states);
    add_metrics(t, paper, "paper-closed-form");
    add_metrics(t, exact, "distribution");
    t.add({std::string("L_divergence"), std::monostate{}, std::string("paper-closed-form"),
           std::abs(paper.L - exact.L) / exact.L, std::string("|L_closed_form - L_distribution| / L_distribution")});

    if (cfg.mm1 || (p.k() == 1 && p.r() == 1.0)) {
        if (p.lambda() < p.mu()) {
            add_metrics(t, analytic::mm1_metrics(p.lambda(), p.mu()), "mm1-baseline");
        } else {
            t.add({std::string("warning"), std::monostate{}, std::string("mm1-baseline"), std::monostate{},
                   std::string("M/M/1 baseline needs lambda < mu")});
        }
    }
    if (p.r() == 1.0) {
        const auto red = analytic::reduction_check(p);
        t.add({std::string("reduction_max_deviation"), std::monostate{}, std::string("analytic-piecewise"),
               red.max_bulk_deviation, std::string("bulk-service law over n = k..50")});
    }
    return t;
}

namespace {

void add_sim_row(Table& t, const std::string& metric, const std::string& rep, double value,
                 std::optional<double> half_width = std::nullopt) {
    Cell hw = std::monostate{};
    if (half_width) hw = *half_width;
    t.add({metric, rep, value, hw});
}

void add_sim_report(Table& t, const desim::SimReport& r, const std::string& rep) {
    add_sim_row(t, "L", rep, r.metrics.L);
    add_sim_row(t, "Lq", rep, r.metrics.Lq);
    add_sim_row(t, "W", rep, r.metrics.W);
    add_sim_row(t, "Wq", rep, r.metrics.Wq);
    add_sim_row(t, "S", rep, r.metrics.S);
    add_sim_row(t, "area_under_curve", rep, r.area_under_curve);
    add_sim_row(t, "observed_time", rep, r.observed_time);
    add_sim_row(t, "p50_sojourn", rep, r.p50_sojourn);
    add_sim_row(t, "p95_sojourn", rep, r.p95_sojourn);
    add_sim_row(t, "mean_busy_period", rep, r.mean_busy_period);
    add_sim_row(t, "mean_idle_period", rep, r.mean_idle_period);
    add_sim_row(t, "observed_arrival_rate", rep, r.observed_arrival_rate);
    add_sim_row(t, "little_residual", rep, r.little_residual);
    add_sim_row(t, "arrivals", rep, static_cast<double>(r.window_arrivals));
    add_sim_row(t, "attempts", rep, static_cast<double>(r.window_attempts));
    add_sim_row(t, "successes", rep, static_cast<double>(r.window_successes));
}

desim::SimConfig sim_config_with_replay(const RunConfig& cfg) {
    desim::SimConfig sc = cfg.sim_config();
    if (!cfg.replay.empty()) sc.replay = desim::load_replay(cfg.replay);
    return sc;
}

}  // namespace

SimulateOutput simulate_table(const RunConfig& cfg) {
    desim::SimConfig sc = sim_config_with_replay(cfg);
    SimulateOutput out;
    out.table.columns = {"metric", "replication", "value", "half_width"};

    if (sc.replay || sc.replications == 1) {
        sc.replications = 1;
        auto res = desim::run(sc, 0);
        add_sim_report(out.table, res.report, "0");
        out.trace = std::move(res.path.trace);
        return out;
    }

    const auto rep = desim::replicate(sc, cfg.threads);
    add_sim_row(out.table, "L", "mean", rep.L.mean, rep.L.half_width);
    add_sim_row(out.table, "Lq", "mean", rep.Lq.mean, rep.Lq.half_width);
    add_sim_row(out.table, "W", "mean", rep.W.mean, rep.W.half_width);
    add_sim_row(out.table, "Wq", "mean", rep.Wq.mean, rep.Wq.half_width);
    add_sim_row(out.table, "S", "mean", rep.S.mean, rep.S.half_width);
    add_sim_row(out.table, "p95_sojourn", "mean", rep.p95_sojourn.mean, rep.p95_sojourn.half_width);
    add_sim_row(out.table, "mean_busy_period", "mean", rep.mean_busy_period.mean, rep.mean_busy_period.half_width);
    add_sim_row(out.table, "mean_idle_period", "mean", rep.mean_idle_period.mean, rep.mean_idle_period.half_width);
    add_sim_row(out.table, "little_residual", "mean", rep.little_residual.mean, rep.little_residual.half_width);
    for (std::size_t i = 0; i < rep.replications.size(); ++i) {
        add_sim_report(out.table, rep.replications[i], std::to_string(i));
    }
    if (cfg.trace) {
        // The trace documents one replication; use the first.
        sc.replications = 1;
        sc.trace = true;
        out.trace = desim::run(sc, 0).path.trace;
    }
    return out;
}

namespace {

enum class Check { Enforced, Discrepancy, Info };

// Returns true when an enforced or strict-discrepancy row exceeds the bound.
bool add_comparison(Table& t, const std::string& name, const std::vector<desim::Comparison>& rows, double bound,
                    const std::set<std::string>& checked, Check mode) {
    bool exceeded = false;
    for (const auto& c : rows) {
        std::string status = "info";
        Cell bound_cell = std::monostate{};
        if (checked.count(c.metric) && mode != Check::Info) {
            bound_cell = bound;
            const bool over = !(c.relative_error <= bound);
            if (mode == Check::Enforced) {
                status = over ? "exceeded" : "ok";
            } else {
                status = over ? "discrepancy" : "ok";
            }
            exceeded = exceeded || over;
        }
        Cell rel = c.relative_error;
        t.add({name, c.metric, c.simulated, c.reference, rel, bound_cell, status});
    }
    return exceeded;
}

}  // namespace

ValidateOutput validate_table(const RunConfig& cfg) {
    const SystemParams p = validate_params(cfg.params);
    const auto root = analytic::solve_z0(p, cfg.root_tolerance);
    const auto exact = analytic::distribution_metrics(p, root, cfg.report_states);
    const auto paper = analytic::paper_metrics(p, root);
    const auto chain = ctmc::ctmc_metrics(ctmc::stationary(ctmc::build_generator(p, cfg.truncation)), p);

    desim::SimConfig sc = sim_config_with_replay(cfg);
    MetricsReport sim;
    if (sc.replications >= 2 && !sc.replay) {
        sim = desim::replicate(sc, cfg.threads).metrics;
    } else {
        sc.replications = 1;
        sim = desim::run(sc, 0).report.metrics;
    }

    ValidateOutput out;
    auto& t = out.table;
    t.columns = {"comparison", "metric", "value", "reference", "relative_error", "bound", "status"};
    const std::set<std::string> bounded{"L", "W"};

    const bool ctmc_over =
        add_comparison(t, "simulation-vs-ctmc", desim::compare(sim, chain), cfg.bound, bounded, Check::Enforced);
    add_comparison(t, "simulation-vs-distribution", desim::compare(sim, exact), cfg.bound, bounded, Check::Info);
    add_comparison(t, "distribution-vs-ctmc", desim::compare(exact, chain), cfg.bound, bounded, Check::Info);

    const Check paper_mode = cfg.reference == Reference::Paper ? Check::Discrepancy : Check::Info;
    const bool sim_paper_over =
        add_comparison(t, "simulation-vs-paper-closed-form", desim::compare(sim, paper), cfg.bound, bounded, paper_mode);
    const bool paper_over = add_comparison(t, "paper-closed-form-vs-distribution", desim::compare(paper, exact),
                                           cfg.bound, bounded, Check::Discrepancy);

    if (p.k() == 1 && p.r() == 1.0 && p.lambda() < p.mu()) {
        auto mm1 = analytic::mm1_metrics(p.lambda(), p.mu());
        add_comparison(t, "simulation-vs-mm1-baseline", desim::compare(sim, mm1), cfg.bound, bounded, Check::Info);
    }
    for (const auto& w : paper.warnings) {
        t.add({std::string("paper-closed-form-warning"), std::string("L"), std::monostate{}, std::monostate{},
               std::monostate{}, std::monostate{}, w});
    }

    if (ctmc_over) {
        out.exit_code = kExitBoundsExceeded;
    } else if (cfg.strict && (paper_over || sim_paper_over)) {
        out.exit_code = kExitBoundsExceeded;
    }
    return out;
}

namespace {

std::vector<double> default_values(SweepVariable v) {
    std::vector<double> out;
    switch (v) {
        case SweepVariable::Lambda:
            for (int i = 1; i <= 9; ++i) out.push_back(i);
            break;
        case SweepVariable::R:
            for (int i = 1; i <= 10; ++i) out.push_back(i / 10.0);
            break;
        case SweepVariable::K:
            for (int i = 1; i <= 6; ++i) out.push_back(i);
            break;
    }
    return out;
}

std::string variable_name(SweepVariable v) {
    switch (v) {
        case SweepVariable::Lambda: return "lambda";
        case SweepVariable::R: return "r";
        case SweepVariable::K: return "k";
    }
    return "?";
}

}  // namespace

Table sweep_table(const RunConfig& cfg) {
    if (!cfg.variable) throw Error(ErrorKind::InvalidConfig, "sweep needs --var lambda|r|k");
    const SweepVariable var = *cfg.variable;
    const std::vector<double> values = cfg.values.empty() ? default_values(var) : cfg.values;
    const std::string name = variable_name(var);

    Table t;
    t.columns = {"variable", "value", "layer", "metric", "result", "stable", "note"};
    std::vector<std::string> layers{"paper-closed-form", "distribution", "ctmc"};
    if (cfg.with_sim) layers.emplace_back("simulation");

    auto emit = [&](double value, const std::string& layer, const MetricsReport& m) {
        const std::pair<const char*, double> rows[] = {
            {"L", m.L}, {"Lq", m.Lq}, {"W", m.W}, {"Wq", m.Wq}, {"S", m.S}};
        for (const auto& [metric, v] : rows) {
            t.add({name, value, layer, std::string(metric), v, std::string("true"), std::string{}});
        }
    };
    auto emit_missing = [&](double value, const std::string& layer, const std::string& stable,
                            const std::string& note) {
        for (const char* metric : {"L", "Lq", "W", "Wq", "S"}) {
            t.add({name, value, layer, std::string(metric), std::monostate{}, stable, note});
        }
    };

    for (double value : values) {
        RawParams rp = cfg.params;
        switch (var) {
            case SweepVariable::Lambda: rp.lambda = value; break;
            case SweepVariable::R: rp.r = value; break;
            case SweepVariable::K:
                if (value != std::floor(value)) throw Error(ErrorKind::InvalidConfig, "k values must be integers");
                rp.k = static_cast<int>(value);
                break;
        }
        std::optional<SystemParams> p;
        try {
            p = validate_params(rp);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::UnstableParameters) throw;
            for (const auto& layer : layers) emit_missing(value, layer, "false", "lambda >= mu r k");
            continue;
        }
        const auto root = analytic::solve_z0(*p, cfg.root_tolerance);
        emit(value, "paper-closed-form", analytic::paper_metrics(*p, root));
        emit(value, "distribution", analytic::distribution_metrics(*p, root, cfg.report_states));
        try {
            const auto sol = ctmc::stationary(ctmc::build_generator(*p, cfg.truncation));
            emit(value, "ctmc", ctmc::ctmc_metrics(sol, *p));
        } catch (const Error& e) {
            emit_missing(value, "ctmc", "true", e.what());
        }
        if (cfg.with_sim) {
            RunConfig sim_cfg = cfg;
            sim_cfg.params = rp;
            desim::SimConfig sc = sim_cfg.sim_config();
            const MetricsReport m = sc.replications >= 2 ? desim::replicate(sc, cfg.threads).metrics
                                                         : desim::run(sc, 0).report.metrics;
            emit(value, "simulation", m);
        }
        if (p->r() == 1.0) {
            const auto red = analytic::reduction_check(*p);
            t.add({name, value, std::string("distribution"), std::string("reduction_max_deviation"),
                   red.max_bulk_deviation, std::string("true"), std::string("bulk-service law, n = k..50")});
        }
    }
    return t;
}

Table prob_table(const RunConfig& cfg) {
    const int k = cfg.params.k;
    const geometry::GeometryConfig g = cfg.geometry(k);
    geometry::check_config(g);

    Table t;
    t.columns = {"estimator", "value", "standard_error", "samples", "note"};
    const bool uniform = std::holds_alternative<geometry::UniformTolerances>(g.tolerance_model);
    if (k < 2) {
        t.add({std::string("printed-formula"), std::monostate{}, std::monostate{}, std::monostate{},
               std::string("closed form needs k >= 2")});
        t.add({std::string("independence-product"), std::monostate{}, std::monostate{}, std::monostate{},
               std::string("closed form needs k >= 2")});
    } else if (uniform && g.edge_rule != geometry::EdgeRule::Mmb) {
        t.add({std::string("printed-formula"), std::monostate{}, std::monostate{}, std::monostate{},
               std::string("closed form needs fixed tolerances")});
        t.add({std::string("independence-product"), std::monostate{}, std::monostate{}, std::monostate{},
               std::string("closed form needs fixed tolerances")});
    } else {
        geometry::ClosedFormR r;
        std::string note;
        if (g.edge_rule == geometry::EdgeRule::Mmb) {
            std::vector<double> areas;
            for (int i = 0; i < k; ++i) areas.push_back(g.mmb_areas[static_cast<std::size_t>(i) % g.mmb_areas.size()]);
            r = geometry::r_iclique(areas, g.region, k);
            note = "iClique (MMB areas)";
        } else {
            const auto& fixed = std::get<geometry::FixedTolerances>(g.tolerance_model).tolerances;
            std::vector<geometry::Tolerance> tol;
            for (int i = 0; i < k; ++i) tol.push_back(fixed[static_cast<std::size_t>(i) % fixed.size()]);
            r = geometry::r_cliquecloak(tol, g.region, k);
            note = "CliqueCloak (tolerance areas)";
            if (g.edge_rule == geometry::EdgeRule::AverageDistance) note += "; closed form ignores the avgdist rule";
        }
        t.add({std::string("printed-formula"), r.printed, std::monostate{}, std::monostate{}, note});
        t.add({std::string("independence-product"), r.independence, std::monostate{}, std::monostate{}, note});
    }

    RandomStream stream(cfg.seed, static_cast<std::uint64_t>(StreamPurpose::Geometry));
    const auto est = geometry::mc_clique_prob(g, cfg.samples, stream);
    t.add({std::string("monte-carlo"), est.value, est.standard_error, static_cast<int64_t>(est.samples),
           std::string("binomial standard error")});
    return t;
}

namespace {

struct FlagSpec {
    const char* flag;
    const char* key;
    const char* help;
};

constexpr FlagSpec kValueFlags[] = {
    {"--lambda", "core.lambda", "arrival rate, queries/s"},
    {"--mu", "core.mu", "service-attempt rate, attempts/s"},
    {"--k", "core.k", "anonymity level (batch size)"},
    {"--r", "core.r", "anonymization success probability per attempt"},
    {"--horizon", "desim.horizon", "simulated seconds per replication"},
    {"--warmup", "desim.warmup", "seconds excluded from statistics"},
    {"--reps", "desim.reps", "independent replications"},
    {"--seed", "cli.seed", "base seed"},
    {"--replay", "desim.replay", "replay schedule CSV"},
    {"--format", "cli.format", "csv or json"},
    {"--out", "cli.out", "output path (default stdout)"},
    {"--mode", "desim.mode", "bernoulli or geometric"},
    {"--edge-rule", "geometry.edge_rule", "containment, avgdist or mmb"},
    {"--retry", "desim.retry", "immediate or wait"},
    {"--window", "desim.window", "clique search window (default 2k)"},
    {"--trace-out", "desim.trace_out", "trace path"},
    {"--threads", "desim.threads", "worker threads for replications"},
    {"--truncation", "ctmc.truncation", "CTMC truncation level N"},
    {"--reference", "cli.reference", "validate reference: ctmc or paper"},
    {"--bound", "cli.bound", "validate relative error bound"},
    {"--var", "cli.variable", "sweep variable: lambda, r or k"},
    {"--values", "cli.values", "comma-separated sweep values"},
    {"--width", "geometry.width", "region width X"},
    {"--height", "geometry.height", "region height Y"},
    {"--dx", "geometry.dx", "tolerance widths, comma-separated per node"},
    {"--dy", "geometry.dy", "tolerance heights, comma-separated per node"},
    {"--dx-range", "geometry.dx_range", "lo:hi for iid-uniform widths"},
    {"--dy-range", "geometry.dy_range", "lo:hi for iid-uniform heights"},
    {"--mmb", "geometry.mmb", "MMB areas, comma-separated per node"},
    {"--samples", "geometry.samples", "Monte Carlo samples"},
    {"--head", "analytic.head", "number of P_n rows to print"},
};

constexpr FlagSpec kBoolFlags[] = {
    {"--trace", "desim.trace", "write the event trace"},
    {"--strict", "cli.strict", "fail validate on closed-form discrepancies"},
    {"--with-sim", "cli.with_sim", "add the simulation layer to sweeps"},
    {"--mm1", "analytic.mm1", "include the M/M/1 baseline in analyze"},
    {"--unstable", "desim.unstable", "let simulate run lambda >= mu r k"},
};

int exit_code_for(const Error& e) {
    return e.kind() == ErrorKind::IoFailure ? kExitIoError : kExitConfigError;
}

void write_output(const RunConfig& cfg, const Table& table, std::ostream& out) {
    if (cfg.out.empty()) {
        write_table(out, table, cfg.format);
        return;
    }
    std::ofstream file(cfg.out, std::ios::binary);
    if (!file) throw Error(ErrorKind::IoFailure, "cannot write " + cfg.out);
    write_table(file, table, cfg.format);
    if (!file) throw Error(ErrorKind::IoFailure, "write failed for " + cfg.out);
}

void write_trace_file(const RunConfig& cfg, const std::vector<desim::TraceEvent>& trace) {
    std::string path = cfg.trace_out;
    if (path.empty()) path = cfg.out.empty() ? "trace.csv" : cfg.out + ".trace.csv";
    std::ofstream file(path, std::ios::binary);
    if (!file) throw Error(ErrorKind::IoFailure, "cannot write " + path);
    desim::write_trace(file, trace);
    if (!file) throw Error(ErrorKind::IoFailure, "write failed for " + path);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Queueing models of k-anonymity location anonymizers", "lbsq"};
    app.fallthrough();
    app.require_subcommand(1, 1);

    std::map<std::string, std::string> flag_values;
    std::vector<std::pair<CLI::Option*, std::string>> value_opts;
    for (const auto& f : kValueFlags) {
        value_opts.emplace_back(app.add_option(f.flag, flag_values[f.key], f.help), f.key);
    }
    std::vector<std::pair<CLI::Option*, std::string>> bool_opts;
    for (const auto& f : kBoolFlags) bool_opts.emplace_back(app.add_flag(f.flag, f.help), f.key);

    std::string config_path;
    app.add_option("--config", config_path, std::string("config file (default $") + kConfigEnv + ")");
    std::vector<std::string> sets;
    app.add_option("--set", sets, "override any config key: section.key=value");

    auto* analyze = app.add_subcommand("analyze", "closed-form solution and metrics");
    auto* simulate = app.add_subcommand("simulate", "discrete-event simulation");
    auto* validate = app.add_subcommand("validate", "simulation vs analytic and CTMC layers");
    auto* sweep = app.add_subcommand("sweep", "parameter sweep in long format");
    auto* prob = app.add_subcommand("prob", "anonymization probability estimates");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    RunConfig cfg;
    try {
        if (config_path.empty()) {
            if (const char* env = std::getenv(kConfigEnv); env && *env) config_path = env;
        }
        if (!config_path.empty()) load_config_file(cfg, config_path);

        std::set<std::string> from_flags;
        for (const auto& [opt, key] : value_opts) {
            if (opt->count() > 0) {
                apply_key(cfg, key, flag_values[key]);
                from_flags.insert(key);
            }
        }
        for (const auto& [opt, key] : bool_opts) {
            if (opt->count() > 0) apply_key(cfg, key, "true");
        }
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos) throw Error(ErrorKind::InvalidConfig, "--set expects key=value");
            const std::string key = s.substr(0, eq);
            apply_key(cfg, key, s.substr(eq + 1));
            from_flags.insert(key);
        }
        // A replay runs to the end of its schedule unless told otherwise.
        if (from_flags.count("desim.replay")) {
            if (!from_flags.count("desim.horizon")) cfg.horizon = 0.0;
            if (!from_flags.count("desim.warmup")) cfg.warmup = 0.0;
        }

        if (analyze->parsed()) {
            write_output(cfg, analyze_table(cfg), out);
        } else if (simulate->parsed()) {
            auto res = simulate_table(cfg);
            write_output(cfg, res.table, out);
            if (cfg.trace) write_trace_file(cfg, res.trace);
        } else if (validate->parsed()) {
            auto res = validate_table(cfg);
            write_output(cfg, res.table, out);
            return res.exit_code;
        } else if (sweep->parsed()) {
            write_output(cfg, sweep_table(cfg), out);
        } else if (prob->parsed()) {
            write_output(cfg, prob_table(cfg), out);
        }
    } catch (const Error& e) {
        err << "lbsq: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return kExitOk;
}

}  // namespace lbsq::cli
