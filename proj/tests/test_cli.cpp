#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "lbsq/commands.hpp"

using namespace lbsq;
using namespace lbsq::cli;
using Json = nlohmann::json;

namespace {

struct Invocation {
    int code = 0;
    std::string out;
    std::string err;
};

Invocation lbsq_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "lbsq");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    Invocation inv;
    inv.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    inv.out = out.str();
    inv.err = err.str();
    return inv;
}

Json json_rows(std::vector<std::string> args) {
    args.push_back("--format");
    args.push_back("json");
    const auto inv = lbsq_cli(std::move(args));
    REQUIRE(inv.code == 0);
    return Json::parse(inv.out);
}

// Finds the first row whose listed columns all equal the given strings/numbers.
const Json& find_row(const Json& rows, const Json& match) {
    for (const auto& row : rows) {
        bool ok = true;
        for (const auto& [key, value] : match.items()) ok = ok && row.contains(key) && row[key] == value;
        if (ok) return row;
    }
    FAIL("no row matching " << match.dump());
    static const Json none;
    return none;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(cell);
            cell.clear();
        } else if (c == '\n') {
            row.push_back(cell);
            rows.push_back(row);
            row.clear();
            cell.clear();
        } else {
            cell += c;
        }
    }
    return rows;
}

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "lbsq_cli_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kFig4 = std::string(LBSQ_TEST_DATA) + "/fig4.csv";

}  // namespace

TEST_CASE("analyze at the defaults") {
    const auto rows = json_rows({"analyze"});
    CHECK(find_row(rows, {{"quantity", "S"}, {"layer", "distribution"}})["value"].get<double>() ==
          doctest::Approx(0.50505).epsilon(1e-4));
    CHECK(find_row(rows, {{"quantity", "S"}, {"layer", "paper-closed-form"}})["value"].get<double>() ==
          doctest::Approx(0.50505).epsilon(1e-4));
    CHECK(find_row(rows, {{"quantity", "z0"}})["value"].get<double>() == doctest::Approx(1.43808156745));
    CHECK(find_row(rows, {{"quantity", "warning"}, {"layer", "paper-closed-form"}})["note"] != "");
}

TEST_CASE("analyze at k = 1, r = 1 reports the M/M/1 row") {
    const auto rows = json_rows({"analyze", "--k", "1", "--r", "1"});
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "distribution"}})["value"].get<double>() ==
          doctest::Approx(1.0).epsilon(1e-10));
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "mm1-baseline"}})["value"].get<double>() == 1.0);
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "paper-closed-form"}})["value"].get<double>() ==
          doctest::Approx(0.0));
}

TEST_CASE("analyze rejects lambda >= mu r k with the stability explanation") {
    const auto inv = lbsq_cli({"analyze", "--lambda", "10"});
    CHECK(inv.code == kExitConfigError);
    CHECK(inv.err.find("UnstableParameters") != std::string::npos);
    CHECK(inv.err.find("lambda < mu*r*k") != std::string::npos);
}

TEST_CASE("usage errors exit 3") {
    CHECK(lbsq_cli({}).code == kExitConfigError);
    CHECK(lbsq_cli({"analyze", "simulate"}).code == kExitConfigError);
    CHECK(lbsq_cli({"analyze", "--bogus"}).code == kExitConfigError);
    CHECK(lbsq_cli({"analyze", "--k", "three"}).code == kExitConfigError);
    CHECK(lbsq_cli({"analyze", "--format", "xml"}).code == kExitConfigError);
    CHECK(lbsq_cli({"analyze", "--set", "core.nope=1"}).code == kExitConfigError);
    CHECK(lbsq_cli({"--help"}).code == kExitOk);
}

TEST_CASE("simulate is byte-identical for the same seed") {
    const std::vector<std::string> args{"simulate", "--seed", "7", "--horizon", "2e4", "--warmup", "1e3", "--reps", "4"};
    const auto a = lbsq_cli(args);
    const auto b = lbsq_cli(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    auto other = args;
    other[2] = "8";
    CHECK(lbsq_cli(other).out != a.out);
}

TEST_CASE("simulate replays the fixture and writes the trace") {
    const auto trace = scratch("fig4.trace.csv");
    std::filesystem::remove(trace);
    const auto inv = lbsq_cli({"simulate", "--replay", kFig4, "--trace", "--trace-out", trace.string()});
    REQUIRE(inv.code == 0);
    const auto text = slurp(trace);
    CHECK(text.find("143,arrival,4,4\n145,departure,1,1\n") != std::string::npos);

    const auto rows = json_rows({"simulate", "--replay", kFig4});
    CHECK(find_row(rows, {{"metric", "area_under_curve"}})["value"] == 218.0);
    CHECK(find_row(rows, {{"metric", "observed_time"}})["value"] == 145.0);

    CHECK(lbsq_cli({"simulate", "--replay", "/nonexistent.csv"}).code == kExitIoError);
}

TEST_CASE("validate at the defaults is within bounds") {
    const auto inv = lbsq_cli({"validate", "--format", "json"});
    CHECK(inv.code == kExitOk);
    const auto rows = Json::parse(inv.out);
    for (const char* m : {"L", "W"}) {
        const auto& row = find_row(rows, {{"comparison", "simulation-vs-ctmc"}, {"metric", m}});
        CHECK(row["relative_error"].get<double>() <= 0.02);
        CHECK(row["status"] == "ok");
    }
}

TEST_CASE("validate against the closed forms fails only in strict mode") {
    const std::vector<std::string> base{"validate", "--reference", "paper", "--reps", "4", "--horizon", "2e4",
                                        "--warmup", "1e3"};
    const auto lax = lbsq_cli(base);
    CHECK(lax.code == kExitOk);
    CHECK(lax.out.find("discrepancy") != std::string::npos);
    auto strict = base;
    strict.push_back("--strict");
    CHECK(lbsq_cli(strict).code == kExitBoundsExceeded);
}

TEST_CASE("validate with an impossible bound exits 2") {
    CHECK(lbsq_cli({"validate", "--reps", "2", "--horizon", "2e3", "--warmup", "100", "--bound", "1e-9"}).code ==
          kExitBoundsExceeded);
}

TEST_CASE("validate at k = 1, r = 1: every layer within 1% of the M/M/1 baseline") {
    const auto inv = lbsq_cli({"validate", "--k", "1", "--r", "1", "--format", "json"});
    REQUIRE(inv.code == kExitOk);
    const auto rows = Json::parse(inv.out);
    for (const char* cmp : {"simulation-vs-ctmc", "simulation-vs-distribution", "distribution-vs-ctmc",
                            "simulation-vs-mm1-baseline"}) {
        for (const char* m : {"L", "W", "S"}) {
            CHECK(find_row(rows, {{"comparison", cmp}, {"metric", m}})["relative_error"].get<double>() <= 0.01);
        }
    }
}

TEST_CASE("sweep rows and shapes") {
    const auto rows = json_rows({"sweep", "--var", "k", "--r", "1"});
    double prev_w = 0.0;
    double prev_s = 2.0;
    for (int k = 1; k <= 6; ++k) {
        const double w =
            find_row(rows, {{"value", k}, {"layer", "distribution"}, {"metric", "W"}})["result"].get<double>();
        const double s =
            find_row(rows, {{"value", k}, {"layer", "distribution"}, {"metric", "S"}})["result"].get<double>();
        CHECK(w > prev_w);
        CHECK(s < prev_s);
        prev_w = w;
        prev_s = s;
    }

    const auto unstable = json_rows({"sweep", "--var", "lambda", "--values", "5,10"});
    CHECK(find_row(unstable, {{"value", 10}, {"layer", "distribution"}, {"metric", "L"}})["stable"] == "false");
    CHECK(find_row(unstable, {{"value", 5}, {"layer", "ctmc"}, {"metric", "L"}})["stable"] == "true");

    const auto with_r1 = json_rows({"sweep", "--var", "r", "--values", "0.5,1"});
    CHECK(find_row(with_r1, {{"value", 1}, {"metric", "reduction_max_deviation"}})["result"].get<double>() <= 1e-10);

    const auto sim = json_rows({"sweep", "--var", "lambda", "--values", "2,4", "--with-sim", "--reps", "2",
                                "--horizon", "5e3", "--warmup", "500"});
    CHECK(find_row(sim, {{"value", 4}, {"layer", "simulation"}, {"metric", "L"}})["result"].get<double>() >
          find_row(sim, {{"value", 2}, {"layer", "simulation"}, {"metric", "L"}})["result"].get<double>());
}

TEST_CASE("prob estimates") {
    auto rows = json_rows({"prob", "--k", "2"});
    const auto& mc = find_row(rows, {{"estimator", "monte-carlo"}});
    CHECK(std::abs(mc["value"].get<double>() - 0.0361) <= 3 * mc["standard_error"].get<double>());

    rows = json_rows({"prob", "--k", "2", "--dx", "2", "--dy", "2"});
    for (const auto& row : rows) CHECK(row["value"] == 1.0);
    rows = json_rows({"prob", "--k", "3", "--dx", "0", "--dy", "0"});
    for (const auto& row : rows) CHECK(row["value"] == 0.0);

    rows = json_rows({"prob", "--k", "3", "--edge-rule", "mmb", "--mmb", "0.1", "--width", "1", "--height", "1"});
    CHECK(find_row(rows, {{"estimator", "printed-formula"}})["value"].get<double>() == doctest::Approx(1e-6));
}

TEST_CASE("CSV and JSON carry the same values") {
    for (const auto& sub : std::vector<std::vector<std::string>>{
             {"analyze"}, {"prob", "--k", "2", "--samples", "10000"}, {"sweep", "--var", "k", "--values", "2,3"}}) {
        const auto csv = lbsq_cli(sub);
        REQUIRE(csv.code == 0);
        const auto table = parse_csv(csv.out);
        const auto rows = json_rows(sub);
        REQUIRE(table.size() == rows.size() + 1);
        const auto& header = table[0];
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t c = 0; c < header.size(); ++c) {
                const auto& cell = table[i + 1][c];
                const auto& value = rows[i][header[c]];
                if (value.is_null()) {
                    CHECK(cell.empty());
                } else if (value.is_string()) {
                    CHECK(cell == value.get<std::string>());
                } else if (value.is_boolean()) {
                    CHECK(cell == (value.get<bool>() ? "true" : "false"));
                } else {
                    CHECK(std::strtod(cell.c_str(), nullptr) == value.get<double>());
                }
            }
        }
    }
}

TEST_CASE("config file, environment and --set precedence") {
    const auto cfg = scratch("run.ini");
    {
        std::ofstream f(cfg);
        f << "# defaults for a smaller system\n[core]\nlambda = 2\nk = 1\nr = 1\n\n[cli]\nformat = json\n";
    }
    auto rows = Json::parse(lbsq_cli({"analyze", "--config", cfg.string()}).out);
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "distribution"}})["value"].get<double>() ==
          doctest::Approx(0.25));

    // flags override the file, --set overrides flags
    rows = Json::parse(lbsq_cli({"analyze", "--config", cfg.string(), "--lambda", "5"}).out);
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "distribution"}})["value"].get<double>() ==
          doctest::Approx(1.0));
    rows = Json::parse(lbsq_cli({"analyze", "--config", cfg.string(), "--lambda", "5", "--set", "core.lambda=8"}).out);
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "distribution"}})["value"].get<double>() ==
          doctest::Approx(4.0));

    ::setenv(kConfigEnv, cfg.c_str(), 1);
    rows = Json::parse(lbsq_cli({"analyze"}).out);
    ::unsetenv(kConfigEnv);
    CHECK(find_row(rows, {{"quantity", "L"}, {"layer", "distribution"}})["value"].get<double>() ==
          doctest::Approx(0.25));

    const auto bad = scratch("bad.ini");
    {
        std::ofstream f(bad);
        f << "[core]\nlamda = 2\n";
    }
    CHECK(lbsq_cli({"analyze", "--config", bad.string()}).code == kExitConfigError);
    CHECK(lbsq_cli({"analyze", "--config", "/nonexistent/run.ini"}).code == kExitIoError);
}

TEST_CASE("output files") {
    const auto path = scratch("analyze.csv");
    REQUIRE(lbsq_cli({"analyze", "--out", path.string()}).code == 0);
    CHECK(slurp(path) == lbsq_cli({"analyze"}).out);
    CHECK(lbsq_cli({"analyze", "--out", "/nonexistent/dir/out.csv"}).code == kExitIoError);
}
