#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fdcr/cli.hpp"
#include "fdcr/config.hpp"
#include "fdcr/sweep.hpp"

using namespace fdcr;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kPaperConfig = std::string(FDCR_SOURCE_DIR) + "/configs/paper_iv.json";

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run(std::vector<std::string> args)
{
    args.insert(args.begin(), "fdcr");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

fs::path temp_file(const std::string& name, const std::string& content)
{
    const fs::path dir = fs::temp_directory_path() / "fdcr_tests";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream(p) << content;
    return p;
}

json paper_doc()
{
    std::ifstream in(kPaperConfig);
    return json::parse(in);
}

std::string param_error_field(const json& doc)
{
    try {
        config::parse_config(doc);
    } catch (const ParamError& e) {
        return e.field();
    }
    return "";
}

}  // namespace

TEST_CASE("durations")
{
    CHECK(config::parse_duration(json("20ms"), "f") == doctest::Approx(0.020));
    CHECK(config::parse_duration(json("1.5s"), "f") == doctest::Approx(1.5));
    CHECK(config::parse_duration(json("0.25"), "f") == doctest::Approx(0.25));
    CHECK(config::parse_duration(json(0.02), "f") == doctest::Approx(0.02));
    CHECK_THROWS_AS(config::parse_duration(json("20 minutes"), "f"), ParamError);
    CHECK_THROWS_AS(config::parse_duration(json(true), "f"), ParamError);
}

TEST_CASE("reference config loads")
{
    const auto cfg = config::load_config(kPaperConfig);
    CHECK(cfg.params.snr_pu_mean == doctest::Approx(1.9953).epsilon(1e-4));
    CHECK(std::abs(cfg.params.snr_pu_mean - std::pow(10.0, 0.3)) < 1e-12);
    CHECK(cfg.params.snr_su_mean == doctest::Approx(10.0));
    CHECK(cfg.params.lambda_rate == doctest::Approx(1 / 0.150));
    CHECK(cfg.params.mu_rate == doctest::Approx(1 / 0.300));
    CHECK(cfg.params.frame_T == doctest::Approx(0.020));
    CHECK(cfg.params.packets_per_frame == 2);
    CHECK(cfg.scheme == sim::Scheme::AsyncFD);
}

TEST_CASE("config errors name the field")
{
    json doc = paper_doc();
    doc["eps0"] = 2.5;
    const std::string f = param_error_field(doc);
    CHECK(f.find("eps0") != std::string::npos);
    CHECK(f.find("eps1") != std::string::npos);

    doc = paper_doc();
    doc["bogus_field"] = 1;
    CHECK(param_error_field(doc) == "bogus_field");

    doc = paper_doc();
    doc["snr_pu_mean"] = 2.0;
    const std::string both = param_error_field(doc);
    CHECK(both.find("snr_pu_mean") != std::string::npos);
    CHECK(both.find("snr_pu_mean_db") != std::string::npos);

    doc = paper_doc();
    doc["sim"]["horizon"] = "soon";
    CHECK(param_error_field(doc) == "sim.horizon");

    doc = paper_doc();
    doc["sis_beta"] = -0.1;
    CHECK(param_error_field(doc) == "sis_beta");

    const std::string empty = param_error_field(json::object());
    for (const auto& name : config::required_fields()) {
        CHECK(empty.find(name) != std::string::npos);
    }
}

TEST_CASE("empty file lists the required fields")
{
    const auto p = temp_file("empty.json", "");
    try {
        config::load_config(p.string());
        FAIL("expected ParamError");
    } catch (const ParamError& e) {
        for (const auto& name : config::required_fields()) {
            CHECK(std::string(e.what()).find(name) != std::string::npos);
        }
    }
    const auto r = run({"analytic", "--config", p.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("frame_T") != std::string::npos);
}

TEST_CASE("effective config round-trips")
{
    const auto cfg = config::load_config(kPaperConfig);
    const json dumped = config::to_json(cfg);
    const auto again = config::parse_config(dumped);
    CHECK(again == cfg);
    CHECK(config::to_json(again) == dumped);
}

TEST_CASE("set_field")
{
    auto cfg = config::load_config(kPaperConfig);
    config::set_field(cfg, "sis_beta", 0.05);
    CHECK(cfg.params.sis_beta == 0.05);
    config::set_field(cfg, "frame_T", 0.01);
    CHECK(cfg.params.frame_T == 0.01);
    config::set_field(cfg, "snr_su_mean_db", 20.0);
    CHECK(cfg.params.snr_su_mean == doctest::Approx(100.0));
    config::set_field(cfg, "horizon", 42.0);
    CHECK(cfg.horizon == 42.0);
    CHECK(config::is_duration_field("frame_T"));
    CHECK_FALSE(config::is_duration_field("sis_beta"));
    CHECK_THROWS_AS(config::set_field(cfg, "nope", 1.0), ParamError);
}

TEST_CASE("grids")
{
    const auto lin = sweep::linear_grid(0.0, 0.1, 6);
    REQUIRE(lin.size() == 6);
    CHECK(lin.front() == 0.0);
    CHECK(lin.back() == doctest::Approx(0.1));
    CHECK(lin[1] == doctest::Approx(0.02));
    const auto lg = sweep::log_grid(1e-3, 1e-1, 3);
    CHECK(lg[1] == doctest::Approx(1e-2));
    CHECK(sweep::linear_grid(5.0, 9.0, 1) == std::vector<double>{5.0});
}

TEST_CASE("analytic subcommand")
{
    const auto r = run({"analytic", "--config", kPaperConfig});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["analytic"]["p_h0"].get<double>() == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(j["analytic"]["tau_bar"].get<double>() == doctest::Approx(5.1106e-3).epsilon(1e-4));
    CHECK(j["config"]["frame_T"].get<double>() == doctest::Approx(0.02));
}

TEST_CASE("usage errors exit 2")
{
    CHECK(run({"analytic"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
    CHECK(run({"simulate", "--config", kPaperConfig, "--bogus"}).code == 2);
    CHECK(run({"simulate", "--config", "/nonexistent/file.json"}).code == 2);
    auto bad = paper_doc();
    bad["eps1"] = 0.5;
    const auto p = temp_file("bad.json", bad.dump());
    const auto r = run({"simulate", "--config", p.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("eps1") != std::string::npos);
}

TEST_CASE("simulate is byte-identical across invocations")
{
    const std::vector<std::string> args{"simulate", "--config", kPaperConfig, "--horizon", "60s", "--seed", "9"};
    const auto a = run(args);
    const auto b = run(args);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
    const json j = json::parse(a.out);
    CHECK(j["seeds"] == json::array({9}));
    CHECK(j["config"]["sim"]["horizon"].get<double>() == doctest::Approx(60.0));

    const auto c = run({"simulate", "--config", kPaperConfig, "--horizon", "60s", "--seed", "10"});
    CHECK(c.out != a.out);
}

TEST_CASE("simulate side outputs")
{
    const auto dir = fs::temp_directory_path() / "fdcr_tests";
    fs::create_directories(dir);
    const auto col = (dir / "col.csv").string();
    const auto tr = (dir / "trace.csv").string();
    const auto log = (dir / "events.jsonl").string();
    const auto out = (dir / "report.json").string();
    const auto r = run({"simulate", "--config", kPaperConfig, "--horizon", "20s", "--collisions-csv", col,
                        "--trace-csv", tr, "--event-log", log, "--output", out});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    std::ifstream lf(log);
    std::string line;
    REQUIRE(std::getline(lf, line));
    const json ev = json::parse(line);
    CHECK(ev.contains("t"));
    CHECK(ev.contains("node"));
    CHECK(ev.contains("event"));
    CHECK(ev.contains("mode"));
    CHECK(fs::file_size(col) > 0);
    CHECK(fs::file_size(tr) > 0);
    CHECK(json::parse(std::ifstream(out)).contains("throughput_hat"));
}

TEST_CASE("compare exit codes")
{
    const auto ok = run({"compare", "--config", kPaperConfig, "--horizon", "300s", "--format", "csv"});
    CHECK(ok.code == 0);
    CHECK(ok.out.rfind("metric,analytic,simulated", 0) == 0);

    // Faded PU links cause far more CS misdetections than the mean-SNR closed form predicts.
    auto doc = paper_doc();
    doc["sim"]["pu_link_fading"] = true;
    doc["sim"]["deep_fade_ratio"] = 1.0;
    const auto p = temp_file("discrepant.json", doc.dump());
    const auto bad = run({"compare", "--config", p.string(), "--horizon", "300s", "--format", "json"});
    CHECK(bad.code == 3);
    CHECK(json::parse(bad.out).is_array());
}

TEST_CASE("sweep output schema and determinism")
{
    const std::vector<std::string> args{"sweep",        "--config", kPaperConfig, "--param", "sis_beta",
                                        "--values",     "0,0.05",   "--replicates", "2",     "--scheme",
                                        "async,sync",   "--horizon", "20s"};
    const auto a = run(args);
    REQUIRE(a.code == 0);
    const auto b = run(args);
    CHECK(a.out == b.out);

    sweep::SweepSpec spec;
    spec.parameter = "sis_beta";
    spec.values = {0.0, 0.05};
    spec.replicates = 2;
    spec.schemes = {sim::Scheme::AsyncFD, sim::Scheme::SyncFD};
    const auto metrics = sweep::metric_names(spec);
    std::istringstream in(a.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "point,seed,metric,value,ci95");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == spec.values.size() * spec.replicates * metrics.size());

    // Thread count does not change the bytes.
    auto cfg = config::load_config(kPaperConfig);
    cfg.horizon = 20.0;
    std::ostringstream one;
    std::ostringstream many;
    sweep::run_sweep(cfg, spec, one, 1);
    sweep::run_sweep(cfg, spec, many, 4);
    CHECK(one.str() == many.str());

    CHECK(run({"sweep", "--config", kPaperConfig, "--param", "eps0", "--values", "5", "--horizon", "20s"}).code == 2);
    CHECK(run({"sweep", "--config", kPaperConfig, "--param", "unknown", "--values", "1"}).code == 2);
}

TEST_CASE("grid sweep over frame length")
{
    const auto r = run({"sweep", "--config", kPaperConfig, "--param", "frame_T", "--from", "5ms", "--to", "50ms",
                        "--count", "3", "--scheme", "async,sync", "--horizon", "20s"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("0.0275,") != std::string::npos);
}

TEST_CASE("dump-fsm")
{
    const auto r = run({"dump-fsm", "--scheme", "async"});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["violations"].empty());
    CHECK(j["transitions"].size() > 10);
    CHECK(run({"dump-fsm", "--scheme", "sideways"}).code == 2);
}
