// End-to-end checks of the command-line tool: report content, determinism,
// file formats, and exit codes.

#include <catch2/catch_amalgamated.hpp>
#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

fs::path work_dir() {
    static fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "qmetro_cli_tests";
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = work_dir() / ("stdout_" + std::to_string(counter++) + ".txt");
    const std::string cmd =
        std::string(QMETRO_CLI_PATH) + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = (status >= 0) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.output = ss.str();
    return r;
}

json run_json(const std::string& args, int expected_exit = 0) {
    const auto r = run_cli(args);
    REQUIRE(r.exit_code == expected_exit);
    return json::parse(r.output);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path write_explicit_model(const std::string& name, const json& doc) {
    const fs::path p = work_dir() / name;
    std::ofstream out(p);
    out << doc.dump();
    return p;
}

}  // namespace

TEST_CASE("analyze reports the trade-off bound for the qubit family") {
    const auto report =
        run_json("analyze --model builtin:qubit_bloch --point 1.5707963267948966,0 --seed 1");
    CHECK(report["schema_version"] == 1);
    CHECK(report["model"]["d"] == 2);
    CHECK(std::abs(report["information"]["gamma_bound"].get<double>() - 1.0) < 1e-9);
    CHECK(report["information"]["gill_massar_constant"] == 1.0);
    CHECK(report["information"]["weak_commutativity"] == false);
    CHECK(report.contains("tolerances"));
}

TEST_CASE("analyze handles the radar builtin") {
    const auto report =
        run_json("analyze --model builtin:radar_biphoton?kappa=0.5 --seed 1");
    CHECK(std::abs(report["information"]["gamma_bound"].get<double>() - 1.5) < 1e-6);
}

TEST_CASE("analyze of a one-parameter explicit model is compatible") {
    json doc;
    doc["d"] = 2;
    doc["n"] = 1;
    doc["psi"] = {{0.6, 0.0}, {0.8, 0.0}};
    doc["dpsi"] = {{{-0.8, 0.0}, {0.6, 0.0}}};
    const auto path = write_explicit_model("slice.json", doc);
    const auto report = run_json("analyze --model " + path.string() + " --point 0 --seed 1");
    CHECK(std::abs(report["information"]["gamma_bound"].get<double>() - 1.0) < 1e-12);
    CHECK(report["information"]["weak_commutativity"] == true);
}

TEST_CASE("measure reaches the bound for qubit and radar") {
    const auto qubit = run_json(
        "measure --model builtin:qubit_bloch --point 1.5707963267948966,0 --seed 7");
    CHECK(std::abs(qubit["plan"]["gamma_achieved"].get<double>() - 1.0) < 1e-6);

    const auto radar = run_json("measure --model builtin:radar_biphoton?kappa=0 --seed 7");
    CHECK(std::abs(radar["plan"]["gamma_achieved"].get<double>() - 1.0) < 1e-3);
}

TEST_CASE("measure honors probability shaping") {
    const auto report = run_json(
        "measure --model builtin:qubit_bloch --point 1.2,0.4 --seed 5 --shape-probs uniform");
    const auto probs = report["plan"]["probabilities"];
    for (const auto& p : probs)
        CHECK(std::abs(p.get<double>() - 1.0 / probs.size()) < 1e-9);
}

TEST_CASE("reports are byte-identical for identical seeds") {
    const fs::path a = work_dir() / "rep_a.json";
    const fs::path b = work_dir() / "rep_b.json";
    const std::string args =
        "measure --model builtin:qubit_bloch --point 0.9,0.7 --seed 42 --out ";
    REQUIRE(run_cli(args + a.string()).exit_code == 0);
    REQUIRE(run_cli(args + b.string()).exit_code == 0);
    const std::string ta = read_file(a), tb = read_file(b);
    REQUIRE_FALSE(ta.empty());
    CHECK(ta == tb);
}

namespace {
fs::path slice_model_file() {
    // one-parameter model: a great-circle slice of the qubit family
    json doc;
    doc["d"] = 2;
    doc["n"] = 1;
    doc["psi"] = {{0.6, 0.0}, {0.8, 0.0}};
    doc["dpsi"] = {{{-0.8, 0.0}, {0.6, 0.0}}};
    return write_explicit_model("verify_slice.json", doc);
}
}  // namespace

TEST_CASE("verify round-trips a measured radar plan") {
    const fs::path plan = work_dir() / "plan_radar.json";
    REQUIRE(run_cli("measure --model builtin:radar_biphoton?kappa=0.5 --seed 9 --out " +
                    plan.string())
                .exit_code == 0);
    const auto report =
        run_json("verify --model builtin:radar_biphoton?kappa=0.5 --plan " + plan.string() +
                 " --shots 100000 --trials 400 --seed 10");
    const double dev = report["monte_carlo"]["gamma_relative_deviation"].get<double>();
    CHECK(dev < 0.15);
    const double gamma = report["monte_carlo"]["gamma_estimate"].get<double>();
    CHECK(std::abs(gamma - 1.5) / 1.5 < 0.15);
    CHECK(report["monte_carlo"]["shots"] == 100000);
}

TEST_CASE("verify matches the single-parameter bound inline") {
    const auto path = slice_model_file();
    const auto report = run_json("verify --model " + path.string() +
                                 " --point 0 --shots 100000 --trials 2000 --seed 13");
    CHECK(report["monte_carlo"]["gamma_relative_deviation"].get<double>() < 0.05);
}

TEST_CASE("verify warns below the asymptotic regime") {
    const auto path = slice_model_file();
    const auto report = run_json("verify --model " + path.string() +
                                 " --point 0 --shots 5000 --trials 50 --seed 2");
    CHECK(report.contains("warning"));
}

TEST_CASE("verify reports singular information distinctly") {
    // two parameters cannot be jointly resolved by a single two-outcome basis
    CHECK(run_cli("verify --model builtin:qubit_bloch --point 1.1,0.3 --shots 20000 "
                  "--trials 50 --seed 3")
              .exit_code == 3);
}

TEST_CASE("radar sweep emits the pinned csv") {
    const fs::path csv = work_dir() / "sweep.csv";
    const auto r = run_cli("radar-sweep --kappas 0:0.9:4 --seed 3 --out " + csv.string());
    REQUIRE(r.exit_code == 0);
    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "kappa,qcrb_product_bound,refined_ak_bound,gamma_bound,gamma_achieved,grid_N,grid_W");
    int rows = 0;
    std::string line;
    double first_refined = -1;
    while (std::getline(in, line)) {
        if (rows == 0) std::sscanf(line.c_str(), "%*f,%*f,%lf", &first_refined);
        ++rows;
    }
    CHECK(rows == 4);
    CHECK(std::abs(first_refined - 1.0) < 1e-12);
}

TEST_CASE("oracle stays below the bound and reports the gap") {
    const auto report = run_json(
        "oracle --model builtin:qubit_bloch --point 1.5707963267948966,0 --seed 4 --restarts 6");
    const double best = report["brute_force"]["best_gamma"].get<double>();
    const double bound = report["brute_force"]["gamma_bound"].get<double>();
    CHECK(best <= bound + 1e-6);
    CHECK(std::abs(best - 1.0) < 1e-3);
}

TEST_CASE("oracle requires compression for large models") {
    CHECK(run_cli("oracle --model builtin:radar_biphoton?kappa=0.3 --seed 1").exit_code == 5);
    const auto report = run_json(
        "oracle --model builtin:radar_biphoton?kappa=0.3 --seed 1 --restarts 4 --compress");
    CHECK(report["brute_force"]["compressed"] == true);
    CHECK(std::abs(report["brute_force"]["best_gamma"].get<double>() - 1.3) < 1e-2);
}

TEST_CASE("exit codes distinguish the failure modes") {
    SECTION("parse failures") {
        CHECK(run_cli("analyze --model /no/such/file.json --seed 1").exit_code == 2);
        CHECK(run_cli("analyze --model builtin:nope --seed 1").exit_code == 2);
        CHECK(run_cli("analyze --seed 1").exit_code == 2);  // missing required --model
        const auto bad = write_explicit_model("bad.json", json::parse("{\"d\": 2}"));
        CHECK(run_cli("analyze --model " + bad.string() + " --seed 1").exit_code == 2);
    }
    SECTION("singular information") {
        json doc;
        doc["d"] = 2;
        doc["n"] = 1;
        doc["psi"] = {{1.0, 0.0}, {0.0, 0.0}};
        doc["dpsi"] = {{{0.0, 0.0}, {0.0, 0.0}}};
        const auto path = write_explicit_model("degenerate.json", doc);
        CHECK(run_cli("analyze --model " + path.string() + " --point 0 --seed 1").exit_code == 3);
    }
    SECTION("validation failures") {
        CHECK(run_cli("radar-sweep --kappas 1.0 --seed 1").exit_code == 5);
        CHECK(run_cli("measure --model builtin:qubit_bloch --point 1.0,0.5 --seed 1 "
                      "--shape-probs 1,0,0")
                  .exit_code == 5);
        // out-of-domain evaluation point
        CHECK(run_cli("analyze --model builtin:multiphase?d=2 --point 0.3,-0.2 --seed 1")
                  .exit_code == 5);
    }
}

TEST_CASE("seed is recorded when generated") {
    const auto r = run_cli("analyze --model builtin:qubit_bloch --point 1.0,0.5");
    REQUIRE(r.exit_code == 0);
    const auto report = json::parse(r.output);
    CHECK(report.contains("seed"));
    CHECK(report["seed_generated"] == true);
}
