#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "trotter/cli_runner.hpp"

using namespace trotter;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path work_dir(const std::string& name) {
    const fs::path p = fs::path(TEST_WORK_DIR) / "cli" / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

int run_tool(const std::string& args) {
    const std::string cmd = std::string("\"") + TROTTER_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

void write_text(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream(p) << s;
}

struct Trace {
    std::vector<double> time, n_left;
};

Trace read_trace(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    REQUIRE(line == "step,time,n_left");
    Trace t;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        t.time.push_back(std::stod(b));
        t.n_left.push_back(std::stod(c));
    }
    return t;
}

}  // namespace

TEST_CASE("defaults round trip through json") {
    const RunConfig c = parse_config(json::object());
    CHECK(c.command == "spectrum");
    CHECK(c.chain.L == 50);
    CHECK(c.experiment.M == 60000);
    const json j = to_json(c);
    const RunConfig back = parse_config(j);
    CHECK(to_json(back) == j);
}

TEST_CASE("strict parsing") {
    CHECK_THROWS_AS(parse_config(json{{"chain", {{"Lx", 5}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"chain", {{"L", "fifty"}}}}), ConfigError);
    CHECK_THROWS_AS(parse_config(json{{"bogus", 1}}), ConfigError);
    CHECK_FALSE(validate(parse_config(json{{"command", "dance"}})).ok());
    try {
        parse_config(json{{"plan", {{"dt", "x"}}}});
        FAIL("expected a ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("plan.dt") != std::string::npos);
    }
}

TEST_CASE("dotted overrides") {
    json j = json::object();
    apply_override(j, "chain.L=12");
    apply_override(j, "chain.potential.kind=linear");
    apply_override(j, "experiment.dt_grid=[0.5,1.0]");
    apply_override(j, "plan.ordering=split");
    const RunConfig c = parse_config(j);
    CHECK(c.chain.L == 12);
    CHECK(c.chain.potential.kind == "linear");
    CHECK(c.experiment.dt_grid == std::vector<double>{0.5, 1.0});
    CHECK(c.plan.ordering == "split");
    CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
}

TEST_CASE("validation diagnostics") {
    RunConfig c;
    c.plan.dt = 0.1;
    CHECK(validate(c).ok());
    CHECK(validate(c).warnings.empty());
    c.plan.dt = 1.5;
    auto d = validate(c);
    CHECK(d.ok());
    CHECK_FALSE(d.advisories.empty());
    c.plan.dt = 5.0;
    d = validate(c);
    CHECK_FALSE(d.warnings.empty());
    c.plan.ordering = "split";
    c.plan.split_alpha = 1.5;
    CHECK_FALSE(validate(c).ok());
}

TEST_CASE("exit codes") {
    const fs::path out = work_dir("exit");
    CHECK(run_tool("spectrum --set chain.L=2 --set chain.potential.kind=custom --set chain.potential.values=[0,0] --out \"" +
                   out.string() + "\"") == 0);
    CHECK(run_tool("spectrum --set chain.nonsense=1 --out \"" + out.string() + "\"") == 1);
    CHECK(run_tool("spectrum --set plan.ordering=split --set plan.split_alpha=1.5 --out \"" + out.string() + "\"") == 1);
    CHECK(run_tool("frobnicate") != 0);
    const fs::path bad = fs::path(TEST_WORK_DIR) / "cli" / "bad.json";
    write_text(bad, "{\"chain\": {\"L\": 10,}}");
    CHECK(run_tool("spectrum --config \"" + bad.string() + "\"") == 1);
}

TEST_CASE("two-site spectrum artifacts") {
    const fs::path out = work_dir("two_site");
    REQUIRE(run_tool("spectrum --set chain.L=2 --set chain.potential.kind=custom --set chain.potential.values=[0,0] "
                     "--seed 11 --out \"" + out.string() + "\"") == 0);
    std::ifstream in(out / "energies.csv");
    std::string header, row0, row1;
    std::getline(in, header);
    std::getline(in, row0);
    std::getline(in, row1);
    CHECK(header == "index,energy");
    CHECK(std::stod(row0.substr(2)) == Approx(-0.5).epsilon(1e-14));
    CHECK(std::stod(row1.substr(2)) == Approx(0.5).epsilon(1e-14));
    const json m = load_json(out / "manifest.json");
    CHECK(m["seed"] == 11);
    CHECK(m["code_version"] == code_version());
    CHECK(m["config"]["chain"]["L"] == 2);
    CHECK(m["command"] == "spectrum");
}

TEST_CASE("effective hamiltonian output and warnings") {
    const fs::path out = work_dir("heff");
    REQUIRE(run_tool("effective-ham --set chain.L=12 --set plan.dt=5 --out \"" + out.string() + "\"") == 0);
    CHECK(fs::exists(out / "heff.txt"));
    CHECK(fs::exists(out / "unitary.txt"));
    CHECK(fs::exists(out / "locality_profile.csv"));
    const json m = load_json(out / "manifest.json");
    bool folding = false;
    for (const auto& w : m["warnings"]) folding = folding || w.get<std::string>().find("folding") != std::string::npos;
    CHECK(folding);
}

TEST_CASE("rabi trace matches the stored reference") {
    const fs::path out = work_dir("rabi");
    REQUIRE(run_tool("rabi --set plan.dt=0.5 --seed 7 --out \"" + out.string() + "\"") == 0);
    const Trace got = read_trace(out / "trace.csv");
    const Trace ref = read_trace(fs::path(TEST_DATA_DIR) / "rabi_trace_dt0.5_seed7.csv");
    REQUIRE(got.time.size() == ref.time.size());
    const json m = load_json(out / "manifest.json");
    const double period = m["results"]["peak"]["period"].get<double>();
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < got.time.size() && got.time[i] <= period; ++i, ++n)
        sum += std::pow(got.n_left[i] - ref.n_left[i], 2);
    REQUIRE(n > 10);
    CHECK(std::sqrt(sum / n) < 1e-3);
    CHECK(m["results"]["exact_gap"].get<double>() == Approx(1.102e-3).epsilon(0.05));
}

TEST_CASE("reruns are byte identical and manifests replay") {
    const fs::path a = work_dir("rerun_a"), b = work_dir("rerun_b"), c = work_dir("rerun_c");
    const std::string args = "rabi --set plan.dt=1.0 --set experiment.M=20000 --seed 3 --out ";
    REQUIRE(run_tool(args + "\"" + a.string() + "\"") == 0);
    REQUIRE(run_tool(args + "\"" + b.string() + "\"") == 0);
    CHECK(slurp(a / "trace.csv") == slurp(b / "trace.csv"));
    CHECK(slurp(a / "spectrum.csv") == slurp(b / "spectrum.csv"));
    REQUIRE(run_tool("rabi --config \"" + (a / "manifest.json").string() + "\" --out \"" + c.string() + "\"") == 0);
    CHECK(slurp(a / "trace.csv") == slurp(c / "trace.csv"));
}

TEST_CASE("csv floats carry 17 significant digits") {
    const fs::path out = work_dir("digits");
    REQUIRE(run_tool("rabi --set plan.dt=1.0 --set experiment.M=4000 --out \"" + out.string() + "\"") == 0);
    std::ifstream in(out / "trace.csv");
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    const std::string value = line.substr(line.rfind(',') + 1);
    std::string digits;
    for (char ch : value)
        if (std::isdigit(static_cast<unsigned char>(ch))) digits += ch;
    digits.erase(0, digits.find_first_not_of('0'));
    CHECK(digits.size() >= 16);
    CHECK(digits.size() <= 17);
}

TEST_CASE("semiclassics and noise commands") {
    const fs::path s = work_dir("semi");
    REQUIRE(run_tool("semiclassics --set chain.potential.kind=experimental --set semiclassics.boundary=hard_wall_left "
                     "--set semiclassics.x_bottom=1 --out \"" + s.string() + "\"") == 0);
    CHECK(fs::exists(s / "levels.csv"));
    const fs::path n = work_dir("noise");
    REQUIRE(run_tool("noise --set experiment.M=4000 --set noise.trials=10 --set noise.phase_sigma=0 --out \"" +
                     n.string() + "\"") == 0);
    CHECK(fs::exists(n / "noise.csv"));
}
