#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "raclab/cli.hpp"
#include "raclab/common.hpp"

using namespace raclab;
namespace fs = std::filesystem;

namespace {

struct Proc {
    int status = -1;
    std::string out;
};

// Runs the raclab binary with stdout captured and stderr discarded.
Proc shell(const std::string& args)
{
    const std::string cmd = std::string(RACLAB_CLI_PATH) + " " + args + " 2>/dev/null";
    Proc p;
    FILE* f = popen(cmd.c_str(), "r");
    REQUIRE(f != nullptr);
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, f)) > 0) p.out.append(buf, got);
    const int st = pclose(f);
    p.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / "raclab_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

int run_json(const nlohmann::json& doc, std::string* stdout_text = nullptr)
{
    std::ostringstream out, err;
    int st = kExitInvalid;
    try {
        st = run(ExperimentConfig::from_json(doc), out, err);
    } catch (const InvalidArgument&) {
        return kExitInvalid;
    }
    if (stdout_text) *stdout_text = out.str();
    return st;
}

}  // namespace

TEST_CASE("config parsing")
{
    CHECK(parse_field("delta", "0.25") == nlohmann::json(0.25));
    CHECK(parse_field("K", "3") == nlohmann::json(3));
    CHECK(parse_field("eps", "0.1,0.01") == nlohmann::json::array({0.1, 0.01}));
    CHECK(parse_field("n", "30,80") == nlohmann::json::array({30, 80}));
    CHECK(parse_field("freeze_codebook", "true") == nlohmann::json(true));
    CHECK_THROWS_AS(parse_field("delta", "abc"), InvalidArgument);
    CHECK_THROWS_AS(parse_field("K", "-1"), InvalidArgument);
    CHECK_THROWS_AS(parse_field("nope", "1"), InvalidArgument);

    const auto& f = config_fields();
    CHECK(std::find(f.begin(), f.end(), "trials") != f.end());

    CHECK_THROWS_AS(ExperimentConfig::from_json({{"task", "stats"}, {"unknown", 1}}), InvalidArgument);
    const auto cfg = ExperimentConfig::from_json({{"task", "bound"}, {"delta", 0.3}, {"eps", {0.1}}, {"k", nullptr}});
    CHECK(cfg.delta == 0.3);
    CHECK_FALSE(cfg.k);
    CHECK(ExperimentConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
}

TEST_CASE("exit codes through the library entry point")
{
    CHECK(run_json({{"task", "stats"}}) == kExitOk);
    CHECK(run_json({}) == kExitInvalid);
    CHECK(run_json({{"task", "fly"}}) == kExitInvalid);
    CHECK(run_json({{"task", "stats"}, {"delta", 2.0}}) == kExitInvalid);
    CHECK(run_json({{"task", "stats"}, {"p", 1.5}}) == kExitInvalid);
    CHECK(run_json({{"task", "blocklengths"}, {"channel", "binary"}, {"eps", {1e-9}}, {"logm", 1e6}}) == kExitOk);
    // tiny M with a Berry-Esseen slack that swallows eps
    CHECK(run_json({{"task", "bound"}, {"tau_mode", "berry_esseen"}, {"eps", {1e-3}}, {"n", {30, 80}}, {"trials", 10000}}) ==
          kExitInfeasible);
    CHECK(run_json({{"task", "verify"}, {"channel", "inputless"}}) == kExitVerifyFailed);
    CHECK(run_json({{"task", "verify"}, {"channel", "adder"}, {"K", 3}}) == kExitOk);
    CHECK(run_json({{"task", "simulate"}, {"M", 1000}, {"trials", 1000}}) == kExitInvalid);
}

TEST_CASE("rate region CSV")
{
    std::string text;
    REQUIRE(run_json({{"task", "rate-region"}, {"grid", 0.1}}, &text) == kExitOk);
    std::istringstream in(text);
    std::string units, header, line;
    std::getline(in, units);
    std::getline(in, header);
    CHECK(units.rfind("# units:", 0) == 0);
    CHECK(header == "p,R1,R2,n1,n2,dominant_flag");
    bool half = false;
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        if (line.rfind("0.5,", 0) == 0) {
            half = true;
            CHECK(line.find(",2290,4399,1") != std::string::npos);
        }
    }
    CHECK(rows == 9);
    CHECK(half);
}

TEST_CASE("binary: usage, config files, reproducible artifacts")
{
    const auto none = shell("");
    CHECK(none.status == kExitInvalid);
    CHECK(shell("bogus").status == kExitInvalid);
    CHECK(shell("stats --delta nan").status == kExitInvalid);

    const auto cfg = scratch("empty.json");
    std::ofstream(cfg) << "{}";
    CHECK(shell("stats --config " + cfg.string()).status == kExitOk);
    std::ofstream(cfg) << "{\"wrong\": 1}";
    CHECK(shell("stats --config " + cfg.string()).status == kExitInvalid);
    std::ofstream(cfg) << "";
    CHECK(shell("stats --config " + cfg.string()).status == kExitInvalid);

    const auto a = scratch("a.json"), b = scratch("b.json"), c = scratch("c.csv"), d = scratch("d.csv");
    const std::string sim = "simulate --n 30,80 --n0 5 --gamma0 0.25 --eps 0.02 --M 16 --trials 1000 --seed 7 ";
    REQUIRE(shell(sim + "--out " + a.string()).status == kExitOk);
    REQUIRE(shell(sim + "--threads 3 --out " + b.string()).status == kExitOk);
    CHECK(slurp(a) == slurp(b));
    CHECK(nlohmann::json::parse(slurp(a)).is_object());

    const std::string bnd = "bound --n 30,80 --n0 5 --gamma0 0.25 --eps 0.02 --M 16 --trials 10000 --seed 7 ";
    REQUIRE(shell(bnd + "--out " + c.string()).status == kExitOk);
    REQUIRE(shell(bnd + "--out " + d.string()).status == kExitOk);
    CHECK(slurp(c) == slurp(d));
    CHECK(slurp(c).rfind("# units:", 0) == 0);

    // flags override the config file
    std::ofstream(cfg) << "{\"delta\": 0.5, \"K\": 1}";
    const auto over = shell("stats --config " + cfg.string() + " --delta 0.2");
    REQUIRE(over.status == kExitOk);
    const auto doc = nlohmann::json::parse(over.out);
    CHECK(doc["statistics"]["per_k"][0]["I"].get<double>() == doctest::Approx(0.8 * std::log(2.0)));
}
