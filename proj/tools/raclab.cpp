#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "raclab/cli.hpp"
#include "raclab/common.hpp"

namespace {

const char* kTasks[][2] = {
    {"stats", "information statistics of a channel family"},
    {"adder-stats", "exact and approximate adder-erasure I_k, V_k"},
    {"blocklengths", "decoding times n_1..n_K for a message size"},
    {"rate-region", "two-user rate region over a p-grid"},
    {"rate-curve", "per-user rate versus k"},
    {"bound", "achievability bound terms for a code design"},
    {"detect", "zero-user hypothesis test errors"},
    {"simulate", "Monte Carlo epochs of the rateless code"},
    {"verify", "assumption, ordering and consistency checks"},
};

bool is_flag(const std::string& f) { return f == "hoeffding_bits" || f == "freeze_codebook"; }

std::string dashed(std::string s)
{
    for (auto& c : s)
        if (c == '_') c = '-';
    return s;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"raclab: finite-blocklength random access channel toolkit"};
    app.set_help_all_flag("--help-all", "show help for all subcommands");
    app.require_subcommand(0, 1);

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);

    std::map<std::string, std::string> values;
    std::map<std::string, bool> flags;
    for (const auto& f : raclab::config_fields()) {
        if (f == "task") continue;
        std::string names = "--" + f;
        if (dashed(f) != f) names += ",--" + dashed(f);
        if (is_flag(f))
            app.add_flag(names, flags[f]);
        else
            app.add_option(names, values[f]);
    }
    for (const auto& t : kTasks) app.add_subcommand(t[0], t[1])->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : raclab::kExitInvalid;
    }

    nlohmann::json doc = nlohmann::json::object();
    try {
        if (!config_path.empty()) {
            std::ifstream is(config_path);
            doc = nlohmann::json::parse(is);
            if (!doc.is_object()) throw raclab::InvalidArgument("config file must hold a JSON object");
        }
        for (const auto* sub : app.get_subcommands()) doc["task"] = sub->get_name();
        for (const auto& [f, v] : values)
            if (app.count("--" + f) > 0) doc[f] = raclab::parse_field(f, v);
        for (const auto& [f, v] : flags)
            if (app.count("--" + f) > 0) doc[f] = v;
        if (!doc.contains("threads") || doc["threads"].is_null())
            if (const char* env = std::getenv("RACLAB_THREADS")) doc["threads"] = raclab::parse_field("threads", env);
    } catch (const std::exception& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return raclab::kExitInvalid;
    }

    if (!doc.contains("task")) {
        std::cerr << "no task given\n\n" << app.help();
        return raclab::kExitInvalid;
    }

    raclab::ExperimentConfig cfg;
    try {
        cfg = raclab::ExperimentConfig::from_json(doc);
    } catch (const std::exception& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return raclab::kExitInvalid;
    }
    return raclab::run(cfg, std::cout, std::cerr);
}
