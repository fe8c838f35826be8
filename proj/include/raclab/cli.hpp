#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace raclab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInfeasible = 3;

/// Everything a run needs. Built from a JSON object (config file merged with
/// command-line flags); unknown fields are rejected.
struct ExperimentConfig {
    std::string task;

    std::string channel;  // empty: per-task default; adder | binary | inputless | file
    std::string channel_file;
    unsigned K = 2;
    double delta = 0.2;
    double a = 0.11;
    double b = 0.11;
    std::vector<double> output_pmf{0.5, 0.5};

    std::optional<double> p;  // Bernoulli(p) inputs
    std::vector<double> px;   // explicit input pmf

    std::optional<double> logm;  // bits
    std::optional<double> M;
    std::vector<double> eps;     // one value (all k) or eps_0..eps_K
    double eps0 = 0.05;
    double grid = 0.005;
    std::vector<double> p_grid;
    unsigned kmax = 50;
    std::vector<std::size_t> n;   // n_1..n_K
    std::vector<std::size_t> n1;  // rate-curve: one curve per entry
    std::optional<std::size_t> n0;
    std::optional<unsigned> k;
    std::size_t trials = 100000;
    std::size_t mc_trials = 200000;
    std::string test = "hoeffding";
    std::optional<double> gamma0;
    std::string tau_mode = "normal";
    std::vector<double> C;
    bool hoeffding_bits = false;
    bool freeze_codebook = false;

    std::uint64_t seed = 1;
    std::string out;
    std::string format;  // csv | json; default from the task and file name
    unsigned threads = 0;

    static ExperimentConfig from_json(const nlohmann::json& doc);
    nlohmann::json to_json() const;
    void validate() const;
};

/// Names of all config fields, in schema order.
const std::vector<std::string>& config_fields();

/// Converts a command-line string to the JSON type of the named field.
nlohmann::json parse_field(const std::string& field, const std::string& text);

/// Dispatches the task, writes artifacts and prints a one-line summary
/// (stdout when an output file is written, otherwise stderr). Returns the
/// process exit status.
int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err);

/// Property checks for a channel and one or more input laws.
nlohmann::json verify(const ExperimentConfig& cfg);

}  // namespace raclab
