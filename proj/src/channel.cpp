#include "raclab/channel.hpp"

#include <cmath>
#include <map>

#include "raclab/common.hpp"

namespace raclab {

namespace {

void check_pmf(std::span<const double> p, const std::string& what)
{
    double total = 0.0;
    for (double v : p) {
        require(std::isfinite(v) && v >= 0.0, what + ": negative or non-finite entry");
        total += v;
    }
    require(std::abs(total - 1.0) <= kKernelTol, what + ": entries do not sum to 1");
}

std::string describe(unsigned k, const MultisetSpace& sp, std::size_t rank)
{
    std::string s = "kernel(k=" + std::to_string(k) + ", counts=[";
    const auto c = sp.counts(rank);
    for (std::size_t i = 0; i < c.size(); ++i) s += (i ? "," : "") + std::to_string(c[i]);
    return s + "])";
}

}  // namespace

InputDistribution::InputDistribution(std::vector<double> p) : pmf(std::move(p))
{
    require(!pmf.empty(), "input distribution is empty");
    check_pmf(pmf, "input distribution");
}

InputDistribution InputDistribution::bernoulli(double p)
{
    require(p >= 0.0 && p <= 1.0, "Bernoulli parameter outside [0,1]");
    return InputDistribution({1.0 - p, p});
}

ChannelFamily::ChannelFamily(unsigned max_users, std::vector<std::string> input_labels,
                             std::vector<std::vector<std::string>> outputs_per_k,
                             std::vector<std::vector<double>> kernels)
    : K_(max_users), inputs_(std::move(input_labels))
{
    require(K_ >= 1, "K must be at least 1");
    require(inputs_.size() >= 2, "input alphabet needs silence plus at least one symbol");
    require(outputs_per_k.size() == K_ + 1, "outputs_per_k must list K+1 alphabets");
    require(kernels.size() == K_ + 1, "kernel tables must cover k = 0..K");

    outputs_ = outputs_per_k[K_];
    require(!outputs_.empty(), "output alphabet Y_K is empty");
    std::map<std::string, std::size_t> index;
    for (std::size_t y = 0; y < outputs_.size(); ++y)
        require(index.emplace(outputs_[y], y).second, "duplicate output label " + outputs_[y]);

    const std::size_t nY = outputs_.size();
    member_.assign(K_ + 1, std::vector<char>(nY, 0));
    for (unsigned k = 0; k <= K_; ++k) {
        require(!outputs_per_k[k].empty(), "output alphabet Y_" + std::to_string(k) + " is empty");
        for (const auto& label : outputs_per_k[k]) {
            auto it = index.find(label);
            require(it != index.end(), "output " + label + " of Y_" + std::to_string(k) + " not in Y_K");
            require(!member_[k][it->second], "duplicate output label " + label);
            member_[k][it->second] = 1;
        }
        if (k > 0)
            for (std::size_t y = 0; y < nY; ++y)
                require(!member_[k - 1][y] || member_[k][y], "output alphabets are not nested");
    }

    spaces_.reserve(K_ + 1);
    for (unsigned k = 0; k <= K_; ++k) spaces_.emplace_back(input_size(), k);

    kernels_ = std::move(kernels);
    for (unsigned k = 0; k <= K_; ++k) {
        require(kernels_[k].size() == spaces_[k].count() * nY,
                "kernel table for k=" + std::to_string(k) + " has the wrong size");
        for (std::size_t r = 0; r < spaces_[k].count(); ++r) {
            const auto p = row(k, r);
            check_pmf(p, describe(k, spaces_[k], r));
            for (std::size_t y = 0; y < nY; ++y)
                require(member_[k][y] || p[y] == 0.0, describe(k, spaces_[k], r) + ": mass outside Y_k");
        }
    }

    // Reducibility: appending silent users to an s-user input must reproduce
    // the s-user row on Y_s.
    std::vector<unsigned> c(input_size());
    for (unsigned k = 1; k <= K_; ++k) {
        for (unsigned s = 0; s < k; ++s) {
            for (std::size_t r = 0; r < spaces_[s].count(); ++r) {
                const auto cs = spaces_[s].counts(r);
                std::copy(cs.begin(), cs.end(), c.begin());
                c[0] += k - s;
                const auto big = row(k, spaces_[k].rank_of_counts(c));
                const auto small = row(s, r);
                for (std::size_t y = 0; y < nY; ++y) {
                    if (!member_[s][y]) continue;
                    require(std::abs(big[y] - small[y]) <= kKernelTol,
                            "reducibility fails between " + describe(s, spaces_[s], r) + " and k=" +
                                std::to_string(k));
                }
            }
        }
    }
}

std::size_t ChannelFamily::output_count(unsigned k) const
{
    std::size_t n = 0;
    for (char m : member_[k]) n += m != 0;
    return n;
}

std::span<const double> ChannelFamily::row_for(unsigned k, std::span<const unsigned> inputs) const
{
    require(k <= K_, "user count exceeds K");
    require(inputs.size() == k, "input vector length must equal k");
    return row(k, spaces_[k].rank_of_symbols(inputs));
}

nlohmann::json ChannelFamily::to_json() const
{
    nlohmann::json doc;
    doc["K"] = K_;
    doc["inputs"] = inputs_;
    auto outs = nlohmann::json::array();
    for (unsigned k = 0; k <= K_; ++k) {
        auto list = nlohmann::json::array();
        for (std::size_t y = 0; y < outputs_.size(); ++y)
            if (member_[k][y]) list.push_back(outputs_[y]);
        outs.push_back(list);
    }
    doc["outputs_per_k"] = outs;
    auto rows = nlohmann::json::array();
    for (unsigned k = 0; k <= K_; ++k) {
        for (std::size_t r = 0; r < spaces_[k].count(); ++r) {
            nlohmann::json entry;
            entry["k"] = k;
            auto ms = nlohmann::json::array();
            const auto c = spaces_[k].counts(r);
            for (unsigned x = 0; x < input_size(); ++x)
                for (unsigned j = 0; j < c[x]; ++j) ms.push_back(inputs_[x]);
            entry["multiset"] = ms;
            auto probs = nlohmann::json::array();
            const auto p = row(k, r);
            for (std::size_t y = 0; y < outputs_.size(); ++y)
                if (member_[k][y]) probs.push_back(p[y]);
            entry["probs"] = probs;
            rows.push_back(entry);
        }
    }
    doc["kernel"] = rows;
    return doc;
}

ChannelFamily ChannelFamily::from_json(const nlohmann::json& doc)
{
    require(doc.is_object(), "channel document must be a JSON object");
    for (const auto& [key, _] : doc.items())
        require(key == "K" || key == "inputs" || key == "outputs_per_k" || key == "kernel",
                "unknown channel field: " + key);
    require(doc.contains("K") && doc["K"].is_number_integer() && doc["K"].get<long long>() >= 1,
            "channel field K must be a positive integer");
    const auto K = static_cast<unsigned>(doc["K"].get<long long>());

    require(doc.contains("inputs") && doc["inputs"].is_array(), "channel field inputs must be an array");
    std::vector<std::string> inputs;
    for (const auto& v : doc["inputs"]) inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
    std::map<std::string, unsigned> in_index;
    for (unsigned i = 0; i < inputs.size(); ++i)
        require(in_index.emplace(inputs[i], i).second, "duplicate input label " + inputs[i]);

    require(doc.contains("outputs_per_k") && doc["outputs_per_k"].is_array(),
            "channel field outputs_per_k must be an array");
    std::vector<std::vector<std::string>> outs;
    for (const auto& list : doc["outputs_per_k"]) {
        require(list.is_array(), "outputs_per_k entries must be arrays");
        std::vector<std::string> labels;
        for (const auto& v : list) labels.push_back(v.is_string() ? v.get<std::string>() : v.dump());
        outs.push_back(std::move(labels));
    }
    require(outs.size() == K + 1 || outs.size() == K, "outputs_per_k must list K+1 alphabets (k = 0..K)");
    require(!outs.empty(), "outputs_per_k is empty");

    const auto& global = outs.back();
    std::map<std::string, std::size_t> out_index;
    for (std::size_t y = 0; y < global.size(); ++y) out_index.emplace(global[y], y);
    const std::size_t nY = global.size();

    // Y_0 may be omitted when outputs_per_k has K entries; it is then
    // taken to be Y_1.
    if (outs.size() == K) outs.insert(outs.begin(), outs.front());

    std::vector<std::vector<double>> kernels(K + 1);
    std::vector<std::vector<char>> seen(K + 1);
    std::vector<MultisetSpace> spaces;
    for (unsigned k = 0; k <= K; ++k) {
        spaces.emplace_back(static_cast<unsigned>(inputs.size()), k);
        kernels[k].assign(spaces[k].count() * nY, 0.0);
        seen[k].assign(spaces[k].count(), 0);
    }

    require(doc.contains("kernel") && doc["kernel"].is_array(), "channel field kernel must be an array");
    for (const auto& entry : doc["kernel"]) {
        require(entry.is_object() && entry.contains("k") && entry.contains("multiset") && entry.contains("probs"),
                "kernel entries need k, multiset and probs");
        for (const auto& [key, _] : entry.items())
            require(key == "k" || key == "multiset" || key == "probs", "unknown kernel field: " + key);
        const unsigned k = entry["k"].get<unsigned>();
        require(k <= K, "kernel entry has k > K");
        std::vector<unsigned> symbols;
        for (const auto& v : entry["multiset"]) {
            const std::string label = v.is_string() ? v.get<std::string>() : v.dump();
            auto it = in_index.find(label);
            require(it != in_index.end(), "unknown input symbol " + label);
            symbols.push_back(it->second);
        }
        require(symbols.size() == k, "kernel multiset size must equal k");
        const std::size_t r = spaces[k].rank_of_symbols(symbols);
        require(!seen[k][r], "duplicate kernel row for k=" + std::to_string(k));
        seen[k][r] = 1;

        const auto& yk = outs[k];
        require(entry["probs"].is_array() && entry["probs"].size() == yk.size(),
                "probs length must equal |Y_k| for k=" + std::to_string(k));
        for (std::size_t j = 0; j < yk.size(); ++j) {
            auto it = out_index.find(yk[j]);
            require(it != out_index.end(), "output " + yk[j] + " not in Y_K");
            require(entry["probs"][j].is_number(), "probs entries must be numbers");
            kernels[k][r * nY + it->second] = entry["probs"][j].get<double>();
        }
    }

    // The k = 0 row follows from reducibility when absent.
    if (!seen[0][0]) {
        std::vector<unsigned> silent{0};
        const std::size_t r = spaces[1].rank_of_symbols(silent);
        require(seen[1][r], "kernel row for k=1 with silent input is missing");
        std::copy_n(kernels[1].begin() + static_cast<std::ptrdiff_t>(r * nY), nY, kernels[0].begin());
        seen[0][0] = 1;
    }
    for (unsigned k = 0; k <= K; ++k)
        for (std::size_t r = 0; r < spaces[k].count(); ++r)
            require(seen[k][r], "missing " + describe(k, spaces[k], r));

    return ChannelFamily(K, std::move(inputs), std::move(outs), std::move(kernels));
}

void require_enumerable(const ChannelFamily& ch)
{
    double entries = static_cast<double>(ch.output_size());
    for (unsigned k = 0; k < ch.max_users(); ++k) entries *= ch.input_size();
    if (entries > kMaxTableEntries)
        throw TableOverflow("channel tables exceed " + std::to_string(static_cast<long long>(kMaxTableEntries)) +
                            " entries");
}

ChannelFamily make_adder_erasure(unsigned K, double delta)
{
    require(K >= 1, "K must be at least 1");
    require(delta >= 0.0 && delta <= 1.0, "erasure probability outside [0,1]");
    std::vector<std::string> global;
    for (unsigned y = 0; y <= K; ++y) global.push_back(std::to_string(y));
    global.push_back("e");
    const std::size_t nY = global.size();
    const std::size_t erasure = nY - 1;

    std::vector<std::vector<std::string>> outs(K + 1);
    std::vector<std::vector<double>> kernels(K + 1);
    for (unsigned k = 0; k <= K; ++k) {
        for (unsigned y = 0; y <= k; ++y) outs[k].push_back(std::to_string(y));
        outs[k].push_back("e");
        MultisetSpace sp(2, k);
        kernels[k].assign(sp.count() * nY, 0.0);
        for (std::size_t r = 0; r < sp.count(); ++r) {
            const unsigned ones = sp.counts(r)[1];
            kernels[k][r * nY + ones] += 1.0 - delta;
            kernels[k][r * nY + erasure] += delta;
        }
    }
    return ChannelFamily(K, {"0", "1"}, std::move(outs), std::move(kernels));
}

ChannelFamily make_binary_example(double a, double b)
{
    require(a >= 0.0 && a <= 1.0, "parameter a outside [0,1]");
    require(b >= 0.0 && b <= 1.0, "parameter b outside [0,1]");
    // Multiset ranks for two binary inputs: {0,0}, {0,1}, {1,1}.
    std::vector<std::vector<double>> kernels{
        {1.0 - b, b},
        {1.0 - b, b, b, 1.0 - b},
        {1.0 - b, b, b, 1.0 - b, 1.0 - a, a},
    };
    return ChannelFamily(2, {"0", "1"}, {{"0", "1"}, {"0", "1"}, {"0", "1"}}, std::move(kernels));
}

ChannelFamily make_inputless(unsigned K, std::vector<double> output_pmf)
{
    require(K >= 1, "K must be at least 1");
    check_pmf(output_pmf, "output pmf");
    std::vector<std::string> labels;
    for (std::size_t y = 0; y < output_pmf.size(); ++y) labels.push_back(std::to_string(y));
    std::vector<std::vector<double>> kernels(K + 1);
    for (unsigned k = 0; k <= K; ++k) {
        MultisetSpace sp(2, k);
        for (std::size_t r = 0; r < sp.count(); ++r)
            kernels[k].insert(kernels[k].end(), output_pmf.begin(), output_pmf.end());
    }
    return ChannelFamily(K, {"0", "1"}, std::vector<std::vector<std::string>>(K + 1, labels), std::move(kernels));
}

nlohmann::json AssumptionReport::to_json() const
{
    return {
        {"friendliness", friendliness},
        {"friendliness_margin", friendliness_margin},
        {"interference", interference},
        {"interference_margin", interference_margin},
        {"output_separation", output_separation},
        {"delta0", delta0},
        {"positive_dispersion", positive_dispersion},
        {"min_dispersion", min_dispersion},
        {"all", all()},
    };
}

}  // namespace raclab
