#include "raclab/cli.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "raclab/adder.hpp"
#include "raclab/bound.hpp"
#include "raclab/channel.hpp"
#include "raclab/common.hpp"
#include "raclab/design.hpp"
#include "raclab/detect.hpp"
#include "raclab/infodensity.hpp"
#include "raclab/io.hpp"
#include "raclab/parallel.hpp"
#include "raclab/sim.hpp"

namespace raclab {

namespace {

using nlohmann::json;

enum class FieldType { string, uint, uint64, real, boolean, real_list, uint_list };

struct Field {
    std::string name;
    FieldType type;
    std::function<void(ExperimentConfig&, const json&)> set;
    std::function<json(const ExperimentConfig&)> get;
};

std::uint64_t as_uint(const json& v, const std::string& name)
{
    double x = 0.0;
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number()) x = v.get<double>();
    else throw InvalidArgument("field " + name + " must be a nonnegative integer");
    require(x >= 0.0 && x == std::floor(x) && x < 1.8e19, "field " + name + " must be a nonnegative integer");
    return static_cast<std::uint64_t>(x);
}

double as_real(const json& v, const std::string& name)
{
    require(v.is_number(), "field " + name + " must be a number");
    return v.get<double>();
}

std::vector<double> as_reals(const json& v, const std::string& name)
{
    if (v.is_number()) return {v.get<double>()};
    require(v.is_array(), "field " + name + " must be a list of numbers");
    std::vector<double> r;
    for (const auto& e : v) r.push_back(as_real(e, name));
    return r;
}

std::vector<std::size_t> as_uints(const json& v, const std::string& name)
{
    if (v.is_number()) return {static_cast<std::size_t>(as_uint(v, name))};
    require(v.is_array(), "field " + name + " must be a list of integers");
    std::vector<std::size_t> r;
    for (const auto& e : v) r.push_back(static_cast<std::size_t>(as_uint(e, name)));
    return r;
}

#define RAC_STRING(f) \
    Field{#f, FieldType::string, [](ExperimentConfig& c, const json& v) { \
              require(v.is_string(), "field " #f " must be a string"); c.f = v.get<std::string>(); }, \
          [](const ExperimentConfig& c) { return json(c.f); }}
#define RAC_REAL(f) \
    Field{#f, FieldType::real, [](ExperimentConfig& c, const json& v) { c.f = as_real(v, #f); }, \
          [](const ExperimentConfig& c) { return json_number(c.f); }}
#define RAC_OPT_REAL(f) \
    Field{#f, FieldType::real, [](ExperimentConfig& c, const json& v) { c.f = as_real(v, #f); }, \
          [](const ExperimentConfig& c) { return c.f ? json_number(*c.f) : json(nullptr); }}
#define RAC_UINT(f, T) \
    Field{#f, FieldType::uint, [](ExperimentConfig& c, const json& v) { c.f = static_cast<T>(as_uint(v, #f)); }, \
          [](const ExperimentConfig& c) { return json(c.f); }}
#define RAC_OPT_UINT(f, T) \
    Field{#f, FieldType::uint, [](ExperimentConfig& c, const json& v) { c.f = static_cast<T>(as_uint(v, #f)); }, \
          [](const ExperimentConfig& c) { return c.f ? json(*c.f) : json(nullptr); }}
#define RAC_BOOL(f) \
    Field{#f, FieldType::boolean, [](ExperimentConfig& c, const json& v) { \
              require(v.is_boolean(), "field " #f " must be true or false"); c.f = v.get<bool>(); }, \
          [](const ExperimentConfig& c) { return json(c.f); }}
#define RAC_REALS(f) \
    Field{#f, FieldType::real_list, [](ExperimentConfig& c, const json& v) { c.f = as_reals(v, #f); }, \
          [](const ExperimentConfig& c) { return json_numbers(c.f); }}
#define RAC_UINTS(f) \
    Field{#f, FieldType::uint_list, [](ExperimentConfig& c, const json& v) { c.f = as_uints(v, #f); }, \
          [](const ExperimentConfig& c) { return json(c.f); }}

const std::vector<Field>& schema()
{
    static const std::vector<Field> fields{
        RAC_STRING(task),
        RAC_STRING(channel),
        RAC_STRING(channel_file),
        RAC_UINT(K, unsigned),
        RAC_REAL(delta),
        RAC_REAL(a),
        RAC_REAL(b),
        RAC_REALS(output_pmf),
        RAC_OPT_REAL(p),
        RAC_REALS(px),
        RAC_OPT_REAL(logm),
        RAC_OPT_REAL(M),
        RAC_REALS(eps),
        RAC_REAL(eps0),
        RAC_REAL(grid),
        RAC_REALS(p_grid),
        RAC_UINT(kmax, unsigned),
        RAC_UINTS(n),
        RAC_UINTS(n1),
        RAC_OPT_UINT(n0, std::size_t),
        RAC_OPT_UINT(k, unsigned),
        RAC_UINT(trials, std::size_t),
        RAC_UINT(mc_trials, std::size_t),
        RAC_STRING(test),
        RAC_OPT_REAL(gamma0),
        RAC_STRING(tau_mode),
        RAC_REALS(C),
        RAC_BOOL(hoeffding_bits),
        RAC_BOOL(freeze_codebook),
        Field{"seed", FieldType::uint64, [](ExperimentConfig& c, const json& v) { c.seed = as_uint(v, "seed"); },
              [](const ExperimentConfig& c) { return json(c.seed); }},
        RAC_STRING(out),
        RAC_STRING(format),
        RAC_UINT(threads, unsigned),
    };
    return fields;
}

#undef RAC_STRING
#undef RAC_REAL
#undef RAC_OPT_REAL
#undef RAC_UINT
#undef RAC_OPT_UINT
#undef RAC_BOOL
#undef RAC_REALS
#undef RAC_UINTS

const Field& find_field(const std::string& name)
{
    for (const auto& f : schema())
        if (f.name == name) return f;
    throw InvalidArgument("unknown config field: " + name);
}

double parse_real(const std::string& s, const std::string& name)
{
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw InvalidArgument("field " + name + ": cannot parse '" + s + "' as a number");
    }
    require(pos == s.size(), "field " + name + ": trailing characters in '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep)
{
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep))
        if (!cur.empty()) parts.push_back(cur);
    return parts;
}

const std::vector<std::string> kTasks{"stats",  "adder-stats", "blocklengths", "rate-region", "rate-curve",
                                      "bound",  "detect",      "simulate",     "verify"};

}  // namespace

const std::vector<std::string>& config_fields()
{
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& f : schema()) v.push_back(f.name);
        return v;
    }();
    return names;
}

json parse_field(const std::string& field, const std::string& text)
{
    const Field& f = find_field(field);
    switch (f.type) {
    case FieldType::string: return text;
    case FieldType::uint:
    case FieldType::uint64: {
        const double v = parse_real(text, field);
        require(v >= 0.0 && v == std::floor(v), "field " + field + " must be a nonnegative integer");
        if (f.type == FieldType::uint64 && text.find_first_not_of("0123456789") == std::string::npos)
            return std::stoull(text);
        return static_cast<std::uint64_t>(v);
    }
    case FieldType::real: return parse_real(text, field);
    case FieldType::boolean:
        if (text == "true" || text == "1") return true;
        if (text == "false" || text == "0") return false;
        throw InvalidArgument("field " + field + " must be true or false");
    case FieldType::real_list: {
        auto arr = json::array();
        for (const auto& p : split(text, ',')) arr.push_back(parse_real(p, field));
        return arr;
    }
    case FieldType::uint_list: {
        auto arr = json::array();
        for (const auto& p : split(text, ',')) {
            const double v = parse_real(p, field);
            require(v >= 0.0 && v == std::floor(v), "field " + field + " must list nonnegative integers");
            arr.push_back(static_cast<std::uint64_t>(v));
        }
        return arr;
    }
    }
    return nullptr;
}

ExperimentConfig ExperimentConfig::from_json(const json& doc)
{
    require(doc.is_object(), "config must be a JSON object");
    ExperimentConfig c;
    for (const auto& [key, value] : doc.items()) {
        const Field& f = find_field(key);
        if (value.is_null()) continue;
        f.set(c, value);
    }
    return c;
}

json ExperimentConfig::to_json() const
{
    json doc = json::object();
    for (const auto& f : schema()) doc[f.name] = f.get(*this);
    return doc;
}

void ExperimentConfig::validate() const
{
    require(!task.empty(), "no task given");
    require(std::find(kTasks.begin(), kTasks.end(), task) != kTasks.end(), "unknown task: " + task);
    require(channel.empty() || channel == "adder" || channel == "binary" || channel == "inputless" ||
                channel == "file",
            "channel must be adder, binary, inputless or file");
    require(channel != "file" || !channel_file.empty(), "channel=file needs channel_file");
    require(K >= 1, "K must be at least 1");
    require(test == "hoeffding" || test == "ks" || test == "llr", "test must be hoeffding, ks or llr");
    require(tau_mode == "normal" || tau_mode == "berry_esseen", "tau_mode must be normal or berry_esseen");
    require(format.empty() || format == "csv" || format == "json", "format must be csv or json");
    if (p) require(*p > 0.0 && *p < 1.0, "p must lie in (0,1)");
    for (double e : eps) require(e > 0.0 && e < 1.0, "eps entries must lie in (0,1)");
    require(eps0 > 0.0 && eps0 < 1.0, "eps0 must lie in (0,1)");
    require(trials >= 1, "trials must be positive");
    if (logm) require(*logm > 0.0, "logm must be positive");
    if (M) require(*M >= 1.0, "M must be at least 1");
}

namespace {

struct Context {
    const ExperimentConfig& cfg;
    std::ostream& out;
    std::ostream& err;
    std::string summary;
};

ChannelFamily build_channel(const ExperimentConfig& cfg, const std::string& fallback)
{
    const std::string kind = cfg.channel.empty() ? fallback : cfg.channel;
    if (kind == "adder") return make_adder_erasure(cfg.K, cfg.delta);
    if (kind == "binary") return make_binary_example(cfg.a, cfg.b);
    if (kind == "inputless") return make_inputless(cfg.K, cfg.output_pmf);
    std::ifstream is(cfg.channel_file);
    require(is.good(), "cannot open channel file " + cfg.channel_file);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("channel file is not valid JSON: ") + e.what());
    }
    return ChannelFamily::from_json(doc);
}

InputDistribution build_px(const ExperimentConfig& cfg, const ChannelFamily& ch)
{
    if (!cfg.px.empty()) {
        require(cfg.px.size() == ch.input_size(), "px length differs from the input alphabet");
        return InputDistribution(cfg.px);
    }
    if (cfg.p) {
        require(ch.input_size() == 2, "p applies to binary inputs only; use px");
        return InputDistribution::bernoulli(*cfg.p);
    }
    return InputDistribution(std::vector<double>(ch.input_size(), 1.0 / ch.input_size()));
}

std::vector<double> eps_vector(const ExperimentConfig& cfg, unsigned K, double fallback)
{
    if (cfg.eps.empty()) return std::vector<double>(K + 1, fallback);
    if (cfg.eps.size() == 1) return std::vector<double>(K + 1, cfg.eps[0]);
    require(cfg.eps.size() == K + 1, "eps must hold one value or K+1 values (eps_0..eps_K)");
    return cfg.eps;
}

double logm_bits(const ExperimentConfig& cfg, double fallback)
{
    if (cfg.logm) return *cfg.logm;
    if (cfg.M) return std::log2(*cfg.M);
    return fallback;
}

std::string output_format(const ExperimentConfig& cfg, const std::string& fallback)
{
    if (!cfg.format.empty()) return cfg.format;
    const auto& o = cfg.out;
    if (o.size() >= 4 && o.compare(o.size() - 4, 4, ".csv") == 0) return "csv";
    if (o.size() >= 5 && o.compare(o.size() - 5, 5, ".json") == 0) return "json";
    return fallback;
}

// Writes `body` to the output file (or stdout).
void emit(Context& ctx, const std::function<void(std::ostream&)>& body)
{
    if (ctx.cfg.out.empty()) {
        body(ctx.out);
        return;
    }
    std::ofstream os(ctx.cfg.out, std::ios::binary);
    require(os.good(), "cannot open output file " + ctx.cfg.out);
    body(os);
    require(os.good(), "failed writing " + ctx.cfg.out);
}

void emit_json(Context& ctx, const json& doc)
{
    emit(ctx, [&](std::ostream& os) { os << doc.dump(2) << '\n'; });
}

CodeDesign build_design(const ExperimentConfig& cfg, const ChannelStatistics& st)
{
    const unsigned K = st.K;
    const double logM = logm_bits(cfg, 4.0);
    const auto eps = eps_vector(cfg, K, 0.1);
    std::vector<std::size_t> n;
    if (cfg.n.empty()) {
        n = blocklengths(st, logM, eps);
    } else {
        require(cfg.n.size() == K, "n must list n_1..n_K");
        n.push_back(0);
        n.insert(n.end(), cfg.n.begin(), cfg.n.end());
    }
    DesignOptions opt;
    opt.tau_mode = cfg.tau_mode == "normal" ? TauMode::normal : TauMode::berry_esseen;
    opt.C = cfg.C;
    opt.zero_test = parse_test_kind(cfg.test);
    require(opt.zero_test != TestKind::llr, "code designs use a hoeffding or ks zero test");
    opt.hoeffding_bits = cfg.hoeffding_bits;
    opt.n0 = cfg.n0;
    opt.gamma0 = cfg.gamma0;
    return choose_parameters(st, logM, eps, n, opt);
}

std::vector<unsigned> k_list(const ExperimentConfig& cfg, unsigned K, unsigned first)
{
    if (cfg.k) {
        require(*cfg.k <= K, "k exceeds K");
        return {*cfg.k};
    }
    std::vector<unsigned> ks;
    for (unsigned k = first; k <= K; ++k) ks.push_back(k);
    return ks;
}

void task_stats(Context& ctx)
{
    const auto ch = build_channel(ctx.cfg, "adder");
    const auto px = build_px(ctx.cfg, ch);
    const auto st = statistics(ch, px);
    if (output_format(ctx.cfg, "json") == "csv") {
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os, {"k", "I_k_nats", "V_k_nats2", "T_k", "B_k"}, "I nats, V nats^2, T nats^3, B dimensionless");
            for (unsigned k = 1; k <= st.K; ++k) {
                w << k << st.I[k] << st.V[k] << st.T[k] << st.B[k];
                w.end_row();
            }
        });
    } else {
        json doc;
        doc["channel"] = ch.to_json();
        doc["px"] = json_numbers(px.pmf);
        doc["statistics"] = st.to_json();
        doc["assumptions"] = check_assumptions(ch, px).to_json();
        emit_json(ctx, doc);
    }
    ctx.summary = "stats: K=" + std::to_string(st.K) + " I_K=" + format_number(st.I[st.K]) + " nats";
}

void task_adder_stats(Context& ctx)
{
    const auto rows = emit_figure_data(ctx.cfg.delta, ctx.cfg.kmax);
    if (output_format(ctx.cfg, "csv") == "csv") {
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os, {"k", "I_exact", "I_approx", "V_exact", "V_approx"}, "I nats, V nats^2");
            for (const auto& r : rows) {
                w << r.k << r.I_exact << r.I_approx << r.V_exact << r.V_approx;
                w.end_row();
            }
        });
    } else {
        auto arr = json::array();
        for (const auto& r : rows)
            arr.push_back({{"k", r.k},
                           {"I_exact", json_number(r.I_exact)},
                           {"I_approx", json_number(r.I_approx)},
                           {"V_exact", json_number(r.V_exact)},
                           {"V_approx", json_number(r.V_approx)}});
        emit_json(ctx, {{"delta", ctx.cfg.delta}, {"units", "nats"}, {"rows", arr}});
    }
    ctx.summary = "adder-stats: delta=" + format_number(ctx.cfg.delta) + " rows=" + std::to_string(rows.size());
}

void task_blocklengths(Context& ctx)
{
    const auto ch = build_channel(ctx.cfg, "binary");
    const auto px = build_px(ctx.cfg, ch);
    const auto st = statistics(ch, px);
    const double logM = logm_bits(ctx.cfg, 1000.0);
    const auto eps = eps_vector(ctx.cfg, st.K, 1e-3);
    const auto n = blocklengths(st, logM, eps);
    if (output_format(ctx.cfg, "csv") == "csv") {
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os, {"k", "n_k", "R_k", "I_k", "V_k", "eps_k"},
                        "n channel uses, R bits/channel use per user, I bits, V bits^2");
            for (unsigned k = 1; k <= st.K; ++k) {
                w << k << n[k] << logM / static_cast<double>(n[k]) << nats_to_bits(st.I[k])
                  << nats_to_bits(nats_to_bits(st.V[k])) << eps[k];
                w.end_row();
            }
        });
    } else {
        auto arr = json::array();
        for (unsigned k = 1; k <= st.K; ++k)
            arr.push_back({{"k", k}, {"n", n[k]}, {"R_bits", logM / static_cast<double>(n[k])}, {"eps", eps[k]}});
        emit_json(ctx, {{"logM_bits", logM}, {"rows", arr}});
    }
    std::string s = "blocklengths:";
    for (unsigned k = 1; k <= st.K; ++k) s += " n" + std::to_string(k) + "=" + std::to_string(n[k]);
    ctx.summary = s;
}

void task_rate_region(Context& ctx)
{
    const auto ch = build_channel(ctx.cfg, "binary");
    const double logM = logm_bits(ctx.cfg, 1000.0);
    const double eps = ctx.cfg.eps.empty() ? 1e-3 : ctx.cfg.eps[0];
    const auto grid = ctx.cfg.p_grid.empty() ? make_p_grid(ctx.cfg.grid) : ctx.cfg.p_grid;
    const auto res = sweep_rate_region(ch, logM, eps, grid);
    std::size_t flagged = 0;
    for (const auto& r : res.rows) flagged += !r.feasible;
    if (output_format(ctx.cfg, "csv") == "csv") {
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os, {"p", "R1", "R2", "n1", "n2", "dominant_flag"},
                        "p probability, R bits/channel use per user, n channel uses");
            for (const auto& r : res.rows) {
                if (!r.feasible) continue;
                w << r.p << r.R1 << r.R2 << r.n1 << r.n2 << r.dominant;
                w.end_row();
            }
        });
    } else {
        emit_json(ctx, res.to_json());
    }
    std::string s = "rate-region: " + std::to_string(res.rows.size()) + " points, " + std::to_string(flagged) +
                    " flagged, dominant:";
    for (std::size_t i : res.dominant)
        if (res.dominant.size() <= 3)
            s += " p=" + format_number(res.rows[i].p) + " (" + format_number(res.rows[i].R1) + "," +
                 format_number(res.rows[i].R2) + ")";
    if (res.dominant.size() > 3) s += " " + std::to_string(res.dominant.size()) + " points";
    ctx.summary = s;
}

void task_rate_curve(Context& ctx)
{
    const auto& cfg = ctx.cfg;
    const double eps = cfg.eps.empty() ? 1e-6 : cfg.eps[0];
    const auto n1s = cfg.n1.empty() ? std::vector<std::size_t>{20, 100, 500, 2500} : cfg.n1;
    ChannelStatistics st;
    if (cfg.channel.empty() || cfg.channel == "adder") {
        // Closed form, so K is not limited by enumeration.
        st.K = cfg.K;
        st.I.assign(cfg.K + 1, 0.0);
        st.V.assign(cfg.K + 1, 0.0);
        for (unsigned k = 1; k <= cfg.K; ++k) {
            const auto a = adder_stats(k, cfg.delta, AdderMode::exact);
            st.I[k] = a.I;
            st.V[k] = a.V;
        }
    } else {
        const auto ch = build_channel(cfg, "adder");
        st = statistics(ch, build_px(cfg, ch));
    }
    std::vector<std::pair<std::size_t, std::vector<RateCurveRow>>> curves;
    for (std::size_t n1 : n1s) curves.emplace_back(n1, per_user_rate_curve(st, n1, eps, st.K));
    if (output_format(cfg, "csv") == "csv") {
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os, {"n1", "k", "n_k", "R_k", "capacity_k"},
                        "n channel uses, R and capacity bits/channel use per user");
            for (const auto& [n1, rows] : curves)
                for (const auto& r : rows) {
                    w << n1 << r.k << r.n << r.R << r.capacity;
                    w.end_row();
                }
        });
    } else {
        auto arr = json::array();
        for (const auto& [n1, rows] : curves)
            for (const auto& r : rows)
                arr.push_back({{"n1", n1}, {"k", r.k}, {"n", r.n}, {"R", r.R}, {"capacity", r.capacity}});
        emit_json(ctx, {{"eps", eps}, {"rows", arr}});
    }
    ctx.summary = "rate-curve: " + std::to_string(curves.size()) + " curves up to k=" + std::to_string(st.K);
}

void task_bound(Context& ctx)
{
    const auto ch = build_channel(ctx.cfg, "adder");
    const auto px = build_px(ctx.cfg, ch);
    const auto st = statistics(ch, px);
    const auto design = build_design(ctx.cfg, st);
    std::vector<ErrorBoundReport> reps;
    std::string s = "bound:";
    for (unsigned k : k_list(ctx.cfg, st.K, 0)) {
        reps.push_back(evaluate_bound(ch, px, design, k, ctx.cfg.trials, ctx.cfg.seed));
        s += " eps" + std::to_string(k) + "<=" + format_number(reps.back().total);
    }
    if (output_format(ctx.cfg, "json") == "csv") {
        // one row per term
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os,
                        {"k", "term", "t", "s", "n", "threshold", "log_prefactor", "probability", "probability_se",
                         "value", "value_se", "exact"},
                        "threshold nats (zero_test: gamma0), log_prefactor nats, n channel uses");
            for (const auto& r : reps)
                for (const auto& e : r.terms) {
                    w << r.k << to_string(e.kind) << e.t << e.s << e.n << e.threshold << e.log_prefactor
                      << e.probability << e.probability_se << e.value << e.value_se << e.exact;
                    w.end_row();
                }
        });
    } else {
        json reports = json::array();
        for (const auto& r : reps) reports.push_back(r.to_json());
        emit_json(ctx, {{"design", design.to_json()}, {"reports", reports}});
    }
    ctx.summary = s;
}

void task_detect(Context& ctx)
{
    const auto& cfg = ctx.cfg;
    const auto ch = build_channel(cfg, "adder");
    const auto px = build_px(cfg, ch);
    const DensityTables tab(ch, px);
    const std::size_t n0 = cfg.n0.value_or(200);
    const auto kind = parse_test_kind(cfg.test);

    std::vector<double> null(tab.output(0).begin(), tab.output(0).end());
    std::vector<std::vector<double>> alts;
    for (unsigned k = 1; k <= ch.max_users(); ++k) alts.emplace_back(tab.output(k).begin(), tab.output(k).end());

    TestSpec test;
    if (kind == TestKind::llr) {
        test.kind = kind;
        test.null = null;
        test.alternatives = alts;
        test.tau = llr_thresholds(null, alts, n0, cfg.eps0, cfg.mc_trials, cfg.seed);
    } else {
        test = make_test(kind, null, n0, cfg.eps0, ch.output_size());
        if (cfg.gamma0) test.gamma0 = *cfg.gamma0;
    }
    const auto est = estimate_test_errors(ch, px, test, n0, cfg.trials, cfg.seed);

    json doc = est.to_json();
    doc["thresholds"] = test.to_json();
    doc["eps0"] = cfg.eps0;
    std::vector<double> D, delta;
    for (const auto& a : alts) {
        D.push_back(divergence(null, a));
        delta.push_back(ks_distance(a, null));
    }
    doc["divergence"] = json_numbers(D);
    doc["ks_distance"] = json_numbers(delta);
    try {
        const auto mm = minimax_quantile(null, alts, cfg.eps0, cfg.mc_trials, cfg.seed);
        doc["D_min"] = json_number(mm.D_min);
        doc["minimax"] = mm.to_json();
        doc["b"] = mm.b ? json_number(*mm.b) : json(nullptr);
        if (mm.b && !cfg.n1.empty()) doc["n0_expansion"] = n0_expansion(mm.D_min, *mm.b, cfg.n1[0]);
    } catch (const InvalidArgument& e) {
        doc["minimax_error"] = e.what();
    }
    emit_json(ctx, doc);
    std::string s = "detect: " + cfg.test + " n0=" + std::to_string(n0) + " alpha=" + format_number(est.alpha);
    for (std::size_t k = 0; k < est.beta.size(); ++k)
        s += " beta" + std::to_string(k + 1) + "=" + format_number(est.beta[k]);
    ctx.summary = s;
}

void task_simulate(Context& ctx)
{
    const auto ch = build_channel(ctx.cfg, "adder");
    const auto px = build_px(ctx.cfg, ch);
    const auto st = statistics(ch, px);
    const auto design = build_design(ctx.cfg, st);
    SimulationOptions opt;
    opt.freeze_codebook = ctx.cfg.freeze_codebook;
    std::vector<SimulationResult> res;
    std::string s = "simulate:";
    for (unsigned k : k_list(ctx.cfg, st.K, 0)) {
        res.push_back(estimate_error_rates(ch, px, design, k, ctx.cfg.trials, ctx.cfg.seed, opt));
        s += " eps" + std::to_string(k) + "=" + format_number(res.back().eps_hat);
    }
    if (output_format(ctx.cfg, "json") == "csv") {
        std::vector<std::string> head{"k", "trials", "eps_hat", "se", "wilson_lo", "wilson_hi", "mean_feedback_bits"};
        for (std::size_t c = 1; c < kCategoryCount; ++c) head.push_back(to_string(static_cast<ErrorCategory>(c)));
        emit(ctx, [&](std::ostream& os) {
            CsvWriter w(os, head, "eps probability, feedback bits per epoch, categories are epoch counts");
            for (const auto& r : res) {
                w << r.k << r.trials << r.eps_hat << r.se << r.wilson_lo << r.wilson_hi << r.mean_feedback_bits;
                for (std::size_t c = 1; c < kCategoryCount; ++c) w << r.counts[c];
                w.end_row();
            }
        });
    } else {
        json results = json::array();
        for (const auto& r : res) results.push_back(r.to_json());
        emit_json(ctx, {{"design", design.to_json()}, {"results", results}, {"freeze_codebook", opt.freeze_codebook}});
    }
    ctx.summary = s;
}

}  // namespace

json verify(const ExperimentConfig& cfg)
{
    const auto ch = build_channel(cfg, "adder");
    std::vector<InputDistribution> laws;
    std::vector<double> ps;
    if (!cfg.p_grid.empty()) {
        for (double p : cfg.p_grid) {
            laws.push_back(InputDistribution::bernoulli(p));
            ps.push_back(p);
        }
    } else {
        laws.push_back(build_px(cfg, ch));
        ps.push_back(cfg.p.value_or(std::nan("")));
    }

    json results = json::array();
    bool all = true;
    for (std::size_t i = 0; i < laws.size(); ++i) {
        const auto& px = laws[i];
        const DensityTables tab(ch, px);
        const auto st = statistics(tab);
        const auto as = check_assumptions(ch, px);
        const auto lem = verify_orderings(st);
        json checks;
        checks["friendliness"] = as.friendliness;
        checks["interference"] = as.interference;
        checks["output_separation"] = as.output_separation;
        checks["positive_dispersion"] = as.positive_dispersion;
        checks["lemma1"] = lem.lemma_pass(1);
        checks["lemma2"] = lem.lemma_pass(2);
        checks["lemma3"] = lem.lemma_pass(3);
        checks["lemma4"] = lem.lemma_pass(4);

        // Output marginals directly and through silent users of the K-user channel.
        bool marg = true, chain = true, disp = true;
        const unsigned K = ch.max_users();
        std::vector<unsigned> c(ch.input_size());
        for (unsigned k = 0; k <= K; ++k) {
            std::vector<double> q(ch.output_size(), 0.0);
            for (std::size_t r = 0; r < ch.space(k).count(); ++r) {
                const auto cs = ch.space(k).counts(r);
                std::copy(cs.begin(), cs.end(), c.begin());
                c[0] += K - k;
                const auto row = ch.row(K, ch.space(K).rank_of_counts(c));
                for (std::size_t y = 0; y < q.size(); ++y) q[y] += tab.weight(k, r) * row[y];
            }
            for (std::size_t y = 0; y < q.size(); ++y)
                if (ch.in_output(k, y)) marg = marg && std::abs(q[y] - tab.output(k)[y]) <= kKernelTol;
        }
        for (unsigned k = 1; k <= K; ++k) {
            double sum = 0.0;
            for (unsigned j = 1; j <= k; ++j) sum += st.chain[k][j];
            chain = chain && std::abs(sum - st.I[k]) <= 1e-10;
            const auto pmf = sum_rate_density(tab, k);
            double m2 = 0.0;
            for (std::size_t a = 0; a < pmf.values.size(); ++a) m2 += pmf.probs[a] * pmf.values[a] * pmf.values[a];
            disp = disp && std::abs((m2 - st.I[k] * st.I[k]) - st.V[k]) <= 1e-9;
        }
        checks["marginals_two_ways"] = marg;
        checks["chain_rule"] = chain;
        checks["dispersion_two_ways"] = disp;

        // Message size / blocklength round trip at k = 1.
        bool trip = true;
        const double I1 = nats_to_bits(st.I[1]), V1 = nats_to_bits(nats_to_bits(st.V[1]));
        for (std::size_t n1 : {100u, 1000u}) {
            try {
                const double lm = solve_message_size(I1, V1, n1, 1e-3);
                const std::size_t back = solve_blocklength(I1, V1, 1, lm, 1e-3);
                trip = trip && (back == n1 || back == n1 + 1);
            } catch (const Infeasible&) {
            }
        }
        checks["round_trip"] = trip;

        bool ok = true;
        for (const auto& [_, v] : checks.items()) ok = ok && v.get<bool>();
        all = all && ok;
        json entry{{"checks", checks}, {"pass", ok}, {"assumptions", as.to_json()}, {"lemmas", lem.to_json()}};
        if (!std::isnan(ps[i])) entry["p"] = ps[i];
        results.push_back(entry);
    }
    return {{"results", results}, {"all_pass", all}};
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err)
{
    Context ctx{cfg, out, err, {}};
    try {
        cfg.validate();
        if (cfg.threads > 0) set_max_threads(cfg.threads);
        int status = kExitOk;
        if (cfg.task == "stats") task_stats(ctx);
        else if (cfg.task == "adder-stats") task_adder_stats(ctx);
        else if (cfg.task == "blocklengths") task_blocklengths(ctx);
        else if (cfg.task == "rate-region") task_rate_region(ctx);
        else if (cfg.task == "rate-curve") task_rate_curve(ctx);
        else if (cfg.task == "bound") task_bound(ctx);
        else if (cfg.task == "detect") task_detect(ctx);
        else if (cfg.task == "simulate") task_simulate(ctx);
        else if (cfg.task == "verify") {
            const auto doc = verify(cfg);
            emit_json(ctx, doc);
            const bool pass = doc["all_pass"].get<bool>();
            status = pass ? kExitOk : kExitVerifyFailed;
            ctx.summary = std::string("verify: ") + (pass ? "all checks pass" : "FAILED");
        }
        (cfg.out.empty() ? err : out) << ctx.summary << '\n';
        return status;
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const InvalidArgument& e) {
        err << "invalid input: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const TableOverflow& e) {
        err << "table overflow: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const BudgetExceeded& e) {
        err << "budget exceeded: " << e.what() << '\n';
        return kExitInvalid;
    }
}

}  // namespace raclab
