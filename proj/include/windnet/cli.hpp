#pragma once

#include <algorithm>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "autoencoder.hpp"
#include "json.hpp"
#include "probe.hpp"
#include "topo.hpp"
#include "windgen.hpp"

/// Command-line pipeline: gen, check, train-ae, extract, train-probe, eval,
/// sweep, report.
namespace windnet::cli {

namespace fs = std::filesystem;

/// Usage or configuration problem (exit code 1).
class ConfigError : public Error {
public:
    using Error::Error;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 1;
inline constexpr int exit_runtime = 2;

struct AeSection {
    std::size_t c1 = 4;
    std::size_t hidden = 128;
    double lr = 1e-7;
    double momentum = 0.0;
    std::size_t batch = 10;
    std::size_t epochs = 6000;
    std::size_t eval_every = 1;
    std::uint64_t seed = 0;
    bool log_wall_time = false;
};

struct ProbeSection {
    std::size_t hidden = 64;
    double lr = 1e-2;
    double momentum = 0.0;
    std::size_t batch = 32;
    std::size_t epochs = 200;
    std::size_t filters_used = 4;
    std::uint64_t seed = 0;
};

struct IoSection {
    std::string train_data = "data/train.ndjson";
    std::string test_data = "data/test.ndjson";
    std::string ae_checkpoint = "models/ae_final.json";
    std::string ae_best_checkpoint = "models/ae_best.json";
    std::string ae_log = "models/ae_log.ndjson";
    std::string train_features = "features/train.ndjson";
    std::string test_features = "features/test.ndjson";
    std::string probe_checkpoint = "models/probe.json";
    std::string rank_table = "reports/rank_table.csv";
    std::string reports_dir = "reports";
};

struct RunConfig {
    windgen::GenParams data;
    /// Test-split size per pattern; 0 means data.samples_per_pattern.
    std::size_t test_samples_per_pattern = 0;
    AeSection ae;
    ProbeSection probe;
    IoSection io;

    ae::AeArchitecture ae_architecture() const
    {
        ae::AeArchitecture a;
        a.sites = data.sites;
        a.conv1_filters = ae.c1;
        a.hidden = ae.hidden;
        return a;
    }

    ae::AeTrainConfig ae_train_config() const
    {
        return {ae.lr, ae.batch, ae.epochs, ae.eval_every, ae.seed, ae.momentum};
    }

    probe::ProbeTrainConfig probe_train_config() const
    {
        return {probe.lr, probe.batch, probe.epochs, probe.seed, probe.momentum};
    }
};

// ---------------------------------------------------------------------------
// Key table shared by the config-file reader, the --section.key overrides and
// the effective-config printout.

enum class KeyType { size, u64, real, boolean, text };

struct KeyBinding {
    std::string section;
    std::string name;
    KeyType type;
    std::function<void(RunConfig&, const nlohmann::json&)> set;
    std::function<nlohmann::json(const RunConfig&)> get;

    std::string dotted() const { return section + "." + name; }
};

template <class Field>
KeyBinding bind(std::string section, std::string name, KeyType type, Field field)
{
    return {std::move(section), std::move(name), type,
            [field](RunConfig& c, const nlohmann::json& v) { v.get_to(field(c)); },
            [field](const RunConfig& c) {
                RunConfig copy = c;
                return nlohmann::json(field(copy));
            }};
}

inline const std::vector<KeyBinding>& key_table()
{
    using K = KeyType;
    static const std::vector<KeyBinding> table = {
        bind("data", "L", K::size, [](RunConfig& c) -> auto& { return c.data.sites; }),
        bind("data", "max_segments", K::size, [](RunConfig& c) -> auto& { return c.data.max_segments; }),
        bind("data", "samples_per_pattern", K::size,
             [](RunConfig& c) -> auto& { return c.data.samples_per_pattern; }),
        bind("data", "test_samples_per_pattern", K::size,
             [](RunConfig& c) -> auto& { return c.test_samples_per_pattern; }),
        bind("data", "noise_amplitude", K::real, [](RunConfig& c) -> auto& { return c.data.noise_amplitude; }),
        bind("data", "length_jitter", K::real, [](RunConfig& c) -> auto& { return c.data.length_jitter; }),
        bind("data", "seed", K::u64, [](RunConfig& c) -> auto& { return c.data.seed; }),
        bind("ae", "c1", K::size, [](RunConfig& c) -> auto& { return c.ae.c1; }),
        bind("ae", "hidden", K::size, [](RunConfig& c) -> auto& { return c.ae.hidden; }),
        bind("ae", "lr", K::real, [](RunConfig& c) -> auto& { return c.ae.lr; }),
        bind("ae", "momentum", K::real, [](RunConfig& c) -> auto& { return c.ae.momentum; }),
        bind("ae", "batch", K::size, [](RunConfig& c) -> auto& { return c.ae.batch; }),
        bind("ae", "epochs", K::size, [](RunConfig& c) -> auto& { return c.ae.epochs; }),
        bind("ae", "eval_every", K::size, [](RunConfig& c) -> auto& { return c.ae.eval_every; }),
        bind("ae", "seed", K::u64, [](RunConfig& c) -> auto& { return c.ae.seed; }),
        bind("ae", "log_wall_time", K::boolean, [](RunConfig& c) -> auto& { return c.ae.log_wall_time; }),
        bind("probe", "hidden", K::size, [](RunConfig& c) -> auto& { return c.probe.hidden; }),
        bind("probe", "lr", K::real, [](RunConfig& c) -> auto& { return c.probe.lr; }),
        bind("probe", "momentum", K::real, [](RunConfig& c) -> auto& { return c.probe.momentum; }),
        bind("probe", "batch", K::size, [](RunConfig& c) -> auto& { return c.probe.batch; }),
        bind("probe", "epochs", K::size, [](RunConfig& c) -> auto& { return c.probe.epochs; }),
        bind("probe", "filters_used", K::size, [](RunConfig& c) -> auto& { return c.probe.filters_used; }),
        bind("probe", "seed", K::u64, [](RunConfig& c) -> auto& { return c.probe.seed; }),
        bind("io", "train_data", K::text, [](RunConfig& c) -> auto& { return c.io.train_data; }),
        bind("io", "test_data", K::text, [](RunConfig& c) -> auto& { return c.io.test_data; }),
        bind("io", "ae_checkpoint", K::text, [](RunConfig& c) -> auto& { return c.io.ae_checkpoint; }),
        bind("io", "ae_best_checkpoint", K::text, [](RunConfig& c) -> auto& { return c.io.ae_best_checkpoint; }),
        bind("io", "ae_log", K::text, [](RunConfig& c) -> auto& { return c.io.ae_log; }),
        bind("io", "train_features", K::text, [](RunConfig& c) -> auto& { return c.io.train_features; }),
        bind("io", "test_features", K::text, [](RunConfig& c) -> auto& { return c.io.test_features; }),
        bind("io", "probe_checkpoint", K::text, [](RunConfig& c) -> auto& { return c.io.probe_checkpoint; }),
        bind("io", "rank_table", K::text, [](RunConfig& c) -> auto& { return c.io.rank_table; }),
        bind("io", "reports_dir", K::text, [](RunConfig& c) -> auto& { return c.io.reports_dir; }),
    };
    return table;
}

inline const KeyBinding* find_key(const std::string& section, const std::string& name)
{
    for (const auto& k : key_table()) {
        if (k.section == section && k.name == name) {
            return &k;
        }
    }
    return nullptr;
}

inline void check_value_type(const KeyBinding& key, const nlohmann::json& v)
{
    bool ok = false;
    switch (key.type) {
    case KeyType::size:
    case KeyType::u64:
        ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        break;
    case KeyType::real:
        ok = v.is_number();
        break;
    case KeyType::boolean:
        ok = v.is_boolean();
        break;
    case KeyType::text:
        ok = v.is_string();
        break;
    }
    if (!ok) {
        throw ConfigError("config key '" + key.dotted() + "' has a value of the wrong type: " + v.dump());
    }
}

inline void apply_value(RunConfig& config, const KeyBinding& key, const nlohmann::json& v)
{
    check_value_type(key, v);
    if (key.type == KeyType::real) {
        key.set(config, nlohmann::json(v.get<double>()));
    } else {
        key.set(config, v);
    }
}

/// Strict reader: unknown sections or keys are errors.
inline void apply_config_document(RunConfig& config, const nlohmann::json& doc)
{
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object with sections data, ae, probe, io");
    }
    for (const auto& [section, body] : doc.items()) {
        if (section != "data" && section != "ae" && section != "probe" && section != "io") {
            throw ConfigError("unknown config section '" + section + "'");
        }
        if (!body.is_object()) {
            throw ConfigError("config section '" + section + "' must be an object");
        }
        for (const auto& [name, value] : body.items()) {
            const KeyBinding* key = find_key(section, name);
            if (key == nullptr) {
                throw ConfigError("unknown config key '" + section + "." + name + "'");
            }
            apply_value(config, *key, value);
        }
    }
}

inline RunConfig load_config_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file '" + path.string() + "'");
    }
    RunConfig config;
    try {
        apply_config_document(config, nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
    return config;
}

/// Applies one "section.key=value" override. Values are parsed as JSON,
/// except for text keys which take the raw string.
inline void apply_override(RunConfig& config, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    const auto dot = assignment.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
        throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
    }
    const std::string section = assignment.substr(0, dot);
    const std::string name = assignment.substr(dot + 1, eq - dot - 1);
    const std::string text = assignment.substr(eq + 1);
    const KeyBinding* key = find_key(section, name);
    if (key == nullptr) {
        throw ConfigError("unknown config key '" + section + "." + name + "'");
    }
    nlohmann::json value;
    if (key->type == KeyType::text) {
        value = text;
    } else {
        try {
            value = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("cannot parse value '" + text + "' for '" + key->dotted() + "'");
        }
    }
    apply_value(config, *key, value);
}

inline nlohmann::ordered_json config_to_json(const RunConfig& config)
{
    nlohmann::ordered_json doc;
    for (const auto& k : key_table()) {
        doc[k.section][k.name] = k.get(config);
    }
    return doc;
}

/// Range checks for every section; failures are configuration errors.
inline void validate_config(const RunConfig& config)
{
    try {
        config.data.validate();
        config.ae_architecture().validate();
        config.ae_train_config().validate();
        config.probe_train_config().validate();
        probe::ProbeArchitecture{config.probe.filters_used, 1, config.probe.hidden}.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

// ---------------------------------------------------------------------------
// Path checks

inline void require_inputs(const std::vector<std::pair<std::string, std::string>>& inputs)
{
    std::string missing;
    for (const auto& [label, path] : inputs) {
        if (!fs::is_regular_file(path)) {
            missing += "\n  " + label + ": " + path;
        }
    }
    if (!missing.empty()) {
        throw ConfigError("missing input files:" + missing);
    }
}

/// Creates the parent directory of an output file if needed.
inline void prepare_output(const fs::path& path)
{
    const auto parent = path.parent_path();
    if (parent.empty()) {
        return;
    }
    std::error_code ec;
    fs::create_directories(parent, ec);
    if (ec || !fs::is_directory(parent)) {
        throw ConfigError("cannot create output directory '" + parent.string() + "'");
    }
}

inline void prepare_output_dir(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw ConfigError("cannot create output directory '" + dir.string() + "'");
    }
}

template <class Writer>
void write_file(const fs::path& path, Writer&& writer)
{
    auto out = open_for_write(path);
    writer(out);
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

inline std::vector<ae::FeatureMap> load_features(const fs::path& path)
{
    auto in = open_for_read(path);
    return ae::read_features(in);
}

inline std::vector<ae::TrainLogRecord> load_log(const fs::path& path)
{
    auto in = open_for_read(path);
    return ae::read_log(in);
}

// ---------------------------------------------------------------------------
// Commands

struct CheckReport {
    std::size_t samples = 0;
    std::size_t agree = 0;
    double max_residual = 0.0;
    double mean_residual = 0.0;
    std::size_t residual_below_0_1 = 0;

    double agreement() const { return samples == 0 ? 0.0 : static_cast<double>(agree) / samples; }
};

inline CheckReport check_samples(const std::vector<windgen::WindingSample>& samples)
{
    CheckReport r;
    for (const auto& s : samples) {
        const auto w = topo::winding_number(s.re, s.im);
        const double residual = std::abs(w.raw - std::round(w.raw));
        ++r.samples;
        r.agree += w.value == s.label_nw ? 1 : 0;
        r.max_residual = std::max(r.max_residual, residual);
        r.mean_residual += residual;
        r.residual_below_0_1 += residual < 0.1 ? 1 : 0;
    }
    if (r.samples > 0) {
        r.mean_residual /= static_cast<double>(r.samples);
    }
    return r;
}

struct Context {
    RunConfig config;
    std::string out;
    std::ostream& stdout_;
    std::ostream& stderr_;
};

inline void print_config(Context& ctx, const std::string& command)
{
    ctx.stdout_ << "# windnet " << command << " effective config\n" << config_to_json(ctx.config).dump(2) << '\n';
}

inline void cmd_gen(Context& ctx, bool csv)
{
    auto& c = ctx.config;
    fs::path train_path = c.io.train_data;
    fs::path test_path = c.io.test_data;
    if (!ctx.out.empty()) {
        train_path = fs::path(ctx.out) / "train.ndjson";
        test_path = fs::path(ctx.out) / "test.ndjson";
    }
    c.data.validate();
    prepare_output(train_path);
    prepare_output(test_path);
    print_config(ctx, "gen");

    const auto patterns = windgen::enumerate_patterns(c.data.max_segments);
    auto test_params = c.data;
    if (c.test_samples_per_pattern != 0) {
        test_params.samples_per_pattern = c.test_samples_per_pattern;
    }
    const windgen::Dataset data{windgen::generate_split(c.data, windgen::Split::train),
                                windgen::generate_split(test_params, windgen::Split::test)};
    windgen::save_dataset(train_path, data.train);
    windgen::save_dataset(test_path, data.test);
    if (csv) {
        write_file(fs::path(train_path).replace_extension(".csv"),
                   [&](std::ostream& o) { windgen::write_csv(o, data.train); });
        write_file(fs::path(test_path).replace_extension(".csv"),
                   [&](std::ostream& o) { windgen::write_csv(o, data.test); });
    }
    ctx.stdout_ << "patterns: " << patterns.size() << '\n'
                << "train samples: " << data.train.size() << " -> " << train_path.string() << '\n'
                << "test samples: " << data.test.size() << " -> " << test_path.string() << '\n';
}

inline int cmd_check(Context& ctx, const std::string& dataset, double min_agreement)
{
    const std::string path = dataset.empty() ? ctx.config.io.test_data : dataset;
    require_inputs({{"dataset", path}});
    print_config(ctx, "check");
    const auto samples = windgen::load_dataset(path);
    if (samples.empty()) {
        throw Error("dataset '" + path + "' is empty");
    }
    const auto r = check_samples(samples);
    ctx.stdout_ << "samples: " << r.samples << '\n'
                << "agreement: " << r.agree << " / " << r.samples << " = " << format_real(r.agreement()) << '\n'
                << "max residual: " << format_real(r.max_residual) << '\n'
                << "mean residual: " << format_real(r.mean_residual) << '\n'
                << "residual < 0.1: " << r.residual_below_0_1 << " / " << r.samples << '\n';
    if (r.agreement() < min_agreement) {
        ctx.stderr_ << "agreement " << r.agreement() << " below required " << min_agreement << '\n';
        return exit_runtime;
    }
    return exit_ok;
}

inline void cmd_train_ae(Context& ctx)
{
    auto& c = ctx.config;
    fs::path final_path = c.io.ae_checkpoint;
    fs::path best_path = c.io.ae_best_checkpoint;
    fs::path log_path = c.io.ae_log;
    if (!ctx.out.empty()) {
        final_path = fs::path(ctx.out) / "ae_final.json";
        best_path = fs::path(ctx.out) / "ae_best.json";
        log_path = fs::path(ctx.out) / "ae_log.ndjson";
    }
    require_inputs({{"train data", c.io.train_data}, {"test data", c.io.test_data}});
    c.ae_architecture().validate();
    c.ae_train_config().validate();
    prepare_output(final_path);
    prepare_output(best_path);
    prepare_output(log_path);
    print_config(ctx, "train-ae");

    const auto train_set = windgen::load_dataset(c.io.train_data);
    const auto test_set = windgen::load_dataset(c.io.test_data);
    auto result = ae::train(train_set, test_set, c.ae_architecture(), c.ae_train_config(), &ctx.stderr_);
    ae::save(final_path, result.final_checkpoint);
    ae::save(best_path, result.best_checkpoint);
    write_file(log_path, [&](std::ostream& o) { ae::write_log(o, result.log, c.ae.log_wall_time); });
    ctx.stdout_ << "epochs: " << c.ae.epochs << '\n'
                << "best epoch: " << result.best_epoch << '\n'
                << "final checkpoint: " << final_path.string() << '\n'
                << "best checkpoint: " << best_path.string() << '\n'
                << "log: " << log_path.string() << " (" << result.log.size() << " records)\n";
}

inline void cmd_extract(Context& ctx, const std::string& checkpoint, const std::string& dataset)
{
    auto& c = ctx.config;
    const std::string ckpt_path = checkpoint.empty() ? c.io.ae_best_checkpoint : checkpoint;
    std::vector<std::pair<std::string, std::string>> jobs;
    if (!dataset.empty()) {
        if (ctx.out.empty()) {
            throw ConfigError("extract --dataset requires --out");
        }
        jobs.emplace_back(dataset, ctx.out);
    } else {
        jobs.emplace_back(c.io.train_data, c.io.train_features);
        jobs.emplace_back(c.io.test_data, c.io.test_features);
    }
    std::vector<std::pair<std::string, std::string>> inputs{{"autoencoder checkpoint", ckpt_path}};
    for (const auto& [in, out] : jobs) {
        inputs.emplace_back("dataset", in);
        prepare_output(out);
    }
    require_inputs(inputs);
    print_config(ctx, "extract");

    auto ckpt = ae::load(ckpt_path);
    for (const auto& [in, out] : jobs) {
        const auto samples = windgen::load_dataset(in);
        const auto maps = ae::extract_features(ckpt, samples);
        write_file(out, [&](std::ostream& o) { ae::write_features(o, maps); });
        ctx.stdout_ << "feature maps: " << maps.size() << " -> " << out << '\n';
    }
}

inline void cmd_train_probe(Context& ctx, const std::string& features)
{
    auto& c = ctx.config;
    const std::string in = features.empty() ? c.io.train_features : features;
    const std::string out = ctx.out.empty() ? c.io.probe_checkpoint : ctx.out;
    require_inputs({{"training features", in}});
    prepare_output(out);
    c.probe_train_config().validate();
    print_config(ctx, "train-probe");

    const auto maps = load_features(in);
    if (maps.empty()) {
        throw Error("feature file '" + in + "' is empty");
    }
    probe::ProbeArchitecture arch{c.probe.filters_used, maps.front().sites, c.probe.hidden};
    auto ckpt = probe::train_probe(maps, arch, c.probe_train_config());
    probe::save(out, ckpt);
    ctx.stdout_ << "probe (" << arch.filters_used << " filters) trained on " << maps.size()
                << " feature maps -> " << out << '\n';
}

inline void print_rates(std::ostream& out, const std::vector<probe::SweepRow>& rows)
{
    for (const auto& row : rows) {
        out << "filters " << row.filters_used << ":";
        for (std::size_t r = 1; r <= 3; ++r) {
            out << " rank" << r << "=" << format_real(row.histogram.rate(r));
        }
        out << " (n=" << row.histogram.total << ")\n";
    }
}

inline void cmd_eval(Context& ctx, const std::string& probe_path, const std::string& features)
{
    auto& c = ctx.config;
    const std::string ckpt_path = probe_path.empty() ? c.io.probe_checkpoint : probe_path;
    const std::string in = features.empty() ? c.io.test_features : features;
    const std::string out = ctx.out.empty() ? c.io.rank_table : ctx.out;
    require_inputs({{"probe checkpoint", ckpt_path}, {"test features", in}});
    prepare_output(out);
    print_config(ctx, "eval");

    auto ckpt = probe::load(ckpt_path);
    const auto maps = load_features(in);
    const std::vector<probe::SweepRow> rows{{ckpt.arch.filters_used, probe::evaluate(ckpt, maps)}};
    write_file(out, [&](std::ostream& o) { probe::write_rank_table_csv(o, rows); });
    print_rates(ctx.stdout_, rows);
}

inline void cmd_sweep(Context& ctx)
{
    auto& c = ctx.config;
    const std::string out = ctx.out.empty() ? c.io.rank_table : ctx.out;
    require_inputs({{"training features", c.io.train_features}, {"test features", c.io.test_features}});
    prepare_output(out);
    c.probe_train_config().validate();
    print_config(ctx, "sweep");

    const auto train_maps = load_features(c.io.train_features);
    const auto test_maps = load_features(c.io.test_features);
    if (train_maps.empty() || test_maps.empty()) {
        throw Error("sweep: empty feature file");
    }
    const auto rows =
        probe::filter_sweep(train_maps, test_maps, c.probe.hidden, c.probe_train_config(), train_maps.front().filters);
    write_file(out, [&](std::ostream& o) { probe::write_rank_table_csv(o, rows); });
    print_rates(ctx.stdout_, rows);
    ctx.stdout_ << "rank table -> " << out << '\n';
}

/// Writes pattern_means.csv, rank_rates.csv and loss_curve.csv.
inline void cmd_report(Context& ctx)
{
    auto& c = ctx.config;
    const fs::path dir = ctx.out.empty() ? fs::path(c.io.reports_dir) : fs::path(ctx.out);
    require_inputs({{"autoencoder checkpoint", c.io.ae_best_checkpoint},
                    {"test data", c.io.test_data},
                    {"rank table", c.io.rank_table},
                    {"training log", c.io.ae_log}});
    prepare_output_dir(dir);
    print_config(ctx, "report");

    auto ckpt = ae::load(c.io.ae_best_checkpoint);
    const auto test_set = windgen::load_dataset(c.io.test_data);
    const auto means =
        ae::pattern_averaged_features(ckpt, test_set, windgen::enumerate_patterns(c.data.max_segments));
    write_file(dir / "pattern_means.csv", [&](std::ostream& o) { ae::write_pattern_means_csv(o, means); });

    std::vector<probe::RankTableEntry> table;
    {
        auto in = open_for_read(c.io.rank_table);
        table = probe::read_rank_table_csv(in);
    }
    std::map<std::size_t, double> sums;
    for (const auto& e : table) {
        sums[e.filters_used] += e.rate;
    }
    for (const auto& [k, total] : sums) {
        if (std::abs(total - 1.0) > 1e-9) {
            throw Error("rank table rates for " + std::to_string(k) + " filters sum to " + format_real(total));
        }
    }
    write_file(dir / "rank_rates.csv", [&](std::ostream& o) {
        o << "filters_used,rank,rate\n";
        for (const auto& e : table) {
            o << e.filters_used << ',' << e.rank << ',' << format_real(e.rate) << '\n';
        }
    });

    const auto log = load_log(c.io.ae_log);
    write_file(dir / "loss_curve.csv", [&](std::ostream& o) {
        o << "epoch,train_loss,test_loss\n";
        for (const auto& r : log) {
            o << r.epoch << ',' << format_real(r.train_loss) << ',' << format_real(r.test_loss) << '\n';
        }
    });
    ctx.stdout_ << "patterns: " << means.size() << "\nrank rows: " << table.size() << "\nlog records: " << log.size()
                << "\nreports -> " << dir.string() << '\n';
}

// ---------------------------------------------------------------------------

/// Entry point shared by the executable and the tests. args excludes the
/// program name.
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    CLI::App app{"windnet: winding-number autoencoder pipeline"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_path, "output path (file or directory, per command)");
    app.add_option("--set", overrides, "override a config key: section.key=value (repeatable)");
    app.add_option("--seed", seed, "seed for the section the command uses");

    // --data.L=64 style overrides, one option per config key
    std::map<std::string, std::string> direct;
    for (const auto& k : key_table()) {
        app.add_option_function<std::string>(
            "--" + k.dotted(), [&direct, name = k.dotted()](const std::string& v) { direct[name] = v; },
            "override " + k.dotted());
    }

    auto* gen = app.add_subcommand("gen", "generate train/test datasets");
    bool csv = false;
    gen->add_flag("--csv", csv, "also write CSV exports next to the NDJSON files");

    auto* check = app.add_subcommand("check", "compare discrete winding with dataset labels");
    std::string check_dataset;
    double min_agreement = 0.0;
    check->add_option("--dataset", check_dataset, "dataset file (default io.test_data)");
    check->add_option("--min-agreement", min_agreement, "exit 2 if agreement is below this fraction");

    auto* train_ae = app.add_subcommand("train-ae", "train the autoencoder");

    auto* extract = app.add_subcommand("extract", "write encoder feature maps");
    std::string extract_ckpt;
    std::string extract_dataset;
    extract->add_option("--checkpoint", extract_ckpt, "autoencoder checkpoint (default io.ae_best_checkpoint)");
    extract->add_option("--dataset", extract_dataset, "single dataset to process (requires --out)");

    auto* train_probe = app.add_subcommand("train-probe", "train a probe on feature maps");
    std::string probe_features;
    train_probe->add_option("--features", probe_features, "training features (default io.train_features)");

    auto* eval = app.add_subcommand("eval", "rank histogram of a trained probe");
    std::string eval_probe;
    std::string eval_features;
    eval->add_option("--probe", eval_probe, "probe checkpoint (default io.probe_checkpoint)");
    eval->add_option("--features", eval_features, "test features (default io.test_features)");

    auto* sweep = app.add_subcommand("sweep", "train and evaluate probes for 1..4 filters");
    auto* report = app.add_subcommand("report", "emit plot-ready CSVs");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }

    try {
        RunConfig config = config_path.empty() ? RunConfig{} : load_config_file(config_path);
        for (const auto& o : overrides) {
            apply_override(config, o);
        }
        for (const auto& [name, value] : direct) {
            apply_override(config, name + "=" + value);
        }
        if (seed) {
            if (gen->parsed() || check->parsed()) {
                config.data.seed = *seed;
            } else if (train_ae->parsed()) {
                config.ae.seed = *seed;
            } else {
                config.probe.seed = *seed;
            }
        }
        validate_config(config);
        Context ctx{config, out_path, out, err};
        if (gen->parsed()) {
            cmd_gen(ctx, csv);
        } else if (check->parsed()) {
            return cmd_check(ctx, check_dataset, min_agreement);
        } else if (train_ae->parsed()) {
            cmd_train_ae(ctx);
        } else if (extract->parsed()) {
            cmd_extract(ctx, extract_ckpt, extract_dataset);
        } else if (train_probe->parsed()) {
            cmd_train_probe(ctx, probe_features);
        } else if (eval->parsed()) {
            cmd_eval(ctx, eval_probe, eval_features);
        } else if (sweep->parsed()) {
            cmd_sweep(ctx);
        } else if (report->parsed()) {
            cmd_report(ctx);
        }
        return exit_ok;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return exit_runtime;
    }
}

} // namespace windnet::cli
