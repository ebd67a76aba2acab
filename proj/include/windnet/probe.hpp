#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "autoencoder.hpp"
#include "checkpoint.hpp"
#include "loss.hpp"
#include "optimizer.hpp"
#include "sequential.hpp"

/// Supervised classifier from encoder feature maps to winding number.
namespace windnet::probe {

inline constexpr int min_winding = -5;
inline constexpr int max_winding = 5;
inline constexpr std::size_t n_classes = max_winding - min_winding + 1;

/// Class index of a winding number; classes are n_W = -5..+5 in ascending order.
inline std::size_t class_of(int winding)
{
    if (winding < min_winding || winding > max_winding) {
        throw Error("winding number " + std::to_string(winding) + " outside [-5, 5]");
    }
    return static_cast<std::size_t>(winding - min_winding);
}

inline int winding_of(std::size_t cls) noexcept { return static_cast<int>(cls) + min_winding; }

struct ProbeArchitecture {
    std::size_t filters_used = 4;
    std::size_t feature_sites = 16;
    std::size_t hidden = 64;

    std::size_t input_dim() const noexcept { return filters_used * feature_sites; }

    void validate() const
    {
        if (filters_used < 1 || feature_sites < 1 || hidden < 1) {
            throw Error("ProbeArchitecture: sizes must be >= 1");
        }
    }

    std::vector<nn::LayerSpec> specs() const
    {
        return {nn::DenseSpec{input_dim(), hidden}, nn::ReluSpec{}, nn::DenseSpec{hidden, n_classes}};
    }

    friend bool operator==(const ProbeArchitecture&, const ProbeArchitecture&) = default;
};

struct ProbeTrainConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 32;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    double momentum = 0.0;

    void validate() const
    {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw Error("probe: learning rate must be positive");
        }
        if (batch_size < 1) {
            throw Error("probe: batch_size must be >= 1");
        }
        if (!(momentum >= 0.0 && momentum < 1.0)) {
            throw Error("probe: momentum must lie in [0, 1)");
        }
    }
};

struct ProbeCheckpoint {
    ProbeArchitecture arch;
    nn::Sequential net;
    ae::TrainingMeta meta;

    explicit ProbeCheckpoint(ProbeArchitecture a = {})
        : arch((a.validate(), a)), net(a.specs())
    {}

    /// Logits for one feature map.
    Tensor logits(const ae::FeatureMap& map) { return net.forward(input(map), {nn::Mode::eval, nullptr}); }

    Tensor probabilities(const ae::FeatureMap& map) { return nn::softmax(logits(map)); }

    /// First filters_used filters of the map, flattened filter-major.
    Tensor input(const ae::FeatureMap& map) const
    {
        if (map.sites != arch.feature_sites || map.filters < arch.filters_used) {
            throw ShapeError("feature map " + std::to_string(map.filters) + " x " + std::to_string(map.sites)
                             + " does not provide " + std::to_string(arch.filters_used) + " x "
                             + std::to_string(arch.feature_sites));
        }
        return Tensor({arch.input_dim()}, std::vector<double>(map.values.begin(),
                                                              map.values.begin()
                                                                  + static_cast<std::ptrdiff_t>(arch.input_dim())));
    }
};

/// Mini-batch gradient descent on softmax cross-entropy with generator labels.
inline ProbeCheckpoint train_probe(const std::vector<ae::FeatureMap>& maps, const ProbeArchitecture& arch,
                                   const ProbeTrainConfig& config)
{
    arch.validate();
    config.validate();
    ProbeCheckpoint ckpt(arch);
    ckpt.meta = {config.seed, config.learning_rate, config.momentum, config.batch_size, 0};

    std::vector<Tensor> inputs;
    std::vector<std::size_t> labels;
    inputs.reserve(maps.size());
    labels.reserve(maps.size());
    for (const auto& m : maps) {
        labels.push_back(class_of(m.label_nw));
        inputs.push_back(ckpt.input(m));
    }

    Rng init_rng(derive_seed(config.seed, {0}));
    ckpt.net.init_parameters(init_rng);
    if (config.epochs == 0 || maps.empty()) {
        return ckpt;
    }

    Rng shuffle_rng(derive_seed(config.seed, {1}));
    nn::Sgd optimizer(config.learning_rate, config.momentum);
    auto params = ckpt.net.parameters();
    std::vector<std::size_t> order(inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    const nn::ForwardContext ctx{nn::Mode::train, nullptr};
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            double batch_loss = 0.0;
            for (std::size_t b = begin; b < end; ++b) {
                const auto out = ckpt.net.forward(inputs[order[b]], ctx);
                const auto loss = nn::softmax_xent(out, labels[order[b]]);
                batch_loss += loss.loss;
                ckpt.net.backward(loss.grad);
            }
            if (!std::isfinite(batch_loss)) {
                throw ae::DivergenceError("probe training diverged at epoch " + std::to_string(epoch));
            }
            nn::scale_gradients(params, 1.0 / static_cast<double>(end - begin));
            optimizer.step(params);
        }
    }
    ckpt.meta.epochs_completed = config.epochs;
    return ckpt;
}

/// 1 + number of classes ranked above the true class, where a class ranks
/// above it if its probability is strictly greater, or equal with a lower
/// class index.
inline std::size_t rank_of_truth(std::span<const double> probabilities, std::size_t true_class)
{
    if (true_class >= probabilities.size()) {
        throw Error("rank_of_truth: class index out of range");
    }
    const double p_true = probabilities[true_class];
    std::size_t above = 0;
    for (std::size_t j = 0; j < probabilities.size(); ++j) {
        if (probabilities[j] > p_true || (probabilities[j] == p_true && j < true_class)) {
            ++above;
        }
    }
    return above + 1;
}

struct RankHistogram {
    std::array<std::size_t, n_classes> counts{};
    std::size_t total = 0;

    void add(std::size_t rank)
    {
        if (rank < 1 || rank > n_classes) {
            throw Error("rank " + std::to_string(rank) + " outside 1..11");
        }
        ++counts[rank - 1];
        ++total;
    }

    double rate(std::size_t rank) const
    {
        return total == 0 ? 0.0 : static_cast<double>(counts.at(rank - 1)) / static_cast<double>(total);
    }

    friend bool operator==(const RankHistogram&, const RankHistogram&) = default;
};

inline RankHistogram evaluate(ProbeCheckpoint& probe, const std::vector<ae::FeatureMap>& maps)
{
    if (maps.empty()) {
        throw Error("probe::evaluate: empty test set");
    }
    RankHistogram hist;
    for (const auto& m : maps) {
        const Tensor p = probe.probabilities(m);
        hist.add(rank_of_truth(p.values(), class_of(m.label_nw)));
    }
    return hist;
}

struct SweepRow {
    std::size_t filters_used = 0;
    RankHistogram histogram;
};

/// One probe per k = 1..max_filters trained with identical settings apart
/// from the input width.
inline std::vector<SweepRow> filter_sweep(const std::vector<ae::FeatureMap>& train_maps,
                                          const std::vector<ae::FeatureMap>& test_maps, std::size_t hidden,
                                          const ProbeTrainConfig& config, std::size_t max_filters = 4)
{
    if (train_maps.empty() || test_maps.empty()) {
        throw Error("filter_sweep: empty feature set");
    }
    std::vector<SweepRow> rows;
    for (std::size_t k = 1; k <= max_filters; ++k) {
        ProbeArchitecture arch{k, train_maps.front().sites, hidden};
        auto probe = train_probe(train_maps, arch, config);
        rows.push_back({k, evaluate(probe, test_maps)});
    }
    return rows;
}

inline std::vector<SweepRow> filter_sweep(ae::AeCheckpoint& autoencoder,
                                          const std::vector<windgen::WindingSample>& train_set,
                                          const std::vector<windgen::WindingSample>& test_set, std::size_t hidden,
                                          const ProbeTrainConfig& config)
{
    const auto train_maps = ae::extract_features(autoencoder, train_set);
    const auto test_maps = ae::extract_features(autoencoder, test_set);
    return filter_sweep(train_maps, test_maps, hidden, config, autoencoder.model.architecture().conv2_filters);
}

/// Columns filters_used, rank, rate; every rank 1..11 for every row.
inline void write_rank_table_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << "filters_used,rank,rate\n";
    for (const auto& row : rows) {
        for (std::size_t r = 1; r <= n_classes; ++r) {
            out << row.filters_used << ',' << r << ',' << format_real(row.histogram.rate(r)) << '\n';
        }
    }
}

struct RankTableEntry {
    std::size_t filters_used = 0;
    std::size_t rank = 0;
    double rate = 0.0;
};

inline std::vector<RankTableEntry> read_rank_table_csv(std::istream& in)
{
    std::vector<RankTableEntry> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "filters_used,rank,rate") {
                throw Error("rank table: unexpected header '" + line + "'");
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        RankTableEntry e;
        char c1 = 0;
        char c2 = 0;
        std::istringstream fields(line);
        if (!(fields >> e.filters_used >> c1 >> e.rank >> c2 >> e.rate) || c1 != ',' || c2 != ',') {
            throw Error("rank table line " + std::to_string(line_no) + ": malformed");
        }
        rows.push_back(e);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Serialization, framed like the autoencoder checkpoint.

inline std::string serialize(ProbeCheckpoint& ckpt)
{
    auto doc = checkpoint_header("probe");
    ordered_json arch;
    arch["filters_used"] = ckpt.arch.filters_used;
    arch["feature_sites"] = ckpt.arch.feature_sites;
    arch["hidden"] = ckpt.arch.hidden;
    arch["classes"] = n_classes;
    arch["min_winding"] = min_winding;
    doc["architecture"] = std::move(arch);
    ordered_json meta;
    meta["seed"] = ckpt.meta.seed;
    meta["learning_rate"] = ckpt.meta.learning_rate;
    meta["momentum"] = ckpt.meta.momentum;
    meta["batch_size"] = ckpt.meta.batch_size;
    meta["epochs_completed"] = ckpt.meta.epochs_completed;
    meta["init"] = ckpt.meta.init;
    doc["metadata"] = std::move(meta);
    doc["parameters"] = encode_parameters(ckpt.net.parameters());
    return dump_checkpoint(doc);
}

inline ProbeCheckpoint deserialize(const std::string& text)
{
    const auto doc = parse_checkpoint(text);
    check_checkpoint_header(doc, "probe");
    try {
        const auto& j = doc.at("architecture");
        if (j.at("classes").get<std::size_t>() != n_classes || j.at("min_winding").get<int>() != min_winding) {
            throw Error("probe checkpoint class layout differs from -5..+5");
        }
        ProbeArchitecture a{j.at("filters_used").get<std::size_t>(), j.at("feature_sites").get<std::size_t>(),
                            j.at("hidden").get<std::size_t>()};
        ProbeCheckpoint ckpt(a);
        const auto& m = doc.at("metadata");
        ckpt.meta.seed = m.at("seed").get<std::uint64_t>();
        ckpt.meta.learning_rate = m.at("learning_rate").get<double>();
        ckpt.meta.momentum = m.at("momentum").get<double>();
        ckpt.meta.batch_size = m.at("batch_size").get<std::size_t>();
        ckpt.meta.epochs_completed = m.at("epochs_completed").get<std::size_t>();
        ckpt.meta.init = m.at("init").get<std::string>();
        decode_parameters(doc.at("parameters"), ckpt.net.parameters());
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed probe checkpoint: ") + e.what());
    }
}

inline void save(const std::filesystem::path& path, ProbeCheckpoint& ckpt)
{
    write_text_file(path, serialize(ckpt));
}

inline ProbeCheckpoint load(const std::filesystem::path& path)
{
    return deserialize(read_text_file(path));
}

} // namespace windnet::probe
