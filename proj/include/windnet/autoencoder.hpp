#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "checkpoint.hpp"
#include "loss.hpp"
#include "optimizer.hpp"
#include "sequential.hpp"
#include "text_io.hpp"
#include "windgen.hpp"

/// Convolutional autoencoder over (Re, Im) channel pairs.
namespace windnet::ae {

class DivergenceError : public Error {
public:
    using Error::Error;
};

/// Encoder: two blocks of same-padded Conv1D + ReLU + MaxPool1D.
/// Decoder: Flatten, Dense(features, hidden), Dropout, ReLU, Dense(hidden, 2L).
struct AeArchitecture {
    std::size_t sites = 128;
    std::size_t conv1_filters = 4;
    std::size_t conv2_filters = 4;
    std::size_t kernel_size = 8;
    std::size_t pool1 = 2;
    std::size_t pool2 = 4;
    std::size_t hidden = 128;
    double dropout = 0.5;

    std::size_t feature_sites() const noexcept { return sites / (pool1 * pool2); }
    std::size_t feature_dim() const noexcept { return conv2_filters * feature_sites(); }

    void validate() const
    {
        if (sites < 2 || conv1_filters < 1 || conv2_filters < 1 || kernel_size < 1 || hidden < 1 || pool1 < 1
            || pool2 < 1) {
            throw Error("AeArchitecture: all sizes must be positive (sites >= 2)");
        }
        if (sites % (pool1 * pool2) != 0) {
            throw Error("AeArchitecture: sites " + std::to_string(sites) + " not divisible by pool1 * pool2 = "
                        + std::to_string(pool1 * pool2));
        }
        nn::validate(nn::DropoutSpec{dropout});
    }

    std::vector<nn::LayerSpec> encoder_specs() const
    {
        return {
            nn::Conv1DSpec{2, conv1_filters, kernel_size},
            nn::ReluSpec{},
            nn::MaxPool1DSpec{pool1, pool1},
            nn::Conv1DSpec{conv1_filters, conv2_filters, kernel_size},
            nn::ReluSpec{},
            nn::MaxPool1DSpec{pool2, pool2},
        };
    }

    std::vector<nn::LayerSpec> decoder_specs() const
    {
        return {
            nn::FlattenSpec{},
            nn::DenseSpec{feature_dim(), hidden},
            nn::DropoutSpec{dropout},
            nn::ReluSpec{},
            nn::DenseSpec{hidden, 2 * sites},
        };
    }

    friend bool operator==(const AeArchitecture&, const AeArchitecture&) = default;
};

class Autoencoder {
public:
    explicit Autoencoder(AeArchitecture arch = {})
        : arch_((arch.validate(), arch)), encoder_(arch_.encoder_specs()), decoder_(arch_.decoder_specs())
    {}

    const AeArchitecture& architecture() const noexcept { return arch_; }
    nn::Sequential& encoder() noexcept { return encoder_; }
    nn::Sequential& decoder() noexcept { return decoder_; }

    void init_parameters(Rng& rng)
    {
        encoder_.init_parameters(rng);
        decoder_.init_parameters(rng);
    }

    std::vector<nn::ParamRef> parameters()
    {
        auto refs = encoder_.parameters("encoder.");
        auto dec = decoder_.parameters("decoder.");
        refs.insert(refs.end(), dec.begin(), dec.end());
        return refs;
    }

    void zero_grad()
    {
        encoder_.zero_grad();
        decoder_.zero_grad();
    }

    /// Input [2 x L] to feature map [conv2_filters x L / (pool1 * pool2)].
    Tensor encode(const Tensor& input, const nn::ForwardContext& ctx = {})
    {
        if (input.shape() != Shape{2, arch_.sites}) {
            throw ShapeError("autoencoder input: expected shape " + shape_string({2, arch_.sites}) + ", got "
                             + shape_string(input.shape()));
        }
        return encoder_.forward(input, ctx);
    }

    /// Input [2 x L] to flat reconstruction of 2L values.
    Tensor forward(const Tensor& input, const nn::ForwardContext& ctx = {})
    {
        return decoder_.forward(encode(input, ctx), ctx);
    }

    /// Back-propagates d(loss)/d(output) and accumulates parameter gradients.
    Tensor backward(const Tensor& grad_output)
    {
        return encoder_.backward(decoder_.backward(grad_output));
    }

    void freeze_dropout_masks(bool frozen) { decoder_.freeze_dropout_masks(frozen); }

    std::vector<std::size_t> branch_signature() const
    {
        auto sig = encoder_.branch_signature();
        const auto dec = decoder_.branch_signature();
        sig.insert(sig.end(), dec.begin(), dec.end());
        return sig;
    }

private:
    AeArchitecture arch_;
    nn::Sequential encoder_;
    nn::Sequential decoder_;
};

/// Channel 0 holds Re(phi), channel 1 Im(phi).
inline Tensor input_tensor(const windgen::WindingSample& s)
{
    if (s.re.size() != s.im.size()) {
        throw ShapeError("sample '" + s.id + "' has mismatched re/im lengths");
    }
    std::vector<double> values;
    values.reserve(2 * s.re.size());
    values.insert(values.end(), s.re.begin(), s.re.end());
    values.insert(values.end(), s.im.begin(), s.im.end());
    return Tensor({2, s.re.size()}, std::move(values));
}

inline void require_sites(const AeArchitecture& arch, const windgen::WindingSample& s)
{
    if (s.sites() != arch.sites) {
        throw ShapeError("sample '" + s.id + "' has " + std::to_string(s.sites()) + " sites, model expects "
                         + std::to_string(arch.sites));
    }
}

struct AeTrainConfig {
    double learning_rate = 1e-7;
    std::size_t batch_size = 10;
    std::size_t epochs = 0;
    /// Evaluate and log every this many epochs (the last epoch is always logged).
    std::size_t eval_every = 1;
    std::uint64_t seed = 0;
    double momentum = 0.0;

    void validate() const
    {
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw Error("ae: learning rate must be positive");
        }
        if (batch_size < 1 || eval_every < 1) {
            throw Error("ae: batch_size and eval_every must be >= 1");
        }
        if (!(momentum >= 0.0 && momentum < 1.0)) {
            throw Error("ae: momentum must lie in [0, 1)");
        }
    }
};

struct TrainingMeta {
    std::uint64_t seed = 0;
    double learning_rate = 0.0;
    double momentum = 0.0;
    std::size_t batch_size = 0;
    std::size_t epochs_completed = 0;
    std::string init = "uniform(-sqrt(1/fan_in), sqrt(1/fan_in)), zero bias";

    friend bool operator==(const TrainingMeta&, const TrainingMeta&) = default;
};

struct AeCheckpoint {
    Autoencoder model;
    TrainingMeta meta;
};

struct TrainLogRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double test_loss = 0.0;
    double wall_time = 0.0;
};

struct AeTrainResult {
    AeCheckpoint final_checkpoint;
    AeCheckpoint best_checkpoint;
    std::size_t best_epoch = 0;
    std::vector<TrainLogRecord> log;
};

/// Eval-mode reconstruction loss of one sample; the single path used both by
/// training-time evaluation and by callers.
inline double reconstruction_loss(Autoencoder& model, const Tensor& input)
{
    const Tensor out = model.forward(input, {nn::Mode::eval, nullptr});
    return nn::mse_loss(out, input.reshaped({input.size()})).value;
}

/// Mean eval-mode loss, accumulated in sample order.
inline double mean_loss(Autoencoder& model, const std::vector<Tensor>& inputs)
{
    double total = 0.0;
    for (const auto& x : inputs) {
        total += reconstruction_loss(model, x);
    }
    return inputs.empty() ? 0.0 : total / static_cast<double>(inputs.size());
}

inline Autoencoder initial_model(const AeArchitecture& arch, std::uint64_t seed)
{
    Autoencoder model(arch);
    Rng init_rng(derive_seed(seed, {0}));
    model.init_parameters(init_rng);
    return model;
}

/// Mini-batch gradient descent on the reconstruction loss. Each batch gradient
/// is the mean over its samples. Dropout is active only in the training
/// forward passes. When epochs > 0 the log starts with an epoch-0 record
/// describing the initial parameters.
inline AeTrainResult train(const std::vector<windgen::WindingSample>& train_set,
                           const std::vector<windgen::WindingSample>& test_set, const AeArchitecture& arch,
                           const AeTrainConfig& config, std::ostream* progress = nullptr)
{
    arch.validate();
    config.validate();
    if (train_set.empty()) {
        throw Error("ae::train: training set is empty");
    }
    if (test_set.empty()) {
        throw Error("ae::train: test set is empty");
    }

    std::vector<Tensor> train_inputs;
    std::vector<Tensor> test_inputs;
    train_inputs.reserve(train_set.size());
    test_inputs.reserve(test_set.size());
    for (const auto& s : train_set) {
        require_sites(arch, s);
        train_inputs.push_back(input_tensor(s));
    }
    for (const auto& s : test_set) {
        require_sites(arch, s);
        test_inputs.push_back(input_tensor(s));
    }

    Autoencoder model = initial_model(arch, config.seed);
    Rng shuffle_rng(derive_seed(config.seed, {1}));
    Rng dropout_rng(derive_seed(config.seed, {2}));
    nn::Sgd optimizer(config.learning_rate, config.momentum);
    auto params = model.parameters();

    TrainingMeta meta{config.seed, config.learning_rate, config.momentum, config.batch_size, 0};
    AeTrainResult result{{model, meta}, {model, meta}, 0, {}};
    if (config.epochs == 0) {
        return result;
    }

    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    };

    double best_loss = mean_loss(model, test_inputs);
    result.log.push_back({0, mean_loss(model, train_inputs), best_loss, elapsed()});

    std::vector<std::size_t> order(train_inputs.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    const nn::ForwardContext train_ctx{nn::Mode::train, &dropout_rng};

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        std::size_t step = 0;
        for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size, ++step) {
            const std::size_t end = std::min(order.size(), begin + config.batch_size);
            double batch_loss = 0.0;
            for (std::size_t b = begin; b < end; ++b) {
                const Tensor& x = train_inputs[order[b]];
                const Tensor out = model.forward(x, train_ctx);
                const auto loss = nn::mse_loss(out, x.reshaped({x.size()}));
                batch_loss += loss.value;
                model.backward(loss.grad);
            }
            if (!std::isfinite(batch_loss)) {
                throw DivergenceError("ae::train diverged: non-finite loss at epoch " + std::to_string(epoch)
                                      + ", step " + std::to_string(step));
            }
            nn::scale_gradients(params, 1.0 / static_cast<double>(end - begin));
            optimizer.step(params);
        }

        if (epoch % config.eval_every == 0 || epoch == config.epochs) {
            const double train_loss = mean_loss(model, train_inputs);
            const double test_loss = mean_loss(model, test_inputs);
            if (!std::isfinite(train_loss) || !std::isfinite(test_loss)) {
                throw DivergenceError("ae::train diverged: non-finite evaluation loss at epoch "
                                      + std::to_string(epoch));
            }
            result.log.push_back({epoch, train_loss, test_loss, elapsed()});
            if (progress != nullptr) {
                *progress << "epoch " << epoch << " train_loss " << train_loss << " test_loss " << test_loss
                          << '\n';
            }
            if (test_loss < best_loss) {
                best_loss = test_loss;
                result.best_epoch = epoch;
                result.best_checkpoint = {model, meta};
                result.best_checkpoint.meta.epochs_completed = epoch;
            }
        }
    }
    result.final_checkpoint = {model, meta};
    result.final_checkpoint.meta.epochs_completed = config.epochs;
    model.zero_grad();
    return result;
}

/// Eval-mode forward pass; flat [2L] output laid out as Re then Im.
inline Tensor reconstruct(AeCheckpoint& checkpoint, const windgen::WindingSample& sample)
{
    require_sites(checkpoint.model.architecture(), sample);
    return checkpoint.model.forward(input_tensor(sample), {nn::Mode::eval, nullptr});
}

inline double reconstruction_loss(AeCheckpoint& checkpoint, const windgen::WindingSample& sample)
{
    require_sites(checkpoint.model.architecture(), sample);
    return reconstruction_loss(checkpoint.model, input_tensor(sample));
}

/// Deepest-layer encoder activations of one sample, filter-major.
struct FeatureMap {
    std::string sample_id;
    windgen::WindingPattern pattern;
    int label_nw = 0;
    std::size_t filters = 0;
    std::size_t sites = 0;
    std::vector<double> values;

    double at(std::size_t filter, std::size_t site) const { return values[filter * sites + site]; }
};

inline std::vector<FeatureMap> extract_features(AeCheckpoint& checkpoint,
                                                const std::vector<windgen::WindingSample>& samples)
{
    auto& model = checkpoint.model;
    const auto& arch = model.architecture();
    std::vector<FeatureMap> maps;
    maps.reserve(samples.size());
    for (const auto& s : samples) {
        require_sites(arch, s);
        const Tensor f = model.encode(input_tensor(s), {nn::Mode::eval, nullptr});
        maps.push_back({s.id, s.pattern, s.label_nw, f.dim(0), f.dim(1), {f.values().begin(), f.values().end()}});
    }
    return maps;
}

struct PatternMean {
    windgen::WindingPattern pattern;
    std::size_t count = 0;
    FeatureMap mean;
};

/// Arithmetic mean of feature maps grouped by pattern, one entry per expected
/// pattern in the given order.
inline std::vector<PatternMean> average_by_pattern(const std::vector<FeatureMap>& maps,
                                                   const std::vector<windgen::WindingPattern>& expected)
{
    std::map<windgen::WindingPattern, std::size_t> slot;
    std::vector<PatternMean> out;
    out.reserve(expected.size());
    for (const auto& p : expected) {
        slot.emplace(p, out.size());
        out.push_back({p, 0, {}});
    }
    for (const auto& m : maps) {
        const auto it = slot.find(m.pattern);
        if (it == slot.end()) {
            continue;
        }
        auto& group = out[it->second];
        if (group.count == 0) {
            group.mean = {m.pattern.to_string(), m.pattern, m.label_nw, m.filters, m.sites,
                          std::vector<double>(m.values.size(), 0.0)};
        } else if (m.values.size() != group.mean.values.size()) {
            throw ShapeError("feature maps of pattern " + m.pattern.to_string() + " differ in size");
        }
        for (std::size_t i = 0; i < m.values.size(); ++i) {
            group.mean.values[i] += m.values[i];
        }
        ++group.count;
    }
    for (auto& group : out) {
        if (group.count == 0) {
            throw Error("no samples for pattern " + group.pattern.to_string());
        }
        for (double& v : group.mean.values) {
            v /= static_cast<double>(group.count);
        }
    }
    return out;
}

inline std::vector<PatternMean> pattern_averaged_features(AeCheckpoint& checkpoint,
                                                          const std::vector<windgen::WindingSample>& test_set,
                                                          const std::vector<windgen::WindingPattern>& patterns)
{
    return average_by_pattern(extract_features(checkpoint, test_set), patterns);
}

/// Columns pattern, filter, site, mean_value; filter and site are 1-based.
inline void write_pattern_means_csv(std::ostream& out, const std::vector<PatternMean>& means)
{
    out << "pattern,filter,site,mean_value\n";
    for (const auto& g : means) {
        for (std::size_t f = 0; f < g.mean.filters; ++f) {
            for (std::size_t i = 0; i < g.mean.sites; ++i) {
                out << '"' << g.pattern.to_string() << "\"," << f + 1 << ',' << i + 1 << ','
                    << format_real(g.mean.at(f, i)) << '\n';
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Serialization

inline std::string serialize(AeCheckpoint& ckpt)
{
    const auto& a = ckpt.model.architecture();
    auto doc = checkpoint_header("autoencoder");
    ordered_json arch;
    arch["sites"] = a.sites;
    arch["conv1_filters"] = a.conv1_filters;
    arch["conv2_filters"] = a.conv2_filters;
    arch["kernel_size"] = a.kernel_size;
    arch["padding"] = "same_zero";
    arch["pool1"] = {{"window", a.pool1}, {"stride", a.pool1}};
    arch["pool2"] = {{"window", a.pool2}, {"stride", a.pool2}};
    arch["hidden"] = a.hidden;
    arch["dropout"] = a.dropout;
    doc["architecture"] = std::move(arch);
    ordered_json meta;
    meta["seed"] = ckpt.meta.seed;
    meta["learning_rate"] = ckpt.meta.learning_rate;
    meta["momentum"] = ckpt.meta.momentum;
    meta["batch_size"] = ckpt.meta.batch_size;
    meta["epochs_completed"] = ckpt.meta.epochs_completed;
    meta["init"] = ckpt.meta.init;
    doc["metadata"] = std::move(meta);
    doc["parameters"] = encode_parameters(ckpt.model.parameters());
    return dump_checkpoint(doc);
}

inline AeCheckpoint deserialize(const std::string& text)
{
    const auto doc = parse_checkpoint(text);
    check_checkpoint_header(doc, "autoencoder");
    try {
        const auto& j = doc.at("architecture");
        AeArchitecture a;
        a.sites = j.at("sites").get<std::size_t>();
        a.conv1_filters = j.at("conv1_filters").get<std::size_t>();
        a.conv2_filters = j.at("conv2_filters").get<std::size_t>();
        a.kernel_size = j.at("kernel_size").get<std::size_t>();
        a.pool1 = j.at("pool1").at("window").get<std::size_t>();
        a.pool2 = j.at("pool2").at("window").get<std::size_t>();
        a.hidden = j.at("hidden").get<std::size_t>();
        a.dropout = j.at("dropout").get<double>();
        if (j.at("pool1").at("stride").get<std::size_t>() != a.pool1
            || j.at("pool2").at("stride").get<std::size_t>() != a.pool2) {
            throw Error("only non-overlapping pooling is supported");
        }
        const auto& m = doc.at("metadata");
        TrainingMeta meta;
        meta.seed = m.at("seed").get<std::uint64_t>();
        meta.learning_rate = m.at("learning_rate").get<double>();
        meta.momentum = m.at("momentum").get<double>();
        meta.batch_size = m.at("batch_size").get<std::size_t>();
        meta.epochs_completed = m.at("epochs_completed").get<std::size_t>();
        meta.init = m.at("init").get<std::string>();
        AeCheckpoint ckpt{Autoencoder(a), meta};
        decode_parameters(doc.at("parameters"), ckpt.model.parameters());
        return ckpt;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed autoencoder checkpoint: ") + e.what());
    }
}

inline void save(const std::filesystem::path& path, AeCheckpoint& ckpt)
{
    write_text_file(path, serialize(ckpt));
}

inline AeCheckpoint load(const std::filesystem::path& path)
{
    return deserialize(read_text_file(path));
}

// ---------------------------------------------------------------------------
// Training log: one JSON object per line. wall_time is optional so that logs
// can be byte-reproducible.

inline void write_log(std::ostream& out, const std::vector<TrainLogRecord>& log, bool include_wall_time)
{
    for (const auto& r : log) {
        out << "{\"epoch\":" << r.epoch << ",\"train_loss\":" << format_real(r.train_loss)
            << ",\"test_loss\":" << format_real(r.test_loss);
        if (include_wall_time) {
            out << ",\"wall_time\":" << format_real(r.wall_time);
        }
        out << "}\n";
    }
}

inline std::vector<TrainLogRecord> read_log(std::istream& in)
{
    std::vector<TrainLogRecord> log;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            TrainLogRecord r;
            r.epoch = j.at("epoch").get<std::size_t>();
            r.train_loss = j.at("train_loss").get<double>();
            r.test_loss = j.at("test_loss").get<double>();
            r.wall_time = j.value("wall_time", 0.0);
            if (!log.empty() && r.epoch <= log.back().epoch) {
                throw Error("epochs not strictly increasing");
            }
            log.push_back(r);
        } catch (const std::exception& e) {
            throw Error("training log line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return log;
}

// ---------------------------------------------------------------------------
// Feature files: one JSON object per line {id, pattern, n_w, filters, sites, values}.

inline void write_features(std::ostream& out, const std::vector<FeatureMap>& maps)
{
    for (const auto& m : maps) {
        std::string line = "{\"id\":";
        append_string(line, m.sample_id);
        line += ",\"pattern\":[";
        for (std::size_t i = 0; i < m.pattern.directions.size(); ++i) {
            if (i != 0) {
                line += ',';
            }
            line += std::to_string(m.pattern.directions[i]);
        }
        line += "],\"n_w\":" + std::to_string(m.label_nw);
        line += ",\"filters\":" + std::to_string(m.filters);
        line += ",\"sites\":" + std::to_string(m.sites);
        line += ",\"values\":";
        append_real_array(line, m.values);
        line += "}\n";
        out << line;
    }
}

inline std::vector<FeatureMap> read_features(std::istream& in)
{
    std::vector<FeatureMap> maps;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            const auto j = nlohmann::json::parse(line);
            FeatureMap m;
            m.sample_id = j.at("id").get<std::string>();
            m.pattern.directions = j.at("pattern").get<std::vector<int>>();
            m.label_nw = j.at("n_w").get<int>();
            m.filters = j.at("filters").get<std::size_t>();
            m.sites = j.at("sites").get<std::size_t>();
            m.values = j.at("values").get<std::vector<double>>();
            if (m.values.size() != m.filters * m.sites) {
                throw Error("values length does not equal filters * sites");
            }
            maps.push_back(std::move(m));
        } catch (const std::exception& e) {
            throw Error("feature file line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return maps;
}

} // namespace windnet::ae
