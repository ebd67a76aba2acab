#include <gtest/gtest.h>

#include <algorithm>
#include <limits>
#include <sstream>

#include <windnet/autoencoder.hpp>

#include "support/gradcheck.hpp"

using namespace windnet;
using namespace windnet::ae;

namespace {

std::vector<windgen::WindingSample> samples(std::size_t per_pattern, std::uint64_t seed, int max_segments = 2,
                                            windgen::Split split = windgen::Split::train)
{
    windgen::GenParams p;
    p.samples_per_pattern = per_pattern;
    p.seed = seed;
    p.max_segments = max_segments;
    return windgen::generate_split(p, split);
}

AeArchitecture small_arch()
{
    AeArchitecture a;
    a.hidden = 16;
    return a;
}

AeTrainConfig quick_config(std::size_t epochs)
{
    AeTrainConfig c;
    c.learning_rate = 0.05;
    c.batch_size = 4;
    c.epochs = epochs;
    c.seed = 9;
    return c;
}

bool outputs_equal(AeCheckpoint& a, AeCheckpoint& b, const std::vector<windgen::WindingSample>& data)
{
    for (const auto& s : data) {
        if (!(reconstruct(a, s) == reconstruct(b, s))) {
            return false;
        }
    }
    return true;
}

} // namespace

TEST(Autoencoder, Shapes)
{
    Autoencoder model = initial_model({}, 1);
    const auto s = samples(1, 1).front();
    const Tensor x = input_tensor(s);
    EXPECT_EQ(x.shape(), (Shape{2, 128}));
    EXPECT_EQ(model.encode(x).shape(), (Shape{4, 16}));
    EXPECT_EQ(model.forward(x).shape(), (Shape{256}));
    EXPECT_EQ(AeArchitecture{}.feature_dim(), 64u);
    EXPECT_THROW(model.encode(Tensor({2, 64})), ShapeError);
}

TEST(Autoencoder, ParameterNamesAndCount)
{
    Autoencoder model(AeArchitecture{});
    const auto params = model.parameters();
    ASSERT_EQ(params.size(), 8u);
    EXPECT_EQ(params[0].name, "encoder.0.weight");
    EXPECT_EQ(params[3].name, "encoder.3.bias");
    EXPECT_EQ(params[4].name, "decoder.1.weight");
    EXPECT_EQ(params[7].name, "decoder.4.bias");
    std::size_t total = 0;
    for (const auto& p : params) {
        total += p.value->size();
    }
    // conv 2->4 k8, conv 4->4 k8, dense 64->128, dense 128->256
    EXPECT_EQ(total, (4 * 2 * 8 + 4) + (4 * 4 * 8 + 4) + (128 * 64 + 128) + (256 * 128 + 256));
}

TEST(Autoencoder, ArchitectureValidation)
{
    AeArchitecture a;
    a.sites = 100;
    EXPECT_THROW(a.validate(), Error);
    a = {};
    a.dropout = 1.0;
    EXPECT_THROW(a.validate(), Error);
}

TEST(Autoencoder, GradientMatchesFiniteDifferences)
{
    const auto report = windnet::testing::check_autoencoder(3, 77, 3);
    EXPECT_TRUE(report.ok()) << report.worst << " max " << report.max_rel_error;
}

TEST(Autoencoder, EvalIsDeterministicDespiteDropout)
{
    Autoencoder model = initial_model({}, 2);
    const Tensor x = input_tensor(samples(1, 2).front());
    EXPECT_EQ(model.forward(x), model.forward(x));
}

TEST(Training, ZeroEpochsReturnsInitialModel)
{
    const auto data = samples(2, 3);
    auto result = train(data, data, small_arch(), quick_config(0));
    EXPECT_TRUE(result.log.empty());
    EXPECT_EQ(result.best_epoch, 0u);
    AeCheckpoint init{initial_model(small_arch(), 9), {}};
    EXPECT_TRUE(outputs_equal(result.final_checkpoint, init, data));
}

TEST(Training, ReducesLossAndLogsEpochs)
{
    const auto train_set = samples(3, 4);
    const auto test_set = samples(2, 4, 2, windgen::Split::test);
    auto config = quick_config(6);
    config.eval_every = 4;
    const auto result = train(train_set, test_set, small_arch(), config);
    ASSERT_EQ(result.log.size(), 3u);
    EXPECT_EQ(result.log[0].epoch, 0u);
    EXPECT_EQ(result.log[1].epoch, 4u);
    EXPECT_EQ(result.log[2].epoch, 6u);
    EXPECT_LT(result.log.back().train_loss, result.log.front().train_loss);
    EXPECT_EQ(result.final_checkpoint.meta.epochs_completed, 6u);
}

TEST(Training, Deterministic)
{
    const auto data = samples(2, 5);
    auto a = train(data, data, small_arch(), quick_config(3));
    auto b = train(data, data, small_arch(), quick_config(3));
    EXPECT_EQ(serialize(a.final_checkpoint), serialize(b.final_checkpoint));
    std::ostringstream la;
    std::ostringstream lb;
    write_log(la, a.log, false);
    write_log(lb, b.log, false);
    EXPECT_EQ(la.str(), lb.str());
    auto other = quick_config(3);
    other.seed = 10;
    auto c = train(data, data, small_arch(), other);
    EXPECT_NE(serialize(a.final_checkpoint), serialize(c.final_checkpoint));
}

TEST(Training, BestCheckpointHasMinimumTestLoss)
{
    const auto train_set = samples(3, 6);
    const auto test_set = samples(2, 6, 2, windgen::Split::test);
    auto result = train(train_set, test_set, small_arch(), quick_config(8));
    const auto best = std::min_element(result.log.begin(), result.log.end(),
                                       [](const auto& a, const auto& b) { return a.test_loss < b.test_loss; });
    EXPECT_EQ(result.best_epoch, best->epoch);
    // Loss recomputed from the saved best checkpoint is the logged value, bit for bit.
    double total = 0.0;
    for (const auto& s : test_set) {
        total += reconstruction_loss(result.best_checkpoint, s);
    }
    EXPECT_EQ(total / static_cast<double>(test_set.size()), best->test_loss);
}

TEST(Training, DivergenceIsReported)
{
    const auto data = samples(2, 7);
    auto config = quick_config(50);
    config.learning_rate = 1e6;
    try {
        train(data, data, small_arch(), config);
        FAIL() << "expected divergence";
    } catch (const DivergenceError& e) {
        EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
    }
}

TEST(Training, InputValidation)
{
    const auto data = samples(1, 8);
    EXPECT_THROW(train({}, data, small_arch(), quick_config(1)), Error);
    EXPECT_THROW(train(data, {}, small_arch(), quick_config(1)), Error);
    auto bad = quick_config(1);
    bad.batch_size = 0;
    EXPECT_THROW(train(data, data, small_arch(), bad), Error);
    auto arch = small_arch();
    arch.sites = 64;
    EXPECT_THROW(train(data, data, arch, quick_config(1)), ShapeError);
}

TEST(Checkpoint, RoundTripIsBitwise)
{
    const auto data = samples(1, 9);
    auto result = train(data, data, small_arch(), quick_config(2));
    const std::string text = serialize(result.final_checkpoint);
    auto back = deserialize(text);
    EXPECT_EQ(serialize(back), text);
    EXPECT_EQ(back.meta, result.final_checkpoint.meta);
    EXPECT_EQ(back.model.architecture(), small_arch());
    EXPECT_TRUE(outputs_equal(back, result.final_checkpoint, data));
}

TEST(Checkpoint, RejectsCorruption)
{
    AeCheckpoint ckpt{initial_model(small_arch(), 1), {}};
    const std::string text = serialize(ckpt);
    EXPECT_THROW(deserialize(text.substr(0, text.size() / 2)), Error);
    std::string wrong_kind = text;
    wrong_kind.replace(wrong_kind.find("\"autoencoder\""), 13, "\"probe\"");
    EXPECT_THROW(deserialize(wrong_kind), Error);
}

TEST(Features, NonnegativeAndShaped)
{
    const auto data = samples(2, 10);
    AeCheckpoint ckpt{initial_model({}, 3), {}};
    const auto maps = extract_features(ckpt, data);
    ASSERT_EQ(maps.size(), data.size());
    for (const auto& m : maps) {
        EXPECT_EQ(m.filters, 4u);
        EXPECT_EQ(m.sites, 16u);
        for (double v : m.values) {
            EXPECT_GE(v, 0.0);
        }
    }
}

TEST(Features, ZeroWeightsGiveZeroMaps)
{
    AeCheckpoint ckpt{Autoencoder(AeArchitecture{}), {}};
    for (const auto& m : extract_features(ckpt, samples(1, 11))) {
        for (double v : m.values) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(Features, FileRoundTrip)
{
    AeCheckpoint ckpt{initial_model({}, 4), {}};
    const auto maps = extract_features(ckpt, samples(1, 12));
    std::ostringstream out;
    write_features(out, maps);
    std::istringstream in(out.str());
    const auto back = read_features(in);
    ASSERT_EQ(back.size(), maps.size());
    for (std::size_t i = 0; i < maps.size(); ++i) {
        EXPECT_EQ(back[i].values, maps[i].values);
        EXPECT_EQ(back[i].pattern, maps[i].pattern);
        EXPECT_EQ(back[i].sample_id, maps[i].sample_id);
    }
}

TEST(PatternMeans, IdenticalSamplesGiveThatSample)
{
    FeatureMap m{"a", windgen::WindingPattern{{1}}, 1, 1, 3, {1.0, 2.0, 3.0}};
    auto n = m;
    n.sample_id = "b";
    const auto means = average_by_pattern({m, n}, {m.pattern});
    ASSERT_EQ(means.size(), 1u);
    EXPECT_EQ(means[0].count, 2u);
    EXPECT_EQ(means[0].mean.values, m.values);
}

TEST(PatternMeans, PermutationInvariantAndGrouped)
{
    AeCheckpoint ckpt{initial_model({}, 5), {}};
    auto maps = extract_features(ckpt, samples(4, 13));
    const auto patterns = windgen::enumerate_patterns(2);
    const auto a = average_by_pattern(maps, patterns);
    std::reverse(maps.begin(), maps.end());
    const auto b = average_by_pattern(maps, patterns);
    ASSERT_EQ(a.size(), 7u);
    for (std::size_t p = 0; p < a.size(); ++p) {
        EXPECT_EQ(a[p].count, 4u);
        EXPECT_EQ(a[p].pattern, patterns[p]);
        for (std::size_t i = 0; i < a[p].mean.values.size(); ++i) {
            EXPECT_NEAR(a[p].mean.values[i], b[p].mean.values[i], 1e-12);
        }
    }
}

TEST(PatternMeans, MissingPatternIsAnError)
{
    FeatureMap m{"a", windgen::WindingPattern{{1}}, 1, 1, 1, {1.0}};
    try {
        average_by_pattern({m}, windgen::enumerate_patterns(1));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("no samples for pattern ()"), std::string::npos);
    }
}

TEST(PatternMeans, CsvLayout)
{
    FeatureMap m{"a", windgen::WindingPattern{{1, -1}}, 0, 2, 2, {1.0, 2.0, 3.0, 0.5}};
    std::ostringstream out;
    write_pattern_means_csv(out, average_by_pattern({m}, {m.pattern}));
    EXPECT_EQ(out.str(), "pattern,filter,site,mean_value\n\"(+,-)\",1,1,1\n\"(+,-)\",1,2,2\n\"(+,-)\",2,1,3\n"
                         "\"(+,-)\",2,2,0.5\n");
}

TEST(Log, RoundTripAndValidation)
{
    const std::vector<TrainLogRecord> log{{0, 0.5, 0.6, 0.0}, {1, 0.25, 0.3, 1.5}};
    std::ostringstream out;
    write_log(out, log, true);
    std::istringstream in(out.str());
    const auto back = read_log(in);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].wall_time, 1.5);
    EXPECT_EQ(back[1].test_loss, 0.3);
    std::ostringstream plain;
    write_log(plain, log, false);
    EXPECT_EQ(plain.str().find("wall_time"), std::string::npos);
    std::istringstream bad("{\"epoch\":1,\"train_loss\":1,\"test_loss\":1}\n{\"epoch\":1,\"train_loss\":1,\"test_loss\":1}\n");
    EXPECT_THROW(read_log(bad), Error);
}
