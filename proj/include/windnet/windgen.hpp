#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "random.hpp"
#include "text_io.hpp"

/// Seeded generator of circle-valued configurations with known winding number.
namespace windnet::windgen {

struct GenParams {
    std::size_t sites = 128;
    int max_segments = 5;
    /// Noise standard deviation in units of 2*pi.
    double noise_amplitude = 0.1;
    double length_jitter = 0.4;
    std::uint64_t seed = 0;
    std::size_t samples_per_pattern = 1000;

    void validate() const
    {
        if (sites < 2) {
            throw Error("GenParams: sites must be >= 2");
        }
        if (max_segments < 0 || max_segments > 30) {
            throw Error("GenParams: max_segments must lie in 0..30");
        }
        if (!(noise_amplitude >= 0.0) || !std::isfinite(noise_amplitude)) {
            throw Error("GenParams: noise_amplitude must be >= 0");
        }
        if (!(length_jitter >= 0.0 && length_jitter < 1.0)) {
            throw Error("GenParams: length_jitter must lie in [0, 1)");
        }
    }
};

/// Sign sequence (p_1, ..., p_Ns) of per-segment winding directions.
struct WindingPattern {
    std::vector<int> directions;

    std::size_t n_segments() const noexcept { return directions.size(); }

    int winding() const noexcept
    {
        int total = 0;
        for (int p : directions) {
            total += p;
        }
        return total;
    }

    /// "(+,-,+)"; the empty pattern renders as "()".
    std::string to_string() const
    {
        std::string s = "(";
        for (std::size_t i = 0; i < directions.size(); ++i) {
            if (i != 0) {
                s += ',';
            }
            s += directions[i] > 0 ? '+' : '-';
        }
        s += ')';
        return s;
    }

    friend bool operator==(const WindingPattern&, const WindingPattern&) = default;
    friend auto operator<=>(const WindingPattern&, const WindingPattern&) = default;
};

enum class Split { train = 0, test = 1 };

inline const char* split_name(Split s) noexcept { return s == Split::train ? "train" : "test"; }

inline Split parse_split(const std::string& s)
{
    if (s == "train") {
        return Split::train;
    }
    if (s == "test") {
        return Split::test;
    }
    throw Error("unknown split '" + s + "'");
}

struct WindingSample {
    std::string id;
    Split split = Split::train;
    WindingPattern pattern;
    /// Site counts per segment; empty for samples read back from a dataset file.
    std::vector<int> segment_lengths;
    int label_nw = 0;
    std::vector<double> re;
    std::vector<double> im;
    std::uint64_t seed_used = 0;

    std::size_t sites() const noexcept { return re.size(); }
};

/// All sign sequences with 0..max_segments entries: by length, then in binary
/// order with '+' as 0 and the first direction as the most significant bit.
inline std::vector<WindingPattern> enumerate_patterns(int max_segments)
{
    if (max_segments < 0 || max_segments > 30) {
        throw Error("enumerate_patterns: max_segments must lie in 0..30");
    }
    std::vector<WindingPattern> patterns;
    for (int n = 0; n <= max_segments; ++n) {
        const std::uint64_t count = std::uint64_t{1} << n;
        for (std::uint64_t code = 0; code < count; ++code) {
            WindingPattern p;
            p.directions.reserve(static_cast<std::size_t>(n));
            for (int m = n - 1; m >= 0; --m) {
                p.directions.push_back(((code >> m) & 1U) != 0 ? -1 : +1);
            }
            patterns.push_back(std::move(p));
        }
    }
    return patterns;
}

/// Substream seed for one sample; each (split, pattern, sample) triple gets
/// an independent xoshiro256** stream.
inline std::uint64_t sample_seed(std::uint64_t master_seed, Split split, std::size_t pattern_index,
                                 std::size_t sample_index) noexcept
{
    return derive_seed(master_seed, {static_cast<std::uint64_t>(split), pattern_index, sample_index});
}

inline constexpr int max_length_retries = 100;

/// Integer segment lengths summing to sites - 1. The first Ns - 1 lengths are
/// rounded, the last takes the remainder; draws are repeated when a length
/// would fall below one site.
inline std::vector<int> draw_segment_lengths(std::size_t n_segments, const GenParams& params, Rng& rng)
{
    if (n_segments == 0) {
        return {};
    }
    const int span = static_cast<int>(params.sites) - 1;
    const double mean = static_cast<double>(span) / static_cast<double>(n_segments);
    std::vector<double> xi(n_segments + 1, 0.0);
    std::vector<int> lengths(n_segments);
    for (int attempt = 0; attempt < max_length_retries; ++attempt) {
        for (std::size_t m = 1; m < n_segments; ++m) {
            xi[m] = rng.symmetric_open();
        }
        int used = 0;
        bool feasible = true;
        for (std::size_t m = 0; m + 1 < n_segments; ++m) {
            const double raw = mean * (1.0 + params.length_jitter * (xi[m + 1] - xi[m]));
            lengths[m] = static_cast<int>(std::lround(raw));
            used += lengths[m];
            feasible = feasible && lengths[m] >= 1;
        }
        lengths.back() = span - used;
        feasible = feasible && lengths.back() >= 1;
        if (feasible) {
            return lengths;
        }
    }
    throw Error("segment lengths infeasible for " + std::to_string(n_segments) + " segments on "
                + std::to_string(params.sites) + " sites after " + std::to_string(max_length_retries)
                + " attempts");
}

/// One configuration. Sites 1..L-1 follow a linear phase ramp of +-2*pi per
/// segment plus Gaussian noise; site L repeats site 1.
inline WindingSample generate(const WindingPattern& pattern, const GenParams& params, std::uint64_t stream_seed)
{
    params.validate();
    Rng rng(stream_seed);

    WindingSample s;
    s.pattern = pattern;
    s.label_nw = pattern.winding();
    s.seed_used = stream_seed;
    s.segment_lengths = draw_segment_lengths(pattern.n_segments(), params, rng);

    const std::size_t L = params.sites;
    std::vector<double> ramp(L - 1, 0.0);
    std::size_t start = 0;
    for (std::size_t m = 0; m < s.segment_lengths.size(); ++m) {
        const int len = s.segment_lengths[m];
        for (int j = 0; j < len; ++j) {
            ramp[start + static_cast<std::size_t>(j)] =
                pattern.directions[m] * static_cast<double>(j) / static_cast<double>(len);
        }
        start += static_cast<std::size_t>(len);
    }

    constexpr double two_pi = 2.0 * std::numbers::pi;
    s.re.resize(L);
    s.im.resize(L);
    for (std::size_t i = 0; i + 1 < L; ++i) {
        const double theta = two_pi * (ramp[i] + params.noise_amplitude * rng.normal());
        s.re[i] = std::cos(theta);
        s.im[i] = std::sin(theta);
    }
    s.re[L - 1] = s.re[0];
    s.im[L - 1] = s.im[0];
    return s;
}

struct Dataset {
    std::vector<WindingSample> train;
    std::vector<WindingSample> test;
};

inline std::string sample_id(Split split, std::size_t pattern_index, std::size_t sample_index)
{
    return std::string(split_name(split)) + "-" + std::to_string(pattern_index) + "-"
           + std::to_string(sample_index);
}

/// Pattern-major order: all samples of pattern 0, then pattern 1, ...
inline std::vector<WindingSample> generate_split(const GenParams& params, Split split)
{
    params.validate();
    const auto patterns = enumerate_patterns(params.max_segments);
    std::vector<WindingSample> out;
    out.reserve(patterns.size() * params.samples_per_pattern);
    for (std::size_t p = 0; p < patterns.size(); ++p) {
        for (std::size_t k = 0; k < params.samples_per_pattern; ++k) {
            WindingSample s = generate(patterns[p], params, sample_seed(params.seed, split, p, k));
            s.id = sample_id(split, p, k);
            s.split = split;
            out.push_back(std::move(s));
        }
    }
    return out;
}

inline Dataset generate_dataset(const GenParams& params)
{
    return {generate_split(params, Split::train), generate_split(params, Split::test)};
}

// ---------------------------------------------------------------------------
// Dataset files: one JSON object per line with fields in the fixed order
// id, split, n_s, pattern, n_w, seed_used, re, im.

inline std::string to_ndjson_line(const WindingSample& s)
{
    std::string line = "{\"id\":";
    append_string(line, s.id);
    line += ",\"split\":";
    append_string(line, split_name(s.split));
    line += ",\"n_s\":" + std::to_string(s.pattern.n_segments());
    line += ",\"pattern\":[";
    for (std::size_t i = 0; i < s.pattern.directions.size(); ++i) {
        if (i != 0) {
            line += ',';
        }
        line += std::to_string(s.pattern.directions[i]);
    }
    line += "],\"n_w\":" + std::to_string(s.label_nw);
    line += ",\"seed_used\":" + std::to_string(s.seed_used);
    line += ",\"re\":";
    append_real_array(line, s.re);
    line += ",\"im\":";
    append_real_array(line, s.im);
    line += '}';
    return line;
}

inline void write_ndjson(std::ostream& out, const std::vector<WindingSample>& samples)
{
    for (const auto& s : samples) {
        out << to_ndjson_line(s) << '\n';
    }
}

inline WindingSample parse_ndjson_line(const std::string& line)
{
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object()) {
        throw Error("record is not an object");
    }
    static const char* const fields[] = {"id", "split", "n_s", "pattern", "n_w", "seed_used", "re", "im"};
    for (const char* f : fields) {
        if (!j.contains(f)) {
            throw Error(std::string("missing field '") + f + "'");
        }
    }
    if (j.size() != std::size(fields)) {
        throw Error("unexpected extra fields in record");
    }
    WindingSample s;
    s.id = j.at("id").get<std::string>();
    s.split = parse_split(j.at("split").get<std::string>());
    s.pattern.directions = j.at("pattern").get<std::vector<int>>();
    for (int p : s.pattern.directions) {
        if (p != 1 && p != -1) {
            throw Error("pattern entries must be +1 or -1");
        }
    }
    if (j.at("n_s").get<std::size_t>() != s.pattern.n_segments()) {
        throw Error("n_s does not match pattern length");
    }
    s.label_nw = j.at("n_w").get<int>();
    if (s.label_nw != s.pattern.winding()) {
        throw Error("n_w does not equal the sum of the pattern");
    }
    s.seed_used = j.at("seed_used").get<std::uint64_t>();
    s.re = j.at("re").get<std::vector<double>>();
    s.im = j.at("im").get<std::vector<double>>();
    if (s.re.size() != s.im.size() || s.re.size() < 2) {
        throw Error("re and im must have equal length >= 2");
    }
    return s;
}

/// Reads every non-empty line; errors carry the 1-based line number.
inline std::vector<WindingSample> read_ndjson(std::istream& in)
{
    std::vector<WindingSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            samples.push_back(parse_ndjson_line(line));
        } catch (const std::exception& e) {
            throw Error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return samples;
}

inline void save_dataset(const std::filesystem::path& path, const std::vector<WindingSample>& samples)
{
    auto out = open_for_write(path);
    write_ndjson(out, samples);
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

inline std::vector<WindingSample> load_dataset(const std::filesystem::path& path)
{
    auto in = open_for_read(path);
    return read_ndjson(in);
}

/// Flat table: id, split, n_s, pattern, n_w, seed_used, re_1..re_L, im_1..im_L.
inline void write_csv(std::ostream& out, const std::vector<WindingSample>& samples)
{
    const std::size_t L = samples.empty() ? 0 : samples.front().sites();
    out << "id,split,n_s,pattern,n_w,seed_used";
    for (std::size_t i = 1; i <= L; ++i) {
        out << ",re_" << i;
    }
    for (std::size_t i = 1; i <= L; ++i) {
        out << ",im_" << i;
    }
    out << '\n';
    for (const auto& s : samples) {
        if (s.sites() != L) {
            throw Error("write_csv: samples have differing lengths");
        }
        out << s.id << ',' << split_name(s.split) << ',' << s.pattern.n_segments() << ",\""
            << s.pattern.to_string() << "\"," << s.label_nw << ',' << s.seed_used;
        for (double v : s.re) {
            out << ',' << format_real(v);
        }
        for (double v : s.im) {
            out << ',' << format_real(v);
        }
        out << '\n';
    }
}

} // namespace windnet::windgen
