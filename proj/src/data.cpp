#include "bcn/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>

#include "bcn/errors.hpp"

namespace bcn {

TokenSeq tokenize(std::string_view line, bool lowercase) {
    TokenSeq out;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
        while (i < n && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t start = i;
        while (i < n && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i == start) break;
        std::size_t lo = start, hi = i;
        while (lo < hi && std::ispunct(static_cast<unsigned char>(line[lo]))) ++lo;
        while (hi > lo && std::ispunct(static_cast<unsigned char>(line[hi - 1]))) --hi;
        if (hi == lo) continue;
        std::string token(line.substr(lo, hi - lo));
        if (lowercase)
            for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(token));
    }
    return out;
}

Vocabulary build_vocab(std::span<const TokenSeq> docs, std::size_t min_count) {
    if (docs.empty()) throw ContractError("build_vocab needs a nonempty corpus");
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const TokenSeq& doc : docs)
        for (const std::string& tok : doc) ++freq[tok];

    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (auto& [tok, count] : freq)
        if (count > min_count) kept.emplace_back(tok, count);
    if (kept.empty())
        throw ConfigError("vocabulary is empty: no token appears more than " +
                          std::to_string(min_count) + " times");

    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    Vocabulary v;
    v.min_count = min_count;
    v.tokens.reserve(kept.size());
    v.counts.reserve(kept.size());
    for (auto& [tok, count] : kept) {
        v.index.emplace(tok, v.tokens.size());
        v.tokens.push_back(std::move(tok));
        v.counts.push_back(count);
    }
    return v;
}

BowMode bow_mode_from_string(const std::string& name) {
    if (name == "count") return BowMode::Count;
    if (name == "binary") return BowMode::Binary;
    if (name == "l2") return BowMode::L2NormalizedCount;
    throw ConfigError("unknown bag-of-words mode: \"" + name +
                      "\" (expected count, binary or l2)");
}

const char* to_string(BowMode mode) {
    switch (mode) {
        case BowMode::Count: return "count";
        case BowMode::Binary: return "binary";
        case BowMode::L2NormalizedCount: return "l2";
    }
    return "?";
}

SparseVec vectorize(const Vocabulary& vocab, const TokenSeq& doc, BowMode mode) {
    std::map<std::size_t, double> counts;  // ordered -> sorted entries for free
    for (const std::string& tok : doc) {
        auto it = vocab.index.find(tok);
        if (it != vocab.index.end()) counts[it->second] += 1.0;
    }
    SparseVec out;
    out.dim = vocab.size();
    out.entries.reserve(counts.size());
    if (mode == BowMode::Binary) {
        for (const auto& [pos, c] : counts) {
            (void)c;
            out.entries.emplace_back(pos, 1.0);
        }
        return out;
    }
    double norm = 0.0;
    for (const auto& [pos, c] : counts) norm += c * c;
    norm = std::sqrt(norm);
    for (const auto& [pos, c] : counts)
        out.entries.emplace_back(pos, mode == BowMode::Count ? c : c / norm);
    return out;
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open \"" + path + "\" for writing");
    for (std::size_t i = 0; i < vocab.size(); ++i)
        out << vocab.tokens[i] << '\t' << vocab.counts[i] << '\n';
    if (!out) throw DataError("failed writing \"" + path + "\"");
}

Vocabulary load_vocab(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    Vocabulary v;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("vocab file \"" + path + "\" line " + std::to_string(lineno) +
                            ": expected token<TAB>count");
        std::string token = line.substr(0, tab);
        std::uint64_t count = 0;
        const char* first = line.data() + tab + 1;
        const char* last = line.data() + line.size();
        if (std::from_chars(first, last, count).ec != std::errc{})
            throw DataError("vocab file \"" + path + "\" line " + std::to_string(lineno) +
                            ": bad count");
        v.index.emplace(token, v.tokens.size());
        v.tokens.push_back(std::move(token));
        v.counts.push_back(count);
    }
    if (v.tokens.empty()) throw DataError("vocab file \"" + path + "\" is empty");
    return v;
}

// ---------------------------------------------------------------------------
// Corpus loading

namespace {

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

TokenSeq tokenize_record(const std::string& text, bool lowercase, const std::string& path,
                         std::size_t lineno) {
    TokenSeq doc = tokenize(text, lowercase);
    if (doc.empty())
        throw DataError("\"" + path + "\" line " + std::to_string(lineno) +
                        ": document is empty after tokenization");
    return doc;
}

}  // namespace

ParallelCorpus load_parallel(const std::string& path_a, const std::string& path_b,
                             bool lowercase) {
    const auto lines_a = read_lines(path_a);
    const auto lines_b = read_lines(path_b);
    if (lines_a.size() != lines_b.size())
        throw DataError("parallel corpus line counts differ: \"" + path_a + "\" has " +
                        std::to_string(lines_a.size()) + ", \"" + path_b + "\" has " +
                        std::to_string(lines_b.size()));
    ParallelCorpus corpus;
    for (std::size_t i = 0; i < lines_a.size(); ++i) {
        corpus.docs_a.push_back(tokenize_record(lines_a[i], lowercase, path_a, i + 1));
        corpus.docs_b.push_back(tokenize_record(lines_b[i], lowercase, path_b, i + 1));
    }
    return corpus;
}

ParallelCorpus load_parallel_tsv(const std::string& path, bool lowercase) {
    const auto lines = read_lines(path);
    ParallelCorpus corpus;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::size_t tab = lines[i].find('\t');
        if (tab == std::string::npos)
            throw DataError("\"" + path + "\" line " + std::to_string(i + 1) +
                            ": expected two tab-separated columns");
        corpus.docs_a.push_back(tokenize_record(lines[i].substr(0, tab), lowercase, path, i + 1));
        corpus.docs_b.push_back(tokenize_record(lines[i].substr(tab + 1), lowercase, path, i + 1));
    }
    return corpus;
}

std::vector<Vector> load_dense(const std::string& path, std::size_t expected_dim) {
    const auto lines = read_lines(path);
    std::vector<Vector> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty())
            throw DataError("\"" + path + "\" record " + std::to_string(i + 1) + ": empty line");
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const std::size_t tab = line.find('\t', start);
            fields.emplace_back(line.data() + start,
                                (tab == std::string::npos ? line.size() : tab) - start);
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        std::size_t first = 0;
        if (fields.size() == expected_dim + 1)
            first = 1;  // leading id column
        else if (fields.size() != expected_dim)
            throw DataError("\"" + path + "\" record " + std::to_string(i + 1) + ": has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(expected_dim) + " (or +1 with a leading id)");
        Vector v(expected_dim);
        for (std::size_t j = 0; j < expected_dim; ++j) {
            const std::string_view f = fields[first + j];
            double value = 0.0;
            const auto res = std::from_chars(f.data(), f.data() + f.size(), value);
            if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(value))
                throw DataError("\"" + path + "\" record " + std::to_string(i + 1) + " field " +
                                std::to_string(first + j + 1) + ": bad float \"" +
                                std::string(f) + "\"");
            v[j] = value;
        }
        records.push_back(std::move(v));
    }
    return records;
}

void save_dense(std::span<const Vector> records, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open \"" + path + "\" for writing");
    out.precision(17);
    for (const Vector& v : records) {
        for (std::size_t j = 0; j < v.size(); ++j) {
            if (j) out << '\t';
            out << v[j];
        }
        out << '\n';
    }
    if (!out) throw DataError("failed writing \"" + path + "\"");
}

// ---------------------------------------------------------------------------
// Synthetic data

std::vector<ViewSpec> synth_view_specs(std::span<const std::size_t> view_dims) {
    std::vector<ViewSpec> specs;
    for (std::size_t j = 0; j < view_dims.size(); ++j) {
        ViewSpec spec;
        spec.name = "view" + std::to_string(j);
        spec.dim = view_dims[j];
        spec.pivot = (j + 1 == view_dims.size());
        spec.input_kind = InputKind::DenseFeatures;
        specs.push_back(std::move(spec));
    }
    return specs;
}

namespace {

Vector observe(Rng& rng, const Matrix& map, const Vector& latent, double noise_sigma) {
    Vector v = matvec(map, latent);
    if (noise_sigma > 0.0)
        for (double& x : v) x += noise_sigma * rng.normal();
    return v;
}

Vector draw_latent(Rng& rng, std::size_t latent_dim) {
    Vector s(latent_dim);
    for (double& x : s) x = rng.normal();
    return s;
}

}  // namespace

PairSet synth_pairs(Rng& rng, std::span<const Matrix> maps, std::size_t view, std::size_t n,
                    double noise_sigma) {
    const std::size_t pivot = maps.size() - 1;
    if (view >= pivot) throw ContractError("synth_pairs needs a non-pivot view index");
    const std::size_t latent_dim = maps[0].cols;
    PairSet set;
    set.view_a = view;
    set.view_b = pivot;
    set.items.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vector s = draw_latent(rng, latent_dim);
        set.items.push_back(PairedInstance{observe(rng, maps[view], s, noise_sigma),
                                           observe(rng, maps[pivot], s, noise_sigma)});
    }
    return set;
}

SynthDataset synth_multiview_with_maps(Rng& rng, std::vector<Matrix> maps, std::size_t n_per_pair,
                                       std::size_t n_test, double noise_sigma) {
    if (maps.size() < 3)
        throw ContractError("synthetic bridging data needs at least 3 views");
    const std::size_t n_views = maps.size();
    const std::size_t latent_dim = maps[0].cols;
    for (const Matrix& m : maps)
        if (m.cols != latent_dim) throw ContractError("all maps must share the latent dim");

    SynthDataset data;
    data.maps = std::move(maps);
    // Entity-disjoint training pairs: every entity is drawn fresh, so no
    // entity ever appears in two pair sets.
    for (std::size_t j = 0; j + 1 < n_views; ++j)
        data.sets.push_back(synth_pairs(rng, data.maps, j, n_per_pair, noise_sigma));
    for (std::size_t i = 0; i < n_test; ++i) {
        const Vector s = draw_latent(rng, latent_dim);
        std::vector<Vector> tuple;
        tuple.reserve(n_views);
        for (std::size_t j = 0; j < n_views; ++j)
            tuple.push_back(observe(rng, data.maps[j], s, noise_sigma));
        data.test.push_back(std::move(tuple));
        data.test_latents.push_back(s);
    }
    return data;
}

SynthDataset synth_multiview(Rng& rng, std::size_t n_views, std::size_t latent_dim,
                             std::span<const std::size_t> view_dims, std::size_t n_per_pair,
                             std::size_t n_test, double noise_sigma) {
    if (view_dims.size() != n_views)
        throw ContractError("view_dims must list one dim per view");
    if (latent_dim < 1) throw ContractError("latent_dim must be >= 1");
    for (std::size_t d : view_dims)
        if (d < latent_dim)
            throw ContractError("view dims must be >= latent_dim");
    // Map entries scale like 1/sqrt(latent_dim) so each observed
    // coordinate has roughly unit variance.
    std::vector<Matrix> maps;
    const double scale = 1.0 / std::sqrt(static_cast<double>(latent_dim));
    for (std::size_t j = 0; j < n_views; ++j) {
        Matrix a(view_dims[j], latent_dim);
        for (double& x : a.data) x = scale * rng.normal();
        maps.push_back(std::move(a));
    }
    return synth_multiview_with_maps(rng, std::move(maps), n_per_pair, n_test, noise_sigma);
}

}  // namespace bcn
