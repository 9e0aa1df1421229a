#pragma once

// Corpus ingestion: vocabulary construction, bag-of-words vectorization,
// paired-document and dense-feature loading, plus a synthetic multi-view
// generator for desk-scale verification.

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bcn/trainer.hpp"

namespace bcn {

using TokenSeq = std::vector<std::string>;

// Whitespace split; optional ASCII lowercasing; leading/trailing
// punctuation stripped. Tokens that strip to nothing are dropped.
TokenSeq tokenize(std::string_view line, bool lowercase = true);

struct Vocabulary {
    std::vector<std::string> tokens;  // canonical order: frequency desc, then lexicographic
    std::vector<std::uint64_t> counts;
    std::unordered_map<std::string, std::size_t> index;
    std::size_t min_count = 0;

    std::size_t size() const { return tokens.size(); }
};

// Keeps tokens whose corpus frequency is strictly greater than min_count.
Vocabulary build_vocab(std::span<const TokenSeq> docs, std::size_t min_count = 5);

enum class BowMode { Count, Binary, L2NormalizedCount };

BowMode bow_mode_from_string(const std::string& name);
const char* to_string(BowMode mode);

// Out-of-vocabulary tokens are dropped.
SparseVec vectorize(const Vocabulary& vocab, const TokenSeq& doc, BowMode mode = BowMode::Count);

// Vocab file: UTF-8, one "token<TAB>count" line per token in canonical order.
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

// Positionally aligned documents of a view pair.
struct ParallelCorpus {
    std::vector<TokenSeq> docs_a;
    std::vector<TokenSeq> docs_b;
};

// Two aligned plain-text files, one document per line.
ParallelCorpus load_parallel(const std::string& path_a, const std::string& path_b,
                             bool lowercase = true);
// One two-column TSV, "doc_a<TAB>doc_b" per line.
ParallelCorpus load_parallel_tsv(const std::string& path, bool lowercase = true);

// Dense feature records: tab-separated floats, one record per line, with
// an optional leading id column (detected by field count).
std::vector<Vector> load_dense(const std::string& path, std::size_t expected_dim);
void save_dense(std::span<const Vector> records, const std::string& path);

// ---------------------------------------------------------------------------
// Synthetic multi-view data
//
// A shared latent s ~ N(0, I) per entity; view j observes
// maps[j] * s + noise_sigma * N(0, I). Training sets pair each non-pivot
// view with the pivot (the last view) on entity-disjoint groups; test
// tuples hold all views of fresh held-out entities.

struct SynthDataset {
    std::vector<Matrix> maps;               // per view: view_dim x latent_dim
    std::vector<PairSet> sets;              // j = 0..M-2, each paired with view M-1
    std::vector<std::vector<Vector>> test;  // test[i][view]
    std::vector<Vector> test_latents;       // test[i] -> its latent
};

// Dense-feature view specs named view0..view{M-1}, the last one pivot.
std::vector<ViewSpec> synth_view_specs(std::span<const std::size_t> view_dims);

SynthDataset synth_multiview(Rng& rng, std::size_t n_views, std::size_t latent_dim,
                             std::span<const std::size_t> view_dims, std::size_t n_per_pair,
                             std::size_t n_test, double noise_sigma);

// Same, but with caller-provided maps (e.g. identity maps in tests).
SynthDataset synth_multiview_with_maps(Rng& rng, std::vector<Matrix> maps, std::size_t n_per_pair,
                                       std::size_t n_test, double noise_sigma);

// Extra aligned pairs (view, pivot) drawn from the same maps on fresh
// entities; used for validation splits.
PairSet synth_pairs(Rng& rng, std::span<const Matrix> maps, std::size_t view, std::size_t n,
                    double noise_sigma);

}  // namespace bcn
