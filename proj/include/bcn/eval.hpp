#pragma once

// Downstream evaluation: cross-view transfer classification with an
// averaged perceptron, Euclidean-distance retrieval with recall@k, word
// nearest-neighbor probes and the 2-model pipeline-retrieval baseline.

#include <set>
#include <span>
#include <string>
#include <vector>

#include "bcn/data.hpp"

namespace bcn {

using LabelSet = std::set<std::size_t>;

struct LabeledEmbedding {
    Vector embedding;
    LabelSet labels;
};

// One-vs-rest binary averaged perceptrons, one per class. The stored
// weights are the running average of the weight vector over every
// training step, finalized when training ends.
struct PerceptronModel {
    std::size_t classes = 0;
    std::size_t dim = 0;
    std::vector<Vector> avg_w;  // per class
    Vector avg_b;
    std::size_t epochs_trained = 0;
};

// Per-epoch example order is shuffled with rng. Mistake rule per class c:
// predict sign(w.x + b) against +-1 (label present or not); on a mistake
// (or a 0 score) add y*x to w and y to b.
PerceptronModel train_perceptron(std::span<const LabeledEmbedding> train, std::size_t classes,
                                 std::size_t epochs, Rng& rng);

// Classes whose averaged score is strictly positive.
LabelSet classify(const PerceptronModel& model, const Vector& x);

struct F1Report {
    std::vector<double> per_class;
    double mean = 0.0;  // unweighted over classes
};

// Multi-label precision/recall/F1 per class, with any 0 denominator
// giving 0.
F1Report f1_report(std::span<const LabelSet> predictions, std::span<const LabelSet> gold,
                   std::size_t classes);

struct LabeledDoc {
    ViewVector data;
    LabelSet labels;
};

// Embed source docs, train the perceptron on them, classify embedded
// target docs, report F1.
F1Report cross_view_transfer(const ModelParams& model, std::span<const LabeledDoc> source,
                             std::size_t source_view, std::span<const LabeledDoc> target,
                             std::size_t target_view, std::size_t classes, std::size_t epochs,
                             Rng& rng);

// ---------------------------------------------------------------------------
// Retrieval

struct RetrievalReport {
    std::vector<std::size_t> ks;
    std::vector<double> recall;  // aligned with ks, non-decreasing
    std::size_t queries = 0;     // queries actually scored
    std::size_t excluded = 0;    // queries dropped for an empty relevance set
};

enum class RecallVariant {
    AtLeastOne,       // fraction of queries with >= 1 relevant doc in the top k
    PerRelevantItem,  // mean over queries of |top k  ^ relevant| / |relevant|
};

// Documents are ranked by ascending Euclidean distance, ties broken by
// document index.
RetrievalReport retrieve(std::span<const Vector> queries, std::span<const Vector> documents,
                         const std::vector<std::vector<std::size_t>>& relevance,
                         std::span<const std::size_t> ks,
                         RecallVariant variant = RecallVariant::AtLeastOne);

// Relevance file: "query_id<TAB>doc_id" per line, ids 0-based.
std::vector<std::vector<std::size_t>> load_relevance(const std::string& path,
                                                     std::size_t n_queries, std::size_t n_docs);

struct RankedToken {
    std::string token;
    double distance = 0.0;
};

// Embeds the query token's one-hot vector and every target-vocabulary
// token's one-hot vector, then ranks target tokens by distance.
std::vector<RankedToken> nearest_words(const ModelParams& model, std::size_t query_view,
                                       const std::string& query_token, std::size_t target_view,
                                       const Vocabulary& query_vocab,
                                       const Vocabulary& target_vocab, std::size_t top_n);

// 2-model pipeline: nearest bridge doc in the first model's space (tie
// break by index), then that bridge doc's embedding in the second model's
// space ranks the final documents.
RetrievalReport pipeline_retrieve(const ModelParams& model_ab, std::size_t view_a,
                                  std::size_t view_b_in_ab, const ModelParams& model_bc,
                                  std::size_t view_b_in_bc, std::size_t view_c,
                                  std::span<const ViewVector> queries,
                                  std::span<const ViewVector> bridge,
                                  std::span<const ViewVector> docs,
                                  const std::vector<std::vector<std::size_t>>& relevance,
                                  std::span<const std::size_t> ks,
                                  RecallVariant variant = RecallVariant::AtLeastOne);

// Full-set correlation between the encodings of the two sides of a pair
// set (diagnostic, not a training signal).
double dataset_correlation(const ModelParams& model, const PairSet& pairs);

}  // namespace bcn
