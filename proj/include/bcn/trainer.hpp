#pragma once

// Minibatch scheduling over the disjoint pair sets, SGD updates, the
// epoch loop with per-epoch checkpoints, and grid search over lambda.

#include <functional>
#include <span>

#include "bcn/objective.hpp"

namespace bcn {

struct TrainConfig {
    std::size_t hidden_dim = 128;
    Activation enc_act = Activation::Sigmoid;
    Activation dec_act = Activation::Sigmoid;
    LossKind loss = LossKind::SquaredError;
    double lambda = 1.0;
    std::size_t batch_size = 20;
    std::size_t epochs = 10;
    double learning_rate = 0.01;
    std::uint64_t seed = 0;
    bool shuffle = true;  // reshuffle instances inside each set every epoch
    double momentum = 0.0;  // optional; 0 is plain SGD

    void validate() const;
};

// Parses a JSON object with fields k, f, p, loss, lambda, batch_size,
// epochs, learning_rate, seed, shuffle (momentum optional). k, lambda and
// learning_rate are required; the rest default as above. Unknown fields
// are rejected.
TrainConfig train_config_from_json(const std::string& text);
std::string train_config_to_json(const TrainConfig& cfg);

// Aligned observations between two views. In the standard setup view_b
// is always the pivot; pairs between two non-pivot views are accepted
// too (experimental: the objective generalizes per pair).
struct PairSet {
    std::size_t view_a = 0;
    std::size_t view_b = 0;
    std::vector<PairedInstance> items;
};

// Cuts each set into consecutive batches of batch_size (a final short
// batch of >= 2 is kept; a shorter remainder is merged into the previous
// batch) and shuffles the combined batch list. Every instance appears in
// exactly one batch.
std::vector<Minibatch> make_schedule(Rng& rng, std::span<const PairSet> sets,
                                     std::size_t batch_size);

// One plain SGD step; returns the pre-update objective value.
double sgd_step(ModelParams& params, const Minibatch& batch, const TrainConfig& cfg);

struct EpochTrace {
    std::vector<double> objective;    // per minibatch, pre-update
    std::vector<double> correlation;  // per minibatch, diagnostic
};

struct Checkpoint {
    std::size_t epoch = 0;
    std::vector<std::uint8_t> model_bytes;
    EpochTrace trace;
};

using CheckpointSink = std::function<void(const Checkpoint&)>;

struct TrainResult {
    ModelParams model;
    std::vector<EpochTrace> epochs;
};

// Deterministic given (seed, data, config): initialization, per-epoch
// shuffles and batch order all flow from one seeded Rng. The sink, when
// given, receives a checkpoint after every epoch.
TrainResult train(std::span<const PairSet> sets, std::vector<ViewSpec> views,
                  const TrainConfig& cfg, const CheckpointSink& sink = {});

struct LambdaScore {
    double lambda = 0.0;
    double score = 0.0;
};

struct TuneResult {
    double best_lambda = 0.0;
    std::vector<LambdaScore> scores;
};

// Trains one model per grid value (same seed each time), scores it with
// the validation callback and returns the argmax; ties break toward the
// smaller lambda.
TuneResult tune_lambda(std::span<const PairSet> sets, std::vector<ViewSpec> views,
                       const TrainConfig& cfg, std::span<const double> grid,
                       const std::function<double(const ModelParams&)>& validation_score);

}  // namespace bcn
