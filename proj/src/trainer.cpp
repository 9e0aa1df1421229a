#include "bcn/trainer.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "bcn/errors.hpp"

namespace bcn {

void TrainConfig::validate() const {
    if (hidden_dim < 1) throw ConfigError("k must be >= 1");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2 (correlation needs 2 samples)");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
    if (loss == LossKind::BinaryCrossEntropy && dec_act != Activation::Sigmoid)
        throw ConfigError("binary-cross-entropy requires p=sigmoid");
}

TrainConfig train_config_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    static const char* known[] = {"k",      "f",          "p",           "loss", "lambda",
                                  "batch_size", "epochs", "learning_rate", "seed", "shuffle",
                                  "momentum"};
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return key == k; }) == std::end(known))
            throw ConfigError("unknown config field: \"" + key + "\"");
    }
    for (const char* required : {"k", "lambda", "learning_rate"})
        if (!doc.contains(required))
            throw ConfigError(std::string("config field \"") + required + "\" is required");

    TrainConfig cfg;
    try {
        cfg.hidden_dim = doc.at("k").get<std::size_t>();
        cfg.lambda = doc.at("lambda").get<double>();
        cfg.learning_rate = doc.at("learning_rate").get<double>();
        if (doc.contains("f")) cfg.enc_act = activation_from_string(doc.at("f").get<std::string>());
        if (doc.contains("p")) cfg.dec_act = activation_from_string(doc.at("p").get<std::string>());
        if (doc.contains("loss")) cfg.loss = loss_from_string(doc.at("loss").get<std::string>());
        if (doc.contains("batch_size")) cfg.batch_size = doc.at("batch_size").get<std::size_t>();
        if (doc.contains("epochs")) cfg.epochs = doc.at("epochs").get<std::size_t>();
        if (doc.contains("seed")) cfg.seed = doc.at("seed").get<std::uint64_t>();
        if (doc.contains("shuffle")) cfg.shuffle = doc.at("shuffle").get<bool>();
        if (doc.contains("momentum")) cfg.momentum = doc.at("momentum").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config field type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::string train_config_to_json(const TrainConfig& cfg) {
    nlohmann::json doc;
    doc["k"] = cfg.hidden_dim;
    doc["f"] = to_string(cfg.enc_act);
    doc["p"] = to_string(cfg.dec_act);
    doc["loss"] = to_string(cfg.loss);
    doc["lambda"] = cfg.lambda;
    doc["batch_size"] = cfg.batch_size;
    doc["epochs"] = cfg.epochs;
    doc["learning_rate"] = cfg.learning_rate;
    doc["seed"] = cfg.seed;
    doc["shuffle"] = cfg.shuffle;
    doc["momentum"] = cfg.momentum;
    return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Scheduling

namespace {

std::vector<Minibatch> schedule_with_order(Rng& rng, std::span<const PairSet> sets,
                                           std::span<const std::vector<std::size_t>> orders,
                                           std::size_t batch_size) {
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    std::vector<Minibatch> batches;
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const PairSet& set = sets[s];
        const std::vector<std::size_t>& order = orders[s];
        const std::size_t n = order.size();
        if (n < 2)
            throw ConfigError("pair set " + std::to_string(s) + " has " + std::to_string(n) +
                              " instances; need at least 2");
        const std::size_t first_batch_of_set = batches.size();
        std::size_t pos = 0;
        while (pos < n) {
            std::size_t take = std::min(batch_size, n - pos);
            // Remainder shorter than 2 cannot carry a correlation
            // estimate; fold it into the previous batch.
            if (take < 2 && batches.size() > first_batch_of_set) {
                for (std::size_t i = 0; i < take; ++i)
                    batches.back().items.push_back(&set.items[order[pos + i]]);
                pos += take;
                continue;
            }
            Minibatch b;
            b.set_index = s;
            b.view_a = set.view_a;
            b.view_b = set.view_b;
            b.items.reserve(take);
            for (std::size_t i = 0; i < take; ++i) b.items.push_back(&set.items[order[pos + i]]);
            batches.push_back(std::move(b));
            pos += take;
        }
    }
    rng.shuffle(batches);
    return batches;
}

std::vector<std::vector<std::size_t>> identity_orders(std::span<const PairSet> sets) {
    std::vector<std::vector<std::size_t>> orders(sets.size());
    for (std::size_t s = 0; s < sets.size(); ++s) {
        orders[s].resize(sets[s].items.size());
        std::iota(orders[s].begin(), orders[s].end(), std::size_t{0});
    }
    return orders;
}

}  // namespace

std::vector<Minibatch> make_schedule(Rng& rng, std::span<const PairSet> sets,
                                     std::size_t batch_size) {
    const auto orders = identity_orders(sets);
    return schedule_with_order(rng, sets, orders, batch_size);
}

// ---------------------------------------------------------------------------
// Updates and the epoch loop

namespace {

void check_gradients_finite(const Gradients& g) {
    std::string offender;
    if (!g.all_finite(&offender))
        throw Error("non-finite gradient in tensor " + offender + "; aborting training");
}

void apply_sgd(ModelParams& p, const Gradients& g, double lr) {
    auto upd = [lr](std::vector<double>& theta, const std::vector<double>& grad) {
        for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * grad[i];
    };
    for (std::size_t j = 0; j < p.view_count(); ++j) {
        upd(p.enc_w[j].data, g.enc_w[j].data);
        upd(p.dec_w[j].data, g.dec_w[j].data);
        upd(p.dec_b[j], g.dec_b[j]);
    }
    upd(p.enc_b, g.enc_b);
}

// v <- momentum*v + g; theta <- theta - lr*v
void apply_momentum(ModelParams& p, Gradients& velocity, const Gradients& g, double lr,
                    double momentum) {
    auto upd = [lr, momentum](std::vector<double>& theta, std::vector<double>& vel,
                              const std::vector<double>& grad) {
        for (std::size_t i = 0; i < theta.size(); ++i) {
            vel[i] = momentum * vel[i] + grad[i];
            theta[i] -= lr * vel[i];
        }
    };
    for (std::size_t j = 0; j < p.view_count(); ++j) {
        upd(p.enc_w[j].data, velocity.enc_w[j].data, g.enc_w[j].data);
        upd(p.dec_w[j].data, velocity.dec_w[j].data, g.dec_w[j].data);
        upd(p.dec_b[j], velocity.dec_b[j], g.dec_b[j]);
    }
    upd(p.enc_b, velocity.enc_b, g.enc_b);
}

void check_sets(std::span<const PairSet> sets, const std::vector<ViewSpec>& views) {
    if (sets.empty()) throw ConfigError("training needs at least one pair set");
    for (std::size_t s = 0; s < sets.size(); ++s) {
        const PairSet& set = sets[s];
        if (set.view_a >= views.size() || set.view_b >= views.size())
            throw ConfigError("pair set " + std::to_string(s) + " references an unknown view");
        if (set.view_a == set.view_b)
            throw ConfigError("pair set " + std::to_string(s) + " pairs a view with itself");
        for (const PairedInstance& inst : set.items) {
            if (view_dim(inst.a) != views[set.view_a].dim ||
                view_dim(inst.b) != views[set.view_b].dim)
                throw ConfigError("pair set " + std::to_string(s) +
                                  " instance dims do not match the view dims");
        }
    }
}

}  // namespace

double sgd_step(ModelParams& params, const Minibatch& batch, const TrainConfig& cfg) {
    BatchResult r = batch_gradients(params, batch, cfg.lambda, cfg.loss);
    check_gradients_finite(r.grads);
    apply_sgd(params, r.grads, cfg.learning_rate);
    return r.objective;
}

TrainResult train(std::span<const PairSet> sets, std::vector<ViewSpec> views,
                  const TrainConfig& cfg, const CheckpointSink& sink) {
    cfg.validate();
    check_sets(sets, views);

    Rng rng(cfg.seed);
    TrainResult result;
    result.model = init_model(rng, cfg.hidden_dim, std::move(views), cfg.enc_act, cfg.dec_act);

    Gradients velocity;
    if (cfg.momentum > 0.0) velocity = Gradients::zeros_like(result.model);

    auto orders = identity_orders(sets);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle)
            for (auto& order : orders) rng.shuffle(order);
        const std::vector<Minibatch> schedule = schedule_with_order(rng, sets, orders,
                                                                    cfg.batch_size);
        EpochTrace trace;
        trace.objective.reserve(schedule.size());
        trace.correlation.reserve(schedule.size());
        for (const Minibatch& batch : schedule) {
            BatchResult r = batch_gradients(result.model, batch, cfg.lambda, cfg.loss);
            check_gradients_finite(r.grads);
            if (cfg.momentum > 0.0)
                apply_momentum(result.model, velocity, r.grads, cfg.learning_rate, cfg.momentum);
            else
                apply_sgd(result.model, r.grads, cfg.learning_rate);
            trace.objective.push_back(r.objective);
            trace.correlation.push_back(r.correlation);
        }
        if (sink) sink(Checkpoint{epoch, save(result.model), trace});
        result.epochs.push_back(std::move(trace));
    }
    return result;
}

TuneResult tune_lambda(std::span<const PairSet> sets, std::vector<ViewSpec> views,
                       const TrainConfig& cfg, std::span<const double> grid,
                       const std::function<double(const ModelParams&)>& validation_score) {
    if (grid.empty()) throw ConfigError("lambda grid must not be empty");
    if (!validation_score) throw ConfigError("tune_lambda needs a validation callback");

    TuneResult result;
    double best_score = 0.0;
    bool have_best = false;
    for (double lambda : grid) {
        TrainConfig run = cfg;
        run.lambda = lambda;
        TrainResult trained = train(sets, views, run);
        const double score = validation_score(trained.model);
        result.scores.push_back({lambda, score});
        if (!have_best || score > best_score ||
            (score == best_score && lambda < result.best_lambda)) {
            result.best_lambda = lambda;
            best_score = score;
            have_best = true;
        }
    }
    return result;
}

}  // namespace bcn
