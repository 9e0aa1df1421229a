// bcn: train and evaluate bridged multi-view models from the command line.
//
// Subcommands: build-vocab, vectorize, synth, train, tune, encode, nn,
// retrieve, pipeline-retrieve, classify, gradcheck. Every run echoes its
// resolved configuration (including defaulted values) to stderr before
// doing any work; reports go to stdout as JSON unless --out is given.
// Exit codes: 0 success, 1 usage error, 2 data/contract error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bcn/errors.hpp"
#include "bcn/eval.hpp"

using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.push_back(s.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& csv, const char* flag) {
    std::vector<std::size_t> out;
    for (const std::string& part : split(csv, ',')) {
        try {
            out.push_back(std::stoull(part));
        } catch (const std::exception&) {
            throw UsageError(std::string(flag) + ": bad number \"" + part + "\"");
        }
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
}

void echo_config(const json& resolved) {
    std::cerr << "config: " << resolved.dump() << "\n";
}

void emit_report(const json& report, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << report.dump(2) << "\n";
        return;
    }
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw bcn::DataError("cannot open \"" + out_path + "\" for writing");
    out << report.dump(2) << "\n";
}

std::vector<std::string> read_lines_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw bcn::DataError("cannot open \"" + path + "\"");
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// One side of an evaluation input: text lines vectorized against a vocab,
// or dense feature records.
std::vector<bcn::ViewVector> load_view_inputs(const std::string& path, bool dense,
                                              std::size_t dense_dim,
                                              const std::string& vocab_path, bcn::BowMode mode,
                                              bool lowercase) {
    std::vector<bcn::ViewVector> out;
    if (dense) {
        for (auto& v : bcn::load_dense(path, dense_dim)) out.push_back(std::move(v));
        return out;
    }
    if (vocab_path.empty())
        throw UsageError("text inputs need a vocabulary (--*-vocab) or the --dense flag");
    const bcn::Vocabulary vocab = bcn::load_vocab(vocab_path);
    for (const std::string& line : read_lines_or_throw(path))
        out.push_back(bcn::vectorize(vocab, bcn::tokenize(line, lowercase), mode));
    return out;
}

std::vector<bcn::Vector> encode_all(const bcn::ModelParams& model, std::size_t view,
                                    const std::vector<bcn::ViewVector>& docs) {
    std::vector<bcn::Vector> out;
    out.reserve(docs.size());
    for (const auto& d : docs) out.push_back(bcn::encode_view(model, bcn::ViewValue{view, d}));
    return out;
}

json recall_report(const bcn::RetrievalReport& r, bcn::RecallVariant variant) {
    json out;
    out["metric"] = "recall";
    out["variant"] =
        variant == bcn::RecallVariant::AtLeastOne ? "at-least-one" : "per-relevant-item";
    out["k"] = r.ks;
    out["value"] = r.recall;
    out["counts"] = {{"queries", r.queries}, {"excluded", r.excluded}};
    return out;
}

std::vector<bcn::LabelSet> load_labels(const std::string& path, std::size_t classes) {
    std::vector<bcn::LabelSet> out;
    const auto lines = read_lines_or_throw(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        bcn::LabelSet labels;
        if (!lines[i].empty()) {
            for (const std::string& part : split(lines[i], ',')) {
                std::size_t c = 0;
                try {
                    c = std::stoull(part);
                } catch (const std::exception&) {
                    throw bcn::DataError("labels file \"" + path + "\" line " +
                                         std::to_string(i + 1) + ": bad label \"" + part + "\"");
                }
                if (c >= classes)
                    throw bcn::DataError("labels file \"" + path + "\" line " +
                                         std::to_string(i + 1) + ": label " + std::to_string(c) +
                                         " out of range");
                labels.insert(c);
            }
        }
        out.push_back(std::move(labels));
    }
    return out;
}

// ---------------------------------------------------------------------------
// train / tune share their data assembly

struct TrainCli {
    std::vector<std::string> pair_flags;  // NAME=FILE or NAME=FILE_A,FILE_B
    std::string pivot;
    std::vector<std::string> dense_flags;  // NAME=DIM
    std::string config_path;
    std::string out_path;
    std::string checkpoint_dir;
    std::size_t min_count = 5;
    std::string bow_mode = "count";
    bool lowercase = true;

    // config overrides (only applied when the flag was passed)
    std::optional<std::size_t> k, batch_size, epochs;
    std::optional<double> lambda, learning_rate, momentum;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> f, p, loss;
    std::optional<bool> shuffle;
};

void add_override_flags(CLI::App* cmd, TrainCli& t) {
    cmd->add_option("--k", t.k, "hidden dimension (overrides config)");
    cmd->add_option("--f", t.f, "encoder activation (overrides config)");
    cmd->add_option("--p", t.p, "decoder activation (overrides config)");
    cmd->add_option("--loss", t.loss, "loss kind (overrides config)");
    cmd->add_option("--lambda", t.lambda, "correlation weight (overrides config)");
    cmd->add_option("--batch-size", t.batch_size, "minibatch size (overrides config)");
    cmd->add_option("--epochs", t.epochs, "training epochs (overrides config)");
    cmd->add_option("--learning-rate", t.learning_rate, "SGD step size (overrides config)");
    cmd->add_option("--seed", t.seed, "rng seed (overrides config)");
    cmd->add_option("--momentum", t.momentum, "SGD momentum (overrides config)");
    cmd->add_flag("--shuffle,!--no-shuffle", t.shuffle, "reshuffle instances per epoch");
}

bcn::TrainConfig resolve_config(const TrainCli& t) {
    bcn::TrainConfig cfg;
    if (!t.config_path.empty()) {
        std::ifstream in(t.config_path);
        if (!in) throw bcn::DataError("cannot open config \"" + t.config_path + "\"");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        cfg = bcn::train_config_from_json(text);
    }
    if (t.k) cfg.hidden_dim = *t.k;
    if (t.f) cfg.enc_act = bcn::activation_from_string(*t.f);
    if (t.p) cfg.dec_act = bcn::activation_from_string(*t.p);
    if (t.loss) cfg.loss = bcn::loss_from_string(*t.loss);
    if (t.lambda) cfg.lambda = *t.lambda;
    if (t.batch_size) cfg.batch_size = *t.batch_size;
    if (t.epochs) cfg.epochs = *t.epochs;
    if (t.learning_rate) cfg.learning_rate = *t.learning_rate;
    if (t.seed) cfg.seed = *t.seed;
    if (t.momentum) cfg.momentum = *t.momentum;
    if (t.shuffle) cfg.shuffle = *t.shuffle;
    cfg.validate();
    return cfg;
}

struct AssembledData {
    std::vector<bcn::ViewSpec> views;  // pivot last
    std::vector<bcn::PairSet> sets;
    std::map<std::string, bcn::Vocabulary> vocabs;  // text views only
};

AssembledData assemble_training_data(const TrainCli& t) {
    if (t.pair_flags.empty()) throw UsageError("at least one --pairs NAME=FILE is required");
    if (t.pivot.empty()) throw UsageError("--pivot NAME is required");

    std::map<std::string, std::size_t> dense_dims;
    for (const std::string& flag : t.dense_flags) {
        const std::size_t eq = flag.find('=');
        if (eq == std::string::npos)
            throw UsageError("--dense expects NAME=DIM, got \"" + flag + "\"");
        dense_dims[flag.substr(0, eq)] =
            parse_size_list(flag.substr(eq + 1), "--dense")[0];
    }

    struct RawPair {
        std::string name;
        std::vector<bcn::TokenSeq> tok_a, tok_b;
        std::vector<bcn::Vector> den_a, den_b;
    };
    std::vector<RawPair> raw;
    std::vector<std::string> view_order;  // non-pivot names, first appearance
    const bool pivot_dense = dense_dims.count(t.pivot) > 0;

    for (const std::string& flag : t.pair_flags) {
        const std::size_t eq = flag.find('=');
        if (eq == std::string::npos)
            throw UsageError("--pairs expects NAME=FILE, got \"" + flag + "\"");
        RawPair rp;
        rp.name = flag.substr(0, eq);
        if (rp.name == t.pivot)
            throw UsageError("--pairs names the pivot view \"" + t.pivot +
                             "\"; pairs bind a non-pivot view to the pivot");
        const std::string files = flag.substr(eq + 1);
        const bool name_dense = dense_dims.count(rp.name) > 0;

        if (files.find(',') != std::string::npos) {
            const auto parts = split(files, ',');
            if (parts.size() != 2)
                throw UsageError("--pairs " + rp.name + ": expected FILE_A,FILE_B");
            if (name_dense)
                rp.den_a = bcn::load_dense(parts[0], dense_dims[rp.name]);
            else
                for (const std::string& line : read_lines_or_throw(parts[0]))
                    rp.tok_a.push_back(bcn::tokenize(line, t.lowercase));
            if (pivot_dense)
                rp.den_b = bcn::load_dense(parts[1], dense_dims.at(t.pivot));
            else
                for (const std::string& line : read_lines_or_throw(parts[1]))
                    rp.tok_b.push_back(bcn::tokenize(line, t.lowercase));
            const std::size_t na = name_dense ? rp.den_a.size() : rp.tok_a.size();
            const std::size_t nb = pivot_dense ? rp.den_b.size() : rp.tok_b.size();
            if (na != nb)
                throw bcn::DataError("--pairs " + rp.name + ": sides have " +
                                     std::to_string(na) + " vs " + std::to_string(nb) +
                                     " records");
        } else {
            if (name_dense || pivot_dense)
                throw UsageError("--pairs " + rp.name +
                                 ": dense views need the two-file form NAME=FEATS.tsv,PIVOT.txt");
            const bcn::ParallelCorpus corpus = bcn::load_parallel_tsv(files, t.lowercase);
            rp.tok_a = corpus.docs_a;
            rp.tok_b = corpus.docs_b;
        }
        if (std::find(view_order.begin(), view_order.end(), rp.name) == view_order.end())
            view_order.push_back(rp.name);
        raw.push_back(std::move(rp));
    }

    AssembledData data;
    // Per-view vocabularies over all of that view's documents.
    for (const std::string& name : view_order) {
        if (dense_dims.count(name)) continue;
        std::vector<bcn::TokenSeq> docs;
        for (const RawPair& rp : raw)
            if (rp.name == name) docs.insert(docs.end(), rp.tok_a.begin(), rp.tok_a.end());
        data.vocabs.emplace(name, bcn::build_vocab(docs, t.min_count));
    }
    if (!pivot_dense) {
        std::vector<bcn::TokenSeq> docs;
        for (const RawPair& rp : raw) docs.insert(docs.end(), rp.tok_b.begin(), rp.tok_b.end());
        data.vocabs.emplace(t.pivot, bcn::build_vocab(docs, t.min_count));
    }

    std::map<std::string, std::size_t> view_ids;
    for (const std::string& name : view_order) {
        bcn::ViewSpec spec;
        spec.name = name;
        spec.pivot = false;
        if (dense_dims.count(name)) {
            spec.dim = dense_dims[name];
            spec.input_kind = bcn::InputKind::DenseFeatures;
        } else {
            spec.dim = data.vocabs.at(name).size();
            spec.input_kind = bcn::InputKind::SparseBow;
        }
        view_ids[name] = data.views.size();
        data.views.push_back(std::move(spec));
    }
    bcn::ViewSpec pivot_spec;
    pivot_spec.name = t.pivot;
    pivot_spec.pivot = true;
    if (pivot_dense) {
        pivot_spec.dim = dense_dims.at(t.pivot);
        pivot_spec.input_kind = bcn::InputKind::DenseFeatures;
    } else {
        pivot_spec.dim = data.vocabs.at(t.pivot).size();
        pivot_spec.input_kind = bcn::InputKind::SparseBow;
    }
    const std::size_t pivot_id = data.views.size();
    view_ids[t.pivot] = pivot_id;
    data.views.push_back(std::move(pivot_spec));

    const bcn::BowMode mode = bcn::bow_mode_from_string(t.bow_mode);
    for (const RawPair& rp : raw) {
        bcn::PairSet set;
        set.view_a = view_ids.at(rp.name);
        set.view_b = pivot_id;
        const std::size_t n = dense_dims.count(rp.name) ? rp.den_a.size() : rp.tok_a.size();
        for (std::size_t i = 0; i < n; ++i) {
            bcn::PairedInstance inst;
            if (dense_dims.count(rp.name))
                inst.a = rp.den_a[i];
            else
                inst.a = bcn::vectorize(data.vocabs.at(rp.name), rp.tok_a[i], mode);
            if (pivot_dense)
                inst.b = rp.den_b[i];
            else
                inst.b = bcn::vectorize(data.vocabs.at(t.pivot), rp.tok_b[i], mode);
            set.items.push_back(std::move(inst));
        }
        data.sets.push_back(std::move(set));
    }
    return data;
}

void save_vocabs(const AssembledData& data, const std::string& model_path) {
    for (const auto& [name, vocab] : data.vocabs)
        bcn::save_vocab(vocab, model_path + "." + name + ".vocab");
}

json train_echo(const TrainCli& t, const bcn::TrainConfig& cfg, const char* command) {
    json j = json::parse(bcn::train_config_to_json(cfg));
    j["command"] = command;
    j["pairs"] = t.pair_flags;
    j["pivot"] = t.pivot;
    j["dense"] = t.dense_flags;
    j["min_count"] = t.min_count;
    j["bow_mode"] = t.bow_mode;
    j["lowercase"] = t.lowercase;
    if (!t.out_path.empty()) j["out"] = t.out_path;
    if (!t.checkpoint_dir.empty()) j["checkpoint_dir"] = t.checkpoint_dir;
    return j;
}

int run_train(const TrainCli& t) {
    const bcn::TrainConfig cfg = resolve_config(t);
    echo_config(train_echo(t, cfg, "train"));
    if (t.out_path.empty()) throw UsageError("train requires --out MODEL");

    const AssembledData data = assemble_training_data(t);
    bcn::CheckpointSink sink;
    if (!t.checkpoint_dir.empty()) {
        sink = [&](const bcn::Checkpoint& ck) {
            const std::string stem = t.checkpoint_dir + "/epoch_" + std::to_string(ck.epoch);
            std::ofstream model_out(stem + ".bcn", std::ios::binary | std::ios::trunc);
            if (!model_out)
                throw bcn::DataError("cannot open \"" + stem + ".bcn\" for writing");
            model_out.write(reinterpret_cast<const char*>(ck.model_bytes.data()),
                            static_cast<std::streamsize>(ck.model_bytes.size()));
            json trace;
            trace["epoch"] = ck.epoch;
            trace["objective"] = ck.trace.objective;
            trace["correlation"] = ck.trace.correlation;
            std::ofstream trace_out(stem + ".json", std::ios::trunc);
            trace_out << trace.dump(2) << "\n";
        };
    }
    const bcn::TrainResult result = bcn::train(data.sets, data.views, cfg, sink);
    bcn::save_file(result.model, t.out_path);
    save_vocabs(data, t.out_path);

    json report;
    report["command"] = "train";
    report["model"] = t.out_path;
    report["views"] = json::array();
    for (const auto& v : data.views)
        report["views"].push_back({{"name", v.name},
                                   {"dim", v.dim},
                                   {"pivot", v.pivot},
                                   {"kind", v.input_kind == bcn::InputKind::SparseBow
                                                ? "sparse-bow"
                                                : "dense-features"}});
    json per_epoch = json::array();
    for (const auto& e : result.epochs) {
        double sum = 0.0;
        for (double v : e.objective) sum += v;
        per_epoch.push_back(sum / double(e.objective.size()));
    }
    report["epoch_mean_objective"] = per_epoch;
    emit_report(report, "");
    return 0;
}

int run_tune(TrainCli& t, const std::string& grid_csv, double val_fraction, std::size_t val_k) {
    const bcn::TrainConfig cfg = resolve_config(t);
    json echo = train_echo(t, cfg, "tune");
    echo["grid"] = grid_csv;
    echo["val_fraction"] = val_fraction;
    echo["val_k"] = val_k;
    echo_config(echo);

    std::vector<double> grid;
    for (const std::string& part : split(grid_csv, ',')) {
        try {
            grid.push_back(std::stod(part));
        } catch (const std::exception&) {
            throw UsageError("--grid: bad number \"" + part + "\"");
        }
    }
    if (!(val_fraction > 0.0 && val_fraction < 1.0))
        throw UsageError("--val-fraction must lie in (0, 1)");

    const AssembledData data = assemble_training_data(t);

    // Hold out the tail of every pair set for pivot-pair validation
    // retrieval: embed the held-out non-pivot side as queries, the
    // held-out pivot side as documents, score recall@val_k.
    std::vector<bcn::PairSet> train_sets;
    std::vector<bcn::PairSet> val_sets;
    for (const bcn::PairSet& set : data.sets) {
        const std::size_t n = set.items.size();
        std::size_t n_val = static_cast<std::size_t>(val_fraction * double(n));
        if (n_val < 2) n_val = 2;
        if (n_val + 2 > n)
            throw bcn::ConfigError("pair set too small for --val-fraction " +
                                   std::to_string(val_fraction));
        bcn::PairSet tr{set.view_a, set.view_b, {}};
        bcn::PairSet va{set.view_a, set.view_b, {}};
        tr.items.assign(set.items.begin(), set.items.end() - n_val);
        va.items.assign(set.items.end() - n_val, set.items.end());
        train_sets.push_back(std::move(tr));
        val_sets.push_back(std::move(va));
    }

    auto score = [&](const bcn::ModelParams& model) {
        double total = 0.0;
        for (const bcn::PairSet& va : val_sets) {
            std::vector<bcn::Vector> queries, docs;
            for (const auto& inst : va.items) {
                queries.push_back(bcn::encode_view(model, bcn::ViewValue{va.view_a, inst.a}));
                docs.push_back(bcn::encode_view(model, bcn::ViewValue{va.view_b, inst.b}));
            }
            std::vector<std::vector<std::size_t>> rel(queries.size());
            for (std::size_t i = 0; i < rel.size(); ++i) rel[i] = {i};
            const std::size_t ks[] = {val_k};
            total += bcn::retrieve(queries, docs, rel, ks).recall[0];
        }
        return total / double(val_sets.size());
    };

    const bcn::TuneResult tuned = bcn::tune_lambda(train_sets, data.views, cfg, grid, score);

    json report;
    report["command"] = "tune";
    report["best_lambda"] = tuned.best_lambda;
    report["scores"] = json::array();
    for (const auto& s : tuned.scores)
        report["scores"].push_back({{"lambda", s.lambda}, {"score", s.score}});

    if (!t.out_path.empty()) {
        bcn::TrainConfig final_cfg = cfg;
        final_cfg.lambda = tuned.best_lambda;
        const bcn::TrainResult final_run = bcn::train(data.sets, data.views, final_cfg);
        bcn::save_file(final_run.model, t.out_path);
        save_vocabs(data, t.out_path);
        report["model"] = t.out_path;
    }
    emit_report(report, "");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bridged multi-view representation learning"};
    app.require_subcommand(1);

    // ---- build-vocab ----
    struct {
        std::vector<std::string> inputs;
        std::size_t min_count = 5;
        bool lowercase = true;
        std::string out;
    } bv;
    CLI::App* build_vocab = app.add_subcommand("build-vocab", "build a vocabulary from text");
    build_vocab->add_option("--input", bv.inputs, "text file, one document per line")
        ->required()
        ->take_all();
    build_vocab->add_option("--min-count", bv.min_count, "keep tokens appearing more than this");
    build_vocab->add_flag("--lowercase,!--no-lowercase", bv.lowercase, "lowercase tokens");
    build_vocab->add_option("--out", bv.out, "vocab file to write")->required();

    // ---- vectorize ----
    struct {
        std::string vocab, input, mode = "count", out;
        bool lowercase = true;
    } vz;
    CLI::App* vectorize = app.add_subcommand("vectorize", "bag-of-words vectors for documents");
    vectorize->add_option("--vocab", vz.vocab, "vocab file")->required();
    vectorize->add_option("--input", vz.input, "text file, one document per line")->required();
    vectorize->add_option("--mode", vz.mode, "count|binary|l2");
    vectorize->add_flag("--lowercase,!--no-lowercase", vz.lowercase, "lowercase tokens");
    vectorize->add_option("--out", vz.out, "output file, lines of pos:value pairs")->required();

    // ---- synth ----
    struct {
        std::size_t views = 3, latent = 4, n_per_pair = 1000, n_test = 200;
        std::string dims = "20,20,20";
        double noise = 0.1;
        std::uint64_t seed = 0;
        std::string out_dir;
    } sy;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic multi-view data");
    synth->add_option("--views", sy.views, "number of views (pivot is the last)");
    synth->add_option("--latent-dim", sy.latent, "shared latent dimension");
    synth->add_option("--view-dims", sy.dims, "comma-separated view dims");
    synth->add_option("--n-per-pair", sy.n_per_pair, "training pairs per non-pivot view");
    synth->add_option("--n-test", sy.n_test, "held-out aligned tuples");
    synth->add_option("--noise", sy.noise, "observation noise sigma");
    synth->add_option("--seed", sy.seed, "rng seed");
    synth->add_option("--out-dir", sy.out_dir, "directory for the generated TSV files")
        ->required();

    // ---- train ----
    TrainCli tr;
    CLI::App* train_cmd = app.add_subcommand("train", "train a bridged model");
    train_cmd->add_option("--pairs", tr.pair_flags,
                          "NAME=FILE (two-column TSV) or NAME=FILE_A,FILE_B")
        ->required()
        ->take_all();
    train_cmd->add_option("--pivot", tr.pivot, "pivot view name")->required();
    train_cmd->add_option("--dense", tr.dense_flags, "NAME=DIM marks a dense-feature view")
        ->take_all();
    train_cmd->add_option("--config", tr.config_path, "JSON training config");
    train_cmd->add_option("--min-count", tr.min_count, "vocabulary threshold for text views");
    train_cmd->add_option("--bow-mode", tr.bow_mode, "count|binary|l2");
    train_cmd->add_flag("--lowercase,!--no-lowercase", tr.lowercase, "lowercase tokens");
    train_cmd->add_option("--out", tr.out_path, "model file to write");
    train_cmd->add_option("--checkpoint-dir", tr.checkpoint_dir,
                          "write per-epoch model + trace files here");
    add_override_flags(train_cmd, tr);

    // ---- tune ----
    TrainCli tu;
    std::string tune_grid;
    double tune_val_fraction = 0.1;
    std::size_t tune_val_k = 1;
    CLI::App* tune_cmd = app.add_subcommand("tune", "grid-search lambda on validation retrieval");
    tune_cmd->add_option("--pairs", tu.pair_flags,
                         "NAME=FILE (two-column TSV) or NAME=FILE_A,FILE_B")
        ->required()
        ->take_all();
    tune_cmd->add_option("--pivot", tu.pivot, "pivot view name")->required();
    tune_cmd->add_option("--dense", tu.dense_flags, "NAME=DIM marks a dense-feature view")
        ->take_all();
    tune_cmd->add_option("--config", tu.config_path, "JSON training config");
    tune_cmd->add_option("--grid", tune_grid, "comma-separated lambda grid")->required();
    tune_cmd->add_option("--val-fraction", tune_val_fraction,
                         "tail fraction of each pair set held out for validation");
    tune_cmd->add_option("--val-k", tune_val_k, "recall@k used for the validation score");
    tune_cmd->add_option("--min-count", tu.min_count, "vocabulary threshold for text views");
    tune_cmd->add_option("--bow-mode", tu.bow_mode, "count|binary|l2");
    tune_cmd->add_flag("--lowercase,!--no-lowercase", tu.lowercase, "lowercase tokens");
    tune_cmd->add_option("--out", tu.out_path, "retrain on all data at the best lambda");
    add_override_flags(tune_cmd, tu);

    // ---- encode ----
    struct {
        std::string model, view, input, vocab, mode = "count", out;
        bool dense = false, lowercase = true;
    } en;
    CLI::App* encode = app.add_subcommand("encode", "embed documents into the common space");
    encode->add_option("--model", en.model, "model file")->required();
    encode->add_option("--view", en.view, "view name of the inputs")->required();
    encode->add_option("--input", en.input, "text lines or dense TSV")->required();
    encode->add_option("--vocab", en.vocab, "vocab file (text views)");
    encode->add_option("--mode", en.mode, "count|binary|l2");
    encode->add_flag("--dense", en.dense, "input is a dense feature TSV");
    encode->add_flag("--lowercase,!--no-lowercase", en.lowercase, "lowercase tokens");
    encode->add_option("--out", en.out, "embeddings TSV to write")->required();

    // ---- nn ----
    struct {
        std::string model, query_view, target_view, token, query_vocab, target_vocab, out;
        std::size_t top = 10;
    } nn;
    CLI::App* nn_cmd = app.add_subcommand("nn", "nearest words across views");
    nn_cmd->add_option("--model", nn.model, "model file")->required();
    nn_cmd->add_option("--query-view", nn.query_view, "view of the query token")->required();
    nn_cmd->add_option("--target-view", nn.target_view, "view to search")->required();
    nn_cmd->add_option("--token", nn.token, "query token")->required();
    nn_cmd->add_option("--query-vocab", nn.query_vocab, "vocab of the query view")->required();
    nn_cmd->add_option("--target-vocab", nn.target_vocab, "vocab of the target view")
        ->required();
    nn_cmd->add_option("--top", nn.top, "neighbors to return");
    nn_cmd->add_option("--out", nn.out, "write the JSON report here instead of stdout");

    // ---- retrieve ----
    struct {
        std::string model, queries, docs, relevance, ks = "1,5,10";
        std::string query_view, doc_view, query_vocab, doc_vocab, mode = "count", out;
        bool per_item = false, lowercase = true;
    } re;
    CLI::App* retrieve_cmd = app.add_subcommand("retrieve", "rank documents for queries");
    retrieve_cmd->add_option("--model", re.model, "model file")->required();
    retrieve_cmd->add_option("--queries", re.queries, "query inputs")->required();
    retrieve_cmd->add_option("--docs", re.docs, "document inputs")->required();
    retrieve_cmd->add_option("--relevance", re.relevance, "TSV query_id<TAB>doc_id")->required();
    retrieve_cmd->add_option("--k", re.ks, "comma-separated recall cutoffs");
    retrieve_cmd->add_option("--query-view", re.query_view,
                             "view of the queries (omit if inputs are embeddings)");
    retrieve_cmd->add_option("--doc-view", re.doc_view,
                             "view of the documents (omit if inputs are embeddings)");
    retrieve_cmd->add_option("--query-vocab", re.query_vocab, "vocab for text queries");
    retrieve_cmd->add_option("--doc-vocab", re.doc_vocab, "vocab for text documents");
    retrieve_cmd->add_option("--mode", re.mode, "count|binary|l2");
    retrieve_cmd->add_flag("--per-item", re.per_item, "per-relevant-item recall variant");
    retrieve_cmd->add_flag("--lowercase,!--no-lowercase", re.lowercase, "lowercase tokens");
    retrieve_cmd->add_option("--out", re.out, "write the JSON report here instead of stdout");

    // ---- pipeline-retrieve ----
    struct {
        std::string model_ab, model_bc, view_a, view_b_ab, view_b_bc, view_c;
        std::string queries, bridge, docs, relevance, ks = "1,5,10";
        std::string query_vocab, bridge_vocab, doc_vocab, mode = "count", out;
        bool per_item = false, lowercase = true;
    } pr;
    CLI::App* pipeline = app.add_subcommand("pipeline-retrieve",
                                            "two-model retrieval through a bridge view");
    pipeline->add_option("--model-ab", pr.model_ab, "first model (query/bridge views)")
        ->required();
    pipeline->add_option("--model-bc", pr.model_bc, "second model (bridge/doc views)")
        ->required();
    pipeline->add_option("--view-a", pr.view_a, "query view name in the first model")
        ->required();
    pipeline->add_option("--view-b-ab", pr.view_b_ab, "bridge view name in the first model")
        ->required();
    pipeline->add_option("--view-b-bc", pr.view_b_bc, "bridge view name in the second model")
        ->required();
    pipeline->add_option("--view-c", pr.view_c, "document view name in the second model")
        ->required();
    pipeline->add_option("--queries", pr.queries, "query inputs (view a)")->required();
    pipeline->add_option("--bridge", pr.bridge, "bridge documents (view b)")->required();
    pipeline->add_option("--docs", pr.docs, "final documents (view c)")->required();
    pipeline->add_option("--relevance", pr.relevance, "TSV query_id<TAB>doc_id")->required();
    pipeline->add_option("--k", pr.ks, "comma-separated recall cutoffs");
    pipeline->add_option("--query-vocab", pr.query_vocab, "vocab for text queries");
    pipeline->add_option("--bridge-vocab", pr.bridge_vocab, "vocab for text bridge docs");
    pipeline->add_option("--doc-vocab", pr.doc_vocab, "vocab for text documents");
    pipeline->add_option("--mode", pr.mode, "count|binary|l2");
    pipeline->add_flag("--per-item", pr.per_item, "per-relevant-item recall variant");
    pipeline->add_flag("--lowercase,!--no-lowercase", pr.lowercase, "lowercase tokens");
    pipeline->add_option("--out", pr.out, "write the JSON report here instead of stdout");

    // ---- classify ----
    struct {
        std::string model, train_view, train_docs, train_labels;
        std::string test_view, test_docs, test_labels;
        std::string train_vocab, test_vocab, mode = "count", out;
        std::size_t classes = 0, epochs = 10;
        std::uint64_t seed = 0;
        bool lowercase = true;
    } cl;
    CLI::App* classify_cmd =
        app.add_subcommand("classify", "cross-view transfer classification");
    classify_cmd->add_option("--model", cl.model, "model file")->required();
    classify_cmd->add_option("--train-view", cl.train_view, "source view name")->required();
    classify_cmd->add_option("--train-docs", cl.train_docs, "source documents")->required();
    classify_cmd->add_option("--train-labels", cl.train_labels,
                             "comma-separated class ids per line")
        ->required();
    classify_cmd->add_option("--test-view", cl.test_view, "target view name")->required();
    classify_cmd->add_option("--test-docs", cl.test_docs, "target documents")->required();
    classify_cmd->add_option("--test-labels", cl.test_labels, "gold labels per line")
        ->required();
    classify_cmd->add_option("--classes", cl.classes, "number of classes")->required();
    classify_cmd->add_option("--epochs", cl.epochs, "perceptron epochs");
    classify_cmd->add_option("--seed", cl.seed, "perceptron shuffle seed");
    classify_cmd->add_option("--train-vocab", cl.train_vocab, "vocab for text source docs");
    classify_cmd->add_option("--test-vocab", cl.test_vocab, "vocab for text target docs");
    classify_cmd->add_option("--mode", cl.mode, "count|binary|l2");
    classify_cmd->add_flag("--lowercase,!--no-lowercase", cl.lowercase, "lowercase tokens");
    classify_cmd->add_option("--out", cl.out, "write the JSON report here instead of stdout");

    // ---- gradcheck ----
    struct {
        std::size_t k = 4, batch = 4;
        std::string dims = "5,6,7", f = "sigmoid", p = "sigmoid", loss = "squared-error", out;
        double lambda = 2.0, eps = 1e-6;
        std::uint64_t seed = 1;
    } gc;
    CLI::App* gradcheck_cmd =
        app.add_subcommand("gradcheck", "finite-difference check of the analytic gradients");
    gradcheck_cmd->add_option("--k", gc.k, "hidden dimension");
    gradcheck_cmd->add_option("--dims", gc.dims, "comma-separated view dims (pivot last)");
    gradcheck_cmd->add_option("--lambda", gc.lambda, "correlation weight");
    gradcheck_cmd->add_option("--batch", gc.batch, "instances in the probe batch");
    gradcheck_cmd->add_option("--f", gc.f, "encoder activation");
    gradcheck_cmd->add_option("--p", gc.p, "decoder activation");
    gradcheck_cmd->add_option("--loss", gc.loss, "loss kind");
    gradcheck_cmd->add_option("--eps", gc.eps, "finite-difference step");
    gradcheck_cmd->add_option("--seed", gc.seed, "rng seed");
    gradcheck_cmd->add_option("--out", gc.out, "write the JSON report here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (build_vocab->parsed()) {
            echo_config({{"command", "build-vocab"},
                         {"input", bv.inputs},
                         {"min_count", bv.min_count},
                         {"lowercase", bv.lowercase},
                         {"out", bv.out}});
            std::vector<bcn::TokenSeq> docs;
            for (const std::string& path : bv.inputs)
                for (const std::string& line : read_lines_or_throw(path))
                    docs.push_back(bcn::tokenize(line, bv.lowercase));
            const bcn::Vocabulary vocab = bcn::build_vocab(docs, bv.min_count);
            bcn::save_vocab(vocab, bv.out);
            emit_report({{"command", "build-vocab"}, {"tokens", vocab.size()}, {"out", bv.out}},
                        "");
        } else if (vectorize->parsed()) {
            echo_config({{"command", "vectorize"},
                         {"vocab", vz.vocab},
                         {"input", vz.input},
                         {"mode", vz.mode},
                         {"lowercase", vz.lowercase},
                         {"out", vz.out}});
            const bcn::Vocabulary vocab = bcn::load_vocab(vz.vocab);
            const bcn::BowMode mode = bcn::bow_mode_from_string(vz.mode);
            std::ofstream out(vz.out, std::ios::trunc);
            if (!out) throw bcn::DataError("cannot open \"" + vz.out + "\" for writing");
            out.precision(17);
            std::size_t n = 0;
            for (const std::string& line : read_lines_or_throw(vz.input)) {
                const bcn::SparseVec v =
                    bcn::vectorize(vocab, bcn::tokenize(line, vz.lowercase), mode);
                for (std::size_t i = 0; i < v.entries.size(); ++i) {
                    if (i) out << ' ';
                    out << v.entries[i].first << ':' << v.entries[i].second;
                }
                out << '\n';
                ++n;
            }
            emit_report({{"command", "vectorize"}, {"docs", n}, {"dim", vocab.size()}}, "");
        } else if (synth->parsed()) {
            echo_config({{"command", "synth"},
                         {"views", sy.views},
                         {"latent_dim", sy.latent},
                         {"view_dims", sy.dims},
                         {"n_per_pair", sy.n_per_pair},
                         {"n_test", sy.n_test},
                         {"noise", sy.noise},
                         {"seed", sy.seed},
                         {"out_dir", sy.out_dir}});
            const auto dims = parse_size_list(sy.dims, "--view-dims");
            bcn::Rng rng(sy.seed);
            const bcn::SynthDataset data =
                bcn::synth_multiview(rng, sy.views, sy.latent, dims, sy.n_per_pair, sy.n_test,
                                     sy.noise);
            json files = json::array();
            for (std::size_t j = 0; j < data.sets.size(); ++j) {
                std::vector<bcn::Vector> a, b;
                for (const auto& inst : data.sets[j].items) {
                    a.push_back(std::get<bcn::Vector>(inst.a));
                    b.push_back(std::get<bcn::Vector>(inst.b));
                }
                const std::string fa =
                    sy.out_dir + "/pair" + std::to_string(j) + "_view" + std::to_string(j) +
                    ".tsv";
                const std::string fb =
                    sy.out_dir + "/pair" + std::to_string(j) + "_pivot.tsv";
                bcn::save_dense(a, fa);
                bcn::save_dense(b, fb);
                files.push_back(fa);
                files.push_back(fb);
            }
            for (std::size_t v = 0; v < sy.views; ++v) {
                std::vector<bcn::Vector> rows;
                for (const auto& tuple : data.test) rows.push_back(tuple[v]);
                const std::string f = sy.out_dir + "/test_view" + std::to_string(v) + ".tsv";
                bcn::save_dense(rows, f);
                files.push_back(f);
            }
            {
                std::ofstream rel(sy.out_dir + "/relevance.tsv", std::ios::trunc);
                if (!rel)
                    throw bcn::DataError("cannot open \"" + sy.out_dir +
                                         "/relevance.tsv\" for writing");
                for (std::size_t i = 0; i < data.test.size(); ++i)
                    rel << i << '\t' << i << '\n';
                files.push_back(sy.out_dir + "/relevance.tsv");
            }
            emit_report({{"command", "synth"}, {"files", files}}, "");
        } else if (train_cmd->parsed()) {
            return run_train(tr);
        } else if (tune_cmd->parsed()) {
            return run_tune(tu, tune_grid, tune_val_fraction, tune_val_k);
        } else if (encode->parsed()) {
            echo_config({{"command", "encode"},
                         {"model", en.model},
                         {"view", en.view},
                         {"input", en.input},
                         {"vocab", en.vocab},
                         {"mode", en.mode},
                         {"dense", en.dense},
                         {"lowercase", en.lowercase},
                         {"out", en.out}});
            const bcn::ModelParams model = bcn::load_file(en.model);
            const std::size_t view = model.view_index(en.view);
            const auto docs = load_view_inputs(en.input, en.dense, model.views[view].dim,
                                               en.vocab, bcn::bow_mode_from_string(en.mode),
                                               en.lowercase);
            bcn::save_dense(encode_all(model, view, docs), en.out);
            emit_report({{"command", "encode"},
                         {"docs", docs.size()},
                         {"k", model.hidden_dim},
                         {"out", en.out}},
                        "");
        } else if (nn_cmd->parsed()) {
            echo_config({{"command", "nn"},
                         {"model", nn.model},
                         {"query_view", nn.query_view},
                         {"target_view", nn.target_view},
                         {"token", nn.token},
                         {"query_vocab", nn.query_vocab},
                         {"target_vocab", nn.target_vocab},
                         {"top", nn.top}});
            const bcn::ModelParams model = bcn::load_file(nn.model);
            const auto ranked = bcn::nearest_words(
                model, model.view_index(nn.query_view), nn.token,
                model.view_index(nn.target_view), bcn::load_vocab(nn.query_vocab),
                bcn::load_vocab(nn.target_vocab), nn.top);
            json neighbors = json::array();
            for (const auto& r : ranked)
                neighbors.push_back({{"token", r.token}, {"distance", r.distance}});
            emit_report({{"command", "nn"}, {"token", nn.token}, {"neighbors", neighbors}},
                        nn.out);
        } else if (retrieve_cmd->parsed()) {
            echo_config({{"command", "retrieve"},
                         {"model", re.model},
                         {"queries", re.queries},
                         {"docs", re.docs},
                         {"relevance", re.relevance},
                         {"k", re.ks},
                         {"query_view", re.query_view},
                         {"doc_view", re.doc_view},
                         {"mode", re.mode},
                         {"per_item", re.per_item},
                         {"lowercase", re.lowercase}});
            const bcn::ModelParams model = bcn::load_file(re.model);
            const bcn::BowMode mode = bcn::bow_mode_from_string(re.mode);
            auto embed_side = [&](const std::string& path, const std::string& view_name,
                                  const std::string& vocab) {
                if (view_name.empty())  // precomputed embeddings
                    return bcn::load_dense(path, model.hidden_dim);
                const std::size_t view = model.view_index(view_name);
                const bool dense = model.views[view].input_kind == bcn::InputKind::DenseFeatures;
                return encode_all(model, view,
                                  load_view_inputs(path, dense, model.views[view].dim, vocab,
                                                   mode, re.lowercase));
            };
            const auto queries = embed_side(re.queries, re.query_view, re.query_vocab);
            const auto docs = embed_side(re.docs, re.doc_view, re.doc_vocab);
            const auto rel = bcn::load_relevance(re.relevance, queries.size(), docs.size());
            const auto ks = parse_size_list(re.ks, "--k");
            const auto variant = re.per_item ? bcn::RecallVariant::PerRelevantItem
                                             : bcn::RecallVariant::AtLeastOne;
            emit_report(recall_report(bcn::retrieve(queries, docs, rel, ks, variant), variant),
                        re.out);
        } else if (pipeline->parsed()) {
            echo_config({{"command", "pipeline-retrieve"},
                         {"model_ab", pr.model_ab},
                         {"model_bc", pr.model_bc},
                         {"view_a", pr.view_a},
                         {"view_b_ab", pr.view_b_ab},
                         {"view_b_bc", pr.view_b_bc},
                         {"view_c", pr.view_c},
                         {"queries", pr.queries},
                         {"bridge", pr.bridge},
                         {"docs", pr.docs},
                         {"relevance", pr.relevance},
                         {"k", pr.ks},
                         {"per_item", pr.per_item}});
            const bcn::ModelParams model_ab = bcn::load_file(pr.model_ab);
            const bcn::ModelParams model_bc = bcn::load_file(pr.model_bc);
            const bcn::BowMode mode = bcn::bow_mode_from_string(pr.mode);
            auto inputs = [&](const bcn::ModelParams& model, const std::string& view_name,
                              const std::string& path, const std::string& vocab) {
                const std::size_t view = model.view_index(view_name);
                const bool dense = model.views[view].input_kind == bcn::InputKind::DenseFeatures;
                return load_view_inputs(path, dense, model.views[view].dim, vocab, mode,
                                        pr.lowercase);
            };
            const auto queries = inputs(model_ab, pr.view_a, pr.queries, pr.query_vocab);
            const auto bridge = inputs(model_ab, pr.view_b_ab, pr.bridge, pr.bridge_vocab);
            const auto docs = inputs(model_bc, pr.view_c, pr.docs, pr.doc_vocab);
            const auto rel = bcn::load_relevance(pr.relevance, queries.size(), docs.size());
            const auto ks = parse_size_list(pr.ks, "--k");
            const auto variant = pr.per_item ? bcn::RecallVariant::PerRelevantItem
                                             : bcn::RecallVariant::AtLeastOne;
            const bcn::RetrievalReport report = bcn::pipeline_retrieve(
                model_ab, model_ab.view_index(pr.view_a), model_ab.view_index(pr.view_b_ab),
                model_bc, model_bc.view_index(pr.view_b_bc), model_bc.view_index(pr.view_c),
                queries, bridge, docs, rel, ks, variant);
            emit_report(recall_report(report, variant), pr.out);
        } else if (classify_cmd->parsed()) {
            echo_config({{"command", "classify"},
                         {"model", cl.model},
                         {"train_view", cl.train_view},
                         {"train_docs", cl.train_docs},
                         {"train_labels", cl.train_labels},
                         {"test_view", cl.test_view},
                         {"test_docs", cl.test_docs},
                         {"test_labels", cl.test_labels},
                         {"classes", cl.classes},
                         {"epochs", cl.epochs},
                         {"seed", cl.seed},
                         {"mode", cl.mode}});
            const bcn::ModelParams model = bcn::load_file(cl.model);
            const bcn::BowMode mode = bcn::bow_mode_from_string(cl.mode);
            auto docs_of = [&](const std::string& view_name, const std::string& path,
                               const std::string& vocab, const std::string& labels_path) {
                const std::size_t view = model.view_index(view_name);
                const bool dense = model.views[view].input_kind == bcn::InputKind::DenseFeatures;
                auto raw = load_view_inputs(path, dense, model.views[view].dim, vocab, mode,
                                            cl.lowercase);
                auto labels = load_labels(labels_path, cl.classes);
                if (labels.size() != raw.size())
                    throw bcn::DataError("docs and labels disagree: " +
                                         std::to_string(raw.size()) + " vs " +
                                         std::to_string(labels.size()));
                std::vector<bcn::LabeledDoc> out;
                for (std::size_t i = 0; i < raw.size(); ++i)
                    out.push_back({std::move(raw[i]), std::move(labels[i])});
                return out;
            };
            const auto source = docs_of(cl.train_view, cl.train_docs, cl.train_vocab,
                                        cl.train_labels);
            const auto target = docs_of(cl.test_view, cl.test_docs, cl.test_vocab,
                                        cl.test_labels);
            bcn::Rng rng(cl.seed);
            const bcn::F1Report report = bcn::cross_view_transfer(
                model, source, model.view_index(cl.train_view), target,
                model.view_index(cl.test_view), cl.classes, cl.epochs, rng);
            emit_report({{"metric", "f1"},
                         {"per_class", report.per_class},
                         {"mean", report.mean},
                         {"counts",
                          {{"train", source.size()}, {"test", target.size()}}}},
                        cl.out);
        } else if (gradcheck_cmd->parsed()) {
            echo_config({{"command", "gradcheck"},
                         {"k", gc.k},
                         {"dims", gc.dims},
                         {"lambda", gc.lambda},
                         {"batch", gc.batch},
                         {"f", gc.f},
                         {"p", gc.p},
                         {"loss", gc.loss},
                         {"eps", gc.eps},
                         {"seed", gc.seed}});
            const auto dims = parse_size_list(gc.dims, "--dims");
            if (dims.size() < 2) throw UsageError("--dims needs at least two views");
            std::vector<bcn::ViewSpec> views;
            for (std::size_t j = 0; j < dims.size(); ++j)
                views.push_back({"view" + std::to_string(j), dims[j], j + 1 == dims.size(),
                                 bcn::InputKind::DenseFeatures});
            const bcn::LossKind loss = bcn::loss_from_string(gc.loss);
            bcn::Rng rng(gc.seed);
            const bcn::ModelParams model =
                bcn::init_model(rng, gc.k, views, bcn::activation_from_string(gc.f),
                                bcn::activation_from_string(gc.p));
            std::vector<bcn::PairedInstance> items;
            for (std::size_t i = 0; i < gc.batch; ++i) {
                bcn::Vector a(dims[0]), b(dims.back());
                for (auto& x : a)
                    x = loss == bcn::LossKind::BinaryCrossEntropy ? rng.uniform() : rng.normal();
                for (auto& x : b)
                    x = loss == bcn::LossKind::BinaryCrossEntropy ? rng.uniform() : rng.normal();
                items.push_back({std::move(a), std::move(b)});
            }
            bcn::Minibatch batch;
            batch.view_a = 0;
            batch.view_b = dims.size() - 1;
            for (const auto& inst : items) batch.items.push_back(&inst);
            const bcn::GradCheckReport report =
                bcn::grad_check(model, batch, gc.lambda, loss, gc.eps);
            std::cerr << "max relative error: " << report.max_rel_error << " (tensor "
                      << report.tensor << ", index " << report.index << ")\n";
            emit_report({{"command", "gradcheck"},
                         {"max_rel_error", report.max_rel_error},
                         {"tensor", report.tensor},
                         {"index", report.index},
                         {"analytic", report.analytic},
                         {"numeric", report.numeric}},
                        gc.out);
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const bcn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
