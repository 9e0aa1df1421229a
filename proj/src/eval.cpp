#include "bcn/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bcn/errors.hpp"

namespace bcn {

PerceptronModel train_perceptron(std::span<const LabeledEmbedding> train, std::size_t classes,
                                 std::size_t epochs, Rng& rng) {
    if (train.empty()) throw ContractError("train_perceptron needs a nonempty training set");
    const std::size_t dim = train[0].embedding.size();
    for (const LabeledEmbedding& ex : train) {
        if (ex.embedding.size() != dim)
            throw ContractError("training embeddings must share one dimension");
        for (std::size_t c : ex.labels)
            if (c >= classes)
                throw ContractError("label " + std::to_string(c) + " out of range (classes=" +
                                    std::to_string(classes) + ")");
    }

    std::vector<Vector> w(classes, Vector(dim, 0.0));
    Vector b(classes, 0.0);
    std::vector<Vector> sum_w(classes, Vector(dim, 0.0));
    Vector sum_b(classes, 0.0);
    std::size_t steps = 0;

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t idx : order) {
            const LabeledEmbedding& ex = train[idx];
            for (std::size_t c = 0; c < classes; ++c) {
                const double y = ex.labels.count(c) ? 1.0 : -1.0;
                double score = b[c];
                for (std::size_t j = 0; j < dim; ++j) score += w[c][j] * ex.embedding[j];
                if (y * score <= 0.0) {
                    for (std::size_t j = 0; j < dim; ++j) w[c][j] += y * ex.embedding[j];
                    b[c] += y;
                }
            }
            // Average over every step, including steps without a mistake.
            for (std::size_t c = 0; c < classes; ++c) {
                for (std::size_t j = 0; j < dim; ++j) sum_w[c][j] += w[c][j];
                sum_b[c] += b[c];
            }
            ++steps;
        }
    }

    PerceptronModel model;
    model.classes = classes;
    model.dim = dim;
    model.epochs_trained = epochs;
    model.avg_w.assign(classes, Vector(dim, 0.0));
    model.avg_b.assign(classes, 0.0);
    if (steps > 0) {
        const double inv = 1.0 / static_cast<double>(steps);
        for (std::size_t c = 0; c < classes; ++c) {
            for (std::size_t j = 0; j < dim; ++j) model.avg_w[c][j] = sum_w[c][j] * inv;
            model.avg_b[c] = sum_b[c] * inv;
        }
    }
    return model;
}

LabelSet classify(const PerceptronModel& model, const Vector& x) {
    if (x.size() != model.dim)
        throw ContractError("classify input dim " + std::to_string(x.size()) +
                            " does not match perceptron dim " + std::to_string(model.dim));
    LabelSet out;
    for (std::size_t c = 0; c < model.classes; ++c) {
        double score = model.avg_b[c];
        for (std::size_t j = 0; j < model.dim; ++j) score += model.avg_w[c][j] * x[j];
        if (score > 0.0) out.insert(c);
    }
    return out;
}

F1Report f1_report(std::span<const LabelSet> predictions, std::span<const LabelSet> gold,
                   std::size_t classes) {
    if (predictions.size() != gold.size())
        throw ContractError("f1_report needs equal-length prediction and gold sequences");
    F1Report report;
    report.per_class.assign(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool p = predictions[i].count(c) > 0;
            const bool g = gold[i].count(c) > 0;
            tp += p && g;
            fp += p && !g;
            fn += !p && g;
        }
        const double prec = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        report.per_class[c] = (prec + rec > 0.0) ? 2.0 * prec * rec / (prec + rec) : 0.0;
    }
    report.mean = classes ? std::accumulate(report.per_class.begin(), report.per_class.end(), 0.0) /
                                static_cast<double>(classes)
                          : 0.0;
    return report;
}

F1Report cross_view_transfer(const ModelParams& model, std::span<const LabeledDoc> source,
                             std::size_t source_view, std::span<const LabeledDoc> target,
                             std::size_t target_view, std::size_t classes, std::size_t epochs,
                             Rng& rng) {
    std::vector<LabeledEmbedding> train;
    train.reserve(source.size());
    for (const LabeledDoc& doc : source)
        train.push_back({encode_view(model, ViewValue{source_view, doc.data}), doc.labels});
    const PerceptronModel clf = train_perceptron(train, classes, epochs, rng);

    std::vector<LabelSet> predictions, golds;
    predictions.reserve(target.size());
    golds.reserve(target.size());
    for (const LabeledDoc& doc : target) {
        predictions.push_back(classify(clf, encode_view(model, ViewValue{target_view, doc.data})));
        golds.push_back(doc.labels);
    }
    return f1_report(predictions, golds, classes);
}

// ---------------------------------------------------------------------------
// Retrieval

namespace {

// Indices of the documents nearest to q, ascending distance, ties by index.
std::vector<std::size_t> rank_documents(const Vector& q, std::span<const Vector> documents) {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(documents.size());
    for (std::size_t d = 0; d < documents.size(); ++d)
        scored.emplace_back(euclidean(q, documents[d]), d);
    std::sort(scored.begin(), scored.end());
    std::vector<std::size_t> order;
    order.reserve(scored.size());
    for (const auto& [dist, idx] : scored) order.push_back(idx);
    return order;
}

}  // namespace

RetrievalReport retrieve(std::span<const Vector> queries, std::span<const Vector> documents,
                         const std::vector<std::vector<std::size_t>>& relevance,
                         std::span<const std::size_t> ks, RecallVariant variant) {
    if (queries.empty() || documents.empty())
        throw ContractError("retrieve needs nonempty query and document sets");
    if (relevance.size() != queries.size())
        throw ContractError("relevance must list one entry per query");
    if (ks.empty()) throw ContractError("retrieve needs at least one k");

    RetrievalReport report;
    report.ks.assign(ks.begin(), ks.end());
    std::vector<double> hits(ks.size(), 0.0);

    for (std::size_t q = 0; q < queries.size(); ++q) {
        if (relevance[q].empty()) {
            ++report.excluded;
            continue;
        }
        for (std::size_t d : relevance[q])
            if (d >= documents.size())
                throw ContractError("relevance for query " + std::to_string(q) +
                                    " names unknown document " + std::to_string(d));
        ++report.queries;
        const std::vector<std::size_t> order = rank_documents(queries[q], documents);
        for (std::size_t ki = 0; ki < ks.size(); ++ki) {
            const std::size_t k = std::min(ks[ki], order.size());
            std::size_t found = 0;
            for (std::size_t r = 0; r < k; ++r)
                found += std::count(relevance[q].begin(), relevance[q].end(), order[r]) > 0;
            if (variant == RecallVariant::AtLeastOne)
                hits[ki] += found > 0 ? 1.0 : 0.0;
            else
                hits[ki] += static_cast<double>(found) / static_cast<double>(relevance[q].size());
        }
    }
    report.recall.assign(ks.size(), 0.0);
    if (report.queries > 0)
        for (std::size_t ki = 0; ki < ks.size(); ++ki)
            report.recall[ki] = hits[ki] / static_cast<double>(report.queries);
    return report;
}

std::vector<std::vector<std::size_t>> load_relevance(const std::string& path,
                                                     std::size_t n_queries, std::size_t n_docs) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    std::vector<std::vector<std::size_t>> rel(n_queries);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("relevance file \"" + path + "\" line " + std::to_string(lineno) +
                            ": expected query_id<TAB>doc_id");
        std::size_t qid = 0, did = 0;
        const char* end = line.data() + line.size();
        if (std::from_chars(line.data(), line.data() + tab, qid).ec != std::errc{} ||
            std::from_chars(line.data() + tab + 1, end, did).ec != std::errc{})
            throw DataError("relevance file \"" + path + "\" line " + std::to_string(lineno) +
                            ": bad ids");
        if (qid >= n_queries)
            throw DataError("relevance file \"" + path + "\" line " + std::to_string(lineno) +
                            ": query id " + std::to_string(qid) + " out of range");
        if (did >= n_docs)
            throw DataError("relevance file \"" + path + "\" line " + std::to_string(lineno) +
                            ": doc id " + std::to_string(did) + " out of range");
        rel[qid].push_back(did);
    }
    return rel;
}

std::vector<RankedToken> nearest_words(const ModelParams& model, std::size_t query_view,
                                       const std::string& query_token, std::size_t target_view,
                                       const Vocabulary& query_vocab,
                                       const Vocabulary& target_vocab, std::size_t top_n) {
    if (query_view >= model.view_count() || target_view >= model.view_count())
        throw ContractError("nearest_words: unknown view id");
    if (query_vocab.size() != model.views[query_view].dim)
        throw ContractError("query vocabulary size does not match the query view dim");
    if (target_vocab.size() != model.views[target_view].dim)
        throw ContractError("target vocabulary size does not match the target view dim");
    const auto it = query_vocab.index.find(query_token);
    if (it == query_vocab.index.end())
        throw DataError("token \"" + query_token + "\" is not in the query vocabulary");

    const Vector q = encode_view(
        model, ViewValue{query_view, make_sparse(query_vocab.size(), {{it->second, 1.0}})});

    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(target_vocab.size());
    for (std::size_t t = 0; t < target_vocab.size(); ++t) {
        const Vector h = encode_view(
            model, ViewValue{target_view, make_sparse(target_vocab.size(), {{t, 1.0}})});
        scored.emplace_back(euclidean(q, h), t);
    }
    std::sort(scored.begin(), scored.end());
    std::vector<RankedToken> out;
    for (std::size_t i = 0; i < std::min(top_n, scored.size()); ++i)
        out.push_back({target_vocab.tokens[scored[i].second], scored[i].first});
    return out;
}

RetrievalReport pipeline_retrieve(const ModelParams& model_ab, std::size_t view_a,
                                  std::size_t view_b_in_ab, const ModelParams& model_bc,
                                  std::size_t view_b_in_bc, std::size_t view_c,
                                  std::span<const ViewVector> queries,
                                  std::span<const ViewVector> bridge,
                                  std::span<const ViewVector> docs,
                                  const std::vector<std::vector<std::size_t>>& relevance,
                                  std::span<const std::size_t> ks, RecallVariant variant) {
    if (bridge.empty()) throw ContractError("pipeline_retrieve needs bridge documents");
    if (model_ab.views[view_b_in_ab].dim != model_bc.views[view_b_in_bc].dim)
        throw ContractError("bridge view dims disagree across the two models: " +
                            std::to_string(model_ab.views[view_b_in_ab].dim) + " vs " +
                            std::to_string(model_bc.views[view_b_in_bc].dim));

    // Bridge docs embedded in both spaces; final docs in the second space.
    std::vector<Vector> bridge_ab, bridge_bc;
    bridge_ab.reserve(bridge.size());
    bridge_bc.reserve(bridge.size());
    for (const ViewVector& b : bridge) {
        bridge_ab.push_back(encode_view(model_ab, ViewValue{view_b_in_ab, b}));
        bridge_bc.push_back(encode_view(model_bc, ViewValue{view_b_in_bc, b}));
    }
    std::vector<Vector> docs_bc;
    docs_bc.reserve(docs.size());
    for (const ViewVector& d : docs) docs_bc.push_back(encode_view(model_bc, ViewValue{view_c, d}));

    std::vector<Vector> hops;
    hops.reserve(queries.size());
    for (const ViewVector& q : queries) {
        const Vector qh = encode_view(model_ab, ViewValue{view_a, q});
        std::size_t best = 0;
        double best_dist = euclidean(qh, bridge_ab[0]);
        for (std::size_t b = 1; b < bridge_ab.size(); ++b) {
            const double dist = euclidean(qh, bridge_ab[b]);
            if (dist < best_dist) {
                best_dist = dist;
                best = b;
            }
        }
        hops.push_back(bridge_bc[best]);
    }
    return retrieve(hops, docs_bc, relevance, ks, variant);
}

double dataset_correlation(const ModelParams& model, const PairSet& pairs) {
    if (pairs.items.size() < 2)
        throw ContractError("dataset_correlation needs at least 2 pairs");
    std::vector<Vector> ha, hb;
    ha.reserve(pairs.items.size());
    hb.reserve(pairs.items.size());
    for (const PairedInstance& inst : pairs.items) {
        ha.push_back(encode_view(model, ViewValue{pairs.view_a, inst.a}));
        hb.push_back(encode_view(model, ViewValue{pairs.view_b, inst.b}));
    }
    return correlation(ha, hb);
}

}  // namespace bcn
