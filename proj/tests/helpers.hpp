#pragma once

// Shared builders for the test suites: random dense models, random
// batches and conversion into the independent two-view reference.

#include <string>
#include <vector>

#include "bcn/objective.hpp"
#include "corrnet_ref.hpp"

namespace testhelp {

// Keeps the instances alive next to the Minibatch that points at them.
struct OwnedBatch {
    std::vector<bcn::PairedInstance> storage;
    bcn::Minibatch batch;
};

inline OwnedBatch make_batch(std::size_t view_a, std::size_t view_b,
                             std::vector<bcn::PairedInstance> items) {
    OwnedBatch out;
    out.storage = std::move(items);
    out.batch.view_a = view_a;
    out.batch.view_b = view_b;
    for (const auto& inst : out.storage) out.batch.items.push_back(&inst);
    return out;
}

inline std::vector<bcn::ViewSpec> dense_views(const std::vector<std::size_t>& dims) {
    std::vector<bcn::ViewSpec> views;
    for (std::size_t j = 0; j < dims.size(); ++j)
        views.push_back({"view" + std::to_string(j), dims[j], j + 1 == dims.size(),
                         bcn::InputKind::DenseFeatures});
    return views;
}

inline bcn::ModelParams random_model(bcn::Rng& rng, std::size_t k,
                                     const std::vector<std::size_t>& dims, bcn::Activation f,
                                     bcn::Activation p) {
    bcn::ModelParams m = bcn::init_model(rng, k, dense_views(dims), f, p);
    // Nonzero biases so bias gradients are exercised away from 0.
    for (auto& x : m.enc_b) x = rng.uniform(-0.2, 0.2);
    for (auto& c : m.dec_b)
        for (auto& x : c) x = rng.uniform(-0.2, 0.2);
    return m;
}

// Dense random batch between view_a and view_b. BCE wants targets in
// [0, 1]; squared error gets centered Gaussians.
inline OwnedBatch random_batch(bcn::Rng& rng, const bcn::ModelParams& m, std::size_t view_a,
                               std::size_t view_b, std::size_t n, bcn::LossKind loss) {
    std::vector<bcn::PairedInstance> items;
    for (std::size_t i = 0; i < n; ++i) {
        bcn::Vector a(m.views[view_a].dim), b(m.views[view_b].dim);
        for (auto& x : a)
            x = loss == bcn::LossKind::BinaryCrossEntropy ? rng.uniform() : rng.normal();
        for (auto& x : b)
            x = loss == bcn::LossKind::BinaryCrossEntropy ? rng.uniform() : rng.normal();
        items.push_back({std::move(a), std::move(b)});
    }
    return make_batch(view_a, view_b, std::move(items));
}

inline corrnet_ref::Mat to_ref(const bcn::Matrix& m) {
    corrnet_ref::Mat out(m.rows, corrnet_ref::Vec(m.cols));
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) out[i][j] = m(i, j);
    return out;
}

inline corrnet_ref::Params ref_params(const bcn::ModelParams& m, std::size_t view_a,
                                      std::size_t view_b, bcn::LossKind loss) {
    corrnet_ref::Params p;
    p.w1 = to_ref(m.enc_w[view_a]);
    p.w2 = to_ref(m.enc_w[view_b]);
    p.b = m.enc_b;
    p.u1 = to_ref(m.dec_w[view_a]);
    p.u2 = to_ref(m.dec_w[view_b]);
    p.c1 = m.dec_b[view_a];
    p.c2 = m.dec_b[view_b];
    p.act_f = static_cast<int>(m.enc_act);
    p.act_p = static_cast<int>(m.dec_act);
    p.loss = static_cast<int>(loss);
    return p;
}

inline void ref_inputs(const OwnedBatch& ob, std::vector<corrnet_ref::Vec>& xs,
                       std::vector<corrnet_ref::Vec>& ys) {
    for (const auto& inst : ob.storage) {
        xs.push_back(bcn::to_dense(inst.a));
        ys.push_back(bcn::to_dense(inst.b));
    }
}

}  // namespace testhelp
