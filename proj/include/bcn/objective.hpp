#pragma once

// The dynamic training objective and its exact analytic gradient.
//
// A minibatch pairs one non-pivot view with the pivot view. Writing z for
// the pair (v_a, v_b), h(.) for the encoder and g(.) for the decoder of
// both paired views, the per-batch objective is
//
//   J = sum_i [ L(z_i, g(h(z_i))) + L(z_i, g(h(v_a_i))) + L(z_i, g(h(v_b_i))) ]
//       - lambda * corr({h(v_a_i)}, {h(v_b_i)})
//
// where corr is the sum over hidden dimensions of the Pearson correlation
// across the batch. Gradients backpropagate through everything including
// the batch means and variances inside corr.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcn/model.hpp"

namespace bcn {

enum class LossKind : std::uint8_t { SquaredError = 0, BinaryCrossEntropy = 1 };

const char* to_string(LossKind k);
LossKind loss_from_string(const std::string& name);

// One paired observation. `a` is the non-pivot side, `b` the pivot side
// (or, for the experimental non-pivot pairs, just the two sides in order).
struct PairedInstance {
    ViewVector a;
    ViewVector b;
};

// All instances of a minibatch come from one pair set, so they share the
// same (view_a, view_b) binding. size >= 2 so the correlation estimate is
// defined.
struct Minibatch {
    std::size_t set_index = 0;  // which pair set this batch was cut from
    std::size_t view_a = 0;
    std::size_t view_b = 0;
    std::vector<const PairedInstance*> items;

    std::size_t size() const { return items.size(); }
};

// One gradient tensor per model tensor, same shapes.
struct Gradients {
    std::vector<Matrix> enc_w;
    Vector enc_b;
    std::vector<Matrix> dec_w;
    std::vector<Vector> dec_b;

    static Gradients zeros_like(const ModelParams& m);
    double max_abs() const;
    // True when every entry is finite; otherwise *offender names the
    // first bad tensor ("enc_w[2]", "enc_b", ...).
    bool all_finite(std::string* offender = nullptr) const;
};

// Smoothing constant for the per-dimension correlation denominator:
// denom_t = sqrt(Sxx_t * Syy_t + kCorrEps^2), which floors the
// denominator at kCorrEps while staying differentiable everywhere and
// leaving well-conditioned dimensions unchanged to ~1e-16 relative.
inline constexpr double kCorrEps = 1e-8;

// Reconstruction error between a target and a prediction of equal dim.
// SquaredError: sum (t - y)^2. BinaryCrossEntropy: -sum [t ln y +
// (1-t) ln(1-y)] with y clamped to [1e-12, 1-1e-12]; targets must lie in
// [0, 1].
double recon_loss(LossKind kind, const Vector& target, const Vector& predicted);

// Sum over hidden dimensions of the Pearson correlation between the two
// sample sets (n >= 2 vectors of equal dim). Value lies in [-k, k].
double correlation(std::span<const Vector> hx, std::span<const Vector> hy);

double batch_objective(const ModelParams& m, const Minibatch& batch, double lambda, LossKind kind);

struct BatchResult {
    double objective = 0.0;
    double correlation = 0.0;  // diagnostic, computed even when lambda = 0
    Gradients grads;
};

BatchResult batch_gradients(const ModelParams& m, const Minibatch& batch, double lambda,
                            LossKind kind);

// Compares analytic gradients against central finite differences of
// batch_objective, coordinate by coordinate. The relative error of a
// coordinate is |analytic - numeric| / max(1, |analytic|, |numeric|).
struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string tensor;     // offending tensor name
    std::size_t index = 0;  // flat index inside that tensor
    double analytic = 0.0;
    double numeric = 0.0;
};

GradCheckReport grad_check(const ModelParams& m, const Minibatch& batch, double lambda,
                           LossKind kind, double eps);

}  // namespace bcn
