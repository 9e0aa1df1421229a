#include "bcn/objective.hpp"

#include <algorithm>
#include <cmath>

#include "bcn/errors.hpp"

namespace bcn {

const char* to_string(LossKind k) {
    return k == LossKind::SquaredError ? "squared-error" : "binary-cross-entropy";
}

LossKind loss_from_string(const std::string& name) {
    if (name == "squared-error") return LossKind::SquaredError;
    if (name == "binary-cross-entropy") return LossKind::BinaryCrossEntropy;
    throw ConfigError("unknown loss: \"" + name +
                      "\" (expected squared-error or binary-cross-entropy)");
}

Gradients Gradients::zeros_like(const ModelParams& m) {
    Gradients g;
    g.enc_b.assign(m.hidden_dim, 0.0);
    for (std::size_t j = 0; j < m.view_count(); ++j) {
        g.enc_w.emplace_back(m.hidden_dim, m.views[j].dim);
        g.dec_w.emplace_back(m.views[j].dim, m.hidden_dim);
        g.dec_b.emplace_back(m.views[j].dim, 0.0);
    }
    return g;
}

double Gradients::max_abs() const {
    double mx = 0.0;
    auto scan = [&mx](const std::vector<double>& d) {
        for (double v : d) mx = std::max(mx, std::abs(v));
    };
    for (const Matrix& w : enc_w) scan(w.data);
    scan(enc_b);
    for (const Matrix& w : dec_w) scan(w.data);
    for (const Vector& c : dec_b) scan(c);
    return mx;
}

bool Gradients::all_finite(std::string* offender) const {
    auto ok = [](const std::vector<double>& d) {
        for (double v : d)
            if (!std::isfinite(v)) return false;
        return true;
    };
    for (std::size_t j = 0; j < enc_w.size(); ++j)
        if (!ok(enc_w[j].data)) {
            if (offender) *offender = "enc_w[" + std::to_string(j) + "]";
            return false;
        }
    if (!ok(enc_b)) {
        if (offender) *offender = "enc_b";
        return false;
    }
    for (std::size_t j = 0; j < dec_w.size(); ++j)
        if (!ok(dec_w[j].data)) {
            if (offender) *offender = "dec_w[" + std::to_string(j) + "]";
            return false;
        }
    for (std::size_t j = 0; j < dec_b.size(); ++j)
        if (!ok(dec_b[j])) {
            if (offender) *offender = "dec_b[" + std::to_string(j) + "]";
            return false;
        }
    return true;
}

// ---------------------------------------------------------------------------
// Losses

namespace {

constexpr double kBceClampLo = 1e-12;
constexpr double kBceClampHi = 1.0 - 1e-12;

inline double loss_term(LossKind kind, double t, double y) {
    if (kind == LossKind::SquaredError) {
        const double d = t - y;
        return d * d;
    }
    if (t < 0.0 || t > 1.0)
        throw ContractError("binary-cross-entropy target out of [0, 1]: " + std::to_string(t));
    const double yc = std::min(std::max(y, kBceClampLo), kBceClampHi);
    return -(t * std::log(yc) + (1.0 - t) * std::log1p(-yc));
}

// d loss_term / d y. For BCE the clamp makes the loss locally constant
// outside [lo, hi], so the derivative is 0 there.
inline double loss_term_grad(LossKind kind, double t, double y) {
    if (kind == LossKind::SquaredError) return 2.0 * (y - t);
    if (y <= kBceClampLo || y >= kBceClampHi) return 0.0;
    return -t / y + (1.0 - t) / (1.0 - y);
}

// Walks target components 0..dim-1 in order, whether dense or sparse.
class TargetCursor {
  public:
    explicit TargetCursor(const ViewVector& v) {
        dense_ = std::get_if<Vector>(&v);
        if (!dense_) sparse_ = &std::get<SparseVec>(v);
    }

    double at(std::size_t i) {
        if (dense_) return (*dense_)[i];
        const auto& e = sparse_->entries;
        while (next_ < e.size() && e[next_].first < i) ++next_;
        if (next_ < e.size() && e[next_].first == i) return e[next_].second;
        return 0.0;
    }

  private:
    const Vector* dense_ = nullptr;
    const SparseVec* sparse_ = nullptr;
    std::size_t next_ = 0;
};

void check_batch(const ModelParams& m, const Minibatch& batch, double lambda, LossKind kind) {
    if (batch.size() < 2)
        throw ContractError("minibatch needs at least 2 instances, got " +
                            std::to_string(batch.size()));
    if (batch.view_a >= m.view_count() || batch.view_b >= m.view_count())
        throw ContractError("minibatch references unknown view id");
    if (batch.view_a == batch.view_b)
        throw ContractError("minibatch must pair two distinct views");
    if (lambda < 0.0) throw ContractError("lambda must be >= 0");
    if (kind == LossKind::BinaryCrossEntropy && m.dec_act != Activation::Sigmoid)
        throw ContractError("binary-cross-entropy requires a sigmoid decoder activation");
    for (const PairedInstance* inst : batch.items) {
        if (view_dim(inst->a) != m.views[batch.view_a].dim)
            throw ContractError("instance dim does not match view \"" +
                                m.views[batch.view_a].name + "\"");
        if (view_dim(inst->b) != m.views[batch.view_b].dim)
            throw ContractError("instance dim does not match view \"" +
                                m.views[batch.view_b].name + "\"");
    }
}

struct CorrStats {
    Vector mean_x, mean_y;
    Vector sxx, syy, sxy;
    Vector denom;
    double value = 0.0;
};

CorrStats corr_stats(std::span<const Vector> hx, std::span<const Vector> hy) {
    const std::size_t n = hx.size();
    if (n < 2 || hy.size() != n)
        throw ContractError("correlation needs two equal sequences of >= 2 samples");
    const std::size_t k = hx[0].size();
    for (std::size_t i = 0; i < n; ++i)
        if (hx[i].size() != k || hy[i].size() != k)
            throw ContractError("correlation samples must share one dimension");

    CorrStats s;
    s.mean_x.assign(k, 0.0);
    s.mean_y.assign(k, 0.0);
    s.sxx.assign(k, 0.0);
    s.syy.assign(k, 0.0);
    s.sxy.assign(k, 0.0);
    s.denom.assign(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            s.mean_x[t] += hx[i][t];
            s.mean_y[t] += hy[i][t];
        }
    for (std::size_t t = 0; t < k; ++t) {
        s.mean_x[t] /= static_cast<double>(n);
        s.mean_y[t] /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            const double dx = hx[i][t] - s.mean_x[t];
            const double dy = hy[i][t] - s.mean_y[t];
            s.sxx[t] += dx * dx;
            s.syy[t] += dy * dy;
            s.sxy[t] += dx * dy;
        }
    for (std::size_t t = 0; t < k; ++t) {
        s.denom[t] = std::sqrt(s.sxx[t] * s.syy[t] + kCorrEps * kCorrEps);
        s.value += s.sxy[t] / s.denom[t];
    }
    return s;
}

}  // namespace

double recon_loss(LossKind kind, const Vector& target, const Vector& predicted) {
    if (target.size() != predicted.size())
        throw ContractError("recon_loss dimension mismatch: " + std::to_string(target.size()) +
                            " vs " + std::to_string(predicted.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) acc += loss_term(kind, target[i], predicted[i]);
    return acc;
}

double correlation(std::span<const Vector> hx, std::span<const Vector> hy) {
    return corr_stats(hx, hy).value;
}

// ---------------------------------------------------------------------------
// Batch objective and gradients

namespace {

// Shared forward machinery. `Backward` toggles gradient accumulation so
// the finite-difference path pays only for the forward part.
struct BatchPass {
    BatchPass(const ModelParams& model, const Minibatch& b, LossKind loss, Gradients* g)
        : m(model), batch(b), kind(loss), grads(g) {}

    const ModelParams& m;
    const Minibatch& batch;
    LossKind kind;
    Gradients* grads;  // null for objective-only

    double loss_sum = 0.0;
    std::vector<Vector> hx, hy;    // per-instance encodings of the two sides
    std::vector<Vector> fpx, fpy;  // f'(preactivation), kept for the corr pass

    // dec_act(dec_w[view] h + dec_b[view]) against the instance's own
    // view as target; accumulates loss, decoder grads and d loss/d h.
    void decode_and_backprop(const Vector& h, std::size_t view, const ViewVector& target,
                             Vector* grad_h) {
        const Matrix& w = m.dec_w[view];
        const std::size_t d = w.rows;
        TargetCursor tgt(target);
        Vector delta(grads ? d : 0);
        for (std::size_t r = 0; r < d; ++r) {
            const double* row = w.data.data() + r * w.cols;
            double s = m.dec_b[view][r];
            for (std::size_t j = 0; j < w.cols; ++j) s += row[j] * h[j];
            const double y = activate(m.dec_act, s);
            const double t = tgt.at(r);
            loss_sum += loss_term(kind, t, y);
            if (grads) delta[r] = loss_term_grad(kind, t, y) * activate_grad(m.dec_act, s);
        }
        if (!grads) return;
        Vector& db = grads->dec_b[view];
        for (std::size_t r = 0; r < d; ++r) db[r] += delta[r];
        // dec_w += delta h^T
        Matrix& dw = grads->dec_w[view];
        for (std::size_t r = 0; r < d; ++r) {
            const double dr = delta[r];
            if (dr == 0.0) continue;
            double* row = dw.data.data() + r * dw.cols;
            for (std::size_t j = 0; j < dw.cols; ++j) row[j] += dr * h[j];
        }
        add_matvec_transposed(*grad_h, w, delta);
    }

    // Chains d loss/d h through the encoder nonlinearity and into the
    // encoder weights for all views feeding this preactivation.
    void encoder_backprop(const Vector& grad_h, const Vector& fprime, const PairedInstance& inst,
                          bool uses_a, bool uses_b) {
        const std::size_t k = m.hidden_dim;
        Vector gamma(k);
        for (std::size_t t = 0; t < k; ++t) gamma[t] = grad_h[t] * fprime[t];
        if (uses_a) add_outer(grads->enc_w[batch.view_a], gamma, inst.a);
        if (uses_b) add_outer(grads->enc_w[batch.view_b], gamma, inst.b);
        Vector& gb = grads->enc_b;
        for (std::size_t t = 0; t < k; ++t) gb[t] += gamma[t];
    }

    double run() {
        const std::size_t n = batch.size();
        const std::size_t k = m.hidden_dim;
        hx.resize(n);
        hy.resize(n);
        if (grads) {
            fpx.resize(n);
            fpy.resize(n);
        }

        for (std::size_t i = 0; i < n; ++i) {
            const PairedInstance& inst = *batch.items[i];
            Vector pre_x = m.enc_b;
            add_matvec(pre_x, m.enc_w[batch.view_a], inst.a);
            Vector pre_y = m.enc_b;
            add_matvec(pre_y, m.enc_w[batch.view_b], inst.b);
            Vector pre_z(k);
            for (std::size_t t = 0; t < k; ++t) pre_z[t] = pre_x[t] + pre_y[t] - m.enc_b[t];

            const Vector h_z = activate(m.enc_act, pre_z);
            hx[i] = activate(m.enc_act, pre_x);
            hy[i] = activate(m.enc_act, pre_y);

            Vector gh_z(grads ? k : 0, 0.0), gh_x(grads ? k : 0, 0.0), gh_y(grads ? k : 0, 0.0);
            decode_and_backprop(h_z, batch.view_a, inst.a, &gh_z);
            decode_and_backprop(h_z, batch.view_b, inst.b, &gh_z);
            decode_and_backprop(hx[i], batch.view_a, inst.a, &gh_x);
            decode_and_backprop(hx[i], batch.view_b, inst.b, &gh_x);
            decode_and_backprop(hy[i], batch.view_a, inst.a, &gh_y);
            decode_and_backprop(hy[i], batch.view_b, inst.b, &gh_y);

            if (grads) {
                encoder_backprop(gh_z, activate_grad(m.enc_act, pre_z), inst, true, true);
                fpx[i] = activate_grad(m.enc_act, pre_x);
                fpy[i] = activate_grad(m.enc_act, pre_y);
                encoder_backprop(gh_x, fpx[i], inst, true, false);
                encoder_backprop(gh_y, fpy[i], inst, false, true);
            }
        }
        return loss_sum;
    }
};

}  // namespace

double batch_objective(const ModelParams& m, const Minibatch& batch, double lambda, LossKind kind) {
    check_batch(m, batch, lambda, kind);
    BatchPass pass(m, batch, kind, nullptr);
    const double loss = pass.run();
    if (lambda == 0.0) return loss;
    return loss - lambda * correlation(pass.hx, pass.hy);
}

BatchResult batch_gradients(const ModelParams& m, const Minibatch& batch, double lambda,
                            LossKind kind) {
    check_batch(m, batch, lambda, kind);
    BatchResult out;
    out.grads = Gradients::zeros_like(m);
    BatchPass pass(m, batch, kind, &out.grads);
    const double loss = pass.run();

    const std::size_t n = batch.size();
    const std::size_t k = m.hidden_dim;
    const CorrStats cs = corr_stats(pass.hx, pass.hy);
    out.correlation = cs.value;
    out.objective = loss - lambda * cs.value;
    if (lambda == 0.0) return out;

    // d corr / d h, including the dependence of the batch means and
    // variances on h:
    //   d corr_t / d x_it = (y~ / D) - (Sxy * Syy / D^3) * x~
    // with x~, y~ the centered samples and D = sqrt(Sxx*Syy + eps^2).
    Vector gamma(k);
    for (std::size_t i = 0; i < n; ++i) {
        const PairedInstance& inst = *batch.items[i];
        for (std::size_t t = 0; t < k; ++t) {
            const double xc = pass.hx[i][t] - cs.mean_x[t];
            const double yc = pass.hy[i][t] - cs.mean_y[t];
            const double d = cs.denom[t];
            const double dcorr = yc / d - (cs.sxy[t] * cs.syy[t] / (d * d * d)) * xc;
            gamma[t] = -lambda * dcorr * pass.fpx[i][t];
        }
        add_outer(out.grads.enc_w[batch.view_a], gamma, inst.a);
        for (std::size_t t = 0; t < k; ++t) out.grads.enc_b[t] += gamma[t];

        for (std::size_t t = 0; t < k; ++t) {
            const double xc = pass.hx[i][t] - cs.mean_x[t];
            const double yc = pass.hy[i][t] - cs.mean_y[t];
            const double d = cs.denom[t];
            const double dcorr = xc / d - (cs.sxy[t] * cs.sxx[t] / (d * d * d)) * yc;
            gamma[t] = -lambda * dcorr * pass.fpy[i][t];
        }
        add_outer(out.grads.enc_w[batch.view_b], gamma, inst.b);
        for (std::size_t t = 0; t < k; ++t) out.grads.enc_b[t] += gamma[t];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

GradCheckReport grad_check(const ModelParams& m, const Minibatch& batch, double lambda,
                           LossKind kind, double eps) {
    if (!(eps > 0.0 && eps <= 1e-3))
        throw ContractError("grad_check eps must lie in (0, 1e-3]");

    const BatchResult analytic = batch_gradients(m, batch, lambda, kind);
    ModelParams probe = m;

    GradCheckReport report;
    auto consider = [&](double* coord, double analytic_g, const std::string& tensor,
                        std::size_t index) {
        const double saved = *coord;
        *coord = saved + eps;
        const double up = batch_objective(probe, batch, lambda, kind);
        *coord = saved - eps;
        const double down = batch_objective(probe, batch, lambda, kind);
        *coord = saved;
        const double numeric = (up - down) / (2.0 * eps);
        const double rel = std::abs(analytic_g - numeric) /
                           std::max({1.0, std::abs(analytic_g), std::abs(numeric)});
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.tensor = tensor;
            report.index = index;
            report.analytic = analytic_g;
            report.numeric = numeric;
        }
    };

    for (std::size_t j = 0; j < probe.view_count(); ++j) {
        const std::string name = "enc_w[" + std::to_string(j) + "]";
        for (std::size_t i = 0; i < probe.enc_w[j].data.size(); ++i)
            consider(&probe.enc_w[j].data[i], analytic.grads.enc_w[j].data[i], name, i);
    }
    for (std::size_t i = 0; i < probe.enc_b.size(); ++i)
        consider(&probe.enc_b[i], analytic.grads.enc_b[i], "enc_b", i);
    for (std::size_t j = 0; j < probe.view_count(); ++j) {
        const std::string name = "dec_w[" + std::to_string(j) + "]";
        for (std::size_t i = 0; i < probe.dec_w[j].data.size(); ++i)
            consider(&probe.dec_w[j].data[i], analytic.grads.dec_w[j].data[i], name, i);
    }
    for (std::size_t j = 0; j < probe.view_count(); ++j) {
        const std::string name = "dec_b[" + std::to_string(j) + "]";
        for (std::size_t i = 0; i < probe.dec_b[j].size(); ++i)
            consider(&probe.dec_b[j][i], analytic.grads.dec_b[j][i], name, i);
    }
    return report;
}

}  // namespace bcn
