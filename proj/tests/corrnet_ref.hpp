#pragma once

// Independent two-view correlational autoencoder, used as an oracle for
// the M=2 reduction. Deliberately written straight-line on dense
// vector-of-vectors storage and sharing no code with the library: the
// objective and its gradient are derived and coded here from scratch.
//
//   J = sum_i [ L(z_i, g(h(z_i))) + L(z_i, g(h(x_i))) + L(z_i, g(h(y_i))) ]
//       - lambda * sum_t pearson_t({h(x_i)}, {h(y_i)})
//
// with pearson_t guarded by sqrt(Sxx*Syy + 1e-16) in the denominator.

#include <cmath>
#include <cstddef>
#include <vector>

namespace corrnet_ref {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // [row][col]

struct Params {
    Mat w1, w2;  // k x d1, k x d2 encoder matrices
    Vec b;       // shared encoder bias, k
    Mat u1, u2;  // d1 x k, d2 x k decoder matrices
    Vec c1, c2;  // decoder biases
    int act_f = 0, act_p = 0;  // 0 sigmoid, 1 tanh, 2 identity, 3 relu
    int loss = 0;              // 0 squared error, 1 binary cross-entropy
};

struct Grads {
    Mat w1, w2;
    Vec b;
    Mat u1, u2;
    Vec c1, c2;
};

inline double act(int a, double x) {
    if (a == 0) return 1.0 / (1.0 + std::exp(-x));
    if (a == 1) return std::tanh(x);
    if (a == 2) return x;
    return x > 0.0 ? x : 0.0;
}

inline double dact(int a, double x) {
    if (a == 0) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 - s);
    }
    if (a == 1) {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    if (a == 2) return 1.0;
    return x > 0.0 ? 1.0 : 0.0;
}

inline double loss_val(int kind, double t, double y) {
    if (kind == 0) return (t - y) * (t - y);
    double yc = y;
    if (yc < 1e-12) yc = 1e-12;
    if (yc > 1.0 - 1e-12) yc = 1.0 - 1e-12;
    return -(t * std::log(yc) + (1.0 - t) * std::log(1.0 - yc));
}

inline double loss_dy(int kind, double t, double y) {
    if (kind == 0) return 2.0 * (y - t);
    if (y <= 1e-12 || y >= 1.0 - 1e-12) return 0.0;
    return -t / y + (1.0 - t) / (1.0 - y);
}

inline Vec encode(const Params& P, const Mat& w, const Vec& v, bool add_other, const Mat& w2,
                  const Vec& v2) {
    const std::size_t k = P.b.size();
    Vec pre(k, 0.0);
    for (std::size_t t = 0; t < k; ++t) {
        double s = P.b[t];
        for (std::size_t j = 0; j < v.size(); ++j) s += w[t][j] * v[j];
        if (add_other)
            for (std::size_t j = 0; j < v2.size(); ++j) s += w2[t][j] * v2[j];
        pre[t] = s;
    }
    return pre;
}

struct Forward {
    std::vector<Vec> az, ax, ay;  // encoder preactivations per instance
    std::vector<Vec> hz, hx, hy;
};

inline Forward forward_encodings(const Params& P, const std::vector<Vec>& xs,
                                 const std::vector<Vec>& ys) {
    Forward f;
    const std::size_t n = xs.size();
    const std::size_t k = P.b.size();
    for (std::size_t i = 0; i < n; ++i) {
        f.az.push_back(encode(P, P.w1, xs[i], true, P.w2, ys[i]));
        f.ax.push_back(encode(P, P.w1, xs[i], false, P.w2, ys[i]));
        f.ay.push_back(encode(P, P.w2, ys[i], false, P.w1, xs[i]));
        Vec hz(k), hx(k), hy(k);
        for (std::size_t t = 0; t < k; ++t) {
            hz[t] = act(P.act_f, f.az.back()[t]);
            hx[t] = act(P.act_f, f.ax.back()[t]);
            hy[t] = act(P.act_f, f.ay.back()[t]);
        }
        f.hz.push_back(hz);
        f.hx.push_back(hx);
        f.hy.push_back(hy);
    }
    return f;
}

// Reconstruction loss of both views decoded from h.
inline double recon_both(const Params& P, const Vec& h, const Vec& x, const Vec& y) {
    double total = 0.0;
    for (std::size_t r = 0; r < x.size(); ++r) {
        double s = P.c1[r];
        for (std::size_t t = 0; t < h.size(); ++t) s += P.u1[r][t] * h[t];
        total += loss_val(P.loss, x[r], act(P.act_p, s));
    }
    for (std::size_t r = 0; r < y.size(); ++r) {
        double s = P.c2[r];
        for (std::size_t t = 0; t < h.size(); ++t) s += P.u2[r][t] * h[t];
        total += loss_val(P.loss, y[r], act(P.act_p, s));
    }
    return total;
}

struct CorrParts {
    Vec mx, my, sxx, syy, sxy, den;
    double value = 0.0;
};

inline CorrParts corr_parts(const std::vector<Vec>& hx, const std::vector<Vec>& hy) {
    const std::size_t n = hx.size();
    const std::size_t k = hx[0].size();
    CorrParts c;
    c.mx.assign(k, 0.0);
    c.my.assign(k, 0.0);
    c.sxx.assign(k, 0.0);
    c.syy.assign(k, 0.0);
    c.sxy.assign(k, 0.0);
    c.den.assign(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            c.mx[t] += hx[i][t] / n;
            c.my[t] += hy[i][t] / n;
        }
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < k; ++t) {
            c.sxx[t] += (hx[i][t] - c.mx[t]) * (hx[i][t] - c.mx[t]);
            c.syy[t] += (hy[i][t] - c.my[t]) * (hy[i][t] - c.my[t]);
            c.sxy[t] += (hx[i][t] - c.mx[t]) * (hy[i][t] - c.my[t]);
        }
    for (std::size_t t = 0; t < k; ++t) {
        c.den[t] = std::sqrt(c.sxx[t] * c.syy[t] + 1e-16);
        c.value += c.sxy[t] / c.den[t];
    }
    return c;
}

inline double objective(const Params& P, const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                        double lambda) {
    const Forward f = forward_encodings(P, xs, ys);
    double total = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        total += recon_both(P, f.hz[i], xs[i], ys[i]);
        total += recon_both(P, f.hx[i], xs[i], ys[i]);
        total += recon_both(P, f.hy[i], xs[i], ys[i]);
    }
    return total - lambda * corr_parts(f.hx, f.hy).value;
}

inline Grads gradients(const Params& P, const std::vector<Vec>& xs, const std::vector<Vec>& ys,
                       double lambda, double* objective_out) {
    const std::size_t n = xs.size();
    const std::size_t k = P.b.size();
    const std::size_t d1 = P.c1.size();
    const std::size_t d2 = P.c2.size();

    Grads G;
    G.w1.assign(k, Vec(d1, 0.0));
    G.w2.assign(k, Vec(d2, 0.0));
    G.b.assign(k, 0.0);
    G.u1.assign(d1, Vec(k, 0.0));
    G.u2.assign(d2, Vec(k, 0.0));
    G.c1.assign(d1, 0.0);
    G.c2.assign(d2, 0.0);

    const Forward f = forward_encodings(P, xs, ys);
    double total = 0.0;

    // d loss / d h for one encoding, while accumulating decoder grads.
    auto decode_grad = [&](const Vec& h, const Vec& x, const Vec& y) {
        Vec gh(k, 0.0);
        for (std::size_t r = 0; r < d1; ++r) {
            double s = P.c1[r];
            for (std::size_t t = 0; t < k; ++t) s += P.u1[r][t] * h[t];
            const double yhat = act(P.act_p, s);
            total += loss_val(P.loss, x[r], yhat);
            const double delta = loss_dy(P.loss, x[r], yhat) * dact(P.act_p, s);
            G.c1[r] += delta;
            for (std::size_t t = 0; t < k; ++t) {
                G.u1[r][t] += delta * h[t];
                gh[t] += P.u1[r][t] * delta;
            }
        }
        for (std::size_t r = 0; r < d2; ++r) {
            double s = P.c2[r];
            for (std::size_t t = 0; t < k; ++t) s += P.u2[r][t] * h[t];
            const double yhat = act(P.act_p, s);
            total += loss_val(P.loss, y[r], yhat);
            const double delta = loss_dy(P.loss, y[r], yhat) * dact(P.act_p, s);
            G.c2[r] += delta;
            for (std::size_t t = 0; t < k; ++t) {
                G.u2[r][t] += delta * h[t];
                gh[t] += P.u2[r][t] * delta;
            }
        }
        return gh;
    };

    for (std::size_t i = 0; i < n; ++i) {
        const Vec ghz = decode_grad(f.hz[i], xs[i], ys[i]);
        const Vec ghx = decode_grad(f.hx[i], xs[i], ys[i]);
        const Vec ghy = decode_grad(f.hy[i], xs[i], ys[i]);
        for (std::size_t t = 0; t < k; ++t) {
            const double gz = ghz[t] * dact(P.act_f, f.az[i][t]);
            const double gx = ghx[t] * dact(P.act_f, f.ax[i][t]);
            const double gy = ghy[t] * dact(P.act_f, f.ay[i][t]);
            for (std::size_t j = 0; j < d1; ++j) G.w1[t][j] += (gz + gx) * xs[i][j];
            for (std::size_t j = 0; j < d2; ++j) G.w2[t][j] += (gz + gy) * ys[i][j];
            G.b[t] += gz + gx + gy;
        }
    }

    const CorrParts c = corr_parts(f.hx, f.hy);
    if (lambda != 0.0) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t t = 0; t < k; ++t) {
                const double xc = f.hx[i][t] - c.mx[t];
                const double yc = f.hy[i][t] - c.my[t];
                const double d3 = c.den[t] * c.den[t] * c.den[t];
                const double dcx = yc / c.den[t] - c.sxy[t] * c.syy[t] * xc / d3;
                const double dcy = xc / c.den[t] - c.sxy[t] * c.sxx[t] * yc / d3;
                const double gx = -lambda * dcx * dact(P.act_f, f.ax[i][t]);
                const double gy = -lambda * dcy * dact(P.act_f, f.ay[i][t]);
                for (std::size_t j = 0; j < d1; ++j) G.w1[t][j] += gx * xs[i][j];
                for (std::size_t j = 0; j < d2; ++j) G.w2[t][j] += gy * ys[i][j];
                G.b[t] += gx + gy;
            }
    }

    if (objective_out) *objective_out = total - lambda * c.value;
    return G;
}

}  // namespace corrnet_ref
