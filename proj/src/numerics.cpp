#include "bcn/numerics.hpp"

#include <cmath>
#include <cstdio>

#include "bcn/errors.hpp"

namespace bcn {

namespace {

std::string dim_msg(const char* what, std::size_t a, std::size_t b) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%s: %zu vs %zu", what, a, b);
    return buf;
}

}  // namespace

SparseVec make_sparse(std::size_t dim, std::vector<std::pair<std::size_t, double>> entries) {
    std::size_t prev = 0;
    bool first = true;
    for (const auto& [pos, val] : entries) {
        if (pos >= dim)
            throw ContractError(dim_msg("sparse entry position out of range", pos, dim));
        if (!first && pos <= prev)
            throw ContractError("sparse entry positions must be strictly increasing");
        if (val == 0.0 || !std::isfinite(val))
            throw ContractError("sparse entry values must be finite and nonzero");
        prev = pos;
        first = false;
    }
    return SparseVec{dim, std::move(entries)};
}

std::size_t view_dim(const ViewVector& v) {
    if (const auto* d = std::get_if<Vector>(&v)) return d->size();
    return std::get<SparseVec>(v).dim;
}

Vector to_dense(const ViewVector& v) {
    if (const auto* d = std::get_if<Vector>(&v)) return *d;
    const auto& s = std::get<SparseVec>(v);
    Vector out(s.dim, 0.0);
    for (const auto& [pos, val] : s.entries) out[pos] = val;
    return out;
}

// ---------------------------------------------------------------------------
// Activations

double activate(Activation a, double x) {
    switch (a) {
        case Activation::Sigmoid: return 1.0 / (1.0 + std::exp(-x));
        case Activation::Tanh: return std::tanh(x);
        case Activation::Identity: return x;
        case Activation::Relu: return x > 0.0 ? x : 0.0;
    }
    throw ContractError("unknown activation");
}

double activate_grad(Activation a, double x) {
    switch (a) {
        case Activation::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Activation::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Activation::Identity: return 1.0;
        case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    }
    throw ContractError("unknown activation");
}

Vector activate(Activation a, const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = activate(a, v[i]);
    return out;
}

Vector activate_grad(Activation a, const Vector& v) {
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = activate_grad(a, v[i]);
    return out;
}

const char* to_string(Activation a) {
    switch (a) {
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Tanh: return "tanh";
        case Activation::Identity: return "identity";
        case Activation::Relu: return "relu";
    }
    return "?";
}

Activation activation_from_string(const std::string& name) {
    if (name == "sigmoid") return Activation::Sigmoid;
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity") return Activation::Identity;
    if (name == "relu") return Activation::Relu;
    throw ConfigError("unknown activation: \"" + name +
                      "\" (expected sigmoid, tanh, identity or relu)");
}

// ---------------------------------------------------------------------------
// Rng

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + uniform() * (hi - lo);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Box-Muller; 1 - uniform() keeps the log argument in (0, 1].
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ContractError("Rng::below requires n >= 1");
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
        const std::uint64_t r = next_u64();
        if (r >= threshold) return r % n;
    }
}

// ---------------------------------------------------------------------------
// Initialization and elementary operations

Matrix init_params(Rng& rng, std::size_t fan_in, std::size_t fan_out, InitScheme scheme) {
    if (fan_in < 1 || fan_out < 1)
        throw ContractError("init_params requires fan_in and fan_out >= 1");
    Matrix m(fan_out, fan_in);
    if (scheme == InitScheme::UniformScaled) {
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (auto& x : m.data) x = rng.uniform(-bound, bound);
    }
    return m;
}

Vector matvec(const Matrix& m, const Vector& v) {
    if (m.cols != v.size())
        throw ContractError(dim_msg("matvec dimension mismatch (matrix cols vs vector dim)",
                                    m.cols, v.size()));
    Vector out(m.rows, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* row = m.data.data() + i * m.cols;
        double acc = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) acc += row[j] * v[j];
        out[i] = acc;
    }
    return out;
}

Vector matvec(const Matrix& m, const SparseVec& v) {
    if (m.cols != v.dim)
        throw ContractError(dim_msg("matvec dimension mismatch (matrix cols vs vector dim)",
                                    m.cols, v.dim));
    Vector out(m.rows, 0.0);
    for (const auto& [pos, val] : v.entries)
        for (std::size_t i = 0; i < m.rows; ++i) out[i] += m.data[i * m.cols + pos] * val;
    return out;
}

Vector matvec(const Matrix& m, const ViewVector& v) {
    return std::visit([&](const auto& inner) { return matvec(m, inner); }, v);
}

void add_matvec(Vector& acc, const Matrix& m, const ViewVector& v) {
    if (acc.size() != m.rows)
        throw ContractError(dim_msg("add_matvec accumulator dim vs matrix rows", acc.size(), m.rows));
    if (const auto* dense = std::get_if<Vector>(&v)) {
        if (m.cols != dense->size())
            throw ContractError(dim_msg("add_matvec dimension mismatch", m.cols, dense->size()));
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double* row = m.data.data() + i * m.cols;
            double sum = 0.0;
            for (std::size_t j = 0; j < m.cols; ++j) sum += row[j] * (*dense)[j];
            acc[i] += sum;
        }
        return;
    }
    const auto& sparse = std::get<SparseVec>(v);
    if (m.cols != sparse.dim)
        throw ContractError(dim_msg("add_matvec dimension mismatch", m.cols, sparse.dim));
    for (const auto& [pos, val] : sparse.entries)
        for (std::size_t i = 0; i < m.rows; ++i) acc[i] += m.data[i * m.cols + pos] * val;
}

void add_matvec_transposed(Vector& acc, const Matrix& m, const Vector& g) {
    if (acc.size() != m.cols)
        throw ContractError(dim_msg("add_matvec_transposed accumulator dim vs matrix cols",
                                    acc.size(), m.cols));
    if (g.size() != m.rows)
        throw ContractError(dim_msg("add_matvec_transposed input dim vs matrix rows",
                                    g.size(), m.rows));
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double gi = g[i];
        if (gi == 0.0) continue;
        const double* row = m.data.data() + i * m.cols;
        for (std::size_t j = 0; j < m.cols; ++j) acc[j] += row[j] * gi;
    }
}

void add_outer(Matrix& m, const Vector& g, const ViewVector& v, double scale) {
    if (m.rows != g.size())
        throw ContractError(dim_msg("add_outer matrix rows vs left vector dim", m.rows, g.size()));
    if (m.cols != view_dim(v))
        throw ContractError(dim_msg("add_outer matrix cols vs right vector dim", m.cols, view_dim(v)));
    if (const auto* dense = std::get_if<Vector>(&v)) {
        for (std::size_t i = 0; i < m.rows; ++i) {
            const double gi = scale * g[i];
            if (gi == 0.0) continue;
            double* row = m.data.data() + i * m.cols;
            for (std::size_t j = 0; j < m.cols; ++j) row[j] += gi * (*dense)[j];
        }
        return;
    }
    const auto& sparse = std::get<SparseVec>(v);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double gi = scale * g[i];
        if (gi == 0.0) continue;
        double* row = m.data.data() + i * m.cols;
        for (const auto& [pos, val] : sparse.entries) row[pos] += gi * val;
    }
}

double euclidean(const Vector& a, const Vector& b) {
    if (a.size() != b.size())
        throw ContractError(dim_msg("euclidean dimension mismatch", a.size(), b.size()));
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace bcn
