#pragma once

// Dense double-precision linear algebra, activation functions with
// derivatives, seeded pseudo-randomness and parameter initialization.
// Everything in the library is built on top of these primitives; all
// training math is 64-bit.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace bcn {

using Vector = std::vector<double>;

// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// Sparse vector: entries sorted by position, positions < dim, values
// finite and nonzero. Bag-of-words documents are stored this way so a
// 60K-word vocabulary does not force 60K-wide dense vectors.
struct SparseVec {
    std::size_t dim = 0;
    std::vector<std::pair<std::size_t, double>> entries;
};

// Validates the SparseVec invariants (sorted, in-range, nonzero, finite).
SparseVec make_sparse(std::size_t dim, std::vector<std::pair<std::size_t, double>> entries);

// A view observation is either a dense feature vector or a sparse
// bag-of-words vector; both are valid encoder inputs.
using ViewVector = std::variant<Vector, SparseVec>;

std::size_t view_dim(const ViewVector& v);
Vector to_dense(const ViewVector& v);

// ---------------------------------------------------------------------------
// Activations

enum class Activation : std::uint8_t { Sigmoid = 0, Tanh = 1, Identity = 2, Relu = 3 };

double activate(Activation a, double x);
// Derivative at x. relu'(0) is defined as 0.
double activate_grad(Activation a, double x);

Vector activate(Activation a, const Vector& v);
Vector activate_grad(Activation a, const Vector& v);

const char* to_string(Activation a);
Activation activation_from_string(const std::string& name);

// ---------------------------------------------------------------------------
// Rng
//
// Deterministic generator: xoshiro256++ (Blackman & Vigna). The 256-bit
// state is seeded by running splitmix64 from the user seed four times.
// Constants, so that any implementation can reproduce the stream:
//
//   splitmix64:  s += 0x9e3779b97f4a7c15
//                z = s; z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//                z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//                return z ^ (z >> 31)
//
//   xoshiro256++ next():
//                result = rotl(s0 + s3, 23) + s0
//                t = s1 << 17
//                s2 ^= s0; s3 ^= s1; s1 ^= s2; s0 ^= s3; s2 ^= t
//                s3 = rotl(s3, 45)
//
// Derived streams:
//   uniform()      = (next() >> 11) * 2^-53              in [0, 1)
//   uniform(lo,hi) = lo + uniform() * (hi - lo)
//   below(n)       = rejection sampling: draw next() until >= 2^64 mod n,
//                    return draw mod n (unbiased)
//   normal()       = Box-Muller on two uniform draws; the second variate
//                    of each pair is cached and returned by the next call
//   shuffle        = Fisher-Yates from the back using below(i + 1)
//
// Same seed gives an identical stream on every run and platform. A Rng is
// single-owner: never share one across concurrent tasks.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();
    double uniform(double lo, double hi);
    double normal();
    std::uint64_t below(std::uint64_t n);  // uniform in [0, n), n >= 1

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

  private:
    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// ---------------------------------------------------------------------------
// Initialization and elementary operations

enum class InitScheme { UniformScaled, Zeros };

// UniformScaled draws each entry (row-major order) from
// U(-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))); Zeros returns
// the zero matrix. The returned shape is fan_out x fan_in.
Matrix init_params(Rng& rng, std::size_t fan_in, std::size_t fan_out, InitScheme scheme);

Vector matvec(const Matrix& m, const Vector& v);
Vector matvec(const Matrix& m, const SparseVec& v);
Vector matvec(const Matrix& m, const ViewVector& v);

// acc += m * v
void add_matvec(Vector& acc, const Matrix& m, const ViewVector& v);
// acc += m^T * g
void add_matvec_transposed(Vector& acc, const Matrix& m, const Vector& g);
// m += scale * g * v^T  (only nonzero columns are touched for sparse v)
void add_outer(Matrix& m, const Vector& g, const ViewVector& v, double scale = 1.0);

double euclidean(const Vector& a, const Vector& b);

}  // namespace bcn
