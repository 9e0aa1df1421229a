#pragma once

// Bridge CorrNet parameter container and the encode/decode maps.
//
// Each view j has an encoder matrix (hidden_dim x d_j) and a decoder
// matrix (d_j x hidden_dim) with its own decoder bias; the encoder bias
// is shared by all views. Encoding a single view is
// enc_act(W_j v_j + b); encoding a set of views sums their W_j v_j terms
// before the shared bias and nonlinearity; decoding a view is
// dec_act(W'_j h + c_j).

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bcn/numerics.hpp"

namespace bcn {

enum class InputKind : std::uint8_t { SparseBow = 0, DenseFeatures = 1 };

struct ViewSpec {
    std::string name;
    std::size_t dim = 0;
    bool pivot = false;
    InputKind input_kind = InputKind::SparseBow;
};

// One observation: which view it belongs to plus the raw vector.
struct ViewValue {
    std::size_t view = 0;
    ViewVector data;
};

struct ModelParams {
    std::size_t hidden_dim = 0;
    Activation enc_act = Activation::Sigmoid;
    Activation dec_act = Activation::Sigmoid;
    std::vector<ViewSpec> views;
    std::vector<Matrix> enc_w;  // per view, hidden_dim x d_j
    Vector enc_b;               // shared, hidden_dim
    std::vector<Matrix> dec_w;  // per view, d_j x hidden_dim
    std::vector<Vector> dec_b;  // per view, d_j

    std::size_t view_count() const { return views.size(); }
    std::size_t pivot() const;                       // index of the pivot view
    std::size_t view_index(const std::string& name) const;

    // Checks all structural invariants (shapes, exactly one pivot,
    // unique names). Throws ContractError.
    void validate() const;
};

// Fresh model: encoder/decoder weights fan-scaled uniform, biases zero.
// Draw order is enc_w[0..M-1] then dec_w[0..M-1], each row-major.
ModelParams init_model(Rng& rng, std::size_t hidden_dim, std::vector<ViewSpec> views,
                       Activation enc_act, Activation dec_act);

Vector encode_view(const ModelParams& m, const ViewValue& x);
Vector encode_joint(const ModelParams& m, std::span<const ViewValue> xs);
Vector decode_view(const ModelParams& m, const Vector& hidden, std::size_t view);
// Decodes view j and the pivot view from the same hidden vector.
std::pair<Vector, Vector> decode_pair(const ModelParams& m, const Vector& hidden, std::size_t view);

// ---------------------------------------------------------------------------
// Serialization. Binary container, all integers little-endian:
//   magic "BCN1" | u32 version (=1) | u32 M | u32 k
//   per view: u32 name length | UTF-8 name | u32 d_j | u8 pivot | u8 input kind
//   u8 enc activation | u8 dec activation
//   tensors W_0..W_{M-1}, b, W'_0..W'_{M-1}, c_0..c_{M-1},
//   row-major IEEE-754 binary64 little-endian.
// Round-trips are bitwise.

std::vector<std::uint8_t> save(const ModelParams& m);
ModelParams load(std::span<const std::uint8_t> bytes);

void save_file(const ModelParams& m, const std::string& path);
ModelParams load_file(const std::string& path);

}  // namespace bcn
