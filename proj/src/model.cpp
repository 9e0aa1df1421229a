#include "bcn/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "bcn/errors.hpp"

namespace bcn {

std::size_t ModelParams::pivot() const {
    for (std::size_t j = 0; j < views.size(); ++j)
        if (views[j].pivot) return j;
    throw ContractError("model has no pivot view");
}

std::size_t ModelParams::view_index(const std::string& name) const {
    for (std::size_t j = 0; j < views.size(); ++j)
        if (views[j].name == name) return j;
    throw ContractError("unknown view name: \"" + name + "\"");
}

void ModelParams::validate() const {
    const std::size_t m = views.size();
    if (m < 2) throw ContractError("model needs at least 2 views");
    if (enc_w.size() != m || dec_w.size() != m || dec_b.size() != m)
        throw ContractError("model tensor lists must have one entry per view");
    if (enc_b.size() != hidden_dim)
        throw ContractError("encoder bias dim must equal hidden_dim");

    std::size_t pivots = 0;
    std::unordered_set<std::string> names;
    for (std::size_t j = 0; j < m; ++j) {
        const ViewSpec& v = views[j];
        if (v.dim < 1) throw ContractError("view \"" + v.name + "\" has dim 0");
        if (!names.insert(v.name).second)
            throw ContractError("duplicate view name: \"" + v.name + "\"");
        if (v.pivot) ++pivots;
        if (enc_w[j].rows != hidden_dim || enc_w[j].cols != v.dim)
            throw ContractError("encoder matrix shape mismatch for view \"" + v.name + "\"");
        if (dec_w[j].rows != v.dim || dec_w[j].cols != hidden_dim)
            throw ContractError("decoder matrix shape mismatch for view \"" + v.name + "\"");
        if (dec_b[j].size() != v.dim)
            throw ContractError("decoder bias dim mismatch for view \"" + v.name + "\"");
    }
    if (pivots != 1) throw ContractError("model must mark exactly one pivot view");
}

ModelParams init_model(Rng& rng, std::size_t hidden_dim, std::vector<ViewSpec> views,
                       Activation enc_act, Activation dec_act) {
    if (hidden_dim < 1) throw ContractError("hidden_dim must be >= 1");
    ModelParams m;
    m.hidden_dim = hidden_dim;
    m.enc_act = enc_act;
    m.dec_act = dec_act;
    m.views = std::move(views);
    m.enc_b.assign(hidden_dim, 0.0);
    for (const ViewSpec& v : m.views)
        m.enc_w.push_back(init_params(rng, v.dim, hidden_dim, InitScheme::UniformScaled));
    for (const ViewSpec& v : m.views) {
        m.dec_w.push_back(init_params(rng, hidden_dim, v.dim, InitScheme::UniformScaled));
        m.dec_b.emplace_back(v.dim, 0.0);
    }
    m.validate();
    return m;
}

namespace {

void check_view_value(const ModelParams& m, const ViewValue& x) {
    if (x.view >= m.view_count())
        throw ContractError("unknown view id " + std::to_string(x.view) + " (model has " +
                            std::to_string(m.view_count()) + " views)");
    const std::size_t d = view_dim(x.data);
    if (d != m.views[x.view].dim)
        throw ContractError("input dim " + std::to_string(d) + " does not match view \"" +
                            m.views[x.view].name + "\" dim " + std::to_string(m.views[x.view].dim));
}

}  // namespace

Vector encode_view(const ModelParams& m, const ViewValue& x) {
    check_view_value(m, x);
    Vector pre = m.enc_b;
    add_matvec(pre, m.enc_w[x.view], x.data);
    return activate(m.enc_act, pre);
}

Vector encode_joint(const ModelParams& m, std::span<const ViewValue> xs) {
    if (xs.empty()) throw ContractError("encode_joint needs at least one view value");
    Vector pre = m.enc_b;
    std::unordered_set<std::size_t> seen;
    for (const ViewValue& x : xs) {
        check_view_value(m, x);
        if (!seen.insert(x.view).second)
            throw ContractError("duplicate view id " + std::to_string(x.view) + " in encode_joint");
        add_matvec(pre, m.enc_w[x.view], x.data);
    }
    return activate(m.enc_act, pre);
}

Vector decode_view(const ModelParams& m, const Vector& hidden, std::size_t view) {
    if (view >= m.view_count())
        throw ContractError("unknown view id " + std::to_string(view));
    if (hidden.size() != m.hidden_dim)
        throw ContractError("hidden dim " + std::to_string(hidden.size()) +
                            " does not match model hidden_dim " + std::to_string(m.hidden_dim));
    Vector pre = m.dec_b[view];
    for (std::size_t i = 0; i < m.dec_w[view].rows; ++i) {
        const double* row = m.dec_w[view].data.data() + i * m.hidden_dim;
        double acc = 0.0;
        for (std::size_t j = 0; j < m.hidden_dim; ++j) acc += row[j] * hidden[j];
        pre[i] += acc;
    }
    return activate(m.dec_act, pre);
}

std::pair<Vector, Vector> decode_pair(const ModelParams& m, const Vector& hidden, std::size_t view) {
    return {decode_view(m, hidden, view), decode_view(m, hidden, m.pivot())};
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[4] = {'B', 'C', 'N', '1'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > bytes.size())
            throw FormatError(FormatError::Code::Truncated,
                              "truncated model payload at byte " + std::to_string(pos));
    }
    std::uint8_t u8() {
        need(1);
        return bytes[pos++];
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(bits);
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

void check_finite(const std::vector<double>& data, const char* what) {
    for (double v : data)
        if (!std::isfinite(v))
            throw FormatError(FormatError::Code::Corrupt,
                              std::string("corrupt model file: non-finite entry in ") + what);
}

}  // namespace

std::vector<std::uint8_t> save(const ModelParams& m) {
    m.validate();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), kMagic, kMagic + 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(m.view_count()));
    put_u32(out, static_cast<std::uint32_t>(m.hidden_dim));
    for (const ViewSpec& v : m.views) {
        put_u32(out, static_cast<std::uint32_t>(v.name.size()));
        out.insert(out.end(), v.name.begin(), v.name.end());
        put_u32(out, static_cast<std::uint32_t>(v.dim));
        out.push_back(v.pivot ? 1 : 0);
        out.push_back(static_cast<std::uint8_t>(v.input_kind));
    }
    out.push_back(static_cast<std::uint8_t>(m.enc_act));
    out.push_back(static_cast<std::uint8_t>(m.dec_act));
    for (const Matrix& w : m.enc_w)
        for (double x : w.data) put_f64(out, x);
    for (double x : m.enc_b) put_f64(out, x);
    for (const Matrix& w : m.dec_w)
        for (double x : w.data) put_f64(out, x);
    for (const Vector& c : m.dec_b)
        for (double x : c) put_f64(out, x);
    return out;
}

ModelParams load(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError(FormatError::Code::BadMagic, "bad magic: not a model file");
    Reader r{bytes, 4};
    const std::uint32_t version = r.u32();
    if (version != kVersion)
        throw FormatError(FormatError::Code::BadVersion,
                          "unsupported model format version " + std::to_string(version));

    ModelParams m;
    const std::uint32_t n_views = r.u32();
    m.hidden_dim = r.u32();
    for (std::uint32_t j = 0; j < n_views; ++j) {
        ViewSpec v;
        const std::uint32_t name_len = r.u32();
        v.name = r.str(name_len);
        v.dim = r.u32();
        v.pivot = r.u8() != 0;
        const std::uint8_t kind = r.u8();
        if (kind > 1)
            throw FormatError(FormatError::Code::Corrupt, "corrupt model file: bad input kind");
        v.input_kind = static_cast<InputKind>(kind);
        m.views.push_back(std::move(v));
    }
    const std::uint8_t fa = r.u8();
    const std::uint8_t pa = r.u8();
    if (fa > 3 || pa > 3)
        throw FormatError(FormatError::Code::Corrupt, "corrupt model file: bad activation id");
    m.enc_act = static_cast<Activation>(fa);
    m.dec_act = static_cast<Activation>(pa);

    for (const ViewSpec& v : m.views) {
        Matrix w(m.hidden_dim, v.dim);
        for (double& x : w.data) x = r.f64();
        m.enc_w.push_back(std::move(w));
    }
    m.enc_b.resize(m.hidden_dim);
    for (double& x : m.enc_b) x = r.f64();
    for (const ViewSpec& v : m.views) {
        Matrix w(v.dim, m.hidden_dim);
        for (double& x : w.data) x = r.f64();
        m.dec_w.push_back(std::move(w));
    }
    for (const ViewSpec& v : m.views) {
        Vector c(v.dim);
        for (double& x : c) x = r.f64();
        m.dec_b.push_back(std::move(c));
    }
    if (r.pos != bytes.size())
        throw FormatError(FormatError::Code::Corrupt, "corrupt model file: trailing bytes");

    try {
        m.validate();
    } catch (const ContractError& e) {
        throw FormatError(FormatError::Code::Corrupt,
                          std::string("corrupt model file: ") + e.what());
    }
    for (const Matrix& w : m.enc_w) check_finite(w.data, "encoder weights");
    check_finite(m.enc_b, "encoder bias");
    for (const Matrix& w : m.dec_w) check_finite(w.data, "decoder weights");
    for (const Vector& c : m.dec_b) check_finite(c, "decoder bias");
    return m;
}

void save_file(const ModelParams& m, const std::string& path) {
    const auto bytes = save(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open \"" + path + "\" for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("failed writing \"" + path + "\"");
}

ModelParams load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open \"" + path + "\"");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return load(bytes);
}

}  // namespace bcn
