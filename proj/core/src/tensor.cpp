#include "seek/tensor.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace seek {

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    std::size_t n = 1;
    for (int dim : shape) {
        if (dim <= 0) fail("ShapeMismatch", "non-positive dimension in " + shape_str(shape));
        n *= static_cast<std::size_t>(dim);
    }
    if (n != data.size())
        fail("ShapeMismatch", "value count " + std::to_string(data.size()) + " does not fill " + shape_str(shape));
}

Tensor Tensor::zeros(std::vector<int> shape) {
    std::size_t n = 1;
    for (int dim : shape) n *= static_cast<std::size_t>(dim);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::scalar(double v) { return Tensor({1, 1}, {v}); }

Tensor Tensor::row(std::vector<double> v) {
    int n = static_cast<int>(v.size());
    return Tensor({1, n}, std::move(v));
}

Tensor Tensor::matrix(int r, int c, std::vector<double> v) { return Tensor({r, c}, std::move(v)); }

std::size_t Tensor::numel() const { return data.size(); }

int Tensor::rows() const { return shape.size() == 2 ? shape[0] : 1; }

int Tensor::cols() const {
    if (shape.size() == 2) return shape[1];
    if (shape.size() == 1) return shape[0];
    fail("ShapeMismatch", "rank-2 access on tensor of shape " + shape_str(shape));
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(data.size(), 0.0); }

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
    os << "]";
    return os.str();
}

namespace {

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) fail("ParseError", "truncated checkpoint header field");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64_array(std::ostream& os, const std::vector<double>& v) {
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, 8);
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
        os.write(reinterpret_cast<const char*>(b), 8);
    }
}

void get_f64_array(std::istream& is, std::vector<double>& v) {
    for (double& x : v) {
        unsigned char b[8];
        is.read(reinterpret_cast<char*>(b), 8);
        if (!is) fail("ParseError", "truncated checkpoint payload");
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        std::memcpy(&x, &bits, 8);
    }
}

} // namespace

void save_checkpoint(const std::string& path, const std::vector<const Parameter*>& params) {
    std::ofstream os(path, std::ios::binary);
    if (!os) fail("MissingFile", "cannot open checkpoint for writing: " + path);
    put_u32(os, static_cast<std::uint32_t>(params.size()));
    for (const Parameter* p : params) {
        put_u32(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        put_u32(os, static_cast<std::uint32_t>(p->value.shape.size()));
        for (int dim : p->value.shape) put_u32(os, static_cast<std::uint32_t>(dim));
        put_f64_array(os, p->value.data);
    }
    if (!os) fail("ParseError", "short write to checkpoint: " + path);
}

void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params) {
    std::ifstream is(path, std::ios::binary);
    if (!is) fail("MissingFile", "cannot open checkpoint: " + path);
    std::uint32_t count = get_u32(is);

    std::unordered_map<std::string, Tensor> stored;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint32_t name_len = get_u32(is);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) fail("ParseError", "truncated checkpoint name");
        std::uint32_t rank = get_u32(is);
        std::vector<int> shape(rank);
        std::size_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            shape[r] = static_cast<int>(get_u32(is));
            n *= static_cast<std::size_t>(shape[r]);
        }
        std::vector<double> data(n);
        get_f64_array(is, data);
        if (!stored.emplace(name, Tensor(std::move(shape), std::move(data))).second)
            fail("ParseError", "duplicate parameter in checkpoint: " + name);
    }

    for (Parameter* p : params) {
        auto it = stored.find(p->name);
        if (it == stored.end()) fail("ParseError", "checkpoint is missing parameter: " + p->name);
        if (it->second.shape != p->value.shape)
            fail("ShapeMismatch", "checkpoint shape " + shape_str(it->second.shape) + " for " + p->name +
                                      ", model expects " + shape_str(p->value.shape));
        p->value.data = std::move(it->second.data);
        stored.erase(it);
    }
    if (!stored.empty()) fail("ParseError", "checkpoint holds unknown parameter: " + stored.begin()->first);
}

} // namespace seek
