#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "seek/error.hpp"

namespace seek {

// Dense row-major tensor of 64-bit floats. The model only ever builds
// rank-2 values (vectors are 1xN rows, scalars are 1x1), but the shape
// field and the checkpoint format carry arbitrary rank.
struct Tensor {
    std::vector<int> shape;
    std::vector<double> data;
    std::vector<double> grad; // empty until materialized; matches data size when present

    Tensor() = default;
    Tensor(std::vector<int> s, std::vector<double> d);

    static Tensor zeros(std::vector<int> shape);
    static Tensor scalar(double v);
    static Tensor row(std::vector<double> v);            // 1 x n
    static Tensor matrix(int r, int c, std::vector<double> v);

    std::size_t numel() const;
    int rows() const; // rank-2 view; scalars/rows are 1 x n
    int cols() const;

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    void ensure_grad();  // allocate zero grad slot if absent
    void zero_grad();    // allocate + clear
};

std::string shape_str(const std::vector<int>& shape);

// A named, optionally trainable tensor. Names are unique within a model
// and double as the checkpoint keys.
struct Parameter {
    std::string name;
    Tensor value;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, Tensor v, bool t = true)
        : name(std::move(n)), value(std::move(v)), trainable(t) {}
};

// Checkpoint file layout: u32 parameter count, then per parameter
// u32 name length, name bytes, u32 rank, u32 dims[rank], raw
// little-endian float64 payload. Matching is by name on load.
void save_checkpoint(const std::string& path, const std::vector<const Parameter*>& params);
void load_checkpoint(const std::string& path, const std::vector<Parameter*>& params);

} // namespace seek
