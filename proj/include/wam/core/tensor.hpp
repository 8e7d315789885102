#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "wam/core/aligned.hpp"
#include "wam/core/error.hpp"

namespace wam {

// Dense shape of rank 1..4, laid out row-major with the last extent fastest
// (batch, height, width, channels for rank-4 activations).
class Shape {
public:
    Shape() : rank_(0), d_{0, 0, 0, 0} {}
    Shape(std::initializer_list<int> dims) : rank_(0), d_{0, 0, 0, 0} {
        if (dims.size() == 0 || dims.size() > 4)
            throw Error("Shape: rank must be 1..4, got " + std::to_string(dims.size()));
        for (int e : dims) {
            if (e < 1) throw Error("Shape: extent must be >= 1, got " + std::to_string(e));
            d_[rank_++] = e;
        }
    }

    int rank() const { return rank_; }
    int operator[](int i) const { return d_[i]; }
    int dim(int i) const { return d_[i]; }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (int i = 0; i < rank_; ++i) n *= d_[i];
        return n;
    }

    bool operator==(const Shape& o) const {
        if (rank_ != o.rank_) return false;
        for (int i = 0; i < rank_; ++i)
            if (d_[i] != o.d_[i]) return false;
        return true;
    }
    bool operator!=(const Shape& o) const { return !(*this == o); }

    std::string str() const {
        std::string s = "(";
        for (int i = 0; i < rank_; ++i) {
            if (i) s += ",";
            s += std::to_string(d_[i]);
        }
        return s + ")";
    }

private:
    int rank_;
    std::array<int, 4> d_;
};

// Contiguous row-major tensor. float for training, double for the
// finite-difference gradient suites.
template <typename T>
struct Tensor {
    Shape shape;
    AVec<T> data;  // 64-byte aligned, see aligned.hpp

    Tensor() = default;
    explicit Tensor(Shape s) : shape(s), data(static_cast<std::size_t>(s.numel()), T(0)) {}
    Tensor(Shape s, AVec<T> values) : shape(s), data(std::move(values)) {
        if (static_cast<std::int64_t>(data.size()) != shape.numel())
            throw Error("Tensor: data length " + std::to_string(data.size()) +
                        " does not match shape " + shape.str());
    }

    std::int64_t numel() const { return shape.numel(); }

    T& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    // rank-4 accessor (n, h, w, c)
    T& at(int n, int h, int w, int c) {
        return data[((static_cast<std::size_t>(n) * shape[1] + h) * shape[2] + w) * shape[3] + c];
    }
    const T& at(int n, int h, int w, int c) const {
        return data[((static_cast<std::size_t>(n) * shape[1] + h) * shape[2] + w) * shape[3] + c];
    }

    template <typename U>
    Tensor<U> cast() const {
        Tensor<U> out;
        out.shape = shape;
        out.data.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Tensorf = Tensor<float>;
using Tensord = Tensor<double>;

}  // namespace wam
