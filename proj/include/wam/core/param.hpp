#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wam/core/rng.hpp"
#include "wam/core/tensor.hpp"

namespace wam {

// Trainable tensor with gradient accumulator and Adam moments.
template <typename T>
struct ParamT {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;
    Tensor<T> m;
    Tensor<T> v;
    std::int64_t step_count = 0;

    ParamT() = default;
    ParamT(std::string n, Shape s)
        : name(std::move(n)), value(s), grad(s), m(s), v(s) {}

    void zero_grad() { grad.fill(T(0)); }
};

using Param = ParamT<float>;

// Centered uniform fan-in init (variance 1/fan_in); biases stay zero.
template <typename T>
void init_fanin_uniform(ParamT<T>& p, std::int64_t fan_in, Rng& rng) {
    double limit = std::sqrt(3.0 / static_cast<double>(fan_in));
    for (auto& x : p.value.data) x = static_cast<T>(rng.uniform(-limit, limit));
}

// Bias-corrected Adam over a parameter group. Throws before touching any
// state if a gradient is non-finite, naming the parameter. Gradients are
// zeroed after a successful step.
template <typename T>
void adam_step(const std::vector<ParamT<T>*>& params, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double epsilon = 1e-8);

}  // namespace wam
