#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "wam/core/param.hpp"
#include "wam/core/rng.hpp"
#include "wam/core/tensor.hpp"

namespace wam {

enum class Mode { Train, Infer };

// Per-layer running statistics for batch normalization. Lives with the model,
// not on the tape; train mode updates it in place.
template <typename T>
struct BatchNormState {
    std::vector<T> running_mean;
    std::vector<T> running_var;
    bool initialized = false;

    explicit BatchNormState(int channels = 0)
        : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

// Handle to a tape slot.
struct Var {
    int id = -1;
    Shape shape;
};

// Reverse-mode tape. Ops append a value slot plus a backward closure;
// backward() replays closures in reverse creation order, which is a valid
// topological order because the graph is built forward.
template <typename T>
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;             // closures capture this
    Graph& operator=(const Graph&) = delete;

    // --- tape entry points -------------------------------------------------
    Var constant(Tensor<T> value);                 // no gradient tracked
    Var leaf(Tensor<T> value);                     // gradient tracked, read via grad()
    Var param(ParamT<T>& p);                       // leaf bound to p; backward() adds into p.grad

    // --- ops ---------------------------------------------------------------
    Var conv2d_same(Var x, Var kernel, Var bias);
    Var batch_norm(Var x, Var gamma, Var beta, BatchNormState<T>& stats, Mode mode,
                   T momentum = T(0.9), T epsilon = T(1e-5));
    Var relu(Var x);
    Var gelu(Var x);
    Var max_pool2(Var x);
    Var dense(Var x, Var w, Var b);
    Var dropout(Var x, double rate, Mode mode, Rng& rng);
    Var add(Var a, Var b);
    Var reshape(Var x, Shape target);
    Var avg_pool_to(Var x, int grid_h, int grid_w);

    // Mean of -log softmax(logits)[target] over mask-selected rows. logits'
    // last extent is the class count; targets/mask cover the leading extents.
    Var sparse_categorical_xent(Var logits, const std::vector<int>& targets,
                                const std::vector<std::uint8_t>& mask);

    Var mse(Var pred, const Tensor<T>& target);

    // scalar projection sum_i x_i * w_i (fixed weights)
    Var weighted_sum(Var x, const Tensor<T>& weights);

    // --- execution ----------------------------------------------------------
    const Tensor<T>& value(Var v) const { return nodes_[v.id].value; }
    const Tensor<T>& grad(Var v) const;
    void backward(Var loss);

private:
    struct Node {
        Tensor<T> value;
        Tensor<T> grad;
        bool needs_grad = false;
        bool grad_ready = false;
        std::function<void()> backward;
    };

    Var push(Tensor<T> value, bool needs_grad);
    Tensor<T>& grad_buf(int id);
    bool tracked(Var v) const { return nodes_[v.id].needs_grad; }

    std::vector<Node> nodes_;
    std::vector<std::pair<int, ParamT<T>*>> bindings_;
};

using Graphf = Graph<float>;
using Graphd = Graph<double>;

}  // namespace wam
