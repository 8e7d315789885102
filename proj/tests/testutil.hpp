#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "wam/core/graph.hpp"
#include "wam/core/rng.hpp"
#include "wam/core/tensor.hpp"

namespace wamtest {

inline wam::Tensord rand_tensor(wam::Shape s, wam::Rng& rng, double lo = -1.0, double hi = 1.0) {
    wam::Tensord t(s);
    for (auto& x : t.data) x = rng.uniform(lo, hi);
    return t;
}

inline wam::Tensorf rand_tensorf(wam::Shape s, wam::Rng& rng, double lo = -1.0, double hi = 1.0) {
    wam::Tensorf t(s);
    for (auto& x : t.data) x = static_cast<float>(rng.uniform(lo, hi));
    return t;
}

// Central finite-difference check of a differentiable composite against the
// tape's analytic gradients, in 64-bit mode. `build` must be pure: invoked
// repeatedly with perturbed copies of `inputs`, it rebuilds the graph from a
// fresh state each time (local BatchNormState, freshly seeded Rng).
//
// The op output is projected to a scalar with fixed random weights so that
// one backward pass covers every output element. Returns the worst relative
// error over all checked input elements.
inline double max_grad_rel_error(
    const std::function<wam::Var(wam::Graph<double>&, const std::vector<wam::Var>&)>& build,
    const std::vector<wam::Tensord>& inputs, std::uint64_t proj_seed, double h = 1e-5) {
    using wam::Graph;
    using wam::Tensord;
    using wam::Var;

    // fixed projection weights
    wam::Rng proj_rng(proj_seed);
    Tensord proj;
    {
        Graph<double> g;
        std::vector<Var> vars;
        vars.reserve(inputs.size());
        for (const Tensord& t : inputs) vars.push_back(g.leaf(t));
        Var out = build(g, vars);
        proj = rand_tensor(out.shape, proj_rng, -1.0, 1.0);
    }

    auto eval = [&](const std::vector<Tensord>& ins) {
        Graph<double> g;
        std::vector<Var> vars;
        vars.reserve(ins.size());
        for (const Tensord& t : ins) vars.push_back(g.leaf(t));
        Var out = build(g, vars);
        return g.value(g.weighted_sum(out, proj))[0];
    };

    // analytic gradients
    std::vector<Tensord> analytic;
    {
        Graph<double> g;
        std::vector<Var> vars;
        vars.reserve(inputs.size());
        for (const Tensord& t : inputs) vars.push_back(g.leaf(t));
        Var out = build(g, vars);
        Var loss = g.weighted_sum(out, proj);
        g.backward(loss);
        for (const Var& v : vars) analytic.push_back(g.grad(v));
    }

    double worst = 0.0;
    std::vector<Tensord> probe = inputs;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        for (std::int64_t i = 0; i < inputs[t].numel(); ++i) {
            const double orig = probe[t][i];
            probe[t][i] = orig + h;
            const double fp = eval(probe);
            probe[t][i] = orig - h;
            const double fm = eval(probe);
            probe[t][i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[t][i];
            const double rel = std::fabs(a - numeric) / std::max(std::fabs(a) + std::fabs(numeric), 1e-6);
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace wamtest
