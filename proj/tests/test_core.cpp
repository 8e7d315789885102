#include <doctest.h>

#include <cmath>

#include "testutil.hpp"
#include "wam/core/error.hpp"
#include "wam/core/graph.hpp"
#include "wam/core/param.hpp"

using namespace wam;
using wamtest::max_grad_rel_error;
using wamtest::rand_tensor;

TEST_CASE("conv2d_same: identity kernel passes input through") {
    Graphd g;
    Rng rng(1);
    Tensord x = rand_tensor(Shape{1, 4, 4, 1}, rng);
    Tensord k(Shape{1, 1, 1, 1});
    k[0] = 1.0;
    Tensord b(Shape{1});
    Var y = g.conv2d_same(g.constant(x), g.constant(k), g.constant(b));
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(g.value(y)[i] == doctest::Approx(x[i]));
}

TEST_CASE("conv2d_same: zero kernel maps everything to the bias") {
    Graphd g;
    Rng rng(2);
    Tensord x = rand_tensor(Shape{2, 4, 4, 3}, rng);
    Tensord k(Shape{3, 3, 3, 2});
    Tensord b(Shape{2});
    b[0] = 0.25;
    b[1] = -1.5;
    Var y = g.conv2d_same(g.constant(x), g.constant(k), g.constant(b));
    const Tensord& out = g.value(y);
    for (std::int64_t i = 0; i < out.numel(); ++i)
        CHECK(out[i] == doctest::Approx(b[i % 2]).epsilon(1e-12));
}

TEST_CASE("conv2d_same: spatial extents preserved for odd kernels") {
    Rng rng(3);
    for (int k : {1, 3, 5}) {
        Graphd g;
        Tensord x = rand_tensor(Shape{1, 6, 8, 2}, rng);
        Tensord kt = rand_tensor(Shape{k, k, 2, 4}, rng);
        Tensord b(Shape{4});
        Var y = g.conv2d_same(g.constant(x), g.constant(kt), g.constant(b));
        CHECK(y.shape[1] == 6);
        CHECK(y.shape[2] == 8);
        CHECK(y.shape[3] == 4);
    }
}

TEST_CASE("conv2d_same: shape mismatch names both shapes") {
    Graphd g;
    Tensord x(Shape{1, 4, 4, 3});
    Tensord k(Shape{3, 3, 2, 2});
    Tensord b(Shape{2});
    CHECK_THROWS_WITH_AS(g.conv2d_same(g.constant(x), g.constant(k), g.constant(b)),
                         doctest::Contains("(1,4,4,3)"), Error);
}

TEST_CASE("conv2d_same: gradients match central finite differences") {
    Rng rng(4);
    Tensord x = rand_tensor(Shape{1, 4, 4, 2}, rng);
    Tensord k = rand_tensor(Shape{3, 3, 2, 2}, rng);
    Tensord b = rand_tensor(Shape{2}, rng);
    double err = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) {
            return g.conv2d_same(v[0], v[1], v[2]);
        },
        {x, k, b}, 99);
    CHECK(err < 1e-4);
}

TEST_CASE("batch_norm: train mode normalizes each channel") {
    Graphd g;
    Rng rng(5);
    Tensord x = rand_tensor(Shape{4, 3, 3, 2}, rng, -3.0, 5.0);
    Tensord gamma(Shape{2});
    gamma.fill(1.0);
    Tensord beta(Shape{2});
    BatchNormState<double> stats(2);
    Var y = g.batch_norm(g.constant(x), g.constant(gamma), g.constant(beta), stats, Mode::Train);
    const Tensord& out = g.value(y);
    for (int c = 0; c < 2; ++c) {
        double mean = 0.0, var = 0.0;
        const std::int64_t n = out.numel() / 2;
        for (std::int64_t i = c; i < out.numel(); i += 2) mean += out[i];
        mean /= static_cast<double>(n);
        for (std::int64_t i = c; i < out.numel(); i += 2) var += (out[i] - mean) * (out[i] - mean);
        var /= static_cast<double>(n);
        CHECK(std::fabs(mean) < 1e-5);
        CHECK(std::fabs(var - 1.0) < 1e-2);  // epsilon 1e-5 shrinks variance slightly
    }
}

TEST_CASE("batch_norm: zero gamma collapses output to beta") {
    Graphd g;
    Rng rng(6);
    Tensord x = rand_tensor(Shape{2, 4, 4, 3}, rng);
    Tensord gamma(Shape{3});
    Tensord beta(Shape{3});
    beta[0] = 0.7;
    beta[1] = -0.2;
    beta[2] = 3.0;
    BatchNormState<double> stats(3);
    Var y = g.batch_norm(g.constant(x), g.constant(gamma), g.constant(beta), stats, Mode::Train);
    const Tensord& out = g.value(y);
    for (std::int64_t i = 0; i < out.numel(); ++i) CHECK(out[i] == doctest::Approx(beta[i % 3]));
}

TEST_CASE("batch_norm: inference before any train step is an error") {
    Graphd g;
    Tensord x(Shape{1, 2, 2, 1});
    Tensord gamma(Shape{1});
    Tensord beta(Shape{1});
    BatchNormState<double> stats(1);
    CHECK_THROWS_WITH_AS(
        g.batch_norm(g.constant(x), g.constant(gamma), g.constant(beta), stats, Mode::Infer),
        doctest::Contains("uninitialized running statistics"), Error);
}

TEST_CASE("batch_norm: gradients match finite differences") {
    Rng rng(7);
    Tensord x = rand_tensor(Shape{3, 2, 2, 2}, rng, -2.0, 2.0);
    Tensord gamma = rand_tensor(Shape{2}, rng, 0.5, 1.5);
    Tensord beta = rand_tensor(Shape{2}, rng);
    double err = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) {
            BatchNormState<double> stats(2);
            return g.batch_norm(v[0], v[1], v[2], stats, Mode::Train);
        },
        {x, gamma, beta}, 98);
    CHECK(err < 1e-4);
}

TEST_CASE("relu and gelu point values") {
    Graphd g;
    Tensord x(Shape{4});
    x[0] = -2.0;
    x[1] = 3.0;
    x[2] = 0.0;
    x[3] = 1.0;
    const Tensord& r = g.value(g.relu(g.constant(x)));
    CHECK(r[0] == 0.0);
    CHECK(r[1] == 3.0);
    const Tensord& ge = g.value(g.gelu(g.constant(x)));
    CHECK(ge[2] == 0.0);
    // error-function oracle for the standard normal CDF at 1
    const double phi1 = 0.5 * (1.0 + std::erf(1.0 / std::sqrt(2.0)));
    CHECK(std::fabs(ge[3] - 1.0 * phi1) < 1e-12);
    CHECK(ge[3] == doctest::Approx(0.841345).epsilon(1e-5));
}

TEST_CASE("relu/gelu gradients match finite differences") {
    Rng rng(8);
    // keep relu probes away from the kink at zero
    Tensord x(Shape{2, 3, 3, 2});
    for (auto& v : x.data) {
        double u = rng.uniform(0.2, 1.5);
        v = rng.bernoulli(0.5) ? u : -u;
    }
    double err_relu = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) { return g.relu(v[0]); }, {x}, 97);
    CHECK(err_relu < 1e-4);
    Tensord x2 = rand_tensor(Shape{2, 3, 3, 2}, rng, -2.0, 2.0);
    double err_gelu = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) { return g.gelu(v[0]); }, {x2}, 96);
    CHECK(err_gelu < 1e-4);
}

TEST_CASE("max_pool2 basics") {
    Graphd g;
    Tensord x(Shape{1, 2, 2, 1});
    x[0] = 1.0;
    x[1] = 2.0;
    x[2] = 3.0;
    x[3] = 4.0;
    const Tensord& y = g.value(g.max_pool2(g.constant(x)));
    CHECK(y.numel() == 1);
    CHECK(y[0] == 4.0);

    Tensord c(Shape{1, 4, 4, 2});
    c.fill(0.5);
    Graphd g2;
    const Tensord& yc = g2.value(g2.max_pool2(g2.constant(c)));
    for (std::int64_t i = 0; i < yc.numel(); ++i) CHECK(yc[i] == 0.5);

    Graphd g3;
    Tensord odd(Shape{1, 3, 4, 1});
    CHECK_THROWS_AS(g3.max_pool2(g3.constant(odd)), Error);
}

TEST_CASE("max_pool2 routes gradient to the first max on ties") {
    Graphd g;
    Tensord x(Shape{1, 2, 2, 1});
    x.fill(5.0);
    Var xv = g.leaf(x);
    Var y = g.max_pool2(xv);
    Tensord proj(Shape{1, 1, 1, 1});
    proj[0] = 1.0;
    g.backward(g.weighted_sum(y, proj));
    const Tensord& dx = g.grad(xv);
    CHECK(dx[0] == 1.0);
    CHECK(dx[1] == 0.0);
    CHECK(dx[2] == 0.0);
    CHECK(dx[3] == 0.0);
}

TEST_CASE("max_pool2 gradient matches finite differences") {
    Rng rng(9);
    // distinct values so the argmax is stable under the probe
    Tensord x(Shape{1, 4, 4, 2});
    for (std::int64_t i = 0; i < x.numel(); ++i) x[i] = 0.01 * static_cast<double>(i * 7 % 29) + rng.uniform(0.0, 0.001);
    double err = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) { return g.max_pool2(v[0]); }, {x}, 95);
    CHECK(err < 1e-4);
}

TEST_CASE("dense: identity weight and zero bias pass through") {
    Graphd g;
    Rng rng(10);
    Tensord x = rand_tensor(Shape{3, 4}, rng);
    Tensord w(Shape{4, 4});
    for (int i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;
    Tensord b(Shape{4});
    const Tensord& y = g.value(g.dense(g.constant(x), g.constant(w), g.constant(b)));
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("dense: zero weight broadcasts the bias") {
    Graphd g;
    Rng rng(11);
    Tensord x = rand_tensor(Shape{3, 4}, rng);
    Tensord w(Shape{4, 2});
    Tensord b(Shape{2});
    b[0] = 1.25;
    b[1] = -0.5;
    const Tensord& y = g.value(g.dense(g.constant(x), g.constant(w), g.constant(b)));
    for (std::int64_t i = 0; i < y.numel(); ++i) CHECK(y[i] == doctest::Approx(b[i % 2]));
}

TEST_CASE("dense: shape mismatch is a configuration error") {
    Graphd g;
    Tensord x(Shape{3, 4});
    Tensord w(Shape{5, 2});
    Tensord b(Shape{2});
    CHECK_THROWS_AS(g.dense(g.constant(x), g.constant(w), g.constant(b)), Error);
}

TEST_CASE("dense: gradients match finite differences") {
    Rng rng(12);
    Tensord x = rand_tensor(Shape{3, 5}, rng);
    Tensord w = rand_tensor(Shape{5, 4}, rng);
    Tensord b = rand_tensor(Shape{4}, rng);
    double err = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) { return g.dense(v[0], v[1], v[2]); },
        {x, w, b}, 94);
    CHECK(err < 1e-4);
}

TEST_CASE("dropout: rate 0 and inference mode are identities") {
    Rng rng(13);
    Tensord x = rand_tensor(Shape{2, 3, 3, 2}, rng);
    for (Mode mode : {Mode::Train, Mode::Infer}) {
        Graphd g;
        Rng r(77);
        const Tensord& y = g.value(g.dropout(g.constant(x), 0.0, mode, r));
        for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
    }
    Graphd g;
    Rng r(77);
    const Tensord& y = g.value(g.dropout(g.constant(x), 0.7, Mode::Infer, r));
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(y[i] == x[i]);
}

TEST_CASE("dropout: zeroed fraction concentrates at the rate") {
    Graphd g;
    Tensord x(Shape{100, 100, 10, 1});
    x.fill(1.0);
    Rng r(2024);
    const Tensord& y = g.value(g.dropout(g.constant(x), 0.7, Mode::Train, r));
    std::int64_t zeros = 0;
    for (std::int64_t i = 0; i < y.numel(); ++i)
        if (y[i] == 0.0) ++zeros;
    double frac = static_cast<double>(zeros) / static_cast<double>(y.numel());
    CHECK(std::fabs(frac - 0.7) < 0.01);
    // survivors rescaled by 1/(1 - rate)
    for (std::int64_t i = 0; i < y.numel(); ++i)
        if (y[i] != 0.0) CHECK(y[i] == doctest::Approx(1.0 / 0.3));
}

TEST_CASE("dropout: rate >= 1 rejected") {
    Graphd g;
    Tensord x(Shape{4});
    Rng r(1);
    CHECK_THROWS_AS(g.dropout(g.constant(x), 1.0, Mode::Train, r), Error);
}

TEST_CASE("dropout: gradient matches finite differences with a fixed mask") {
    Rng rng(14);
    Tensord x = rand_tensor(Shape{4, 8}, rng);
    double err = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) {
            Rng r(555);  // same mask on every evaluation
            return g.dropout(v[0], 0.5, Mode::Train, r);
        },
        {x}, 93);
    CHECK(err < 1e-4);
}

TEST_CASE("sparse_categorical_xent: uniform logits give log K") {
    Graphd g;
    const int k = 64;
    Tensord logits(Shape{4, k});
    std::vector<int> targets = {3, 10, 60, 0};
    std::vector<std::uint8_t> mask = {1, 1, 1, 1};
    Var loss = g.sparse_categorical_xent(g.constant(logits), targets, mask);
    CHECK(g.value(loss)[0] == doctest::Approx(std::log(64.0)).epsilon(1e-6));
}

TEST_CASE("sparse_categorical_xent: confident correct logits drive loss to zero") {
    double prev = 1e9;
    for (double margin : {2.0, 5.0, 10.0, 20.0}) {
        Graphd g;
        Tensord logits(Shape{2, 8});
        logits[0 * 8 + 3] = margin;
        logits[1 * 8 + 5] = margin;
        std::vector<int> targets = {3, 5};
        std::vector<std::uint8_t> mask = {1, 1};
        double l = g.value(g.sparse_categorical_xent(g.constant(logits), targets, mask))[0];
        CHECK(l < prev);
        prev = l;
    }
    CHECK(prev < 1e-4);
}

TEST_CASE("sparse_categorical_xent: empty mask is an error") {
    Graphd g;
    Tensord logits(Shape{3, 4});
    std::vector<int> targets = {0, 1, 2};
    std::vector<std::uint8_t> mask = {0, 0, 0};
    CHECK_THROWS_WITH_AS(g.sparse_categorical_xent(g.constant(logits), targets, mask),
                         doctest::Contains("no supervised positions"), Error);
}

TEST_CASE("sparse_categorical_xent: invariant to constant logit shifts") {
    Rng rng(15);
    Tensord logits = rand_tensor(Shape{6, 16}, rng, -3.0, 3.0);
    std::vector<int> targets;
    std::vector<std::uint8_t> mask;
    for (int i = 0; i < 6; ++i) {
        targets.push_back(static_cast<int>(rng.below(16)));
        mask.push_back(i % 2 == 0 ? 1 : 0);
    }
    Graphd g1;
    double base = g1.value(g1.sparse_categorical_xent(g1.constant(logits), targets, mask))[0];
    Tensord shifted = logits;
    for (int r = 0; r < 6; ++r)
        for (int j = 0; j < 16; ++j) shifted[r * 16 + j] += 7.5 - r;  // per-row constant
    Graphd g2;
    double moved = g2.value(g2.sparse_categorical_xent(g2.constant(shifted), targets, mask))[0];
    CHECK(std::fabs(base - moved) < 1e-6);
}

TEST_CASE("sparse_categorical_xent: gradient matches finite differences") {
    Rng rng(16);
    Tensord logits = rand_tensor(Shape{5, 8}, rng, -2.0, 2.0);
    std::vector<int> targets;
    std::vector<std::uint8_t> mask;
    for (int i = 0; i < 5; ++i) {
        targets.push_back(static_cast<int>(rng.below(8)));
        mask.push_back(i == 2 ? 0 : 1);
    }
    double err = max_grad_rel_error(
        [&](Graphd& g, const std::vector<Var>& v) {
            return g.sparse_categorical_xent(v[0], targets, mask);
        },
        {logits}, 92);
    CHECK(err < 1e-4);
}

TEST_CASE("adam_step: first step moves by about lr in the gradient direction") {
    ParamT<double> p("w", Shape{3});
    p.value[0] = 1.0;
    p.value[1] = -2.0;
    p.value[2] = 0.5;
    p.grad[0] = 0.3;
    p.grad[1] = -4.0;
    p.grad[2] = 1e-3;
    const double lr = 0.01;
    adam_step<double>({&p}, lr);
    CHECK(p.value[0] == doctest::Approx(1.0 - lr).epsilon(1e-3));
    CHECK(p.value[1] == doctest::Approx(-2.0 + lr).epsilon(1e-3));
    CHECK(p.value[2] == doctest::Approx(0.5 - lr).epsilon(1e-3));
    CHECK(p.step_count == 1);
    for (double gv : p.grad.data) CHECK(gv == 0.0);
}

TEST_CASE("adam_step: zero gradient leaves values but advances the step count") {
    ParamT<double> p("w", Shape{2});
    p.value[0] = 0.4;
    p.value[1] = -0.4;
    adam_step<double>({&p}, 0.1);
    CHECK(p.value[0] == 0.4);
    CHECK(p.value[1] == -0.4);
    CHECK(p.step_count == 1);
}

TEST_CASE("adam_step: non-finite gradient aborts naming the parameter") {
    ParamT<double> p("conv1.kernel", Shape{2});
    p.grad[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_WITH_AS(adam_step<double>({&p}, 0.1), doctest::Contains("conv1.kernel"), Error);
    CHECK(p.step_count == 0);
}

TEST_CASE("adam_step: 200 steps reach the minimizer of a 2-D quadratic") {
    // f(x) = 0.5 * (c0 (x0-a0)^2 + c1 (x1-a1)^2), minimum at a
    const double a0 = 0.3, a1 = -0.2, c0 = 4.0, c1 = 0.5;
    ParamT<double> p("x", Shape{2});
    for (int step = 0; step < 200; ++step) {
        p.grad[0] = c0 * (p.value[0] - a0);
        p.grad[1] = c1 * (p.value[1] - a1);
        adam_step<double>({&p}, 0.02);
    }
    CHECK(std::fabs(p.value[0] - a0) < 1e-3);
    CHECK(std::fabs(p.value[1] - a1) < 1e-3);
}

TEST_CASE("forward determinism: same inputs, parameters and seed bit-match") {
    Rng data_rng(17);
    Tensorf x = wamtest::rand_tensorf(Shape{2, 8, 8, 3}, data_rng);
    Tensorf k = wamtest::rand_tensorf(Shape{3, 3, 3, 4}, data_rng);
    Tensorf b = wamtest::rand_tensorf(Shape{4}, data_rng);

    auto run = [&]() {
        Graphf g;
        Rng drop_rng(4242);
        Var y = g.conv2d_same(g.constant(x), g.constant(k), g.constant(b));
        y = g.relu(y);
        y = g.max_pool2(y);
        y = g.dropout(y, 0.3, Mode::Train, drop_rng);
        return g.value(y);
    };
    Tensorf first = run();
    Tensorf second = run();
    REQUIRE(first.numel() == second.numel());
    for (std::int64_t i = 0; i < first.numel(); ++i) CHECK(first[i] == second[i]);
}

TEST_CASE("residual wiring: add combines branches and backpropagates to both") {
    Rng rng(18);
    Tensord x = rand_tensor(Shape{1, 4, 4, 2}, rng);
    Tensord k = rand_tensor(Shape{3, 3, 2, 2}, rng);
    Tensord b = rand_tensor(Shape{2}, rng);
    double err = max_grad_rel_error(
        [](Graphd& g, const std::vector<Var>& v) {
            Var h = g.conv2d_same(v[0], v[1], v[2]);
            return g.gelu(g.add(h, v[0]));
        },
        {x, k, b}, 91);
    CHECK(err < 1e-4);
}
