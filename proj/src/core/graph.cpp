#include "wam/core/graph.hpp"

#include <Eigen/Core>

#include <memory>

#include <algorithm>
#include <cmath>
#include <cstring>

#include "wam/core/error.hpp"

namespace wam {

namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;

template <typename T>
T gauss_cdf(T x) {
    return T(0.5) * (T(1) + std::erf(x * T(0.7071067811865475244)));
}

template <typename T>
T gauss_pdf(T x) {
    return T(0.3989422804014326779) * std::exp(T(-0.5) * x * x);
}

// Patches of x around every output position, row (n,y,x), column (ky,kx,cin).
// Matches the row-major layout of a (k,k,Cin,Cout) kernel tensor.
template <typename T>
AVec<T> im2col_same(const Tensor<T>& x, int k) {
    const int n = x.shape[0], h = x.shape[1], w = x.shape[2], cin = x.shape[3];
    const int pad = k / 2;
    const std::size_t cols = static_cast<std::size_t>(k) * k * cin;
    AVec<T> out(static_cast<std::size_t>(n) * h * w * cols, T(0));
    std::size_t row = 0;
    for (int in = 0; in < n; ++in)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx, ++row) {
                T* dst = out.data() + row * cols;
                for (int ky = 0; ky < k; ++ky) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int sx = xx + kx - pad;
                        if (sx < 0 || sx >= w) continue;
                        const T* src = &x.at(in, sy, sx, 0);
                        std::memcpy(dst + (static_cast<std::size_t>(ky) * k + kx) * cin, src,
                                    sizeof(T) * cin);
                    }
                }
            }
    return out;
}

// Scatter-add of patch-space gradients back onto the input grid. Serial on
// purpose: overlapping windows accumulate into shared cells.
template <typename T>
void col2im_same(const AVec<T>& cols_grad, int k, Tensor<T>& dx) {
    const int n = dx.shape[0], h = dx.shape[1], w = dx.shape[2], cin = dx.shape[3];
    const int pad = k / 2;
    const std::size_t cols = static_cast<std::size_t>(k) * k * cin;
    std::size_t row = 0;
    for (int in = 0; in < n; ++in)
        for (int y = 0; y < h; ++y)
            for (int xx = 0; xx < w; ++xx, ++row) {
                const T* src = cols_grad.data() + row * cols;
                for (int ky = 0; ky < k; ++ky) {
                    const int sy = y + ky - pad;
                    if (sy < 0 || sy >= h) continue;
                    for (int kx = 0; kx < k; ++kx) {
                        const int sx = xx + kx - pad;
                        if (sx < 0 || sx >= w) continue;
                        T* dst = &dx.at(in, sy, sx, 0);
                        const T* s = src + (static_cast<std::size_t>(ky) * k + kx) * cin;
                        for (int c = 0; c < cin; ++c) dst[c] += s[c];
                    }
                }
            }
}

}  // namespace

template <typename T>
Var Graph<T>::push(Tensor<T> value, bool needs_grad) {
    Node node;
    node.value = std::move(value);
    node.needs_grad = needs_grad;
    nodes_.push_back(std::move(node));
    Var v;
    v.id = static_cast<int>(nodes_.size()) - 1;
    v.shape = nodes_.back().value.shape;
    return v;
}

template <typename T>
Tensor<T>& Graph<T>::grad_buf(int id) {
    Node& n = nodes_[id];
    if (!n.grad_ready) {
        n.grad = Tensor<T>(n.value.shape);
        n.grad_ready = true;
    }
    return n.grad;
}

template <typename T>
const Tensor<T>& Graph<T>::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!n.needs_grad || !n.grad_ready)
        throw Error("Graph::grad: no gradient recorded for this variable");
    return n.grad;
}

template <typename T>
Var Graph<T>::constant(Tensor<T> value) {
    return push(std::move(value), false);
}

template <typename T>
Var Graph<T>::leaf(Tensor<T> value) {
    return push(std::move(value), true);
}

template <typename T>
Var Graph<T>::param(ParamT<T>& p) {
    Var v = push(p.value, true);
    bindings_.emplace_back(v.id, &p);
    return v;
}

template <typename T>
Var Graph<T>::conv2d_same(Var x, Var kernel, Var bias) {
    const Shape& xs = x.shape;
    const Shape& ks = kernel.shape;
    if (xs.rank() != 4 || ks.rank() != 4)
        throw Error("conv2d_same: need rank-4 input and kernel, got " + xs.str() + " and " +
                    ks.str());
    const int k = ks[0];
    const int cin = ks[2], cout = ks[3];
    if (ks[1] != k) throw Error("conv2d_same: kernel must be square, got " + ks.str());
    if (k % 2 == 0) throw Error("conv2d_same: kernel extent must be odd, got " + ks.str());
    if (xs[3] != cin)
        throw Error("conv2d_same: input channels " + xs.str() + " do not match kernel " +
                    ks.str());
    if (bias.shape.rank() != 1 || bias.shape[0] != cout)
        throw Error("conv2d_same: bias shape " + bias.shape.str() + " does not match kernel " +
                    ks.str());

    const int n = xs[0], h = xs[1], w = xs[2];
    const std::int64_t rows = static_cast<std::int64_t>(n) * h * w;
    const std::int64_t q = static_cast<std::int64_t>(k) * k * cin;

    auto cols = std::make_shared<AVec<T>>(im2col_same(value(x), k));
    Tensor<T> out(Shape{n, h, w, cout});
    {
        CMapRM<T> a(cols->data(), rows, q);
        CMapRM<T> km(value(kernel).data.data(), q, cout);
        MapRM<T> om(out.data.data(), rows, cout);
        om.noalias() = a * km;
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bm(value(bias).data.data(), cout);
        om.rowwise() += bm.transpose();
    }

    bool track = tracked(x) || tracked(kernel) || tracked(bias);
    Var y = push(std::move(out), track);
    if (track) {
        Graph* g = this;
        int xid = x.id, kid = kernel.id, bid = bias.id, yid = y.id;
        Shape xshape = xs;
        nodes_[y.id].backward = [g, xid, kid, bid, yid, cols, k, cin, cout, rows, q, xshape]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            CMapRM<T> dym(dy.data.data(), rows, cout);
            if (g->nodes_[kid].needs_grad) {
                CMapRM<T> a(cols->data(), rows, q);
                MapRM<T> dk(g->grad_buf(kid).data.data(), q, cout);
                dk.noalias() += a.transpose() * dym;
            }
            if (g->nodes_[bid].needs_grad) {
                Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(
                    g->grad_buf(bid).data.data(), cout);
                db += dym.colwise().sum().transpose();
            }
            if (g->nodes_[xid].needs_grad) {
                AVec<T> dcols(static_cast<std::size_t>(rows) * q);
                CMapRM<T> km(g->nodes_[kid].value.data.data(), q, cout);
                MapRM<T> dc(dcols.data(), rows, q);
                dc.noalias() = dym * km.transpose();
                col2im_same(dcols, k, g->grad_buf(xid));
            }
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::batch_norm(Var x, Var gamma, Var beta, BatchNormState<T>& stats, Mode mode,
                         T momentum, T epsilon) {
    const Shape& xs = x.shape;
    if (xs.rank() != 4) throw Error("batch_norm: need rank-4 input, got " + xs.str());
    const int c = xs[3];
    if (gamma.shape.numel() != c || beta.shape.numel() != c)
        throw Error("batch_norm: gamma/beta length must equal channel extent " +
                    std::to_string(c));
    if (static_cast<int>(stats.running_mean.size()) != c)
        throw Error("batch_norm: running stats sized for " +
                    std::to_string(stats.running_mean.size()) + " channels, input has " +
                    std::to_string(c));
    if (mode == Mode::Infer && !stats.initialized)
        throw Error("batch_norm: uninitialized running statistics");

    const std::int64_t reduce = xs.numel() / c;
    const Tensor<T>& xv = value(x);
    std::vector<T> mean(c, T(0)), var(c, T(0));
    if (mode == Mode::Train) {
        for (std::int64_t i = 0; i < xs.numel(); ++i) mean[i % c] += xv[i];
        for (int j = 0; j < c; ++j) mean[j] /= static_cast<T>(reduce);
        for (std::int64_t i = 0; i < xs.numel(); ++i) {
            T d = xv[i] - mean[i % c];
            var[i % c] += d * d;
        }
        for (int j = 0; j < c; ++j) var[j] /= static_cast<T>(reduce);
        for (int j = 0; j < c; ++j) {
            stats.running_mean[j] = momentum * stats.running_mean[j] + (T(1) - momentum) * mean[j];
            stats.running_var[j] = momentum * stats.running_var[j] + (T(1) - momentum) * var[j];
        }
        stats.initialized = true;
    } else {
        mean = stats.running_mean;
        var = stats.running_var;
    }

    std::vector<T> inv_std(c);
    for (int j = 0; j < c; ++j) inv_std[j] = T(1) / std::sqrt(var[j] + epsilon);

    const Tensor<T>& gv = value(gamma);
    const Tensor<T>& bv = value(beta);
    Tensor<T> out(xs);
    auto xhat = std::make_shared<std::vector<T>>(static_cast<std::size_t>(xs.numel()));
    for (std::int64_t i = 0; i < xs.numel(); ++i) {
        int j = static_cast<int>(i % c);
        T h = (xv[i] - mean[j]) * inv_std[j];
        (*xhat)[static_cast<std::size_t>(i)] = h;
        out[i] = gv[j] * h + bv[j];
    }

    bool track = tracked(x) || tracked(gamma) || tracked(beta);
    Var y = push(std::move(out), track);
    if (track) {
        Graph* g = this;
        int xid = x.id, gid = gamma.id, bid = beta.id, yid = y.id;
        bool batch_stats = (mode == Mode::Train);
        auto istd = std::make_shared<std::vector<T>>(std::move(inv_std));
        nodes_[y.id].backward = [g, xid, gid, bid, yid, xhat, istd, c, reduce, batch_stats]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            const std::int64_t total = dy.numel();
            std::vector<T> dgamma(c, T(0)), dbeta(c, T(0));
            const std::vector<T>& h = *xhat;
            for (std::int64_t i = 0; i < total; ++i) {
                int j = static_cast<int>(i % c);
                dgamma[j] += dy[i] * h[static_cast<std::size_t>(i)];
                dbeta[j] += dy[i];
            }
            if (g->nodes_[gid].needs_grad) {
                Tensor<T>& dst = g->grad_buf(gid);
                for (int j = 0; j < c; ++j) dst[j] += dgamma[j];
            }
            if (g->nodes_[bid].needs_grad) {
                Tensor<T>& dst = g->grad_buf(bid);
                for (int j = 0; j < c; ++j) dst[j] += dbeta[j];
            }
            if (g->nodes_[xid].needs_grad) {
                Tensor<T>& dx = g->grad_buf(xid);
                const Tensor<T>& gval = g->nodes_[gid].value;
                if (batch_stats) {
                    // dx via the full normalization Jacobian (mean and var
                    // both depend on x).
                    for (std::int64_t i = 0; i < total; ++i) {
                        int j = static_cast<int>(i % c);
                        T dxhat = dy[i] * gval[j];
                        T term = dxhat - dbeta[j] * gval[j] / static_cast<T>(reduce) -
                                 h[static_cast<std::size_t>(i)] * dgamma[j] * gval[j] /
                                     static_cast<T>(reduce);
                        dx[i] += (*istd)[j] * term;
                    }
                } else {
                    for (std::int64_t i = 0; i < total; ++i) {
                        int j = static_cast<int>(i % c);
                        dx[i] += dy[i] * gval[j] * (*istd)[j];
                    }
                }
            }
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::relu(Var x) {
    const Tensor<T>& xv = value(x);
    Tensor<T> out(x.shape);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
    Var y = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = y.id;
        nodes_[y.id].backward = [g, xid, yid]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            const Tensor<T>& xv = g->nodes_[xid].value;
            Tensor<T>& dx = g->grad_buf(xid);
            for (std::int64_t i = 0; i < dy.numel(); ++i)
                if (xv[i] > T(0)) dx[i] += dy[i];
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::gelu(Var x) {
    // exact Gaussian-CDF form x * Phi(x)
    const Tensor<T>& xv = value(x);
    Tensor<T> out(x.shape);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = xv[i] * gauss_cdf(xv[i]);
    Var y = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = y.id;
        nodes_[y.id].backward = [g, xid, yid]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            const Tensor<T>& xv = g->nodes_[xid].value;
            Tensor<T>& dx = g->grad_buf(xid);
            for (std::int64_t i = 0; i < dy.numel(); ++i)
                dx[i] += dy[i] * (gauss_cdf(xv[i]) + xv[i] * gauss_pdf(xv[i]));
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::max_pool2(Var x) {
    const Shape& xs = x.shape;
    if (xs.rank() != 4) throw Error("max_pool2: need rank-4 input, got " + xs.str());
    if (xs[1] % 2 != 0 || xs[2] % 2 != 0)
        throw Error("max_pool2: spatial extents must be even, got " + xs.str());
    const int n = xs[0], h = xs[1], w = xs[2], c = xs[3];
    const Tensor<T>& xv = value(x);
    Tensor<T> out(Shape{n, h / 2, w / 2, c});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(
        static_cast<std::size_t>(out.numel()));
    std::size_t o = 0;
    for (int in = 0; in < n; ++in)
        for (int y = 0; y < h; y += 2)
            for (int xx = 0; xx < w; xx += 2)
                for (int ch = 0; ch < c; ++ch, ++o) {
                    // ties resolved to the first row-major occurrence
                    std::int64_t best_idx =
                        ((static_cast<std::int64_t>(in) * h + y) * w + xx) * c + ch;
                    T best = xv[best_idx];
                    for (int dy = 0; dy < 2; ++dy)
                        for (int dx = 0; dx < 2; ++dx) {
                            std::int64_t idx =
                                ((static_cast<std::int64_t>(in) * h + y + dy) * w + xx + dx) * c +
                                ch;
                            if (xv[idx] > best) {
                                best = xv[idx];
                                best_idx = idx;
                            }
                        }
                    out.data[o] = best;
                    (*argmax)[o] = best_idx;
                }

    Var yv = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = yv.id;
        nodes_[yv.id].backward = [g, xid, yid, argmax]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            Tensor<T>& dx = g->grad_buf(xid);
            for (std::int64_t i = 0; i < dy.numel(); ++i)
                dx[(*argmax)[static_cast<std::size_t>(i)]] += dy[i];
        };
    }
    return yv;
}

template <typename T>
Var Graph<T>::dense(Var x, Var w, Var b) {
    const Shape& xs = x.shape;
    const Shape& ws = w.shape;
    if (xs.rank() != 2 || ws.rank() != 2)
        throw Error("dense: need rank-2 input and weight, got " + xs.str() + " and " + ws.str());
    if (xs[1] != ws[0])
        throw Error("dense: inner extents do not match, input " + xs.str() + " weight " +
                    ws.str());
    const int n = xs[0], d = xs[1], m = ws[1];
    if (b.shape.numel() != m)
        throw Error("dense: bias shape " + b.shape.str() + " does not match weight " + ws.str());

    Tensor<T> out(Shape{n, m});
    {
        CMapRM<T> xm(value(x).data.data(), n, d);
        CMapRM<T> wm(value(w).data.data(), d, m);
        MapRM<T> om(out.data.data(), n, m);
        om.noalias() = xm * wm;
        Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bm(value(b).data.data(), m);
        om.rowwise() += bm.transpose();
    }
    bool track = tracked(x) || tracked(w) || tracked(b);
    Var y = push(std::move(out), track);
    if (track) {
        Graph* g = this;
        int xid = x.id, wid = w.id, bid = b.id, yid = y.id;
        nodes_[y.id].backward = [g, xid, wid, bid, yid, n, d, m]() {
            CMapRM<T> dym(g->nodes_[yid].grad.data.data(), n, m);
            if (g->nodes_[wid].needs_grad) {
                CMapRM<T> xm(g->nodes_[xid].value.data.data(), n, d);
                MapRM<T> dw(g->grad_buf(wid).data.data(), d, m);
                dw.noalias() += xm.transpose() * dym;
            }
            if (g->nodes_[bid].needs_grad) {
                Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(
                    g->grad_buf(bid).data.data(), m);
                db += dym.colwise().sum().transpose();
            }
            if (g->nodes_[xid].needs_grad) {
                CMapRM<T> wm(g->nodes_[wid].value.data.data(), d, m);
                MapRM<T> dx(g->grad_buf(xid).data.data(), n, d);
                dx.noalias() += dym * wm.transpose();
            }
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::dropout(Var x, double rate, Mode mode, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
        throw Error("dropout: rate must be in [0,1), got " + std::to_string(rate));
    if (mode == Mode::Infer || rate == 0.0) {
        Tensor<T> out = value(x);
        Var y = push(std::move(out), tracked(x));
        if (tracked(x)) {
            Graph* g = this;
            int xid = x.id, yid = y.id;
            nodes_[y.id].backward = [g, xid, yid]() {
                const Tensor<T>& dy = g->nodes_[yid].grad;
                Tensor<T>& dx = g->grad_buf(xid);
                for (std::int64_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i];
            };
        }
        return y;
    }

    const Tensor<T>& xv = value(x);
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    auto keep = std::make_shared<std::vector<std::uint8_t>>(xv.data.size());
    Tensor<T> out(x.shape);
    for (std::int64_t i = 0; i < out.numel(); ++i) {
        bool k = !rng.bernoulli(rate);
        (*keep)[static_cast<std::size_t>(i)] = k ? 1 : 0;
        out[i] = k ? xv[i] * scale : T(0);
    }
    Var y = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = y.id;
        nodes_[y.id].backward = [g, xid, yid, keep, scale]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            Tensor<T>& dx = g->grad_buf(xid);
            for (std::int64_t i = 0; i < dy.numel(); ++i)
                if ((*keep)[static_cast<std::size_t>(i)]) dx[i] += dy[i] * scale;
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::add(Var a, Var b) {
    if (a.shape != b.shape)
        throw Error("add: shape mismatch " + a.shape.str() + " vs " + b.shape.str());
    const Tensor<T>& av = value(a);
    const Tensor<T>& bv = value(b);
    Tensor<T> out(a.shape);
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] = av[i] + bv[i];
    bool track = tracked(a) || tracked(b);
    Var y = push(std::move(out), track);
    if (track) {
        Graph* g = this;
        int aid = a.id, bid = b.id, yid = y.id;
        nodes_[y.id].backward = [g, aid, bid, yid]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            if (g->nodes_[aid].needs_grad) {
                Tensor<T>& da = g->grad_buf(aid);
                for (std::int64_t i = 0; i < dy.numel(); ++i) da[i] += dy[i];
            }
            if (g->nodes_[bid].needs_grad) {
                Tensor<T>& db = g->grad_buf(bid);
                for (std::int64_t i = 0; i < dy.numel(); ++i) db[i] += dy[i];
            }
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::reshape(Var x, Shape target) {
    if (target.numel() != x.shape.numel())
        throw Error("reshape: element count mismatch " + x.shape.str() + " -> " + target.str());
    Tensor<T> out(target, value(x).data);
    Var y = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = y.id;
        nodes_[y.id].backward = [g, xid, yid]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            Tensor<T>& dx = g->grad_buf(xid);
            for (std::int64_t i = 0; i < dy.numel(); ++i) dx[i] += dy[i];
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::avg_pool_to(Var x, int grid_h, int grid_w) {
    const Shape& xs = x.shape;
    if (xs.rank() != 4) throw Error("avg_pool_to: need rank-4 input, got " + xs.str());
    if (grid_h < 1 || grid_w < 1 || xs[1] % grid_h != 0 || xs[2] % grid_w != 0)
        throw Error("avg_pool_to: input " + xs.str() + " not divisible into " +
                    std::to_string(grid_h) + "x" + std::to_string(grid_w) + " grid");
    const int n = xs[0], c = xs[3];
    const int fh = xs[1] / grid_h, fw = xs[2] / grid_w;
    const T inv = T(1) / static_cast<T>(fh * fw);
    const Tensor<T>& xv = value(x);
    Tensor<T> out(Shape{n, grid_h, grid_w, c});
    for (int in = 0; in < n; ++in)
        for (int gy = 0; gy < grid_h; ++gy)
            for (int gx = 0; gx < grid_w; ++gx)
                for (int ch = 0; ch < c; ++ch) {
                    T acc = T(0);
                    for (int dy = 0; dy < fh; ++dy)
                        for (int dx = 0; dx < fw; ++dx)
                            acc += xv.at(in, gy * fh + dy, gx * fw + dx, ch);
                    out.at(in, gy, gx, ch) = acc * inv;
                }
    Var y = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = y.id;
        nodes_[y.id].backward = [g, xid, yid, grid_h, grid_w, fh, fw, inv]() {
            const Tensor<T>& dy = g->nodes_[yid].grad;
            Tensor<T>& dx = g->grad_buf(xid);
            const int n = dy.shape[0], c = dy.shape[3];
            for (int in = 0; in < n; ++in)
                for (int gy = 0; gy < grid_h; ++gy)
                    for (int gx = 0; gx < grid_w; ++gx)
                        for (int ch = 0; ch < c; ++ch) {
                            T gv = dy.at(in, gy, gx, ch) * inv;
                            for (int ddy = 0; ddy < fh; ++ddy)
                                for (int ddx = 0; ddx < fw; ++ddx)
                                    dx.at(in, gy * fh + ddy, gx * fw + ddx, ch) += gv;
                        }
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::sparse_categorical_xent(Var logits, const std::vector<int>& targets,
                                      const std::vector<std::uint8_t>& mask) {
    const Shape& ls = logits.shape;
    const int k = ls[ls.rank() - 1];
    const std::int64_t rows = ls.numel() / k;
    if (static_cast<std::int64_t>(targets.size()) != rows ||
        static_cast<std::int64_t>(mask.size()) != rows)
        throw Error("sparse_categorical_xent: targets/mask must cover " + std::to_string(rows) +
                    " positions");
    std::int64_t selected = 0;
    for (std::uint8_t m : mask) selected += m ? 1 : 0;
    if (selected == 0) throw Error("sparse_categorical_xent: no supervised positions");

    const Tensor<T>& lv = value(logits);
    // softmax rows cached for backward
    auto probs = std::make_shared<std::vector<T>>(lv.data.size());
    double loss = 0.0;
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* row = lv.data.data() + r * k;
        T* prow = probs->data() + r * k;
        T mx = row[0];
        for (int j = 1; j < k; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < k; ++j) {
            prow[j] = std::exp(row[j] - mx);
            sum += prow[j];
        }
        for (int j = 0; j < k; ++j) prow[j] /= sum;
        if (mask[static_cast<std::size_t>(r)]) {
            int t = targets[static_cast<std::size_t>(r)];
            if (t < 0 || t >= k)
                throw Error("sparse_categorical_xent: target " + std::to_string(t) +
                            " outside [0," + std::to_string(k) + ")");
            loss -= std::log(static_cast<double>(std::max(prow[t], T(1e-30))));
        }
    }
    Tensor<T> out(Shape{1});
    out[0] = static_cast<T>(loss / static_cast<double>(selected));

    Var y = push(std::move(out), tracked(logits));
    if (tracked(logits)) {
        Graph* g = this;
        int lid = logits.id, yid = y.id;
        auto tgt = std::make_shared<std::vector<int>>(targets);
        auto msk = std::make_shared<std::vector<std::uint8_t>>(mask);
        nodes_[y.id].backward = [g, lid, yid, probs, tgt, msk, rows, k, selected]() {
            const T upstream = g->nodes_[yid].grad[0];
            Tensor<T>& dl = g->grad_buf(lid);
            const T inv = upstream / static_cast<T>(selected);
            for (std::int64_t r = 0; r < rows; ++r) {
                if (!(*msk)[static_cast<std::size_t>(r)]) continue;
                const T* prow = probs->data() + r * k;
                T* drow = dl.data.data() + r * k;
                int t = (*tgt)[static_cast<std::size_t>(r)];
                for (int j = 0; j < k; ++j) drow[j] += inv * prow[j];
                drow[t] -= inv;
            }
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::mse(Var pred, const Tensor<T>& target) {
    if (pred.shape != target.shape)
        throw Error("mse: shape mismatch " + pred.shape.str() + " vs " + target.shape.str());
    const Tensor<T>& pv = value(pred);
    double acc = 0.0;
    for (std::int64_t i = 0; i < pv.numel(); ++i) {
        double d = static_cast<double>(pv[i]) - static_cast<double>(target[i]);
        acc += d * d;
    }
    Tensor<T> out(Shape{1});
    out[0] = static_cast<T>(acc / static_cast<double>(pv.numel()));
    Var y = push(std::move(out), tracked(pred));
    if (tracked(pred)) {
        Graph* g = this;
        int pid = pred.id, yid = y.id;
        auto tgt = std::make_shared<Tensor<T>>(target);
        nodes_[y.id].backward = [g, pid, yid, tgt]() {
            const T upstream = g->nodes_[yid].grad[0];
            const Tensor<T>& pv = g->nodes_[pid].value;
            Tensor<T>& dp = g->grad_buf(pid);
            const T scale = T(2) * upstream / static_cast<T>(pv.numel());
            for (std::int64_t i = 0; i < pv.numel(); ++i)
                dp[i] += scale * (pv[i] - (*tgt)[i]);
        };
    }
    return y;
}

template <typename T>
Var Graph<T>::weighted_sum(Var x, const Tensor<T>& weights) {
    if (x.shape.numel() != weights.numel())
        throw Error("weighted_sum: weight count mismatch " + x.shape.str() + " vs " +
                    weights.shape.str());
    const Tensor<T>& xv = value(x);
    double acc = 0.0;
    for (std::int64_t i = 0; i < xv.numel(); ++i)
        acc += static_cast<double>(xv[i]) * static_cast<double>(weights[i]);
    Tensor<T> out(Shape{1});
    out[0] = static_cast<T>(acc);
    Var y = push(std::move(out), tracked(x));
    if (tracked(x)) {
        Graph* g = this;
        int xid = x.id, yid = y.id;
        auto w = std::make_shared<Tensor<T>>(weights);
        nodes_[y.id].backward = [g, xid, yid, w]() {
            const T upstream = g->nodes_[yid].grad[0];
            Tensor<T>& dx = g->grad_buf(xid);
            for (std::int64_t i = 0; i < dx.numel(); ++i) dx[i] += upstream * (*w)[i];
        };
    }
    return y;
}

template <typename T>
void Graph<T>::backward(Var loss) {
    if (loss.shape.numel() != 1)
        throw Error("backward: loss must be scalar, got " + loss.shape.str());
    if (!nodes_[loss.id].needs_grad)
        throw Error("backward: loss does not depend on any tracked variable");
    grad_buf(loss.id).fill(T(0));
    nodes_[loss.id].grad[0] = T(1);
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.needs_grad && n.grad_ready && n.backward) n.backward();
    }
    for (auto& [id, p] : bindings_) {
        if (!nodes_[id].grad_ready) continue;
        const Tensor<T>& g = nodes_[id].grad;
        for (std::int64_t i = 0; i < g.numel(); ++i) p->grad[i] += g[i];
    }
}

template class Graph<float>;
template class Graph<double>;

}  // namespace wam
