#include "wam/models/models.hpp"

#include <cstdio>
#include <sstream>

#include "wam/core/error.hpp"

namespace wam::models {

const char* encoder_kind_name(EncoderKind k) {
    return k == EncoderKind::Sequential ? "sequential" : "residual";
}

EncoderKind encoder_kind_from_name(const std::string& name) {
    if (name == "sequential") return EncoderKind::Sequential;
    if (name == "residual") return EncoderKind::Residual;
    throw Error("models: unknown architecture '" + name + "' (sequential|residual)");
}

std::string ModelConfig::canonical_text() const {
    std::ostringstream os;
    os << "arch=" << encoder_kind_name(kind);
    os << ";filters=" << filters[0] << "," << filters[1] << "," << filters[2];
    os << ";kernel=" << kernel;
    os << ";in_channels=" << in_channels;
    os << ";input=" << input_size;
    os << ";patch=" << patch;
    os << ";bins=" << bins;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", dropout);
    os << ";dropout=" << buf;
    os << ";channels=";
    for (int c = 0; c < geo::kNumChannels; ++c) {
        if (c) os << ",";
        os << geo::channel_name(static_cast<geo::Channel>(c));
    }
    return os.str();
}

std::uint64_t ModelConfig::fingerprint() const { return fnv1a64(canonical_text()); }

ModelConfig ModelConfig::from_canonical_text(const std::string& text) {
    ModelConfig cfg;
    std::istringstream is(text);
    std::string pair;
    while (std::getline(is, pair, ';')) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos) throw Error("models: malformed config text: " + pair);
        const std::string key = pair.substr(0, eq);
        const std::string val = pair.substr(eq + 1);
        if (key == "arch") {
            cfg.kind = encoder_kind_from_name(val);
        } else if (key == "filters") {
            if (std::sscanf(val.c_str(), "%d,%d,%d", &cfg.filters[0], &cfg.filters[1],
                            &cfg.filters[2]) != 3)
                throw Error("models: malformed filters: " + val);
        } else if (key == "kernel") {
            cfg.kernel = std::stoi(val);
        } else if (key == "in_channels") {
            cfg.in_channels = std::stoi(val);
        } else if (key == "input") {
            cfg.input_size = std::stoi(val);
        } else if (key == "patch") {
            cfg.patch = std::stoi(val);
        } else if (key == "bins") {
            cfg.bins = std::stoi(val);
        } else if (key == "dropout") {
            cfg.dropout = std::stod(val);
        } else if (key == "channels") {
            // covered by the fingerprint comparison
        } else {
            throw Error("models: unknown config key '" + key + "'");
        }
    }
    return cfg;
}

ConvLayer::ConvLayer(const std::string& name, int k, int cin, int cout, Rng& rng)
    : kernel(name + ".kernel", Shape{k, k, cin, cout}), bias(name + ".bias", Shape{cout}) {
    init_fanin_uniform(kernel, static_cast<std::int64_t>(k) * k * cin, rng);
}

Var ConvLayer::apply(Graphf& g, Var x) {
    return g.conv2d_same(x, g.param(kernel), g.param(bias));
}

BatchNormLayer::BatchNormLayer(const std::string& name, int channels)
    : gamma(name + ".gamma", Shape{channels}),
      beta(name + ".beta", Shape{channels}),
      stats(channels) {
    gamma.value.fill(1.0f);
}

Var BatchNormLayer::apply(Graphf& g, Var x, Mode mode) {
    return g.batch_norm(x, g.param(gamma), g.param(beta), stats, mode);
}

DenseLayer::DenseLayer(const std::string& name, int in, int out, Rng& rng)
    : w(name + ".w", Shape{in, out}), b(name + ".b", Shape{out}) {
    init_fanin_uniform(w, in, rng);
}

Var DenseLayer::apply(Graphf& g, Var x) { return g.dense(x, g.param(w), g.param(b)); }

namespace {

// frozen-path bindings: values enter the graph as constants
Var apply_conv_frozen(Graphf& g, ConvLayer& layer, Var x) {
    return g.conv2d_same(x, g.constant(layer.kernel.value), g.constant(layer.bias.value));
}

Var apply_bn_frozen(Graphf& g, BatchNormLayer& layer, Var x) {
    return g.batch_norm(x, g.constant(layer.gamma.value), g.constant(layer.beta.value),
                        layer.stats, Mode::Infer);
}

}  // namespace

Encoder::Encoder(const ModelConfig& cfg, Rng& rng) : kind_(cfg.kind) {
    const int layers_per_block = cfg.kind == EncoderKind::Residual ? 4 : 1;
    int cin = cfg.in_channels;
    for (int b = 0; b < 3; ++b) {
        Block block;
        const int cout = cfg.filters[b];
        for (int l = 0; l < layers_per_block; ++l) {
            const std::string base = "enc.b" + std::to_string(b) + "." + std::to_string(l);
            block.convs.emplace_back(base + ".conv", cfg.kernel, l == 0 ? cin : cout, cout, rng);
            block.bns.emplace_back(base + ".bn", cout);
        }
        cin = cout;
        blocks_.push_back(std::move(block));
    }
}

Var Encoder::apply(Graphf& g, Var x, Mode mode, bool frozen) {
    const Mode bn_mode = frozen ? Mode::Infer : mode;
    Var h = x;
    for (Block& block : blocks_) {
        if (kind_ == EncoderKind::Sequential) {
            h = frozen ? apply_conv_frozen(g, block.convs[0], h) : block.convs[0].apply(g, h);
            h = frozen ? apply_bn_frozen(g, block.bns[0], h) : block.bns[0].apply(g, h, bn_mode);
            h = g.relu(h);
        } else {
            Var act{};
            for (std::size_t l = 0; l < block.convs.size(); ++l) {
                Var in = l == 0 ? h : act;
                Var pre = frozen ? apply_conv_frozen(g, block.convs[l], in)
                                 : block.convs[l].apply(g, in);
                pre = frozen ? apply_bn_frozen(g, block.bns[l], pre)
                             : block.bns[l].apply(g, pre, bn_mode);
                // past the first layer the activation sees the sum of the
                // batch-norm output and the previous activation
                act = g.gelu(l == 0 ? pre : g.add(pre, act));
            }
            h = act;
        }
        h = g.max_pool2(h);
    }
    return h;
}

std::vector<Param*> Encoder::params() {
    std::vector<Param*> out;
    for (Block& block : blocks_) {
        for (ConvLayer& c : block.convs) {
            out.push_back(&c.kernel);
            out.push_back(&c.bias);
        }
        for (BatchNormLayer& bn : block.bns) {
            out.push_back(&bn.gamma);
            out.push_back(&bn.beta);
        }
    }
    return out;
}

std::vector<const Param*> Encoder::params() const {
    std::vector<const Param*> out;
    for (const Block& block : blocks_) {
        for (const ConvLayer& c : block.convs) {
            out.push_back(&c.kernel);
            out.push_back(&c.bias);
        }
        for (const BatchNormLayer& bn : block.bns) {
            out.push_back(&bn.gamma);
            out.push_back(&bn.beta);
        }
    }
    return out;
}

std::vector<BatchNormLayer*> Encoder::batch_norms() {
    std::vector<BatchNormLayer*> out;
    for (Block& block : blocks_)
        for (BatchNormLayer& bn : block.bns) out.push_back(&bn);
    return out;
}

std::int64_t Encoder::param_count() const {
    std::int64_t n = 0;
    for (const Param* p : params()) n += p->value.numel();
    return n;
}

PatchDecoder::PatchDecoder(const ModelConfig& cfg, Rng& rng)
    : dense_("dec.dense", cfg.latent_channels(), cfg.in_channels * cfg.bins, rng),
      grid_(cfg.patch_grid()),
      channels_(cfg.in_channels),
      bins_(cfg.bins) {}

Var PatchDecoder::apply(Graphf& g, Var latent, int batch) {
    Var pooled = g.avg_pool_to(latent, grid_, grid_);
    const int f = pooled.shape[3];
    Var rows = g.reshape(pooled, Shape{batch * grid_ * grid_, f});
    Var logits = dense_.apply(g, rows);  // (positions, channels*bins)
    return g.reshape(logits, Shape{batch * grid_ * grid_ * channels_, bins_});
}

std::vector<Param*> PatchDecoder::params() { return {&dense_.w, &dense_.b}; }

RegressionHead::RegressionHead(const ModelConfig& cfg, Rng& rng)
    : fc_("head.fc", cfg.latent_size() * cfg.latent_size() * cfg.latent_channels(), 512, rng),
      out_("head.out", 512, geo::kNumLabels, rng),
      dropout_(cfg.dropout) {}

Var RegressionHead::apply(Graphf& g, Var latent, Mode mode, Rng& rng) {
    const int n = latent.shape[0];
    Var flat = g.reshape(latent, Shape{n, static_cast<int>(latent.shape.numel() / n)});
    Var dropped = g.dropout(flat, dropout_, mode, rng);
    Var hidden = g.gelu(fc_.apply(g, dropped));
    return out_.apply(g, hidden);
}

std::vector<Param*> RegressionHead::params() { return {&fc_.w, &fc_.b, &out_.w, &out_.b}; }

PretrainModel::PretrainModel(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    if (cfg.input_size % 8 != 0)
        throw Error("models: input size must be divisible by 8, got " +
                    std::to_string(cfg.input_size));
    if (cfg.input_size % cfg.patch != 0)
        throw Error("models: input size not divisible by patch extent");
    if (cfg.latent_size() % cfg.patch_grid() != 0)
        throw Error("models: latent map not divisible onto the patch grid");
    Rng rng(init_seed);
    encoder_ = std::make_unique<Encoder>(cfg, rng);
    decoder_ = std::make_unique<PatchDecoder>(cfg, rng);
}

Var PretrainModel::logits(Graphf& g, Var x, Mode mode, int batch) {
    Var latent = encoder_->apply(g, x, mode, false);
    return decoder_->apply(g, latent, batch);
}

Tensorf PretrainModel::decode_sample(const Tensorf& sample, Mode mode) {
    if (sample.shape.rank() != 3)
        throw Error("decode_sample: need rank-3 sample, got " + sample.shape.str());
    Graphf g;
    Tensorf batched(Shape{1, sample.shape[0], sample.shape[1], sample.shape[2]}, sample.data);
    Var out = logits(g, g.constant(std::move(batched)), mode, 1);
    const int grid = cfg_.patch_grid();
    return Tensorf(Shape{grid, grid, cfg_.in_channels, cfg_.bins}, g.value(out).data);
}

std::vector<Param*> PretrainModel::params() {
    std::vector<Param*> out = encoder_->params();
    for (Param* p : decoder_->params()) out.push_back(p);
    return out;
}

namespace {

Checkpoint build_checkpoint(const ModelConfig& cfg, std::vector<Param*> params,
                            std::vector<BatchNormLayer*> bns,
                            const geo::NormalizationStats& stats, std::uint64_t rng_seed) {
    Checkpoint ck;
    ck.config_text = cfg.canonical_text();
    ck.fingerprint = cfg.fingerprint();
    ck.rng_seed = rng_seed;
    ck.norm_stats_text = stats.serialize();
    for (const Param* p : params) {
        Checkpoint::ParamEntry e;
        e.name = p->name;
        e.shape = p->value.shape;
        e.value = p->value.data;
        e.m = p->m.data;
        e.v = p->v.data;
        e.step_count = p->step_count;
        ck.params.push_back(std::move(e));
    }
    for (const BatchNormLayer* bn : bns) {
        Checkpoint::BnEntry e;
        e.name = bn->gamma.name.substr(0, bn->gamma.name.rfind('.'));
        e.running_mean = bn->stats.running_mean;
        e.running_var = bn->stats.running_var;
        e.initialized = bn->stats.initialized;
        ck.bn_stats.push_back(std::move(e));
    }
    return ck;
}

void restore_from_checkpoint(const Checkpoint& ck, std::vector<Param*> params,
                             std::vector<BatchNormLayer*> bns) {
    for (Param* p : params) {
        const Checkpoint::ParamEntry* found = nullptr;
        for (const auto& e : ck.params)
            if (e.name == p->name) found = &e;
        if (!found) throw Error("checkpoint: missing parameter '" + p->name + "'");
        if (found->shape != p->value.shape)
            throw Error("checkpoint: shape mismatch for '" + p->name + "': file " +
                        found->shape.str() + " vs model " + p->value.shape.str());
        p->value.data = found->value;
        p->m.data = found->m;
        p->v.data = found->v;
        p->step_count = found->step_count;
    }
    for (BatchNormLayer* bn : bns) {
        const std::string name = bn->gamma.name.substr(0, bn->gamma.name.rfind('.'));
        const Checkpoint::BnEntry* found = nullptr;
        for (const auto& e : ck.bn_stats)
            if (e.name == name) found = &e;
        if (!found) throw Error("checkpoint: missing batch-norm stats '" + name + "'");
        bn->stats.running_mean = found->running_mean;
        bn->stats.running_var = found->running_var;
        bn->stats.initialized = found->initialized;
    }
}

}  // namespace

void PretrainModel::save(const std::string& path, const geo::NormalizationStats& stats,
                         std::uint64_t rng_seed) const {
    auto* self = const_cast<PretrainModel*>(this);
    Checkpoint ck =
        build_checkpoint(cfg_, self->params(), self->encoder_->batch_norms(), stats, rng_seed);
    ck.save(path);
}

PretrainModel::Loaded PretrainModel::load(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    ModelConfig cfg = ModelConfig::from_canonical_text(ck.config_text);
    if (cfg.fingerprint() != ck.fingerprint)
        throw Error("checkpoint: fingerprint does not match its own config text in " + path);
    Loaded out;
    out.model = std::make_unique<PretrainModel>(cfg, 0);
    restore_from_checkpoint(ck, out.model->params(), out.model->encoder_->batch_norms());
    out.stats = geo::NormalizationStats::parse(ck.norm_stats_text);
    out.rng_seed = ck.rng_seed;
    return out;
}

PretrainModel::Loaded PretrainModel::load_expect(const std::string& path,
                                                 const ModelConfig& expect) {
    Checkpoint ck = Checkpoint::load(path);
    if (ck.fingerprint != expect.fingerprint())
        throw Error("checkpoint: fingerprint mismatch: file " + path + " holds '" +
                    ck.config_text + "', expected '" + expect.canonical_text() + "'");
    return load(path);
}

WamModel::WamModel(const PretrainModel& pretrained, std::uint64_t head_seed)
    : cfg_(pretrained.cfg_) {
    encoder_ = std::make_unique<Encoder>(*pretrained.encoder_);  // deep copy
    Rng rng(head_seed);
    head_ = std::make_unique<RegressionHead>(cfg_, rng);
}

WamModel::WamModel(const ModelConfig& cfg, std::uint64_t init_seed) : cfg_(cfg) {
    Rng rng(init_seed);
    encoder_ = std::make_unique<Encoder>(cfg, rng);
    head_ = std::make_unique<RegressionHead>(cfg, rng);
}

Var WamModel::predict(Graphf& g, Var x, Mode mode, Rng& rng, bool frozen_encoder) {
    Var latent = encoder_->apply(g, x, mode, frozen_encoder);
    return head_->apply(g, latent, mode, rng);
}

Tensorf WamModel::predict_sample(const Tensorf& sample, Mode mode) {
    if (sample.shape.rank() != 3)
        throw Error("predict_sample: need rank-3 sample, got " + sample.shape.str());
    Graphf g;
    Rng unused(0);
    Tensorf batched(Shape{1, sample.shape[0], sample.shape[1], sample.shape[2]}, sample.data);
    Var out = predict(g, g.constant(std::move(batched)), mode, unused,
                      mode == Mode::Infer);
    return Tensorf(Shape{geo::kNumLabels}, g.value(out).data);
}

std::vector<Param*> WamModel::head_params() { return head_->params(); }

std::vector<Param*> WamModel::all_params() {
    std::vector<Param*> out = encoder_->params();
    for (Param* p : head_->params()) out.push_back(p);
    return out;
}

void WamModel::save(const std::string& path, const geo::NormalizationStats& stats,
                    std::uint64_t rng_seed) const {
    auto* self = const_cast<WamModel*>(this);
    Checkpoint ck = build_checkpoint(cfg_, self->all_params(), self->encoder_->batch_norms(),
                                     stats, rng_seed);
    ck.save(path);
}

WamModel::Loaded WamModel::load(const std::string& path) {
    Checkpoint ck = Checkpoint::load(path);
    ModelConfig cfg = ModelConfig::from_canonical_text(ck.config_text);
    if (cfg.fingerprint() != ck.fingerprint)
        throw Error("checkpoint: fingerprint does not match its own config text in " + path);
    Loaded out;
    out.model = std::unique_ptr<WamModel>(new WamModel(cfg, 0));
    restore_from_checkpoint(ck, out.model->all_params(), out.model->encoder_->batch_norms());
    out.stats = geo::NormalizationStats::parse(ck.norm_stats_text);
    out.rng_seed = ck.rng_seed;
    return out;
}

}  // namespace wam::models
