#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "wam/core/checkpoint.hpp"
#include "wam/core/graph.hpp"
#include "wam/core/param.hpp"
#include "wam/core/rng.hpp"
#include "wam/geo/normalize.hpp"

namespace wam::models {

enum class EncoderKind { Sequential, Residual };

const char* encoder_kind_name(EncoderKind k);
EncoderKind encoder_kind_from_name(const std::string& name);

// Architecture/config description. Its canonical text is hashed into the
// checkpoint fingerprint, so any structural mismatch is caught on load.
struct ModelConfig {
    EncoderKind kind = EncoderKind::Sequential;
    std::array<int, 3> filters = {128, 256, 512};
    int kernel = 3;
    int in_channels = geo::kNumChannels;
    int input_size = 128;  // spatial extent of fused samples
    int patch = 16;        // masking patch extent
    int bins = 64;
    double dropout = 0.7;

    int patch_grid() const { return input_size / patch; }
    int latent_size() const { return input_size / 8; }  // three 2x pools
    int latent_channels() const { return filters[2]; }

    std::string canonical_text() const;
    std::uint64_t fingerprint() const;
    static ModelConfig from_canonical_text(const std::string& text);
};

struct ConvLayer {
    Param kernel;
    Param bias;
    ConvLayer(const std::string& name, int k, int cin, int cout, Rng& rng);
    Var apply(Graphf& g, Var x);
};

struct BatchNormLayer {
    Param gamma;
    Param beta;
    BatchNormState<float> stats;
    BatchNormLayer(const std::string& name, int channels);
    Var apply(Graphf& g, Var x, Mode mode);
};

struct DenseLayer {
    Param w;
    Param b;
    DenseLayer(const std::string& name, int in, int out, Rng& rng);
    Var apply(Graphf& g, Var x);
};

// Three convolutional blocks with channel widths filters[0..2], each ending
// in a 2x2 max-pool. Sequential: conv-bn-relu per block. Residual: four
// conv-bn-gelu layers per block, each activation past the first fed by the
// sum of the batch-norm output and the previous activation; skips never
// cross block boundaries.
class Encoder {
public:
    Encoder(const ModelConfig& cfg, Rng& rng);

    // frozen: parameters enter the graph as constants and batch-norm always
    // uses the running statistics, so nothing in the encoder can change
    Var apply(Graphf& g, Var x, Mode mode, bool frozen = false);
    std::vector<Param*> params();
    std::vector<const Param*> params() const;
    std::vector<BatchNormLayer*> batch_norms();
    std::int64_t param_count() const;

private:
    struct Block {
        std::vector<ConvLayer> convs;
        std::vector<BatchNormLayer> bns;
    };
    EncoderKind kind_;
    std::vector<Block> blocks_;
};

// Pretraining head: the latent map is average-pooled onto the patch grid and
// a position-wise dense layer maps it to channels x bins logits per patch.
class PatchDecoder {
public:
    PatchDecoder(const ModelConfig& cfg, Rng& rng);
    // returns logits shaped (N * grid * grid * channels, bins)
    Var apply(Graphf& g, Var latent, int batch);
    std::vector<Param*> params();

private:
    DenseLayer dense_;
    int grid_;
    int channels_;
    int bins_;
};

// Regression head: flatten, dropout, dense 512 with GELU, dense 6 linear.
class RegressionHead {
public:
    RegressionHead(const ModelConfig& cfg, Rng& rng);
    Var apply(Graphf& g, Var latent, Mode mode, Rng& rng);
    std::vector<Param*> params();
    double dropout_rate() const { return dropout_; }

private:
    DenseLayer fc_;
    DenseLayer out_;
    double dropout_;
};

// Complete pretraining model (encoder + categorical patch decoder) together
// with everything a checkpoint carries.
class PretrainModel {
public:
    PretrainModel(const ModelConfig& cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    Encoder& encoder() { return *encoder_; }
    const Encoder& encoder() const { return *encoder_; }

    // logits over a batch, shaped (N*grid*grid*channels, bins)
    Var logits(Graphf& g, Var x, Mode mode, int batch);
    // single-sample logits tensor shaped (grid, grid, channels, bins)
    Tensorf decode_sample(const Tensorf& sample, Mode mode = Mode::Infer);

    std::vector<Param*> params();

    void save(const std::string& path, const geo::NormalizationStats& stats,
              std::uint64_t rng_seed) const;
    struct Loaded {
        std::unique_ptr<PretrainModel> model;
        geo::NormalizationStats stats;
        std::uint64_t rng_seed = 0;
    };
    static Loaded load(const std::string& path);
    // fingerprint-guarded load into an expected configuration
    static Loaded load_expect(const std::string& path, const ModelConfig& expect);

private:
    friend class WamModel;
    ModelConfig cfg_;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<PatchDecoder> decoder_;
};

// Regression model: transferred encoder plus the six-output head.
class WamModel {
public:
    // fresh head, encoder copied from the pretrained model
    WamModel(const PretrainModel& pretrained, std::uint64_t head_seed);
    // architecture from scratch (no pretraining), mainly for tests
    WamModel(const ModelConfig& cfg, std::uint64_t init_seed);

    const ModelConfig& config() const { return cfg_; }
    Encoder& encoder() { return *encoder_; }

    // normalized 6-vector predictions, shape (N, 6)
    Var predict(Graphf& g, Var x, Mode mode, Rng& rng, bool frozen_encoder);
    Tensorf predict_sample(const Tensorf& sample, Mode mode = Mode::Infer);  // shape (6)

    std::vector<Param*> head_params();
    std::vector<Param*> all_params();

    void save(const std::string& path, const geo::NormalizationStats& stats,
              std::uint64_t rng_seed) const;
    struct Loaded {
        std::unique_ptr<WamModel> model;
        geo::NormalizationStats stats;
        std::uint64_t rng_seed = 0;
    };
    static Loaded load(const std::string& path);

private:
    ModelConfig cfg_;
    std::unique_ptr<Encoder> encoder_;
    std::unique_ptr<RegressionHead> head_;
};

}  // namespace wam::models
