#pragma once

#include <map>
#include <string>

#include "wam/models/models.hpp"

namespace wam::train {

// Minimal [section] key = value configuration file.
class IniFile {
public:
    static IniFile parse(const std::string& text);
    static IniFile load(const std::string& path);

    bool has(const std::string& section, const std::string& key) const;
    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const;
    std::string require(const std::string& section, const std::string& key) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;

private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct DataConfig {
    int window = 32;              // fused sample extent
    int pretrain_samples = 600;   // unlabelled set size
    double val_fraction = 0.05;   // pretraining checkpoint monitor slice
};

struct PretrainConfig {
    double lr = 1e-4;
    int batch = 32;
    int max_epochs = 20;
    int early_stop = 10;  // evaluations without improvement
    double mask_prob = 0.5;
};

struct FinetuneConfig {
    double lr = 1e-5;
    int batch = 16;
    int max_epochs = 60;
    int early_stop = 10;
    double train_split = 0.7;    // labelled train fraction, rest is test
    double val_fraction = 0.15;  // of the train split, for checkpointing
};

// Sections: [data], [model], [pretrain], [finetune]. Anything omitted falls
// back to the desk-scale defaults; the full-scale profile mirrors the
// reference settings and is kept for documentation.
struct RunConfig {
    DataConfig data;
    models::ModelConfig model;
    PretrainConfig pretrain;
    FinetuneConfig finetune;

    static RunConfig desk_default();
    static RunConfig full_scale();
    static RunConfig from_ini(const IniFile& ini);
};

}  // namespace wam::train
