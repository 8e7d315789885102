#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "wam/geo/normalize.hpp"
#include "wam/mim/mim.hpp"
#include "wam/models/models.hpp"
#include "wam/train/config.hpp"
#include "wam/train/dataset.hpp"

namespace wam::train {

// epoch, loss, metric rows; serialized as CSV for the run logs
struct MetricLog {
    struct Row {
        int epoch;
        double loss;
        double metric;
    };
    std::vector<Row> rows;
    void add(int epoch, double loss, double metric) { rows.push_back({epoch, loss, metric}); }
    std::string csv() const;
    void save(const std::string& path) const;
};

struct PretrainResult {
    std::unique_ptr<models::PretrainModel> model;  // best checkpointed state
    double best_accuracy = 0.0;                    // masked accuracy on the monitor slice
    int epochs_run = 0;
    MetricLog log;
};

// Masked-patch pretraining: sparse categorical cross-entropy over masked
// positions, Adam, checkpoint on best masked accuracy over a held-out slice,
// early stop after `early_stop` evaluations without improvement. Masks are
// fixed per (sample id, seed). The best state is written to checkpoint_path
// on every improvement and reloaded at the end.
PretrainResult pretrain(const std::vector<Tensorf>& samples, const models::ModelConfig& mcfg,
                        const PretrainConfig& pcfg, double val_fraction,
                        const geo::NormalizationStats& stats, std::uint64_t seed,
                        const std::string& checkpoint_path);

struct GridSearchResult {
    std::vector<double> lrs;
    std::vector<int> bins;
    std::vector<std::vector<double>> accuracy;  // [lr index][bin index]
    std::string csv() const;                    // rows = learning rates, columns = bins
};

// Full learning-rate x bin-count sweep over a shared dataset and seed.
GridSearchResult grid_search(const std::vector<Tensorf>& samples, models::ModelConfig base,
                             PretrainConfig pcfg, double val_fraction,
                             const std::vector<double>& lrs, const std::vector<int>& bins,
                             const geo::NormalizationStats& stats, std::uint64_t seed,
                             const std::string& work_dir);

enum class TransferMode { Frozen, Finetune };

const char* transfer_mode_name(TransferMode m);
TransferMode transfer_mode_from_name(const std::string& name);

struct FinetuneResult {
    std::unique_ptr<models::WamModel> model;  // best checkpointed state
    geo::NormalizationStats stats;            // input stats + train-split label stats
    Split split;                              // train/test indices into the labelled set
    double best_val_mae = 0.0;                // normalized units
    int epochs_run = 0;
    MetricLog log;
};

// Transfer to the regression task: MSE loss on min-max normalized labels,
// MAE monitored for checkpointing on a validation slice of the train split.
// Frozen mode updates only the head and leaves the encoder untouched.
FinetuneResult finetune(const models::PretrainModel& pretrained, const LabelledSet& labelled,
                        TransferMode mode, const FinetuneConfig& cfg,
                        const geo::NormalizationStats& input_stats, std::uint64_t seed,
                        const std::string& checkpoint_path);

// Per-label mean absolute error in natural units over the chosen samples.
std::array<double, geo::kNumLabels> evaluate_mae(models::WamModel& model,
                                                 const LabelledSet& set,
                                                 const std::vector<int>& indices,
                                                 const geo::NormalizationStats& stats);

}  // namespace wam::train
