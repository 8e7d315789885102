#include "wam/train/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "wam/core/error.hpp"

namespace wam::train {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return Rng(seed).fork(tag).next_u64();
}

// batch of masked inputs + flattened targets/mask rows, matching the
// decoder's (n, gy, gx, channel) row order
struct MimBatch {
    Tensorf x;
    std::vector<int> targets;
    std::vector<std::uint8_t> rows;
    int n = 0;
};

MimBatch assemble_mim_batch(const std::vector<mim::PatchTask>& tasks,
                            const std::vector<int>& order, std::size_t lo, std::size_t hi,
                            int h, int w, int c) {
    MimBatch batch;
    batch.n = static_cast<int>(hi - lo);
    batch.x = Tensorf(Shape{batch.n, h, w, c});
    const std::size_t per = static_cast<std::size_t>(h) * w * c;
    for (std::size_t k = lo; k < hi; ++k) {
        const mim::PatchTask& task = tasks[order[k]];
        std::copy(task.masked_input.data.begin(), task.masked_input.data.end(),
                  batch.x.data.begin() + (k - lo) * per);
        batch.targets.insert(batch.targets.end(), task.targets.begin(), task.targets.end());
        std::vector<std::uint8_t> rows = mim::expand_patch_mask(task.mask, c);
        batch.rows.insert(batch.rows.end(), rows.begin(), rows.end());
    }
    return batch;
}

}  // namespace

std::string MetricLog::csv() const {
    std::ostringstream os;
    os << "epoch,loss,metric\n";
    for (const Row& r : rows) os << r.epoch << "," << fmt(r.loss) << "," << fmt(r.metric) << "\n";
    return os.str();
}

void MetricLog::save(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("metrics: cannot open for writing: " + path);
    os << csv();
}

PretrainResult pretrain(const std::vector<Tensorf>& samples, const models::ModelConfig& mcfg,
                        const PretrainConfig& pcfg, double val_fraction,
                        const geo::NormalizationStats& stats, std::uint64_t seed,
                        const std::string& checkpoint_path) {
    if (samples.empty()) throw Error("pretrain: empty dataset");
    const int h = samples[0].shape[0], w = samples[0].shape[1], c = samples[0].shape[2];
    if (h != mcfg.input_size || c != mcfg.in_channels)
        throw Error("pretrain: samples " + samples[0].shape.str() +
                    " do not match the model input " + std::to_string(mcfg.input_size));

    const mim::BinningScheme scheme = mim::BinningScheme::standard(mcfg.bins);

    // masks fixed per (sample id, seed)
    std::vector<mim::PatchTask> tasks;
    tasks.reserve(samples.size());
    for (std::size_t s = 0; s < samples.size(); ++s) {
        Rng task_rng = Rng(seed).fork(1000000 + s);
        tasks.push_back(
            mim::partition_and_mask(samples[s], pcfg.mask_prob, mcfg.patch, scheme, task_rng));
    }

    // monitor slice
    std::vector<int> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    {
        Rng split_rng(derive(seed, 2));
        split_rng.shuffle(order);
    }
    const int n_val =
        std::max(1, static_cast<int>(val_fraction * static_cast<double>(samples.size()) + 0.5));
    std::vector<int> val_idx(order.end() - n_val, order.end());
    std::vector<int> train_idx(order.begin(), order.end() - n_val);
    if (train_idx.empty()) throw Error("pretrain: no training samples left after the monitor slice");

    models::PretrainModel model(mcfg, derive(seed, 1));
    std::vector<Param*> params = model.params();

    auto evaluate = [&]() {
        double hits = 0.0, count = 0.0;
        for (std::size_t lo = 0; lo < val_idx.size(); lo += pcfg.batch) {
            const std::size_t hi = std::min(val_idx.size(), lo + pcfg.batch);
            MimBatch batch = assemble_mim_batch(tasks, val_idx, lo, hi, h, w, c);
            Graphf g;
            Var logits = model.logits(g, g.constant(batch.x), Mode::Infer, batch.n);
            const AVec<float>& lv = g.value(logits).data;
            // accuracy over masked rows; rows and targets share the order
            for (std::size_t r = 0; r < batch.targets.size(); ++r) {
                if (!batch.rows[r]) continue;
                const float* row = lv.data() + r * mcfg.bins;
                int best = 0;
                for (int j = 1; j < mcfg.bins; ++j)
                    if (row[j] > row[best]) best = j;
                hits += best == batch.targets[r] ? 1.0 : 0.0;
                count += 1.0;
            }
        }
        return hits / count;
    };

    PretrainResult result;
    double best = -1.0;
    int patience = 0;
    for (int epoch = 1; epoch <= pcfg.max_epochs; ++epoch) {
        Rng epoch_rng(derive(seed, 100 + static_cast<std::uint64_t>(epoch)));
        epoch_rng.shuffle(train_idx);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t lo = 0; lo < train_idx.size(); lo += pcfg.batch, ++batches) {
            const std::size_t hi = std::min(train_idx.size(), lo + pcfg.batch);
            MimBatch batch = assemble_mim_batch(tasks, train_idx, lo, hi, h, w, c);
            Graphf g;
            Var logits = model.logits(g, g.constant(batch.x), Mode::Train, batch.n);
            Var loss = g.sparse_categorical_xent(logits, batch.targets, batch.rows);
            const double loss_value = g.value(loss)[0];
            if (!std::isfinite(loss_value))
                throw Error("pretrain: non-finite loss at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(batches));
            g.backward(loss);
            adam_step<float>(params, pcfg.lr);
            loss_sum += loss_value;
        }

        const double acc = evaluate();
        result.log.add(epoch, loss_sum / std::max(1, batches), acc);
        result.epochs_run = epoch;
        if (acc > best) {
            best = acc;
            patience = 0;
            model.save(checkpoint_path, stats, seed);
        } else if (++patience >= pcfg.early_stop) {
            break;
        }
    }

    models::PretrainModel::Loaded loaded = models::PretrainModel::load(checkpoint_path);
    result.model = std::move(loaded.model);
    result.best_accuracy = best;
    return result;
}

std::string GridSearchResult::csv() const {
    std::ostringstream os;
    os << "learning_rate";
    for (int b : bins) os << "," << b;
    os << "\n";
    for (std::size_t i = 0; i < lrs.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", lrs[i]);
        os << buf;
        for (std::size_t j = 0; j < bins.size(); ++j) os << "," << fmt(accuracy[i][j]);
        os << "\n";
    }
    return os.str();
}

GridSearchResult grid_search(const std::vector<Tensorf>& samples, models::ModelConfig base,
                             PretrainConfig pcfg, double val_fraction,
                             const std::vector<double>& lrs, const std::vector<int>& bins,
                             const geo::NormalizationStats& stats, std::uint64_t seed,
                             const std::string& work_dir) {
    GridSearchResult result;
    result.lrs = lrs;
    result.bins = bins;
    result.accuracy.assign(lrs.size(), std::vector<double>(bins.size(), 0.0));
    for (std::size_t i = 0; i < lrs.size(); ++i) {
        for (std::size_t j = 0; j < bins.size(); ++j) {
            models::ModelConfig mcfg = base;
            mcfg.bins = bins[j];
            PretrainConfig cell = pcfg;
            cell.lr = lrs[i];
            const std::string path = work_dir + "/grid_" + std::to_string(i) + "_" +
                                     std::to_string(j) + ".ckpt";
            // shared seed and data across cells for comparability
            PretrainResult r = pretrain(samples, mcfg, cell, val_fraction, stats, seed, path);
            result.accuracy[i][j] = r.best_accuracy;
        }
    }
    return result;
}

const char* transfer_mode_name(TransferMode m) {
    return m == TransferMode::Frozen ? "frozen" : "finetune";
}

TransferMode transfer_mode_from_name(const std::string& name) {
    if (name == "frozen") return TransferMode::Frozen;
    if (name == "finetune") return TransferMode::Finetune;
    throw Error("transfer mode must be frozen|finetune, got '" + name + "'");
}

FinetuneResult finetune(const models::PretrainModel& pretrained, const LabelledSet& labelled,
                        TransferMode mode, const FinetuneConfig& cfg,
                        const geo::NormalizationStats& input_stats, std::uint64_t seed,
                        const std::string& checkpoint_path) {
    if (labelled.x.size() != labelled.y.size() || labelled.x.size() < 4)
        throw Error("finetune: need at least 4 labelled samples");
    const int n = static_cast<int>(labelled.x.size());
    const int h = labelled.x[0].shape[0], w = labelled.x[0].shape[1],
              c = labelled.x[0].shape[2];

    FinetuneResult result;
    {
        Rng split_rng(derive(seed, 10));
        result.split = split_random(n, cfg.train_split, split_rng);
    }

    // label statistics fit on the train split only
    result.stats = input_stats;
    {
        std::vector<std::array<double, geo::kNumLabels>> train_labels;
        for (int i : result.split.train) train_labels.push_back(labelled.y[i]);
        geo::minmax_fit(result.stats, train_labels);
    }

    // normalized targets for the train split
    std::vector<std::array<float, geo::kNumLabels>> ynorm(labelled.y.size());
    for (int i : result.split.train)
        for (int l = 0; l < geo::kNumLabels; ++l)
            ynorm[i][l] = static_cast<float>(geo::minmax_apply(result.stats, l, labelled.y[i][l]));

    // monitor slice from the (already shuffled) train indices
    const int n_train = static_cast<int>(result.split.train.size());
    const int n_val = std::max(1, static_cast<int>(cfg.val_fraction * n_train + 0.5));
    if (n_val >= n_train) throw Error("finetune: validation slice swallows the train split");
    std::vector<int> val_idx(result.split.train.end() - n_val, result.split.train.end());
    std::vector<int> fit_idx(result.split.train.begin(), result.split.train.end() - n_val);

    auto model = std::make_unique<models::WamModel>(pretrained, derive(seed, 11));
    const bool frozen = mode == TransferMode::Frozen;
    std::vector<Param*> params = frozen ? model->head_params() : model->all_params();
    Rng dropout_rng(derive(seed, 12));

    auto assemble = [&](const std::vector<int>& idx, std::size_t lo, std::size_t hi, Tensorf& x,
                        Tensorf& y) {
        const int nb = static_cast<int>(hi - lo);
        x = Tensorf(Shape{nb, h, w, c});
        y = Tensorf(Shape{nb, geo::kNumLabels});
        const std::size_t per = static_cast<std::size_t>(h) * w * c;
        for (std::size_t k = lo; k < hi; ++k) {
            std::copy(labelled.x[idx[k]].data.begin(), labelled.x[idx[k]].data.end(),
                      x.data.begin() + (k - lo) * per);
            for (int l = 0; l < geo::kNumLabels; ++l)
                y.data[(k - lo) * geo::kNumLabels + l] = ynorm[idx[k]][l];
        }
    };

    auto validate = [&]() {
        double acc = 0.0;
        std::size_t count = 0;
        for (std::size_t lo = 0; lo < val_idx.size(); lo += cfg.batch) {
            const std::size_t hi = std::min(val_idx.size(), lo + cfg.batch);
            Tensorf x, y;
            assemble(val_idx, lo, hi, x, y);
            Graphf g;
            Rng unused(0);
            Var pred = model->predict(g, g.constant(x), Mode::Infer, unused, true);
            const Tensorf& pv = g.value(pred);
            for (std::int64_t i = 0; i < pv.numel(); ++i)
                acc += std::fabs(static_cast<double>(pv[i]) - y[i]);
            count += static_cast<std::size_t>(pv.numel());
        }
        return acc / static_cast<double>(count);
    };

    double best = std::numeric_limits<double>::infinity();
    int patience = 0;
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        Rng epoch_rng(derive(seed, 500 + static_cast<std::uint64_t>(epoch)));
        epoch_rng.shuffle(fit_idx);
        double loss_sum = 0.0;
        int batches = 0;
        for (std::size_t lo = 0; lo < fit_idx.size(); lo += cfg.batch, ++batches) {
            const std::size_t hi = std::min(fit_idx.size(), lo + cfg.batch);
            Tensorf x, y;
            assemble(fit_idx, lo, hi, x, y);
            Graphf g;
            Var pred = model->predict(g, g.constant(x), Mode::Train, dropout_rng, frozen);
            Var loss = g.mse(pred, y);
            const double loss_value = g.value(loss)[0];
            if (!std::isfinite(loss_value))
                throw Error("finetune: non-finite loss at epoch " + std::to_string(epoch) +
                            " batch " + std::to_string(batches));
            g.backward(loss);
            adam_step<float>(params, cfg.lr);
            loss_sum += loss_value;
        }

        const double val_mae = validate();
        result.log.add(epoch, loss_sum / std::max(1, batches), val_mae);
        result.epochs_run = epoch;
        if (val_mae < best) {
            best = val_mae;
            patience = 0;
            model->save(checkpoint_path, result.stats, seed);
        } else if (++patience >= cfg.early_stop) {
            break;
        }
    }

    models::WamModel::Loaded loaded = models::WamModel::load(checkpoint_path);
    result.model = std::move(loaded.model);
    result.best_val_mae = best;
    return result;
}

std::array<double, geo::kNumLabels> evaluate_mae(models::WamModel& model, const LabelledSet& set,
                                                 const std::vector<int>& indices,
                                                 const geo::NormalizationStats& stats) {
    if (indices.empty()) throw Error("evaluate: empty evaluation set");
    if (!stats.has_labels) throw Error("evaluate: label statistics not fitted");
    std::array<double, geo::kNumLabels> mae{};
    for (int i : indices) {
        Tensorf pred = model.predict_sample(set.x[i]);
        for (int l = 0; l < geo::kNumLabels; ++l) {
            const double denorm = geo::minmax_invert(stats, l, pred[l]);
            mae[l] += std::fabs(denorm - set.y[i][l]);
        }
    }
    for (double& v : mae) v /= static_cast<double>(indices.size());
    return mae;
}

}  // namespace wam::train
