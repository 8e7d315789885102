#include <CLI11.hpp>

#include <Eigen/Core>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <thread>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wam/baselines/baselines.hpp"
#include "wam/core/error.hpp"
#include "wam/geo/fuse.hpp"
#include "wam/geo/grid.hpp"
#include "wam/mapgen/mapgen.hpp"
#include "wam/models/models.hpp"
#include "wam/synth/synth.hpp"
#include "wam/train/config.hpp"
#include "wam/train/dataset.hpp"
#include "wam/train/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace wam;

namespace {

struct CommonOpts {
    std::string config_path;
    std::uint64_t seed = 7;
    int threads = 0;
};

void apply_threads(int threads) {
    const int n = threads > 0 ? threads
                              : static_cast<int>(std::thread::hardware_concurrency());
#ifdef _OPENMP
    omp_set_num_threads(std::max(1, n));
#endif
    Eigen::setNbThreads(std::max(1, n));
}

train::RunConfig load_config(const std::string& path) {
    if (path.empty()) return train::RunConfig::desk_default();
    return train::RunConfig::from_ini(train::IniFile::load(path));
}

// valid sample dates: both wind components present and at least two
// greenness measurements at or before the date
std::vector<geo::Date> valid_sample_dates(const geo::GridStore& store) {
    std::vector<geo::Date> gi_dates;
    for (geo::Date d : store.dates(geo::VariableId::ReflGreen))
        if (store.find(geo::VariableId::ReflRed, d) && store.find(geo::VariableId::ReflBlue, d))
            gi_dates.push_back(d);
    std::vector<geo::Date> out;
    if (gi_dates.size() < 2) return out;
    for (geo::Date d : store.dates(geo::VariableId::U10)) {
        if (d < gi_dates[1]) continue;
        auto u = store.readings(geo::VariableId::U10, d);
        auto v = store.readings(geo::VariableId::V10, d);
        const bool u_ok = u.count(12) || u.count(18);
        const bool v_ok = v.count(12) || v.count(18);
        if (u_ok && v_ok) out.push_back(d);
    }
    return out;
}

geo::SampleStore harmonize_all(const std::string& manifest,
                               std::vector<geo::Date>* dates_out = nullptr) {
    geo::GridStore store = geo::GridStore::load(manifest);
    std::vector<geo::Date> dates = valid_sample_dates(store);
    if (dates.empty()) throw Error("no usable sample dates in " + manifest);
    if (dates_out) *dates_out = dates;
    return geo::SampleStore::harmonize(store, dates);
}

void save_indices(const std::vector<int>& idx, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw Error("cannot open for writing: " + path);
    for (int i : idx) os << i << "\n";
}

std::vector<int> load_indices(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open: " + path);
    std::vector<int> out;
    int v;
    while (is >> v) out.push_back(v);
    if (out.empty()) throw Error("no indices in " + path);
    return out;
}

int cmd_synth_data(const std::string& out_dir, const train::RunConfig& cfg, std::uint64_t seed,
                   int records, int fine_n, int days, double noise) {
    synth::SynthSpec spec;
    if (fine_n > 0) spec.fine_n = fine_n;
    if (days > 0) spec.days = days;
    if (noise >= 0.0) spec.label_noise = noise;
    synth::SynthOutput out =
        synth::generate_dataset(spec, records, cfg.data.window / 2, seed, out_dir);
    std::cerr << "synthetic dataset written to " << out_dir << " (" << records << " records, "
              << out.sample_dates.size() << " usable dates)\n";
    json j;
    j["manifest"] = out.manifest_path;
    j["records"] = out.records_path;
    j["sample_dates"] = out.sample_dates.size();
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_ingest(const std::string& manifest, const std::string& out_dir) {
    fs::create_directories(out_dir);
    std::vector<geo::Date> dates;
    geo::SampleStore samples = harmonize_all(manifest, &dates);
    geo::NormalizationStats stats = geo::fit_channel_stats(samples);
    const std::string stats_path = (fs::path(out_dir) / "normalization_stats.txt").string();
    stats.save(stats_path);
    {
        std::ofstream os((fs::path(out_dir) / "sample_dates.txt").string(), std::ios::trunc);
        for (geo::Date d : dates) os << d.str() << "\n";
    }
    std::cerr << "ingested " << dates.size() << " usable dates; grid "
              << samples.lat_axis().size() << "x" << samples.lon_axis().size() << "\n";
    json j;
    j["stats"] = stats_path;
    j["dates"] = dates.size();
    j["nlat"] = samples.lat_axis().size();
    j["nlon"] = samples.lon_axis().size();
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_pretrain(const std::string& manifest, const std::string& stats_path,
                 const std::string& out_dir, train::RunConfig cfg, std::uint64_t seed) {
    fs::create_directories(out_dir);
    geo::SampleStore samples = harmonize_all(manifest);
    geo::NormalizationStats stats = stats_path.empty() ? geo::fit_channel_stats(samples)
                                                       : geo::NormalizationStats::load(stats_path);
    Rng rng(Rng(seed).fork(42).next_u64());
    std::vector<Tensorf> set = train::build_pretrain_set(samples, stats, cfg.data.pretrain_samples,
                                                         cfg.data.window, rng);
    const std::string ckpt = (fs::path(out_dir) / "pretrain.ckpt").string();
    train::PretrainResult result = train::pretrain(set, cfg.model, cfg.pretrain,
                                                   cfg.data.val_fraction, stats, seed, ckpt);
    result.log.save((fs::path(out_dir) / "pretrain_metrics.csv").string());
    std::cerr << "pretrained " << models::encoder_kind_name(cfg.model.kind) << " for "
              << result.epochs_run << " epochs; best masked accuracy " << result.best_accuracy
              << "\n";
    json j;
    j["checkpoint"] = ckpt;
    j["best_accuracy"] = result.best_accuracy;
    j["epochs"] = result.epochs_run;
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_grid_search(const std::string& manifest, const std::string& stats_path,
                    const std::string& out_dir, train::RunConfig cfg, std::uint64_t seed) {
    fs::create_directories(out_dir);
    geo::SampleStore samples = harmonize_all(manifest);
    geo::NormalizationStats stats = stats_path.empty() ? geo::fit_channel_stats(samples)
                                                       : geo::NormalizationStats::load(stats_path);
    Rng rng(Rng(seed).fork(42).next_u64());
    std::vector<Tensorf> set = train::build_pretrain_set(samples, stats, cfg.data.pretrain_samples,
                                                         cfg.data.window, rng);
    const std::vector<double> lrs = {5e-5, 1e-4, 2e-4, 5e-4, 1e-3};
    const std::vector<int> bins = {4, 8, 16, 32, 64};
    train::GridSearchResult result = train::grid_search(set, cfg.model, cfg.pretrain,
                                                        cfg.data.val_fraction, lrs, bins, stats,
                                                        seed, out_dir);
    const std::string csv_path = (fs::path(out_dir) / "grid_search.csv").string();
    {
        std::ofstream os(csv_path, std::ios::trunc);
        os << result.csv();
    }
    std::cerr << "grid search complete: " << lrs.size() * bins.size() << " cells -> " << csv_path
              << "\n";
    std::cout << result.csv();
    return 0;
}

int cmd_finetune(const std::string& checkpoint, const std::string& manifest,
                 const std::string& records_path, const std::string& out_dir,
                 train::RunConfig cfg, std::uint64_t seed, const std::string& mode_name) {
    fs::create_directories(out_dir);
    models::PretrainModel::Loaded pre = models::PretrainModel::load(checkpoint);
    geo::SampleStore samples = harmonize_all(manifest);
    std::vector<geo::WildfireRecord> records = geo::load_records(records_path);
    train::LabelledSet labelled = train::build_labelled_set(samples, pre.stats, records,
                                                            pre.model->config().input_size);
    const train::TransferMode mode = train::transfer_mode_from_name(mode_name);
    const std::string ckpt =
        (fs::path(out_dir) / ("wam_" + mode_name + ".ckpt")).string();
    train::FinetuneResult result =
        train::finetune(*pre.model, labelled, mode, cfg.finetune, pre.stats, seed, ckpt);
    result.log.save((fs::path(out_dir) / ("finetune_" + mode_name + "_metrics.csv")).string());
    save_indices(result.split.train, (fs::path(out_dir) / "train_indices.txt").string());
    save_indices(result.split.test, (fs::path(out_dir) / "test_indices.txt").string());

    auto mae = train::evaluate_mae(*result.model, labelled, result.split.test, result.stats);
    std::cerr << "finetune (" << mode_name << ") done after " << result.epochs_run
              << " epochs; test MAE per label:";
    for (double v : mae) std::cerr << " " << v;
    std::cerr << "\n";
    json j;
    j["checkpoint"] = ckpt;
    j["epochs"] = result.epochs_run;
    j["best_val_mae_normalized"] = result.best_val_mae;
    for (int l = 0; l < geo::kNumLabels; ++l)
        j["test_mae"][geo::label_name(static_cast<geo::Label>(l))] = mae[l];
    std::cout << j.dump() << "\n";
    return 0;
}

int cmd_evaluate(const std::string& checkpoint, const std::string& manifest,
                 const std::string& records_path, const std::string& indices_path,
                 const std::string& out_csv) {
    models::WamModel::Loaded loaded = models::WamModel::load(checkpoint);
    geo::SampleStore samples = harmonize_all(manifest);
    std::vector<geo::WildfireRecord> records = geo::load_records(records_path);
    train::LabelledSet labelled = train::build_labelled_set(samples, loaded.stats, records,
                                                            loaded.model->config().input_size);
    std::vector<int> indices;
    if (indices_path.empty()) {
        indices.resize(records.size());
        for (std::size_t i = 0; i < records.size(); ++i) indices[i] = static_cast<int>(i);
    } else {
        indices = load_indices(indices_path);
    }
    auto mae = train::evaluate_mae(*loaded.model, labelled, indices, loaded.stats);
    std::ostringstream csv;
    csv << "label,mae\n";
    char buf[32];
    for (int l = 0; l < geo::kNumLabels; ++l) {
        std::snprintf(buf, sizeof buf, "%.17g", mae[l]);
        csv << geo::label_name(static_cast<geo::Label>(l)) << "," << buf << "\n";
    }
    if (!out_csv.empty()) {
        std::ofstream os(out_csv, std::ios::trunc);
        os << csv.str();
    }
    std::cout << csv.str();
    std::cerr << "evaluated " << indices.size() << " samples\n";
    return 0;
}

int cmd_baselines(const std::string& manifest, const std::string& stats_path,
                  const std::string& records_path, const std::string& out_dir,
                  std::uint64_t seed, const std::string& train_idx_path,
                  const std::string& test_idx_path,
                  const std::vector<std::string>& network_specs, int window) {
    fs::create_directories(out_dir);
    geo::SampleStore samples = harmonize_all(manifest);
    geo::NormalizationStats stats = geo::NormalizationStats::load(stats_path);
    std::vector<geo::WildfireRecord> records = geo::load_records(records_path);
    train::LabelledSet labelled = train::build_labelled_set(samples, stats, records, window);

    train::Split split;
    if (!train_idx_path.empty() && !test_idx_path.empty()) {
        split.train = load_indices(train_idx_path);
        split.test = load_indices(test_idx_path);
    } else {
        Rng rng(Rng(seed).fork(10).next_u64());
        split = train::split_random(static_cast<int>(records.size()), 0.7, rng);
    }

    std::vector<baselines::Features> feat(labelled.x.size());
    for (std::size_t i = 0; i < labelled.x.size(); ++i) {
        geo::FusedSample s;
        s.tensor = labelled.x[i];
        feat[i] = baselines::summarize(s);
    }

    // six independent regressors per method
    std::array<std::array<double, geo::kNumLabels>, 4> mae{};  // avg, tree, gboost, forest
    for (int l = 0; l < geo::kNumLabels; ++l) {
        std::vector<baselines::Features> xtr;
        std::vector<double> ytr;
        for (int i : split.train) {
            xtr.push_back(feat[i]);
            ytr.push_back(labelled.y[i][l]);
        }
        const double avg = baselines::average_baseline(ytr);
        baselines::DecisionTree tree;
        tree.fit(xtr, ytr, baselines::TreeParams{});
        baselines::GradientBoost boost;
        boost.fit(xtr, ytr, baselines::BoostParams{});
        baselines::RandomForest forest;
        forest.fit(xtr, ytr, baselines::ForestParams{}, Rng(seed).fork(900 + l).next_u64());

        for (int i : split.test) {
            const double y = labelled.y[i][l];
            mae[0][l] += std::fabs(avg - y);
            mae[1][l] += std::fabs(tree.predict(feat[i]) - y);
            mae[2][l] += std::fabs(boost.predict(feat[i]) - y);
            mae[3][l] += std::fabs(forest.predict(feat[i]) - y);
        }
        for (int m = 0; m < 4; ++m) mae[m][l] /= static_cast<double>(split.test.size());
    }

    // optional network columns from evaluate outputs: name=path.csv
    std::vector<std::pair<std::string, std::array<double, geo::kNumLabels>>> networks;
    for (const std::string& spec : network_specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw Error("baselines: --network expects name=eval.csv, got '" + spec + "'");
        const std::string name = spec.substr(0, eq);
        std::ifstream is(spec.substr(eq + 1));
        if (!is) throw Error("baselines: cannot open " + spec.substr(eq + 1));
        std::string line;
        std::getline(is, line);  // header
        std::array<double, geo::kNumLabels> vals{};
        int row = 0;
        while (std::getline(is, line) && row < geo::kNumLabels) {
            const auto comma = line.rfind(',');
            vals[row++] = std::stod(line.substr(comma + 1));
        }
        networks.emplace_back(name, vals);
    }

    std::ostringstream csv;
    csv << "label,average_baseline,decision_tree,gboost,random_forest";
    for (const auto& [name, _] : networks) csv << "," << name;
    if (!networks.empty()) csv << ",improvement_pct";
    csv << "\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.6g", v);
        csv << "," << buf;
    };
    for (int l = 0; l < geo::kNumLabels; ++l) {
        csv << geo::label_name(static_cast<geo::Label>(l));
        for (int m = 0; m < 4; ++m) put(mae[m][l]);
        for (const auto& [_, vals] : networks) put(vals[l]);
        if (!networks.empty()) {
            const double best_baseline = std::min({mae[1][l], mae[2][l], mae[3][l]});
            double best_net = networks[0].second[l];
            for (const auto& [_, vals] : networks) best_net = std::min(best_net, vals[l]);
            put((best_baseline - best_net) / best_baseline * 100.0);
        }
        csv << "\n";
    }
    const std::string path = (fs::path(out_dir) / "baseline_results.csv").string();
    {
        std::ofstream os(path, std::ios::trunc);
        os << csv.str();
    }
    std::cout << csv.str();
    std::cerr << "baseline comparison written to " << path << "\n";
    return 0;
}

int cmd_mapgen(const std::string& checkpoint, const std::string& region_manifest,
               const std::string& date_str, const std::string& out_dir,
               const std::string& format, int stride) {
    models::WamModel::Loaded loaded = models::WamModel::load(checkpoint);
    const geo::Date date = geo::Date::parse(date_str);
    geo::GridStore store = geo::GridStore::load(region_manifest);
    geo::SampleStore samples = geo::SampleStore::harmonize(store, {date});
    const int window = loaded.model->config().input_size;
    auto rasters = mapgen::predict_raster(*loaded.model, samples, loaded.stats, date, window,
                                          stride);
    const mapgen::RasterFormat fmt =
        format == "csv" ? mapgen::RasterFormat::Csv : mapgen::RasterFormat::Pgm;
    json j;
    for (const auto& raster : rasters) {
        const std::string path = mapgen::emit(raster, fmt, out_dir);
        j["rasters"].push_back(path);
        std::cerr << "wrote " << path << "\n";
    }
    j["window_count"] =
        mapgen::window_count(static_cast<int>(samples.lat_axis().size()),
                             static_cast<int>(samples.lon_axis().size()), window);
    std::cout << j.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wildfire assessment pipeline: self-supervised pretraining over fused "
                 "atmospheric/vegetation grids, transfer to six-label resource regression, "
                 "baselines, and regional prediction maps"};
    app.require_subcommand(1);

    CommonOpts common;
    app.add_option("--threads", common.threads, "worker threads (default: all cores)");

    std::string out_dir = "out";
    std::string manifest, stats_path, records_path, checkpoint, date_str, indices_path;
    std::string mode_name = "finetune", format = "pgm", out_csv;
    std::string train_idx, test_idx;
    std::vector<std::string> network_specs;
    int records = 200, fine_n = 0, days = 0, stride = 1, window = 32;
    double noise = -1.0;

    auto* synth_cmd = app.add_subcommand("synth-data", "generate a synthetic dataset");
    synth_cmd->add_option("--out", out_dir, "output directory")->required();
    synth_cmd->add_option("--config", common.config_path, "config file");
    synth_cmd->add_option("--seed", common.seed, "root seed");
    synth_cmd->add_option("--records", records, "number of wildfire records");
    synth_cmd->add_option("--fine-n", fine_n, "fine grid cells per side");
    synth_cmd->add_option("--days", days, "study period length in days");
    synth_cmd->add_option("--noise", noise, "label noise sigma (0 = deterministic oracle)");

    auto* ingest_cmd = app.add_subcommand("ingest", "validate and harmonize a grid manifest");
    ingest_cmd->add_option("--manifest", manifest, "grid manifest")->required();
    ingest_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* pre_cmd = app.add_subcommand("pretrain", "masked-patch pretraining");
    pre_cmd->add_option("--manifest", manifest, "grid manifest")->required();
    pre_cmd->add_option("--stats", stats_path, "normalization stats file (default: fit)");
    pre_cmd->add_option("--out", out_dir, "output directory")->required();
    pre_cmd->add_option("--config", common.config_path, "config file");
    pre_cmd->add_option("--seed", common.seed, "root seed");
    std::string arch_override;
    pre_cmd->add_option("--arch", arch_override, "encoder architecture override");
    int bins_override = 0, epochs_override = 0;
    pre_cmd->add_option("--bins", bins_override, "bin count override");
    pre_cmd->add_option("--epochs", epochs_override, "max epoch override");

    auto* grid_cmd = app.add_subcommand("grid-search", "learning-rate x bins sweep");
    grid_cmd->add_option("--manifest", manifest, "grid manifest")->required();
    grid_cmd->add_option("--stats", stats_path, "normalization stats file (default: fit)");
    grid_cmd->add_option("--out", out_dir, "output directory")->required();
    grid_cmd->add_option("--config", common.config_path, "config file");
    grid_cmd->add_option("--seed", common.seed, "root seed");

    auto* fine_cmd = app.add_subcommand("finetune", "transfer to the regression task");
    fine_cmd->add_option("--checkpoint", checkpoint, "pretrain checkpoint")->required();
    fine_cmd->add_option("--manifest", manifest, "grid manifest")->required();
    fine_cmd->add_option("--records", records_path, "wildfire records csv")->required();
    fine_cmd->add_option("--out", out_dir, "output directory")->required();
    fine_cmd->add_option("--config", common.config_path, "config file");
    fine_cmd->add_option("--seed", common.seed, "root seed");
    fine_cmd->add_option("--mode", mode_name, "frozen|finetune");

    auto* eval_cmd = app.add_subcommand("evaluate", "denormalized per-label MAE");
    eval_cmd->add_option("--checkpoint", checkpoint, "regression checkpoint")->required();
    eval_cmd->add_option("--manifest", manifest, "grid manifest")->required();
    eval_cmd->add_option("--records", records_path, "wildfire records csv")->required();
    eval_cmd->add_option("--indices", indices_path, "record indices file (default: all)");
    eval_cmd->add_option("--out-csv", out_csv, "write the MAE table here");

    auto* base_cmd = app.add_subcommand("baselines", "classical regressors over 27 features");
    base_cmd->add_option("--manifest", manifest, "grid manifest")->required();
    base_cmd->add_option("--stats", stats_path, "normalization stats file")->required();
    base_cmd->add_option("--records", records_path, "wildfire records csv")->required();
    base_cmd->add_option("--out", out_dir, "output directory")->required();
    base_cmd->add_option("--seed", common.seed, "root seed (for the 70/30 split)");
    base_cmd->add_option("--train-idx", train_idx, "train indices file (from finetune)");
    base_cmd->add_option("--test-idx", test_idx, "test indices file (from finetune)");
    base_cmd->add_option("--network", network_specs, "append network column: name=eval.csv");
    base_cmd->add_option("--window", window, "sample window extent");

    auto* map_cmd = app.add_subcommand("mapgen", "regional assessment rasters");
    map_cmd->add_option("--checkpoint", checkpoint, "regression checkpoint")->required();
    map_cmd->add_option("--region", manifest, "region grid manifest")->required();
    map_cmd->add_option("--date", date_str, "assessment date (YYYY-MM-DD)")->required();
    map_cmd->add_option("--out", out_dir, "output directory")->required();
    map_cmd->add_option("--format", format, "pgm|csv")->check(CLI::IsMember({"pgm", "csv"}));
    map_cmd->add_option("--stride", stride, "evaluate every nth cell");

    CLI11_PARSE(app, argc, argv);
    apply_threads(common.threads);

    try {
        train::RunConfig cfg = load_config(common.config_path);
        if (synth_cmd->parsed())
            return cmd_synth_data(out_dir, cfg, common.seed, records, fine_n, days, noise);
        if (ingest_cmd->parsed()) return cmd_ingest(manifest, out_dir);
        if (pre_cmd->parsed()) {
            if (!arch_override.empty())
                cfg.model.kind = models::encoder_kind_from_name(arch_override);
            if (bins_override > 0) cfg.model.bins = bins_override;
            if (epochs_override > 0) cfg.pretrain.max_epochs = epochs_override;
            return cmd_pretrain(manifest, stats_path, out_dir, cfg, common.seed);
        }
        if (grid_cmd->parsed())
            return cmd_grid_search(manifest, stats_path, out_dir, cfg, common.seed);
        if (fine_cmd->parsed())
            return cmd_finetune(checkpoint, manifest, records_path, out_dir, cfg, common.seed,
                                mode_name);
        if (eval_cmd->parsed())
            return cmd_evaluate(checkpoint, manifest, records_path, indices_path, out_csv);
        if (base_cmd->parsed())
            return cmd_baselines(manifest, stats_path, records_path, out_dir, common.seed,
                                 train_idx, test_idx, network_specs, window);
        if (map_cmd->parsed())
            return cmd_mapgen(checkpoint, manifest, date_str, out_dir, format, stride);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
