#include "wam/train/config.hpp"

#include <fstream>
#include <sstream>

#include "wam/core/error.hpp"

namespace wam::train {

namespace {
std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}
}  // namespace

IniFile IniFile::parse(const std::string& text) {
    IniFile ini;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto comment = line.find_first_of("#;");
        if (comment != std::string::npos) line.erase(comment);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw Error("config: malformed section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            ini.sections_[section];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config: expected key = value at line " + std::to_string(lineno));
        ini.sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return ini;
}

IniFile IniFile::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("config: cannot open: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse(buf.str());
}

bool IniFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string IniFile::get(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return fallback;
    auto k = s->second.find(key);
    return k == s->second.end() ? fallback : k->second;
}

std::string IniFile::require(const std::string& section, const std::string& key) const {
    if (!has(section, key))
        throw Error("config: missing key [" + section + "] " + key);
    return get(section, key, "");
}

int IniFile::get_int(const std::string& section, const std::string& key, int fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stoi(get(section, key, ""));
    } catch (...) {
        throw Error("config: [" + section + "] " + key + " is not an integer");
    }
}

double IniFile::get_double(const std::string& section, const std::string& key,
                           double fallback) const {
    if (!has(section, key)) return fallback;
    try {
        return std::stod(get(section, key, ""));
    } catch (...) {
        throw Error("config: [" + section + "] " + key + " is not a number");
    }
}

RunConfig RunConfig::desk_default() {
    RunConfig cfg;
    cfg.model.kind = models::EncoderKind::Sequential;
    cfg.model.filters = {32, 64, 128};
    cfg.model.input_size = 32;
    cfg.model.patch = 8;  // 4x4 patch grid
    cfg.model.bins = 16;
    return cfg;
}

RunConfig RunConfig::full_scale() {
    RunConfig cfg;
    cfg.model.kind = models::EncoderKind::Residual;
    cfg.model.filters = {128, 256, 512};
    cfg.model.input_size = 128;
    cfg.model.patch = 16;  // 8x8 patch grid
    cfg.model.bins = 64;
    cfg.data.window = 128;
    cfg.data.pretrain_samples = 100000;
    cfg.pretrain.lr = 1e-4;
    cfg.pretrain.batch = 64;
    cfg.pretrain.max_epochs = 2000;
    cfg.finetune.lr = 1e-5;
    cfg.finetune.max_epochs = 6000;
    return cfg;
}

RunConfig RunConfig::from_ini(const IniFile& ini) {
    RunConfig cfg = desk_default();
    cfg.data.window = ini.get_int("data", "window", cfg.data.window);
    cfg.data.pretrain_samples =
        ini.get_int("data", "pretrain_samples", cfg.data.pretrain_samples);
    cfg.data.val_fraction = ini.get_double("data", "val_fraction", cfg.data.val_fraction);

    cfg.model.kind = models::encoder_kind_from_name(
        ini.get("model", "arch", models::encoder_kind_name(cfg.model.kind)));
    if (ini.has("model", "filters")) {
        const std::string f = ini.get("model", "filters", "");
        if (std::sscanf(f.c_str(), "%d,%d,%d", &cfg.model.filters[0], &cfg.model.filters[1],
                        &cfg.model.filters[2]) != 3)
            throw Error("config: [model] filters must be three comma-separated integers");
    }
    cfg.model.input_size = cfg.data.window;
    cfg.model.patch = ini.get_int("model", "patch", cfg.model.patch);
    cfg.model.bins = ini.get_int("model", "bins", cfg.model.bins);
    cfg.model.dropout = ini.get_double("model", "dropout", cfg.model.dropout);

    cfg.pretrain.lr = ini.get_double("pretrain", "lr", cfg.pretrain.lr);
    cfg.pretrain.batch = ini.get_int("pretrain", "batch", cfg.pretrain.batch);
    cfg.pretrain.max_epochs = ini.get_int("pretrain", "max_epochs", cfg.pretrain.max_epochs);
    cfg.pretrain.early_stop = ini.get_int("pretrain", "early_stop", cfg.pretrain.early_stop);
    cfg.pretrain.mask_prob = ini.get_double("pretrain", "mask_prob", cfg.pretrain.mask_prob);

    cfg.finetune.lr = ini.get_double("finetune", "lr", cfg.finetune.lr);
    cfg.finetune.batch = ini.get_int("finetune", "batch", cfg.finetune.batch);
    cfg.finetune.max_epochs = ini.get_int("finetune", "max_epochs", cfg.finetune.max_epochs);
    cfg.finetune.early_stop = ini.get_int("finetune", "early_stop", cfg.finetune.early_stop);
    cfg.finetune.train_split = ini.get_double("finetune", "train_split", cfg.finetune.train_split);
    cfg.finetune.val_fraction =
        ini.get_double("finetune", "val_fraction", cfg.finetune.val_fraction);
    return cfg;
}

}  // namespace wam::train
