#include "wam/train/dataset.hpp"

#include <numeric>

#include "wam/core/error.hpp"

namespace wam::train {

std::vector<Tensorf> build_pretrain_set(const geo::SampleStore& store,
                                        const geo::NormalizationStats& stats, int count,
                                        int window, Rng& rng) {
    const int margin = window / 2;
    const int n = static_cast<int>(store.lat_axis().size());
    const int m = static_cast<int>(store.lon_axis().size());
    const int lat_span = n - window + 1;
    const int lon_span = m - window + 1;
    if (lat_span <= 0 || lon_span <= 0)
        throw Error("pretrain set: region smaller than the sample window");
    if (store.dates().empty()) throw Error("pretrain set: no harmonized dates");

    std::vector<Tensorf> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const int i = margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(lat_span)));
        const int j = margin + static_cast<int>(rng.below(static_cast<std::uint64_t>(lon_span)));
        const geo::Date d = store.dates()[rng.below(store.dates().size())];
        out.push_back(store.fuse_at(i, j, d, window, stats).tensor);
    }
    return out;
}

LabelledSet build_labelled_set(const geo::SampleStore& store,
                               const geo::NormalizationStats& stats,
                               const std::vector<geo::WildfireRecord>& records, int window) {
    LabelledSet set;
    set.x.reserve(records.size());
    set.y.reserve(records.size());
    for (const geo::WildfireRecord& r : records) {
        set.x.push_back(store.fuse(r.lat, r.lon, r.date, window, stats).tensor);
        set.y.push_back(r.label);
    }
    return set;
}

Split split_random(int n, double train_fraction, Rng& rng) {
    if (n < 2) throw Error("split: need at least 2 samples");
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw Error("split: train fraction must be in (0,1)");
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    const int n_train = std::max(1, std::min(n - 1, static_cast<int>(train_fraction * n + 0.5)));
    Split split;
    split.train.assign(order.begin(), order.begin() + n_train);
    split.test.assign(order.begin() + n_train, order.end());
    return split;
}

}  // namespace wam::train
