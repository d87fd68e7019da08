#include "fibro/error.hpp"
#include "fibro/learners.hpp"
#include "fibro/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fibro::learners {

namespace {

void check_pairs(const std::vector<double>& scores, const Labels& labels) {
    if (scores.size() != labels.size()) throw Error(ErrorKind::ShapeMismatch, "scores vs labels");
    if (scores.empty()) throw Error(ErrorKind::EmptyList, "no scores");
    for (double s : scores)
        if (!std::isfinite(s)) throw Error(ErrorKind::NonFiniteData, "non-finite score");
}

std::vector<std::size_t> order_by_score(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    return order;
}

}  // namespace

double auc(const std::vector<double>& scores, const Labels& labels) {
    check_pairs(scores, labels);
    require_both_classes(labels);
    const std::vector<std::size_t> order = order_by_score(scores);
    // Sum of positive ranks with tied groups sharing their mean rank; ranks
    // are doubled so every value stays an exact integer.
    double pos = 0.0, rank2_sum = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double mean_rank2 = static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k)
            if (labels[order[k]] == 1) {
                pos += 1.0;
                rank2_sum += mean_rank2;
            }
        i = j;
    }
    const double neg = static_cast<double>(labels.size()) - pos;
    return (rank2_sum - pos * (pos + 1.0)) / (2.0 * pos * neg);
}

Confusion confusion(const std::vector<double>& scores, const Labels& labels, double threshold) {
    check_pairs(scores, labels);
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] == 1;
        (truth ? (pred ? c.tp : c.fn) : (pred ? c.fp : c.tn)) += 1;
    }
    return c;
}

double accuracy(const Confusion& c) {
    return c.total() == 0 ? 0.0 : static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const Labels& labels) {
    check_pairs(scores, labels);
    require_both_classes(labels);
    std::vector<std::size_t> order = order_by_score(scores);
    std::reverse(order.begin(), order.end());
    double pos = 0.0;
    for (int l : labels) pos += l;
    const double neg = static_cast<double>(labels.size()) - pos;
    std::vector<RocPoint> out{{0.0, 0.0}};
    double tp = 0.0, fp = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            (labels[order[j]] == 1 ? tp : fp) += 1.0;
            ++j;
        }
        out.push_back({fp / neg, tp / pos});
        i = j;
    }
    return out;
}

Metrics evaluate(const std::vector<double>& scores, const Labels& labels) {
    Metrics m;
    m.confusion = confusion(scores, labels);
    m.accuracy = accuracy(m.confusion);
    m.auc = auc(scores, labels);
    m.roc = roc_curve(scores, labels);
    return m;
}

Split stratified_holdout_then_kfold(const Labels& y, double test_frac, int k, std::uint64_t seed) {
    if (k < 1) throw Error(ErrorKind::InvalidSpec, "k must be at least 1");
    if (!(test_frac >= 0.0 && test_frac < 1.0)) throw Error(ErrorKind::InvalidSpec, "test_frac must lie in [0, 1)");
    Split s;
    s.folds.resize(static_cast<std::size_t>(k));
    std::size_t deal = 0;
    for (int cls = 0; cls <= 1; ++cls) {
        Indices members;
        for (std::size_t i = 0; i < y.size(); ++i) {
            if (y[i] != 0 && y[i] != 1) throw Error(ErrorKind::SchemaError, "labels must be 0 or 1");
            if (y[i] == cls) members.push_back(i);
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(cls)));
        shuffle(members, rng);
        const auto n_test = static_cast<std::size_t>(std::llround(test_frac * static_cast<double>(members.size())));
        if (members.size() < n_test + static_cast<std::size_t>(k))
            throw Error(ErrorKind::TooFewSamples, "class " + std::to_string(cls) + " has " +
                                                      std::to_string(members.size()) + " members; need " +
                                                      std::to_string(n_test + static_cast<std::size_t>(k)));
        s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
        for (std::size_t i = n_test; i < members.size(); ++i) s.folds[deal++ % s.folds.size()].push_back(members[i]);
    }
    std::sort(s.test.begin(), s.test.end());
    for (auto& f : s.folds) std::sort(f.begin(), f.end());
    return s;
}

}  // namespace fibro::learners
