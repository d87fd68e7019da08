#include "fibro/error.hpp"
#include "fibro/learners.hpp"
#include "fibro/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fibro::learners {

double gini(const std::vector<double>& class_counts) {
    double n = 0.0;
    for (double c : class_counts) {
        if (c < 0.0) throw Error(ErrorKind::InvalidSpec, "gini: negative count");
        n += c;
    }
    if (n <= 0.0) throw Error(ErrorKind::InvalidSpec, "gini: empty node");
    double s = 1.0;
    for (double c : class_counts) s -= (c / n) * (c / n);
    return s;
}

double Tree::predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(at)];
        at = row(n.feature) <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int best = 0;
    // Children are always appended after their parent.
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        best = std::max(best, d[i]);
        if (nodes[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
        }
    }
    return best;
}

namespace {

constexpr double kMinGain = 1e-12;

struct Candidate {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Scans midpoints between consecutive distinct values of each feature.
// `Acc` accumulates per-row statistics; gain(left, right, parent) scores a split.
template <typename Acc, typename Gain>
Candidate best_split(const Eigen::MatrixXd& x, const Indices& rows, const std::vector<int>& features, Acc row_stat,
                     Gain gain) {
    using Stat = decltype(row_stat(std::size_t{}));
    Stat total{};
    for (std::size_t r : rows) total += row_stat(r);
    Candidate best;
    std::vector<std::size_t> order(rows);
    for (int f : features) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = x(static_cast<Eigen::Index>(a), f), vb = x(static_cast<Eigen::Index>(b), f);
            return va != vb ? va < vb : a < b;
        });
        Stat left{};
        for (std::size_t k = 0; k + 1 < order.size(); ++k) {
            left += row_stat(order[k]);
            const double v = x(static_cast<Eigen::Index>(order[k]), f);
            const double next = x(static_cast<Eigen::Index>(order[k + 1]), f);
            if (v == next) continue;
            const double g = gain(left, total - left, total);
            if (g > best.gain) {
                best = {f, 0.5 * (v + next), g};
            }
        }
    }
    return best;
}

struct ClassStat {
    double n = 0.0, pos = 0.0;
    ClassStat& operator+=(const ClassStat& o) {
        n += o.n;
        pos += o.pos;
        return *this;
    }
    friend ClassStat operator-(ClassStat a, const ClassStat& b) { return {a.n - b.n, a.pos - b.pos}; }
    double impurity() const { return gini({n - pos, pos}); }
};

struct ResidualStat {
    double n = 0.0, sum = 0.0, hess = 0.0;
    ResidualStat& operator+=(const ResidualStat& o) {
        n += o.n;
        sum += o.sum;
        hess += o.hess;
        return *this;
    }
    friend ResidualStat operator-(ResidualStat a, const ResidualStat& b) {
        return {a.n - b.n, a.sum - b.sum, a.hess - b.hess};
    }
};

void partition(const Eigen::MatrixXd& x, const Indices& rows, const Candidate& c, Indices& left, Indices& right) {
    for (std::size_t r : rows) (x(static_cast<Eigen::Index>(r), c.feature) <= c.threshold ? left : right).push_back(r);
}

class ClassificationGrower {
public:
    ClassificationGrower(const Eigen::MatrixXd& x, const Labels& y, int max_depth, int mtry, Rng& rng)
        : x_(x), y_(y), max_depth_(max_depth), mtry_(mtry), rng_(rng) {}

    int grow(Tree& tree, const Indices& rows, int depth) {
        ClassStat s;
        for (std::size_t r : rows) s += stat(r);
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, s.n > 0 ? s.pos / s.n : 0.0});
        if (depth >= max_depth_ || s.pos == 0.0 || s.pos == s.n) return id;

        const Candidate c = best_split(x_, rows, sample_features(), [&](std::size_t r) { return stat(r); },
                                       [](const ClassStat& l, const ClassStat& r, const ClassStat& p) {
                                           return p.impurity() - (l.n * l.impurity() + r.n * r.impurity()) / p.n;
                                       });
        if (c.feature < 0 || c.gain <= kMinGain) return id;
        Indices left, right;
        partition(x_, rows, c, left, right);
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = c.feature;
        node.threshold = c.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

private:
    ClassStat stat(std::size_t r) const { return {1.0, static_cast<double>(y_[r])}; }

    std::vector<int> sample_features() {
        std::vector<int> all(static_cast<std::size_t>(x_.cols()));
        std::iota(all.begin(), all.end(), 0);
        const auto k = static_cast<std::size_t>(std::min<Eigen::Index>(mtry_, x_.cols()));
        // Partial Fisher-Yates: the first k entries are a uniform sample.
        for (std::size_t i = 0; i < k; ++i) {
            const auto j = static_cast<std::size_t>(uniform_int(rng_, static_cast<std::int64_t>(i),
                                                                static_cast<std::int64_t>(all.size()) - 1));
            std::swap(all[i], all[j]);
        }
        all.resize(k);
        std::sort(all.begin(), all.end());
        return all;
    }

    const Eigen::MatrixXd& x_;
    const Labels& y_;
    int max_depth_;
    int mtry_;
    Rng& rng_;
};

class RegressionGrower {
public:
    RegressionGrower(const Eigen::MatrixXd& x, const Eigen::VectorXd& residual, const Eigen::VectorXd& hessian,
                     int max_depth)
        : x_(x), r_(residual), h_(hessian), max_depth_(max_depth), features_(static_cast<std::size_t>(x.cols())) {
        std::iota(features_.begin(), features_.end(), 0);
    }

    int grow(Tree& tree, const Indices& rows, int depth) {
        ResidualStat s;
        for (std::size_t r : rows) s += stat(r);
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({-1, 0.0, -1, -1, s.sum / std::max(s.hess, 1e-12)});
        if (depth >= max_depth_ || rows.size() < 2) return id;

        const Candidate c = best_split(x_, rows, features_, [&](std::size_t r) { return stat(r); },
                                       [](const ResidualStat& l, const ResidualStat& r, const ResidualStat& p) {
                                           return l.sum * l.sum / l.n + r.sum * r.sum / r.n - p.sum * p.sum / p.n;
                                       });
        if (c.feature < 0 || c.gain <= kMinGain) return id;
        Indices left, right;
        partition(x_, rows, c, left, right);
        const int l = grow(tree, left, depth + 1);
        const int r = grow(tree, right, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
        node.feature = c.feature;
        node.threshold = c.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

private:
    ResidualStat stat(std::size_t i) const {
        const auto e = static_cast<Eigen::Index>(i);
        return {1.0, r_(e), h_(e)};
    }

    const Eigen::MatrixXd& x_;
    const Eigen::VectorXd& r_;
    const Eigen::VectorXd& h_;
    int max_depth_;
    std::vector<int> features_;
};

void check_shapes(const Eigen::MatrixXd& x, const Labels& y) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::ShapeMismatch, "rows vs labels");
    if (y.empty()) throw Error(ErrorKind::TooFewSamples, "no training rows");
}

}  // namespace

Tree train_classification_tree(const Eigen::MatrixXd& x, const Labels& y, const Indices& rows, int max_depth,
                               int mtry, std::uint64_t seed) {
    check_shapes(x, y);
    if (max_depth < 0 || mtry < 1) throw Error(ErrorKind::InvalidSpec, "tree: max_depth >= 0 and mtry >= 1 required");
    Rng rng(seed);
    Indices sample(rows.size());
    for (auto& s : sample)
        s = rows[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(rows.size()) - 1))];
    Tree tree;
    ClassificationGrower(x, y, max_depth, mtry, rng).grow(tree, sample, 0);
    return tree;
}

ForestModel train_random_forest(const Eigen::MatrixXd& x, const Labels& y, const ForestParams& params,
                                std::uint64_t seed) {
    check_shapes(x, y);
    if (params.trees < 1) throw Error(ErrorKind::InvalidSpec, "forest: trees >= 1 required");
    const int mtry = params.mtry > 0 ? params.mtry
                                     : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(x.cols())))));
    Indices all(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    ForestModel f;
    for (int t = 0; t < params.trees; ++t)
        f.trees.push_back(train_classification_tree(x, y, all, params.max_depth, mtry, derive_seed(seed, static_cast<std::uint64_t>(t))));
    return f;
}

Eigen::VectorXd forest_proba(const ForestModel& f, const Eigen::MatrixXd& x) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (const Tree& t : f.trees) out(i) += t.predict(x.row(i));
        out(i) /= static_cast<double>(f.trees.size());
    }
    return out;
}

Eigen::VectorXd BoostModel::logits(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), prior_log_odds);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (const Tree& t : trees) out(i) += learning_rate * t.predict(x.row(i));
    return out;
}

BoostModel train_gbt(const Eigen::MatrixXd& x, const Labels& y, const GbtParams& params, std::uint64_t /*seed*/,
                     std::vector<double>* loss) {
    check_shapes(x, y);
    if (params.trees < 0 || params.depth < 0 || params.learning_rate < 0.0)
        throw Error(ErrorKind::InvalidSpec, "gbt: trees, depth and learning rate must be nonnegative");
    double pos = 0.0;
    for (int v : y) pos += v;
    const double neg = static_cast<double>(y.size()) - pos;
    BoostModel m;
    m.learning_rate = params.learning_rate;
    m.prior_log_odds = pos > 0.0 && neg > 0.0 ? std::log(pos / neg) : 0.0;

    const auto n = static_cast<Eigen::Index>(y.size());
    Eigen::VectorXd f = Eigen::VectorXd::Constant(n, m.prior_log_odds);
    if (loss) loss->assign(1, mean_log_loss(f, y));
    Indices all(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    Eigen::VectorXd r(n), h(n);
    for (int round = 0; round < params.trees; ++round) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const double p = sigmoid(f(i));
            r(i) = y[static_cast<std::size_t>(i)] - p;
            h(i) = p * (1.0 - p);
        }
        Tree tree;
        RegressionGrower(x, r, h, params.depth).grow(tree, all, 0);
        for (Eigen::Index i = 0; i < n; ++i) f(i) += m.learning_rate * tree.predict(x.row(i));
        m.trees.push_back(std::move(tree));
        if (loss) {
            const double l = mean_log_loss(f, y);
            if (!std::isfinite(l)) throw Error(ErrorKind::NonFiniteLoss, "gbt: training loss not finite");
            loss->push_back(l);
        }
    }
    return m;
}

}  // namespace fibro::learners
