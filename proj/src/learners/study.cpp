#include "fibro/error.hpp"
#include "fibro/learners.hpp"
#include "fibro/parallel.hpp"
#include "fibro/random.hpp"

#include <algorithm>
#include <cstdio>

namespace fibro::learners {

using nlohmann::json;

json to_json(const Metrics& m) {
    json roc = json::array();
    for (const RocPoint& p : m.roc) roc.push_back({p.fpr, p.tpr});
    return {{"accuracy", m.accuracy},
            {"auc", m.auc},
            {"confusion", {{"tn", m.confusion.tn}, {"fp", m.confusion.fp}, {"fn", m.confusion.fn}, {"tp", m.confusion.tp}}},
            {"roc", roc}};
}

json to_json(const EvalReport& r) {
    json folds = json::array();
    for (const FoldResult& f : r.folds)
        folds.push_back({{"fold", f.fold}, {"train_count", f.train_count}, {"metrics", to_json(f.metrics)}});
    return {{"model", to_string(r.kind)},
            {"split_seed", r.split_seed},
            {"cv", {{"accuracy", r.cv_accuracy}, {"auc", r.cv_auc}, {"folds", folds}}},
            {"holdout", to_json(r.holdout)}};
}

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Metrics score(const Model& m, const DesignMatrix& eval) { return evaluate(to_std(m.predict_proba(eval.x)), eval.y); }

}  // namespace

StudyResult run_study(const DesignMatrix& data, const StudyConfig& cfg) {
    data.validate(true);
    if (cfg.models.empty()) throw Error(ErrorKind::InvalidSpec, "no models configured");
    StudyResult out;
    out.split = stratified_holdout_then_kfold(data.y, cfg.test_frac, cfg.folds, cfg.seed);
    const Split& split = out.split;
    const auto k = static_cast<std::size_t>(cfg.folds);

    Indices pool;
    for (const Indices& f : split.folds) pool.insert(pool.end(), f.begin(), f.end());
    std::sort(pool.begin(), pool.end());
    const DesignMatrix pool_data = data.subset(pool);
    double pool_pos = 0.0;
    for (int v : pool_data.y) pool_pos += v;
    out.all_positive_accuracy = pool_pos / static_cast<double>(pool.size());

    // One task per (model, fold) plus one final fit per model; merged in task order.
    const std::size_t per_model = k + 1;
    const std::size_t tasks = cfg.models.size() * per_model;
    std::vector<Metrics> metrics(tasks);
    std::vector<std::size_t> train_counts(tasks, 0);
    std::vector<Model> finals(cfg.models.size());
    parallel_for(tasks, cfg.jobs, [&](std::size_t t) {
        const std::size_t mi = t / per_model, fi = t % per_model;
        const ModelKind kind = cfg.models[mi];
        const std::uint64_t seed = derive_seed(cfg.seed, 1000 + t);
        if (fi == k) {
            finals[mi] = fit(kind, pool_data, cfg.hyper, seed);
            if (!split.test.empty()) metrics[t] = score(finals[mi], data.subset(split.test));
            train_counts[t] = pool.size();
            return;
        }
        Indices train;
        for (std::size_t g = 0; g < k; ++g)
            if (g != fi) train.insert(train.end(), split.folds[g].begin(), split.folds[g].end());
        std::sort(train.begin(), train.end());
        const Model m = fit(kind, data.subset(train), cfg.hyper, seed);
        metrics[t] = score(m, data.subset(split.folds[fi]));
        train_counts[t] = train.size();
    });

    for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
        EvalReport r;
        r.kind = cfg.models[mi];
        r.split_seed = cfg.seed;
        for (std::size_t fi = 0; fi < k; ++fi) {
            const std::size_t t = mi * per_model + fi;
            r.folds.push_back({static_cast<int>(fi), train_counts[t], metrics[t]});
            r.cv_accuracy += metrics[t].accuracy / static_cast<double>(k);
            r.cv_auc += metrics[t].auc / static_cast<double>(k);
        }
        r.holdout = metrics[mi * per_model + k];
        out.reports.push_back(std::move(r));
    }
    out.final_models = std::move(finals);
    return out;
}

std::string display_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::LassoLogistic: return "LASSO";
        case ModelKind::LinearSvm: return "SVM";
        case ModelKind::RandomForest: return "Random Forest";
        case ModelKind::Gbt: return "Gradient Boosting";
    }
    return "?";
}

namespace {

std::string percent(double v, bool bold) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
    return bold ? "**" + std::string(buf) + "**" : std::string(buf);
}

}  // namespace

std::string markdown_table(const std::vector<EvalReport>& reports) {
    using Getter = double (*)(const EvalReport&);
    const Getter columns[] = {
        [](const EvalReport& r) { return r.cv_accuracy; },
        [](const EvalReport& r) { return r.cv_auc; },
        [](const EvalReport& r) { return r.holdout.accuracy; },
        [](const EvalReport& r) { return r.holdout.auc; },
    };
    std::string out = "| Model | CV Accuracy (%) | CV AUC (%) | Holdout Accuracy (%) | Holdout AUC (%) |\n";
    out += "|---|---|---|---|---|\n";
    for (const EvalReport& r : reports) {
        out += "| " + display_name(r.kind) + " |";
        for (Getter g : columns) {
            double best = 0.0;
            for (const EvalReport& o : reports) best = std::max(best, g(o));
            // Compare the printed values so ties bold every row that shows the maximum.
            out += " " + percent(g(r), percent(g(r), false) == percent(best, false)) + " |";
        }
        out += "\n";
    }
    return out;
}

}  // namespace fibro::learners
