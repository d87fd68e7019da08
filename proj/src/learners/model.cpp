#include "fibro/error.hpp"
#include "fibro/learners.hpp"

#include <cmath>

namespace fibro::learners {

using nlohmann::json;

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::LassoLogistic: return "lasso_logistic";
        case ModelKind::LinearSvm: return "linear_svm";
        case ModelKind::RandomForest: return "random_forest";
        case ModelKind::Gbt: return "gbt";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s) {
    for (ModelKind k : {ModelKind::LassoLogistic, ModelKind::LinearSvm, ModelKind::RandomForest, ModelKind::Gbt})
        if (to_string(k) == s) return k;
    throw Error(ErrorKind::SchemaError, "unknown model kind '" + s + "'");
}

Eigen::VectorXd Model::decision(const Eigen::MatrixXd& raw) const {
    const Eigen::MatrixXd z = normalization.apply(raw);
    switch (kind) {
        case ModelKind::LassoLogistic:
        case ModelKind::LinearSvm: {
            const auto& p = std::get<LinearParams>(params);
            return (z * p.w).array() + p.b;
        }
        case ModelKind::RandomForest: return forest_proba(std::get<ForestModel>(params), z);
        case ModelKind::Gbt: return std::get<BoostModel>(params).logits(z);
    }
    return {};
}

Eigen::VectorXd Model::predict_proba(const Eigen::MatrixXd& raw) const {
    Eigen::VectorXd d = decision(raw);
    if (kind != ModelKind::RandomForest) d = d.unaryExpr([](double v) { return sigmoid(v); });
    return d;
}

namespace {

json hyper_for(ModelKind kind, const Hyperparameters& hp) {
    const json all = to_json(hp);
    return all.at(to_string(kind));
}

}  // namespace

Model fit(ModelKind kind, const DesignMatrix& data, const Hyperparameters& hp, std::uint64_t seed) {
    data.validate(true);
    Standardized s = zscore_fit_apply(data.x);
    Model m;
    m.kind = kind;
    m.columns = data.columns;
    m.normalization = std::move(s.params);
    m.hyperparameters = hyper_for(kind, hp);
    m.seed = seed;
    switch (kind) {
        case ModelKind::LassoLogistic: m.params = train_lasso_logistic(s.x, data.y, hp.lasso); break;
        case ModelKind::LinearSvm: m.params = train_linear_svm(s.x, data.y, hp.svm); break;
        case ModelKind::RandomForest: m.params = train_random_forest(s.x, data.y, hp.forest, seed); break;
        case ModelKind::Gbt: m.params = train_gbt(s.x, data.y, hp.gbt, seed); break;
    }
    return m;
}

// ------------------------------------------------------------ serialization

namespace {

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_from(const json& j) {
    const auto v = j.get<std::vector<double>>();
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw Error(ErrorKind::SchemaError, "non-finite parameter");
        out(static_cast<Eigen::Index>(i)) = v[i];
    }
    return out;
}

json tree_json(const Tree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array();
    for (const TreeNode& n : t.nodes) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left}, {"right", right}, {"value", value}};
}

Tree tree_from(const json& j, std::size_t p) {
    const auto feature = j.at("feature").get<std::vector<int>>();
    const auto threshold = j.at("threshold").get<std::vector<double>>();
    const auto left = j.at("left").get<std::vector<int>>();
    const auto right = j.at("right").get<std::vector<int>>();
    const auto value = j.at("value").get<std::vector<double>>();
    const std::size_t n = feature.size();
    if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n || value.size() != n)
        throw Error(ErrorKind::SchemaError, "tree arrays differ in length");
    Tree t;
    for (std::size_t i = 0; i < n; ++i) {
        const TreeNode node{feature[i], threshold[i], left[i], right[i], value[i]};
        if (!std::isfinite(node.value) || !std::isfinite(node.threshold))
            throw Error(ErrorKind::SchemaError, "non-finite tree value");
        if (node.feature >= 0) {
            const auto child_ok = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(n); };
            if (static_cast<std::size_t>(node.feature) >= p || !child_ok(node.left) || !child_ok(node.right))
                throw Error(ErrorKind::SchemaError, "invalid tree node");
        }
        t.nodes.push_back(node);
    }
    return t;
}

json trees_json(const std::vector<Tree>& trees) {
    json out = json::array();
    for (const Tree& t : trees) out.push_back(tree_json(t));
    return out;
}

std::vector<Tree> trees_from(const json& j, std::size_t p) {
    std::vector<Tree> out;
    for (const json& t : j) out.push_back(tree_from(t, p));
    return out;
}

}  // namespace

json to_json(const Model& m) {
    json params;
    switch (m.kind) {
        case ModelKind::LassoLogistic:
        case ModelKind::LinearSvm: {
            const auto& p = std::get<LinearParams>(m.params);
            params = {{"weights", vec_json(p.w)}, {"intercept", p.b}};
            break;
        }
        case ModelKind::RandomForest: params = {{"trees", trees_json(std::get<ForestModel>(m.params).trees)}}; break;
        case ModelKind::Gbt: {
            const auto& b = std::get<BoostModel>(m.params);
            params = {{"prior_log_odds", b.prior_log_odds},
                      {"learning_rate", b.learning_rate},
                      {"trees", trees_json(b.trees)}};
            break;
        }
    }
    return {{"format", kModelFormat},
            {"version", kModelFormatVersion},
            {"kind", to_string(m.kind)},
            {"seed", m.seed},
            {"hyperparameters", m.hyperparameters},
            {"columns", m.columns},
            {"normalization", {{"mean", vec_json(m.normalization.mean)}, {"sd", vec_json(m.normalization.sd)}}},
            {"params", params}};
}

Model model_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kModelFormat)
            throw Error(ErrorKind::SchemaError, "not a model file");
        if (j.at("version").get<int>() != kModelFormatVersion)
            throw Error(ErrorKind::SchemaError, "unsupported model format version");
        Model m;
        m.kind = model_kind_from_string(j.at("kind").get<std::string>());
        m.seed = j.at("seed").get<std::uint64_t>();
        m.hyperparameters = j.at("hyperparameters");
        m.columns = j.at("columns").get<std::vector<std::string>>();
        m.normalization.mean = vec_from(j.at("normalization").at("mean"));
        m.normalization.sd = vec_from(j.at("normalization").at("sd"));
        const auto p = static_cast<std::size_t>(m.normalization.mean.size());
        if (static_cast<std::size_t>(m.normalization.sd.size()) != p || (!m.columns.empty() && m.columns.size() != p))
            throw Error(ErrorKind::SchemaError, "normalization length mismatch");
        const json& params = j.at("params");
        switch (m.kind) {
            case ModelKind::LassoLogistic:
            case ModelKind::LinearSvm: {
                LinearParams lp{vec_from(params.at("weights")), params.at("intercept").get<double>()};
                if (static_cast<std::size_t>(lp.w.size()) != p || !std::isfinite(lp.b))
                    throw Error(ErrorKind::SchemaError, "weight vector length mismatch");
                m.params = std::move(lp);
                break;
            }
            case ModelKind::RandomForest: m.params = ForestModel{trees_from(params.at("trees"), p)}; break;
            case ModelKind::Gbt:
                m.params = BoostModel{params.at("prior_log_odds").get<double>(),
                                      params.at("learning_rate").get<double>(), trees_from(params.at("trees"), p)};
                break;
        }
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("model file: ") + e.what());
    }
}

json to_json(const Hyperparameters& hp) {
    return {{"lasso_logistic",
             {{"lambda", hp.lasso.lambda}, {"iters", hp.lasso.iters}, {"step", hp.lasso.step}, {"tol", hp.lasso.tol}}},
            {"linear_svm", {{"c", hp.svm.c}, {"epochs", hp.svm.epochs}}},
            {"random_forest",
             {{"trees", hp.forest.trees}, {"max_depth", hp.forest.max_depth}, {"mtry", hp.forest.mtry}}},
            {"gbt", {{"trees", hp.gbt.trees}, {"depth", hp.gbt.depth}, {"learning_rate", hp.gbt.learning_rate}}}};
}

Hyperparameters hyperparameters_from_json(const json& j, Hyperparameters hp) {
    try {
        auto read = [&](const char* section, const char* key, auto& field) {
            if (j.contains(section) && j.at(section).contains(key))
                field = j.at(section).at(key).get<std::decay_t<decltype(field)>>();
        };
        read("lasso_logistic", "lambda", hp.lasso.lambda);
        read("lasso_logistic", "iters", hp.lasso.iters);
        read("lasso_logistic", "step", hp.lasso.step);
        read("lasso_logistic", "tol", hp.lasso.tol);
        read("linear_svm", "c", hp.svm.c);
        read("linear_svm", "epochs", hp.svm.epochs);
        read("random_forest", "trees", hp.forest.trees);
        read("random_forest", "max_depth", hp.forest.max_depth);
        read("random_forest", "mtry", hp.forest.mtry);
        read("gbt", "trees", hp.gbt.trees);
        read("gbt", "depth", hp.gbt.depth);
        read("gbt", "learning_rate", hp.gbt.learning_rate);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("hyperparameters: ") + e.what());
    }
    const bool ok = hp.lasso.lambda >= 0 && hp.lasso.iters >= 0 && hp.lasso.step > 0 && hp.lasso.tol >= 0 &&
                    hp.svm.c > 0 && hp.svm.epochs >= 1 && hp.forest.trees >= 1 && hp.forest.max_depth >= 0 &&
                    hp.forest.mtry >= 0 && hp.gbt.trees >= 0 && hp.gbt.depth >= 0 && hp.gbt.learning_rate >= 0;
    if (!ok) throw Error(ErrorKind::SchemaError, "hyperparameter out of range");
    return hp;
}

}  // namespace fibro::learners
