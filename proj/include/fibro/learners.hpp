#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace fibro::learners {

using Labels = std::vector<int>;
using Indices = std::vector<std::size_t>;

/// Rows are cases, columns are features.
struct DesignMatrix {
    Eigen::MatrixXd x;
    Labels y;
    std::vector<std::string> columns;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(x.rows()); }
    /// Throws ShapeMismatch, NonFiniteData, or SingleClass/TooFewSamples when require_both_classes is set.
    void validate(bool require_both_classes) const;
    DesignMatrix subset(const Indices& rows) const;
};

void require_both_classes(const Labels& y);

// -------------------------------------------------------------- normalization

/// Per-column z-score transform; sd is the population sd. Columns whose sd
/// falls below 1e-12 map to 0.
struct Normalization {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd;

    static Normalization identity(Eigen::Index p);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

Normalization zscore_fit(const Eigen::MatrixXd& x);

struct Standardized {
    Eigen::MatrixXd x;
    Normalization params;
};

Standardized zscore_fit_apply(const Eigen::MatrixXd& x);

// ------------------------------------------------------------- linear models

double soft_threshold(double x, double t);
double sigmoid(double z);
/// Mean logistic loss of probabilities-by-logit against 0/1 labels.
double mean_log_loss(const Eigen::VectorXd& logits, const Labels& y);

struct LassoParams {
    double lambda = 0.01;
    int iters = 2000;
    /// Initial proximal step; halved by backtracking until the quadratic upper bound holds.
    double step = 1.0;
    double tol = 1e-8;
};

struct SvmParams {
    double c = 0.01;
    int epochs = 2000;
};

struct LinearParams {
    Eigen::VectorXd w;
    double b = 0.0;
};

/// Proximal gradient descent on mean log loss + lambda * |w|_1, intercept
/// unpenalized. Starts from w = 0 and b = prior log-odds. When `objective` is
/// non-null it receives the objective after every accepted step (index 0 is
/// the starting point). Throws NonFiniteLoss if the objective stops being finite.
LinearParams train_lasso_logistic(const Eigen::MatrixXd& x, const Labels& y, const LassoParams& params,
                                  std::vector<double>* objective = nullptr);

/// Full-batch subgradient descent on 0.5 |w|^2 + C sum hinge(y_i (w.x_i + b))
/// with labels mapped to +-1 and step 1/t; returns the lowest-objective iterate.
LinearParams train_linear_svm(const Eigen::MatrixXd& x, const Labels& y, const SvmParams& params);

double svm_objective(const LinearParams& m, const Eigen::MatrixXd& x, const Labels& y, double c);

// -------------------------------------------------------------------- trees

double gini(const std::vector<double>& class_counts);

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

/// Rows with x[feature] <= threshold go left.
struct Tree {
    std::vector<TreeNode> nodes;

    double predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
    int depth() const;
};

struct ForestParams {
    int trees = 100;
    int max_depth = 6;
    /// 0 selects floor(sqrt(p)).
    int mtry = 0;
};

struct GbtParams {
    int trees = 200;
    int depth = 2;
    double learning_rate = 0.1;
};

struct ForestModel {
    std::vector<Tree> trees;
};

struct BoostModel {
    double prior_log_odds = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;

    Eigen::VectorXd logits(const Eigen::MatrixXd& x) const;
};

/// Gini CART grown on a bootstrap sample of `rows`, trying `mtry` sampled
/// features per node. Leaves hold the positive-class frequency. Split ties go
/// to the lowest feature index, then the lowest threshold.
Tree train_classification_tree(const Eigen::MatrixXd& x, const Labels& y, const Indices& rows, int max_depth,
                               int mtry, std::uint64_t seed);

ForestModel train_random_forest(const Eigen::MatrixXd& x, const Labels& y, const ForestParams& params,
                                std::uint64_t seed);
Eigen::VectorXd forest_proba(const ForestModel& f, const Eigen::MatrixXd& x);

/// Gradient-boosted regression trees on logistic loss with Newton leaf values.
/// When `loss` is non-null it receives the mean training log loss before the
/// first round and after every round.
BoostModel train_gbt(const Eigen::MatrixXd& x, const Labels& y, const GbtParams& params, std::uint64_t seed,
                     std::vector<double>* loss = nullptr);

// ------------------------------------------------------------------ metrics

/// Mann-Whitney AUC with half credit for ties. Throws SingleClass.
double auc(const std::vector<double>& scores, const Labels& labels);

struct Confusion {
    std::int64_t tn = 0, fp = 0, fn = 0, tp = 0;
    std::int64_t total() const noexcept { return tn + fp + fn + tp; }
};

/// Predicted label is 1 when the score is >= threshold.
Confusion confusion(const std::vector<double>& scores, const Labels& labels, double threshold = 0.5);
double accuracy(const Confusion& c);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

/// One point per distinct score (descending), starting at (0, 0).
std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const Labels& labels);

struct Metrics {
    double accuracy = 0.0;
    double auc = 0.0;
    Confusion confusion;
    std::vector<RocPoint> roc;
};

Metrics evaluate(const std::vector<double>& scores, const Labels& labels);

// -------------------------------------------------------------------- split

struct Split {
    Indices test;
    std::vector<Indices> folds;
};

/// Per class: seeded shuffle, round(test_frac * n_class) to the test set, the
/// rest dealt round-robin into k folds (the deal continues from one class to
/// the next). Index lists are sorted ascending. Throws TooFewSamples when a
/// class has fewer than k members left after the holdout.
Split stratified_holdout_then_kfold(const Labels& y, double test_frac, int k, std::uint64_t seed);

// ------------------------------------------------------------------- models

enum class ModelKind { LassoLogistic, LinearSvm, RandomForest, Gbt };

std::string to_string(ModelKind kind);
/// Row label used in result tables.
std::string display_name(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct Hyperparameters {
    LassoParams lasso;
    SvmParams svm;
    ForestParams forest;
    GbtParams gbt;
};

/// A trained classifier together with the training-time normalization; all
/// prediction entry points take raw (unnormalized) features.
struct Model {
    ModelKind kind = ModelKind::LassoLogistic;
    std::vector<std::string> columns;
    Normalization normalization;
    nlohmann::json hyperparameters;
    std::uint64_t seed = 0;
    std::variant<LinearParams, ForestModel, BoostModel> params;

    /// Decision score: logit for LASSO/GBT, margin for SVM, vote fraction for the forest.
    Eigen::VectorXd decision(const Eigen::MatrixXd& raw) const;
    /// Probability (SVM: logistic of the margin).
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& raw) const;
};

/// z-score fit on `data`, then the selected trainer.
Model fit(ModelKind kind, const DesignMatrix& data, const Hyperparameters& hp, std::uint64_t seed);

inline constexpr const char* kModelFormat = "fibro-model";
inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const Model& m);
/// Throws SchemaError on malformed input.
Model model_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Hyperparameters& hp);
/// Missing keys keep their defaults; throws SchemaError on invalid values.
Hyperparameters hyperparameters_from_json(const nlohmann::json& j, Hyperparameters base = {});

// -------------------------------------------------------------------- study

struct FoldResult {
    int fold = 0;
    std::size_t train_count = 0;
    Metrics metrics;
};

struct EvalReport {
    ModelKind kind = ModelKind::LassoLogistic;
    std::vector<FoldResult> folds;
    double cv_accuracy = 0.0;  // mean over folds
    double cv_auc = 0.0;       // mean over folds
    Metrics holdout;
    std::uint64_t split_seed = 0;
};

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EvalReport& r);

struct StudyConfig {
    double test_frac = 0.10;
    int folds = 5;
    std::uint64_t seed = 42;
    std::vector<ModelKind> models{ModelKind::LassoLogistic, ModelKind::LinearSvm, ModelKind::RandomForest,
                                  ModelKind::Gbt};
    Hyperparameters hyper;
    int jobs = 1;
};

struct StudyResult {
    Split split;
    std::vector<EvalReport> reports;
    /// Per model, fitted on every non-holdout case.
    std::vector<Model> final_models;
    /// Accuracy of predicting every cross-validation case positive.
    double all_positive_accuracy = 0.0;
};

/// Stratified holdout, k-fold CV on the remainder, and a final fit on the
/// remainder scored on the holdout, for each configured model.
StudyResult run_study(const DesignMatrix& data, const StudyConfig& cfg);

/// Markdown table with Model / CV Accuracy / CV AUC / Holdout Accuracy /
/// Holdout AUC columns (percentages, two decimals); best values bolded.
std::string markdown_table(const std::vector<EvalReport>& reports);

}  // namespace fibro::learners
