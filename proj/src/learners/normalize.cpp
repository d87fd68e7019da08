#include "fibro/error.hpp"
#include "fibro/learners.hpp"

#include <cmath>

namespace fibro::learners {

namespace {
constexpr double kSdGuard = 1e-12;
}

void require_both_classes(const Labels& y) {
    bool pos = false, neg = false;
    for (int v : y) {
        if (v != 0 && v != 1) throw Error(ErrorKind::SchemaError, "labels must be 0 or 1");
        (v == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) throw Error(ErrorKind::SingleClass, "both classes must be present");
}

void DesignMatrix::validate(bool both_classes) const {
    if (static_cast<std::size_t>(x.rows()) != y.size())
        throw Error(ErrorKind::ShapeMismatch, "row count differs from label count");
    if (!columns.empty() && static_cast<std::size_t>(x.cols()) != columns.size())
        throw Error(ErrorKind::ShapeMismatch, "column count differs from column names");
    if (!x.allFinite()) throw Error(ErrorKind::NonFiniteData, "design matrix has non-finite entries");
    if (both_classes) {
        if (y.size() < 2) throw Error(ErrorKind::TooFewSamples, "need at least two rows");
        require_both_classes(y);
    }
}

DesignMatrix DesignMatrix::subset(const Indices& rows) const {
    DesignMatrix out;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    out.y.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        out.x.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
        out.y.push_back(y[rows[r]]);
    }
    out.columns = columns;
    return out;
}

Normalization Normalization::identity(Eigen::Index p) {
    return {Eigen::VectorXd::Zero(p), Eigen::VectorXd::Ones(p)};
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& x) const {
    if (x.cols() != mean.size()) throw Error(ErrorKind::ShapeMismatch, "feature count differs from normalization");
    Eigen::MatrixXd out(x.rows(), x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        if (sd(c) < kSdGuard)
            out.col(c).setZero();
        else
            out.col(c) = (x.col(c).array() - mean(c)) / sd(c);
    }
    return out;
}

Normalization zscore_fit(const Eigen::MatrixXd& x) {
    if (x.rows() < 2) throw Error(ErrorKind::TooFewSamples, "z-score needs at least two rows");
    const auto n = static_cast<double>(x.rows());
    Normalization out{Eigen::VectorXd(x.cols()), Eigen::VectorXd(x.cols())};
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double m = x.col(c).sum() / n;
        out.mean(c) = m;
        out.sd(c) = std::sqrt((x.col(c).array() - m).square().sum() / n);
    }
    return out;
}

Standardized zscore_fit_apply(const Eigen::MatrixXd& x) {
    Normalization params = zscore_fit(x);
    Eigen::MatrixXd z = params.apply(x);
    return {std::move(z), std::move(params)};
}

}  // namespace fibro::learners
