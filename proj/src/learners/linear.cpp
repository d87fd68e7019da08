#include "fibro/error.hpp"
#include "fibro/learners.hpp"

#include <algorithm>
#include <cmath>

namespace fibro::learners {

double soft_threshold(double x, double t) {
    const double m = std::abs(x) - t;
    return m > 0.0 ? std::copysign(m, x) : 0.0;
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double prior_log_odds(const Labels& y) {
    double pos = 0.0;
    for (int v : y) pos += v;
    const double neg = static_cast<double>(y.size()) - pos;
    if (pos <= 0.0 || neg <= 0.0) return 0.0;
    return std::log(pos / neg);
}

struct Smooth {
    double loss;
    Eigen::VectorXd grad_w;
    double grad_b;
};

Smooth smooth_part(const Eigen::MatrixXd& x, const Labels& y, const Eigen::VectorXd& w, double b, bool with_grad) {
    const Eigen::VectorXd z = (x * w).array() + b;
    const auto n = static_cast<double>(y.size());
    Smooth s{mean_log_loss(z, y), {}, 0.0};
    if (with_grad) {
        Eigen::VectorXd r(z.size());
        for (Eigen::Index i = 0; i < z.size(); ++i) r(i) = sigmoid(z(i)) - y[static_cast<std::size_t>(i)];
        s.grad_w = x.transpose() * r / n;
        s.grad_b = r.sum() / n;
    }
    return s;
}

}  // namespace

double mean_log_loss(const Eigen::VectorXd& logits, const Labels& y) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < logits.size(); ++i) {
        const double z = logits(i);
        total += y[static_cast<std::size_t>(i)] == 1 ? softplus(-z) : softplus(z);
    }
    return total / static_cast<double>(logits.size());
}

LinearParams train_lasso_logistic(const Eigen::MatrixXd& x, const Labels& y, const LassoParams& params,
                                  std::vector<double>* objective) {
    if (params.lambda < 0.0 || params.step <= 0.0 || params.iters < 0)
        throw Error(ErrorKind::InvalidSpec, "lasso: lambda >= 0, step > 0, iters >= 0 required");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::ShapeMismatch, "lasso: rows vs labels");
    LinearParams m{Eigen::VectorXd::Zero(x.cols()), prior_log_odds(y)};
    auto penalty = [&](const Eigen::VectorXd& w) { return params.lambda * w.lpNorm<1>(); };

    Smooth cur = smooth_part(x, y, m.w, m.b, true);
    double obj = cur.loss + penalty(m.w);
    if (!std::isfinite(obj)) throw Error(ErrorKind::NonFiniteLoss, "lasso: initial objective not finite");
    if (objective) objective->assign(1, obj);

    double t = params.step;
    for (int it = 0; it < params.iters; ++it) {
        Eigen::VectorXd w_new;
        double b_new = 0.0;
        Smooth next;
        // Backtracking: accept once the smooth part lies under its quadratic model.
        for (int tries = 0;; ++tries) {
            w_new = (m.w - t * cur.grad_w).unaryExpr([&](double v) { return soft_threshold(v, t * params.lambda); });
            b_new = m.b - t * cur.grad_b;
            next = smooth_part(x, y, w_new, b_new, false);
            const Eigen::VectorXd dw = w_new - m.w;
            const double db = b_new - m.b;
            const double model = cur.loss + cur.grad_w.dot(dw) + cur.grad_b * db + (dw.squaredNorm() + db * db) / (2.0 * t);
            if (std::isfinite(next.loss) && next.loss <= model + 1e-15 * std::abs(model)) break;
            if (tries > 60) throw Error(ErrorKind::NonFiniteLoss, "lasso: step size collapsed");
            t *= 0.5;
        }
        const double change = std::max((w_new - m.w).cwiseAbs().maxCoeff(), std::abs(b_new - m.b));
        const double obj_new = next.loss + penalty(w_new);
        if (!std::isfinite(obj_new)) throw Error(ErrorKind::NonFiniteLoss, "lasso: objective not finite");
        m.w = std::move(w_new);
        m.b = b_new;
        obj = obj_new;
        if (objective) objective->push_back(obj);
        if (change < params.tol) break;
        cur = smooth_part(x, y, m.w, m.b, true);
    }
    return m;
}

double svm_objective(const LinearParams& m, const Eigen::MatrixXd& x, const Labels& y, double c) {
    const Eigen::VectorXd s = (x * m.w).array() + m.b;
    double hinge = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        const double yi = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
        hinge += std::max(0.0, 1.0 - yi * s(i));
    }
    return 0.5 * m.w.squaredNorm() + c * hinge;
}

LinearParams train_linear_svm(const Eigen::MatrixXd& x, const Labels& y, const SvmParams& params) {
    if (params.c <= 0.0 || params.epochs < 1) throw Error(ErrorKind::InvalidSpec, "svm: C > 0 and epochs >= 1 required");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::ShapeMismatch, "svm: rows vs labels");
    Eigen::VectorXd sign(x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i) sign(i) = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

    LinearParams m{Eigen::VectorXd::Zero(x.cols()), 0.0};
    LinearParams best = m;
    double best_obj = svm_objective(m, x, y, params.c);
    Eigen::VectorXd coef(x.rows());
    for (int t = 1; t <= params.epochs; ++t) {
        const Eigen::VectorXd margin = sign.array() * ((x * m.w).array() + m.b);
        for (Eigen::Index i = 0; i < margin.size(); ++i) coef(i) = margin(i) < 1.0 ? sign(i) : 0.0;
        const Eigen::VectorXd gw = m.w - params.c * (x.transpose() * coef);
        const double gb = -params.c * coef.sum();
        const double eta = 1.0 / t;
        m.w -= eta * gw;
        m.b -= eta * gb;
        const double obj = svm_objective(m, x, y, params.c);
        if (!std::isfinite(obj)) throw Error(ErrorKind::NonFiniteLoss, "svm: objective not finite");
        if (obj < best_obj) {
            best_obj = obj;
            best = m;
        }
    }
    return best;
}

}  // namespace fibro::learners
