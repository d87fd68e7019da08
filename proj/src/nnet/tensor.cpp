#include "fibro/error.hpp"
#include "fibro/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace fibro::nnet {

std::size_t shape_size(const Shape& s) {
    std::size_t n = 1;
    for (int d : s) {
        if (d < 0) throw Error(ErrorKind::ShapeMismatch, "negative extent in shape " + shape_string(s));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string shape_string(const Shape& s) {
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
    if (shape_.empty() || shape_.size() > 4) throw Error(ErrorKind::ShapeMismatch, "tensors have 1 to 4 axes");
    values_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> values) : shape_(std::move(shape)), values_(std::move(values)) {
    if (shape_.empty() || shape_.size() > 4) throw Error(ErrorKind::ShapeMismatch, "tensors have 1 to 4 axes");
    if (values_.size() != shape_size(shape_))
        throw Error(ErrorKind::ShapeMismatch, "value count does not match shape " + shape_string(shape_));
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), values_); }

double cosine_lr(double t, double total, double lr_max, double lr_min) {
    if (!(total > 0.0) || t < 0.0 || t > total) throw Error(ErrorKind::InvalidSpec, "cosine_lr needs 0 <= t <= T, T > 0");
    return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * t / total));
}

Mixed mixup(const Tensor& x1, const Tensor& y1, const Tensor& x2, const Tensor& y2, double lambda) {
    if (x1.shape() != x2.shape() || y1.shape() != y2.shape())
        throw Error(ErrorKind::ShapeMismatch, "mixup operands differ in shape");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw Error(ErrorKind::InvalidSpec, "mixup lambda must lie in [0,1]");
    auto blend = [lambda](const Tensor& a, const Tensor& b) {
        Tensor out(a.shape());
        for (std::size_t i = 0; i < a.size(); ++i) out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
        return out;
    };
    return {blend(x1, x2), blend(y1, y2)};
}

void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, std::vector<Tensor>& velocity, double lr,
              double momentum, double weight_decay) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw Error(ErrorKind::ShapeMismatch, "sgd_step: parameter, gradient and velocity lists differ");
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& p = params[k];
        Tensor& v = velocity[k];
        const Tensor& g = grads[k];
        if (p.shape() != g.shape() || p.shape() != v.shape())
            throw Error(ErrorKind::ShapeMismatch, "sgd_step: shape mismatch at parameter " + std::to_string(k));
        for (std::size_t i = 0; i < p.size(); ++i) {
            v[i] = momentum * v[i] + (g[i] + weight_decay * p[i]);
            p[i] -= lr * v[i];
        }
    }
}

double clip_grad_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor& g : grads)
        for (double v : g.values()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double scale = max_norm / norm;
        for (Tensor& g : grads)
            for (double& v : g.values()) v *= scale;
    }
    return norm;
}

int majority_vote(const std::vector<int>& slice_predictions) {
    if (slice_predictions.empty()) throw Error(ErrorKind::EmptyList, "majority vote over no slices");
    std::size_t pos = 0;
    for (int p : slice_predictions) pos += p == 1;
    return 2 * pos >= slice_predictions.size() ? 1 : 0;
}

Tensor softmax(const Tensor& logits) {
    if (logits.shape().size() != 2) throw Error(ErrorKind::ShapeMismatch, "softmax expects N x K logits");
    const int n = logits.dim(0), k = logits.dim(1);
    Tensor out(logits.shape());
    for (int i = 0; i < n; ++i) {
        const double* row = logits.data() + static_cast<std::size_t>(i) * k;
        double* o = out.data() + static_cast<std::size_t>(i) * k;
        const double mx = *std::max_element(row, row + k);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += o[j] = std::exp(row[j] - mx);
        for (int j = 0; j < k; ++j) o[j] /= sum;
    }
    return out;
}

double cross_entropy(const Tensor& logits, const Tensor& targets) {
    if (logits.shape() != targets.shape() || logits.shape().size() != 2)
        throw Error(ErrorKind::ShapeMismatch, "cross_entropy: logits and targets must both be N x K");
    const int n = logits.dim(0), k = logits.dim(1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* row = logits.data() + static_cast<std::size_t>(i) * k;
        const double* y = targets.data() + static_cast<std::size_t>(i) * k;
        const double mx = *std::max_element(row, row + k);
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
        const double log_z = mx + std::log(sum);
        for (int j = 0; j < k; ++j) total -= y[j] * (row[j] - log_z);
    }
    return total / n;
}

}  // namespace fibro::nnet
