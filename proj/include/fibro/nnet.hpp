#pragma once

#include "fibro/volume_io.hpp"

#include <json.hpp>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace fibro::nnet {

using Shape = std::vector<int>;

/// Dense row-major array of up to 4 axes (batch, channel, height, width).
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);

    const Shape& shape() const noexcept { return shape_; }
    int dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return values_.size(); }

    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }
    std::vector<double>& values() noexcept { return values_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }

    double& at(int n, int c, int h, int w) noexcept { return values_[offset(n, c, h, w)]; }
    double at(int n, int c, int h, int w) const noexcept { return values_[offset(n, c, h, w)]; }

    bool all_finite() const noexcept;
    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::size_t offset(int n, int c, int h, int w) const noexcept {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    Shape shape_;
    std::vector<double> values_;
};

std::size_t shape_size(const Shape& s);
std::string shape_string(const Shape& s);

// --------------------------------------------------------------- primitives

/// Cross-correlation with zero padding. x: N x C x H x W, w: O x C x k x k, b: O.
Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

/// Row-wise softmax of N x K logits.
Tensor softmax(const Tensor& logits);

/// Mean over the batch of -sum_k y_k log softmax_k.
double cross_entropy(const Tensor& logits, const Tensor& targets);

/// lr_min + (lr_max - lr_min) (1 + cos(pi t / T)) / 2.
double cosine_lr(double t, double total, double lr_max, double lr_min);

struct Mixed {
    Tensor x;
    Tensor y;
};

/// lambda x1 + (1 - lambda) x2, and the same for the labels.
Mixed mixup(const Tensor& x1, const Tensor& y1, const Tensor& x2, const Tensor& y2, double lambda);

/// L2 weight decay is added to the gradient before the momentum update:
/// g' = g + wd p; v = momentum v + g'; p -= lr v.
void sgd_step(std::vector<Tensor>& params, const std::vector<Tensor>& grads, std::vector<Tensor>& velocity, double lr,
              double momentum, double weight_decay);

/// Rescales all gradients together so their joint L2 norm is at most
/// `max_norm`; returns the norm before rescaling. max_norm <= 0 leaves them untouched.
double clip_grad_norm(std::vector<Tensor>& grads, double max_norm);

/// Most frequent label; an exact tie is positive. Throws EmptyList.
int majority_vote(const std::vector<int>& slice_predictions);

// ------------------------------------------------------------------ network

enum class LayerType { Conv, Relu, MaxPool, GlobalAvgPool, Dense, AddSkip, ConcatSkip };

std::string to_string(LayerType t);
LayerType layer_type_from_string(const std::string& s);

/// `from` (skip layers only) names an earlier layer whose output joins the
/// current stream: summed for AddSkip, appended as extra channels for ConcatSkip.
struct LayerSpec {
    LayerType type = LayerType::Relu;
    int in = 0;
    int out = 0;
    int kernel = 0;
    int stride = 1;
    int pad = 0;
    int from = -1;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct NetSpec {
    std::string name;
    int channels = 1;
    int side = 64;
    int classes = 2;
    std::vector<LayerSpec> layers;

    /// Output shape (without batch axis) of every layer. Throws ShapeMismatch or InvalidSpec.
    std::vector<Shape> output_shapes() const;
    /// Index of the last layer whose output is spatial (the Grad-CAM target).
    int feature_layer() const;

    friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

/// tiny_plain, tiny_res (additive skips) or tiny_dense (concatenative skips).
NetSpec preset(const std::string& name, int side = 64, int channels = 1, int classes = 2);
const std::vector<std::string>& preset_names();

nlohmann::json to_json(const NetSpec& s);
NetSpec net_spec_from_json(const nlohmann::json& j);

struct Forward {
    /// acts[0] is the input; acts[i + 1] is the output of layer i.
    std::vector<Tensor> acts;
    const Tensor& logits() const { return acts.back(); }
};

struct Backward {
    std::vector<Tensor> param_grads;
    /// Same indexing as Forward::acts.
    std::vector<Tensor> act_grads;
};

class Network {
public:
    Network() = default;
    /// He-normal weights (sd = sqrt(2 / fan_in)) and zero biases.
    Network(NetSpec spec, std::uint64_t seed);
    Network(NetSpec spec, std::vector<Tensor> params);

    const NetSpec& spec() const noexcept { return spec_; }
    std::vector<Tensor>& params() noexcept { return params_; }
    const std::vector<Tensor>& params() const noexcept { return params_; }
    /// Index into params() of the weight tensor of layer i (bias follows), or -1.
    int param_index(std::size_t layer) const { return param_index_.at(layer); }

    Forward forward(const Tensor& x) const;
    /// Backpropagates d(objective)/d(logits) through a cached forward pass.
    Backward backward(const Forward& f, const Tensor& dlogits) const;

    /// Mean soft-label cross-entropy and its parameter gradients.
    double loss_and_grads(const Tensor& x, const Tensor& targets, std::vector<Tensor>* grads) const;

private:
    void index_params();

    NetSpec spec_;
    std::vector<Tensor> params_;
    std::vector<int> param_index_;
};

// ----------------------------------------------------------------- training

struct TrainConfig {
    int batch_size = 2;
    double lr_max = 0.01;
    double lr_min = 0.0;
    int epochs = 100;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double mixup_alpha = 0.2;
    /// Joint gradient L2 norm cap per batch; 0 disables it.
    double grad_clip_norm = 1.0;
    std::uint64_t seed = 0;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct Sample {
    Tensor image;  // C x side x side
    int label = 0;
};

struct EpochStats {
    int epoch = 0;
    double lr = 0.0;
    double loss = 0.0;
    /// Standard error of the per-batch losses behind `loss`.
    double loss_se = 0.0;
    double accuracy = 0.0;
};

struct Checkpoint {
    NetSpec spec;
    std::vector<Tensor> params;
    std::vector<Tensor> velocity;
    std::vector<EpochStats> curve;
    TrainConfig config;

    Network network() const { return Network(spec, params); }
};

inline constexpr const char* kCheckpointFormat = "fibro-checkpoint";
inline constexpr int kCheckpointFormatVersion = 1;

nlohmann::json to_json(const Checkpoint& c);
/// Throws SchemaError.
Checkpoint checkpoint_from_json(const nlohmann::json& j);

/// Called after every epoch with the checkpoint so far.
using EpochCallback = std::function<void(const Checkpoint&)>;

/// Per epoch: seeded shuffle; per batch: lambda ~ Beta(alpha, alpha) and a
/// seeded partner permutation for MixUp, then SGD at cosine_lr(epoch).
/// Passing `resume` continues a partially trained checkpoint with the same
/// configuration; the result is identical to an uninterrupted run.
Checkpoint train(const std::vector<Sample>& data, const NetSpec& spec, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {}, const Checkpoint* resume = nullptr);

/// Softmax probability of class 1 for each image.
std::vector<double> predict_proba(const Network& net, const std::vector<Tensor>& images);

// ------------------------------------------------------------------- slices

/// Maps one axial slice's ROI bounding box onto a side x side grid.
struct SliceTransform {
    int z = 0;
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;  // inclusive bounding box
    int side = 64;

    /// Bilinear resampling (half-pixel centres) of any per-voxel field on slice z.
    std::vector<double> resample(const std::vector<double>& slice_values, int nx) const;
    /// Source voxel (x, y) nearest to the centre of output pixel (row, col).
    std::pair<int, int> source_voxel(int row, int col) const;
};

struct SliceSet {
    std::vector<Tensor> images;  // 1 x side x side, values in [0, 1]
    std::vector<SliceTransform> transforms;

    std::vector<int> indices() const;
};

/// The k axial slices with the largest ROI area (ties to the lower index), each
/// cropped to its ROI bounding box, min-max normalized over the box (constant
/// box -> zeros), zeroed outside the ROI and bilinearly resized. Throws EmptyMask.
SliceSet extract_slices(const Volume& v, const Mask& m, int k = 5, int side = 64);

// ------------------------------------------------------------------ Grad-CAM

/// ReLU(sum_k alpha_k A_k) over the feature layer, alpha_k the spatial mean of
/// d(logit target)/dA_k, bilinearly upsampled to the input side and divided by
/// its maximum. `raw_max` receives the maximum before normalization.
Heatmap gradcam(const Network& net, const Tensor& image, int target_class, double* raw_max = nullptr);

/// Fraction of the heatmap mass among the top-decile pixels that lies inside `region`.
double top_decile_mass_inside(const Heatmap& h, const std::vector<std::uint8_t>& region);

}  // namespace fibro::nnet
