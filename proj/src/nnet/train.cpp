#include "fibro/error.hpp"
#include "fibro/nnet.hpp"
#include "fibro/random.hpp"

#include <cmath>
#include <numeric>

namespace fibro::nnet {

using nlohmann::json;

void TrainConfig::validate() const {
    const bool ok = batch_size >= 1 && epochs >= 1 && lr_max >= 0.0 && lr_min >= 0.0 && lr_min <= lr_max &&
                    momentum >= 0.0 && momentum < 1.0 && weight_decay >= 0.0 && mixup_alpha > 0.0 &&
                    grad_clip_norm >= 0.0;
    if (!ok) throw Error(ErrorKind::InvalidSpec, "invalid training configuration");
}

json to_json(const TrainConfig& c) {
    return {{"batch_size", c.batch_size}, {"lr_max", c.lr_max},          {"lr_min", c.lr_min},
            {"epochs", c.epochs},         {"momentum", c.momentum},      {"weight_decay", c.weight_decay},
            {"mixup_alpha", c.mixup_alpha}, {"grad_clip_norm", c.grad_clip_norm}, {"seed", c.seed}};
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr_max = j.value("lr_max", c.lr_max);
        c.lr_min = j.value("lr_min", c.lr_min);
        c.epochs = j.value("epochs", c.epochs);
        c.momentum = j.value("momentum", c.momentum);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.mixup_alpha = j.value("mixup_alpha", c.mixup_alpha);
        c.grad_clip_norm = j.value("grad_clip_norm", c.grad_clip_norm);
        c.seed = j.value("seed", c.seed);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

json tensor_json(const Tensor& t) { return {{"shape", t.shape()}, {"data", t.values()}}; }

Tensor tensor_from(const json& j) {
    Tensor t(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
    if (!t.all_finite()) throw Error(ErrorKind::SchemaError, "non-finite checkpoint tensor");
    return t;
}

json tensors_json(const std::vector<Tensor>& ts) {
    json out = json::array();
    for (const Tensor& t : ts) out.push_back(tensor_json(t));
    return out;
}

std::vector<Tensor> tensors_from(const json& j) {
    std::vector<Tensor> out;
    for (const json& t : j) out.push_back(tensor_from(t));
    return out;
}

double standard_error(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
}

}  // namespace

json to_json(const Checkpoint& c) {
    json curve = json::array();
    for (const EpochStats& e : c.curve)
        curve.push_back(
            {{"epoch", e.epoch}, {"lr", e.lr}, {"loss", e.loss}, {"loss_se", e.loss_se}, {"accuracy", e.accuracy}});
    return {{"format", kCheckpointFormat}, {"version", kCheckpointFormatVersion},
            {"spec", to_json(c.spec)},     {"config", to_json(c.config)},
            {"curve", curve},              {"params", tensors_json(c.params)},
            {"velocity", tensors_json(c.velocity)}};
}

Checkpoint checkpoint_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) throw Error(ErrorKind::SchemaError, "not a checkpoint");
        if (j.at("version").get<int>() != kCheckpointFormatVersion)
            throw Error(ErrorKind::SchemaError, "unsupported checkpoint version");
        Checkpoint c;
        c.spec = net_spec_from_json(j.at("spec"));
        c.config = train_config_from_json(j.at("config"));
        for (const json& e : j.at("curve"))
            c.curve.push_back({e.at("epoch").get<int>(), e.at("lr").get<double>(), e.at("loss").get<double>(),
                               e.at("loss_se").get<double>(), e.at("accuracy").get<double>()});
        c.params = tensors_from(j.at("params"));
        c.velocity = tensors_from(j.at("velocity"));
        Network check(c.spec, c.params);
        if (c.velocity.size() != c.params.size()) throw Error(ErrorKind::SchemaError, "velocity count mismatch");
        for (std::size_t k = 0; k < c.params.size(); ++k)
            if (c.velocity[k].shape() != c.params[k].shape()) throw Error(ErrorKind::SchemaError, "velocity shape mismatch");
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("checkpoint: ") + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::SchemaError) throw;
        throw Error(ErrorKind::SchemaError, std::string("checkpoint: ") + e.what());
    }
}

Checkpoint train(const std::vector<Sample>& data, const NetSpec& spec, const TrainConfig& cfg,
                 const EpochCallback& on_epoch, const Checkpoint* resume) {
    cfg.validate();
    if (data.size() < 2) throw Error(ErrorKind::TooFewSamples, "training needs at least two samples");
    bool pos = false, neg = false;
    const Shape image_shape{spec.channels, spec.side, spec.side};
    for (const Sample& s : data) {
        if (s.image.shape() != image_shape)
            throw Error(ErrorKind::ShapeMismatch, "sample " + shape_string(s.image.shape()) + " vs net input " +
                                                      shape_string(image_shape));
        if (s.label < 0 || s.label >= spec.classes) throw Error(ErrorKind::InvalidSpec, "label out of range");
        (s.label == 1 ? pos : neg) = true;
    }
    if (!pos || !neg) throw Error(ErrorKind::SingleClass, "training data must contain both classes");

    Checkpoint ck;
    if (resume) {
        if (!(resume->spec == spec) || to_json(resume->config) != to_json(cfg))
            throw Error(ErrorKind::InvalidSpec, "resume checkpoint was trained with a different spec or config");
        ck = *resume;
    } else {
        ck.spec = spec;
        ck.config = cfg;
        ck.params = Network(spec, derive_seed(cfg.seed, 0)).params();
        for (const Tensor& p : ck.params) ck.velocity.emplace_back(p.shape());
    }

    const std::size_t pixels = shape_size(image_shape);
    const auto classes = static_cast<std::size_t>(spec.classes);
    for (int epoch = static_cast<int>(ck.curve.size()); epoch < cfg.epochs; ++epoch) {
        Network net(spec, std::move(ck.params));
        Rng rng(derive_seed(cfg.seed, 1 + static_cast<std::uint64_t>(epoch)));
        std::vector<std::size_t> order(data.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, rng);
        const double lr = cosine_lr(epoch, cfg.epochs, cfg.lr_max, cfg.lr_min);

        double loss_sum = 0.0, correct = 0.0;
        std::vector<double> batch_losses;
        std::vector<Tensor> grads;
        for (std::size_t start = 0, batch = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size), ++batch) {
            const std::size_t b = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
            const double lambda = beta(rng, cfg.mixup_alpha, cfg.mixup_alpha);
            std::vector<std::size_t> partner(b);
            std::iota(partner.begin(), partner.end(), std::size_t{0});
            shuffle(partner, rng);

            Tensor x({static_cast<int>(b), spec.channels, spec.side, spec.side});
            Tensor y({static_cast<int>(b), spec.classes});
            std::vector<int> dominant(b);
            for (std::size_t i = 0; i < b; ++i) {
                const Sample& s1 = data[order[start + i]];
                const Sample& s2 = data[order[start + partner[i]]];
                for (std::size_t k = 0; k < pixels; ++k)
                    x[i * pixels + k] = lambda * s1.image[k] + (1.0 - lambda) * s2.image[k];
                y[i * classes + static_cast<std::size_t>(s1.label)] += lambda;
                y[i * classes + static_cast<std::size_t>(s2.label)] += 1.0 - lambda;
                dominant[i] = lambda >= 0.5 ? s1.label : s2.label;
            }

            const Forward f = net.forward(x);
            const double loss = cross_entropy(f.logits(), y);
            if (!std::isfinite(loss))
                throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " +
                                                          std::to_string(batch) + ": loss is not finite");
            Tensor d = softmax(f.logits());
            for (std::size_t i = 0; i < b; ++i) {
                std::size_t best = 0;
                for (std::size_t c = 1; c < classes; ++c)
                    if (f.logits()[i * classes + c] > f.logits()[i * classes + best]) best = c;
                correct += static_cast<int>(best) == dominant[i];
            }
            for (std::size_t k = 0; k < d.size(); ++k) d[k] = (d[k] - y[k]) / static_cast<double>(b);
            grads = net.backward(f, d).param_grads;
            clip_grad_norm(grads, cfg.grad_clip_norm);
            sgd_step(net.params(), grads, ck.velocity, lr, cfg.momentum, cfg.weight_decay);
            for (const Tensor& p : net.params())
                if (!p.all_finite())
                    throw Error(ErrorKind::NonFiniteLoss, "epoch " + std::to_string(epoch) + ", batch " +
                                                              std::to_string(batch) + ": parameters diverged");
            loss_sum += loss * static_cast<double>(b);
            batch_losses.push_back(loss);
        }
        ck.params = std::move(net.params());
        const auto n = static_cast<double>(data.size());
        ck.curve.push_back({epoch, lr, loss_sum / n, standard_error(batch_losses), correct / n});
        if (on_epoch) on_epoch(ck);
    }
    return ck;
}

std::vector<double> predict_proba(const Network& net, const std::vector<Tensor>& images) {
    std::vector<double> out;
    out.reserve(images.size());
    const NetSpec& s = net.spec();
    for (const Tensor& img : images) {
        const Forward f = net.forward(img.reshaped({1, s.channels, s.side, s.side}));
        out.push_back(softmax(f.logits())[1]);
    }
    return out;
}

}  // namespace fibro::nnet
