#include "layers.hpp"

#include "fibro/error.hpp"
#include "fibro/random.hpp"

#include <algorithm>
#include <cmath>

namespace fibro::nnet {

using nlohmann::json;

std::string to_string(LayerType t) {
    switch (t) {
        case LayerType::Conv: return "conv";
        case LayerType::Relu: return "relu";
        case LayerType::MaxPool: return "maxpool";
        case LayerType::GlobalAvgPool: return "global_avg_pool";
        case LayerType::Dense: return "dense";
        case LayerType::AddSkip: return "add_skip";
        case LayerType::ConcatSkip: return "concat_skip";
    }
    return "unknown";
}

LayerType layer_type_from_string(const std::string& s) {
    for (LayerType t : {LayerType::Conv, LayerType::Relu, LayerType::MaxPool, LayerType::GlobalAvgPool, LayerType::Dense,
                        LayerType::AddSkip, LayerType::ConcatSkip})
        if (to_string(t) == s) return t;
    throw Error(ErrorKind::SchemaError, "unknown layer type '" + s + "'");
}

std::vector<Shape> NetSpec::output_shapes() const {
    if (channels < 1 || side < 1 || classes < 2) throw Error(ErrorKind::InvalidSpec, "net needs channels, side >= 1 and classes >= 2");
    if (layers.empty()) throw Error(ErrorKind::InvalidSpec, "net has no layers");
    std::vector<Shape> out;
    Shape cur{channels, side, side};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerSpec& l = layers[i];
        const std::string where = "layer " + std::to_string(i) + " (" + to_string(l.type) + "): ";
        auto need_spatial = [&] {
            if (cur.size() != 3) throw Error(ErrorKind::ShapeMismatch, where + "needs a C x H x W input");
        };
        auto skip_source = [&]() -> const Shape& {
            if (l.from < 0 || static_cast<std::size_t>(l.from) >= i)
                throw Error(ErrorKind::InvalidSpec, where + "skip must reference an earlier layer");
            return out[static_cast<std::size_t>(l.from)];
        };
        switch (l.type) {
            case LayerType::Conv: {
                need_spatial();
                if (l.in != cur[0]) throw Error(ErrorKind::ShapeMismatch, where + "expects " + std::to_string(l.in) +
                                                                              " channels, got " + std::to_string(cur[0]));
                if (l.out < 1 || l.kernel < 1 || l.stride < 1 || l.pad < 0)
                    throw Error(ErrorKind::InvalidSpec, where + "invalid conv parameters");
                const int h = (cur[1] + 2 * l.pad - l.kernel) / l.stride + 1;
                const int w = (cur[2] + 2 * l.pad - l.kernel) / l.stride + 1;
                if (cur[1] + 2 * l.pad < l.kernel || cur[2] + 2 * l.pad < l.kernel)
                    throw Error(ErrorKind::ShapeMismatch, where + "kernel larger than input");
                cur = {l.out, h, w};
                break;
            }
            case LayerType::Relu: break;
            case LayerType::MaxPool:
                need_spatial();
                if (cur[1] < 2 || cur[2] < 2) throw Error(ErrorKind::ShapeMismatch, where + "input smaller than 2x2");
                cur = {cur[0], cur[1] / 2, cur[2] / 2};
                break;
            case LayerType::GlobalAvgPool:
                need_spatial();
                cur = {cur[0]};
                break;
            case LayerType::Dense:
                if (cur.size() != 1 || l.in != cur[0]) throw Error(ErrorKind::ShapeMismatch, where + "input width mismatch");
                if (l.out < 1) throw Error(ErrorKind::InvalidSpec, where + "dense needs out >= 1");
                cur = {l.out};
                break;
            case LayerType::AddSkip:
                if (skip_source() != cur) throw Error(ErrorKind::ShapeMismatch, where + "skip shape differs");
                break;
            case LayerType::ConcatSkip: {
                const Shape& s = skip_source();
                need_spatial();
                if (s.size() != 3 || s[1] != cur[1] || s[2] != cur[2])
                    throw Error(ErrorKind::ShapeMismatch, where + "skip spatial size differs");
                cur = {cur[0] + s[0], cur[1], cur[2]};
                break;
            }
        }
        out.push_back(cur);
    }
    if (cur != Shape{classes}) throw Error(ErrorKind::ShapeMismatch, "final layer must output " + std::to_string(classes) + " logits");
    return out;
}

int NetSpec::feature_layer() const {
    const std::vector<Shape> shapes = output_shapes();
    for (int i = static_cast<int>(shapes.size()) - 1; i >= 0; --i)
        if (shapes[static_cast<std::size_t>(i)].size() == 3) return i;
    throw Error(ErrorKind::InvalidSpec, "net has no spatial layer");
}

namespace {

LayerSpec conv(int in, int out) { return {LayerType::Conv, in, out, 3, 1, 1, -1}; }
LayerSpec relu() { return {LayerType::Relu}; }
LayerSpec pool() { return {LayerType::MaxPool}; }
LayerSpec gap() { return {LayerType::GlobalAvgPool}; }
LayerSpec dense(int in, int out) { return {LayerType::Dense, in, out}; }
LayerSpec add_from(int from) { return {LayerType::AddSkip, 0, 0, 0, 1, 0, from}; }
LayerSpec concat_from(int from) { return {LayerType::ConcatSkip, 0, 0, 0, 1, 0, from}; }

}  // namespace

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"tiny_plain", "tiny_res", "tiny_dense"};
    return names;
}

NetSpec preset(const std::string& name, int side, int channels, int classes) {
    NetSpec s{name, channels, side, classes, {}};
    if (name == "tiny_plain") {
        s.layers = {conv(channels, 8), relu(), pool(),  conv(8, 16), relu(), pool(),          conv(16, 16),
                    relu(),            pool(), conv(16, 16), relu(), gap(),  dense(16, classes)};
    } else if (name == "tiny_res") {
        s.layers = {conv(channels, 8), relu(),      pool(),  conv(8, 16),  relu(), pool(), conv(16, 16), relu(),
                    conv(16, 16),      add_from(5), relu(),  pool(),       conv(16, 16), relu(), gap(),
                    dense(16, classes)};
    } else if (name == "tiny_dense") {
        s.layers = {conv(channels, 8), relu(), pool(),        conv(8, 8),   relu(),       concat_from(2),
                    conv(16, 8),       relu(), concat_from(5), pool(),      conv(24, 16), relu(),
                    conv(16, 16),      relu(), gap(),         dense(16, classes)};
    } else {
        throw Error(ErrorKind::InvalidSpec, "unknown preset '" + name + "'");
    }
    s.output_shapes();
    return s;
}

json to_json(const NetSpec& s) {
    json layers = json::array();
    for (const LayerSpec& l : s.layers) {
        json j{{"type", to_string(l.type)}};
        if (l.type == LayerType::Conv)
            j.update({{"in", l.in}, {"out", l.out}, {"kernel", l.kernel}, {"stride", l.stride}, {"pad", l.pad}});
        if (l.type == LayerType::Dense) j.update({{"in", l.in}, {"out", l.out}});
        if (l.type == LayerType::AddSkip || l.type == LayerType::ConcatSkip) j["from"] = l.from;
        layers.push_back(j);
    }
    return {{"name", s.name}, {"channels", s.channels}, {"side", s.side}, {"classes", s.classes}, {"layers", layers}};
}

NetSpec net_spec_from_json(const json& j) {
    try {
        NetSpec s;
        s.name = j.at("name").get<std::string>();
        s.channels = j.at("channels").get<int>();
        s.side = j.at("side").get<int>();
        s.classes = j.at("classes").get<int>();
        for (const json& l : j.at("layers")) {
            LayerSpec spec;
            spec.type = layer_type_from_string(l.at("type").get<std::string>());
            spec.in = l.value("in", 0);
            spec.out = l.value("out", 0);
            spec.kernel = l.value("kernel", 0);
            spec.stride = l.value("stride", 1);
            spec.pad = l.value("pad", 0);
            spec.from = l.value("from", -1);
            s.layers.push_back(spec);
        }
        s.output_shapes();
        return s;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("net spec: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::SchemaError, std::string("net spec: ") + e.what());
    }
}

// ------------------------------------------------------------------ Network

void Network::index_params() {
    param_index_.clear();
    int next = 0;
    for (const LayerSpec& l : spec_.layers) {
        if (l.type == LayerType::Conv || l.type == LayerType::Dense) {
            param_index_.push_back(next);
            next += 2;
        } else {
            param_index_.push_back(-1);
        }
    }
}

Network::Network(NetSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
    spec_.output_shapes();
    index_params();
    Rng rng(seed);
    for (const LayerSpec& l : spec_.layers) {
        if (l.type != LayerType::Conv && l.type != LayerType::Dense) continue;
        const Shape ws = l.type == LayerType::Conv ? Shape{l.out, l.in, l.kernel, l.kernel} : Shape{l.out, l.in};
        const double fan_in = static_cast<double>(shape_size(ws) / static_cast<std::size_t>(l.out));
        Tensor w(ws);
        for (double& v : w.values()) v = normal(rng, 0.0, std::sqrt(2.0 / fan_in));
        params_.push_back(std::move(w));
        params_.push_back(Tensor({l.out}));
    }
}

Network::Network(NetSpec spec, std::vector<Tensor> params) : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.output_shapes();
    index_params();
    std::size_t k = 0;
    for (const LayerSpec& l : spec_.layers) {
        if (l.type != LayerType::Conv && l.type != LayerType::Dense) continue;
        const Shape ws = l.type == LayerType::Conv ? Shape{l.out, l.in, l.kernel, l.kernel} : Shape{l.out, l.in};
        if (params_.size() < k + 2 || params_[k].shape() != ws ||
            params_[k + 1].shape() != Shape{l.out})
            throw Error(ErrorKind::ShapeMismatch, "parameter tensors do not match the net spec");
        k += 2;
    }
    if (k != params_.size()) throw Error(ErrorKind::ShapeMismatch, "extra parameter tensors");
}

Forward Network::forward(const Tensor& x) const {
    const Shape want{spec_.channels, spec_.side, spec_.side};
    if (x.shape().size() != 4 || Shape(x.shape().begin() + 1, x.shape().end()) != want)
        throw Error(ErrorKind::ShapeMismatch, "input " + shape_string(x.shape()) + " does not match net input N x " +
                                                  shape_string(want));
    const int n = x.dim(0);
    Forward f;
    f.acts.reserve(spec_.layers.size() + 1);
    f.acts.push_back(x);
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const LayerSpec& l = spec_.layers[i];
        const Tensor& in = f.acts.back();
        Tensor out;
        switch (l.type) {
            case LayerType::Conv: {
                const auto p = static_cast<std::size_t>(param_index_[i]);
                out = conv2d_forward(in, params_[p], params_[p + 1], l.stride, l.pad);
                break;
            }
            case LayerType::Relu:
                out = in;
                for (double& v : out.values()) v = std::max(v, 0.0);
                break;
            case LayerType::MaxPool: out = detail::maxpool2_forward(in); break;
            case LayerType::GlobalAvgPool: {
                const int c = in.dim(1), hw = in.dim(2) * in.dim(3);
                out = Tensor({n, c});
                for (int b = 0; b < n; ++b)
                    for (int ch = 0; ch < c; ++ch) {
                        const double* src = in.data() + (static_cast<std::size_t>(b) * c + ch) * hw;
                        double s = 0.0;
                        for (int k = 0; k < hw; ++k) s += src[k];
                        out[static_cast<std::size_t>(b) * c + ch] = s / hw;
                    }
                break;
            }
            case LayerType::Dense: {
                const auto p = static_cast<std::size_t>(param_index_[i]);
                const Tensor& w = params_[p];
                const Tensor& bias = params_[p + 1];
                out = Tensor({n, l.out});
                for (int b = 0; b < n; ++b)
                    for (int o = 0; o < l.out; ++o) {
                        double s = bias[static_cast<std::size_t>(o)];
                        for (int k = 0; k < l.in; ++k)
                            s += w[static_cast<std::size_t>(o) * l.in + k] * in[static_cast<std::size_t>(b) * l.in + k];
                        out[static_cast<std::size_t>(b) * l.out + o] = s;
                    }
                break;
            }
            case LayerType::AddSkip: {
                out = in;
                const Tensor& skip = f.acts[static_cast<std::size_t>(l.from) + 1];
                for (std::size_t k = 0; k < out.size(); ++k) out[k] += skip[k];
                break;
            }
            case LayerType::ConcatSkip: {
                const Tensor& skip = f.acts[static_cast<std::size_t>(l.from) + 1];
                const int c1 = in.dim(1), c2 = skip.dim(1), hw = in.dim(2) * in.dim(3);
                out = Tensor({n, c1 + c2, in.dim(2), in.dim(3)});
                for (int b = 0; b < n; ++b) {
                    double* dst = out.data() + static_cast<std::size_t>(b) * (c1 + c2) * hw;
                    std::copy_n(in.data() + static_cast<std::size_t>(b) * c1 * hw, c1 * hw, dst);
                    std::copy_n(skip.data() + static_cast<std::size_t>(b) * c2 * hw, c2 * hw, dst + c1 * hw);
                }
                break;
            }
        }
        f.acts.push_back(std::move(out));
    }
    return f;
}

Backward Network::backward(const Forward& f, const Tensor& dlogits) const {
    if (dlogits.shape() != f.logits().shape()) throw Error(ErrorKind::ShapeMismatch, "dlogits shape differs from logits");
    Backward g;
    for (const Tensor& p : params_) g.param_grads.emplace_back(p.shape());
    for (const Tensor& a : f.acts) g.act_grads.emplace_back(a.shape());
    g.act_grads.back() = dlogits;
    const int n = dlogits.dim(0);

    for (std::size_t ii = spec_.layers.size(); ii-- > 0;) {
        const LayerSpec& l = spec_.layers[ii];
        const Tensor& x = f.acts[ii];
        const Tensor& dy = g.act_grads[ii + 1];
        Tensor& dx = g.act_grads[ii];
        switch (l.type) {
            case LayerType::Conv: {
                const auto p = static_cast<std::size_t>(param_index_[ii]);
                detail::conv2d_backward(x, params_[p], dy, l.stride, l.pad, g.param_grads[p], g.param_grads[p + 1],
                                        ii > 0 ? &dx : nullptr);
                break;
            }
            case LayerType::Relu:
                for (std::size_t k = 0; k < x.size(); ++k)
                    if (x[k] > 0.0) dx[k] += dy[k];
                break;
            case LayerType::MaxPool: detail::maxpool2_backward(x, dy, dx); break;
            case LayerType::GlobalAvgPool: {
                const int c = x.dim(1), hw = x.dim(2) * x.dim(3);
                for (int b = 0; b < n; ++b)
                    for (int ch = 0; ch < c; ++ch) {
                        const double v = dy[static_cast<std::size_t>(b) * c + ch] / hw;
                        double* dst = dx.data() + (static_cast<std::size_t>(b) * c + ch) * hw;
                        for (int k = 0; k < hw; ++k) dst[k] += v;
                    }
                break;
            }
            case LayerType::Dense: {
                const auto p = static_cast<std::size_t>(param_index_[ii]);
                const Tensor& w = params_[p];
                Tensor& dw = g.param_grads[p];
                Tensor& db = g.param_grads[p + 1];
                for (int b = 0; b < n; ++b)
                    for (int o = 0; o < l.out; ++o) {
                        const double d = dy[static_cast<std::size_t>(b) * l.out + o];
                        db[static_cast<std::size_t>(o)] += d;
                        for (int k = 0; k < l.in; ++k) {
                            dw[static_cast<std::size_t>(o) * l.in + k] += d * x[static_cast<std::size_t>(b) * l.in + k];
                            dx[static_cast<std::size_t>(b) * l.in + k] += d * w[static_cast<std::size_t>(o) * l.in + k];
                        }
                    }
                break;
            }
            case LayerType::AddSkip: {
                Tensor& dskip = g.act_grads[static_cast<std::size_t>(l.from) + 1];
                for (std::size_t k = 0; k < dy.size(); ++k) {
                    dx[k] += dy[k];
                    dskip[k] += dy[k];
                }
                break;
            }
            case LayerType::ConcatSkip: {
                Tensor& dskip = g.act_grads[static_cast<std::size_t>(l.from) + 1];
                const int c1 = x.dim(1), c2 = dskip.dim(1), hw = x.dim(2) * x.dim(3);
                for (int b = 0; b < n; ++b) {
                    const double* src = dy.data() + static_cast<std::size_t>(b) * (c1 + c2) * hw;
                    double* d1 = dx.data() + static_cast<std::size_t>(b) * c1 * hw;
                    double* d2 = dskip.data() + static_cast<std::size_t>(b) * c2 * hw;
                    for (int k = 0; k < c1 * hw; ++k) d1[k] += src[k];
                    for (int k = 0; k < c2 * hw; ++k) d2[k] += src[c1 * hw + k];
                }
                break;
            }
        }
    }
    return g;
}

double Network::loss_and_grads(const Tensor& x, const Tensor& targets, std::vector<Tensor>* grads) const {
    const Forward f = forward(x);
    const double loss = cross_entropy(f.logits(), targets);
    if (grads) {
        Tensor d = softmax(f.logits());
        const double inv_n = 1.0 / d.dim(0);
        for (std::size_t k = 0; k < d.size(); ++k) d[k] = (d[k] - targets[k]) * inv_n;
        *grads = backward(f, d).param_grads;
    }
    return loss;
}

}  // namespace fibro::nnet
