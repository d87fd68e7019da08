#include "fibro/error.hpp"
#include "fibro/nnet.hpp"

#include <algorithm>
#include <cmath>

namespace fibro::nnet {

namespace {

// Half-pixel-centre source coordinate of output index i when mapping n source
// samples onto `side` outputs, clamped to the valid range.
double source_coord(int i, int n, int side) {
    const double s = (i + 0.5) * static_cast<double>(n) / side - 0.5;
    return std::clamp(s, 0.0, static_cast<double>(n - 1));
}

}  // namespace

std::vector<double> SliceTransform::resample(const std::vector<double>& slice_values, int nx) const {
    const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    std::vector<double> out(static_cast<std::size_t>(side) * side);
    for (int r = 0; r < side; ++r) {
        const double sy = source_coord(r, bh, side);
        const int ya = static_cast<int>(std::floor(sy));
        const int yb = std::min(ya + 1, bh - 1);
        const double fy = sy - ya;
        for (int c = 0; c < side; ++c) {
            const double sx = source_coord(c, bw, side);
            const int xa = static_cast<int>(std::floor(sx));
            const int xb = std::min(xa + 1, bw - 1);
            const double fx = sx - xa;
            auto v = [&](int yy, int xx) {
                return slice_values[static_cast<std::size_t>(y0 + yy) * static_cast<std::size_t>(nx) +
                                    static_cast<std::size_t>(x0 + xx)];
            };
            out[static_cast<std::size_t>(r) * side + c] = (1 - fy) * ((1 - fx) * v(ya, xa) + fx * v(ya, xb)) +
                                                          fy * ((1 - fx) * v(yb, xa) + fx * v(yb, xb));
        }
    }
    return out;
}

std::pair<int, int> SliceTransform::source_voxel(int row, int col) const {
    const int bw = x1 - x0 + 1, bh = y1 - y0 + 1;
    const int x = x0 + static_cast<int>(std::floor(source_coord(col, bw, side) + 0.5));
    const int y = y0 + static_cast<int>(std::floor(source_coord(row, bh, side) + 0.5));
    return {x, y};
}

std::vector<int> SliceSet::indices() const {
    std::vector<int> out;
    for (const SliceTransform& t : transforms) out.push_back(t.z);
    return out;
}

SliceSet extract_slices(const Volume& v, const Mask& m, int k, int side) {
    require_aligned(v, m);
    require_nonempty(m);
    if (k < 1 || side < 1) throw Error(ErrorKind::InvalidSpec, "extract_slices needs k >= 1 and side >= 1");
    const Dims d = v.dims();

    std::vector<std::pair<std::size_t, int>> ranked;  // (area, z)
    for (int z = 0; z < d.nz; ++z) {
        std::size_t area = 0;
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) area += m.at(x, y, z);
        if (area > 0) ranked.emplace_back(area, z);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(static_cast<std::size_t>(k));

    SliceSet out;
    for (const auto& [area, z] : ranked) {
        SliceTransform t{z, d.nx, d.ny, -1, -1, side};
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x)
                if (m.at(x, y, z)) {
                    t.x0 = std::min(t.x0, x);
                    t.y0 = std::min(t.y0, y);
                    t.x1 = std::max(t.x1, x);
                    t.y1 = std::max(t.y1, y);
                }
        double lo = v.at(t.x0, t.y0, z), hi = lo;
        for (int y = t.y0; y <= t.y1; ++y)
            for (int x = t.x0; x <= t.x1; ++x) {
                lo = std::min(lo, v.at(x, y, z));
                hi = std::max(hi, v.at(x, y, z));
            }
        std::vector<double> plane(static_cast<std::size_t>(d.nx) * static_cast<std::size_t>(d.ny), 0.0);
        if (hi - lo >= 1e-12)
            for (int y = t.y0; y <= t.y1; ++y)
                for (int x = t.x0; x <= t.x1; ++x)
                    if (m.at(x, y, z)) plane[static_cast<std::size_t>(y) * d.nx + x] = (v.at(x, y, z) - lo) / (hi - lo);
        std::vector<double> pixels = t.resample(plane, d.nx);
        for (double& p : pixels) p = std::clamp(p, 0.0, 1.0);
        out.images.emplace_back(Shape{1, side, side}, std::move(pixels));
        out.transforms.push_back(t);
    }
    return out;
}

// ------------------------------------------------------------------ Grad-CAM

Heatmap gradcam(const Network& net, const Tensor& image, int target_class, double* raw_max) {
    const NetSpec& s = net.spec();
    if (target_class < 0 || target_class >= s.classes) throw Error(ErrorKind::ShapeMismatch, "target class out of range");
    if (image.size() != static_cast<std::size_t>(s.channels) * s.side * s.side)
        throw Error(ErrorKind::ShapeMismatch, "image " + shape_string(image.shape()) + " does not match the net input");
    const Forward f = net.forward(image.reshaped({1, s.channels, s.side, s.side}));
    Tensor seed(f.logits().shape());
    seed[static_cast<std::size_t>(target_class)] = 1.0;
    const Backward b = net.backward(f, seed);

    const auto layer = static_cast<std::size_t>(s.feature_layer()) + 1;
    const Tensor& a = f.acts[layer];
    const Tensor& da = b.act_grads[layer];
    const int kc = a.dim(1), h = a.dim(2), w = a.dim(3);
    std::vector<double> cam(static_cast<std::size_t>(h) * w, 0.0);
    for (int c = 0; c < kc; ++c) {
        double alpha = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) alpha += da.at(0, c, y, x);
        alpha /= static_cast<double>(h) * w;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) cam[static_cast<std::size_t>(y) * w + x] += alpha * a.at(0, c, y, x);
    }
    for (double& v : cam) v = std::max(v, 0.0);

    // Upsample with the same half-pixel bilinear rule as slice extraction.
    const SliceTransform up{0, 0, 0, w - 1, h - 1, s.side};
    std::vector<double> full = up.resample(cam, w);
    double mx = 0.0;
    for (double v : full) mx = std::max(mx, v);
    if (raw_max) *raw_max = mx;
    return Heatmap::normalized(s.side, s.side, std::move(full));
}

double top_decile_mass_inside(const Heatmap& h, const std::vector<std::uint8_t>& region) {
    const auto values = h.values();
    if (region.size() != values.size()) throw Error(ErrorKind::ShapeMismatch, "region size differs from heatmap");
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    const std::size_t top = (values.size() + 9) / 10;
    double inside = 0.0, total = 0.0;
    for (std::size_t i = 0; i < top; ++i) {
        total += values[order[i]];
        if (region[order[i]]) inside += values[order[i]];
    }
    return total > 0.0 ? inside / total : 0.0;
}

}  // namespace fibro::nnet
