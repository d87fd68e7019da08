#include "layers.hpp"

#include "fibro/error.hpp"

#include <Eigen/Dense>

namespace fibro::nnet {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

ConvGeometry conv_geometry(const Shape& x, const Shape& w, int stride, int pad) {
    if (x.size() != 4 || w.size() != 4) throw Error(ErrorKind::ShapeMismatch, "conv expects 4-axis input and weights");
    if (w[1] != x[1]) throw Error(ErrorKind::ShapeMismatch, "conv input channels " + std::to_string(x[1]) +
                                                                 " vs weights " + shape_string(w));
    if (w[2] != w[3]) throw Error(ErrorKind::ShapeMismatch, "conv kernels must be square");
    if (stride < 1 || pad < 0) throw Error(ErrorKind::InvalidSpec, "conv stride >= 1 and pad >= 0 required");
    ConvGeometry g{x[0], x[1], x[2], x[3], w[0], w[2], stride, pad, 0, 0};
    g.ho = (g.h + 2 * pad - g.k) / stride + 1;
    g.wo = (g.w + 2 * pad - g.k) / stride + 1;
    if (g.h + 2 * pad < g.k || g.w + 2 * pad < g.k) throw Error(ErrorKind::ShapeMismatch, "conv kernel larger than input");
    return g;
}

namespace {

// cols(row = (c, ky, kx), col = (oy, ox)) for one sample.
void im2col(const double* x, const ConvGeometry& g, RowMat& cols) {
    cols.resize(static_cast<Eigen::Index>(g.c) * g.k * g.k, static_cast<Eigen::Index>(g.ho) * g.wo);
    Eigen::Index row = 0;
    for (int c = 0; c < g.c; ++c) {
        const double* plane = x + static_cast<std::size_t>(c) * g.h * g.w;
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx, ++row) {
                double* out = cols.row(row).data();
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    for (int ox = 0; ox < g.wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        *out++ = (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) ? plane[iy * g.w + ix] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const RowMat& cols, const ConvGeometry& g, double* dx) {
    Eigen::Index row = 0;
    for (int c = 0; c < g.c; ++c) {
        double* plane = dx + static_cast<std::size_t>(c) * g.h * g.w;
        for (int ky = 0; ky < g.k; ++ky) {
            for (int kx = 0; kx < g.k; ++kx, ++row) {
                const double* in = cols.row(row).data();
                for (int oy = 0; oy < g.ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    for (int ox = 0; ox < g.wo; ++ox, ++in) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (iy >= 0 && iy < g.h && ix >= 0 && ix < g.w) plane[iy * g.w + ix] += *in;
                    }
                }
            }
        }
    }
}

}  // namespace

void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int stride, int pad, Tensor& dw, Tensor& db,
                     Tensor* dx) {
    const ConvGeometry g = conv_geometry(x.shape(), w.shape(), stride, pad);
    const Eigen::Index ckk = static_cast<Eigen::Index>(g.c) * g.k * g.k, hw = static_cast<Eigen::Index>(g.ho) * g.wo;
    Eigen::Map<const RowMat> wm(w.data(), g.o, ckk);
    Eigen::Map<RowMat> dwm(dw.data(), g.o, ckk);
    Eigen::Map<Eigen::VectorXd> dbv(db.data(), g.o);
    RowMat cols, dcols;
    for (int n = 0; n < g.n; ++n) {
        Eigen::Map<const RowMat> dym(dy.data() + static_cast<std::size_t>(n) * g.o * hw, g.o, hw);
        im2col(x.data() + static_cast<std::size_t>(n) * g.c * g.h * g.w, g, cols);
        dwm.noalias() += dym * cols.transpose();
        dbv += dym.rowwise().sum();
        if (dx) {
            dcols.noalias() = wm.transpose() * dym;
            col2im_add(dcols, g, dx->data() + static_cast<std::size_t>(n) * g.c * g.h * g.w);
        }
    }
}

Tensor maxpool2_forward(const Tensor& x) {
    if (x.shape().size() != 4 || x.dim(2) < 2 || x.dim(3) < 2)
        throw Error(ErrorKind::ShapeMismatch, "maxpool needs 4-axis input at least 2x2, got " + shape_string(x.shape()));
    const int n = x.dim(0), c = x.dim(1), ho = x.dim(2) / 2, wo = x.dim(3) / 2;
    Tensor y({n, c, ho, wo});
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < ho; ++i)
                for (int j = 0; j < wo; ++j)
                    y.at(b, ch, i, j) = std::max(std::max(x.at(b, ch, 2 * i, 2 * j), x.at(b, ch, 2 * i, 2 * j + 1)),
                                                 std::max(x.at(b, ch, 2 * i + 1, 2 * j), x.at(b, ch, 2 * i + 1, 2 * j + 1)));
    return y;
}

void maxpool2_backward(const Tensor& x, const Tensor& dy, Tensor& dx) {
    const int n = dy.dim(0), c = dy.dim(1), ho = dy.dim(2), wo = dy.dim(3);
    for (int b = 0; b < n; ++b)
        for (int ch = 0; ch < c; ++ch)
            for (int i = 0; i < ho; ++i)
                for (int j = 0; j < wo; ++j) {
                    // First maximum in row-major window order receives the gradient.
                    int bi = 2 * i, bj = 2 * j;
                    for (int di = 0; di < 2; ++di)
                        for (int dj = 0; dj < 2; ++dj)
                            if (x.at(b, ch, 2 * i + di, 2 * j + dj) > x.at(b, ch, bi, bj)) {
                                bi = 2 * i + di;
                                bj = 2 * j + dj;
                            }
                    dx.at(b, ch, bi, bj) += dy.at(b, ch, i, j);
                }
}

}  // namespace detail

Tensor conv2d_forward(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
    const detail::ConvGeometry g = detail::conv_geometry(x.shape(), w.shape(), stride, pad);
    if (b.size() != static_cast<std::size_t>(g.o)) throw Error(ErrorKind::ShapeMismatch, "conv bias length");
    const Eigen::Index ckk = static_cast<Eigen::Index>(g.c) * g.k * g.k, hw = static_cast<Eigen::Index>(g.ho) * g.wo;
    Tensor y({g.n, g.o, g.ho, g.wo});
    Eigen::Map<const RowMat> wm(w.data(), g.o, ckk);
    Eigen::Map<const Eigen::VectorXd> bv(b.data(), g.o);
    RowMat cols;
    for (int n = 0; n < g.n; ++n) {
        detail::im2col(x.data() + static_cast<std::size_t>(n) * g.c * g.h * g.w, g, cols);
        Eigen::Map<RowMat> ym(y.data() + static_cast<std::size_t>(n) * g.o * hw, g.o, hw);
        ym.noalias() = wm * cols;
        ym.colwise() += bv;
    }
    return y;
}

}  // namespace fibro::nnet
