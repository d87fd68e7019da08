#pragma once

#include "fibro/nnet.hpp"

namespace fibro::nnet::detail {

struct ConvGeometry {
    int n, c, h, w, o, k, stride, pad, ho, wo;
};

ConvGeometry conv_geometry(const Shape& x, const Shape& w, int stride, int pad);

/// Accumulates dW, db and (when dx is non-null) dx for one conv layer.
void conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& dy, int stride, int pad, Tensor& dw, Tensor& db,
                     Tensor* dx);

Tensor maxpool2_forward(const Tensor& x);
void maxpool2_backward(const Tensor& x, const Tensor& dy, Tensor& dx);

}  // namespace fibro::nnet::detail
