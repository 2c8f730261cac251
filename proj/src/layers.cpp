#include "pfsgan/layers.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pfsgan/errors.hpp"

namespace pfsgan {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapCM = Eigen::Map<const MatRM>;

namespace {

int conv_out_dim(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

// Unrolls conv patches into a (N*OH*OW, k*k*Cin) matrix; column order (ky, kx, cin)
// matches the weight layout.
Tensor im2col(const Tensor& in, int kernel, int stride, int pad) {
  const int n = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
  const int oh = conv_out_dim(h, kernel, stride, pad);
  const int ow = conv_out_dim(w, kernel, stride, pad);
  Tensor col({n * oh * ow, kernel * kernel * c});
  float* dst = col.data();
  const float* src = in.data();
  for (int b = 0; b < n; ++b) {
    const float* img = src + static_cast<int64_t>(b) * h * w * c;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            dst += kernel * c;
            continue;
          }
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) {
              dst += c;
              continue;
            }
            const float* px = img + (static_cast<int64_t>(iy) * w + ix) * c;
            for (int ch = 0; ch < c; ++ch) *dst++ = px[ch];
          }
        }
      }
    }
  }
  return col;
}

void col2im_add(const Tensor& col, Tensor& grad_in, int kernel, int stride, int pad) {
  const int n = grad_in.dim(0), h = grad_in.dim(1), w = grad_in.dim(2), c = grad_in.dim(3);
  const int oh = conv_out_dim(h, kernel, stride, pad);
  const int ow = conv_out_dim(w, kernel, stride, pad);
  const float* src = col.data();
  float* dst = grad_in.data();
  for (int b = 0; b < n; ++b) {
    float* img = dst + static_cast<int64_t>(b) * h * w * c;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int ky = 0; ky < kernel; ++ky) {
          const int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            src += kernel * c;
            continue;
          }
          for (int kx = 0; kx < kernel; ++kx) {
            const int ix = ox * stride - pad + kx;
            if (ix < 0 || ix >= w) {
              src += c;
              continue;
            }
            float* px = img + (static_cast<int64_t>(iy) * w + ix) * c;
            for (int ch = 0; ch < c; ++ch) px[ch] += *src++;
          }
        }
      }
    }
  }
}

void he_normal_init(Param& p, int fan_in, Rng& rng) {
  const float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
  for (int64_t i = 0; i < p.value.size(); ++i) {
    p.value[i] = stddev * static_cast<float>(rng.normal());
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad)
    : in_ch_(in_ch), out_ch_(out_ch), kernel_(kernel), stride_(stride), pad_(pad) {
  weight_.name = name + ".w";
  weight_.value = Tensor({kernel * kernel * in_ch, out_ch});
  weight_.grad = Tensor({kernel * kernel * in_ch, out_ch});
  bias_.name = name + ".b";
  bias_.value = Tensor({out_ch});
  bias_.grad = Tensor({out_ch});
}

void Conv2d::init(Rng& rng) { he_normal_init(weight_, kernel_ * kernel_ * in_ch_, rng); }

Tensor Conv2d::forward(const Tensor& in) const {
  if (in.rank() != 4 || in.dim(3) != in_ch_) {
    throw ContractError("conv2d: expected (N,H,W," + std::to_string(in_ch_) + "), got " +
                        shape_str(in.shape()));
  }
  const int n = in.dim(0);
  const int oh = conv_out_dim(in.dim(1), kernel_, stride_, pad_);
  const int ow = conv_out_dim(in.dim(2), kernel_, stride_, pad_);
  const Tensor col = im2col(in, kernel_, stride_, pad_);
  Tensor out({n, oh, ow, out_ch_});
  MapCM colm(col.data(), col.dim(0), col.dim(1));
  MapCM wm(weight_.value.data(), weight_.value.dim(0), out_ch_);
  MapM outm(out.data(), col.dim(0), out_ch_);
  outm.noalias() = colm * wm;
  MapCM bm(bias_.value.data(), 1, out_ch_);
  outm.rowwise() += bm.row(0);
  return out;
}

Tensor Conv2d::backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                        bool accumulate_param_grads) {
  const Tensor col = im2col(in, kernel_, stride_, pad_);
  const int rows = col.dim(0);
  MapCM gm(grad_out.data(), rows, out_ch_);
  if (accumulate_param_grads) {
    MapCM colm(col.data(), rows, col.dim(1));
    MapM gwm(weight_.grad.data(), weight_.grad.dim(0), out_ch_);
    gwm.noalias() += colm.transpose() * gm;
    MapM gbm(bias_.grad.data(), 1, out_ch_);
    gbm.row(0) += gm.colwise().sum();
  }
  Tensor gcol({rows, col.dim(1)});
  MapM gcolm(gcol.data(), rows, col.dim(1));
  MapCM wm(weight_.value.data(), weight_.value.dim(0), out_ch_);
  gcolm.noalias() = gm * wm.transpose();
  Tensor grad_in(in.shape());
  col2im_add(gcol, grad_in, kernel_, stride_, pad_);
  return grad_in;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, int in_dim, int out_dim) : in_dim_(in_dim), out_dim_(out_dim) {
  weight_.name = name + ".w";
  weight_.value = Tensor({in_dim, out_dim});
  weight_.grad = Tensor({in_dim, out_dim});
  bias_.name = name + ".b";
  bias_.value = Tensor({out_dim});
  bias_.grad = Tensor({out_dim});
}

void Dense::init(Rng& rng) { he_normal_init(weight_, in_dim_, rng); }

Tensor Dense::forward(const Tensor& in) const {
  if (in.rank() != 2 || in.dim(1) != in_dim_) {
    throw ContractError("dense: expected (N," + std::to_string(in_dim_) + "), got " +
                        shape_str(in.shape()));
  }
  const int n = in.dim(0);
  Tensor out({n, out_dim_});
  MapCM inm(in.data(), n, in_dim_);
  MapCM wm(weight_.value.data(), in_dim_, out_dim_);
  MapM outm(out.data(), n, out_dim_);
  outm.noalias() = inm * wm;
  MapCM bm(bias_.value.data(), 1, out_dim_);
  outm.rowwise() += bm.row(0);
  return out;
}

Tensor Dense::backward(const Tensor& in, const Tensor& /*out*/, const Tensor& grad_out,
                       bool accumulate_param_grads) {
  const int n = in.dim(0);
  MapCM gm(grad_out.data(), n, out_dim_);
  MapCM inm(in.data(), n, in_dim_);
  if (accumulate_param_grads) {
    MapM gwm(weight_.grad.data(), in_dim_, out_dim_);
    gwm.noalias() += inm.transpose() * gm;
    MapM gbm(bias_.grad.data(), 1, out_dim_);
    gbm.row(0) += gm.colwise().sum();
  }
  Tensor grad_in({n, in_dim_});
  MapM gim(grad_in.data(), n, in_dim_);
  MapCM wm(weight_.value.data(), in_dim_, out_dim_);
  gim.noalias() = gm * wm.transpose();
  return grad_in;
}

// ---------------------------------------------------------------------------
// Shape adapters

Tensor Flatten::forward(const Tensor& in) const {
  if (in.rank() != 4) throw ContractError("flatten: expected rank-4 input");
  return in.reshaped({in.dim(0), in.dim(1) * in.dim(2) * in.dim(3)});
}

Tensor Flatten::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, bool) {
  return grad_out.reshaped(in.shape());
}

Tensor Reshape::forward(const Tensor& in) const {
  if (in.rank() != 2 || in.dim(1) != h_ * w_ * c_) {
    throw ContractError("reshape: expected (N," + std::to_string(h_ * w_ * c_) + "), got " +
                        shape_str(in.shape()));
  }
  return in.reshaped({in.dim(0), h_, w_, c_});
}

Tensor Reshape::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, bool) {
  return grad_out.reshaped(in.shape());
}

Tensor Upsample2x::forward(const Tensor& in) const {
  const int n = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
  Tensor out({n, 2 * h, 2 * w, c});
  const float* src = in.data();
  float* dst = out.data();
  for (int b = 0; b < n; ++b) {
    for (int y = 0; y < 2 * h; ++y) {
      const float* row = src + ((static_cast<int64_t>(b) * h + y / 2) * w) * c;
      for (int x = 0; x < 2 * w; ++x) {
        const float* px = row + static_cast<int64_t>(x / 2) * c;
        for (int ch = 0; ch < c; ++ch) *dst++ = px[ch];
      }
    }
  }
  return out;
}

Tensor Upsample2x::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, bool) {
  const int n = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
  Tensor grad_in(in.shape());
  const float* src = grad_out.data();
  float* dst = grad_in.data();
  for (int b = 0; b < n; ++b) {
    for (int y = 0; y < 2 * h; ++y) {
      float* row = dst + ((static_cast<int64_t>(b) * h + y / 2) * w) * c;
      for (int x = 0; x < 2 * w; ++x) {
        float* px = row + static_cast<int64_t>(x / 2) * c;
        for (int ch = 0; ch < c; ++ch) px[ch] += *src++;
      }
    }
  }
  return grad_in;
}

// ---------------------------------------------------------------------------
// Activations

Tensor LeakyRelu::forward(const Tensor& in) const {
  Tensor out(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : slope_ * in[i];
  return out;
}

Tensor LeakyRelu::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, bool) {
  Tensor g(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) g[i] = grad_out[i] * (in[i] > 0.0f ? 1.0f : slope_);
  return g;
}

Tensor Relu::forward(const Tensor& in) const {
  Tensor out(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0f ? in[i] : 0.0f;
  return out;
}

Tensor Relu::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, bool) {
  Tensor g(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) g[i] = in[i] > 0.0f ? grad_out[i] : 0.0f;
  return g;
}

Tensor TanhLayer::forward(const Tensor& in) const {
  Tensor out(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) out[i] = scale_ * std::tanh(in[i]);
  return out;
}

Tensor TanhLayer::backward(const Tensor&, const Tensor& out, const Tensor& grad_out, bool) {
  Tensor g(out.shape());
  for (int64_t i = 0; i < out.size(); ++i) {
    const float t = out[i] / scale_;
    g[i] = grad_out[i] * scale_ * (1.0f - t * t);
  }
  return g;
}

Tensor Softplus::forward(const Tensor& in) const {
  Tensor out(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) {
    const float x = in[i];
    out[i] = x > 20.0f ? x : std::log1p(std::exp(x));
  }
  return out;
}

Tensor Softplus::backward(const Tensor& in, const Tensor&, const Tensor& grad_out, bool) {
  Tensor g(in.shape());
  for (int64_t i = 0; i < in.size(); ++i) {
    const float s = 1.0f / (1.0f + std::exp(-in[i]));
    g[i] = grad_out[i] * s;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Net

Tensor Net::forward(const Tensor& in, Trace* trace) const {
  Tensor x = in;
  if (trace) {
    trace->acts.clear();
    trace->acts.reserve(layers_.size() + 1);
    trace->acts.push_back(x);
  }
  for (const auto& layer : layers_) {
    x = layer->forward(x);
    if (trace) trace->acts.push_back(x);
  }
  return x;
}

Tensor Net::backward(const Trace& trace, const Tensor& grad_out) {
  if (trace.acts.size() != layers_.size() + 1) {
    throw ContractError("Net::backward: trace does not match network " + name_);
  }
  Tensor g = grad_out;
  for (size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(trace.acts[i], trace.acts[i + 1], g, trainable_);
  }
  return g;
}

std::vector<Param*> Net::params() {
  std::vector<Param*> out;
  for (auto& layer : layers_) {
    for (Param* p : layer->params()) out.push_back(p);
  }
  return out;
}

void Net::init(Rng& rng) {
  for (auto& layer : layers_) layer->init(rng);
}

void Net::zero_grad() {
  for (Param* p : params()) p->grad.fill(0.0f);
}

int64_t Net::param_count() {
  int64_t n = 0;
  for (Param* p : params()) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Adam

void Adam::step(const std::vector<Param*>& params) {
  if (m_.empty()) {
    for (Param* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) {
    throw ContractError("Adam::step: parameter list size changed");
  }
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  for (size_t k = 0; k < params.size(); ++k) {
    Param* p = params[k];
    float* m = m_[k].data();
    float* v = v_[k].data();
    const float* g = p->grad.data();
    float* w = p->value.data();
    for (int64_t i = 0; i < p->value.size(); ++i) {
      m[i] = beta1_ * m[i] + (1.0f - beta1_) * g[i];
      v[i] = beta2_ * v[i] + (1.0f - beta2_) * g[i] * g[i];
      const float mh = m[i] / bc1;
      const float vh = v[i] / bc2;
      w[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
    }
  }
}

void Adam::restore(int64_t t, std::vector<Tensor> m, std::vector<Tensor> v) {
  t_ = t;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace pfsgan
