#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pfsgan/rng.hpp"
#include "pfsgan/tensor.hpp"

namespace pfsgan {

struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

// One differentiable stage. forward is pure; backward receives the cached
// layer input and output from the Trace so a layer instance can serve several
// concurrent forward passes within one optimization step.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor forward(const Tensor& in) const = 0;
  virtual Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                          bool accumulate_param_grads) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual void init(Rng& rng) {}
  virtual std::string kind() const = 0;
};

class Conv2d : public Layer {
 public:
  Conv2d(std::string name, int in_ch, int out_ch, int kernel, int stride, int pad);
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(Rng& rng) override;
  std::string kind() const override { return "conv2d"; }

 private:
  int in_ch_, out_ch_, kernel_, stride_, pad_;
  Param weight_;  // (k*k*in_ch, out_ch)
  Param bias_;    // (out_ch)
};

class Dense : public Layer {
 public:
  Dense(std::string name, int in_dim, int out_dim);
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  void init(Rng& rng) override;
  std::string kind() const override { return "dense"; }

 private:
  int in_dim_, out_dim_;
  Param weight_;  // (in_dim, out_dim)
  Param bias_;    // (out_dim)
};

// Collapses (N, H, W, C) to (N, H*W*C).
class Flatten : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "flatten"; }
};

// Expands (N, D) to (N, h, w, c) with D = h*w*c.
class Reshape : public Layer {
 public:
  Reshape(int h, int w, int c) : h_(h), w_(w), c_(c) {}
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "reshape"; }

 private:
  int h_, w_, c_;
};

// Nearest-neighbour 2x spatial upsampling.
class Upsample2x : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "upsample2x"; }
};

class LeakyRelu : public Layer {
 public:
  explicit LeakyRelu(float slope = 0.2f) : slope_(slope) {}
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "leaky_relu"; }

 private:
  float slope_;
};

class Relu : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "relu"; }
};

// Optional output scale > 1 keeps unit-range targets reachable at finite
// preactivation, so the derivative never vanishes at the target value.
class TanhLayer : public Layer {
 public:
  explicit TanhLayer(float scale = 1.0f) : scale_(scale) {}
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "tanh"; }

 private:
  float scale_;
};

class Softplus : public Layer {
 public:
  Tensor forward(const Tensor& in) const override;
  Tensor backward(const Tensor& in, const Tensor& out, const Tensor& grad_out,
                  bool accumulate_param_grads) override;
  std::string kind() const override { return "softplus"; }
};

// Activation record of one forward pass: acts[0] is the network input,
// acts[i+1] the output of layer i.
struct Trace {
  std::vector<Tensor> acts;
  const Tensor& output() const { return acts.back(); }
};

// Sequential network. When trainable is false backward still propagates input
// gradients but leaves parameter gradients untouched (freeze contract).
class Net {
 public:
  Net() = default;
  explicit Net(std::string name) : name_(std::move(name)) {}
  Net(Net&&) = default;
  Net& operator=(Net&&) = default;

  const std::string& name() const { return name_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool t) { trainable_ = t; }

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  const std::vector<std::unique_ptr<Layer>>& layers() const { return layers_; }
  std::vector<std::unique_ptr<Layer>>& layers() { return layers_; }

  Tensor forward(const Tensor& in, Trace* trace = nullptr) const;
  // Accumulates parameter gradients (when trainable) and returns d loss / d input.
  Tensor backward(const Trace& trace, const Tensor& grad_out);

  std::vector<Param*> params();
  void init(Rng& rng);
  void zero_grad();
  int64_t param_count();

 private:
  std::string name_;
  bool trainable_ = true;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Adam with lazily allocated moment slots; state round-trips through
// checkpoints via the accessors.
class Adam {
 public:
  Adam() = default;
  Adam(float lr, float beta1, float beta2, float eps = 1e-8f)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Param*>& params);

  int64_t t() const { return t_; }
  std::vector<Tensor>& moments1() { return m_; }
  std::vector<Tensor>& moments2() { return v_; }
  void restore(int64_t t, std::vector<Tensor> m, std::vector<Tensor> v);

 private:
  float lr_ = 2e-4f, beta1_ = 0.5f, beta2_ = 0.999f, eps_ = 1e-8f;
  int64_t t_ = 0;
  std::vector<Tensor> m_, v_;
};

}  // namespace pfsgan
