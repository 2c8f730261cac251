#include "pfsgan/models.hpp"

#include <cmath>
#include <cstring>

#include "pfsgan/errors.hpp"

namespace pfsgan {

std::string domain_name(Domain d) { return d == Domain::source ? "source" : "target"; }

// ---------------------------------------------------------------------------
// Posterior helpers

Gaussian split_posterior(const Tensor& head_out) {
  if (head_out.rank() != 2 || head_out.dim(1) % 2 != 0) {
    throw ContractError("split_posterior: expected (N, 2d), got " + shape_str(head_out.shape()));
  }
  const int n = head_out.dim(0), d = head_out.dim(1) / 2;
  Gaussian q{Tensor({n, d}), Tensor({n, d})};
  for (int b = 0; b < n; ++b) {
    const float* row = head_out.data() + static_cast<int64_t>(b) * 2 * d;
    std::memcpy(q.mean.data() + static_cast<int64_t>(b) * d, row, sizeof(float) * d);
    for (int i = 0; i < d; ++i) {
      q.logvar[static_cast<int64_t>(b) * d + i] =
          kLogvarBound * std::tanh(row[d + i] / kLogvarBound);
    }
  }
  return q;
}

Tensor merge_posterior_grad(const Gaussian& grad, const Gaussian& q) {
  const int n = grad.batch(), d = grad.dim();
  Tensor out({n, 2 * d});
  for (int b = 0; b < n; ++b) {
    float* row = out.data() + static_cast<int64_t>(b) * 2 * d;
    std::memcpy(row, grad.mean.data() + static_cast<int64_t>(b) * d, sizeof(float) * d);
    for (int i = 0; i < d; ++i) {
      const float t = q.logvar[static_cast<int64_t>(b) * d + i] / kLogvarBound;
      row[d + i] = grad.logvar[static_cast<int64_t>(b) * d + i] * (1.0f - t * t);
    }
  }
  return out;
}

Tensor sample_gaussian(const Gaussian& q, Rng& rng, Tensor* eps_out) {
  require_same_shape(q.mean, q.logvar, "sample_gaussian");
  Tensor z(q.mean.shape());
  Tensor eps(q.mean.shape());
  for (int64_t i = 0; i < z.size(); ++i) {
    eps[i] = static_cast<float>(rng.normal());
    z[i] = q.mean[i] + std::exp(0.5f * q.logvar[i]) * eps[i];
  }
  if (eps_out) *eps_out = eps;
  return z;
}

void reparam_backward(const Gaussian& q, const Tensor& eps, const Tensor& grad_z,
                      Gaussian& grad_q) {
  if (grad_q.mean.empty()) grad_q = Gaussian{Tensor(q.mean.shape()), Tensor(q.logvar.shape())};
  for (int64_t i = 0; i < grad_z.size(); ++i) {
    grad_q.mean[i] += grad_z[i];
    grad_q.logvar[i] += grad_z[i] * eps[i] * 0.5f * std::exp(0.5f * q.logvar[i]);
  }
}

// ---------------------------------------------------------------------------
// Concat helpers

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0)) {
    throw ContractError("concat_cols: incompatible shapes " + shape_str(a.shape()) + " / " +
                        shape_str(b.shape()));
  }
  const int n = a.dim(0), da = a.dim(1), db = b.dim(1);
  Tensor out({n, da + db});
  for (int i = 0; i < n; ++i) {
    std::memcpy(out.data() + static_cast<int64_t>(i) * (da + db),
                a.data() + static_cast<int64_t>(i) * da, sizeof(float) * da);
    std::memcpy(out.data() + static_cast<int64_t>(i) * (da + db) + da,
                b.data() + static_cast<int64_t>(i) * db, sizeof(float) * db);
  }
  return out;
}

void split_cols(const Tensor& g, int cols_a, Tensor* ga, Tensor* gb) {
  const int n = g.dim(0), total = g.dim(1), db = total - cols_a;
  if (ga) *ga = Tensor({n, cols_a});
  if (gb) *gb = Tensor({n, db});
  for (int i = 0; i < n; ++i) {
    const float* row = g.data() + static_cast<int64_t>(i) * total;
    if (ga) std::memcpy(ga->data() + static_cast<int64_t>(i) * cols_a, row, sizeof(float) * cols_a);
    if (gb) std::memcpy(gb->data() + static_cast<int64_t>(i) * db, row + cols_a, sizeof(float) * db);
  }
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() != 4 || b.rank() != 4 || a.dim(0) != b.dim(0) || a.dim(1) != b.dim(1) ||
      a.dim(2) != b.dim(2)) {
    throw ContractError("concat_channels: incompatible shapes " + shape_str(a.shape()) + " / " +
                        shape_str(b.shape()));
  }
  const int pixels = a.dim(0) * a.dim(1) * a.dim(2);
  const int ca = a.dim(3), cb = b.dim(3);
  Tensor out({a.dim(0), a.dim(1), a.dim(2), ca + cb});
  for (int p = 0; p < pixels; ++p) {
    std::memcpy(out.data() + static_cast<int64_t>(p) * (ca + cb),
                a.data() + static_cast<int64_t>(p) * ca, sizeof(float) * ca);
    std::memcpy(out.data() + static_cast<int64_t>(p) * (ca + cb) + ca,
                b.data() + static_cast<int64_t>(p) * cb, sizeof(float) * cb);
  }
  return out;
}

void split_channels(const Tensor& g, int ch_a, Tensor* ga, Tensor* gb) {
  const int pixels = g.dim(0) * g.dim(1) * g.dim(2);
  const int total = g.dim(3), cb = total - ch_a;
  if (ga) *ga = Tensor({g.dim(0), g.dim(1), g.dim(2), ch_a});
  if (gb) *gb = Tensor({g.dim(0), g.dim(1), g.dim(2), cb});
  for (int p = 0; p < pixels; ++p) {
    const float* px = g.data() + static_cast<int64_t>(p) * total;
    if (ga) std::memcpy(ga->data() + static_cast<int64_t>(p) * ch_a, px, sizeof(float) * ch_a);
    if (gb) std::memcpy(gb->data() + static_cast<int64_t>(p) * cb, px + ch_a, sizeof(float) * cb);
  }
}

// ---------------------------------------------------------------------------
// Architectures. All builders assume image_size % 8 == 0; spatial resolution
// shrinks by 8x through three stride-2 stages, so the head sees (s/8)^2 cells.

namespace {

void validate(const NetConfig& cfg) {
  if (cfg.image_size < 16 || cfg.image_size % 8 != 0) {
    throw ConfigError("image_size must be >= 16 and divisible by 8");
  }
  if (cfg.d_c <= 0 || cfg.d_a <= 0 || cfg.base_width <= 0 || cfg.feat_width <= 0) {
    throw ConfigError("network dimensions must be positive");
  }
}

void add_encoder_trunk(Net& net, const NetConfig& cfg, const std::string& name, int in_ch) {
  const int w = cfg.base_width;
  net.add(std::make_unique<Conv2d>(name + ".c0", in_ch, w, 3, 1, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Conv2d>(name + ".c1", w, 2 * w, 4, 2, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Conv2d>(name + ".c2", 2 * w, 4 * w, 4, 2, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Conv2d>(name + ".c3", 4 * w, 4 * w, 4, 2, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Flatten>());
}

int trunk_out_dim(const NetConfig& cfg) {
  const int s = cfg.image_size / 8;
  return s * s * 4 * cfg.base_width;
}

// Damps the posterior head so early logvar stays near zero.
void scale_last_dense(Net& net, float factor) {
  auto ps = net.params();
  for (size_t i = ps.size() >= 2 ? ps.size() - 2 : 0; i < ps.size(); ++i) {
    ps[i]->value.scale(factor);
  }
}

}  // namespace

Net make_encoder(const NetConfig& cfg, const std::string& name, int code_dim) {
  validate(cfg);
  Net net(name);
  add_encoder_trunk(net, cfg, name, 3);
  net.add(std::make_unique<Dense>(name + ".head", trunk_out_dim(cfg), 2 * code_dim));
  return net;
}

Net make_generator(const NetConfig& cfg, const std::string& name) {
  validate(cfg);
  const int w = cfg.base_width;
  const int s = cfg.image_size / 8;
  Net net(name);
  net.add(std::make_unique<Dense>(name + ".fc", cfg.d_c + cfg.d_a, s * s * 4 * w));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Reshape>(s, s, 4 * w));
  net.add(std::make_unique<Upsample2x>());
  net.add(std::make_unique<Conv2d>(name + ".c0", 4 * w, 4 * w, 3, 1, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Upsample2x>());
  net.add(std::make_unique<Conv2d>(name + ".c1", 4 * w, 2 * w, 3, 1, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Upsample2x>());
  net.add(std::make_unique<Conv2d>(name + ".c2", 2 * w, w, 3, 1, 1));
  net.add(std::make_unique<LeakyRelu>());
  net.add(std::make_unique<Conv2d>(name + ".out", w, 3, 3, 1, 1));
  net.add(std::make_unique<TanhLayer>(1.1f));
  return net;
}

Net make_discriminator(const NetConfig& cfg, const std::string& name) {
  validate(cfg);
  Net net(name);
  add_encoder_trunk(net, cfg, name, 3);
  net.add(std::make_unique<Dense>(name + ".head", trunk_out_dim(cfg), 1));
  return net;
}

Net make_relation_net(const NetConfig& cfg, const std::string& name) {
  validate(cfg);
  Net net(name);
  add_encoder_trunk(net, cfg, name, 6);  // source/target pair stacked channel-wise
  net.add(std::make_unique<Dense>(name + ".head", trunk_out_dim(cfg), 1));
  net.add(std::make_unique<Softplus>());
  return net;
}

Net make_perceptual(const NetConfig& cfg, const std::string& name) {
  validate(cfg);
  const int fw = cfg.feat_width;
  Net net(name);
  net.add(std::make_unique<Conv2d>(name + ".c0", 3, fw, 3, 1, 1));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Conv2d>(name + ".c1", fw, 2 * fw, 4, 2, 1));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Conv2d>(name + ".c2", 2 * fw, 4 * fw, 4, 2, 1));
  net.add(std::make_unique<Relu>());
  net.set_trainable(false);
  return net;
}

Net make_eval_extractor(const NetConfig& cfg, uint64_t seed) {
  validate(cfg);
  const int fw = cfg.feat_width;
  Net net("f_eval");
  net.add(std::make_unique<Conv2d>("f_eval.c0", 3, fw, 3, 1, 1));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Conv2d>("f_eval.c1", fw, 2 * fw, 4, 2, 1));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Conv2d>("f_eval.c2", 2 * fw, 4 * fw, 4, 2, 1));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Conv2d>("f_eval.c3", 4 * fw, 4 * fw, 4, 2, 1));
  net.add(std::make_unique<Relu>());
  net.add(std::make_unique<Flatten>());
  Rng rng(seed);
  net.init(rng);
  net.set_trainable(false);
  return net;
}

// ---------------------------------------------------------------------------
// ModelBundle

ModelBundle ModelBundle::create(const NetConfig& cfg, uint64_t seed) {
  ModelBundle b;
  b.cfg = cfg;
  b.enc_content = make_encoder(cfg, "enc_content", cfg.d_c);
  b.enc_app_src = make_encoder(cfg, "enc_app_src", cfg.d_a);
  b.enc_app_tar = make_encoder(cfg, "enc_app_tar", cfg.d_a);
  b.gen_src = make_generator(cfg, "gen_src");
  b.gen_tar = make_generator(cfg, "gen_tar");
  b.dis_src = make_discriminator(cfg, "dis_src");
  b.dis_tar = make_discriminator(cfg, "dis_tar");
  b.relation = make_relation_net(cfg, "relation");
  b.perceptual = make_perceptual(cfg, "perceptual");

  Rng root(seed);
  uint64_t stream = 1;
  for (Net* net : b.all_nets()) {
    Rng r = root.fork(stream++);
    net->init(r);
  }
  scale_last_dense(b.enc_content, 0.1f);
  scale_last_dense(b.enc_app_src, 0.1f);
  scale_last_dense(b.enc_app_tar, 0.1f);
  return b;
}

std::vector<Net*> ModelBundle::nets() {
  return {&enc_content, &enc_app_src, &enc_app_tar, &gen_src, &gen_tar,
          &dis_src,     &dis_tar,     &relation};
}

std::vector<Net*> ModelBundle::all_nets() {
  auto v = nets();
  v.push_back(&perceptual);
  return v;
}

void ModelBundle::check_image_batch(const Tensor& images, const char* where, int channels) const {
  if (images.rank() != 4 || images.dim(1) != cfg.image_size || images.dim(2) != cfg.image_size ||
      images.dim(3) != channels) {
    throw ContractError(std::string(where) + ": expected (N," + std::to_string(cfg.image_size) +
                        "," + std::to_string(cfg.image_size) + "," + std::to_string(channels) +
                        "), got " + shape_str(images.shape()));
  }
}

Gaussian ModelBundle::encode_content(const Tensor& images, Trace* trace) const {
  check_image_batch(images, "encode_content");
  return split_posterior(enc_content.forward(images, trace));
}

Gaussian ModelBundle::encode_appearance(const Tensor& images, Domain d, Trace* trace) const {
  check_image_batch(images, "encode_appearance");
  const Net& enc = d == Domain::source ? enc_app_src : enc_app_tar;
  return split_posterior(enc.forward(images, trace));
}

Tensor ModelBundle::generate(const Tensor& z_content, const Tensor& z_appearance, Domain d,
                             Trace* trace) const {
  if (z_content.rank() != 2 || z_content.dim(1) != cfg.d_c) {
    throw ContractError("generate: content code must be (N," + std::to_string(cfg.d_c) +
                        "), got " + shape_str(z_content.shape()));
  }
  if (z_appearance.rank() != 2 || z_appearance.dim(1) != cfg.d_a ||
      z_appearance.dim(0) != z_content.dim(0)) {
    throw ContractError("generate: appearance code must be (N," + std::to_string(cfg.d_a) +
                        "), got " + shape_str(z_appearance.shape()));
  }
  const Net& gen = d == Domain::source ? gen_src : gen_tar;
  return gen.forward(concat_cols(z_content, z_appearance), trace);
}

Tensor ModelBundle::discriminate(const Tensor& images, Domain d, Trace* trace) const {
  check_image_batch(images, "discriminate");
  const Net& dis = d == Domain::source ? dis_src : dis_tar;
  return dis.forward(images, trace);
}

Tensor ModelBundle::relation_score(const Tensor& x_src, const Tensor& x_tar, Trace* trace) const {
  check_image_batch(x_src, "relation_score(source)");
  check_image_batch(x_tar, "relation_score(target)");
  return relation.forward(concat_channels(x_src, x_tar), trace);
}

Tensor ModelBundle::perceptual_features(const Tensor& images, Trace* trace) const {
  check_image_batch(images, "perceptual_features");
  return perceptual.forward(images, trace);
}

void ModelBundle::warm_start_target_appearance() {
  auto src = enc_app_src.params();
  auto dst = enc_app_tar.params();
  for (size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value;
}

Tensor as_batch(const Tensor& image) {
  if (image.rank() == 3) {
    return image.reshaped({1, image.dim(0), image.dim(1), image.dim(2)});
  }
  return image;
}

}  // namespace pfsgan
