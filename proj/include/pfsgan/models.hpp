#pragma once

#include <cstdint>
#include <string>

#include "pfsgan/layers.hpp"
#include "pfsgan/rng.hpp"
#include "pfsgan/tensor.hpp"

namespace pfsgan {

enum class Domain { source, target };

std::string domain_name(Domain d);

struct NetConfig {
  int image_size = 32;   // must be a multiple of 8, >= 16
  int d_c = 128;         // content code dimension
  int d_a = 8;           // appearance code dimension
  int base_width = 16;   // channel width of the first conv stage
  int feat_width = 8;    // width of the frozen perceptual extractor

  bool operator==(const NetConfig&) const = default;
};

// Diagonal Gaussian posterior over a batch: mean and logvar are (N, d).
struct Gaussian {
  Tensor mean;
  Tensor logvar;
  int batch() const { return mean.dim(0); }
  int dim() const { return mean.dim(1); }
};

// Bound on posterior logvar; the raw head value is squashed through
// kLogvarBound * tanh(raw / kLogvarBound) so the variance cannot run away.
inline constexpr float kLogvarBound = 4.0f;

// Splits an encoder head output (N, 2d) into mean / bounded-logvar halves.
Gaussian split_posterior(const Tensor& head_out);
// Packs (grad_mean, grad_logvar) back into the head-output layout, applying
// the logvar-squash Jacobian; q must be the posterior the grads refer to.
Tensor merge_posterior_grad(const Gaussian& grad, const Gaussian& q);

// Reparameterized sample z = mean + exp(logvar/2) * eps, eps ~ N(0, I).
Tensor sample_gaussian(const Gaussian& q, Rng& rng, Tensor* eps_out = nullptr);
// Accumulates d z / d (mean, logvar) into grad_q given the eps used to sample.
void reparam_backward(const Gaussian& q, const Tensor& eps, const Tensor& grad_z,
                      Gaussian& grad_q);

// Column-wise concat of (N, a) and (N, b) into (N, a+b), plus the grad split.
Tensor concat_cols(const Tensor& a, const Tensor& b);
void split_cols(const Tensor& g, int cols_a, Tensor* ga, Tensor* gb);

// Channel-wise concat of two (N, H, W, C) batches, plus the grad split.
Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int ch_a, Tensor* ga, Tensor* gb);

Net make_encoder(const NetConfig& cfg, const std::string& name, int code_dim);
Net make_generator(const NetConfig& cfg, const std::string& name);
Net make_discriminator(const NetConfig& cfg, const std::string& name);
Net make_relation_net(const NetConfig& cfg, const std::string& name);
Net make_perceptual(const NetConfig& cfg, const std::string& name);
// Deeper frozen extractor used for FID/KID features.
Net make_eval_extractor(const NetConfig& cfg, uint64_t seed);

// All learnable components plus the frozen perceptual extractor.
struct ModelBundle {
  NetConfig cfg;
  Net enc_content;   // E^C_src
  Net enc_app_src;   // E^A_src
  Net enc_app_tar;   // E^A_tar
  Net gen_src;       // G_src
  Net gen_tar;       // G_tar
  Net dis_src;       // D_src
  Net dis_tar;       // D_tar
  Net relation;      // R
  Net perceptual;    // F, always frozen

  static ModelBundle create(const NetConfig& cfg, uint64_t seed);

  std::vector<Net*> nets();                // everything except perceptual
  std::vector<Net*> all_nets();            // including perceptual

  Gaussian encode_content(const Tensor& images, Trace* trace = nullptr) const;
  Gaussian encode_appearance(const Tensor& images, Domain d, Trace* trace = nullptr) const;
  Tensor generate(const Tensor& z_content, const Tensor& z_appearance, Domain d,
                  Trace* trace = nullptr) const;
  Tensor discriminate(const Tensor& images, Domain d, Trace* trace = nullptr) const;
  // Ordered pair: source image first, target image second.
  Tensor relation_score(const Tensor& x_src, const Tensor& x_tar,
                        Trace* trace = nullptr) const;
  Tensor perceptual_features(const Tensor& images, Trace* trace = nullptr) const;

  // Copies E^A_src parameters into E^A_tar (warm start before stage 2).
  void warm_start_target_appearance();

  void check_image_batch(const Tensor& images, const char* where, int channels = 3) const;
};

// Promotes a single (H, W, C) sample to a (1, H, W, C) batch.
Tensor as_batch(const Tensor& image);

}  // namespace pfsgan
