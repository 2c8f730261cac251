#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pfsgan/data.hpp"
#include "pfsgan/losses.hpp"
#include "pfsgan/models.hpp"

namespace pfsgan {

struct LossWeights {
  float ir = 10.0f;
  float kl = 0.1f;
  float p = 1.0f;
  float ar = 1.0f;
  float adv = 1.0f;
  float rg = 1.0f;
};

struct TrainConfig {
  int stage1_steps = 2000;
  int relation_steps = 1200;
  int stage2_steps = 600;
  int batch_size = 32;        // stage 1
  int stage2_batch = 16;      // capped at N_tar
  float lr = 1e-3f;
  float beta1 = 0.5f;
  float beta2 = 0.999f;
  // Per-dimension KL floor (nats); dimensions below it get no KL gradient,
  // which keeps the posteriors from collapsing onto the prior early on.
  float kl_free_bits = 0.05f;
  LossWeights weights_stage1;
  LossWeights weights_stage2;
  uint64_t seed = 1;
  bool disable_relation_loss = false;       // PFS-GAN variant without L^RG
  bool disable_stage2_adversarial = false;  // additionally without stage-2 L^IA
  bool stage2_perceptual = false;
  bool warm_start_enc_app_tar = true;
  bool freeze_relation_stage2 = true;
  AugmentationConfig aug;
  int checkpoint_every = 0;  // 0 = only final

  // Removing the stage-2 adversarial loss presupposes the relation loss is
  // already removed; rejects an inconsistent flag combination.
  void validate() const;
};

struct TrainState {
  ModelBundle models;
  std::map<std::string, Adam> optimizers;
  int64_t step = 0;
  Rng rng{0};

  Adam& optimizer_for(Net& net);
};

TrainState make_train_state(const NetConfig& nc, const TrainConfig& tc);

// One stage-1 iteration: a D_src update followed by a joint
// {E^C_src, E^A_src, G_src} update on the weighted stage-1 objective.
LossReport train_stage1_step(TrainState& state, const Tensor& source_batch,
                             const TrainConfig& tc);

// Relation-network pretraining on cross-domain pairs with j != kappa(i).
// Every other network stays untouched. Returns the mean |R - D_c| on a
// held-in probe set drawn deterministically from the seed.
float train_relation(TrainState& state, const PairedDataset& d, const TrainConfig& tc,
                     int steps, std::vector<LossReport>* log = nullptr);

// One stage-2 iteration: D_tar update (unless ablated) then a joint
// {G_tar, E^A_tar} update. E^C_src, G_src and R are frozen throughout.
LossReport train_stage2_step(TrainState& state, const PairedDataset& d,
                             const std::vector<ImageSample>& augmented_pool,
                             const TrainConfig& tc);

// Marks stage-2 freeze set and optionally warm starts E^A_tar from E^A_src.
void prepare_stage2(TrainState& state, const TrainConfig& tc);

// Samples `count` distinct indices from [0, n) (count <= n).
std::vector<int> sample_indices(Rng& rng, int n, int count, bool with_replacement = false);

}  // namespace pfsgan
