#include "pfsgan/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pfsgan/errors.hpp"

namespace pfsgan {

namespace {

Tensor sample_prior(Rng& rng, int n, int d) {
  Tensor z({n, d});
  for (int64_t i = 0; i < z.size(); ++i) z[i] = static_cast<float>(rng.normal());
  return z;
}

// Row-select from an (N, d) matrix.
Tensor take_rows(const Tensor& m, const std::vector<int>& idx) {
  const int d = m.dim(1);
  Tensor out({static_cast<int>(idx.size()), d});
  for (size_t i = 0; i < idx.size(); ++i) {
    for (int k = 0; k < d; ++k) {
      out[static_cast<int64_t>(i) * d + k] = m[static_cast<int64_t>(idx[i]) * d + k];
    }
  }
  return out;
}

// Content-posterior means for a whole pool, in manageable chunks.
Tensor encode_pool_content_means(const ModelBundle& m, const std::vector<ImageSample>& pool) {
  const int n = static_cast<int>(pool.size());
  Tensor means({n, m.cfg.d_c});
  const int chunk = 64;
  for (int start = 0; start < n; start += chunk) {
    const int count = std::min(chunk, n - start);
    std::vector<int> idx(static_cast<size_t>(count));
    std::iota(idx.begin(), idx.end(), start);
    const Gaussian q = m.encode_content(stack_samples(pool, idx));
    for (int i = 0; i < count; ++i) {
      for (int k = 0; k < m.cfg.d_c; ++k) {
        means[static_cast<int64_t>(start + i) * m.cfg.d_c + k] =
            q.mean[static_cast<int64_t>(i) * m.cfg.d_c + k];
      }
    }
  }
  return means;
}

void add_scaled_grad(Tensor& acc, const Tensor& g, float scale) {
  if (acc.empty()) {
    acc = g;
    acc.scale(scale);
  } else {
    acc.add_scaled(g, scale);
  }
}

// Backward through a frozen discriminator, returning only the image gradient.
Tensor frozen_backward(Net& net, const Trace& tr, const Tensor& grad_out) {
  const bool was = net.trainable();
  net.set_trainable(false);
  Tensor g = net.backward(tr, grad_out);
  net.set_trainable(was);
  return g;
}

void assert_params_finite(ModelBundle& models, int64_t step) {
  for (Net* net : models.nets()) {
    for (Param* p : net->params()) {
      if (!p->value.all_finite()) {
        throw NumericError("non-finite parameter in " + net->name() + " after step " +
                           std::to_string(step));
      }
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (disable_stage2_adversarial && !disable_relation_loss) {
    throw ConfigError("removing the stage-2 adversarial loss implies the relation loss is "
                      "removed as well; set disable_relation_loss too");
  }
  if (batch_size <= 0 || stage2_batch <= 0) throw ConfigError("batch sizes must be positive");
  if (lr <= 0.0f) throw ConfigError("learning rate must be positive");
}

Adam& TrainState::optimizer_for(Net& net) {
  auto it = optimizers.find(net.name());
  if (it == optimizers.end()) {
    throw ContractError("no optimizer registered for network " + net.name());
  }
  return it->second;
}

TrainState make_train_state(const NetConfig& nc, const TrainConfig& tc) {
  tc.validate();
  TrainState state;
  state.models = ModelBundle::create(nc, tc.seed);
  state.rng = Rng(tc.seed ^ 0xD1B54A32D192ED03ull);
  for (Net* net : state.models.nets()) {
    state.optimizers.emplace(net->name(), Adam(tc.lr, tc.beta1, tc.beta2));
  }
  return state;
}

std::vector<int> sample_indices(Rng& rng, int n, int count, bool with_replacement) {
  if (n <= 0 || count <= 0) throw ContractError("sample_indices: empty range");
  std::vector<int> out(static_cast<size_t>(count));
  if (with_replacement) {
    for (int i = 0; i < count; ++i) out[static_cast<size_t>(i)] = rng.uniform_int(n);
  } else {
    if (count > n) throw ContractError("sample_indices: count exceeds population");
    // Partial Fisher-Yates over an index vector.
    std::vector<int> all(static_cast<size_t>(n));
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < count; ++i) {
      const int j = i + rng.uniform_int(n - i);
      std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
      out[static_cast<size_t>(i)] = all[static_cast<size_t>(i)];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stage 1

LossReport train_stage1_step(TrainState& state, const Tensor& source_batch,
                             const TrainConfig& tc) {
  ModelBundle& m = state.models;
  m.check_image_batch(source_batch, "train_stage1_step");
  const LossWeights& w = tc.weights_stage1;
  const int n = source_batch.dim(0);
  LossReport report;
  report.step = state.step;
  report.stage = "stage1";

  // --- discriminator update -----------------------------------------------
  {
    // Detached posterior means plus prior appearance, matching the synthetic
    // construction the generator update optimizes; a mismatch here lets the
    // generator drift into regions the discriminator never scores.
    const Gaussian qc = m.encode_content(source_batch);
    const Tensor za = sample_prior(state.rng, n, m.cfg.d_a);
    const Tensor fake = m.generate(qc.mean, za, Domain::source);
    Trace tr_real, tr_fake;
    const Tensor s_real = m.discriminate(source_batch, Domain::source, &tr_real);
    const Tensor s_fake = m.discriminate(fake, Domain::source, &tr_fake);
    std::vector<float> g_real, g_fake;
    const float loss = hinge_d_loss(scores_to_vector(s_real), scores_to_vector(s_fake), &g_real,
                                    &g_fake);
    m.dis_src.zero_grad();
    m.dis_src.backward(tr_real, vector_to_scores(g_real));
    m.dis_src.backward(tr_fake, vector_to_scores(g_fake));
    state.optimizer_for(m.dis_src).step(m.dis_src.params());
    report.add("L_IA_D", loss);
  }

  // --- generator / encoder update -----------------------------------------
  m.enc_content.zero_grad();
  m.enc_app_src.zero_grad();
  m.gen_src.zero_grad();

  // Reconstruction + KL share one encoder pass.
  Trace tr_ec, tr_ea;
  const Gaussian qc = split_posterior(m.enc_content.forward(source_batch, &tr_ec));
  const Gaussian qa = split_posterior(m.enc_app_src.forward(source_batch, &tr_ea));
  Tensor eps_c, eps_a;
  const Tensor zc = sample_gaussian(qc, state.rng, &eps_c);
  const Tensor za = sample_gaussian(qa, state.rng, &eps_a);
  Trace tr_g;
  const Tensor x_hat = m.generate(zc, za, Domain::source, &tr_g);
  Tensor g_xhat;
  const float l_ir = mad_loss(x_hat, source_batch, &g_xhat);
  g_xhat.scale(w.ir);
  const Tensor g_latent = m.gen_src.backward(tr_g, g_xhat);
  Tensor g_zc, g_za;
  split_cols(g_latent, m.cfg.d_c, &g_zc, &g_za);
  Gaussian grad_qc, grad_qa;
  reparam_backward(qc, eps_c, g_zc, grad_qc);
  reparam_backward(qa, eps_a, g_za, grad_qa);

  Gaussian gkl_c, gkl_a;
  const float l_kl =
      kl_loss(qc, &gkl_c, tc.kl_free_bits) + kl_loss(qa, &gkl_a, tc.kl_free_bits);
  grad_qc.mean.add_scaled(gkl_c.mean, w.kl);
  grad_qc.logvar.add_scaled(gkl_c.logvar, w.kl);
  grad_qa.mean.add_scaled(gkl_a.mean, w.kl);
  grad_qa.logvar.add_scaled(gkl_a.logvar, w.kl);

  // Synthetic branch shared by L^AR, L^IA,G and one side of L^P: detached
  // encoded content with prior appearance.
  const Tensor zc_detached = qc.mean;
  const Tensor za1 = sample_prior(state.rng, n, m.cfg.d_a);
  Trace tr_g1;
  const Tensor xg1 = m.generate(zc_detached, za1, Domain::source, &tr_g1);
  Tensor g_xg1;

  // L^AR: re-encode the synthetic image, regress its appearance mean onto za1.
  {
    Trace tr_ea2;
    const Gaussian qa2 = split_posterior(m.enc_app_src.forward(xg1, &tr_ea2));
    Tensor g_mean;
    const float l_ar = mad_loss(qa2.mean, za1, &g_mean);
    g_mean.scale(w.ar);
    Gaussian g_head{g_mean, Tensor(qa2.logvar.shape())};
    add_scaled_grad(g_xg1, m.enc_app_src.backward(tr_ea2, merge_posterior_grad(g_head, qa2)), 1.0f);
    report.add("L_AR", l_ar);
  }

  // L^IA,G through the frozen discriminator.
  {
    Trace tr_d;
    const Tensor s_fake = m.discriminate(xg1, Domain::source, &tr_d);
    std::vector<float> g_s;
    const float l_g = hinge_g_loss(scores_to_vector(s_fake), &g_s);
    Tensor gs = vector_to_scores(g_s);
    gs.scale(w.adv);
    add_scaled_grad(g_xg1, frozen_backward(m.dis_src, tr_d, gs), 1.0f);
    report.add("L_IA_G", l_g);
  }

  // L^P: same content, a second appearance draw.
  {
    const Tensor za2 = sample_prior(state.rng, n, m.cfg.d_a);
    Trace tr_g2;
    const Tensor xg2 = m.generate(zc_detached, za2, Domain::source, &tr_g2);
    Tensor gp1, gp2;
    const float l_p = perceptual_loss(m, xg1, xg2, &gp1, &gp2);
    add_scaled_grad(g_xg1, gp1, w.p);
    gp2.scale(w.p);
    m.gen_src.backward(tr_g2, gp2);
    report.add("L_P", l_p);
  }

  m.gen_src.backward(tr_g1, g_xg1);
  m.enc_content.backward(tr_ec, merge_posterior_grad(grad_qc, qc));
  m.enc_app_src.backward(tr_ea, merge_posterior_grad(grad_qa, qa));

  state.optimizer_for(m.enc_content).step(m.enc_content.params());
  state.optimizer_for(m.enc_app_src).step(m.enc_app_src.params());
  state.optimizer_for(m.gen_src).step(m.gen_src.params());

  report.add("L_IR", l_ir);
  report.add("L_KL", l_kl);
  report.check_finite();
  assert_params_finite(m, state.step);
  ++state.step;
  report.step = state.step - 1;
  return report;
}

// ---------------------------------------------------------------------------
// Relation pretraining

float train_relation(TrainState& state, const PairedDataset& d, const TrainConfig& tc, int steps,
                     std::vector<LossReport>* log) {
  ModelBundle& m = state.models;
  if (d.n_tar() < 2) {
    throw ConfigError("relation training needs at least 2 target samples to form j != kappa(i) "
                      "pairs spanning distinct content");
  }
  // Content codes are fixed targets here; cache the pool means once.
  const Tensor src_means = encode_pool_content_means(m, d.source_pool);

  const int batch = std::min(tc.stage2_batch, 16);
  auto draw_pair = [&](Rng& rng) {
    const int i = rng.uniform_int(d.n_tar());
    int j = rng.uniform_int(d.n_src());
    while (j == d.kappa[static_cast<size_t>(i)]) j = rng.uniform_int(d.n_src());
    return std::make_pair(j, i);
  };

  for (int s = 0; s < steps; ++s) {
    std::vector<int> src_idx, tar_idx, pair_idx;
    for (int b = 0; b < batch; ++b) {
      const auto [j, i] = draw_pair(state.rng);
      src_idx.push_back(j);
      tar_idx.push_back(i);
      pair_idx.push_back(d.kappa[static_cast<size_t>(i)]);
    }
    const Tensor mj = take_rows(src_means, src_idx);
    const Tensor mk = take_rows(src_means, pair_idx);
    const std::vector<float> targets = rowwise_l2(mj, mk);

    Trace tr;
    const Tensor scores = m.relation_score(d.source_batch(src_idx), d.target_batch(tar_idx), &tr);
    Tensor g_scores(scores.shape());
    double loss = 0.0;
    const float inv_n = 1.0f / static_cast<float>(batch);
    for (int i = 0; i < batch; ++i) {
      const float diff = scores[i] - targets[static_cast<size_t>(i)];
      loss += std::abs(diff) * inv_n;
      g_scores[i] = (diff > 0.0f ? 1.0f : (diff < 0.0f ? -1.0f : 0.0f)) * inv_n;
    }
    m.relation.zero_grad();
    m.relation.backward(tr, g_scores);
    state.optimizer_for(m.relation).step(m.relation.params());
    if (log) {
      LossReport r;
      r.step = state.step;
      r.stage = "relation";
      r.add("L_RT", loss);
      r.check_finite();
      log->push_back(r);
    }
    ++state.step;
  }

  // Held-in probe: a deterministic set of admissible pairs.
  Rng probe_rng(tc.seed ^ 0xA5A5A5A5ull);
  std::vector<std::pair<int, int>> probe;
  for (int k = 0; k < 64; ++k) probe.push_back(draw_pair(probe_rng));
  return relation_train_loss(m, probe, d, false);
}

// ---------------------------------------------------------------------------
// Stage 2

void prepare_stage2(TrainState& state, const TrainConfig& tc) {
  ModelBundle& m = state.models;
  if (tc.warm_start_enc_app_tar) m.warm_start_target_appearance();
  m.enc_content.set_trainable(false);
  m.gen_src.set_trainable(false);
  if (tc.freeze_relation_stage2) m.relation.set_trainable(false);
}

LossReport train_stage2_step(TrainState& state, const PairedDataset& d,
                             const std::vector<ImageSample>& augmented_pool,
                             const TrainConfig& tc) {
  ModelBundle& m = state.models;
  const LossWeights& w = tc.weights_stage2;
  const bool use_adv = !tc.disable_stage2_adversarial;
  const bool use_rg = !tc.disable_relation_loss && !tc.disable_stage2_adversarial;
  if (augmented_pool.empty()) throw ContractError("train_stage2_step: empty augmented pool");

  const int nb = std::min(tc.stage2_batch, d.n_tar());
  LossReport report;
  report.step = state.step;
  report.stage = "stage2";

  // --- D_tar update ---------------------------------------------------------
  if (use_adv) {
    const std::vector<int> tar_idx = sample_indices(state.rng, d.n_tar(), nb, nb > d.n_tar());
    const std::vector<int> src_idx = sample_indices(state.rng, d.n_src(), nb);
    const Tensor x_real = d.target_batch(tar_idx);
    const Gaussian qc = m.encode_content(d.source_batch(src_idx));
    const Gaussian qa = m.encode_appearance(x_real, Domain::target);
    const Tensor x_syn =
        m.generate(sample_gaussian(qc, state.rng), sample_gaussian(qa, state.rng), Domain::target);
    Trace tr_real, tr_fake;
    const Tensor s_real = m.discriminate(x_real, Domain::target, &tr_real);
    const Tensor s_fake = m.discriminate(x_syn, Domain::target, &tr_fake);
    std::vector<float> g_real, g_fake;
    const float loss = hinge_d_loss(scores_to_vector(s_real), scores_to_vector(s_fake), &g_real,
                                    &g_fake);
    m.dis_tar.zero_grad();
    m.dis_tar.backward(tr_real, vector_to_scores(g_real));
    m.dis_tar.backward(tr_fake, vector_to_scores(g_fake));
    state.optimizer_for(m.dis_tar).step(m.dis_tar.params());
    report.add("L_IA_D", loss);
  }

  // --- G_tar / E^A_tar update ----------------------------------------------
  m.gen_tar.zero_grad();
  m.enc_app_tar.zero_grad();

  // L^IR: reconstruct paired targets from (E^C_src(source pair), E^A_tar(target)).
  {
    const std::vector<int> idx = sample_indices(state.rng, d.n_tar(), nb);
    std::vector<int> paired(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) paired[i] = d.kappa[static_cast<size_t>(idx[i])];
    const Tensor x_tar = d.target_batch(idx);
    const Gaussian qc = m.encode_content(d.source_batch(paired));
    const Tensor zc = sample_gaussian(qc, state.rng);
    Trace tr_ea;
    const Gaussian qa = split_posterior(m.enc_app_tar.forward(x_tar, &tr_ea));
    Tensor eps_a;
    const Tensor za = sample_gaussian(qa, state.rng, &eps_a);
    Trace tr_g;
    const Tensor x_hat = m.generate(zc, za, Domain::target, &tr_g);
    Tensor g_xhat;
    const float l_ir = mad_loss(x_hat, x_tar, &g_xhat);
    g_xhat.scale(w.ir);
    Tensor g_za;
    split_cols(m.gen_tar.backward(tr_g, g_xhat), m.cfg.d_c, nullptr, &g_za);
    Gaussian grad_qa;
    reparam_backward(qa, eps_a, g_za, grad_qa);
    m.enc_app_tar.backward(tr_ea, merge_posterior_grad(grad_qa, qa));
    report.add("L_IR", l_ir);
  }

  // L^KL on the augmented pool, plus the L^AR synthetic path which draws its
  // appearance codes from the same augmented batch.
  {
    const int n_aug = static_cast<int>(augmented_pool.size());
    const std::vector<int> aug_idx = sample_indices(state.rng, n_aug, nb, nb > n_aug);
    const Tensor x_aug = stack_samples(augmented_pool, aug_idx);
    Trace tr_ea;
    const Gaussian qa = split_posterior(m.enc_app_tar.forward(x_aug, &tr_ea));
    Gaussian g_kl;
    const float l_kl = kl_loss(qa, &g_kl, tc.kl_free_bits);
    g_kl.mean.scale(w.kl);
    g_kl.logvar.scale(w.kl);
    m.enc_app_tar.backward(tr_ea, merge_posterior_grad(g_kl, qa));
    report.add("L_KL", l_kl);

    // L^AR: detached appearance sample from the augmented posterior, detached
    // paired-source content means.
    const std::vector<int> tidx = sample_indices(state.rng, d.n_tar(), nb);
    std::vector<int> paired(tidx.size());
    for (size_t i = 0; i < tidx.size(); ++i) paired[i] = d.kappa[static_cast<size_t>(tidx[i])];
    const Tensor zc_det = m.encode_content(d.source_batch(paired)).mean;
    const Tensor za_det = sample_gaussian(qa, state.rng);
    Trace tr_g;
    const Tensor xg = m.generate(zc_det, za_det, Domain::target, &tr_g);
    Trace tr_ea2;
    const Gaussian qre = split_posterior(m.enc_app_tar.forward(xg, &tr_ea2));
    Tensor g_mean;
    const float l_ar = mad_loss(qre.mean, za_det, &g_mean);
    g_mean.scale(w.ar);
    Gaussian g_head{g_mean, Tensor(qre.logvar.shape())};
    const Tensor g_img = m.enc_app_tar.backward(tr_ea2, merge_posterior_grad(g_head, qre));
    m.gen_tar.backward(tr_g, g_img);
    report.add("L_AR", l_ar);
  }

  // L^IA,G on a fresh synthetic batch; appearance gradients flow to E^A_tar
  // through the reparameterized draw.
  if (use_adv) {
    const std::vector<int> src_idx = sample_indices(state.rng, d.n_src(), nb);
    const std::vector<int> tar_idx = sample_indices(state.rng, d.n_tar(), nb, nb > d.n_tar());
    const Tensor zc = sample_gaussian(m.encode_content(d.source_batch(src_idx)), state.rng);
    Trace tr_ea;
    const Gaussian qa =
        split_posterior(m.enc_app_tar.forward(d.target_batch(tar_idx), &tr_ea));
    Tensor eps_a;
    const Tensor za = sample_gaussian(qa, state.rng, &eps_a);
    Trace tr_g;
    const Tensor x_syn = m.generate(zc, za, Domain::target, &tr_g);
    Trace tr_d;
    const Tensor s_fake = m.discriminate(x_syn, Domain::target, &tr_d);
    std::vector<float> g_s;
    const float l_g = hinge_g_loss(scores_to_vector(s_fake), &g_s);
    Tensor gs = vector_to_scores(g_s);
    gs.scale(w.adv);
    const Tensor g_img = frozen_backward(m.dis_tar, tr_d, gs);
    Tensor g_za;
    split_cols(m.gen_tar.backward(tr_g, g_img), m.cfg.d_c, nullptr, &g_za);
    Gaussian grad_qa;
    reparam_backward(qa, eps_a, g_za, grad_qa);
    m.enc_app_tar.backward(tr_ea, merge_posterior_grad(grad_qa, qa));
    report.add("L_IA_G", l_g);
  }

  // Optional stage-2 perceptual term (off by default).
  if (tc.stage2_perceptual) {
    const std::vector<int> src_idx = sample_indices(state.rng, d.n_src(), nb);
    const Tensor zc_det = m.encode_content(d.source_batch(src_idx)).mean;
    const Tensor za1 = sample_prior(state.rng, nb, m.cfg.d_a);
    const Tensor za2 = sample_prior(state.rng, nb, m.cfg.d_a);
    Trace tr_g1, tr_g2;
    const Tensor x1 = m.generate(zc_det, za1, Domain::target, &tr_g1);
    const Tensor x2 = m.generate(zc_det, za2, Domain::target, &tr_g2);
    Tensor gp1, gp2;
    const float l_p = perceptual_loss(m, x1, x2, &gp1, &gp2);
    gp1.scale(w.p);
    gp2.scale(w.p);
    m.gen_tar.backward(tr_g1, gp1);
    m.gen_tar.backward(tr_g2, gp2);
    report.add("L_P", l_p);
  }

  // L^RG: generated cross-domain pairs with distinct content codes.
  if (use_rg) {
    const std::vector<int> idx_i = sample_indices(state.rng, d.n_src(), nb, nb > d.n_src());
    std::vector<int> idx_j(idx_i.size());
    for (size_t k = 0; k < idx_i.size(); ++k) {
      int j = state.rng.uniform_int(d.n_src());
      while (j == idx_i[k]) j = state.rng.uniform_int(d.n_src());
      idx_j[k] = j;
    }
    const Tensor zc_i = m.encode_content(d.source_batch(idx_i)).mean;
    const Tensor zc_j = m.encode_content(d.source_batch(idx_j)).mean;
    const Tensor za_src = sample_prior(state.rng, nb, m.cfg.d_a);
    const std::vector<int> tar_idx = sample_indices(state.rng, d.n_tar(), nb, nb > d.n_tar());
    const Tensor za_tar =
        sample_gaussian(m.encode_appearance(d.target_batch(tar_idx), Domain::target), state.rng);
    const Tensor x_src_gen = m.generate(zc_i, za_src, Domain::source);
    Trace tr_g;
    const Tensor x_tar_gen = m.generate(zc_j, za_tar, Domain::target, &tr_g);
    Tensor g_xtar;
    const float l_rg =
        relation_gen_loss(m, x_src_gen, x_tar_gen, zc_i, zc_j, idx_i, idx_j, &g_xtar);
    g_xtar.scale(w.rg);
    m.gen_tar.backward(tr_g, g_xtar);
    report.add("L_RG", l_rg);
  }

  state.optimizer_for(m.gen_tar).step(m.gen_tar.params());
  state.optimizer_for(m.enc_app_tar).step(m.enc_app_tar.params());

  report.check_finite();
  assert_params_finite(m, state.step);
  ++state.step;
  report.step = state.step - 1;
  return report;
}

}  // namespace pfsgan
