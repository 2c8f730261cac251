#include "pfsgan/losses.hpp"

#include <cmath>
#include <sstream>

#include "pfsgan/errors.hpp"

namespace pfsgan {

void LossReport::add(const std::string& name, double value) {
  for (auto& e : entries) {
    if (e.first == name) throw ContractError("LossReport: duplicate term " + name);
  }
  entries.emplace_back(name, value);
}

bool LossReport::has(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.first == name) return true;
  }
  return false;
}

double LossReport::get(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.first == name) return e.second;
  }
  throw ContractError("LossReport: no term named " + name);
}

std::string LossReport::to_line() const {
  std::ostringstream os;
  os << "step=" << step << " stage=" << stage;
  os.precision(8);
  for (const auto& e : entries) os << " " << e.first << "=" << e.second;
  return os.str();
}

void LossReport::check_finite() const {
  for (const auto& e : entries) {
    if (!std::isfinite(e.second)) {
      throw NumericError("non-finite loss term " + e.first + " at step " + std::to_string(step));
    }
  }
}

float mad_loss(const Tensor& a, const Tensor& b, Tensor* grad_a, Tensor* grad_b) {
  require_same_shape(a, b, "mad_loss");
  if (a.size() == 0) throw ContractError("mad_loss: empty input");
  const float inv_n = 1.0f / static_cast<float>(a.size());
  if (grad_a) *grad_a = Tensor(a.shape());
  if (grad_b) *grad_b = Tensor(b.shape());
  double total = 0.0;
  for (int64_t i = 0; i < a.size(); ++i) {
    const float d = a[i] - b[i];
    total += std::abs(d);
    const float s = d > 0.0f ? 1.0f : (d < 0.0f ? -1.0f : 0.0f);
    if (grad_a) (*grad_a)[i] = s * inv_n;
    if (grad_b) (*grad_b)[i] = -s * inv_n;
  }
  return static_cast<float>(total * inv_n);
}

float kl_loss(const Gaussian& q, Gaussian* grad, float free_bits) {
  require_same_shape(q.mean, q.logvar, "kl_loss");
  if (!q.mean.all_finite() || !q.logvar.all_finite()) {
    throw ContractError("kl_loss: non-finite posterior");
  }
  const int n = q.batch();
  if (n == 0) throw ContractError("kl_loss: empty batch");
  const float inv_n = 1.0f / static_cast<float>(n);
  if (grad) *grad = Gaussian{Tensor(q.mean.shape()), Tensor(q.logvar.shape())};
  double total = 0.0;
  for (int64_t i = 0; i < q.mean.size(); ++i) {
    const float mu = q.mean[i];
    const float lv = q.logvar[i];
    const float ev = std::exp(lv);
    const float kl_i = 0.5f * (mu * mu + ev - 1.0f - lv);
    // Free bits: dimensions already below the floor contribute a constant and
    // receive no gradient, which blocks posterior collapse onto the prior.
    if (kl_i < free_bits) {
      total += free_bits;
      continue;
    }
    total += kl_i;
    if (grad) {
      grad->mean[i] = mu * inv_n;
      grad->logvar[i] = 0.5f * (ev - 1.0f) * inv_n;
    }
  }
  return static_cast<float>(total * inv_n);
}

float hinge_d_loss(const std::vector<float>& scores_real, const std::vector<float>& scores_fake,
                   std::vector<float>* grad_real, std::vector<float>* grad_fake) {
  if (scores_real.empty() || scores_fake.empty()) {
    throw ContractError("hinge_d_loss: empty score batch");
  }
  const float inv_r = 1.0f / static_cast<float>(scores_real.size());
  const float inv_f = 1.0f / static_cast<float>(scores_fake.size());
  if (grad_real) grad_real->assign(scores_real.size(), 0.0f);
  if (grad_fake) grad_fake->assign(scores_fake.size(), 0.0f);
  double total = 0.0;
  for (size_t i = 0; i < scores_real.size(); ++i) {
    const float margin = 1.0f - scores_real[i];
    if (margin > 0.0f) {
      total += margin * inv_r;
      if (grad_real) (*grad_real)[i] = -inv_r;
    }
  }
  for (size_t i = 0; i < scores_fake.size(); ++i) {
    const float margin = 1.0f + scores_fake[i];
    if (margin > 0.0f) {
      total += margin * inv_f;
      if (grad_fake) (*grad_fake)[i] = inv_f;
    }
  }
  return static_cast<float>(total);
}

float hinge_g_loss(const std::vector<float>& scores_fake, std::vector<float>* grad) {
  if (scores_fake.empty()) throw ContractError("hinge_g_loss: empty score batch");
  const float inv_n = 1.0f / static_cast<float>(scores_fake.size());
  if (grad) grad->assign(scores_fake.size(), -inv_n);
  double total = 0.0;
  for (float s : scores_fake) total += s;
  return static_cast<float>(-total * inv_n);
}

float perceptual_loss(const ModelBundle& m, const Tensor& x1, const Tensor& x2, Tensor* grad_x1,
                      Tensor* grad_x2) {
  require_same_shape(x1, x2, "perceptual_loss");
  Trace t1, t2;
  const Tensor f1 = m.perceptual_features(x1, grad_x1 ? &t1 : nullptr);
  const Tensor f2 = m.perceptual_features(x2, grad_x2 ? &t2 : nullptr);
  Tensor gf1, gf2;
  const float loss = mad_loss(f1, f2, grad_x1 ? &gf1 : nullptr, grad_x2 ? &gf2 : nullptr);
  // The extractor is frozen so backward only propagates input gradients.
  ModelBundle& mm = const_cast<ModelBundle&>(m);
  if (grad_x1) *grad_x1 = mm.perceptual.backward(t1, gf1);
  if (grad_x2) *grad_x2 = mm.perceptual.backward(t2, gf2);
  return loss;
}

std::vector<float> rowwise_l2(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "rowwise_l2");
  const int n = a.dim(0), d = a.dim(1);
  std::vector<float> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    const float* ra = a.data() + static_cast<int64_t>(i) * d;
    const float* rb = b.data() + static_cast<int64_t>(i) * d;
    for (int k = 0; k < d; ++k) {
      const double diff = ra[k] - rb[k];
      s += diff * diff;
    }
    out[static_cast<size_t>(i)] = static_cast<float>(std::sqrt(s));
  }
  return out;
}

float content_distance(const ModelBundle& m, const PairedDataset& d, int src_j, int tar_i) {
  if (tar_i < 0 || tar_i >= d.n_tar()) {
    throw ContractError("content_distance: unknown target index " + std::to_string(tar_i));
  }
  if (src_j < 0 || src_j >= d.n_src()) {
    throw ContractError("content_distance: unknown source index " + std::to_string(src_j));
  }
  const int paired = d.kappa[static_cast<size_t>(tar_i)];
  const Tensor batch = d.source_batch({src_j, paired});
  const Gaussian q = m.encode_content(batch);
  Tensor a({1, q.dim()});
  Tensor b({1, q.dim()});
  for (int k = 0; k < q.dim(); ++k) {
    a[k] = q.mean[k];
    b[k] = q.mean[q.dim() + k];
  }
  return rowwise_l2(a, b)[0];
}

float relation_train_loss(ModelBundle& m, const std::vector<std::pair<int, int>>& pairs,
                          const PairedDataset& d, bool backprop) {
  if (pairs.empty()) throw ContractError("relation_train_loss: empty pair batch");
  std::vector<int> src_idx, tar_idx, paired_idx;
  for (const auto& [j, i] : pairs) {
    if (i < 0 || i >= d.n_tar() || j < 0 || j >= d.n_src()) {
      throw ContractError("relation_train_loss: index out of range");
    }
    if (j == d.kappa[static_cast<size_t>(i)]) {
      throw ContractError("relation_train_loss: pair with j == kappa(i) is excluded");
    }
    src_idx.push_back(j);
    tar_idx.push_back(i);
    paired_idx.push_back(d.kappa[static_cast<size_t>(i)]);
  }
  // Regression targets from posterior means; the content encoder only provides
  // targets here, so no trace is kept for it.
  const Gaussian qj = m.encode_content(d.source_batch(src_idx));
  const Gaussian qk = m.encode_content(d.source_batch(paired_idx));
  const std::vector<float> targets = rowwise_l2(qj.mean, qk.mean);

  Trace tr;
  const Tensor scores =
      m.relation_score(d.source_batch(src_idx), d.target_batch(tar_idx), backprop ? &tr : nullptr);
  const int n = scores.dim(0);
  double total = 0.0;
  Tensor grad_scores(scores.shape());
  const float inv_n = 1.0f / static_cast<float>(n);
  for (int i = 0; i < n; ++i) {
    const float diff = scores[i] - targets[static_cast<size_t>(i)];
    total += std::abs(diff) * inv_n;
    grad_scores[i] = (diff > 0.0f ? 1.0f : (diff < 0.0f ? -1.0f : 0.0f)) * inv_n;
  }
  if (backprop) m.relation.backward(tr, grad_scores);
  return static_cast<float>(total);
}

float relation_gen_loss(ModelBundle& m, const Tensor& x_src_gen, const Tensor& x_tar_gen,
                        const Tensor& zc_i, const Tensor& zc_j, const std::vector<int>& indices_i,
                        const std::vector<int>& indices_j, Tensor* grad_x_tar) {
  if (x_src_gen.dim(0) == 0) throw ContractError("relation_gen_loss: empty batch");
  if (indices_i.size() != indices_j.size() ||
      static_cast<int>(indices_i.size()) != x_src_gen.dim(0)) {
    throw ContractError("relation_gen_loss: index lists must match batch size");
  }
  for (size_t k = 0; k < indices_i.size(); ++k) {
    if (indices_i[k] == indices_j[k]) {
      throw ContractError("relation_gen_loss: content indices must differ (i != j)");
    }
  }
  const std::vector<float> targets = rowwise_l2(zc_i, zc_j);
  Trace tr;
  const Tensor scores = m.relation_score(x_src_gen, x_tar_gen, grad_x_tar ? &tr : nullptr);
  const int n = scores.dim(0);
  double total = 0.0;
  Tensor grad_scores(scores.shape());
  const float inv_n = 1.0f / static_cast<float>(n);
  for (int i = 0; i < n; ++i) {
    const float diff = scores[i] - targets[static_cast<size_t>(i)];
    total += std::abs(diff) * inv_n;
    grad_scores[i] = (diff > 0.0f ? 1.0f : (diff < 0.0f ? -1.0f : 0.0f)) * inv_n;
  }
  if (grad_x_tar) {
    // R is frozen for this loss; only input gradients flow, and only the
    // target half of the channel stack reaches G_tar.
    const bool was_trainable = m.relation.trainable();
    m.relation.set_trainable(false);
    const Tensor grad_pair = m.relation.backward(tr, grad_scores);
    m.relation.set_trainable(was_trainable);
    split_channels(grad_pair, 3, nullptr, grad_x_tar);
  }
  return static_cast<float>(total);
}

std::vector<float> scores_to_vector(const Tensor& scores) {
  std::vector<float> v(static_cast<size_t>(scores.size()));
  for (int64_t i = 0; i < scores.size(); ++i) v[static_cast<size_t>(i)] = scores[i];
  return v;
}

Tensor vector_to_scores(const std::vector<float>& v) {
  Tensor t({static_cast<int>(v.size()), 1});
  for (size_t i = 0; i < v.size(); ++i) t[static_cast<int64_t>(i)] = v[i];
  return t;
}

}  // namespace pfsgan
